use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spatial layout of a layer's activations: `height x width` entries with
/// `channels` values each, stored entry-major (HWC).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    /// A flat vector of `n` single-channel entries.
    pub fn flat(n: usize) -> Self {
        Self::new(1, n, 1)
    }

    pub fn entries(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.entries() * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Affine map stored as sparse rows: `out[i] = bias[i] + sum_j w_ij in[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffine<T> {
    in_dim: usize,
    rows: Vec<Vec<(usize, T)>>,
    bias: Vec<T>,
}

impl<T: Scalar> SparseAffine<T> {
    pub fn new(in_dim: usize, rows: Vec<Vec<(usize, T)>>, bias: Vec<T>) -> Self {
        debug_assert_eq!(rows.len(), bias.len());
        debug_assert!(rows.iter().flatten().all(|(j, _)| *j < in_dim));
        Self { in_dim, rows, bias }
    }

    pub fn from_dense(weight: &[Vec<T>], bias: &[T]) -> Self {
        let in_dim = weight.first().map_or(0, Vec::len);
        let rows = weight
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(j, w)| (j, w.clone()))
                    .collect()
            })
            .collect();
        Self::new(in_dim, rows, bias.to_vec())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                row.iter()
                    .fold(b.clone(), |acc, (j, w)| acc + w.clone() * x[*j].clone())
            })
            .collect()
    }

    /// `diff * self`: the composed map for an extra affine layer applied after this one.
    pub fn compose_after(&self, weight: &[Vec<T>], bias: &[T]) -> Self {
        let rows = weight
            .iter()
            .map(|coeffs| {
                let mut acc = vec![T::zero(); self.in_dim];
                for (c, row) in coeffs.iter().zip(&self.rows) {
                    if c.is_zero() {
                        continue;
                    }
                    for (j, w) in row {
                        acc[*j] += c.clone() * w.clone();
                    }
                }
                acc.into_iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .collect()
            })
            .collect();
        let bias = weight
            .iter()
            .zip(bias)
            .map(|(coeffs, b)| {
                coeffs
                    .iter()
                    .zip(&self.bias)
                    .fold(b.clone(), |acc, (c, b0)| acc + c.clone() * b0.clone())
            })
            .collect();
        Self::new(self.in_dim, rows, bias)
    }
}

/// 2-D convolution over an HWC tensor with zero padding.
///
/// The kernel is laid out `[out_channels][in_channels][kernel_h][kernel_w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl<T: Scalar> Conv2d<T> {
    pub fn weight(&self, oc: usize, ic: usize, kh: usize, kw: usize) -> &T {
        &self.kernel[((oc * self.in_channels + ic) * self.kernel_h + kh) * self.kernel_w + kw]
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.channels != self.in_channels {
            return Err(Error::ShapeMismatch {
                expected: self.in_channels,
                found: input.channels,
            });
        }
        let (sh, sw) = self.stride;
        if sh == 0 || sw == 0 || self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(Error::InvalidArgument(
                "conv stride and kernel size must be positive".into(),
            ));
        }
        let ph = input.height + 2 * self.padding.0;
        let pw = input.width + 2 * self.padding.1;
        if ph < self.kernel_h || pw < self.kernel_w {
            return Err(Error::InvalidArgument(format!(
                "kernel {}x{} larger than padded input {ph}x{pw}",
                self.kernel_h, self.kernel_w
            )));
        }
        Ok(Shape::new(
            (ph - self.kernel_h) / sh + 1,
            (pw - self.kernel_w) / sw + 1,
            self.out_channels,
        ))
    }

    /// Input coordinate hit by kernel tap `(kh, kw)` at output `(oh, ow)`, if inside.
    fn source(
        &self,
        input: Shape,
        oh: usize,
        ow: usize,
        kh: usize,
        kw: usize,
    ) -> Option<(usize, usize)> {
        let ih = (oh * self.stride.0 + kh).checked_sub(self.padding.0)?;
        let iw = (ow * self.stride.1 + kw).checked_sub(self.padding.1)?;
        (ih < input.height && iw < input.width).then_some((ih, iw))
    }

    /// Sliding-window evaluation.
    pub fn apply_direct(&self, input: Shape, x: &[T]) -> Result<Vec<T>> {
        let out = self.output_shape(input)?;
        let mut y = Vec::with_capacity(out.len());
        for oh in 0..out.height {
            for ow in 0..out.width {
                for oc in 0..self.out_channels {
                    let mut acc = self.bias[oc].clone();
                    for ic in 0..self.in_channels {
                        for kh in 0..self.kernel_h {
                            for kw in 0..self.kernel_w {
                                if let Some((ih, iw)) = self.source(input, oh, ow, kh, kw) {
                                    let v = &x[(ih * input.width + iw) * input.channels + ic];
                                    acc += self.weight(oc, ic, kh, kw).clone() * v.clone();
                                }
                            }
                        }
                    }
                    y.push(acc);
                }
            }
        }
        Ok(y)
    }

    /// Materialises the convolution as a sparse affine map.
    pub fn lower(&self, input: Shape) -> Result<SparseAffine<T>> {
        let out = self.output_shape(input)?;
        let mut rows = Vec::with_capacity(out.len());
        let mut bias = Vec::with_capacity(out.len());
        for oh in 0..out.height {
            for ow in 0..out.width {
                for oc in 0..self.out_channels {
                    let mut row = Vec::new();
                    for ic in 0..self.in_channels {
                        for kh in 0..self.kernel_h {
                            for kw in 0..self.kernel_w {
                                if let Some((ih, iw)) = self.source(input, oh, ow, kh, kw) {
                                    let w = self.weight(oc, ic, kh, kw);
                                    if !w.is_zero() {
                                        row.push((
                                            (ih * input.width + iw) * input.channels + ic,
                                            w.clone(),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                    rows.push(row);
                    bias.push(self.bias[oc].clone());
                }
            }
        }
        Ok(SparseAffine::new(input.len(), rows, bias))
    }

    fn map<U: Scalar>(&self, f: &impl Fn(&T) -> U) -> Conv2d<U> {
        Conv2d {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            kernel_h: self.kernel_h,
            kernel_w: self.kernel_w,
            kernel: self.kernel.iter().map(f).collect(),
            bias: self.bias.iter().map(f).collect(),
            stride: self.stride,
            padding: self.padding,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense { weight: Vec<Vec<T>>, bias: Vec<T> },
    Conv2d(Conv2d<T>),
    Relu,
}

impl<T: Scalar> Layer<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Relu => "relu",
        }
    }

    pub fn map<U: Scalar>(&self, f: &impl Fn(&T) -> U) -> Layer<U> {
        match self {
            Layer::Dense { weight, bias } => Layer::Dense {
                weight: weight.iter().map(|r| r.iter().map(f).collect()).collect(),
                bias: bias.iter().map(f).collect(),
            },
            Layer::Conv2d(c) => Layer::Conv2d(c.map(f)),
            Layer::Relu => Layer::Relu,
        }
    }
}

/// A layer after lowering: everything is either affine or an elementwise ReLU.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T> {
    Affine(SparseAffine<T>),
    Relu { width: usize },
}

impl<T: Scalar> Stage<T> {
    pub fn out_dim(&self) -> usize {
        match self {
            Stage::Affine(a) => a.out_dim(),
            Stage::Relu { width } => *width,
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            Stage::Affine(a) => a.apply(x),
            Stage::Relu { .. } => x
                .iter()
                .map(|v| {
                    if v.is_negative() {
                        T::zero()
                    } else {
                        v.clone()
                    }
                })
                .collect(),
        }
    }
}
