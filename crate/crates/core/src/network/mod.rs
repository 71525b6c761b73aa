//! Feed-forward ReLU networks: dense and convolutional affine layers
//! interleaved with ReLUs, lowered once to a sequence of affine maps.

mod format;
mod layer;

pub use format::{load_model, save_model, FORMAT_VERSION};
pub use layer::{Conv2d, Layer, Shape, SparseAffine, Stage};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    input_shape: Shape,
    layers: Vec<Layer<T>>,
    stages: Vec<Stage<T>>,
    shapes: Vec<Shape>,
}

fn chain_error(index: usize, field: &str, message: String) -> Error {
    Error::ShapeChain {
        path: format!("layers[{index}].{field}"),
        message,
    }
}

impl<T: Scalar> Network<T> {
    /// Validates the shape chain and lowers every layer.
    pub fn new(input_shape: Shape, layers: Vec<Layer<T>>) -> Result<Self> {
        if input_shape.is_empty() {
            return Err(Error::ShapeChain {
                path: "input_shape".into(),
                message: "input shape has no entries".into(),
            });
        }
        if layers.is_empty() {
            return Err(Error::Schema {
                path: "layers".into(),
                message: "network has no layers".into(),
            });
        }
        let mut shape = input_shape;
        let mut stages = Vec::with_capacity(layers.len());
        let mut shapes = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate() {
            let (stage, next) = match layer {
                Layer::Dense { weight, bias } => {
                    if weight.is_empty() {
                        return Err(Error::Schema {
                            path: format!("layers[{i}].weight"),
                            message: "dense layer has no rows".into(),
                        });
                    }
                    if let Some(r) = weight.iter().position(|row| row.len() != shape.len()) {
                        return Err(chain_error(
                            i,
                            &format!("weight[{r}]"),
                            format!(
                                "row has {} columns, previous layer produces {}",
                                weight[r].len(),
                                shape.len()
                            ),
                        ));
                    }
                    if bias.len() != weight.len() {
                        return Err(Error::Schema {
                            path: format!("layers[{i}].bias"),
                            message: format!(
                                "expected {} values, found {}",
                                weight.len(),
                                bias.len()
                            ),
                        });
                    }
                    (
                        Stage::Affine(SparseAffine::from_dense(weight, bias)),
                        Shape::flat(weight.len()),
                    )
                }
                Layer::Conv2d(conv) => {
                    let expected =
                        conv.out_channels * conv.in_channels * conv.kernel_h * conv.kernel_w;
                    if conv.kernel.len() != expected {
                        return Err(Error::Schema {
                            path: format!("layers[{i}].kernel"),
                            message: format!(
                                "expected {expected} values, found {}",
                                conv.kernel.len()
                            ),
                        });
                    }
                    if conv.bias.len() != conv.out_channels {
                        return Err(Error::Schema {
                            path: format!("layers[{i}].bias"),
                            message: format!(
                                "expected {} values, found {}",
                                conv.out_channels,
                                conv.bias.len()
                            ),
                        });
                    }
                    let out = conv
                        .output_shape(shape)
                        .map_err(|e| chain_error(i, "kernel", e.to_string()))?;
                    (Stage::Affine(conv.lower(shape)?), out)
                }
                Layer::Relu => (Stage::Relu { width: shape.len() }, shape),
            };
            stages.push(stage);
            shapes.push(next);
            shape = next;
        }
        if shape.len() < 2 {
            return Err(chain_error(
                layers.len() - 1,
                "bias",
                format!(
                    "network must produce at least 2 scores, produces {}",
                    shape.len()
                ),
            ));
        }
        Ok(Self {
            input_shape,
            layers,
            stages,
            shapes,
        })
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape.len()
    }

    pub fn output_count(&self) -> usize {
        self.shapes.last().map_or(0, Shape::len)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    /// Output shape of each layer.
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self
            .stages
            .iter()
            .fold(x.to_vec(), |acc, stage| stage.apply(&acc)))
    }

    /// Activations after every layer, in order.
    pub fn forward_all(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_input(x)?;
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let next = stage.apply(acts.last().map_or(x, Vec::as_slice));
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn classify(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Network<U> {
        let layers = self.layers.iter().map(|l| l.map(&f)).collect();
        Network::new(self.input_shape, layers).expect("mapping preserves shapes")
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// An input point paired with its expected label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInput<T> {
    pub point: Vec<T>,
    pub label: usize,
}

impl<T: Scalar> LabeledInput<T> {
    pub fn new(point: Vec<T>, label: usize, classes: usize) -> Result<Self> {
        if label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        Ok(Self { point, label })
    }
}
