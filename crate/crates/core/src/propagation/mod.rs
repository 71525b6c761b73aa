//! Backward linear bound propagation (DeepPoly-style).
//!
//! Every affine neuron gets a lower and an upper linear bound in terms of the
//! network input, obtained by substituting layer relaxations backwards. Only
//! the resulting input-layer expressions are concretised, with one of three
//! strategies for the perturbation set.

mod concretize;

pub use concretize::{
    argmax_in_ball0, argmin_in_ball0, concretize, concretize_box, concretize_topt,
    concretize_ttimestop, contributions, AffineExpr, Contribution, Contributions, Interval,
    Strategy,
};

use crate::error::{Error, Result};
use crate::geometry::{Ball0Spec, BoxDomain};
use crate::network::{Network, Stage};
use crate::scalar::Scalar;

/// Bounds for every neuron of one layer.
pub type NeuronBounds<T> = Vec<Interval<T>>;

/// Linear bounds `lower_slope * x <= relu(x) <= upper_slope * x + upper_offset`
/// valid on the pre-activation interval they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluRelaxation<T> {
    pub lower_slope: T,
    pub upper_slope: T,
    pub upper_offset: T,
}

impl<T: Scalar> ReluRelaxation<T> {
    pub fn lower(&self) -> AffineExpr<T> {
        AffineExpr::new(vec![self.lower_slope.clone()], T::zero())
    }

    pub fn upper(&self) -> AffineExpr<T> {
        AffineExpr::new(vec![self.upper_slope.clone()], self.upper_offset.clone())
    }

    pub fn is_exact(&self) -> bool {
        self.lower_slope == self.upper_slope && self.upper_offset.is_zero()
    }
}

/// Relaxation of `relu` on `[l, u]`.
///
/// Stable neurons are substituted exactly. For a crossing neuron the upper
/// bound is the chord through `(l, 0)` and `(u, u)`, and the lower bound is
/// `x` when `u > |l|` and `0` otherwise.
pub fn relax_relu<T: Scalar>(l: &T, u: &T) -> ReluRelaxation<T> {
    if !u.is_positive() {
        return ReluRelaxation {
            lower_slope: T::zero(),
            upper_slope: T::zero(),
            upper_offset: T::zero(),
        };
    }
    if !l.is_negative() {
        return ReluRelaxation {
            lower_slope: T::one(),
            upper_slope: T::one(),
            upper_offset: T::zero(),
        };
    }
    let slope = u.clone() / (u.clone() - l.clone());
    let lower_slope = if *u > -l.clone() { T::one() } else { T::zero() };
    ReluRelaxation {
        lower_slope,
        upper_offset: -(slope.clone() * l.clone()),
        upper_slope: slope,
    }
}

/// Substitutes `expr`, a linear function of the output of `stages[..end]`,
/// back to a linear function of the network input.
///
/// `pre_bounds(s)` must return the pre-activation bounds of every ReLU stage
/// `s < end`. With `lower` set the result bounds `expr` from below, otherwise
/// from above.
pub fn back_substitute<'a, T: Scalar>(
    stages: &[Stage<T>],
    end: usize,
    expr: &AffineExpr<T>,
    pre_bounds: impl Fn(usize) -> &'a [Interval<T>],
    lower: bool,
) -> AffineExpr<T> {
    let mut cur = expr.clone();
    for s in (0..end).rev() {
        cur = match &stages[s] {
            Stage::Affine(a) => {
                let mut coeffs = vec![T::zero(); a.in_dim()];
                let mut bias = cur.bias;
                for ((c, row), b) in cur.coeffs.iter().zip(a.rows()).zip(a.bias()) {
                    if c.is_zero() {
                        continue;
                    }
                    bias += c.clone() * b.clone();
                    for (k, w) in row {
                        coeffs[*k] += c.clone() * w.clone();
                    }
                }
                AffineExpr::new(coeffs, bias)
            }
            Stage::Relu { .. } => {
                let bounds = pre_bounds(s);
                let mut bias = cur.bias;
                let coeffs = cur
                    .coeffs
                    .into_iter()
                    .zip(bounds)
                    .map(|(c, b)| {
                        if c.is_zero() {
                            return c;
                        }
                        let r = relax_relu(&b.lower, &b.upper);
                        if c.is_positive() == lower {
                            c * r.lower_slope
                        } else {
                            bias += c.clone() * r.upper_offset;
                            c * r.upper_slope
                        }
                    })
                    .collect();
                AffineExpr::new(coeffs, bias)
            }
        };
    }
    cur
}

/// Bounds for every stage of a network, plus the input-layer expressions of
/// the last stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<T> {
    /// `layers[s]` bounds the output of stage `s` (pre-activation for affine stages).
    pub layers: Vec<NeuronBounds<T>>,
    /// Input-layer lower bound expressions of the last stage's neurons.
    pub output_lower: Vec<AffineExpr<T>>,
    /// Input-layer upper bound expressions of the last stage's neurons.
    pub output_upper: Vec<AffineExpr<T>>,
}

impl<T: Scalar> Propagation<T> {
    pub fn output(&self) -> &[Interval<T>] {
        self.layers.last().map_or(&[], Vec::as_slice)
    }
}

fn input_bounds<T: Scalar>(spec: &Ball0Spec<T>, domain: &BoxDomain<T>) -> NeuronBounds<T> {
    (0..domain.dim())
        .map(|i| {
            let entry = i / domain.channels();
            if spec.is_perturbable(entry) {
                Interval::new(domain.lower()[i].clone(), domain.upper()[i].clone())
            } else {
                let c = spec.center()[i].clone();
                Interval::new(c.clone(), c)
            }
        })
        .collect()
}

/// Propagates bounds through a lowered stage list whose input lives in `domain`.
pub fn compute_bounds_stages<T: Scalar>(
    stages: &[Stage<T>],
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    strategy: Strategy,
) -> Result<Propagation<T>> {
    if spec.center().len() != domain.dim() {
        return Err(Error::ShapeMismatch {
            expected: domain.dim(),
            found: spec.center().len(),
        });
    }
    let inputs = input_bounds(spec, domain);
    let mut layers: Vec<NeuronBounds<T>> = Vec::with_capacity(stages.len());
    let mut output_lower = Vec::new();
    let mut output_upper = Vec::new();
    let mut width = domain.dim();
    for (s, stage) in stages.iter().enumerate() {
        let bounds = match stage {
            Stage::Affine(a) => {
                if a.in_dim() != width {
                    return Err(Error::ShapeMismatch {
                        expected: width,
                        found: a.in_dim(),
                    });
                }
                let last = s + 1 == stages.len();
                let pre = |r: usize| -> &[Interval<T>] {
                    if r == 0 {
                        &inputs
                    } else {
                        &layers[r - 1]
                    }
                };
                let mut out = Vec::with_capacity(a.out_dim());
                for (row, b) in a.rows().iter().zip(a.bias()) {
                    let mut coeffs = vec![T::zero(); width];
                    for (k, w) in row {
                        coeffs[*k] += w.clone();
                    }
                    let expr = AffineExpr::new(coeffs, b.clone());
                    let lo = back_substitute(stages, s, &expr, pre, true);
                    let hi = back_substitute(stages, s, &expr, pre, false);
                    let lower = concretize(&lo, spec, domain, strategy)?.lower;
                    let upper = concretize(&hi, spec, domain, strategy)?.upper;
                    out.push(Interval::new(lower, upper));
                    if last {
                        output_lower.push(lo);
                        output_upper.push(hi);
                    }
                }
                out
            }
            Stage::Relu { width: w } => {
                if *w != width {
                    return Err(Error::ShapeMismatch {
                        expected: width,
                        found: *w,
                    });
                }
                let prev = if s == 0 { &inputs } else { &layers[s - 1] };
                prev.iter()
                    .map(|b| {
                        let clamp = |v: &T| {
                            if v.is_negative() {
                                T::zero()
                            } else {
                                v.clone()
                            }
                        };
                        Interval::new(clamp(&b.lower), clamp(&b.upper))
                    })
                    .collect()
            }
        };
        width = stage.out_dim();
        layers.push(bounds);
    }
    Ok(Propagation {
        layers,
        output_lower,
        output_upper,
    })
}

/// Bounds for every layer of `net` over the perturbation set of `spec`.
pub fn compute_bounds<T: Scalar>(
    net: &Network<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    strategy: Strategy,
) -> Result<Propagation<T>> {
    if domain.dim() != net.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: net.input_dim(),
            found: domain.dim(),
        });
    }
    compute_bounds_stages(net.stages(), spec, domain, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Layer, Shape};
    use crate::oracles::sample_in_ball0;
    use crate::seed::rng_from;
    use rand::Rng;

    fn three_pixel_net() -> Network<f64> {
        Network::new(
            Shape::flat(3),
            vec![
                Layer::Dense {
                    weight: vec![vec![2.0, -3.0, 7.0], vec![-4.0, 2.0, 3.0]],
                    bias: vec![0.0, 0.0],
                },
                Layer::Relu,
                Layer::Dense {
                    weight: vec![vec![2.0, -1.0], vec![0.0, 0.0]],
                    bias: vec![8.0, 0.0],
                },
            ],
        )
        .unwrap()
    }

    fn three_pixel_spec() -> (BoxDomain<f64>, Ball0Spec<f64>) {
        let d = BoxDomain::uniform(3, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![-0.3, 0.0, 0.65], 2).unwrap();
        (d, s)
    }

    #[test]
    fn relaxation_cases() {
        let r = relax_relu(&-10.6_f64, &9.55);
        assert_eq!(r.lower_slope, 0.0);
        assert!((r.upper_slope - 9.55 / 20.15).abs() < 1e-15);
        assert_eq!(relax_relu(&-7.0, &7.95).lower_slope, 1.0);
        assert_eq!(relax_relu(&-12.0, &12.0).lower_slope, 0.0);
        assert!(relax_relu(&1.0, &5.0).is_exact());
        let dead = relax_relu(&-3.0, &-1.0);
        assert!(dead.is_exact() && dead.upper_slope == 0.0);
    }

    #[test]
    fn three_pixel_all_strategies() {
        let net = three_pixel_net();
        let (d, s) = three_pixel_spec();
        let expected = [
            (Strategy::Box, [(-12.0, 12.0), (-9.0, 9.0), (-1.0, 32.0)]),
            (Strategy::TopT, [(-10.6, 9.55), (-7.0, 7.95), (0.05, 31.15)]),
            // 34.60 to two decimals.
            (
                Strategy::TTimesTop,
                [(-19.15, 9.95), (-7.25, 8.75), (-0.75, 201389.0 / 5820.0)],
            ),
        ];
        for (st, want) in expected {
            let p = compute_bounds(&net, &s, &d, st).unwrap();
            let got = [&p.layers[0][0], &p.layers[0][1], &p.layers[2][0]];
            for (g, (lo, hi)) in got.iter().zip(want) {
                assert!(
                    (g.lower - lo).abs() < 1e-9 && (g.upper - hi).abs() < 1e-9,
                    "{st}: {g:?} vs {lo},{hi}"
                );
            }
        }
    }

    #[test]
    fn three_pixel_topt_lower_expression() {
        let net = three_pixel_net();
        let (d, s) = three_pixel_spec();
        let p = compute_bounds(&net, &s, &d, Strategy::TopT).unwrap();
        let e = &p.output_lower[0];
        let slope = 7.95_f64 / 14.95;
        let want = [4.0 * slope, -2.0 * slope, -3.0 * slope];
        for (c, w) in e.coeffs.iter().zip(want) {
            assert!((c - w).abs() < 1e-12);
        }
        assert!((e.bias - (8.0 - 7.0 * slope)).abs() < 1e-12);
    }

    #[test]
    fn three_pixel_exact_rationals() {
        use crate::Exact;
        use num_bigint::BigInt;
        let q = |n: i64, m: i64| Exact::new(BigInt::from(n), BigInt::from(m));
        let net = three_pixel_net().map(|w| Exact::from_integer(BigInt::from(*w as i64)));
        let d = BoxDomain::uniform(3, 1, q(-1, 1), q(1, 1)).unwrap();
        let s = Ball0Spec::new(&d, vec![q(-3, 10), q(0, 1), q(13, 20)], 2).unwrap();
        let o = |st| compute_bounds(&net, &s, &d, st).unwrap().layers[2][0].clone();
        assert_eq!(o(Strategy::Box), Interval::new(q(-1, 1), q(32, 1)));
        assert_eq!(o(Strategy::TopT), Interval::new(q(1, 20), q(623, 20)));
        assert_eq!(
            o(Strategy::TTimesTop),
            Interval::new(q(-3, 4), q(201389, 5820))
        );
    }

    #[test]
    fn single_affine_layer_is_itself() {
        let stages = vec![Stage::Affine(crate::network::SparseAffine::from_dense(
            &[vec![1.0, 2.0]],
            &[3.0],
        ))];
        let e = AffineExpr::new(vec![2.0], 1.0);
        let got = back_substitute(&stages, 1, &e, |_| &[], true);
        assert_eq!(got, AffineExpr::new(vec![2.0, 4.0], 7.0));
    }

    #[test]
    fn nonnegative_preactivations_are_exact() {
        let net = Network::new(
            Shape::flat(2),
            vec![
                Layer::Dense {
                    weight: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
                    bias: vec![5.0, 5.0],
                },
                Layer::Relu,
                Layer::Dense {
                    weight: vec![vec![1.0, -2.0], vec![0.5, 0.5]],
                    bias: vec![0.0, 0.0],
                },
            ],
        )
        .unwrap();
        let d = BoxDomain::uniform(2, 1, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5, 0.5], 2).unwrap();
        let p = compute_bounds(&net, &s, &d, Strategy::Box).unwrap();
        // o0 = 3 y1 - y0 - 5: exact range [-6, -2]
        let o: &Interval<f64> = &p.layers[2][0];
        assert!((o.lower + 6.0).abs() < 1e-12 && (o.upper + 2.0).abs() < 1e-12);
    }

    #[test]
    fn soundness_on_random_networks() {
        let mut rng = rng_from(5);
        for trial in 0..30 {
            let k = rng.random_range(2..=6);
            let h = rng.random_range(2..=8);
            let layers = vec![
                Layer::Dense {
                    weight: (0..h)
                        .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect(),
                    bias: (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
                },
                Layer::Relu,
                Layer::Dense {
                    weight: (0..3)
                        .map(|_| (0..h).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect(),
                    bias: vec![0.0; 3],
                },
            ];
            let net = Network::new(Shape::flat(k), layers).unwrap();
            let d = BoxDomain::uniform(k, 1, 0.0, 1.0).unwrap();
            let center: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = Ball0Spec::new(&d, center, rng.random_range(1..=k.min(3))).unwrap();
            for st in Strategy::ALL {
                let p = compute_bounds(&net, &s, &d, st).unwrap();
                for _ in 0..200 {
                    let y = sample_in_ball0(&s, &d, &mut rng);
                    for (vals, bounds) in net.forward_all(&y).unwrap().iter().zip(&p.layers) {
                        for (v, b) in vals.iter().zip(bounds) {
                            assert!(
                                b.lower - 1e-9 <= *v && *v <= b.upper + 1e-9,
                                "trial {trial} {st}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn input_relu_uses_domain_bounds() {
        let net = Network::new(
            Shape::flat(2),
            vec![
                Layer::Relu,
                Layer::Dense {
                    weight: vec![vec![1.0, 1.0], vec![-1.0, 0.0]],
                    bias: vec![0.0, 0.0],
                },
            ],
        )
        .unwrap();
        let d = BoxDomain::uniform(2, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::with_perturbable(&d, vec![0.5, 0.5], 1, vec![0]).unwrap();
        let p = compute_bounds(&net, &s, &d, Strategy::Box).unwrap();
        assert_eq!(p.layers[0][1], Interval::new(0.5, 0.5));
        assert_eq!(p.layers[0][0], Interval::new(0.0, 1.0));
    }
}
