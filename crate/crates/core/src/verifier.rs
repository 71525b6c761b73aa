//! Robustness queries over l0-balls and the success-rate experiment.

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{corners, Ball0Spec, BoxDomain};
use crate::network::{LabeledInput, Network, SparseAffine, Stage};
use crate::oracles::sample_in_ball0;
use crate::propagation::{argmin_in_ball0, compute_bounds_stages, Interval, Propagation, Strategy};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from};

/// Version of the report document layout.
pub const REPORT_VERSION: u32 = 1;

pub const DEFAULT_CORNER_BUDGET: usize = 10_000;
pub const DEFAULT_SAMPLE_BUDGET: usize = 10_000;

/// A robustness question: does `net` keep `input.label` on the whole ball?
#[derive(Debug, Clone)]
pub struct Query<'a, T> {
    pub net: &'a Network<T>,
    pub input: &'a LabeledInput<T>,
    pub domain: &'a BoxDomain<T>,
    pub spec: Ball0Spec<T>,
    pub strategy: Strategy,
}

/// How hard to look for a counterexample once the bounds are inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Falsification {
    pub corner_budget: usize,
    pub sample_budget: usize,
    pub seed: u64,
}

impl Default for Falsification {
    fn default() -> Self {
        Self {
            corner_budget: DEFAULT_CORNER_BUDGET,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            seed: 0,
        }
    }
}

impl Falsification {
    pub fn disabled() -> Self {
        Self {
            corner_budget: 0,
            sample_budget: 0,
            seed: 0,
        }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict<T> {
    Verified,
    Unknown,
    Falsified {
        counterexample: Vec<T>,
        predicted: usize,
    },
}

impl<T> Verdict<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Unknown => "unknown",
            Verdict::Falsified { .. } => "falsified",
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn is_falsified(&self) -> bool {
        matches!(self, Verdict::Falsified { .. })
    }
}

/// Certified lower bound of `score[label] - score[against]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin<T> {
    pub against: usize,
    pub lower: T,
}

/// Aggregate view of one layer's bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub stage: usize,
    pub kind: &'static str,
    pub width: usize,
    pub mean_width: f64,
    pub max_width: f64,
    /// Neurons whose interval contains zero strictly inside.
    pub unstable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport<T> {
    #[serde(flatten)]
    pub verdict: Verdict<T>,
    pub label: usize,
    pub strategy: Strategy,
    pub radius: usize,
    pub perturbable: Vec<usize>,
    pub margins: Vec<Margin<T>>,
    pub layers: Vec<LayerSummary>,
    pub elapsed_ms: f64,
    pub seed: u64,
}

/// The network's stages followed by a layer computing `score[label] - score[j]`
/// for every `j != label`.
pub fn margin_stages<T: Scalar>(net: &Network<T>, label: usize) -> Result<Vec<Stage<T>>> {
    let c = net.output_count();
    if label >= c {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {c} classes"
        )));
    }
    let rows = (0..c)
        .filter(|&j| j != label)
        .map(|j| vec![(label, T::one()), (j, -T::one())])
        .collect();
    let mut stages = net.stages().to_vec();
    stages.push(Stage::Affine(SparseAffine::new(
        c,
        rows,
        vec![T::zero(); c - 1],
    )));
    Ok(stages)
}

fn others(label: usize, classes: usize) -> impl Iterator<Item = usize> {
    (0..classes).filter(move |&j| j != label)
}

fn check_query<T: Scalar>(q: &Query<'_, T>) -> Result<()> {
    if q.domain.dim() != q.net.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: q.net.input_dim(),
            found: q.domain.dim(),
        });
    }
    if q.input.point.as_slice() != q.spec.center() {
        return Err(Error::InvalidArgument(
            "ball center differs from the labelled input".into(),
        ));
    }
    let predicted = q.net.classify(&q.input.point)?;
    if predicted != q.input.label {
        return Err(Error::Misclassified {
            predicted,
            label: q.input.label,
        });
    }
    Ok(())
}

/// Result of bounding the margins without any falsification attempt.
#[derive(Debug, Clone)]
pub struct Certificate<T> {
    pub margins: Vec<Margin<T>>,
    pub propagation: Propagation<T>,
}

impl<T: Scalar> Certificate<T> {
    pub fn verified(&self) -> bool {
        self.margins.iter().all(|m| m.lower.is_positive())
    }
}

/// Bounds the margins of a query over precomputed margin stages.
pub fn certify_with<T: Scalar>(stages: &[Stage<T>], q: &Query<'_, T>) -> Result<Certificate<T>> {
    let propagation = compute_bounds_stages(stages, &q.spec, q.domain, q.strategy)?;
    let margins = others(q.input.label, q.net.output_count())
        .zip(propagation.output())
        .map(|(against, b)| Margin {
            against,
            lower: b.lower.clone(),
        })
        .collect();
    Ok(Certificate {
        margins,
        propagation,
    })
}

/// Bounds the margins of a query. Verified exactly when every margin is positive.
pub fn certify<T: Scalar>(q: &Query<'_, T>) -> Result<Certificate<T>> {
    check_query(q)?;
    certify_with(&margin_stages(q.net, q.input.label)?, q)
}

/// Searches the ball for a point that changes the label.
///
/// Tries the minimisers of the margin lower-bound expressions first, then
/// corner points, then uniform samples.
pub fn falsify<T: Scalar>(
    q: &Query<'_, T>,
    hints: &Propagation<T>,
    budget: &Falsification,
) -> Result<Option<(Vec<T>, usize)>> {
    let flips = |y: &[T]| -> Result<Option<usize>> {
        let c = q.net.classify(y)?;
        Ok((c != q.input.label).then_some(c))
    };
    if budget.corner_budget + budget.sample_budget == 0 {
        return Ok(None);
    }
    for expr in &hints.output_lower {
        let y = argmin_in_ball0(expr, &q.spec, q.domain)?;
        if let Some(c) = flips(&y)? {
            return Ok(Some((y, c)));
        }
    }
    for y in corners(&q.spec, q.domain).take(budget.corner_budget) {
        if let Some(c) = flips(&y)? {
            return Ok(Some((y, c)));
        }
    }
    let mut rng = rng_from(budget.seed);
    for _ in 0..budget.sample_budget {
        let y = sample_in_ball0(&q.spec, q.domain, &mut rng);
        if let Some(c) = flips(&y)? {
            return Ok(Some((y, c)));
        }
    }
    Ok(None)
}

fn summarize<T: Scalar>(stages: &[Stage<T>], layers: &[Vec<Interval<T>>]) -> Vec<LayerSummary> {
    stages
        .iter()
        .zip(layers)
        .enumerate()
        .map(|(stage, (s, bounds))| {
            let widths: Vec<f64> = bounds.iter().map(|b| b.width().to_real()).collect();
            LayerSummary {
                stage,
                kind: match s {
                    Stage::Affine(_) => "affine",
                    Stage::Relu { .. } => "relu",
                },
                width: bounds.len(),
                mean_width: widths.iter().sum::<f64>() / widths.len().max(1) as f64,
                max_width: widths.iter().copied().fold(0.0, f64::max),
                unstable: bounds
                    .iter()
                    .filter(|b| b.lower.is_negative() && b.upper.is_positive())
                    .count(),
            }
        })
        .collect()
}

/// Verifies a query over precomputed margin stages (see [`margin_stages`]).
pub fn verify_with<T: Scalar>(
    stages: &[Stage<T>],
    q: &Query<'_, T>,
    budget: &Falsification,
) -> Result<VerdictReport<T>> {
    let start = Instant::now();
    let cert = certify_with(stages, q)?;
    let verdict = if cert.verified() {
        Verdict::Verified
    } else {
        match falsify(q, &cert.propagation, budget)? {
            Some((counterexample, predicted)) => Verdict::Falsified {
                counterexample,
                predicted,
            },
            None => Verdict::Unknown,
        }
    };
    // The margin layer is reported through `margins`, not as a layer summary.
    let net_stages = q.net.stages().len();
    let layers = summarize(
        &stages[..net_stages],
        &cert.propagation.layers[..net_stages],
    );
    Ok(VerdictReport {
        verdict,
        label: q.input.label,
        strategy: q.strategy,
        radius: q.spec.radius(),
        perturbable: q.spec.perturbable().to_vec(),
        margins: cert.margins,
        layers,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: budget.seed,
    })
}

/// Bounds the margins and, if that is inconclusive, looks for a counterexample.
pub fn verify<T: Scalar>(q: &Query<'_, T>, budget: &Falsification) -> Result<VerdictReport<T>> {
    check_query(q)?;
    verify_with(&margin_stages(q.net, q.input.label)?, q, budget)
}

/// Verified fraction for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRate {
    pub strategy: Strategy,
    pub subset_size: usize,
    pub radius: usize,
    pub trials: usize,
    pub verified: usize,
    pub rate: f64,
}

/// One grid point of the success-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateExperiment {
    /// Size `k` of each random perturbable set.
    pub subset_size: usize,
    /// Ball radius `t`.
    pub radius: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Samples `trials` uniform perturbable sets of `subset_size` entries and
/// reports, for each strategy, the fraction of balls of radius `t` that are
/// certified. Every strategy sees the same sets; trial `i` draws its set from
/// `derive_seed(seed, i)`, so results do not depend on thread count.
pub fn success_rate_experiment<T: Scalar>(
    net: &Network<T>,
    input: &LabeledInput<T>,
    domain: &BoxDomain<T>,
    config: &RateExperiment,
    strategies: &[Strategy],
) -> Result<Vec<SuccessRate>> {
    let RateExperiment {
        subset_size,
        radius: t,
        trials,
        seed,
    } = *config;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if subset_size > domain.entries() || t == 0 || t > subset_size {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= t <= k <= {}, got t = {t}, k = {subset_size}",
            domain.entries()
        )));
    }
    let probe = Ball0Spec::new(domain, input.point.clone(), 1)?;
    check_query(&Query {
        net,
        input,
        domain,
        spec: probe,
        strategy: Strategy::Box,
    })?;
    let stages = margin_stages(net, input.label)?;
    let outcomes: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(derive_seed(seed, i as u64));
            let subset = index::sample(&mut rng, domain.entries(), subset_size).into_vec();
            let spec = Ball0Spec::with_perturbable(domain, input.point.clone(), t, subset)?;
            strategies
                .iter()
                .map(|&strategy| {
                    let q = Query {
                        net,
                        input,
                        domain,
                        spec: spec.clone(),
                        strategy,
                    };
                    Ok(certify_with(&stages, &q)?.verified())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(s, &strategy)| {
            let verified = outcomes.iter().filter(|o| o[s]).count();
            SuccessRate {
                strategy,
                subset_size,
                radius: t,
                trials,
                verified,
                rate: verified as f64 / trials as f64,
            }
        })
        .collect())
}
