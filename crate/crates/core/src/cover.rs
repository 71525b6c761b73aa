//! Complete l0 verification by covering.
//!
//! Every `t`-subset of the perturbable entries must lie in some block; a block
//! verified with the top-t strategy certifies all of its `t`-subsets at once.
//! Blocks that fail are re-covered by smaller blocks, and below the leaf size
//! every `t`-subset is checked on its own box neighbourhood.

use std::collections::HashMap;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Ball0Spec, BoxDomain};
use crate::network::{LabeledInput, Network, Stage};
use crate::propagation::Strategy;
use crate::scalar::Scalar;
use crate::seed::derive_seed_for;
use crate::verifier::{
    certify_with, falsify, margin_stages, Falsification, Margin, Query, Verdict, VerdictReport,
};

pub const DEFAULT_DEPTH_LIMIT: usize = 6;
pub const DEFAULT_NAIVE_CAP: u128 = 100_000;

/// Blocks covering every `t`-subset of an index set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverPlan {
    pub blocks: Vec<Vec<usize>>,
    /// Number of parts the index set was split into.
    pub parts: usize,
    pub radius: usize,
    pub max_block_size: usize,
}

impl CoverPlan {
    /// Whether `subset` lies inside some block.
    pub fn covers(&self, subset: &[usize]) -> bool {
        self.blocks
            .iter()
            .any(|b| subset.iter().all(|i| b.binary_search(i).is_ok()))
    }
}

/// Splits `indices` into `parts` contiguous near-equal parts and emits the
/// union of every `t` of them. Any `t` indices touch at most `t` parts, so
/// every `t`-subset is covered.
pub fn build_cover(indices: &[usize], t: usize, parts: usize) -> Result<CoverPlan> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    if parts < t {
        return Err(Error::InvalidArgument(format!(
            "{parts} parts cannot cover {t}-subsets"
        )));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < parts {
        return Err(Error::InvalidArgument(format!(
            "{} indices cannot be split into {parts} parts",
            sorted.len()
        )));
    }
    let n = sorted.len();
    let pieces: Vec<&[usize]> = (0..parts)
        .map(|p| &sorted[p * n / parts..(p + 1) * n / parts])
        .collect();
    let blocks: Vec<Vec<usize>> = (0..parts)
        .combinations(t)
        .map(|chosen| {
            chosen
                .iter()
                .flat_map(|&p| pieces[p].iter().copied())
                .collect()
        })
        .collect();
    let max_block_size = blocks.iter().map(Vec::len).max().unwrap_or(0);
    Ok(CoverPlan {
        blocks,
        parts,
        radius: t,
        max_block_size,
    })
}

/// Tuning knobs of [`cover_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverParams {
    /// Perturbable entries; all entries of the domain when `None`.
    pub indices: Option<Vec<usize>>,
    /// Partition arity; `2t` when `None`.
    pub parts: Option<usize>,
    /// Blocks with at most this many entries are enumerated; `max(2t, 4)` when `None`.
    pub leaf_size: Option<usize>,
    pub depth_limit: usize,
    pub seed: u64,
    pub corner_budget: usize,
    pub sample_budget: usize,
}

impl Default for CoverParams {
    fn default() -> Self {
        let f = Falsification::default();
        Self {
            indices: None,
            parts: None,
            leaf_size: None,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            seed: 0,
            corner_budget: f.corner_budget,
            sample_budget: f.sample_budget,
        }
    }
}

impl CoverParams {
    fn budget_for(&self, subset: &[usize]) -> Falsification {
        Falsification {
            corner_budget: self.corner_budget,
            sample_budget: self.sample_budget,
            seed: derive_seed_for(self.seed, subset),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverStats {
    /// Top-level blocks.
    pub blocks: usize,
    /// Bound propagations, blocks and leaf subsets together.
    pub propagation_calls: usize,
    /// Failed blocks that were re-covered.
    pub refinements: usize,
    /// `t`-subsets checked on their own box.
    pub leaf_enumerations: usize,
    pub max_depth: usize,
    pub verdict: &'static str,
}

impl CoverStats {
    fn merge(&mut self, other: &CoverStats) {
        self.propagation_calls += other.propagation_calls;
        self.refinements += other.refinements;
        self.leaf_enumerations += other.leaf_enumerations;
        self.max_depth = self.max_depth.max(other.max_depth);
    }
}

enum Outcome<T> {
    Verified,
    Unknown,
    Falsified(Vec<T>, usize),
}

struct Ctx<'a, T> {
    net: &'a Network<T>,
    input: &'a LabeledInput<T>,
    domain: &'a BoxDomain<T>,
    stages: Vec<Stage<T>>,
    t: usize,
    parts: usize,
    leaf_size: usize,
    params: &'a CoverParams,
}

impl<T: Scalar> Ctx<'_, T> {
    fn report(
        &self,
        outcome: Outcome<T>,
        indices: Vec<usize>,
        margins: Vec<Margin<T>>,
        start: Instant,
        strategy: Strategy,
    ) -> VerdictReport<T> {
        let verdict = match outcome {
            Outcome::Verified => Verdict::Verified,
            Outcome::Unknown => Verdict::Unknown,
            Outcome::Falsified(counterexample, predicted) => Verdict::Falsified {
                counterexample,
                predicted,
            },
        };
        VerdictReport {
            verdict,
            label: self.input.label,
            strategy,
            radius: self.t,
            perturbable: indices,
            margins,
            layers: Vec::new(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            seed: self.params.seed,
        }
    }

    fn query(&self, set: &[usize], strategy: Strategy) -> Result<Query<'_, T>> {
        let spec = Ball0Spec::with_perturbable(
            self.domain,
            self.input.point.clone(),
            self.t,
            set.to_vec(),
        )?;
        Ok(Query {
            net: self.net,
            input: self.input,
            domain: self.domain,
            spec,
            strategy,
        })
    }

    /// Checks one `t`-subset box; falsifies on failure.
    fn leaf(&self, subset: &[usize], margins: &mut Vec<Margin<T>>) -> Result<Outcome<T>> {
        let q = self.query(subset, Strategy::Box)?;
        let cert = certify_with(&self.stages, &q)?;
        fold_margins(margins, &cert.margins);
        if cert.verified() {
            return Ok(Outcome::Verified);
        }
        Ok(
            match falsify(&q, &cert.propagation, &self.params.budget_for(subset))? {
                Some((y, c)) => Outcome::Falsified(y, c),
                None => Outcome::Unknown,
            },
        )
    }

    fn block(
        &self,
        block: &[usize],
        depth: usize,
        stats: &mut CoverStats,
        cache: &mut HashMap<Vec<usize>, bool>,
        margins: &mut Vec<Margin<T>>,
    ) -> Result<Outcome<T>> {
        stats.max_depth = stats.max_depth.max(depth);
        if block.len() > self.t {
            stats.propagation_calls += 1;
            let q = self.query(block, Strategy::TopT)?;
            let cert = certify_with(&self.stages, &q)?;
            fold_margins(margins, &cert.margins);
            if cert.verified() {
                return Ok(Outcome::Verified);
            }
        }
        let splittable = block.len() > self.leaf_size
            && block.len() >= self.parts
            && depth < self.params.depth_limit;
        if splittable {
            stats.refinements += 1;
            let plan = build_cover(block, self.t, self.parts)?;
            let mut unknown = false;
            for sub in &plan.blocks {
                match self.block(sub, depth + 1, stats, cache, margins)? {
                    Outcome::Verified => {}
                    Outcome::Unknown => unknown = true,
                    found @ Outcome::Falsified(..) => return Ok(found),
                }
            }
            return Ok(if unknown {
                Outcome::Unknown
            } else {
                Outcome::Verified
            });
        }
        let mut unknown = false;
        for subset in block.iter().copied().combinations(self.t) {
            if let Some(&ok) = cache.get(&subset) {
                unknown |= !ok;
                continue;
            }
            stats.propagation_calls += 1;
            stats.leaf_enumerations += 1;
            match self.leaf(&subset, margins)? {
                Outcome::Verified => {
                    cache.insert(subset, true);
                }
                Outcome::Unknown => {
                    cache.insert(subset, false);
                    unknown = true;
                }
                found @ Outcome::Falsified(..) => return Ok(found),
            }
        }
        Ok(if unknown {
            Outcome::Unknown
        } else {
            Outcome::Verified
        })
    }
}

/// Verdict of a union: the first counterexample wins, then any Unknown.
fn combine<T>(acc: Outcome<T>, next: Outcome<T>) -> Outcome<T> {
    match (acc, next) {
        (found @ Outcome::Falsified(..), _) | (_, found @ Outcome::Falsified(..)) => found,
        (Outcome::Unknown, _) | (_, Outcome::Unknown) => Outcome::Unknown,
        _ => Outcome::Verified,
    }
}

/// Keeps the smallest certified lower bound per adversarial label; a bound
/// that holds on every piece of a cover holds on the whole ball.
fn fold_margins<T: Scalar>(acc: &mut Vec<Margin<T>>, new: &[Margin<T>]) {
    if acc.is_empty() {
        acc.extend_from_slice(new);
        return;
    }
    for (a, m) in acc.iter_mut().zip(new) {
        if m.lower < a.lower {
            a.lower = m.lower.clone();
        }
    }
}

fn check_input<T: Scalar>(
    net: &Network<T>,
    input: &LabeledInput<T>,
    domain: &BoxDomain<T>,
) -> Result<()> {
    if domain.dim() != net.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: net.input_dim(),
            found: domain.dim(),
        });
    }
    let predicted = net.classify(&input.point)?;
    if predicted != input.label {
        return Err(Error::Misclassified {
            predicted,
            label: input.label,
        });
    }
    Ok(())
}

/// `C(n, t)`, saturating.
fn subset_count(n: usize, t: usize) -> u128 {
    (0..t as u128).fold(1u128, |acc, i| acc.saturating_mul(n as u128 - i) / (i + 1))
}

fn resolve_indices<T: Scalar>(
    domain: &BoxDomain<T>,
    indices: &Option<Vec<usize>>,
    t: usize,
) -> Result<Vec<usize>> {
    let mut set = indices
        .clone()
        .unwrap_or_else(|| (0..domain.entries()).collect());
    set.sort_unstable();
    set.dedup();
    if let Some(&bad) = set.iter().find(|&&i| i >= domain.entries()) {
        return Err(Error::InvalidArgument(format!("entry {bad} out of range")));
    }
    if t == 0 || t > set.len() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} must lie in [1, {}]",
            set.len()
        )));
    }
    Ok(set)
}

/// Sound verification of the whole l0-ball of radius `t`, complete up to the
/// leaf solver: Verified, a concrete counterexample, or Unknown when some leaf
/// box neither verifies nor yields a counterexample.
///
/// Top-level blocks are processed in parallel and merged in block order, so
/// the verdict and statistics do not depend on the thread count.
pub fn cover_verify<T: Scalar>(
    net: &Network<T>,
    input: &LabeledInput<T>,
    domain: &BoxDomain<T>,
    t: usize,
    params: &CoverParams,
) -> Result<(VerdictReport<T>, CoverStats)> {
    let start = Instant::now();
    check_input(net, input, domain)?;
    let indices = resolve_indices(domain, &params.indices, t)?;
    let parts = params.parts.unwrap_or(2 * t).min(indices.len()).max(t);
    let ctx = Ctx {
        net,
        input,
        domain,
        stages: margin_stages(net, input.label)?,
        t,
        parts,
        leaf_size: params.leaf_size.unwrap_or((2 * t).max(4)),
        params,
    };
    let plan = build_cover(&indices, t, parts)?;
    let results: Vec<(Outcome<T>, CoverStats, Vec<Margin<T>>)> = plan
        .blocks
        .par_iter()
        .map(|b| {
            let mut stats = CoverStats::default();
            let mut margins = Vec::new();
            let outcome = ctx.block(b, 0, &mut stats, &mut HashMap::new(), &mut margins)?;
            Ok((outcome, stats, margins))
        })
        .collect::<Result<_>>()?;
    let mut stats = CoverStats {
        blocks: plan.blocks.len(),
        ..CoverStats::default()
    };
    let mut margins = Vec::new();
    let mut outcome = Outcome::Verified;
    for (o, s, m) in results {
        stats.merge(&s);
        fold_margins(&mut margins, &m);
        outcome = combine(outcome, o);
    }
    let r = ctx.report(outcome, indices, margins, start, Strategy::TopT);
    stats.verdict = r.verdict.name();
    Ok((r, stats))
}

/// Baseline: checks every `t`-subset box separately, with the same leaf
/// procedure (and per-subset seeds) as [`cover_verify`].
pub fn naive_complete_verify<T: Scalar>(
    net: &Network<T>,
    input: &LabeledInput<T>,
    domain: &BoxDomain<T>,
    t: usize,
    params: &CoverParams,
) -> Result<(VerdictReport<T>, CoverStats)> {
    let start = Instant::now();
    check_input(net, input, domain)?;
    let indices = resolve_indices(domain, &params.indices, t)?;
    let count = subset_count(indices.len(), t);
    if count > DEFAULT_NAIVE_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: DEFAULT_NAIVE_CAP,
        });
    }
    let ctx = Ctx {
        net,
        input,
        domain,
        stages: margin_stages(net, input.label)?,
        t,
        parts: t,
        leaf_size: indices.len(),
        params,
    };
    let subsets: Vec<Vec<usize>> = indices.iter().copied().combinations(t).collect();
    let results: Vec<(Outcome<T>, Vec<Margin<T>>)> = subsets
        .par_iter()
        .map(|s| {
            let mut margins = Vec::new();
            Ok((ctx.leaf(s, &mut margins)?, margins))
        })
        .collect::<Result<_>>()?;
    let mut margins = Vec::new();
    let mut outcome = Outcome::Verified;
    for (o, m) in results {
        fold_margins(&mut margins, &m);
        outcome = combine(outcome, o);
    }
    let r = ctx.report(outcome, indices, margins, start, Strategy::Box);
    let stats = CoverStats {
        blocks: subsets.len(),
        propagation_calls: subsets.len(),
        refinements: 0,
        leaf_enumerations: subsets.len(),
        max_depth: 0,
        verdict: r.verdict.name(),
    };
    Ok((r, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::in_ball0;
    use crate::network::{Layer, Shape};

    #[test]
    fn six_indices_three_parts() {
        let plan = build_cover(&[1, 2, 3, 4, 5, 6], 2, 3).unwrap();
        assert_eq!(
            plan.blocks,
            vec![vec![1, 2, 3, 4], vec![1, 2, 5, 6], vec![3, 4, 5, 6]]
        );
        for pair in (1..=6).combinations(2) {
            assert!(plan.covers(&pair));
        }
    }

    #[test]
    fn degenerate_arities() {
        let plan = build_cover(&[0, 1, 2, 3], 2, 2).unwrap();
        assert_eq!(plan.blocks, vec![vec![0, 1, 2, 3]]);
        let plan = build_cover(&[0, 1, 2, 3], 1, 4).unwrap();
        assert_eq!(plan.blocks, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert!(build_cover(&[0, 1, 2], 3, 2).is_err());
        assert!(build_cover(&[0, 1], 1, 3).is_err());
    }

    #[test]
    fn covering_is_exhaustive() {
        for v in 1..=25usize {
            let idx: Vec<usize> = (0..v).collect();
            for t in 1..=3.min(v) {
                for p in t..=v.min(2 * t + 1) {
                    let plan = build_cover(&idx, t, p).unwrap();
                    assert!(
                        idx.iter().copied().combinations(t).all(|s| plan.covers(&s)),
                        "v={v} t={t} p={p}"
                    );
                }
            }
        }
    }

    fn planted(v: usize, pixel: usize) -> (Network<f64>, LabeledInput<f64>, BoxDomain<f64>) {
        // Score 1 overtakes score 0 only when `pixel` is near its upper bound.
        let mut w = vec![0.0; v];
        w[pixel] = 1.0;
        let net = Network::new(
            Shape::flat(v),
            vec![Layer::Dense {
                weight: vec![vec![0.0; v], w],
                bias: vec![0.9, 0.0],
            }],
        )
        .unwrap();
        let x = LabeledInput::new(vec![0.0; v], 0, 2).unwrap();
        (net, x, BoxDomain::uniform(v, 1, 0.0, 1.0).unwrap())
    }

    #[test]
    fn planted_counterexample_is_found_by_both() {
        let (net, x, d) = planted(8, 3);
        let params = CoverParams::default();
        let (naive, stats) = naive_complete_verify(&net, &x, &d, 1, &params).unwrap();
        assert_eq!(stats.propagation_calls, 8);
        let (cover, _) = cover_verify(&net, &x, &d, 1, &params).unwrap();
        for r in [naive, cover] {
            match r.verdict {
                Verdict::Falsified { counterexample, .. } => {
                    let spec = Ball0Spec::new(&d, x.point.clone(), 1).unwrap();
                    assert!(in_ball0(&spec, &d, &counterexample).unwrap());
                    assert!(counterexample[3] > 0.9);
                    assert_ne!(net.classify(&counterexample).unwrap(), 0);
                }
                other => panic!("expected a counterexample, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_weight_network_verifies_at_top_level() {
        let v = 10;
        let net = Network::new(
            Shape::flat(v),
            vec![Layer::Dense {
                weight: vec![vec![0.0; v], vec![0.01; v]],
                bias: vec![1.0, 0.0],
            }],
        )
        .unwrap();
        let x = LabeledInput::new(vec![0.0; v], 0, 2).unwrap();
        let d = BoxDomain::uniform(v, 1, 0.0, 1.0).unwrap();
        let (r, stats) = cover_verify(&net, &x, &d, 2, &CoverParams::default()).unwrap();
        assert!(r.verdict.is_verified());
        assert_eq!(stats.propagation_calls, 6);
        assert_eq!(stats.blocks, 6);
        assert_eq!(stats.refinements, 0);
        let (n, nstats) = naive_complete_verify(&net, &x, &d, 2, &CoverParams::default()).unwrap();
        assert!(n.verdict.is_verified());
        assert_eq!(nstats.propagation_calls, 45);
    }
}
