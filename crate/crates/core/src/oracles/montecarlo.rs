use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::seed::{derive_seed, rng_from};

/// Samples drawn per independent stream; streams are seeded by index so the
/// estimate does not depend on the worker count.
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Number of standard errors separating the estimate from `value`.
    /// Zero-variance estimates return 0 on exact agreement, infinity otherwise.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Volume of `{y in D : predicate(y)}` by uniform sampling over `D`.
pub fn mc_volume<F>(
    predicate: F,
    domain: &BoxDomain<f64>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "monte carlo needs at least 1000 samples, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK as u64);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = (samples - c * CHUNK as u64).min(CHUNK as u64);
            let mut rng = rng_from(derive_seed(seed, c));
            let mut y = vec![0.0; domain.dim()];
            let mut hits = 0u64;
            for _ in 0..n {
                for (v, (a, b)) in y.iter_mut().zip(domain.lower().iter().zip(domain.upper())) {
                    *v = a + (b - a) * rng.random::<f64>();
                }
                if predicate(&y) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let vol = domain.volume();
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        mean: vol * p,
        std_error: vol * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
    })
}
