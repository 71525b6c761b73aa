//! Euclidean distance from a point to the convex hull of a finite vertex set.
//!
//! Frank-Wolfe vertex selection with fully corrective steps (Wolfe's
//! minimum-norm-point method): each new vertex enters an active set, and the
//! iterate is re-optimised over the affine hull of that set. This terminates
//! in finitely many major cycles and is accurate near the hull boundary,
//! where plain Frank-Wolfe stalls.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_FW_MAX_ITERS: usize = 100_000;
pub const DEFAULT_FW_TOL: f64 = 1e-8;
/// Distance below which a point is declared a hull member.
pub const HULL_MEMBER_THRESHOLD: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimiser of `|sum a_i p_i|` subject to `sum a_i = 1` over the active set.
fn affine_min_norm(shifted: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let n = active.len();
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate().skip(a) {
            let g = dot(&shifted[i], &shifted[j]);
            m[(a, b)] = g;
            m[(b, a)] = g;
        }
        m[(a, n)] = 1.0;
        m[(n, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(n).copied().collect();
    alpha.iter().all(|a| a.is_finite()).then_some(alpha)
}

/// Distance from `point` to `conv(vertices)`.
///
/// Stops once the Frank-Wolfe gap certifies the distance to within `tol`.
/// Hitting `max_iters` returns [`Error::NonConvergence`] with the last distance.
pub fn hull_distance_fw(
    point: &[f64],
    vertices: &[Vec<f64>],
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("hull of an empty vertex set".into()));
    }
    let dim = point.len();
    if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let shifted: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| v.iter().zip(point).map(|(a, b)| a - b).collect())
        .collect();
    let norms: Vec<f64> = shifted.iter().map(|p| dot(p, p)).collect();
    let scale = norms.iter().cloned().fold(0.0_f64, f64::max).max(1.0);

    let start = (0..shifted.len())
        .min_by(|&a, &b| norms[a].total_cmp(&norms[b]))
        .expect("non-empty");
    let mut active = vec![start];
    let mut weights = vec![1.0];
    let mut x = shifted[start].clone();

    let combine = |active: &[usize], weights: &[f64]| {
        let mut x = vec![0.0; dim];
        for (&i, &w) in active.iter().zip(weights) {
            for (xi, pi) in x.iter_mut().zip(&shifted[i]) {
                *xi += w * pi;
            }
        }
        x
    };

    for _ in 0..max_iters {
        let xx = dot(&x, &x);
        let norm = xx.sqrt();
        if norm <= tol {
            return Ok(norm);
        }
        let (j, best) = shifted
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        // |x*| >= |x| - gap / |x|
        let gap = xx - best;
        if gap <= tol * norm || gap <= 1e-15 * scale || active.contains(&j) {
            return Ok(norm);
        }
        active.push(j);
        weights.push(0.0);

        loop {
            let Some(alpha) = affine_min_norm(&shifted, &active) else {
                // degenerate active set: fall back to a plain Frank-Wolfe line search
                let last = active.len() - 1;
                let d: Vec<f64> = shifted[j].iter().zip(&x).map(|(p, q)| p - q).collect();
                let dd = dot(&d, &d);
                let step = if dd > 0.0 {
                    (-dot(&x, &d) / dd).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                for w in weights.iter_mut() {
                    *w *= 1.0 - step;
                }
                weights[last] += step;
                break;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-14 && w - a > 0.0 {
                    theta = theta.min(w / (w - a));
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let mut k = 0;
            while k < active.len() {
                if weights[k] <= 1e-14 {
                    active.swap_remove(k);
                    weights.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            if active.len() <= 1 {
                if active.is_empty() {
                    active.push(j);
                    weights.push(1.0);
                }
                weights[0] = 1.0;
                break;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        x = combine(&active, &weights);
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        distance: dot(&x, &x).sqrt(),
    })
}
