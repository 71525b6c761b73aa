use itertools::Itertools;

use crate::error::{Error, Result};
use crate::geometry::{Ball0Spec, BoxDomain};
use crate::scalar::Scalar;

pub const DEFAULT_CORNER_CAP: u128 = 1_000_000;

/// Number of corner-pattern points: `sum_{j<=t} C(|K|, j) * (2^d)^j`, saturating.
pub fn corner_count<T: Scalar>(spec: &Ball0Spec<T>, domain: &BoxDomain<T>) -> u128 {
    let k = spec.perturbable().len() as u128;
    let per_entry = 1u128
        .checked_shl(domain.channels() as u32)
        .unwrap_or(u128::MAX);
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    let mut pow: u128 = 1;
    for j in 0..=spec.radius() as u128 {
        if let Some(next) = binom.saturating_mul(k + 1 - j).checked_div(j) {
            binom = next;
            pow = pow.saturating_mul(per_entry);
        }
        total = total.saturating_add(binom.saturating_mul(pow));
    }
    total
}

/// Lazily yields every point that equals the center outside some `S` in `K`
/// with `|S| <= t` and takes a bound value in every channel of `S`.
///
/// Points are produced by increasing `|S|`, so the center comes first.
pub fn corners<'a, T: Scalar>(
    spec: &'a Ball0Spec<T>,
    domain: &'a BoxDomain<T>,
) -> impl Iterator<Item = Vec<T>> + 'a {
    let d = domain.channels();
    (0..=spec.radius()).flat_map(move |size| {
        spec.perturbable()
            .iter()
            .copied()
            .combinations(size)
            .flat_map(move |subset| {
                let patterns = 1u64 << (d * subset.len());
                (0..patterns).map(move |mask| {
                    let mut y = spec.center().to_vec();
                    for (slot, &entry) in subset.iter().enumerate() {
                        for ch in 0..d {
                            let p = domain.index(entry, ch);
                            y[p] = if mask >> (slot * d + ch) & 1 == 1 {
                                domain.upper()[p].clone()
                            } else {
                                domain.lower()[p].clone()
                            };
                        }
                    }
                    y
                })
            })
    })
}

/// Materialises [`corners`]; errors when the count exceeds `cap`.
///
/// The result is a superset of the hull's extreme points and may contain
/// duplicates when the center touches a bound.
pub fn enumerate_corners<T: Scalar>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    cap: u128,
) -> Result<Vec<Vec<T>>> {
    let count = corner_count(spec, domain);
    if count > cap || domain.channels() * spec.radius() >= 64 {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(corners(spec, domain).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::in_ball0;

    #[test]
    fn cube_has_nineteen_corners() {
        let d = BoxDomain::uniform(3, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.0; 3], 2).unwrap();
        let cs = enumerate_corners(&s, &d, DEFAULT_CORNER_CAP).unwrap();
        assert_eq!(cs.len(), 19);
        assert_eq!(corner_count(&s, &d), 19);
        assert!(cs.iter().all(|c| in_ball0(&s, &d, c).unwrap()));
        assert_eq!(cs[0], vec![0.0; 3]);
    }

    #[test]
    fn segment_corners() {
        let d = BoxDomain::uniform(1, 1, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5], 1).unwrap();
        let cs = enumerate_corners(&s, &d, DEFAULT_CORNER_CAP).unwrap();
        assert_eq!(cs, vec![vec![0.5], vec![0.0], vec![1.0]]);
    }

    #[test]
    fn full_radius_contains_all_box_vertices() {
        let d = BoxDomain::uniform(2, 2, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![1.0, 0.0, 0.0, 1.0], 2).unwrap();
        let cs = enumerate_corners(&s, &d, DEFAULT_CORNER_CAP).unwrap();
        assert_eq!(cs.len() as u128, corner_count(&s, &d));
        for mask in 0..16u32 {
            let v: Vec<f64> = (0..4).map(|b| f64::from((mask >> b) & 1)).collect();
            assert!(cs.contains(&v), "missing vertex {v:?}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let d = BoxDomain::uniform(30, 1, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5; 30], 10).unwrap();
        assert!(matches!(
            enumerate_corners(&s, &d, DEFAULT_CORNER_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }
}
