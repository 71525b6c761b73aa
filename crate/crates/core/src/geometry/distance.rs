//! Asymmetrically scaled distances and the membership predicates built on them.

use crate::error::{Error, Result};
use crate::geometry::{Ball0Spec, BoxDomain};
use crate::scalar::Scalar;

/// A per-entry scaled distance, in `[0, inf]`.
///
/// `Infinite` sorts above every finite value.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum ScaledDistance<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> ScaledDistance<T> {
    pub fn zero() -> Self {
        ScaledDistance::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ScaledDistance::Finite(_))
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            ScaledDistance::Finite(v) => Some(v),
            ScaledDistance::Infinite => None,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Distance from `center` to `y` along one coordinate, normalised by the gap
/// between `center` and the bound on `y`'s side. Equals 1 at either bound.
pub fn scaled_distance<T: Scalar>(
    center: &T,
    lower: &T,
    upper: &T,
    y: &T,
) -> Result<ScaledDistance<T>> {
    if lower > center || center > upper {
        return Err(Error::InvalidDomain(format!(
            "center {center} outside [{lower}, {upper}]"
        )));
    }
    let dist = if y > center {
        let gap = upper.clone() - center.clone();
        if gap.is_zero() {
            ScaledDistance::Infinite
        } else {
            ScaledDistance::Finite((y.clone() - center.clone()) / gap)
        }
    } else if y < center {
        let gap = lower.clone() - center.clone();
        if gap.is_zero() {
            ScaledDistance::Infinite
        } else {
            ScaledDistance::Finite((y.clone() - center.clone()) / gap)
        }
    } else {
        ScaledDistance::zero()
    };
    Ok(dist)
}

/// Channel-wise scaled distance of one entry, reduced by maximum.
pub fn scaled_distance_multi<T: Scalar>(
    center: &[T],
    lower: &[T],
    upper: &[T],
    y: &[T],
) -> Result<ScaledDistance<T>> {
    let n = center.len();
    for len in [lower.len(), upper.len(), y.len()] {
        if len != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let mut acc = ScaledDistance::zero();
    for j in 0..n {
        acc = acc.max(scaled_distance(&center[j], &lower[j], &upper[j], &y[j])?);
    }
    Ok(acc)
}

/// Per-entry (channel-maximised) scaled distances over the perturbable set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDistanceVector<T> {
    pub entries: Vec<usize>,
    pub values: Vec<ScaledDistance<T>>,
}

impl<T: Scalar> ScaledDistanceVector<T> {
    /// Sum of all terms; `Infinite` if any term is.
    pub fn total(&self) -> ScaledDistance<T> {
        let mut sum = T::zero();
        for v in &self.values {
            match v {
                ScaledDistance::Finite(x) => sum += x.clone(),
                ScaledDistance::Infinite => return ScaledDistance::Infinite,
            }
        }
        ScaledDistance::Finite(sum)
    }
}

pub fn scaled_distance_vector<T: Scalar>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    y: &[T],
) -> Result<ScaledDistanceVector<T>> {
    domain.check_point(y)?;
    let c = spec.center();
    let values = spec
        .perturbable()
        .iter()
        .map(|&i| {
            let r = domain.entry_range(i);
            scaled_distance_multi(
                &c[r.clone()],
                &domain.lower()[r.clone()],
                &domain.upper()[r.clone()],
                &y[r],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaledDistanceVector {
        entries: spec.perturbable().to_vec(),
        values,
    })
}

fn agrees_outside_set<T: Scalar>(spec: &Ball0Spec<T>, domain: &BoxDomain<T>, y: &[T]) -> bool {
    (0..domain.entries())
        .filter(|&i| !spec.is_perturbable(i))
        .all(|i| domain.entry_range(i).all(|p| y[p] == spec.center()[p]))
}

/// Exact l0-ball membership. An entry counts as changed if any channel differs.
pub fn in_ball0<T: Scalar>(spec: &Ball0Spec<T>, domain: &BoxDomain<T>, y: &[T]) -> Result<bool> {
    domain.check_point(y)?;
    if !domain.contains(y) || !agrees_outside_set(spec, domain, y) {
        return Ok(false);
    }
    let changed = spec
        .perturbable()
        .iter()
        .filter(|&&i| domain.entry_range(i).any(|p| y[p] != spec.center()[p]))
        .count();
    Ok(changed <= spec.radius())
}

/// Membership in the scaled l1-ball (no box constraint), restricted to points
/// that agree with the center outside the perturbable set.
pub fn in_scaled_l1<T: Scalar>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    y: &[T],
) -> Result<bool> {
    domain.check_point(y)?;
    if !agrees_outside_set(spec, domain, y) {
        return Ok(false);
    }
    let radius = T::from_count(spec.radius()) + T::membership_slack();
    Ok(match scaled_distance_vector(spec, domain, y)?.total() {
        ScaledDistance::Finite(s) => s <= radius,
        ScaledDistance::Infinite => false,
    })
}

/// Membership in the convex hull of the l0-ball, i.e. the domain intersected
/// with the scaled l1-ball (channel-max variant for multi-channel inputs).
pub fn in_hull<T: Scalar>(spec: &Ball0Spec<T>, domain: &BoxDomain<T>, y: &[T]) -> Result<bool> {
    domain.check_point(y)?;
    if !domain.contains(y) {
        return Ok(false);
    }
    in_scaled_l1(spec, domain, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(x: f64) -> ScaledDistance<f64> {
        ScaledDistance::Finite(x)
    }

    #[test]
    fn distance_examples() {
        let d = scaled_distance(&0.7, &-1.0, &1.0, &0.3).unwrap();
        assert!((d.finite().unwrap() - 0.4_f64 / 1.7).abs() < 1e-12);
        assert_eq!(scaled_distance(&0.7, &-1.0, &1.0, &0.7).unwrap(), fin(0.0));
        assert_eq!(scaled_distance(&0.7, &-1.0, &1.0, &-1.0).unwrap(), fin(1.0));
        assert_eq!(scaled_distance(&0.0, &-1.0, &1.0, &0.3).unwrap(), fin(0.3));
        assert_eq!(
            scaled_distance(&1.0, &-1.0, &1.0, &1.5).unwrap(),
            ScaledDistance::Infinite
        );
        assert_eq!(
            scaled_distance(&-1.0, &-1.0, &1.0, &-2.0).unwrap(),
            ScaledDistance::Infinite
        );
    }

    #[test]
    fn distance_rejects_center_outside_bounds() {
        assert!(scaled_distance(&1.5, &-1.0, &1.0, &0.0).is_err());
        assert!(scaled_distance(&-1.5, &-1.0, &1.0, &0.0).is_err());
    }

    #[test]
    fn multi_channel_takes_max() {
        let d =
            scaled_distance_multi(&[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], &[0.5, -1.0]).unwrap();
        assert_eq!(d, fin(1.0));
        let z =
            scaled_distance_multi(&[0.2, 0.1], &[-1.0, -1.0], &[1.0, 1.0], &[0.2, 0.1]).unwrap();
        assert_eq!(z, fin(0.0));
        let one = scaled_distance_multi(&[0.7], &[-1.0], &[1.0], &[0.3]).unwrap();
        assert_eq!(one, scaled_distance(&0.7, &-1.0, &1.0, &0.3).unwrap());
        assert!(scaled_distance_multi(&[0.0], &[-1.0, 0.0], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn infinity_dominates() {
        assert!(ScaledDistance::Infinite > fin(1e300));
        assert_eq!(
            fin(2.0).max(ScaledDistance::Infinite),
            ScaledDistance::Infinite
        );
    }

    fn cube() -> (BoxDomain<f64>, Ball0Spec<f64>) {
        let d = BoxDomain::uniform(3, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.0; 3], 2).unwrap();
        (d, s)
    }

    #[test]
    fn ball0_membership() {
        let (d, s) = cube();
        assert!(in_ball0(&s, &d, &[0.0, 0.0, 0.0]).unwrap());
        assert!(in_ball0(&s, &d, &[1.0, -1.0, 0.0]).unwrap());
        assert!(!in_ball0(&s, &d, &[1.0, -1.0, 0.5]).unwrap());
        assert!(!in_ball0(&s, &d, &[1.5, 0.0, 0.0]).unwrap());
        assert!(in_ball0(&s, &d, &[1.0]).is_err());
    }

    #[test]
    fn ball0_respects_perturbable_set() {
        let d = BoxDomain::uniform(3, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::with_perturbable(&d, vec![0.0; 3], 1, vec![0]).unwrap();
        assert!(in_ball0(&s, &d, &[0.5, 0.0, 0.0]).unwrap());
        assert!(!in_ball0(&s, &d, &[0.0, 0.5, 0.0]).unwrap());
        assert!(!in_hull(&s, &d, &[0.0, 0.5, 0.0]).unwrap());
    }

    #[test]
    fn multi_channel_entry_counts_once() {
        let d = BoxDomain::uniform(2, 3, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5; 6], 1).unwrap();
        assert!(in_ball0(&s, &d, &[0.0, 1.0, 0.2, 0.5, 0.5, 0.5]).unwrap());
        assert!(!in_ball0(&s, &d, &[0.0, 0.5, 0.5, 0.5, 0.5, 0.9]).unwrap());
    }

    #[test]
    fn hull_membership() {
        let (d, s) = cube();
        assert!(in_hull(&s, &d, &[0.5, 0.5, 0.5]).unwrap());
        assert!(!in_hull(&s, &d, &[0.9, 0.9, 0.9]).unwrap());
        assert!(in_hull(&s, &d, &[0.0, 0.0, 0.0]).unwrap());
        // corner sits exactly on the boundary
        assert!(in_hull(&s, &d, &[1.0, -1.0, 0.0]).unwrap());
        // outside the box but inside the scaled l1-ball
        assert!(!in_hull(&s, &d, &[1.5, 0.0, 0.0]).unwrap());
        assert!(in_scaled_l1(&s, &d, &[1.5, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn hull_with_center_on_bound() {
        let d = BoxDomain::uniform(3, 1, -1.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.0, 1.0, -1.0], 2).unwrap();
        assert!(in_hull(&s, &d, &[0.0, -1.0, 1.0]).unwrap());
        assert!(!in_hull(&s, &d, &[0.5, -1.0, 1.0]).unwrap());
        assert!(!in_scaled_l1(&s, &d, &[0.0, 1.5, -1.0]).unwrap());
    }
}
