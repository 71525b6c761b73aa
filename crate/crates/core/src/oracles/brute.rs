use crate::error::{Error, Result};
use crate::geometry::{corner_count, corners, Ball0Spec, BoxDomain};
use crate::scalar::Scalar;

/// Exact minimum of `weights . y + bias` over the l0-ball, found by
/// evaluating every corner-pattern point.
pub fn min_linear_over_ball0<T: Scalar>(
    weights: &[T],
    bias: &T,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    cap: u128,
) -> Result<(T, Vec<T>)> {
    domain.check_point(weights)?;
    let count = corner_count(spec, domain);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let eval = |y: &[T]| {
        weights
            .iter()
            .zip(y)
            .fold(bias.clone(), |acc, (w, v)| acc + w.clone() * v.clone())
    };
    let mut best: Option<(T, Vec<T>)> = None;
    for y in corners(spec, domain) {
        let v = eval(&y);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, y));
        }
    }
    Ok(best.expect("the center is always a corner"))
}

/// Maximum counterpart of [`min_linear_over_ball0`].
pub fn max_linear_over_ball0<T: Scalar>(
    weights: &[T],
    bias: &T,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    cap: u128,
) -> Result<(T, Vec<T>)> {
    let neg: Vec<T> = weights.iter().map(|w| -w.clone()).collect();
    let (v, y) = min_linear_over_ball0(&neg, &-bias.clone(), spec, domain, cap)?;
    Ok((-v, y))
}
