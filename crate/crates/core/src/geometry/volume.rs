//! Closed-form volumes of the scaled l1-ball and of the l0-ball hull.
//!
//! Nothing here reads the ball's center: the volumes depend on the domain and
//! the radius only. Factorial ratios are evaluated as running products of
//! small ratios so no intermediate overflows, and alternating sums are
//! compensated. The hull fractions are alternating series that cancel badly
//! for large `k`, so inexact scalars evaluate them in rationals and round once.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::scalar::{CompensatedSum, Scalar};

/// Default cap on the `d^r` channel-index tuples in the multi-channel sum.
pub const DEFAULT_MULTI_INDEX_CAP: u128 = 1_000_000;

fn lit<T: Scalar>(n: usize) -> T {
    T::from_count(n)
}

fn binomial<T: Scalar>(n: usize, r: usize) -> T {
    debug_assert!(r <= n);
    let r = r.min(n - r);
    (0..r).fold(T::one(), |acc, i| acc * lit::<T>(n - i) / lit::<T>(i + 1))
}

/// Volume of `{z >= 0 : sum z <= t}` in `k` dimensions, `t^k / k!`.
pub fn simplex_volume<T: Scalar>(k: usize, t: usize) -> T {
    let t = lit::<T>(t);
    (1..=k).fold(T::one(), |acc, i| acc * t.clone() / lit::<T>(i))
}

/// `c_{r,k,t} = (-1)^r C(k,r) (1 - r/t)^k`.
pub fn hull_coefficient<T: Scalar>(r: usize, k: usize, t: usize) -> T {
    let ratio = lit::<T>(t - r) / lit::<T>(t);
    let c = binomial::<T>(k, r) * num_traits::pow(ratio, k);
    if r % 2 == 1 {
        -c
    } else {
        c
    }
}

/// Irwin-Hall CDF at integer `t`: the fraction of `[0,1]^k` with coordinate sum at most `t`.
///
/// Past the midpoint the symmetry `F(t) = 1 - F(k - t)` halves the series.
pub fn irwin_hall_cdf<T: Scalar>(k: usize, t: usize) -> T {
    if !T::EXACT {
        return T::from_real(irwin_hall_cdf::<BigRational>(k, t).to_real());
    }
    if t >= k {
        return T::one();
    }
    if 2 * t > k {
        return T::one() - irwin_hall_series(k, k - t);
    }
    irwin_hall_series(k, t)
}

/// The alternating series behind [`irwin_hall_cdf`], evaluated even where the
/// CDF is trivially 1 (`t = k`).
pub fn irwin_hall_series<T: Scalar>(k: usize, t: usize) -> T {
    let mut sum = CompensatedSum::default();
    for r in 0..t.min(k + 1) {
        sum.add(hull_coefficient::<T>(r, k, t));
    }
    simplex_volume::<T>(k, t) * sum.value()
}

fn require_single_channel<T: Scalar>(domain: &BoxDomain<T>) -> Result<()> {
    if domain.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-channel formula applied to a {}-channel domain",
            domain.channels()
        )));
    }
    Ok(())
}

fn require_radius(t: usize, k: usize) -> Result<()> {
    if t == 0 || t > k {
        return Err(Error::InvalidArgument(format!(
            "radius {t} must lie in [1, {k}]"
        )));
    }
    Ok(())
}

/// `vol(D) t^k / k!`.
pub fn volume_scaled_l1<T: Scalar>(domain: &BoxDomain<T>, t: usize) -> Result<T> {
    require_single_channel(domain)?;
    if t == 0 {
        return Err(Error::InvalidArgument("radius must be at least 1".into()));
    }
    Ok(domain.volume() * simplex_volume::<T>(domain.entries(), t))
}

/// Volume of the hull of the l0-ball: `vol(D)` times the Irwin-Hall CDF at `t`.
pub fn volume_hull<T: Scalar>(domain: &BoxDomain<T>, t: usize) -> Result<T> {
    require_single_channel(domain)?;
    require_radius(t, domain.entries())?;
    Ok(domain.volume() * irwin_hall_cdf::<T>(domain.entries(), t))
}

/// `t^{dk} (d!)^k / (dk)!`, the channel-max simplex volume.
pub fn multichannel_simplex_volume<T: Scalar>(k: usize, d: usize, t: usize) -> T {
    let t_pow_d = num_traits::pow(lit::<T>(t), d);
    let d_fact = (1..=d).fold(T::one(), |acc, m| acc * lit::<T>(m));
    (1..=k).fold(T::one(), |acc, i| {
        let block = (1..=d).fold(T::one(), |p, m| p * lit::<T>(d * (i - 1) + m));
        acc * t_pow_d.clone() * d_fact.clone() / block
    })
}

/// Multi-channel scaled l1-ball volume, `vol(D) t^{dk} (d!)^k / (dk)!`.
pub fn volume_scaled_l1_multichannel<T: Scalar>(domain: &BoxDomain<T>, t: usize) -> Result<T> {
    if t == 0 {
        return Err(Error::InvalidArgument("radius must be at least 1".into()));
    }
    Ok(domain.volume() * multichannel_simplex_volume::<T>(domain.entries(), domain.channels(), t))
}

/// `c_{r,k,d,t}`: the inclusion-exclusion correction for `r` entries forced past 1.
pub fn multichannel_coefficient<T: Scalar>(
    r: usize,
    k: usize,
    d: usize,
    t: usize,
    cap: u128,
) -> Result<T> {
    let tuples = (d as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if tuples > cap {
        return Err(Error::CapExceeded { count: tuples, cap });
    }
    let inv_fact: Vec<T> = {
        let mut f = vec![T::one(); d + 1];
        for m in 1..=d {
            f[m] = f[m - 1].clone() / lit::<T>(m);
        }
        f
    };
    let decay = num_traits::pow(lit::<T>(t - r) / lit::<T>(t), d * k);
    let gap = lit::<T>(t - r);
    let mut sum = CompensatedSum::default();
    // odometer over (m_1..m_r) in [1, d]^r
    let mut m = vec![1usize; r];
    loop {
        let m_sum: usize = m.iter().sum();
        // (dk)! / (d(k-r) + sum m)! * (t-r)^{sum m - dr}
        let span = d * r - m_sum;
        let mut term = decay.clone();
        for j in 0..span {
            term = term * lit::<T>(d * k - j) / gap.clone();
        }
        for &mi in &m {
            term *= inv_fact[d - mi].clone();
        }
        sum.add(term);

        let mut pos = 0;
        while pos < r && m[pos] == d {
            m[pos] = 1;
            pos += 1;
        }
        if pos == r {
            break;
        }
        m[pos] += 1;
    }
    let c = binomial::<T>(k, r) * sum.value();
    Ok(if r % 2 == 1 { -c } else { c })
}

/// Volume of the hull of a multi-channel l0-ball (channel-max scaled l1-ball
/// intersected with the domain).
pub fn volume_hull_multichannel<T: Scalar>(domain: &BoxDomain<T>, t: usize) -> Result<T> {
    volume_hull_multichannel_with_cap(domain, t, DEFAULT_MULTI_INDEX_CAP)
}

pub fn volume_hull_multichannel_with_cap<T: Scalar>(
    domain: &BoxDomain<T>,
    t: usize,
    cap: u128,
) -> Result<T> {
    let (k, d) = (domain.entries(), domain.channels());
    require_radius(t, k)?;
    if t == k {
        return Ok(domain.volume());
    }
    Ok(domain.volume() * multichannel_hull_fraction(k, d, t, cap)?)
}

/// Fraction of the unit box `([0,1]^d)^k` whose channel maxima sum to at most
/// `t`, evaluated by the inclusion-exclusion series for every `t` (no
/// shortcut at `t >= k`).
pub fn multichannel_hull_fraction<T: Scalar>(k: usize, d: usize, t: usize, cap: u128) -> Result<T> {
    if t == 0 {
        return Err(Error::InvalidArgument("radius must be at least 1".into()));
    }
    if !T::EXACT {
        let exact = multichannel_hull_fraction::<BigRational>(k, d, t, cap)?;
        return Ok(T::from_real(exact.to_real()));
    }
    let mut sum = CompensatedSum::default();
    sum.add(T::one());
    for r in 1..t.min(k + 1) {
        sum.add(multichannel_coefficient::<T>(r, k, d, t, cap)?);
    }
    Ok(multichannel_simplex_volume::<T>(k, d, t) * sum.value())
}

/// Relative excess volumes of the scaled l1-ball and of the domain, both
/// measured against the hull.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessVolumes<T> {
    pub excess_l1: T,
    pub excess_box: T,
}

pub fn relative_excess_volumes<T: Scalar>(
    domain: &BoxDomain<T>,
    t: usize,
) -> Result<ExcessVolumes<T>> {
    require_single_channel(domain)?;
    let k = domain.entries();
    require_radius(t, k)?;
    let mut corr = CompensatedSum::default();
    for r in 1..t {
        corr.add(hull_coefficient::<T>(r, k, t));
    }
    let corr = corr.value();
    let denom = T::one() + corr.clone();
    // k! / t^k
    let inv_simplex = (1..=k).fold(T::one(), |acc, i| acc * lit::<T>(i) / lit::<T>(t));
    Ok(ExcessVolumes {
        excess_l1: -corr.clone() / denom.clone(),
        excess_box: (inv_simplex - denom.clone()) / denom,
    })
}
