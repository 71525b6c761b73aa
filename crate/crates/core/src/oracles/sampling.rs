use rand::seq::index;
use rand::Rng;

use crate::geometry::{Ball0Spec, BoxDomain};
use crate::scalar::Scalar;
use crate::seed::rng_from;

/// Random member of the l0-ball: a size uniform in `0..=t`, then a uniform
/// subset of that size, then uniform values for every channel of the subset.
pub fn sample_in_ball0<T: Scalar, R: Rng + ?Sized>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    rng: &mut R,
) -> Vec<T> {
    let k = spec.perturbable().len();
    let size = rng.random_range(0..=spec.radius());
    let mut y = spec.center().to_vec();
    for slot in index::sample(rng, k, size) {
        let entry = spec.perturbable()[slot];
        for p in domain.entry_range(entry) {
            y[p] = uniform_in(&domain.lower()[p], &domain.upper()[p], rng);
        }
    }
    y
}

pub fn sample_in_ball0_seeded<T: Scalar>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    seed: u64,
) -> Vec<T> {
    sample_in_ball0(spec, domain, &mut rng_from(seed))
}

/// Uniform point of the box restricted to the perturbable set; every other
/// entry stays at the center.
pub fn sample_in_restricted_box<T: Scalar, R: Rng + ?Sized>(
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    rng: &mut R,
) -> Vec<T> {
    let mut y = spec.center().to_vec();
    for &entry in spec.perturbable() {
        for p in domain.entry_range(entry) {
            y[p] = uniform_in(&domain.lower()[p], &domain.upper()[p], rng);
        }
    }
    y
}

fn uniform_in<T: Scalar, R: Rng + ?Sized>(a: &T, b: &T, rng: &mut R) -> T {
    let u: f64 = rng.random();
    let y = a.clone() + (b.clone() - a.clone()) * T::from_real(u);
    // rounding can step past the upper bound
    if &y > b {
        b.clone()
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::in_ball0;
    use crate::seed::derive_seed;

    #[test]
    fn samples_are_members() {
        let d = BoxDomain::uniform(5, 2, -1.0, 1.0).unwrap();
        let s = Ball0Spec::with_perturbable(&d, vec![0.25; 10], 2, vec![0, 2, 3]).unwrap();
        let mut rng = rng_from(3);
        for _ in 0..100_000 {
            let y = sample_in_ball0(&s, &d, &mut rng);
            assert!(in_ball0(&s, &d, &y).unwrap());
        }
    }

    #[test]
    fn seed_determinism() {
        let d = BoxDomain::uniform(4, 1, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5; 4], 2).unwrap();
        for i in 0..20 {
            let seed = derive_seed(11, i);
            assert_eq!(
                sample_in_ball0_seeded(&s, &d, seed),
                sample_in_ball0_seeded(&s, &d, seed)
            );
        }
    }

    #[test]
    fn full_radius_reaches_every_entry() {
        let d = BoxDomain::uniform(3, 1, 0.0, 1.0).unwrap();
        let s = Ball0Spec::new(&d, vec![0.5; 3], 3).unwrap();
        let mut rng = rng_from(5);
        let all_moved =
            (0..2000).any(|_| sample_in_ball0(&s, &d, &mut rng).iter().all(|&v| v != 0.5));
        assert!(all_moved);
    }
}
