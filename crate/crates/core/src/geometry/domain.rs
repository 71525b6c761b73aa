use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned input space: one `[lower, upper]` interval per entry and channel.
///
/// Values are stored entry-major, so channel `j` of entry `i` lives at
/// `i * channels + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    channels: usize,
}

impl<T: Scalar> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, channels: usize) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidDomain(
                "channel count must be at least 1".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::ShapeMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() || !lower.len().is_multiple_of(channels) {
            return Err(Error::InvalidDomain(format!(
                "{} bounds do not split into a positive number of entries with {channels} channels",
                lower.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidDomain(format!(
                "lower bound {} exceeds upper bound {} at index {i}",
                lower[i], upper[i]
            )));
        }
        Ok(Self {
            lower,
            upper,
            channels,
        })
    }

    /// `[lower, upper]^(entries * channels)`.
    pub fn uniform(entries: usize, channels: usize, lower: T, upper: T) -> Result<Self> {
        let n = entries * channels;
        Self::new(vec![lower; n], vec![upper; n], channels)
    }

    pub fn entries(&self) -> usize {
        self.lower.len() / self.channels
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Total number of scalar coordinates (`entries * channels`).
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn index(&self, entry: usize, channel: usize) -> usize {
        entry * self.channels + channel
    }

    /// Flat coordinate range belonging to one entry.
    pub fn entry_range(&self, entry: usize) -> std::ops::Range<usize> {
        entry * self.channels..(entry + 1) * self.channels
    }

    pub fn contains(&self, y: &[T]) -> bool {
        y.len() == self.dim()
            && y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn volume(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(T::one(), |acc, (a, b)| acc * (b.clone() - a.clone()))
    }

    pub fn check_point(&self, y: &[T]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BoxDomain<U> {
        BoxDomain {
            lower: self.lower.iter().map(&f).collect(),
            upper: self.upper.iter().map(&f).collect(),
            channels: self.channels,
        }
    }
}

/// An l0-ball: every point of the domain that differs from `center` in at
/// most `radius` entries, all of them drawn from the perturbable set.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball0Spec<T> {
    center: Vec<T>,
    radius: usize,
    perturbable: Vec<usize>,
    mask: Vec<bool>,
}

impl<T: Scalar> Ball0Spec<T> {
    /// Ball over every entry of the domain.
    pub fn new(domain: &BoxDomain<T>, center: Vec<T>, radius: usize) -> Result<Self> {
        let all = (0..domain.entries()).collect();
        Self::with_perturbable(domain, center, radius, all)
    }

    pub fn with_perturbable(
        domain: &BoxDomain<T>,
        center: Vec<T>,
        radius: usize,
        mut perturbable: Vec<usize>,
    ) -> Result<Self> {
        domain.check_point(&center)?;
        if !domain.contains(&center) {
            return Err(Error::InvalidSpec("center lies outside the domain".into()));
        }
        perturbable.sort_unstable();
        perturbable.dedup();
        if let Some(&bad) = perturbable.iter().find(|&&i| i >= domain.entries()) {
            return Err(Error::InvalidSpec(format!(
                "perturbable entry {bad} out of range (domain has {} entries)",
                domain.entries()
            )));
        }
        if radius == 0 || radius > perturbable.len() {
            return Err(Error::InvalidSpec(format!(
                "radius {radius} must lie in [1, {}]",
                perturbable.len()
            )));
        }
        let mut mask = vec![false; domain.entries()];
        for &i in &perturbable {
            mask[i] = true;
        }
        Ok(Self {
            center,
            radius,
            perturbable,
            mask,
        })
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Sorted perturbable entry indices.
    pub fn perturbable(&self) -> &[usize] {
        &self.perturbable
    }

    pub fn is_perturbable(&self, entry: usize) -> bool {
        self.mask.get(entry).copied().unwrap_or(false)
    }

    /// Same center and set, different radius.
    pub fn with_radius(&self, radius: usize) -> Result<Self> {
        if radius == 0 || radius > self.perturbable.len() {
            return Err(Error::InvalidSpec(format!(
                "radius {radius} must lie in [1, {}]",
                self.perturbable.len()
            )));
        }
        Ok(Self {
            radius,
            ..self.clone()
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Ball0Spec<U> {
        Ball0Spec {
            center: self.center.iter().map(f).collect(),
            radius: self.radius,
            perturbable: self.perturbable.clone(),
            mask: self.mask.clone(),
        }
    }
}
