//! Brute-force and randomized reference implementations.
//!
//! These stay independent of the propagation code so they can check it.

mod brute;
mod hull_distance;
mod montecarlo;
mod sampling;

pub use brute::{max_linear_over_ball0, min_linear_over_ball0};
pub use hull_distance::{
    hull_distance_fw, DEFAULT_FW_MAX_ITERS, DEFAULT_FW_TOL, HULL_MEMBER_THRESHOLD,
};
pub use montecarlo::{mc_volume, McEstimate};
pub use sampling::{sample_in_ball0, sample_in_ball0_seeded, sample_in_restricted_box};
