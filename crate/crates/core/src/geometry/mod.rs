//! Membership, corner enumeration and volumes for l0-balls and their convex hulls.

mod corners;
mod distance;
mod domain;
mod volume;

pub use corners::{corner_count, corners, enumerate_corners, DEFAULT_CORNER_CAP};
pub use distance::{
    in_ball0, in_hull, in_scaled_l1, scaled_distance, scaled_distance_multi,
    scaled_distance_vector, ScaledDistance, ScaledDistanceVector,
};
pub use domain::{Ball0Spec, BoxDomain};
pub use volume::{
    hull_coefficient, irwin_hall_cdf, irwin_hall_series, multichannel_coefficient,
    multichannel_hull_fraction, multichannel_simplex_volume, relative_excess_volumes,
    simplex_volume, volume_hull, volume_hull_multichannel, volume_hull_multichannel_with_cap,
    volume_scaled_l1, volume_scaled_l1_multichannel, ExcessVolumes, DEFAULT_MULTI_INDEX_CAP,
};
