//! Closed-form counts and bounds, and Monte Carlo estimates of the constants
//! they depend on.
//!
//! Integer-valued formulas are exact ([`BigUint`]); expected-value formulas are
//! `f64` and saturate to infinity instead of overflowing.

mod cgrad;
mod counts;
mod expected;

pub use cgrad::{estimate_cgrad_bound, single_unit_expected_scan, CgradEstimate, ScanRow};
pub use counts::{
    binomial, deep_grid_count, exact_pattern_count, generic_lower_bound, layer_positive_measure_count,
    max_regions_deep_bounds, max_regions_shallow, trivial_pattern_bound,
};
pub use expected::{
    c_bias_normal, db_distance_lower, db_expected_upper, db_pattern_bound, db_volume_upper, expected_regions_upper,
    volume_upper, zero_bias_upper, BoundParams,
};
pub use crate::init::maxout_he_std;

pub use num_bigint::BigUint;
