//! N-functions, weights, modulars and weighted Luxemburg norms.

mod nfunction;
mod norm;
mod weight;

pub use nfunction::NFunction;
pub use norm::{
    composition_convexity_defect, delta2_ratio, down_dual_norm, gauge_norm, gauge_norm_with, modular,
    running_average, Delta2Estimate, GAUGE_REL_TOL,
};
pub use weight::Weight;
