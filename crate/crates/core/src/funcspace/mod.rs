//! Function representations, norms, seminorm quadrature, rearrangement and
//! the explicit test-function constructions.

pub(crate) mod engine;
pub mod directional;
pub mod line;
pub mod moser;
pub mod norms;
pub mod profile;
pub mod radial;
pub mod rearrange;
pub mod transforms;

pub use directional::{direct_seminorm_2d, directional_seminorm, Grid2D};
pub use line::{gagliardo_1d, gagliardo_1d_estimate, SeminormEstimate};
pub use moser::{
    moser_profile, moser_profile_with, radial_decay_check, split_radius, truncation_split,
    DecayReport, SplitReport,
};
pub use norms::{lq_norm, lq_norm_1d, lq_norm_pow, lq_norm_pow_1d};
pub use profile::{DiagonalMode, PiecewiseFunction1D, QuadratureSpec, RadialProfile};
pub use radial::{gagliardo_profile, gagliardo_radial, gagliardo_radial_estimate, RadialKernel};
pub use rearrange::{rearrange, Rearrange};
pub use transforms::{dilate, translate_dilate, Rescale};
