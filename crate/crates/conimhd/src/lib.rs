//! Conical ideal-MHD characteristic analysis on the unit sphere.
//!
//! The steady ideal-MHD equations with Powell source terms, restricted to
//! conically invariant solutions, reduce to an eight-equation first-order
//! system on the surface of the unit sphere. This crate evaluates that
//! system numerically:
//!
//! - [`geometry`]: charts on the sphere, metric/Christoffel data, projection
//!   of Cartesian tensors onto the surface, and the covariant-divergence
//!   variants the projected equations use.
//! - [`state`]: the eight dependent variables (ρ, v¹, v², V³, P, b¹, b², B³),
//!   the gas law, and derived scalars.
//! - [`residual`]: pointwise and grid-wide residuals of the eight projected
//!   equations on structured grids, plus the Powell divergence bracket.
//! - [`characteristics`]: the primitive-variable quasilinear matrices C¹, C²,
//!   the eight steady characteristic speeds, and hyperbolic/elliptic type
//!   classification.
//! - [`pseudotime`]: the pseudo-time spectrum (fast/slow magneto-acoustic,
//!   Alfvén, and advective speeds) in closed form and numerically.
//! - [`verify`]: in-repo dense and generalized eigensolvers used as oracles,
//!   manufactured free-stream fields, convergence-order measurement, and the
//!   verification suites behind `conimhd verify`.
//! - [`cli`]: the command-line front end.

// explicit index loops read better in tensor arithmetic
#![allow(clippy::needless_range_loop)]
// negated float comparisons (`!(x > 0.0)`) deliberately catch NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod cli;
pub mod geometry;
pub mod linalg;
pub mod pseudotime;
pub mod residual;
pub mod state;
pub mod verify;

pub use characteristics::{FlowType, QuasilinearPair, Spectrum};
pub use geometry::{Chart, GridSpec, MetricData};
pub use residual::{FieldGrid, ResidualVector};
pub use state::{GasLaw, SurfaceState};
pub use verify::{EigenResult, PencilValue};

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_types_are_shareable_across_threads() {
        assert_send_sync::<Chart>();
        assert_send_sync::<MetricData>();
        assert_send_sync::<FieldGrid>();
        assert_send_sync::<SurfaceState>();
        assert_send_sync::<GasLaw>();
        assert_send_sync::<Spectrum>();
    }
}
