//! Step densities and the scalar / derived-form kernels built from them.

mod density;
mod derived;
mod scalar;

pub use density::{rho_tilde, sample_tilted_sech, DensityKind, StepDensity, TabulatedDensity};
pub use derived::{derived, DerivedKernel};
pub use scalar::{
    pushforward, scalar_bulk, scalar_edge, scalar_exit_maximal, scalar_exit_poisson, scalar_gps,
    scalar_tabulated, scalar_tabulated_csv, BulkKernel, EdgeKernel, ExitIntensity, ExitKind,
    ExitPoissonKernel, MonotoneMap, PushforwardKernel, ScalarKernel, TabulatedKernel,
};
