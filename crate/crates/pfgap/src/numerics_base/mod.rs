//! Special functions, quadrature, grid convolution and antisymmetric linear algebra.

mod grid;
mod pfaffian;
mod quadrature;
pub mod special;

pub use grid::{grid_convolve, Convolver, UniformGridFn};
pub use pfaffian::{determinant, log_det_f64, log_pfaffian, pfaffian, AntisymMatrix};
pub use quadrature::{
    composite_gauss_legendre, gauss_legendre, gregory, integrate, integrate_intervals,
    integrate_to_infinity, make_grid, GkOptions, Integral, QuadratureGrid, Rule,
};
pub use special::{polylog, special, SpecialFn};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Scalar type accepted by the generic numerical core (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Widening conversion used when a computation is carried out in `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
