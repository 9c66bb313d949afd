//! Gap probabilities of Pfaffian point processes with derived-form kernels.
//!
//! The crate is organised in layers:
//!
//! * [`numerics_base`] — Pfaffians, special functions, quadrature and grid convolution.
//! * [`kernels`] — step densities and the scalar / derived-form kernels built from them.
//! * [`asymptotics`] — the coefficients κ₁(p), κ₂(p) of `log Pf = −κ₁L + κ₂ + o(1)`
//!   computed by convolution series, Fourier integrals and closed forms.
//! * [`fredholm`] — direct Nyström evaluation of Fredholm determinants and Pfaffians.
//! * [`stochastic`] — random-walk identities, quadrature oracles and particle simulations.
//!
//! The linear-algebra and quadrature core is generic over the scalar type through
//! [`numerics_base::Real`]; the analysis layers above it work in `f64`.

pub mod asymptotics;
pub mod error;
pub mod fredholm;
pub mod kernels;
pub mod numerics_base;
pub mod stochastic;

pub use error::{Error, Result};

/// Double-precision antisymmetric matrix.
pub type AntisymMatrixF64 = numerics_base::AntisymMatrix<f64>;
/// Single-precision antisymmetric matrix.
pub type AntisymMatrixF32 = numerics_base::AntisymMatrix<f32>;
/// Double-precision quadrature grid.
pub type QuadratureGridF64 = numerics_base::QuadratureGrid<f64>;
/// Single-precision quadrature grid.
pub type QuadratureGridF32 = numerics_base::QuadratureGrid<f32>;
/// Double-precision uniformly sampled function.
pub type UniformGridFnF64 = numerics_base::UniformGridFn<f64>;
/// Single-precision uniformly sampled function.
pub type UniformGridFnF32 = numerics_base::UniformGridFn<f32>;
