//! Numerical building blocks shared by the model modules.

mod diff;
mod interp;
mod ode;
mod quad;
mod roots;
mod sum;

pub use diff::{forward_derivative, ridders_derivative};
pub use interp::{pchip_slopes, Curve};
pub use ode::{dopri5, OdeError};
pub use quad::{
    gauss_legendre, integrate, integrate_to_horizon, HorizonIntegral, QuadOptions, QuadResult,
};
pub use roots::{bisect, brent, RootError};
pub use sum::NeumaierSum;

pub(crate) use interp::hermite_value;
pub(crate) use quad::gauss_legendre_points;
