//! Hand-rolled numerical kernels shared by the solvers.

pub mod hyper;
pub mod newton;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod tridiag;
