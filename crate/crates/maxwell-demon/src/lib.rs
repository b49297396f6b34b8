pub mod classical;
pub mod dilation;
pub mod exec;
pub mod instruments;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod scenarios;
pub mod states;
pub mod tol;

pub use linalg::{C64, CMatrix, CVector};
