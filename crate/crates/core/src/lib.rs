pub mod alpha;
pub mod blocks;
pub mod cache;
pub mod collective;
pub mod entanglement;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod liouvillian;
pub mod ode;
pub mod optics;
pub mod quadrature;
pub mod rates;
pub mod scenario;
pub mod steady;
pub mod units;

pub use error::{Error, Result};
