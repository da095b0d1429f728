pub mod bessel;
pub mod discrete_ops;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod oracle;
mod precise;
pub mod samplers;
pub mod scalar;
pub mod symfunc;
pub mod verify;

pub use error::{Error, Result, Violation};
pub use model::{
    Chamber, ChamberConfig, Ext, GTPattern, GeomEnvironment, RateVector, RngContract,
    TriangularField,
};
pub use scalar::{Rational, Scalar};
