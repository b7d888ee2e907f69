pub mod autograd;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{DType, Element, Shape4, Tensor4};
