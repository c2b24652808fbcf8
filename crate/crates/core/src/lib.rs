pub mod cli;
pub mod decomp;
pub mod error;
pub mod grad;
pub mod io;
pub mod linalg;
pub mod network;
pub mod ops;
pub mod prob;
pub mod random;
pub mod tensor;
pub mod tt;

pub use error::{Error, Result};
pub use network::{Bindings, NetworkSpec, TensorNetwork};
pub use tensor::{ModeSet, Tensor};
