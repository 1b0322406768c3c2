extern crate blas_src;

pub mod engine;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod netgraph;
pub mod ordering;
pub mod tensor;
pub mod treeapprox;

pub use error::{Error, Result};
pub use tensor::{contract, contract_all, fresh_label, FlopCounter, Mode, Tensor};
