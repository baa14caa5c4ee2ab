#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
