//! Tree-products of free groups: exact word problem, contracted conjugates,
//! leaf-homomorphism kernels with index rewriting, exponent matrices and
//! certificate-producing normal-closure search.

pub mod algorithm1;
pub mod amalgam;
pub mod closure;
pub mod eqsystems;
pub mod error;
pub mod leafops;
pub mod presentation;
#[cfg(feature = "testgen")]
pub mod testgen;
pub mod words;

pub use error::{Error, Result};
