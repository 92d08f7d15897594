//! Exact computation with form rings and general quadratic groups over small
//! finite commutative rings.

pub mod algebra;
pub mod cli;
pub mod config;
pub mod error;
pub mod form_param;
pub mod glue;
pub mod k1;
pub mod poly;
pub mod quad;
pub mod relations;
pub mod ring;
pub mod word;

pub use error::{Error, Result};
