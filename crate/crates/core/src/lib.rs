pub mod basis;
pub mod bell;
pub mod bounds;
pub mod designer;
pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod function;
pub mod jet;
pub mod quadrature;
pub mod seminorm;
pub mod spline;
pub mod transform;

pub use error::{Error, Result};
