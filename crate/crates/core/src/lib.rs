#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cech;
pub mod cloud;
pub mod density;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod homology;
pub mod limits;
pub mod regimes;
mod quadrature;
pub mod rng;
pub mod tail;

pub use cloud::PointCloud;
pub use error::{Error, Result};
