//! Exact distances, balls and volumes in smocked metric spaces, and
//! quantitative convergence bounds of their rescalings to a normed plane.
//!
//! A *smocking pattern* is a family of disjoint compact stitches in the plane;
//! the smocked pseudometric lets a path cross any stitch for free.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convergence;
mod error;
pub mod geometry;
pub mod metric;
pub mod norm;
pub mod pattern;
pub mod raster;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{AxisBox, Component, Point, Segment};
pub use metric::{smocked_distance, PathWitness};
pub use norm::NormSpec;
pub use pattern::PatternSpec;
