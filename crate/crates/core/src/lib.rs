//! Squeezed quantum states on a finite interval `[-l, l]`: constructions in
//! the plane-wave basis, moment evaluation with certified truncation, checks
//! of the explicit bounds, and the infinite-interval and semiclassical limits.

pub mod bounds;
pub mod cli;
pub mod ddouble;
pub mod domain;
pub mod error;
pub mod families;
pub mod limits;
pub mod moments;
pub mod quad;
pub mod report;
pub mod specfun;

pub use domain::{ClassicalTarget, IntervalGeometry, MomentReport, SpectralSeries, StateDescriptor, TailBound};
pub use error::{Error, Result};
