//! Data-driven police beat design: atomize a city, interpolate census data,
//! estimate and forecast workload, and search for balanced contiguous beats.

pub mod calendar;
pub mod error;
pub mod fixtures;
pub mod forecast;
pub mod geo;
pub mod ingest;
pub mod interp;
pub mod mip;
pub mod optimize;
pub mod partition;
pub mod report;
pub mod workload;

pub use error::{Error, Result};
