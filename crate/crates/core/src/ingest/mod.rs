//! Input parsing: calls for service and census blocks, plus a synthetic
//! instance generator.

pub mod calls;
pub mod census;
pub mod synthetic;
