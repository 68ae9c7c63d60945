//! Library surface of the experiment CLI, exposed so integration and
//! acceptance tests can drive pipelines in-process.

pub mod config;
pub mod elrun;
pub mod experiment;
pub mod svg;
