//! File formats, ingestion, model persistence and the command-line driver
//! built on `et-upscale-core`.

pub mod cli;
pub mod config;
pub mod etgrid;
pub mod ingest;
pub mod model;
pub mod report;

