//! Knowledge-guided evapotranspiration upscaling.
//!
//! This crate holds the allocation-only core of the pipeline: reference-ET
//! physics, feature engineering over 30-day meteorology windows and MODIS
//! reflectance, a histogram-based gradient-boosted tree learner, grouped
//! cross-validation, and gridded inference. It builds without `std`; the
//! default `std` feature only enables thread-parallel training and
//! evaluation, which produce bit-identical results to the serial path.
//!
//! File formats, CSV ingestion and the command-line driver live in the
//! companion `et-upscale` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod grid;
pub mod physics;
pub mod synth;

mod par;

pub use dataset::{DatasetRow, DatasetTable, FluxObservation, JoinReport, SiteMeta};
pub use eval::{EvalReport, FoldPlan, Metrics};
pub use features::{FeatureSchema, FeatureVector, Igbp, MeteoWindow, ReflectanceSample};
pub use gbdt::{Ensemble, ImportanceReport, TrainConfig};
pub use grid::{EtGrid, EtUnit, GridSpec};
