//! Econometric time-series toolkit for measuring how policy events relate to
//! a wealth distribution.
//!
//! The crate covers the whole batch: stationarity transforms and monthly
//! alignment ([`timeseries`]), statistical kernels ([`stats`]), Engle-Granger
//! screening ([`cointegration`]), regression cleaning ([`cleaning`]), the two
//! Granger-causality variants ([`granger`]), BIP event signals ([`events`])
//! and the end-to-end [`pipeline`] with its report writers.

pub mod cleaning;
pub mod cointegration;
pub mod error;
pub mod events;
pub mod granger;
pub mod pipeline;
pub mod stats;
pub mod timeseries;

pub use cleaning::{CleanedSeries, FilterMode, FilteredModel};
pub use cointegration::{CointegrationMatrix, CointegrationResult};
pub use error::{Error, Result};
pub use events::{BipRecord, BipSet, EventSignal, Registry};
pub use granger::{
    CausalityMatrix, FailureReason, GrangerConfig, GrangerVariant, GrangerVerdict,
};
pub use pipeline::{PipelineConfig, PipelineError, PipelineReport, Stage};
pub use stats::{AdfResult, Design, FTestResult, RegressionFit};
pub use timeseries::{Frequency, Panel, TimeSeries, Transform, TransformOrder};
