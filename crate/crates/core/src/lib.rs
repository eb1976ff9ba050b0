//! Fall precognition from 2D body keypoint sequences.
//!
//! The crate turns per-frame skeletons into translation- and scale-free
//! direction vectors, forecasts future poses with a packed LSTM
//! encoder/decoder, and classifies forecast poses as fall / no fall.
//! Training, evaluation and a synthetic motion corpus are included so the
//! whole pipeline can be exercised without external video data.

pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod model_io;
pub mod nn;
pub mod pipeline;
pub mod predictor;
pub mod report;
pub mod skeleton;
pub mod vectorize;

pub use error::{Error, Result};
