//! Emotion recognition from four-channel headband EEG.
//!
//! Stages: [`ingest`] (recording and manifest formats), [`preprocess`]
//! (imputation, Savitzky-Golay smoothing, Butterworth band split),
//! [`features`] (34-dimensional spectral/asymmetry vectors), [`classifier`]
//! (kernel SVMs trained by SMO, one-vs-one voting), [`eval`] (stratified
//! split, k-fold cross-validation, reports) and [`synth`] (seeded synthetic
//! sessions). [`pipeline`] chains them over files.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod types;

pub use error::{EntryError, Error, Result};
pub use types::{
    BandDefinition, BandName, ChannelId, Dataset, EmotionLabel, FeatureRow, FeatureVector,
    Provenance, Recording, Trial, BANDS, BAND_COUNT, CHANNEL_COUNT, FEATURE_COUNT, LABEL_COUNT,
};
