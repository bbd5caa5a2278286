//! Gaze-trajectory analytics for classifying participants from eye movements.
//!
//! The pipeline runs Savitzky-Golay smoothing, angular kinematics, I-VT
//! segmentation, per-channel feature extraction with ANOVA ranking, and
//! separate fixation and saccade classifiers whose probabilities are fused
//! with weights tuned by Nelder-Mead. The evaluation harness repeats
//! balanced train/test splits and reports accuracy with SD and SEM.

pub mod classifiers;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod rng;
pub mod segmentation;
pub mod signal;

pub use error::{GazeError, Result};
