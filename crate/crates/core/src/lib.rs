//! Multi-object tracking with depth-aware association.
//!
//! A constant-velocity Kalman filter predicts every track; detections are
//! associated in two stages, first on a fused score of box/mask overlap,
//! motion direction, depth-histogram and appearance similarity, then on box
//! overlap alone for the low-confidence remainder. Tracks that reappear after
//! a gap are re-filtered along a virtual trajectory.
//!
//! The crate also ships the on-disk formats, a synthetic scene generator and
//! the evaluation metrics used to compare cue configurations.

pub mod ablation;
pub mod assignment;
pub mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod kalman;
pub mod metrics;
pub mod scoring;
pub mod simulator;
pub mod tracker;

pub use assignment::{solve, solve_with, AssignmentResult};
pub use error::{Error, Result};
pub use features::{DepthHistogram, DepthMap, EmaConfig, Embedding};
pub use geometry::{bbox_iou, mask_iou, BBox, CenterForm, Mask};
pub use io::bundle::{load_bundle, save_bundle, SeqInfo, SequenceBundle};
pub use io::mot::MotRow;
pub use kalman::{KfModel, KfParams, KfState, Observation};
pub use metrics::{evaluate, EvalReport, Summary};
pub use scoring::{Cue, ScoreMatrix, ScoreWeights};
pub use tracker::{run_sequence, Detection, MotionCue, Track, Tracker, TrackerConfig};
