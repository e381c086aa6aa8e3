//! Work-efficient parallel non-maximum suppression.
//!
//! Detections are clustered by building a bit-packed boolean suppression
//! matrix in an embarrassingly parallel map phase, then AND-reducing each row
//! into a survivor mask. See [`engine`] for the pipeline, [`oracles`] for the
//! sequential reference implementations it is checked against, and
//! [`workload`] for the seeded synthetic frame generator used by the
//! benchmark harness.

pub mod bench;
pub mod detections;
pub mod engine;
pub mod error;
pub mod oracles;
pub mod overlap;
pub mod plot;
pub mod workload;

pub use detections::{Detection, DetectionVector, Format, NmsResult};
pub use engine::{
    map_phase, mask_survivors, reduce_phase, run_nms, Engine, NmsConfig, SuppressionMatrix,
    SurvivorMask, TieBreak, WorkCounters,
};
pub use error::{NmsError, Result};
