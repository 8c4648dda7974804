//! Gesture-conditioned grasp selection.
//!
//! A pointing hand picks the target object, a grasp hand shows how to hold
//! it. The pipeline casts the pointing ray into the depth map, retrieves a
//! matching demonstration from a memory bank, transfers its contact point
//! onto the target by dense-feature matching, and picks the grasp candidate
//! that agrees with the hand's orientation.

pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod gesture;
pub mod grasp;
pub mod gripper;
pub mod io;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod pointing;
pub mod retrieval;
pub mod synth;
pub mod tensor;
pub mod transfer;

pub use error::{Error, Result};
