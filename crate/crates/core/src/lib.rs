//! Desk-scale laboratory for bilateral-control-based imitation learning.
//!
//! A two-rate hierarchical policy drives a simulated 3-joint writing arm:
//! a stored upper-layer replay supplies follower references at 20 ms, a
//! learned lower layer (MLP or LSTM) predicts the next follower and leader
//! states, and the predicted leader state is used as the follower's command
//! under a 500 Hz bilateral control law. An optional error-feedback path adds
//! the discrepancy between the one-step reference and the lower layer's last
//! prediction onto the ten-step reference before it enters the network.
//!
//! Module map:
//!
//! - [`nn`]: matrices, MLP/LSTM policies with exact gradients, Adam, training.
//! - [`sim`]: arm plant, observers, bilateral control, scripted hand, ink.
//! - [`datasets`]: glyph library and the episode → training-sequence pipeline.
//! - [`hierarchy`]: upper replay, error feedback and the autonomous rollout.
//! - [`eval`]: rasterization, IoU, angular error, aggregation and reports.

pub mod container;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod hierarchy;
pub mod nn;
pub mod seed;
pub mod sim;
pub mod state;

pub use error::{Error, Result};
pub use state::{FeatureSet, JointVec, StateVector, JOINTS, STATE_DIM};
