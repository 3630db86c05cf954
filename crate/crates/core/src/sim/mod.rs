//! Desk-scale bilateral writing rig: a two-link planar arm with a prismatic
//! pen axis, per-joint acceleration control with disturbance and reaction
//! force observers, four-channel bilateral coupling, a scripted operator
//! hand and a compliant board that records ink.

pub mod arm;
pub mod contact;
pub mod control;
pub mod demo;
pub mod hand;
pub mod observer;
pub mod plan;
pub mod robot;

pub use arm::{forward_kinematics, inverse_kinematics, ArmConfig};
pub use contact::{contact_and_ink, Contact, ContactConfig};
pub use control::{bilateral_step, follower_step, Gains};
pub use demo::{run_demonstration, step_count, Episode, SimConfig};
pub use hand::{hand_force, HandConfig};
pub use observer::ObserverConfig;
pub use plan::{BoardRect, PenMode, PlanTiming, Stroke, StrokePlan};
pub use robot::{step_dynamics, ArmState, Measured, Robot};
