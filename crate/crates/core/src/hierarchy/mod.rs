//! Hierarchical execution: a replayed upper layer, a learned lower layer
//! with optional error feedback, and the follower's control loop.

pub mod lower;
pub mod replay;
pub mod rollout;

pub use lower::{LowerPolicy, NetPolicy, OracleStub};
pub use replay::{upper_outputs, UpperReplay};
pub use rollout::{feedback_combine, lower_step, run_autonomous, FeedbackSpace, LowerOutput, RolloutConfig, RolloutLog};
