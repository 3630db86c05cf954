//! Minimal neural-network stack for the lower-layer policies.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod mat;
pub mod mlp;
pub mod norm;
pub mod params;
pub mod policy;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use loss::{sequence_loss, sequence_loss_and_grads, Sequence};
pub use lstm::{lstm_forward, LstmHidden, LstmParams};
pub use mat::Mat;
pub use mlp::{mlp_forward, Dense, MlpParams};
pub use norm::{denormalize, normalize, Moments, NormStats};
pub use params::{Arch, ModelKind, Parameters, PolicyParams, DEFAULT_HIDDEN};
pub use policy::PolicyRecord;
pub use train::{fit, fit_from, EpochRecord, TrainHyper, TrainLog};
