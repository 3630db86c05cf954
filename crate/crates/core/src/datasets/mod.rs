//! Glyph library and the preprocessing pipeline from 500 Hz episodes to
//! normalized 50 Hz training sequences.

pub mod dataset;
pub mod glyphs;
pub mod pipeline;

pub use dataset::{build_training_set, compute_norm_stats, Dataset, NnSequence, PipelineConfig, Split, TARGET_DIM};
pub use glyphs::Glyph;
pub use pipeline::{add_noise, downsample_shift, lowpass_filter, lpf_alpha, pad_sequences};
