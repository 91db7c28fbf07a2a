//! Sliding-window compressed DMD for streaming motion detection,
//! background/foreground separation and threshold tuning.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod background;
pub mod detection;
pub mod dmd;
pub mod error;
pub mod eval;
pub mod frames;
pub mod linalg;
pub mod parallel;
pub mod pipeline;
pub mod synth;
pub mod video_io;
pub mod window;
