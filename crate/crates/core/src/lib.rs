//! Joint refinement of dense correspondence and person segmentation
//! for dual-lens image pairs.
//!
//! The pipeline estimates an initial Horn-Schunck flow, partitions it
//! into regional correspondence candidates, and then runs alternating
//! mean-field inference on a joint fully connected CRF over candidate
//! selection and foreground/background labels.

pub mod error;
pub mod flow;
pub mod image;
pub mod io;
pub mod hs;
pub mod metrics;
pub mod plane;
pub mod pullpush;
pub mod regional;
pub mod synth;
pub mod variational;
pub mod wmf;

pub use error::{Error, Result};
pub use flow::FlowField;
pub use image::{Image, Mask, ScoreMap};
