//! Reconstruct static infographic images as editable slides.
//!
//! The pipeline runs in stages: a vision-language backend produces a region
//! file ([`extractor`]), which is validated and repaired ([`schema`]); image
//! regions are cropped and uploaded ([`assets`]); pixel geometry is mapped to
//! slide points with font calibration ([`geometry`]); and a single
//! batch-update request list is built and executed ([`slides`]). The
//! [`eval`] module scores a predicted layout against ground truth.

pub mod assets;
pub mod config;
pub mod eval;
pub mod extractor;
pub mod geometry;
pub mod merge;
pub mod pipeline;
pub mod schema;
pub mod slides;

mod digest;
mod fsutil;

pub use digest::sha256_hex;
