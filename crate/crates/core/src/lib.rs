//! Unsupervised segmentation of overlapping cervical cells in multi-focal
//! microscopy stacks.
//!
//! The crate fuses a focal stack into one extended-depth-of-field image,
//! extracts cell clumps with morphological plateau analysis, detects nuclei
//! per clump with a prior-weighted Otsu threshold, and grows one cytoplasm
//! contour per nucleus with distance-regularized level-set evolution. A
//! deterministic synthetic-specimen generator and a Dice/TPR/FPR evaluation
//! harness support end-to-end validation without real microscopy data.

pub mod edf;
pub mod error;
pub mod filter;
pub mod io;
pub mod levelset;
pub mod metrics;
pub mod morph;
pub mod pipeline;
pub mod raster;
pub mod synthetic;
pub mod threshold;

pub use error::{Error, Result};
pub use raster::{BinaryMask, FloatField, GrayImage, LabelMap};
