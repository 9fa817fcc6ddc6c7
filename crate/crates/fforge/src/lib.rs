//! Fingerprint-forging augmentation toolkit and robustness harness for
//! deepfake detectors.
//!
//! The crate builds a pool of weakly-trained autoencoders whose reconstruction
//! residuals act as artificial generator fingerprints, trains binary detectors
//! under four augmentation regimes (BL / CA / EA / EA+CA), and evaluates them
//! against classic perturbations, JPEG compression, and projected-gradient
//! adversarial attacks.

pub mod dataprep;
pub mod error;
pub mod image;
pub mod jpeg;
pub mod nn;
pub mod perturb;
pub mod rng;
pub mod synth;
pub mod warp;

pub use error::{Error, Result};
pub use image::{clamp, mae, mse, psnr, quality_stats, Image, QualityStats};
