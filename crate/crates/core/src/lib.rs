//! Detection of spatial redundancy in images with a-contrario methods and
//! Gaussian microtexture background models.
//!
//! The central statistic is the auto-similarity `AS(u, t, ω) = ‖P_{t+ω}u − P_ω u‖²`
//! on the periodic extension of `u`. Under a Gaussian background it follows a
//! weighted sum of `χ²₁` laws whose CDF is approximated by the Wood F method.
//! Small probabilities flag offsets `t` along which the image repeats itself;
//! this drives redundancy detection, patch-selection in threshold NL-means and
//! lattice extraction.

mod fft;

pub mod background;
pub mod denoise;
pub mod detect;
pub mod error;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod quadform;
pub mod seed;

pub use background::{Eigenvalue, MicrotextureModel, ModelKind, QuadFormLaw};
pub use denoise::{nlmeans_classic, nlmeans_threshold, psnr, DenoiseConfig, DenoiseReport, ThresholdMode};
pub use detect::{autosim_detection, DetectionLaws, DetectionResult, OffsetMask};
pub use error::{Error, Result};
pub use grid::{Image, Offset, OffsetMap, PatchDomain};
pub use lattice::{alternate_minimization, build_graph, c_per, rank_textures, DetectionGraph, LatticeFit};
pub use quadform::{Fallback, WoodFParams};
