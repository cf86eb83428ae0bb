//! Speaker diarization by clustering frame-wise speaker embeddings that live
//! on a hypersphere.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`geometry`]: embedding tracks, VAD masks and per-meeting normalization
//! - [`geodesic`]: overlap targets on the chord/geodesic between two speakers
//! - [`vmf`]: von Mises–Fisher density, normalizer, concentration estimate, sampler
//! - [`clustering`]: spherical k-means++ and vMF mixture EM (random, overinit and
//!   k-means initialization)
//! - [`pipeline`]: energy VAD, posterior thresholding, morphological smoothing,
//!   overlap refinement and the end-to-end [`pipeline::diarize`]
//! - [`scoring`]: diarization error rate with collar and single/overlap breakdown
//! - [`synth`]: a synthetic meeting generator with ground-truth annotations
//! - [`io`]: FWE track files, RTTM, VAD masks and overlap region lists
//! - [`sweep`]: the concentration-cap sweep behind `framediar sweep-kappa`
//! - [`cli`]: the `framediar` command-line front end
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bessel;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod geodesic;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod scoring;
pub mod sweep;
pub mod synth;
pub mod vmf;

pub use error::{Error, Result};
