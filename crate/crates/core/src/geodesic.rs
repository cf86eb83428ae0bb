//! Geodesic targets for overlapping speech.
//!
//! For a frame where two speakers with anchor embeddings `d1` and `d2` are
//! active, the target is the point of the chord `α·d1 + (1−α)·d2` closest to
//! the observed embedding, pushed back out to the mean anchor length. Frames
//! with a single speaker are compared against that speaker's anchor.

use ndarray::{Array1, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::geometry::{norm, FrameEmbeddingTrack, ZERO_NORM_EPS};

const COINCIDENT_EPS: f64 = 1e-12;

/// Embeddings of the two speakers competing in an overlap region.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerAnchorPair {
    pub d1: Array1<f64>,
    pub d2: Array1<f64>,
}

impl SpeakerAnchorPair {
    pub fn new(d1: Array1<f64>, d2: Array1<f64>) -> Result<Self> {
        if d1.len() != d2.len() {
            return Err(Error::DimensionMismatch {
                expected: d1.len(),
                found: d2.len(),
            });
        }
        for d in [&d1, &d2] {
            if d.iter().any(|v| !v.is_finite()) || norm(d.view()) == 0.0 {
                return Err(Error::InvalidParameter(
                    "anchors must be finite and non-zero".into(),
                ));
            }
        }
        Ok(Self { d1, d2 })
    }

    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    /// Swap the roles of the two speakers.
    pub fn swapped(&self) -> Self {
        Self {
            d1: self.d2.clone(),
            d2: self.d1.clone(),
        }
    }

    /// Length the interpolated target is rescaled to: the mean anchor norm.
    pub fn target_radius(&self) -> f64 {
        0.5 * (norm(self.d1.view()) + norm(self.d2.view()))
    }

    /// The chord point `α·d1 + (1−α)·d2`.
    pub fn interpolate(&self, alpha: f64) -> Array1<f64> {
        &self.d1 * alpha + &self.d2 * (1.0 - alpha)
    }

    fn check_dim(&self, v: ArrayView1<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Which speakers are active in a training frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapFrameLabel {
    Spk1,
    Spk2,
    Overlap,
}

/// Minimizer of `‖α·d1 + (1−α)·d2 − d_hat‖²` over `α ∈ [0, 1]`.
///
/// The objective is a convex quadratic in α, so the constrained minimizer is
/// the unconstrained projection clamped to the interval.
pub fn optimal_alpha(anchors: &SpeakerAnchorPair, d_hat: ArrayView1<f64>) -> Result<f64> {
    anchors.check_dim(d_hat)?;
    let diff = &anchors.d1 - &anchors.d2;
    if diff.iter().all(|v| v.abs() <= COINCIDENT_EPS) {
        return Err(Error::DegenerateAnchors);
    }
    let rel = &d_hat - &anchors.d2;
    let alpha = rel.dot(&diff) / diff.dot(&diff);
    Ok(alpha.clamp(0.0, 1.0))
}

/// The chord point at `alpha`, normalized and rescaled to the mean anchor norm.
pub fn geodesic_target(anchors: &SpeakerAnchorPair, alpha: f64) -> Result<Array1<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "interpolation weight must lie in [0, 1], got {alpha}"
        )));
    }
    let d = anchors.interpolate(alpha);
    let n = norm(d.view());
    if n < ZERO_NORM_EPS {
        return Err(Error::DegenerateMidpoint { norm: n });
    }
    Ok(d * (anchors.target_radius() / n))
}

/// Squared-error loss of a track against its per-frame targets, summed in
/// ascending frame order.
pub fn geodesic_loss(
    track: &FrameEmbeddingTrack,
    labels: &[OverlapFrameLabel],
    anchors: &SpeakerAnchorPair,
) -> Result<f64> {
    if labels.len() != track.num_frames() {
        return Err(Error::DimensionMismatch {
            expected: track.num_frames(),
            found: labels.len(),
        });
    }
    anchors.check_dim(track.frames.row(0))?;
    let mut total = 0.0;
    for (d_hat, label) in track.frames.axis_iter(Axis(0)).zip(labels) {
        let target = match label {
            OverlapFrameLabel::Spk1 => anchors.d1.clone(),
            OverlapFrameLabel::Spk2 => anchors.d2.clone(),
            OverlapFrameLabel::Overlap => {
                let alpha = optimal_alpha(anchors, d_hat)?;
                geodesic_target(anchors, alpha)?
            }
        };
        let err = &target - &d_hat;
        total += err.dot(&err);
    }
    Ok(total)
}
