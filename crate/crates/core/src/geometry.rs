//! Frame-wise embedding tracks, voice-activity masks and the per-meeting
//! normalization that maps voiced embeddings onto the unit hypersphere.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Norm below which a centered frame is treated as degenerate.
pub const ZERO_NORM_EPS: f64 = 1e-9;

/// A T×E matrix of frame-wise speaker embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEmbeddingTrack {
    pub frames: Array2<f64>,
    pub hop_seconds: f64,
    /// Per-frame log-energy in dB.
    pub energy_db: Option<Vec<f64>>,
    pub meeting_id: String,
}

impl FrameEmbeddingTrack {
    pub fn new(
        frames: Array2<f64>,
        hop_seconds: f64,
        energy_db: Option<Vec<f64>>,
        meeting_id: impl Into<String>,
    ) -> Result<Self> {
        let track = Self {
            frames,
            hop_seconds,
            energy_db,
            meeting_id: meeting_id.into(),
        };
        track.validate()?;
        Ok(track)
    }

    pub fn validate(&self) -> Result<()> {
        let (t, e) = self.frames.dim();
        if t < 1 {
            return Err(Error::InvalidParameter("track has no frames".into()));
        }
        if e < 2 {
            return Err(Error::InvalidParameter(format!(
                "embedding dimension must be at least 2, got {e}"
            )));
        }
        if !(self.hop_seconds.is_finite() && self.hop_seconds > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hop must be positive, got {}",
                self.hop_seconds
            )));
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("track contains non-finite entries".into()));
        }
        if let Some(energy) = &self.energy_db {
            if energy.len() != t {
                return Err(Error::DimensionMismatch {
                    expected: t,
                    found: energy.len(),
                });
            }
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.num_frames() as f64 * self.hop_seconds
    }
}

/// Per-frame speech/non-speech decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct VadMask {
    pub voiced: Vec<bool>,
    pub hop_seconds: f64,
}

impl VadMask {
    pub fn all_voiced(len: usize, hop_seconds: f64) -> Self {
        Self {
            voiced: vec![true; len],
            hop_seconds,
        }
    }

    pub fn len(&self) -> usize {
        self.voiced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voiced.is_empty()
    }

    pub fn num_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            0.0
        } else {
            self.num_voiced() as f64 / self.voiced.len() as f64
        }
    }
}

/// Output of [`normalize_track`].
#[derive(Debug, Clone)]
pub struct NormalizedTrack {
    pub track: FrameEmbeddingTrack,
    /// Frames whose centered norm fell below [`ZERO_NORM_EPS`]; they are
    /// stored as zero vectors and must not be clustered.
    pub zero_frames: Vec<bool>,
}

impl NormalizedTrack {
    /// Frames that are voiced and carry a usable direction.
    pub fn clusterable(&self, mask: &VadMask) -> Vec<bool> {
        mask.voiced
            .iter()
            .zip(&self.zero_frames)
            .map(|(&v, &z)| v && !z)
            .collect()
    }
}

/// Subtract the voiced-frame mean from every frame, then scale each frame to
/// unit length.
pub fn normalize_track(track: &FrameEmbeddingTrack, mask: &VadMask) -> Result<NormalizedTrack> {
    track.validate()?;
    let t = track.num_frames();
    if mask.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: mask.len(),
        });
    }
    let voiced = mask.num_voiced();
    if voiced < 2 {
        return Err(Error::TooFewVoiced {
            required: 2,
            found: voiced,
        });
    }

    let mut mean = Array1::<f64>::zeros(track.dim());
    for (row, _) in track
        .frames
        .axis_iter(Axis(0))
        .zip(&mask.voiced)
        .filter(|(_, &v)| v)
    {
        mean += &row;
    }
    mean /= voiced as f64;

    let mut frames = &track.frames - &mean.view().insert_axis(Axis(0));
    let mut zero_frames = vec![false; t];
    for (mut row, zero) in frames.axis_iter_mut(Axis(0)).zip(zero_frames.iter_mut()) {
        let n = norm(row.view());
        if n < ZERO_NORM_EPS {
            row.fill(0.0);
            *zero = true;
        } else {
            row /= n;
        }
    }

    Ok(NormalizedTrack {
        track: FrameEmbeddingTrack {
            frames,
            hop_seconds: track.hop_seconds,
            energy_db: track.energy_db.clone(),
            meeting_id: track.meeting_id.clone(),
        },
        zero_frames,
    })
}

/// Rows of `frames` selected by `keep`, copied into a dense matrix.
pub fn select_rows(frames: &Array2<f64>, keep: &[bool]) -> Array2<f64> {
    let idx: Vec<usize> = keep
        .iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect();
    frames.select(Axis(0), &idx)
}

pub(crate) fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub(crate) fn normalized(v: ArrayView1<f64>) -> Option<Array1<f64>> {
    let n = norm(v);
    (n >= ZERO_NORM_EPS).then(|| &v / n)
}
