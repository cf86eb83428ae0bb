//! Frame-level diarization: VAD, normalization, clustering, posterior
//! thresholding, morphological smoothing and optional overlap refinement.

use std::fmt::Write as _;

use ndarray::{Array2, Axis};

use crate::clustering::{argmax, fit_vmfmm, spherical_kmeans_restarts, MixtureConfig, MixtureInit, PosteriorMatrix};
use crate::error::{Error, Result};
use crate::geometry::{normalize_track, select_rows, FrameEmbeddingTrack, VadMask};
use crate::scoring::{Annotation, Segment};

/// Per-frame, per-speaker activity.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMatrix {
    /// T×K.
    pub active: Array2<bool>,
    pub hop_seconds: f64,
    pub speaker_names: Vec<String>,
}

/// `spk0`, `spk1`, ...
pub fn default_speaker_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("spk{i}")).collect()
}

impl ActivityMatrix {
    pub fn new(active: Array2<bool>, hop_seconds: f64, speaker_names: Vec<String>) -> Result<Self> {
        if speaker_names.len() != active.ncols() {
            return Err(Error::DimensionMismatch {
                expected: active.ncols(),
                found: speaker_names.len(),
            });
        }
        if !(hop_seconds > 0.0 && hop_seconds.is_finite()) {
            return Err(Error::InvalidParameter("hop must be positive".into()));
        }
        Ok(Self {
            active,
            hop_seconds,
            speaker_names,
        })
    }

    pub fn silent(num_frames: usize, num_speakers: usize, hop_seconds: f64) -> Self {
        Self {
            active: Array2::from_elem((num_frames, num_speakers), false),
            hop_seconds,
            speaker_names: default_speaker_names(num_speakers),
        }
    }

    pub fn num_frames(&self) -> usize {
        self.active.nrows()
    }

    pub fn num_speakers(&self) -> usize {
        self.active.ncols()
    }

    /// Number of active speakers on every frame.
    pub fn active_counts(&self) -> Vec<usize> {
        self.active
            .axis_iter(Axis(0))
            .map(|r| r.iter().filter(|&&a| a).count())
            .collect()
    }

    /// Contiguous active frames of each speaker merged into segments; frame
    /// `t` spans `[t·hop, (t+1)·hop)`. Sorted by onset, then speaker.
    pub fn to_annotation(&self, meeting_id: &str) -> Annotation {
        let mut segments = Vec::new();
        let hop = self.hop_seconds;
        for (k, channel) in self.active.axis_iter(Axis(1)).enumerate() {
            let mut start = None;
            for (t, &a) in channel.iter().chain(std::iter::once(&false)).enumerate() {
                match (a, start) {
                    (true, None) => start = Some(t),
                    (false, Some(s)) => {
                        segments.push((s, k, t));
                        start = None;
                    }
                    _ => {}
                }
            }
        }
        segments.sort();
        Annotation::new(
            meeting_id,
            segments
                .into_iter()
                .map(|(s, k, e)| Segment::new(self.speaker_names[k].clone(), s as f64 * hop, e as f64 * hop))
                .collect(),
        )
    }

    /// Rasterize an annotation: frame `t` is active for a speaker when the
    /// frame midpoint lies inside one of their segments.
    pub fn from_annotation(ann: &Annotation, num_frames: usize, hop_seconds: f64) -> Self {
        let names = ann.speakers();
        let mut active = Array2::from_elem((num_frames, names.len()), false);
        for s in &ann.segments {
            let k = names.iter().position(|n| *n == s.speaker).expect("speaker listed");
            for t in frame_span(s.onset, s.offset, num_frames, hop_seconds) {
                active[[t, k]] = true;
            }
        }
        Self {
            active,
            hop_seconds,
            speaker_names: names,
        }
    }
}

/// Frames whose midpoint lies in `[onset, offset)`.
fn frame_span(onset: f64, offset: f64, num_frames: usize, hop: f64) -> std::ops::Range<usize> {
    let first = ((onset / hop - 0.5).ceil().max(0.0) as usize).min(num_frames);
    let end = ((offset / hop - 0.5).ceil().max(0.0) as usize).min(num_frames);
    first..end.max(first)
}

/// Sorted, disjoint time intervals in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlapRegions {
    intervals: Vec<(f64, f64)>,
}

impl OverlapRegions {
    /// Validate and canonicalize: sort by onset and merge intervals that
    /// overlap or touch.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(on, off) in &intervals {
            if !(on.is_finite() && off.is_finite() && on >= 0.0 && on < off) {
                return Err(Error::InvalidParameter(format!(
                    "overlap region ({on}, {off}) must satisfy 0 <= onset < offset"
                )));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (on, off) in intervals {
            match merged.last_mut() {
                Some(last) if on <= last.1 => last.1 = last.1.max(off),
                _ => merged.push((on, off)),
            }
        }
        Ok(Self { intervals: merged })
    }

    /// Regions where at least two reference speakers are active.
    pub fn from_reference(reference: &Annotation) -> Self {
        let mut events: Vec<(f64, i32)> = reference
            .segments
            .iter()
            .flat_map(|s| [(s.onset, 1), (s.offset, -1)])
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut intervals = Vec::new();
        let mut level = 0;
        let mut start = 0.0;
        for (t, d) in events {
            let before = level;
            level += d;
            if before < 2 && level >= 2 {
                start = t;
            } else if before >= 2 && level < 2 && t > start {
                intervals.push((start, t));
            }
        }
        Self::new(intervals).expect("reference segments are well-formed")
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_seconds(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Frames whose midpoint falls inside a region.
    pub fn frame_mask(&self, num_frames: usize, hop_seconds: f64) -> Vec<bool> {
        let mut mask = vec![false; num_frames];
        for &(on, off) in &self.intervals {
            for t in frame_span(on, off, num_frames, hop_seconds) {
                mask[t] = true;
            }
        }
        mask
    }
}

/// Minimum-statistics energy VAD. The noise floor at frame `t` is the
/// minimum energy over the trailing `⌈window/hop⌉` frames ending at `t`; a
/// frame is voiced when it exceeds the floor by more than `offset_db`.
pub fn energy_vad(energy_db: &[f64], hop_seconds: f64, window_seconds: f64, offset_db: f64) -> Result<VadMask> {
    if energy_db.is_empty() {
        return Err(Error::InvalidParameter("energy track is empty".into()));
    }
    if !(hop_seconds > 0.0 && window_seconds > 0.0 && offset_db.is_finite()) {
        return Err(Error::InvalidParameter(
            "VAD needs positive hop and window and a finite offset".into(),
        ));
    }
    if let Some(t) = energy_db.iter().position(|e| !e.is_finite()) {
        return Err(Error::Numerical(format!("non-finite energy at frame {t}")));
    }
    let n = ((window_seconds / hop_seconds) - 1e-9).ceil().max(1.0) as usize;
    // Monotonic deque of indices with increasing energies.
    let mut deque = std::collections::VecDeque::with_capacity(n);
    let mut voiced = Vec::with_capacity(energy_db.len());
    for (t, &e) in energy_db.iter().enumerate() {
        while deque.back().is_some_and(|&j| energy_db[j] >= e) {
            deque.pop_back();
        }
        deque.push_back(t);
        if deque[0] + n <= t {
            deque.pop_front();
        }
        let floor = energy_db[deque[0]];
        voiced.push(e > floor + offset_db);
    }
    Ok(VadMask { voiced, hop_seconds })
}

/// Activity from class posteriors: on every voiced frame, each class with
/// `γ ≥ theta` is active, and the argmax class is always active.
pub fn threshold_posteriors(gamma: &PosteriorMatrix, theta: f64, hop_seconds: f64) -> Result<ActivityMatrix> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {theta} must lie in (0, 1)")));
    }
    let (t, k) = gamma.gamma.dim();
    let mut active = Array2::from_elem((t, k), false);
    for ((row, mut out), &v) in gamma
        .gamma
        .axis_iter(Axis(0))
        .zip(active.axis_iter_mut(Axis(0)))
        .zip(&gamma.voiced)
    {
        if !v || k == 0 {
            continue;
        }
        for (a, &g) in out.iter_mut().zip(row.iter()) {
            *a = g >= theta;
        }
        out[argmax(row.iter().copied())] = true;
    }
    ActivityMatrix::new(active, hop_seconds, default_speaker_names(k))
}

/// Frames in the centered window of width `w` around `t`:
/// `[t − ⌊w/2⌋, t + w − 1 − ⌊w/2⌋]`, mirrored about `t` when `reflect` is set.
fn window_bounds(t: usize, w: usize, reflect: bool) -> (isize, isize) {
    let before = if reflect { w - 1 - w / 2 } else { w / 2 };
    let lo = t as isize - before as isize;
    (lo, lo + w as isize - 1)
}

/// Sliding max (`dilate`) or min over a binary channel with zero padding.
/// The min uses the mirrored window so that max followed by min of equal
/// width is a closing.
fn sliding(channel: &[bool], w: usize, dilate: bool) -> Vec<bool> {
    let n = channel.len();
    let mut prefix = vec![0usize; n + 1];
    for (i, &a) in channel.iter().enumerate() {
        prefix[i + 1] = prefix[i] + a as usize;
    }
    (0..n)
        .map(|t| {
            let (lo, hi) = window_bounds(t, w, !dilate);
            let a = lo.clamp(0, n as isize) as usize;
            let b = (hi + 1).clamp(0, n as isize) as usize;
            let ones = prefix[b] - prefix[a];
            if dilate {
                ones > 0
            } else {
                ones == w
            }
        })
        .collect()
}

/// Per-channel sliding maximum of `max_seconds` followed by a sliding
/// minimum of `min_seconds`, both centered with zero padding.
pub fn morph_filter(activity: &ActivityMatrix, max_seconds: f64, min_seconds: f64) -> Result<ActivityMatrix> {
    let hop = activity.hop_seconds;
    if !(max_seconds >= hop - 1e-12 && min_seconds >= hop - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "filter windows ({max_seconds} s, {min_seconds} s) must be at least one hop ({hop} s)"
        )));
    }
    let w1 = (max_seconds / hop).round() as usize;
    let w2 = (min_seconds / hop).round() as usize;
    let mut out = activity.clone();
    for (src, mut dst) in activity.active.axis_iter(Axis(1)).zip(out.active.axis_iter_mut(Axis(1))) {
        let channel: Vec<bool> = src.to_vec();
        let filtered = sliding(&sliding(&channel, w1, true), w2, false);
        for (d, f) in dst.iter_mut().zip(filtered) {
            *d = f;
        }
    }
    Ok(out)
}

/// Inside the given regions, every voiced frame gets exactly its two most
/// probable classes active; frames outside the regions are untouched.
pub fn refine_with_overlap(
    activity: &ActivityMatrix,
    gamma: &PosteriorMatrix,
    regions: &OverlapRegions,
) -> Result<ActivityMatrix> {
    let k = gamma.num_classes();
    if k < 2 {
        return Err(Error::InvalidParameter("overlap refinement needs at least two classes".into()));
    }
    if activity.active.dim() != gamma.gamma.dim() {
        return Err(Error::DimensionMismatch {
            expected: activity.num_frames(),
            found: gamma.num_frames(),
        });
    }
    let hop = activity.hop_seconds;
    let span = activity.num_frames() as f64 * hop;
    if let Some(&(_, off)) = regions.intervals().last() {
        if off > span + hop {
            return Err(Error::InvalidParameter(format!(
                "overlap region ends at {off} s, after the recording ({span} s)"
            )));
        }
    }
    let mut out = activity.clone();
    let inside = regions.frame_mask(activity.num_frames(), hop);
    for t in 0..activity.num_frames() {
        if !(inside[t] && gamma.voiced[t]) {
            continue;
        }
        let row = gamma.gamma.row(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let mut dst = out.active.row_mut(t);
        dst.fill(false);
        dst[order[0]] = true;
        dst[order[1]] = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    KMeans,
    Vmfmm,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Self::KMeans),
            "vmfmm" => Ok(Self::Vmfmm),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::KMeans => "kmeans",
            Self::Vmfmm => "vmfmm",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VadSource {
    /// Minimum-statistics VAD on the track's energies.
    Energy,
    External(VadMask),
    /// Every frame is voiced.
    None,
}

#[derive(Debug, Clone)]
pub struct DiarizeConfig {
    pub method: Method,
    /// Speaker count, initialization and EM settings; only
    /// `num_components`, the k-means fields and `seed` apply to k-means.
    pub mixture: MixtureConfig,
    pub threshold: f64,
    pub max_filter_seconds: f64,
    pub min_filter_seconds: f64,
    pub vad: VadSource,
    pub vad_window_seconds: f64,
    pub vad_offset_db: f64,
    pub overlap_regions: Option<OverlapRegions>,
}

impl DiarizeConfig {
    pub fn new(method: Method, num_speakers: usize) -> Self {
        Self {
            method,
            mixture: MixtureConfig::new(num_speakers, MixtureInit::KMeans),
            threshold: 0.3,
            max_filter_seconds: 1.3,
            min_filter_seconds: 1.0,
            vad: VadSource::Energy,
            vad_window_seconds: 2.0,
            vad_offset_db: 10.0,
            overlap_regions: None,
        }
    }

    pub fn num_speakers(&self) -> usize {
        self.mixture.num_components
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub num_frames: usize,
    pub num_voiced: usize,
    pub voiced_fraction: f64,
    /// Concentrations of the final mixture (vmfmm only).
    pub kappas: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    pub component_counts: Vec<usize>,
    pub fused_pair: Option<(usize, usize)>,
    /// k-means inertia after every assignment step (kmeans method and
    /// k-means initialization).
    pub kmeans_inertia: Vec<f64>,
}

impl Diagnostics {
    /// Plain-text report, starting with the configuration values in effect.
    pub fn render(&self, cfg: &DiarizeConfig) -> String {
        let m = &cfg.mixture;
        let mut s = String::new();
        let vad = match &cfg.vad {
            VadSource::Energy => "energy",
            VadSource::External(_) => "external",
            VadSource::None => "none",
        };
        writeln!(s, "method={}", cfg.method).unwrap();
        writeln!(s, "num_speakers={}", m.num_components).unwrap();
        writeln!(s, "init={}", m.init).unwrap();
        writeln!(s, "kappa_max={}", m.kappa_max).unwrap();
        writeln!(s, "kappa_init={}", m.kappa_init).unwrap();
        writeln!(s, "em_iters={}", m.em_iters).unwrap();
        writeln!(s, "fuse_at={}", m.fuse_at).unwrap();
        writeln!(s, "kmeans_restarts={}", m.kmeans_restarts).unwrap();
        writeln!(s, "threshold={}", cfg.threshold).unwrap();
        writeln!(s, "max_filter={}", cfg.max_filter_seconds).unwrap();
        writeln!(s, "min_filter={}", cfg.min_filter_seconds).unwrap();
        writeln!(s, "vad={vad}").unwrap();
        writeln!(s, "vad_window={}", cfg.vad_window_seconds).unwrap();
        writeln!(s, "vad_offset_db={}", cfg.vad_offset_db).unwrap();
        writeln!(s, "seed={}", m.seed).unwrap();
        writeln!(s, "frames={}", self.num_frames).unwrap();
        writeln!(s, "voiced_frames={}", self.num_voiced).unwrap();
        writeln!(s, "voiced_fraction={:.6}", self.voiced_fraction).unwrap();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.10e}")).collect::<Vec<_>>().join(" ");
        writeln!(s, "kappas={}", join(&self.kappas)).unwrap();
        writeln!(s, "loglik_trace={}", join(&self.loglik_trace)).unwrap();
        let counts: Vec<String> = self.component_counts.iter().map(|c| c.to_string()).collect();
        writeln!(s, "component_counts={}", counts.join(" ")).unwrap();
        if let Some((i, j)) = self.fused_pair {
            writeln!(s, "fused_pair={i} {j}").unwrap();
        }
        if !self.kmeans_inertia.is_empty() {
            writeln!(s, "kmeans_inertia={}", join(&self.kmeans_inertia)).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct DiarizeOutput {
    pub activity: ActivityMatrix,
    /// Full-length class posteriors (vmfmm only).
    pub posteriors: Option<PosteriorMatrix>,
    pub diagnostics: Diagnostics,
}

/// Run the full pipeline on one track.
pub fn diarize(track: &FrameEmbeddingTrack, cfg: &DiarizeConfig) -> Result<DiarizeOutput> {
    track.validate()?;
    let k = cfg.num_speakers();
    let hop = track.hop_seconds;
    let t = track.num_frames();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one speaker".into()));
    }
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {} must lie in (0, 1)", cfg.threshold)));
    }

    let mask = match &cfg.vad {
        VadSource::Energy => {
            let energy = track
                .energy_db
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("energy VAD needs a track with energies".into()))?;
            energy_vad(energy, hop, cfg.vad_window_seconds, cfg.vad_offset_db)?
        }
        VadSource::External(m) => {
            if m.len() != t {
                return Err(Error::DimensionMismatch {
                    expected: t,
                    found: m.len(),
                });
            }
            VadMask {
                voiced: m.voiced.clone(),
                hop_seconds: hop,
            }
        }
        VadSource::None => VadMask::all_voiced(t, hop),
    };
    if mask.num_voiced() < k.max(2) {
        return Err(Error::TooFewVoiced {
            required: k.max(2),
            found: mask.num_voiced(),
        });
    }
    let normalized = normalize_track(track, &mask)?;
    let keep = normalized.clusterable(&mask);
    let n_keep = keep.iter().filter(|&&x| x).count();
    if n_keep < k {
        return Err(Error::TooFewVoiced {
            required: k,
            found: n_keep,
        });
    }
    let data = select_rows(&normalized.track.frames, &keep);

    let mut diagnostics = Diagnostics {
        num_frames: t,
        num_voiced: n_keep,
        voiced_fraction: n_keep as f64 / t as f64,
        ..Default::default()
    };

    let (raw, posteriors) = match cfg.method {
        Method::KMeans => {
            let m = &cfg.mixture;
            let km = spherical_kmeans_restarts(&data, k, m.kmeans_iters, m.kmeans_restarts, m.seed)?;
            let mut active = Array2::from_elem((t, k), false);
            let frames = keep.iter().enumerate().filter_map(|(i, &x)| x.then_some(i));
            for (frame, &label) in frames.zip(&km.labels) {
                active[[frame, label]] = true;
            }
            diagnostics.kmeans_inertia = km.inertia_trace;
            (ActivityMatrix::new(active, hop, default_speaker_names(k))?, None)
        }
        Method::Vmfmm => {
            let fit = fit_vmfmm(&data, &cfg.mixture)?;
            let post = fit.posteriors.expand(&keep)?;
            diagnostics.kappas = fit.params.kappas();
            diagnostics.loglik_trace = fit.loglik_trace;
            diagnostics.component_counts = fit.component_counts;
            diagnostics.fused_pair = fit.fused_pair;
            (threshold_posteriors(&post, cfg.threshold, hop)?, Some(post))
        }
    };

    let mut activity = morph_filter(&raw, cfg.max_filter_seconds, cfg.min_filter_seconds)?;
    if let Some(regions) = cfg.overlap_regions.as_ref().filter(|r| !r.is_empty()) {
        let post = posteriors.as_ref().ok_or_else(|| {
            Error::InvalidParameter("overlap refinement needs posteriors; use the vmfmm method".into())
        })?;
        activity = refine_with_overlap(&activity, post, regions)?;
    }
    Ok(DiarizeOutput {
        activity,
        posteriors,
        diagnostics,
    })
}
