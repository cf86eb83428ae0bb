//! Synthetic meetings: frame-wise embeddings, frame energies and the
//! matching reference annotation.
//!
//! Speakers take alternating turns of 2–6 s. Consecutive turns are separated
//! by a silence gap, overlap, or follow each other directly. Single-speaker
//! frames are vMF draws around the speaker's direction, overlap frames are
//! vMF draws around a point of the geodesic between the two speakers, and
//! silence frames are uniform on the sphere. The noise is smoothed over a
//! few neighbouring frames so that consecutive embeddings are correlated,
//! while each frame keeps its exact marginal distribution.
//!
//! Speech energy ramps up from the silence level at the start of every speech
//! run and back down at its end, and long runs contain short dips to the
//! silence level, so that a minimum-statistics VAD sees a realistic floor.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geodesic::{geodesic_target, SpeakerAnchorPair};
use crate::geometry::{norm, FrameEmbeddingTrack};
use crate::pipeline::default_speaker_names;
use crate::scoring::{Annotation, Segment};
use crate::vmf::{sample_uniform_sphere, CosineQuantile};

const TURN_SECONDS: (f64, f64) = (2.0, 6.0);
const MAX_OVERLAP_SHARE: f64 = 0.48;

/// Interpolation weight of the outgoing speaker across an overlap window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaMode {
    /// Linear from 1 at the start of the window to 0 at its end.
    #[default]
    Ramp,
    Constant,
    Uniform,
}

impl std::str::FromStr for AlphaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(Self::Ramp),
            "constant-0.5" | "constant" => Ok(Self::Constant),
            "uniform-random" | "uniform" => Ok(Self::Uniform),
            _ => Err(Error::InvalidParameter(format!("unknown alpha mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for AlphaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ramp => "ramp",
            Self::Constant => "constant-0.5",
            Self::Uniform => "uniform-random",
        })
    }
}

/// Short drops to the silence level inside continuous speech.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauseSchedule {
    /// Speech time between dips, drawn uniformly from this range.
    pub every_seconds: (f64, f64),
    /// Dip length, drawn uniformly from this range.
    pub length_seconds: (f64, f64),
}

impl Default for PauseSchedule {
    fn default() -> Self {
        Self {
            every_seconds: (1.0, 1.8),
            length_seconds: (0.03, 0.06),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetingConfig {
    pub num_speakers: usize,
    pub duration_seconds: f64,
    pub hop_seconds: f64,
    pub embedding_dim: usize,
    pub kappa_true: f64,
    /// Target fraction of the meeting with two active speakers.
    pub overlap_ratio: f64,
    /// Target fraction of the meeting with no active speaker.
    pub silence_ratio: f64,
    pub seed: u64,
    pub min_separation_degrees: f64,
    pub alpha_mode: AlphaMode,
    pub speech_db: f64,
    pub silence_db: f64,
    /// Half-width of the uniform energy jitter.
    pub jitter_db: f64,
    /// Length of the energy ramps at both ends of a speech run; 0 disables.
    pub ramp_seconds: f64,
    pub pauses: Option<PauseSchedule>,
    /// Width of the moving average applied to the embedding noise. Each
    /// frame is still exactly vMF-distributed, but neighbouring frames are
    /// correlated the way locally pooled frame-wise embeddings are. 1 gives
    /// independent frames.
    pub noise_pool_frames: usize,
}

impl Default for MeetingConfig {
    fn default() -> Self {
        Self {
            num_speakers: 4,
            duration_seconds: 120.0,
            hop_seconds: 0.01,
            embedding_dim: 64,
            kappa_true: 50.0,
            overlap_ratio: 0.0,
            silence_ratio: 0.1,
            seed: 0,
            min_separation_degrees: 60.0,
            alpha_mode: AlphaMode::Ramp,
            speech_db: -30.0,
            silence_db: -60.0,
            jitter_db: 1.0,
            ramp_seconds: 0.5,
            pauses: Some(PauseSchedule::default()),
            noise_pool_frames: 11,
        }
    }
}

impl MeetingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_speakers < 1 {
            return bad("need at least one speaker".into());
        }
        if self.embedding_dim < 2 {
            return bad("embedding dimension must be at least 2".into());
        }
        if !(self.hop_seconds > 0.0 && self.duration_seconds >= self.hop_seconds) {
            return bad("duration must cover at least one positive hop".into());
        }
        if !(self.kappa_true >= 0.0 && self.kappa_true.is_finite()) {
            return bad("kappa_true must be finite and non-negative".into());
        }
        if !((0.0..1.0).contains(&self.overlap_ratio) && (0.0..1.0).contains(&self.silence_ratio)) {
            return bad("overlap and silence ratios must lie in [0, 1)".into());
        }
        if self.overlap_ratio + self.silence_ratio >= 1.0 {
            return bad("overlap and silence ratios must leave room for single-speaker speech".into());
        }
        if !(0.0..=180.0).contains(&self.min_separation_degrees) {
            return bad("minimum separation must lie in [0, 180] degrees".into());
        }
        if !(self.jitter_db >= 0.0 && self.ramp_seconds >= 0.0) {
            return bad("jitter and ramp lengths must be non-negative".into());
        }
        if self.noise_pool_frames < 1 {
            return bad("noise pooling width must be at least one frame".into());
        }
        if let Some(p) = self.pauses {
            let ok = |(a, b): (f64, f64)| a > 0.0 && a <= b;
            if !(ok(p.every_seconds) && ok(p.length_seconds)) {
                return bad("pause ranges must be positive and ordered".into());
            }
        }
        if self.overlap_ratio > 0.0 && self.num_speakers < 2 {
            return Err(Error::InfeasibleConfig("overlap needs at least two speakers".into()));
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        (self.duration_seconds / self.hop_seconds).round() as usize
    }
}

/// A simulated meeting with its ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedMeeting {
    pub track: FrameEmbeddingTrack,
    pub reference: Annotation,
    /// K×E speaker directions.
    pub directions: Array2<f64>,
    /// For every overlap frame: (outgoing speaker, incoming speaker, α).
    pub overlap_frames: Vec<Option<(usize, usize, f64)>>,
    /// Per-frame speech indicator of the reference.
    pub speech_frames: Vec<bool>,
}

impl SimulatedMeeting {
    pub fn overlap_ratio(&self) -> f64 {
        self.reference.time_with_at_least(2) / self.track.duration_seconds()
    }

    pub fn silence_ratio(&self) -> f64 {
        1.0 - self.reference.time_with_at_least(1) / self.track.duration_seconds()
    }
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `K` unit vectors with pairwise angles of at least `min_degrees`.
pub fn speaker_directions(k: usize, dim: usize, min_degrees: f64, seed: u64) -> Result<Array2<f64>> {
    if dim == 2 && min_degrees > 0.0 && k as f64 > (360.0 / min_degrees).floor() {
        return Err(Error::InfeasibleConfig(format!(
            "{k} directions at {min_degrees}° apart do not fit on a circle"
        )));
    }
    let max_cos = min_degrees.to_radians().cos();
    let mut rng = rng_stream(seed, 1);
    for _restart in 0..100 {
        let mut dirs: Vec<Array1<f64>> = Vec::with_capacity(k);
        'next: while dirs.len() < k {
            for _ in 0..10_000 {
                let c = sample_uniform_sphere(dim, &mut rng);
                if dirs.iter().all(|d| d.dot(&c) <= max_cos) {
                    dirs.push(c);
                    continue 'next;
                }
            }
            break;
        }
        if dirs.len() == k {
            let mut out = Array2::zeros((k, dim));
            for (mut row, d) in out.rows_mut().into_iter().zip(dirs) {
                row.assign(&d);
            }
            return Ok(out);
        }
    }
    Err(Error::InfeasibleConfig(format!(
        "could not place {k} directions {min_degrees}° apart in {dim} dimensions"
    )))
}

/// Split `total` into integers proportional to `weights` with per-entry caps,
/// redistributing whatever a capped entry cannot take.
fn water_fill(total: usize, weights: &[f64], caps: &[usize]) -> Result<Vec<usize>> {
    if caps.iter().sum::<usize>() < total {
        return Err(Error::InfeasibleConfig(format!(
            "cannot place {total} frames into slots holding {}",
            caps.iter().sum::<usize>()
        )));
    }
    let n = weights.len();
    let mut share = vec![0.0f64; n];
    let mut capped = vec![false; n];
    let mut left = total as f64;
    loop {
        let w: f64 = (0..n).filter(|&i| !capped[i]).map(|i| weights[i]).sum();
        if left <= 0.0 || w <= 0.0 {
            break;
        }
        let mut changed = false;
        for i in 0..n {
            if !capped[i] && share[i] + left * weights[i] / w > caps[i] as f64 {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed {
            for i in (0..n).filter(|&i| !capped[i]) {
                share[i] += left * weights[i] / w;
            }
            break;
        }
        for i in (0..n).filter(|&i| capped[i]) {
            share[i] = caps[i] as f64;
        }
        left = total as f64 - share.iter().sum::<f64>();
    }
    // Largest-remainder rounding within caps.
    let mut out: Vec<usize> = share.iter().map(|s| s.floor() as usize).collect();
    let mut missing = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (share[b] - share[b].floor()).total_cmp(&(share[a] - share[a].floor())));
    while missing > 0 {
        let before = missing;
        for &i in &order {
            if missing > 0 && out[i] < caps[i] {
                out[i] += 1;
                missing -= 1;
            }
        }
        if missing == before {
            unreachable!("capacity was checked");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Transition {
    Direct,
    Gap,
    Overlap,
}

/// Turns as (speaker, onset frame, offset frame).
fn build_timeline(cfg: &MeetingConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize, usize)>> {
    let t = cfg.num_frames();
    let s_frames = (cfg.silence_ratio * t as f64).round() as usize;
    let o_frames = (cfg.overlap_ratio * t as f64).round() as usize;
    let turn_frames = t - s_frames + o_frames;
    if turn_frames == 0 {
        return Err(Error::InfeasibleConfig("meeting has no speech".into()));
    }

    let target = turn_frames as f64 * cfg.hop_seconds;
    let mut lengths = Vec::new();
    let mut sum = 0.0;
    while sum < target {
        let l = rng.random_range(TURN_SECONDS.0..TURN_SECONDS.1);
        lengths.push(l);
        sum += l;
    }
    // Rescale to exactly `turn_frames` frames with cumulative rounding.
    let mut frames = Vec::with_capacity(lengths.len());
    let mut acc = 0.0;
    let mut prev = 0usize;
    for l in &lengths {
        acc += l;
        let edge = (acc / sum * turn_frames as f64).round() as usize;
        frames.push(edge - prev);
        prev = edge;
    }
    if frames.contains(&0) {
        return Err(Error::InfeasibleConfig("meeting too short for its turns".into()));
    }
    let n = frames.len();

    let mut speakers = Vec::with_capacity(n);
    for i in 0..n {
        let s = if cfg.num_speakers == 1 {
            0
        } else if i == 0 {
            rng.random_range(0..cfg.num_speakers)
        } else {
            let s = rng.random_range(0..cfg.num_speakers - 1);
            if s >= speakers[i - 1] {
                s + 1
            } else {
                s
            }
        };
        speakers.push(s);
    }

    let p_gap = match (s_frames, o_frames) {
        (0, 0) => 0.0,
        (_, 0) => 1.0,
        (0, _) => 0.0,
        _ => cfg.silence_ratio / (cfg.silence_ratio + cfg.overlap_ratio),
    };
    let mut kinds: Vec<Transition> = (0..n.saturating_sub(1))
        .map(|_| {
            if s_frames == 0 && o_frames == 0 {
                Transition::Direct
            } else if rng.random::<f64>() < p_gap {
                Transition::Gap
            } else {
                Transition::Overlap
            }
        })
        .collect();
    if o_frames > 0 && !kinds.contains(&Transition::Overlap) {
        match kinds.first_mut() {
            Some(k) => *k = Transition::Overlap,
            None => return Err(Error::InfeasibleConfig("a single turn cannot overlap".into())),
        }
    }

    // Short meetings can draw too few overlap transitions to hold the
    // requested overlap; convert the roomiest gaps until they fit.
    let cap_of = |i: usize| (MAX_OVERLAP_SHARE * frames[i].min(frames[i + 1]) as f64).floor() as usize;
    let mut capacity: usize = (0..kinds.len()).filter(|&i| kinds[i] == Transition::Overlap).map(cap_of).sum();
    while capacity < o_frames {
        let Some(i) = (0..kinds.len()).filter(|&i| kinds[i] == Transition::Gap).max_by_key(|&i| (cap_of(i), usize::MAX - i))
        else {
            break;
        };
        kinds[i] = Transition::Overlap;
        capacity += cap_of(i);
    }

    let ov_slots: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == Transition::Overlap).collect();
    let ov_weights: Vec<f64> = ov_slots
        .iter()
        .map(|&i| frames[i].min(frames[i + 1]) as f64 * rng.random_range(0.5..1.5))
        .collect();
    let ov_caps: Vec<usize> = ov_slots.iter().map(|&i| cap_of(i)).collect();
    let ov_amounts = water_fill(o_frames, &ov_weights, &ov_caps)?;

    // Silence slots: before the first turn, every gap transition, after the last turn.
    let gap_slots: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == Transition::Gap).collect();
    let n_sil = gap_slots.len() + 2;
    let sil_weights: Vec<f64> = (0..n_sil).map(|_| rng.random_range(0.5..1.5)).collect();
    let sil_amounts = water_fill(s_frames, &sil_weights, &vec![usize::MAX / (n_sil + 1); n_sil])?;

    let mut after = vec![0isize; n];
    for (&i, &a) in ov_slots.iter().zip(&ov_amounts) {
        after[i] = -(a as isize);
    }
    for (&i, &a) in gap_slots.iter().zip(&sil_amounts[1..]) {
        after[i] = a as isize;
    }
    after[n - 1] = sil_amounts[n_sil - 1] as isize;

    let mut turns = Vec::with_capacity(n);
    let mut cursor = sil_amounts[0] as isize;
    for i in 0..n {
        let on = cursor as usize;
        let off = on + frames[i];
        turns.push((speakers[i], on, off));
        cursor = off as isize + after[i];
    }
    debug_assert_eq!(cursor as usize, t);
    Ok(turns)
}

/// `t` rows of `cols` standard normals, each column a centered moving sum
/// over `pool` i.i.d. draws rescaled to unit variance. Neighbouring rows are
/// correlated; every entry stays exactly N(0, 1).
fn pooled_normals(t: usize, cols: usize, pool: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let raw = Array2::from_shape_simple_fn((t, cols), || rng.sample::<f64, _>(StandardNormal));
    if pool <= 1 {
        return raw;
    }
    let half = pool / 2;
    let mut out = Array2::zeros((t, cols));
    for c in 0..cols {
        let mut prefix = vec![0.0; t + 1];
        for i in 0..t {
            prefix[i + 1] = prefix[i] + raw[[i, c]];
        }
        for i in 0..t {
            let lo = i.saturating_sub(half);
            let hi = (i + pool - half).min(t);
            out[[i, c]] = (prefix[hi] - prefix[lo]) / ((hi - lo) as f64).sqrt();
        }
    }
    out
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn energies(cfg: &MeetingConfig, speech: &[bool], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let hop = cfg.hop_seconds;
    let mut base: Vec<f64> = speech
        .iter()
        .map(|&s| if s { cfg.speech_db } else { cfg.silence_db })
        .collect();
    let ramp = (cfg.ramp_seconds / hop).round() as usize;
    let span = cfg.speech_db - cfg.silence_db;
    let mut t = 0;
    while t < speech.len() {
        if !speech[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < speech.len() && speech[t] {
            t += 1;
        }
        let end = t;
        let len = end - start;
        let r = ramp.min(len / 2);
        if r > 0 {
            for p in 0..len {
                let up = (p as f64 + 0.5) / r as f64;
                let down = (len as f64 - p as f64 - 0.5) / r as f64;
                base[start + p] = cfg.silence_db + span * up.min(down).min(1.0);
            }
        }
        if let Some(sched) = cfg.pauses {
            let stop = end - r;
            let mut pos = start + r;
            loop {
                pos += (rng.random_range(sched.every_seconds.0..=sched.every_seconds.1) / hop).round() as usize;
                let dip = ((rng.random_range(sched.length_seconds.0..=sched.length_seconds.1) / hop).round() as usize).max(1);
                if pos + dip > stop {
                    break;
                }
                for e in &mut base[pos..pos + dip] {
                    *e = cfg.silence_db;
                }
                pos += dip;
            }
        }
    }
    if cfg.jitter_db > 0.0 {
        for e in &mut base {
            *e += rng.random_range(-cfg.jitter_db..=cfg.jitter_db);
        }
    }
    base
}

/// Generate a meeting; fully determined by the configuration and its seed.
pub fn simulate_meeting(cfg: &MeetingConfig) -> Result<SimulatedMeeting> {
    cfg.validate()?;
    let t = cfg.num_frames();
    let e = cfg.embedding_dim;
    let hop = cfg.hop_seconds;
    let directions = speaker_directions(cfg.num_speakers, e, cfg.min_separation_degrees, cfg.seed)?;
    let turns = build_timeline(cfg, &mut rng_stream(cfg.seed, 2))?;

    // Turns never overlap more than pairwise, so two slots per frame suffice.
    let mut active: Vec<[Option<usize>; 2]> = vec![[None, None]; t];
    let mut overlap_frames: Vec<Option<(usize, usize, f64)>> = vec![None; t];
    for (i, &(_, on, off)) in turns.iter().enumerate() {
        for slot in &mut active[on..off] {
            if slot[0].is_none() {
                slot[0] = Some(i);
            } else {
                slot[1] = Some(i);
            }
        }
    }
    let mut alpha_rng = rng_stream(cfg.seed, 3);
    for w in turns.windows(2) {
        let (a, _, a_off) = w[0];
        let (b, b_on, _) = w[1];
        if b_on >= a_off {
            continue;
        }
        let len = a_off - b_on;
        for (p, slot) in overlap_frames[b_on..a_off].iter_mut().enumerate() {
            let alpha = match cfg.alpha_mode {
                AlphaMode::Ramp => 1.0 - (p as f64 + 0.5) / len as f64,
                AlphaMode::Constant => 0.5,
                AlphaMode::Uniform => alpha_rng.random::<f64>(),
            };
            *slot = Some((a, b, alpha));
        }
    }
    let noise = pooled_normals(t, e + 1, cfg.noise_pool_frames, &mut rng_stream(cfg.seed, 4));
    let quantile = CosineQuantile::new(e, cfg.kappa_true)?;
    let mut frames = Array2::<f64>::zeros((t, e));
    for (f, mut row) in frames.rows_mut().into_iter().enumerate() {
        let g = noise.slice(s![f, 1..]);
        let mean = if let Some((a, b, alpha)) = overlap_frames[f] {
            let pair = SpeakerAnchorPair::new(directions.row(a).to_owned(), directions.row(b).to_owned())?;
            let mu = geodesic_target(&pair, alpha)?;
            Some(&mu / norm(mu.view()))
        } else {
            active[f][0].map(|i| directions.row(turns[i].0).to_owned())
        };
        let x = match mean {
            // Cosine to the mean from a Gaussian copula, tangent direction
            // from the isotropic part: exactly vMF(mean, κ) per frame.
            Some(mu) => {
                let w = quantile.cosine(standard_normal_cdf(noise[[f, 0]]));
                let tangent = &g - &(&mu * mu.dot(&g));
                let tn = norm(tangent.view());
                let x = &mu * w + &tangent * ((1.0 - w * w).max(0.0).sqrt() / tn);
                let xn = norm(x.view());
                x / xn
            }
            None => {
                let gn = norm(g);
                g.to_owned() / gn
            }
        };
        row.assign(&x);
    }

    let speech_frames: Vec<bool> = active.iter().map(|s| s[0].is_some()).collect();
    let energy = energies(cfg, &speech_frames, &mut rng_stream(cfg.seed, 5));

    let names = default_speaker_names(cfg.num_speakers);
    let meeting_id = format!("sim{}", cfg.seed);
    let reference = Annotation::new(
        meeting_id.clone(),
        turns
            .iter()
            .map(|&(s, on, off)| Segment::new(names[s].clone(), on as f64 * hop, off as f64 * hop))
            .collect(),
    );
    let track = FrameEmbeddingTrack::new(frames, hop, Some(energy), meeting_id)?;
    Ok(SimulatedMeeting {
        track,
        reference,
        directions,
        overlap_frames,
        speech_frames,
    })
}
