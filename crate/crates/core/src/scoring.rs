//! Diarization error rate.
//!
//! The time axis is cut at every reference and hypothesis boundary (and at
//! the edges of collar zones) and scored exactly on the resulting intervals.
//! On an interval of length `d` with `R` reference speakers, `H` hypothesis
//! speakers of which `C` are correctly mapped:
//!
//! - missed speech: `d · max(0, R − H)`
//! - false alarm: `d · max(0, H − R)`
//! - confusion: `d · (min(R, H) − C)`
//! - scored speech: `d · R`
//!
//! The reference→hypothesis speaker mapping is the one-to-one assignment
//! maximizing the total jointly active time, computed once per meeting over
//! all scored intervals and reused for the single/overlap breakdown.

use std::collections::BTreeMap;
use std::fmt;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Error, Result};

/// One speaker turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub speaker: String,
    pub onset: f64,
    pub offset: f64,
}

impl Segment {
    pub fn new(speaker: impl Into<String>, onset: f64, offset: f64) -> Self {
        Self {
            speaker: speaker.into(),
            onset,
            offset,
        }
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// Speaker segments of one meeting; segments of different speakers may overlap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotation {
    pub meeting_id: String,
    pub segments: Vec<Segment>,
}

impl Annotation {
    pub fn new(meeting_id: impl Into<String>, segments: Vec<Segment>) -> Self {
        Self {
            meeting_id: meeting_id.into(),
            segments,
        }
    }

    /// Distinct speaker names in order of first appearance.
    pub fn speakers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.segments {
            if !out.contains(&s.speaker) {
                out.push(s.speaker.clone());
            }
        }
        out
    }

    pub fn end_time(&self) -> f64 {
        self.segments.iter().map(|s| s.offset).fold(0.0, f64::max)
    }

    /// Total time during which at least `min_speakers` speakers are active.
    pub fn time_with_at_least(&self, min_speakers: usize) -> f64 {
        let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            events.push((s.onset, 1));
            events.push((s.offset, -1));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut active, mut last, mut total) = (0i32, 0.0, 0.0);
        for (t, delta) in events {
            if active as usize >= min_speakers {
                total += t - last;
            }
            active += delta;
            last = t;
        }
        total
    }

    fn validate(&self) -> Result<()> {
        for s in &self.segments {
            if !(s.onset.is_finite() && s.offset.is_finite() && s.onset < s.offset) {
                return Err(Error::InvalidParameter(format!(
                    "segment of {} has onset {} >= offset {}",
                    s.speaker, s.onset, s.offset
                )));
            }
        }
        Ok(())
    }
}

/// Which part of the reference timeline is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringRegion {
    All,
    /// Everything except overlapped reference speech.
    Single,
    /// Reference speech with two or more active speakers.
    Overlap,
}

impl ScoringRegion {
    fn contains(self, ref_speakers: usize) -> bool {
        match self {
            Self::All => true,
            Self::Single => ref_speakers <= 1,
            Self::Overlap => ref_speakers >= 2,
        }
    }
}

impl std::str::FromStr for ScoringRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "single" => Ok(Self::Single),
            "overlap" => Ok(Self::Overlap),
            other => Err(Error::InvalidParameter(format!("unknown region '{other}'"))),
        }
    }
}

impl fmt::Display for ScoringRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Single => "single",
            Self::Overlap => "overlap",
        })
    }
}

/// Error components in seconds of speaker time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerReport {
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub scored_speech: f64,
    pub der: f64,
}

impl DerReport {
    fn from_tally(t: Tally) -> Result<Self> {
        if t.scored_speech <= 0.0 {
            return Err(Error::EmptyReference);
        }
        Ok(Self {
            missed: t.missed,
            false_alarm: t.false_alarm,
            confusion: t.confusion,
            scored_speech: t.scored_speech,
            der: (t.missed + t.false_alarm + t.confusion) / t.scored_speech,
        })
    }

    pub fn errors(&self) -> f64 {
        self.missed + self.false_alarm + self.confusion
    }

    /// `key=value` lines for machine consumption.
    pub fn to_key_values(&self) -> String {
        format!(
            "der={:.6}\nmissed={:.6}\nfalse_alarm={:.6}\nconfusion={:.6}\nscored_speech={:.6}\n",
            self.der, self.missed, self.false_alarm, self.confusion, self.scored_speech
        )
    }
}

impl fmt::Display for DerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DER {:.3} %", 100.0 * self.der)?;
        writeln!(f, "  missed speech   {:10.3} s", self.missed)?;
        writeln!(f, "  false alarm     {:10.3} s", self.false_alarm)?;
        writeln!(f, "  confusion       {:10.3} s", self.confusion)?;
        write!(f, "  scored speech   {:10.3} s", self.scored_speech)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    missed: f64,
    false_alarm: f64,
    confusion: f64,
    scored_speech: f64,
}

/// Raw error sums for all three regions under one speaker mapping.
#[derive(Debug, Clone, Copy)]
pub struct RegionScores {
    all: Tally,
    single: Tally,
    overlap: Tally,
}

impl RegionScores {
    pub fn report(&self, region: ScoringRegion) -> Result<DerReport> {
        DerReport::from_tally(match region {
            ScoringRegion::All => self.all,
            ScoringRegion::Single => self.single,
            ScoringRegion::Overlap => self.overlap,
        })
    }

    /// Error time of one region divided by the scored speech of the whole
    /// meeting; the single and overlap shares add up to the overall DER.
    pub fn share_of_total(&self, region: ScoringRegion) -> Result<f64> {
        let t = match region {
            ScoringRegion::All => self.all,
            ScoringRegion::Single => self.single,
            ScoringRegion::Overlap => self.overlap,
        };
        if self.all.scored_speech <= 0.0 {
            return Err(Error::EmptyReference);
        }
        Ok((t.missed + t.false_alarm + t.confusion) / self.all.scored_speech)
    }
}

/// An elementary scoring interval.
struct Piece {
    duration: f64,
    refs: Vec<usize>,
    hyps: Vec<usize>,
}

/// Cut the timeline into intervals on which the active speaker sets are
/// constant, dropping collar zones.
fn pieces(
    reference: &Annotation,
    hyp: &Annotation,
    ref_ids: &BTreeMap<&str, usize>,
    hyp_ids: &BTreeMap<&str, usize>,
    collar: f64,
) -> Vec<Piece> {
    // (time, delta, channel): channel 0 = collar, 1 = reference, 2 = hypothesis
    let mut events: Vec<(f64, i32, u8, usize)> = Vec::new();
    for s in &reference.segments {
        let id = ref_ids[s.speaker.as_str()];
        events.push((s.onset, 1, 1, id));
        events.push((s.offset, -1, 1, id));
        if collar > 0.0 {
            for b in [s.onset, s.offset] {
                events.push((b - collar, 1, 0, 0));
                events.push((b + collar, -1, 0, 0));
            }
        }
    }
    for s in &hyp.segments {
        let id = hyp_ids[s.speaker.as_str()];
        events.push((s.onset, 1, 2, id));
        events.push((s.offset, -1, 2, id));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ref_count = vec![0i32; ref_ids.len()];
    let mut hyp_count = vec![0i32; hyp_ids.len()];
    let mut collar_depth = 0i32;
    let mut out = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            let (_, delta, channel, id) = events[i];
            match channel {
                0 => collar_depth += delta,
                1 => ref_count[id] += delta,
                _ => hyp_count[id] += delta,
            }
            i += 1;
        }
        let Some(&(next, ..)) = events.get(i) else {
            break;
        };
        let refs: Vec<usize> = (0..ref_count.len()).filter(|&k| ref_count[k] > 0).collect();
        let hyps: Vec<usize> = (0..hyp_count.len()).filter(|&k| hyp_count[k] > 0).collect();
        if collar_depth == 0 && next > t && !(refs.is_empty() && hyps.is_empty()) {
            out.push(Piece {
                duration: next - t,
                refs,
                hyps,
            });
        }
    }
    out
}

fn speaker_ids(a: &Annotation) -> BTreeMap<&str, usize> {
    let mut ids = BTreeMap::new();
    for s in &a.segments {
        let n = ids.len();
        ids.entry(s.speaker.as_str()).or_insert(n);
    }
    ids
}

/// Optimal one-to-one reference→hypothesis mapping; `None` for unmapped
/// reference speakers.
fn optimal_mapping(pieces: &[Piece], n_ref: usize, n_hyp: usize) -> Vec<Option<usize>> {
    if n_ref == 0 || n_hyp == 0 {
        return vec![None; n_ref];
    }
    let mut joint = vec![vec![0.0f64; n_hyp]; n_ref];
    for p in pieces {
        for &r in &p.refs {
            for &h in &p.hyps {
                joint[r][h] += p.duration;
            }
        }
    }
    let n = n_ref.max(n_hyp);
    // Microsecond weights; the assignment solver needs an ordered integer type.
    let weights = Matrix::from_fn(n, n, |(r, h)| {
        if r < n_ref && h < n_hyp {
            (joint[r][h] * 1e6).round() as i64
        } else {
            0
        }
    });
    let (_, assignment) = kuhn_munkres(&weights);
    (0..n_ref)
        .map(|r| {
            let h = assignment[r];
            (h < n_hyp && joint[r][h] > 0.0).then_some(h)
        })
        .collect()
}

/// Score `hyp` against `reference` in all three regions at once.
pub fn score_regions(reference: &Annotation, hyp: &Annotation, collar_seconds: f64) -> Result<RegionScores> {
    if !(collar_seconds >= 0.0 && collar_seconds.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "collar must be non-negative, got {collar_seconds}"
        )));
    }
    reference.validate()?;
    hyp.validate()?;
    let ref_ids = speaker_ids(reference);
    let hyp_ids = speaker_ids(hyp);
    let pieces = pieces(reference, hyp, &ref_ids, &hyp_ids, collar_seconds);
    let mapping = optimal_mapping(&pieces, ref_ids.len(), hyp_ids.len());

    let mut scores = RegionScores {
        all: Tally::default(),
        single: Tally::default(),
        overlap: Tally::default(),
    };
    for p in &pieces {
        let nr = p.refs.len();
        let nh = p.hyps.len();
        let correct = p
            .refs
            .iter()
            .filter(|&&r| mapping[r].is_some_and(|h| p.hyps.contains(&h)))
            .count();
        let d = p.duration;
        let delta = Tally {
            missed: d * nr.saturating_sub(nh) as f64,
            false_alarm: d * nh.saturating_sub(nr) as f64,
            confusion: d * (nr.min(nh) - correct) as f64,
            scored_speech: d * nr as f64,
        };
        for (region, tally) in [
            (ScoringRegion::All, &mut scores.all),
            (ScoringRegion::Single, &mut scores.single),
            (ScoringRegion::Overlap, &mut scores.overlap),
        ] {
            if region.contains(nr) {
                tally.missed += delta.missed;
                tally.false_alarm += delta.false_alarm;
                tally.confusion += delta.confusion;
                tally.scored_speech += delta.scored_speech;
            }
        }
    }
    Ok(scores)
}

/// Diarization error rate of `hyp` on one region of `reference`.
pub fn compute_der(
    reference: &Annotation,
    hyp: &Annotation,
    collar_seconds: f64,
    region: ScoringRegion,
) -> Result<DerReport> {
    score_regions(reference, hyp, collar_seconds)?.report(region)
}
