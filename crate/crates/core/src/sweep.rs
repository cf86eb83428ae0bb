//! Grid sweep over the concentration cap and the mixture initialization.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::clustering::MixtureInit;
use crate::error::{Error, Result};
use crate::geometry::FrameEmbeddingTrack;
use crate::io::{format_rttm, write_atomic};
use crate::pipeline::{diarize, DiarizeConfig, Method};
use crate::scoring::{score_regions, Annotation, ScoringRegion};

pub const DEFAULT_KAPPA_GRID: [f64; 7] = [10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0];
pub const CSV_HEADER: &str = "kappa_max,init,der_avg,der_single,der_overlap";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kappa_grid: Vec<f64>,
    pub inits: Vec<MixtureInit>,
    /// Pipeline settings shared by every job; `kappa_max` and `init` are
    /// overridden per grid point and the method is forced to vmfmm.
    pub base: DiarizeConfig,
    pub collar_seconds: f64,
    /// When set, every job's hypothesis RTTM is written here.
    pub hyp_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(num_speakers: usize) -> Self {
        Self {
            kappa_grid: DEFAULT_KAPPA_GRID.to_vec(),
            inits: vec![MixtureInit::Random, MixtureInit::KMeans],
            base: DiarizeConfig::new(Method::Vmfmm, num_speakers),
            collar_seconds: 0.0,
            hyp_dir: None,
        }
    }
}

/// DERs averaged over all tracks for one grid point. A region average is
/// `None` when no track has reference speech in that region.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kappa_max: f64,
    pub init: MixtureInit,
    pub der_avg: f64,
    pub der_single: Option<f64>,
    pub der_overlap: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct JobScores {
    all: f64,
    single: Option<f64>,
    overlap: Option<f64>,
}

fn region_der(scores: &crate::scoring::RegionScores, region: ScoringRegion) -> Result<Option<f64>> {
    match scores.report(region) {
        Ok(r) => Ok(Some(r.der)),
        Err(Error::EmptyReference) => Ok(None),
        Err(e) => Err(e),
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Diarize and score every (κ_max, init, track) combination in parallel.
/// Rows come out in grid order: κ_max outer, init inner.
pub fn run_sweep(tracks: &[(FrameEmbeddingTrack, Annotation)], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if tracks.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one track".into()));
    }
    if let Some(&k) = cfg.kappa_grid.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidParameter(format!("kappa_max {k} must be positive")));
    }
    let grid: Vec<(f64, MixtureInit)> = cfg
        .kappa_grid
        .iter()
        .flat_map(|&k| cfg.inits.iter().map(move |&i| (k, i)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..tracks.len()).map(move |t| (g, t)))
        .collect();

    let scores: Vec<JobScores> = jobs
        .par_iter()
        .map(|&(g, t)| {
            let (kappa_max, init) = grid[g];
            let (track, reference) = &tracks[t];
            let mut dc = cfg.base.clone();
            dc.method = Method::Vmfmm;
            dc.mixture.kappa_max = kappa_max;
            dc.mixture.init = init;
            let out = diarize(track, &dc)?;
            let hyp = out.activity.to_annotation(&reference.meeting_id);
            if let Some(dir) = &cfg.hyp_dir {
                let name = format!("{}_k{}_{}.rttm", track.meeting_id, kappa_max, init);
                write_atomic(&dir.join(name), format_rttm(&hyp).as_bytes())?;
            }
            let s = score_regions(reference, &hyp, cfg.collar_seconds)?;
            Ok(JobScores {
                all: s.report(ScoringRegion::All)?.der,
                single: region_der(&s, ScoringRegion::Single)?,
                overlap: region_der(&s, ScoringRegion::Overlap)?,
            })
        })
        .collect::<Result<_>>()?;

    let n = tracks.len();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &(kappa_max, init))| {
            let rows = &scores[g * n..(g + 1) * n];
            SweepRow {
                kappa_max,
                init,
                der_avg: rows.iter().map(|s| s.all).sum::<f64>() / n as f64,
                der_single: mean(rows.iter().map(|s| s.single)),
                der_overlap: mean(rows.iter().map(|s| s.overlap)),
            }
        })
        .collect())
}

/// CSV with [`CSV_HEADER`]; undefined region averages are left empty.
pub fn format_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{:.6},{},{}",
            r.kappa_max,
            r.init,
            r.der_avg,
            opt(r.der_single),
            opt(r.der_overlap)
        )
        .unwrap();
    }
    s
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_atomic(path, format_csv(rows).as_bytes())?;
    Ok(())
}
