//! Command-line front end: `simulate`, `diarize`, `score` and `sweep-kappa`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::clustering::MixtureInit;
use crate::error::{Error, Result};
use crate::io::{
    format_rttm, parse_rttm, read_fwe, read_overlap_regions, read_vad_mask, write_atomic, write_fwe, write_rttm,
};
use crate::pipeline::{diarize, DiarizeConfig, Method, VadSource};
use crate::scoring::{score_regions, ScoringRegion};
use crate::sweep::{run_sweep, write_csv, SweepConfig, DEFAULT_KAPPA_GRID};
use crate::synth::{simulate_meeting, AlphaMode, MeetingConfig, PauseSchedule};

#[derive(Debug, Parser)]
#[command(name = "framediar", version, about = "Frame-wise embedding speaker diarization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic meeting: <out>.fwe and <out>.rttm.
    Simulate(SimulateArgs),
    /// Diarize an embedding track into a hypothesis RTTM.
    Diarize(DiarizeArgs),
    /// Score a hypothesis RTTM against a reference RTTM.
    Score(ScoreArgs),
    /// Sweep the concentration cap and the initialization; emit a CSV.
    SweepKappa(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub speakers: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 600.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0.01)]
    pub hop: f64,
    #[arg(long, default_value_t = 0.0)]
    pub overlap: f64,
    #[arg(long, default_value_t = 0.1)]
    pub silence: f64,
    #[arg(long, default_value_t = 50.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ramp | constant-0.5 | uniform-random
    #[arg(long, default_value = "ramp")]
    pub alpha_mode: AlphaMode,
    /// Minimum angle between speaker directions in degrees.
    #[arg(long, default_value_t = 60.0)]
    pub min_angle: f64,
    /// Energy ramp length at speech run edges in seconds.
    #[arg(long, default_value_t = 0.5)]
    pub energy_ramp: f64,
    /// Moving-average width of the embedding noise in frames; 1 disables.
    #[arg(long, default_value_t = 11)]
    pub noise_pool: usize,
    /// Disable short energy dips inside continuous speech.
    #[arg(long)]
    pub no_pauses: bool,
    /// Output prefix; the file stem becomes the meeting id.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    #[arg(long)]
    pub num_speakers: usize,
    #[arg(long, default_value = "vmfmm")]
    pub method: Method,
    #[arg(long, default_value = "kmeans")]
    pub init: MixtureInit,
    #[arg(long, default_value_t = 25.0)]
    pub kappa_max: f64,
    #[arg(long, default_value_t = 10.0)]
    pub kappa_init: f64,
    #[arg(long, default_value_t = 50)]
    pub em_iters: usize,
    /// EM iteration at which overinit fuses its extra component.
    #[arg(long, default_value_t = 20)]
    pub fuse_at: usize,
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1.3)]
    pub max_filter: f64,
    #[arg(long, default_value_t = 1.0)]
    pub min_filter: f64,
    /// energy | external | none
    #[arg(long, default_value = "energy")]
    pub vad: String,
    #[arg(long)]
    pub vad_mask: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub vad_window: f64,
    #[arg(long, default_value_t = 10.0)]
    pub vad_offset: f64,
    #[arg(long)]
    pub overlap_regions: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DiarizeArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Diagnostics report; defaults to <output>.diag.txt.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub collar: f64,
    #[arg(long, default_value = "all")]
    pub region: ScoringRegion,
    /// Append one result row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Embedding tracks.
    #[arg(long, num_args = 1.., required = true)]
    pub tracks: Vec<PathBuf>,
    /// Reference RTTMs, one per track in the same order.
    #[arg(long, num_args = 1.., required = true)]
    pub refs: Vec<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated concentration caps.
    #[arg(long, value_delimiter = ',')]
    pub kappa_grid: Option<Vec<f64>>,
    /// Comma-separated initializations.
    #[arg(long, value_delimiter = ',', default_value = "random,kmeans")]
    pub inits: Vec<MixtureInit>,
    #[arg(long, default_value_t = 0.0)]
    pub collar: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Directory receiving every job's hypothesis RTTM.
    #[arg(long)]
    pub hyp_dir: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Diarize(a) => cmd_diarize(&a, out),
        Command::Score(a) => cmd_score(&a, out),
        Command::SweepKappa(a) => cmd_sweep_kappa(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = MeetingConfig {
        num_speakers: a.speakers,
        duration_seconds: a.duration,
        hop_seconds: a.hop,
        embedding_dim: a.dim,
        kappa_true: a.kappa,
        overlap_ratio: a.overlap,
        silence_ratio: a.silence,
        seed: a.seed,
        min_separation_degrees: a.min_angle,
        alpha_mode: a.alpha_mode,
        ramp_seconds: a.energy_ramp,
        pauses: (!a.no_pauses).then(PauseSchedule::default),
        noise_pool_frames: a.noise_pool,
        ..Default::default()
    };
    let mut m = simulate_meeting(&cfg)?;
    let id = a
        .out
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "meeting".into());
    m.track.meeting_id = id.clone();
    m.reference.meeting_id = id;
    write_fwe(&with_extension(&a.out, "fwe"), &m.track)?;
    write_rttm(&with_extension(&a.out, "rttm"), &m.reference)?;
    writeln!(out, "overlap_ratio={:.4}", m.overlap_ratio())?;
    writeln!(out, "silence_ratio={:.4}", m.silence_ratio())?;
    writeln!(out, "frames={}", m.track.num_frames())?;
    Ok(())
}

fn pipeline_config(p: &PipelineArgs, hop: f64, num_frames: usize) -> Result<DiarizeConfig> {
    let mut cfg = DiarizeConfig::new(p.method, p.num_speakers);
    cfg.mixture.init = p.init;
    cfg.mixture.kappa_max = p.kappa_max;
    cfg.mixture.kappa_init = p.kappa_init;
    cfg.mixture.em_iters = p.em_iters;
    cfg.mixture.fuse_at = p.fuse_at;
    cfg.mixture.seed = p.seed;
    cfg.threshold = p.threshold;
    cfg.max_filter_seconds = p.max_filter;
    cfg.min_filter_seconds = p.min_filter;
    cfg.vad_window_seconds = p.vad_window;
    cfg.vad_offset_db = p.vad_offset;
    if !(p.kappa_max > 0.0) {
        return Err(Error::InvalidParameter("--kappa-max must be positive".into()));
    }
    cfg.vad = match p.vad.as_str() {
        "energy" => VadSource::Energy,
        "none" => VadSource::None,
        "external" => {
            let path = p
                .vad_mask
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--vad external needs --vad-mask".into()))?;
            let mask = read_vad_mask(path, hop)?;
            if mask.len() != num_frames {
                return Err(Error::Format {
                    path: path.clone(),
                    msg: format!("mask has {} frames, track has {num_frames}", mask.len()),
                });
            }
            VadSource::External(mask)
        }
        other => return Err(Error::InvalidParameter(format!("unknown VAD source '{other}'"))),
    };
    if let Some(path) = &p.overlap_regions {
        cfg.overlap_regions = Some(read_overlap_regions(path)?);
    }
    Ok(cfg)
}

pub fn cmd_diarize(a: &DiarizeArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let track = read_fwe(&a.embeddings)?;
    let cfg = pipeline_config(&a.pipeline, track.hop_seconds, track.num_frames())?;
    let result = diarize(&track, &cfg)?;
    let hyp = result.activity.to_annotation(&track.meeting_id);
    write_atomic(&a.output, format_rttm(&hyp).as_bytes())?;
    let diag_path = a.diagnostics.clone().unwrap_or_else(|| with_extension(&a.output, "diag.txt"));
    write_atomic(&diag_path, result.diagnostics.render(&cfg).as_bytes())?;
    writeln!(out, "segments={}", hyp.segments.len())?;
    writeln!(out, "voiced_fraction={:.4}", result.diagnostics.voiced_fraction)?;
    Ok(())
}

pub fn cmd_score(a: &ScoreArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if !(a.collar >= 0.0) {
        return Err(Error::InvalidParameter("--collar must be non-negative".into()));
    }
    let reference = parse_rttm(&a.reference)?;
    let hyp = parse_rttm(&a.hyp)?;
    let report = score_regions(&reference, &hyp, a.collar)?.report(a.region)?;
    writeln!(out, "{report}")?;
    write!(out, "region={}\ncollar={}\n{}", a.region, a.collar, report.to_key_values())?;
    if let Some(csv) = &a.csv {
        let fresh = !csv.exists();
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(csv)?;
        if fresh {
            writeln!(f, "meeting_id,region,collar,der,missed,false_alarm,confusion,scored_speech")?;
        }
        writeln!(
            f,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            reference.meeting_id,
            a.region,
            a.collar,
            report.der,
            report.missed,
            report.false_alarm,
            report.confusion,
            report.scored_speech
        )?;
    }
    Ok(())
}

pub fn cmd_sweep_kappa(a: &SweepArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if a.tracks.len() != a.refs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} tracks but {} references",
            a.tracks.len(),
            a.refs.len()
        )));
    }
    let mut inputs = Vec::with_capacity(a.tracks.len());
    for (t, r) in a.tracks.iter().zip(&a.refs) {
        inputs.push((read_fwe(t)?, parse_rttm(r)?));
    }
    let (hop, frames) = (inputs[0].0.hop_seconds, inputs[0].0.num_frames());
    let mut cfg = SweepConfig::new(a.pipeline.num_speakers);
    cfg.base = pipeline_config(&a.pipeline, hop, frames)?;
    cfg.kappa_grid = a.kappa_grid.clone().unwrap_or_else(|| DEFAULT_KAPPA_GRID.to_vec());
    cfg.inits = a.inits.clone();
    cfg.collar_seconds = a.collar;
    cfg.hyp_dir = a.hyp_dir.clone();
    if let Some(dir) = &cfg.hyp_dir {
        std::fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let rows = pool.install(|| run_sweep(&inputs, &cfg))?;
    write_csv(&a.output, &rows)?;
    writeln!(out, "rows={}", rows.len())?;
    Ok(())
}
