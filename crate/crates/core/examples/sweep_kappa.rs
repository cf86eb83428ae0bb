//! Sweep the concentration cap over a few simulated meetings.

use framediar::sweep::{format_csv, run_sweep, SweepConfig};
use framediar::synth::{simulate_meeting, MeetingConfig};

fn main() -> framediar::Result<()> {
    let tracks = (0..3)
        .map(|seed| {
            let m = simulate_meeting(&MeetingConfig {
                num_speakers: 4,
                duration_seconds: 120.0,
                embedding_dim: 32,
                kappa_true: 200.0,
                overlap_ratio: 0.3,
                seed,
                ..Default::default()
            })?;
            Ok((m.track, m.reference))
        })
        .collect::<framediar::Result<Vec<_>>>()?;
    let rows = run_sweep(&tracks, &SweepConfig::new(4))?;
    print!("{}", format_csv(&rows));
    Ok(())
}
