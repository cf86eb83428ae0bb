//! Generate a synthetic meeting and write it as FWE + RTTM.

use framediar::io::{write_fwe, write_rttm};
use framediar::synth::{simulate_meeting, AlphaMode, MeetingConfig};

fn main() -> framediar::Result<()> {
    let cfg = MeetingConfig {
        num_speakers: 4,
        duration_seconds: 180.0,
        embedding_dim: 32,
        overlap_ratio: 0.2,
        alpha_mode: AlphaMode::Ramp,
        seed: 11,
        ..Default::default()
    };
    let m = simulate_meeting(&cfg)?;
    println!(
        "{} frames, overlap ratio {:.3}, silence ratio {:.3}, {} reference segments",
        m.track.num_frames(),
        m.overlap_ratio(),
        m.silence_ratio(),
        m.reference.segments.len()
    );
    let gram = m.directions.dot(&m.directions.t());
    let closest = (0..4)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| gram[[i, j]].acos().to_degrees())
        .fold(180.0, f64::min);
    println!("closest pair of speaker directions: {closest:.1} degrees");
    for seg in m.reference.segments.iter().take(6) {
        println!("  {} {:7.2} {:7.2}", seg.speaker, seg.onset, seg.offset);
    }

    let dir = std::env::temp_dir().join("framediar-example");
    std::fs::create_dir_all(&dir)?;
    write_fwe(&dir.join("sim11.fwe"), &m.track)?;
    write_rttm(&dir.join("sim11.rttm"), &m.reference)?;
    println!("wrote {}", dir.display());
    Ok(())
}
