//! End-to-end diarization of a simulated meeting with both methods.

use framediar::pipeline::{diarize, DiarizeConfig, Method};
use framediar::scoring::{score_regions, ScoringRegion};
use framediar::synth::{simulate_meeting, MeetingConfig};

fn main() -> framediar::Result<()> {
    let m = simulate_meeting(&MeetingConfig {
        num_speakers: 5,
        duration_seconds: 300.0,
        embedding_dim: 64,
        overlap_ratio: 0.25,
        seed: 3,
        ..Default::default()
    })?;

    for method in [Method::KMeans, Method::Vmfmm] {
        let cfg = DiarizeConfig::new(method, 5);
        let out = diarize(&m.track, &cfg)?;
        let hyp = out.activity.to_annotation(&m.track.meeting_id);
        let scores = score_regions(&m.reference, &hyp, 0.0)?;
        let der = |r| scores.report(r).map(|x| 100.0 * x.der).unwrap_or(f64::NAN);
        println!(
            "{method:>6}: DER {:.2} %  single {:.2} %  overlap {:.2} %  (voiced {:.1} % of frames)",
            der(ScoringRegion::All),
            der(ScoringRegion::Single),
            der(ScoringRegion::Overlap),
            100.0 * out.diagnostics.voiced_fraction
        );
        if method == Method::Vmfmm {
            println!("\n{}", out.diagnostics.render(&cfg).lines().take(15).collect::<Vec<_>>().join("\n"));
        }
    }
    Ok(())
}
