//! Diarization error rate on hand-made annotations.

use framediar::scoring::{compute_der, score_regions, Annotation, ScoringRegion, Segment};

fn main() -> framediar::Result<()> {
    let reference = Annotation::new(
        "demo",
        vec![
            Segment::new("alice", 0.0, 10.0),
            Segment::new("bob", 8.0, 15.0),
            Segment::new("carol", 15.0, 20.0),
        ],
    );
    let hyp = Annotation::new(
        "demo",
        vec![
            Segment::new("s1", 0.2, 9.0),
            Segment::new("s2", 9.0, 16.0),
            Segment::new("s2", 17.0, 21.0),
        ],
    );

    let scores = score_regions(&reference, &hyp, 0.0)?;
    for region in [ScoringRegion::All, ScoringRegion::Single, ScoringRegion::Overlap] {
        println!("region={region}\n{}\n", scores.report(region)?);
    }
    for collar in [0.0, 0.25, 0.5] {
        let r = compute_der(&reference, &hyp, collar, ScoringRegion::All)?;
        println!("collar {collar:.2} s: DER {:.3}, scored {:.2} s", r.der, r.scored_speech);
    }
    Ok(())
}
