use framediar::io::{format_rttm, parse_rttm_str};
use framediar::scoring::{compute_der, score_regions, Annotation, ScoringRegion, Segment};
use framediar::Error;
use proptest::prelude::*;
use std::path::Path;

fn annotation(prefix: &'static str, speakers: usize) -> impl Strategy<Value = Annotation> {
    prop::collection::vec((0..speakers, 0.0f64..30.0, 0.05f64..6.0), 1..10).prop_map(move |v| {
        Annotation::new(
            "m",
            v.into_iter()
                .map(|(s, on, len)| Segment::new(format!("{prefix}{s}"), on, on + len))
                .collect(),
        )
    })
}

fn scored_speech(reference: &Annotation, hyp: &Annotation, collar: f64) -> f64 {
    match compute_der(reference, hyp, collar, ScoringRegion::All) {
        Ok(r) => r.scored_speech,
        Err(Error::EmptyReference) => 0.0,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #[test]
    fn relabeling_the_hypothesis_leaves_der_unchanged(
        reference in annotation("r", 3),
        hyp in annotation("h", 4),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let relabeled = Annotation::new(
            "m",
            hyp.segments
                .iter()
                .map(|s| Segment::new(format!("z{}", perm[s.speaker[1..].parse::<usize>().unwrap()]), s.onset, s.offset))
                .collect(),
        );
        let a = compute_der(&reference, &hyp, 0.0, ScoringRegion::All).unwrap();
        let b = compute_der(&reference, &relabeled, 0.0, ScoringRegion::All).unwrap();
        prop_assert!((a.der - b.der).abs() < 1e-12);
    }

    #[test]
    fn single_and_overlap_recombine_to_all(reference in annotation("r", 3), hyp in annotation("h", 3)) {
        let s = score_regions(&reference, &hyp, 0.0).unwrap();
        let all = s.report(ScoringRegion::All).unwrap();
        let errors = |r: ScoringRegion| s.report(r).map(|x| x.errors()).unwrap_or(0.0);
        let sum = errors(ScoringRegion::Single) + errors(ScoringRegion::Overlap);
        prop_assert!((sum / all.scored_speech - all.der).abs() < 1e-9);
        prop_assert!(all.missed >= 0.0 && all.false_alarm >= 0.0 && all.confusion >= 0.0);
        prop_assert!((all.der - all.errors() / all.scored_speech).abs() < 1e-12);
    }

    #[test]
    fn wider_collar_never_scores_more_speech(
        reference in annotation("r", 3),
        hyp in annotation("h", 3),
        c1 in 0.0f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        prop_assert!(scored_speech(&reference, &hyp, c1 + extra) <= scored_speech(&reference, &hyp, c1) + 1e-9);
    }

    #[test]
    fn rttm_round_trip_is_stable(reference in annotation("spk", 4)) {
        let text = format_rttm(&reference);
        let parsed = parse_rttm_str(&text, Path::new("mem.rttm")).unwrap();
        prop_assert_eq!(format_rttm(&parsed), text);
        let own = compute_der(&parsed, &parsed, 0.0, ScoringRegion::All).unwrap();
        prop_assert_eq!(own.der, 0.0);
        // Onset and duration are each rounded to the millisecond, so a segment
        // loses or gains at most 1.5 ms.
        let r = compute_der(&reference, &parsed, 0.0, ScoringRegion::All).unwrap();
        let bound = 0.0015 * reference.segments.len() as f64 / r.scored_speech + 1e-9;
        prop_assert!(r.der <= bound, "der {} bound {}", r.der, bound);
    }
}
