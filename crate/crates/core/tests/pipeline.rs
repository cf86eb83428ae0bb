use framediar::clustering::PosteriorMatrix;
use framediar::geodesic::{optimal_alpha, SpeakerAnchorPair};
use framediar::io::{format_rttm, parse_rttm_str};
use framediar::pipeline::{
    default_speaker_names, diarize, morph_filter, threshold_posteriors, ActivityMatrix, DiarizeConfig, Method,
};
use framediar::scoring::{compute_der, ScoringRegion};
use framediar::synth::{simulate_meeting, MeetingConfig, SimulatedMeeting};
use ndarray::Array2;
use proptest::prelude::*;
use std::path::Path;

fn small_meeting(overlap: f64, seed: u64) -> SimulatedMeeting {
    simulate_meeting(&MeetingConfig {
        num_speakers: 3,
        duration_seconds: 90.0,
        embedding_dim: 16,
        overlap_ratio: overlap,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn posterior_strategy() -> impl Strategy<Value = PosteriorMatrix> {
    (1usize..7, 1usize..30).prop_flat_map(|(k, t)| {
        (
            prop::collection::vec(0.001f64..1.0, k * t),
            prop::collection::vec(any::<bool>(), t),
        )
            .prop_map(move |(raw, voiced)| {
                let mut g = Array2::from_shape_vec((t, k), raw).unwrap();
                for (mut row, &v) in g.rows_mut().into_iter().zip(&voiced) {
                    let s = row.sum();
                    if v {
                        row /= s;
                    } else {
                        row.fill(0.0);
                    }
                }
                let mut p = PosteriorMatrix::all_voiced(g);
                p.voiced = voiced;
                p
            })
    })
}

fn activity_strategy() -> impl Strategy<Value = ActivityMatrix> {
    (1usize..4, 1usize..80).prop_flat_map(|(k, t)| {
        prop::collection::vec(prop::bool::weighted(0.4), k * t).prop_map(move |bits| {
            ActivityMatrix::new(Array2::from_shape_vec((t, k), bits).unwrap(), 1.0, default_speaker_names(k)).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn thresholding_bounds_the_speaker_count(g in posterior_strategy(), theta in 0.05f64..0.95) {
        let act = threshold_posteriors(&g, theta, 0.01).unwrap();
        let bound = ((1.0 / theta).floor() as usize).max(1);
        for (count, &v) in act.active_counts().iter().zip(&g.voiced) {
            if v {
                prop_assert!(*count >= 1 && *count <= bound, "count {} bound {}", count, bound);
            } else {
                prop_assert_eq!(*count, 0);
            }
        }
    }

    #[test]
    fn closing_with_equal_windows_is_idempotent(act in activity_strategy(), w in 1usize..12) {
        let once = morph_filter(&act, w as f64, w as f64).unwrap();
        let twice = morph_filter(&once, w as f64, w as f64).unwrap();
        prop_assert_eq!(once.active, twice.active);
    }

    #[test]
    fn activity_survives_the_annotation_round_trip(act in activity_strategy()) {
        let ann = act.to_annotation("m");
        let back = ActivityMatrix::from_annotation(&ann, act.num_frames(), act.hop_seconds);
        // Speakers that are never active do not appear in the annotation.
        for (name, col) in act.speaker_names.iter().zip(act.active.columns()) {
            let expected: Vec<bool> = col.to_vec();
            match back.speaker_names.iter().position(|n| n == name) {
                Some(j) => prop_assert_eq!(back.active.column(j).to_vec(), expected),
                None => prop_assert!(expected.iter().all(|&a| !a)),
            }
        }
    }
}

/// Morph windows of one hop leave the thresholded activity untouched.
fn unfiltered(method: Method, k: usize) -> DiarizeConfig {
    let mut cfg = DiarizeConfig::new(method, k);
    cfg.max_filter_seconds = 0.01;
    cfg.min_filter_seconds = 0.01;
    cfg
}

#[test]
fn voiced_frames_always_have_a_speaker_before_filtering() {
    let m = small_meeting(0.2, 4);
    let km = diarize(&m.track, &unfiltered(Method::KMeans, 3)).unwrap();
    let vm = diarize(&m.track, &unfiltered(Method::Vmfmm, 3)).unwrap();
    let voiced = &vm.posteriors.as_ref().unwrap().voiced;
    for (t, &v) in voiced.iter().enumerate() {
        let (a, b) = (km.activity.active_counts()[t], vm.activity.active_counts()[t]);
        if v {
            assert_eq!(a, 1, "frame {t}");
            assert!((1..=3).contains(&b), "frame {t}");
        } else {
            assert_eq!((a, b), (0, 0), "frame {t}");
        }
    }
}

#[test]
fn diarize_is_deterministic() {
    let m = small_meeting(0.2, 8);
    for method in [Method::KMeans, Method::Vmfmm] {
        let cfg = DiarizeConfig::new(method, 3);
        let a = diarize(&m.track, &cfg).unwrap();
        let b = diarize(&m.track, &cfg).unwrap();
        assert_eq!(a.activity, b.activity);
        assert_eq!(a.diagnostics.render(&cfg), b.diagnostics.render(&cfg));
    }
}

#[test]
fn clean_meeting_is_diarized_nearly_perfectly() {
    let m = small_meeting(0.0, 2);
    for method in [Method::KMeans, Method::Vmfmm] {
        let out = diarize(&m.track, &DiarizeConfig::new(method, 3)).unwrap();
        let der = compute_der(&m.reference, &out.activity.to_annotation("m"), 0.0, ScoringRegion::All).unwrap().der;
        assert!(der < 0.05, "{method}: {der}");
    }
}

#[test]
fn simulator_reference_scores_zero_against_itself() {
    let m = small_meeting(0.3, 1);
    let parsed = parse_rttm_str(&format_rttm(&m.reference), Path::new("sim.rttm")).unwrap();
    let again = parse_rttm_str(&format_rttm(&parsed), Path::new("sim.rttm")).unwrap();
    assert_eq!(compute_der(&parsed, &again, 0.0, ScoringRegion::All).unwrap().der, 0.0);
}

fn mean_alpha_error(dim: usize, kappa: f64) -> f64 {
    let m = simulate_meeting(&MeetingConfig {
        num_speakers: 4,
        duration_seconds: 120.0,
        embedding_dim: dim,
        kappa_true: kappa,
        overlap_ratio: 0.3,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let (mut total, mut n) = (0.0, 0usize);
    for (t, of) in m.overlap_frames.iter().enumerate() {
        if let Some((a, b, alpha)) = *of {
            let anchors = SpeakerAnchorPair::new(m.directions.row(a).to_owned(), m.directions.row(b).to_owned()).unwrap();
            total += (optimal_alpha(&anchors, m.track.frames.row(t)).unwrap() - alpha).abs();
            n += 1;
        }
    }
    assert!(n > 1000);
    total / n as f64
}

#[test]
fn overlap_weights_are_recoverable() {
    // The chord projection is biased toward 0.5 by the shrinkage of a vMF
    // draw (mean cosine A_E(κ)), so the tolerance needs κ to grow with E.
    let errs: Vec<_> = [(16, 50.0), (32, 50.0), (64, 200.0)]
        .into_iter()
        .map(|(dim, kappa)| (dim, kappa, mean_alpha_error(dim, kappa)))
        .collect();
    for (dim, kappa, err) in errs {
        assert!(err < 0.1, "dim {dim} kappa {kappa}: {err}");
    }
}
