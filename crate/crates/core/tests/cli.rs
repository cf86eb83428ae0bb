use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn framediar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framediar")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulates a short three-speaker meeting and returns (fwe, rttm).
fn simulate(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let prefix = dir.join(format!("meet{seed}"));
    let seed = seed.to_string();
    let o = framediar(&[
        "simulate", "--speakers", "3", "--dim", "16", "--duration", "60", "--overlap", "0.2", "--seed", &seed, "--out",
        s(&prefix),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("overlap_ratio=") && out.contains("frames=6000"), "{out}");
    (prefix.with_extension("fwe"), prefix.with_extension("rttm"))
}

#[test]
fn help_and_usage_errors() {
    let help = framediar(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for cmd in ["simulate", "diarize", "score", "sweep-kappa"] {
        assert!(stdout(&help).contains(cmd));
    }
    assert_eq!(framediar(&[]).status.code(), Some(1));
    assert_eq!(framediar(&["diarize", "--bogus"]).status.code(), Some(1));
    assert_eq!(framediar(&["score", "--ref", "a.rttm"]).status.code(), Some(1));
}

#[test]
fn data_and_parameter_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.fwe");
    let o = framediar(&["diarize", "--embeddings", s(&missing), "--num-speakers", "2", "--output", s(&dir.path().join("h.rttm"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let garbage = dir.path().join("bad.rttm");
    std::fs::write(&garbage, "SPEAKER m 1 zero 1.0 <NA> <NA> A <NA> <NA>\n").unwrap();
    assert_eq!(framediar(&["score", "--ref", s(&garbage), "--hyp", s(&garbage)]).status.code(), Some(2));

    let o = framediar(&["simulate", "--speakers", "2", "--overlap", "0.7", "--silence", "0.5", "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));

    let (fwe, rttm) = simulate(dir.path(), 1);
    let o = framediar(&[
        "sweep-kappa", "--tracks", s(&fwe), s(&fwe), "--refs", s(&rttm), "--num-speakers", "3", "--output",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reference_scored_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (_, rttm) = simulate(dir.path(), 2);
    let csv = dir.path().join("scores.csv");
    for region in ["all", "overlap"] {
        let o = framediar(&["score", "--ref", s(&rttm), "--hyp", s(&rttm), "--region", region, "--csv", s(&csv)]);
        assert!(o.status.success());
        let out = stdout(&o);
        assert!(out.starts_with("DER 0.000 %"), "{out}");
        assert!(out.contains(&format!("region={region}")) && out.contains("der=0.000000"));
    }
    let rows: Vec<String> = std::fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], "meeting_id,region,collar,der,missed,false_alarm,confusion,scored_speech");
    assert!(rows[1].starts_with("meet2,all,0,0.000000,"));
}

#[test]
fn diarize_then_score_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (fwe, rttm) = simulate(dir.path(), 3);
    let hyp = dir.path().join("hyp.rttm");
    let o = framediar(&["diarize", "--embeddings", s(&fwe), "--num-speakers", "3", "--output", s(&hyp)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = std::fs::read_to_string(dir.path().join("hyp.rttm.diag.txt")).unwrap();
    for key in ["method=vmfmm", "init=kmeans", "kappa_max=25", "threshold=0.3", "em_iters=50"] {
        assert!(diag.contains(key), "{key} missing from\n{diag}");
    }
    let text = std::fs::read_to_string(&hyp).unwrap();
    assert!(text.lines().all(|l| l.starts_with("SPEAKER meet3 1 ")));

    let o = framediar(&["score", "--ref", s(&rttm), "--hyp", s(&hyp), "--collar", "0.25"]);
    assert!(o.status.success());
    let der: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("der="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..0.5).contains(&der), "{der}");
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let (fwe, rttm) = simulate(dir.path(), 4);
    let csv = dir.path().join("sweep.csv");
    let hyps = dir.path().join("hyps");
    let o = framediar(&[
        "sweep-kappa", "--tracks", s(&fwe), "--refs", s(&rttm), "--num-speakers", "3", "--jobs", "2", "--hyp-dir", s(&hyps),
        "--output", s(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "rows=14");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kappa_max,init,der_avg,der_single,der_overlap"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 14);
    let kappas: Vec<&str> = rows.iter().step_by(2).map(|r| r[0]).collect();
    assert_eq!(kappas, ["10", "25", "50", "75", "100", "150", "200"]);
    for r in &rows {
        for v in &r[2..] {
            let der: f64 = v.parse().unwrap();
            assert!((0.0..=1.0).contains(&der));
        }
    }
    assert_eq!(std::fs::read_dir(&hyps).unwrap().count(), 14);
}
