//! RTTM speaker records:
//! `SPEAKER <file> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scoring::{Annotation, Segment};

/// RTTM text for an annotation, one line per segment, times with three
/// decimals.
pub fn format_rttm(ann: &Annotation) -> String {
    let mut out = String::new();
    for s in &ann.segments {
        writeln!(
            out,
            "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            ann.meeting_id,
            s.onset,
            s.duration(),
            s.speaker
        )
        .unwrap();
    }
    out
}

pub fn write_rttm(path: &Path, ann: &Annotation) -> Result<()> {
    super::write_atomic(path, format_rttm(ann).as_bytes())?;
    Ok(())
}

pub fn parse_rttm(path: &Path) -> Result<Annotation> {
    let text = std::fs::read_to_string(path)?;
    parse_rttm_str(&text, path)
}

/// Parse SPEAKER records; other record types and blank lines are skipped.
/// The meeting id is taken from the first SPEAKER record.
pub fn parse_rttm_str(text: &str, path: &Path) -> Result<Annotation> {
    let mut ann = Annotation::default();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.first() != Some(&"SPEAKER") {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_string(),
        };
        if fields.len() < 8 {
            return Err(err("SPEAKER record needs at least 8 fields"));
        }
        let onset: f64 = fields[3].parse().map_err(|_| err("bad onset"))?;
        let duration: f64 = fields[4].parse().map_err(|_| err("bad duration"))?;
        if !(onset.is_finite() && duration.is_finite() && duration > 0.0) {
            return Err(err("onset must be finite and duration positive"));
        }
        if ann.segments.is_empty() {
            ann.meeting_id = fields[1].to_string();
        }
        ann.segments.push(Segment::new(fields[7], onset, onset + duration));
    }
    Ok(ann)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_speaker_line() {
        let a = parse_rttm_str("SPEAKER m 1 0.000 2.500 <NA> <NA> spk0 <NA> <NA>\n", Path::new("r")).unwrap();
        assert_eq!(a.meeting_id, "m");
        assert_eq!(a.segments, vec![Segment::new("spk0", 0.0, 2.5)]);
    }

    #[test]
    fn empty_and_foreign_records() {
        assert!(parse_rttm_str("", Path::new("r")).unwrap().segments.is_empty());
        let a = parse_rttm_str("SPKR-INFO m 1 <NA> <NA> <NA> unknown a <NA>\n\n", Path::new("r")).unwrap();
        assert!(a.segments.is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "SPEAKER m 1 0 1 <NA> <NA> a <NA> <NA>\nSPEAKER m 1 zero 1 <NA> <NA> a <NA> <NA>\n";
        match parse_rttm_str(text, Path::new("r")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_rttm_str("SPEAKER m 1 0 -1 <NA> <NA> a\n", Path::new("r")).is_err());
    }

    #[test]
    fn format_then_parse() {
        let a = Annotation::new("meet", vec![Segment::new("spk1", 1.25, 3.5), Segment::new("spk0", 0.0, 0.01)]);
        let text = format_rttm(&a);
        assert_eq!(text.lines().next().unwrap(), "SPEAKER meet 1 1.250 2.250 <NA> <NA> spk1 <NA> <NA>");
        assert_eq!(parse_rttm_str(&text, Path::new("r")).unwrap(), a);
    }
}
