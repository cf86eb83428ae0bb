use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::VadMask;
use crate::pipeline::OverlapRegions;

/// One `0`/`1` per line.
pub fn parse_vad_mask(text: &str, hop_seconds: f64, path: &Path) -> Result<VadMask> {
    let mut voiced = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match line.trim() {
            "" => continue,
            "0" => voiced.push(false),
            "1" => voiced.push(true),
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected 0 or 1, found '{other}'"),
                })
            }
        }
    }
    Ok(VadMask { voiced, hop_seconds })
}

pub fn read_vad_mask(path: &Path, hop_seconds: f64) -> Result<VadMask> {
    parse_vad_mask(&std::fs::read_to_string(path)?, hop_seconds, path)
}

/// Overlap regions as `onset offset` lines in seconds, or RTTM SPEAKER
/// records (onset and duration).
pub fn parse_overlap_regions(text: &str, path: &Path) -> Result<OverlapRegions> {
    let mut intervals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        match fields.as_slice() {
            [] => continue,
            ["SPEAKER", _, _, onset, dur, ..] => {
                let onset = num(onset)?;
                intervals.push((onset, onset + num(dur)?));
            }
            [first, ..] if first.starts_with('#') => continue,
            [onset, offset] => intervals.push((num(onset)?, num(offset)?)),
            _ => return Err(err("expected 'onset offset'")),
        }
    }
    OverlapRegions::new(intervals)
}

pub fn read_overlap_regions(path: &Path) -> Result<OverlapRegions> {
    parse_overlap_regions(&std::fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_lines() {
        let m = parse_vad_mask("0\n1\n\n1\n", 0.01, Path::new("m")).unwrap();
        assert_eq!(m.voiced, vec![false, true, true]);
        assert!(matches!(
            parse_vad_mask("0\n2\n", 0.01, Path::new("m")),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn region_lines() {
        let r = parse_overlap_regions("# comment\n3.0 4.0\n1 2.5\nSPEAKER m 1 3.5 1.0 <NA> <NA> ov <NA> <NA>\n", Path::new("r")).unwrap();
        assert_eq!(r.intervals(), &[(1.0, 2.5), (3.0, 4.5)]);
        assert!(parse_overlap_regions("1 2 3\n", Path::new("r")).is_err());
        assert!(parse_overlap_regions("2 1\n", Path::new("r")).is_err());
    }
}
