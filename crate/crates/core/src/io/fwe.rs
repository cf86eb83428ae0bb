//! FWE track files.
//!
//! Binary layout (little-endian): magic `FWE1`, `u32` frame count T, `u32`
//! dimension E, `f32` hop in seconds, `u8` flags (bit 0: energies present),
//! T·E `f32` embeddings in row-major order, then T `f32` energies in dB if
//! flagged.
//!
//! A whitespace text variant is accepted on read: a header line
//! `T E hop has_energy` followed by T rows of E values, each row ending with
//! the frame energy when `has_energy` is 1.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::FrameEmbeddingTrack;

pub const FWE_MAGIC: &[u8; 4] = b"FWE1";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 1;

pub fn encode_fwe(track: &FrameEmbeddingTrack) -> Vec<u8> {
    let (t, e) = track.frames.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t * (e + 1));
    out.extend_from_slice(FWE_MAGIC);
    out.extend_from_slice(&(t as u32).to_le_bytes());
    out.extend_from_slice(&(e as u32).to_le_bytes());
    out.extend_from_slice(&(track.hop_seconds as f32).to_le_bytes());
    out.push(track.energy_db.is_some() as u8);
    for v in track.frames.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    if let Some(energy) = &track.energy_db {
        for v in energy {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_fwe(path: &Path, track: &FrameEmbeddingTrack) -> Result<()> {
    super::write_atomic(path, &encode_fwe(track))?;
    Ok(())
}

/// Read a binary or text FWE file. The meeting id is the file stem.
pub fn read_fwe(path: &Path) -> Result<FrameEmbeddingTrack> {
    let bytes = std::fs::read(path)?;
    let meeting_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_fwe(&bytes, meeting_id, path)
}

pub fn decode_fwe(bytes: &[u8], meeting_id: String, path: &Path) -> Result<FrameEmbeddingTrack> {
    let bad = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    if !bytes.starts_with(FWE_MAGIC) {
        let text = std::str::from_utf8(bytes).map_err(|_| bad("neither FWE1 binary nor text".into()))?;
        return decode_text(text, meeting_id, path);
    }
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let t = u32_at(4) as usize;
    let e = u32_at(8) as usize;
    let hop = f32::from_le_bytes(bytes[12..16].try_into().unwrap()) as f64;
    let flags = bytes[16];
    let has_energy = flags & 1 == 1;
    let expected = HEADER_LEN + 4 * (t * e + if has_energy { t } else { 0 });
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let floats: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let frames = Array2::from_shape_vec((t, e), floats[..t * e].to_vec()).map_err(|err| bad(err.to_string()))?;
    let energy = has_energy.then(|| floats[t * e..].to_vec());
    FrameEmbeddingTrack::new(frames, hop, energy, meeting_id)
}

fn decode_text(text: &str, meeting_id: String, path: &Path) -> Result<FrameEmbeddingTrack> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(hline, "header must be 'T E hop has_energy'".into()));
    }
    let t: usize = fields[0].parse().map_err(|_| parse_err(hline, "bad frame count".into()))?;
    let e: usize = fields[1].parse().map_err(|_| parse_err(hline, "bad dimension".into()))?;
    let hop: f64 = fields[2].parse().map_err(|_| parse_err(hline, "bad hop".into()))?;
    let has_energy = match fields[3] {
        "0" => false,
        "1" => true,
        _ => return Err(parse_err(hline, "has_energy must be 0 or 1".into())),
    };
    let width = e + has_energy as usize;
    let mut frames = Vec::with_capacity(t * e);
    let mut energy = Vec::new();
    let mut rows = 0;
    for (ln, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|err| parse_err(ln, err.to_string()))?;
        if vals.len() != width {
            return Err(parse_err(ln, format!("expected {width} values, found {}", vals.len())));
        }
        frames.extend_from_slice(&vals[..e]);
        if has_energy {
            energy.push(vals[e]);
        }
        rows += 1;
    }
    if rows != t {
        return Err(parse_err(hline, format!("header announces {t} rows, found {rows}")));
    }
    let frames = Array2::from_shape_vec((t, e), frames).expect("row count checked");
    FrameEmbeddingTrack::new(frames, hop, has_energy.then_some(energy), meeting_id)
}
