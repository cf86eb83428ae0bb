//! File formats: FWE embedding tracks, RTTM speaker segments, plain-text VAD
//! masks and overlap-region lists.

mod fwe;
mod rttm;
mod text;

pub use fwe::{decode_fwe, encode_fwe, read_fwe, write_fwe, FWE_MAGIC};
pub use rttm::{format_rttm, parse_rttm, parse_rttm_str, write_rttm};
pub use text::{parse_overlap_regions, parse_vad_mask, read_overlap_regions, read_vad_mask};

use std::path::Path;

/// Write `bytes` to `path` via a sibling temporary file and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
