//! Reading and writing the file formats used by the command-line tool.

use std::path::Path;

use framediar::geometry::FrameEmbeddingTrack;
use framediar::io::{decode_fwe, encode_fwe, format_rttm, parse_overlap_regions, parse_rttm_str, parse_vad_mask};
use framediar::scoring::{Annotation, Segment};
use ndarray::Array2;

fn main() -> framediar::Result<()> {
    let frames = Array2::from_shape_fn((5, 3), |(t, e)| (t * 3 + e) as f64 / 10.0);
    let track = FrameEmbeddingTrack::new(frames, 0.01, Some(vec![-30.0, -31.0, -60.0, -29.5, -30.5]), "io")?;
    let bytes = encode_fwe(&track);
    println!("FWE: {} bytes, magic {:?}", bytes.len(), std::str::from_utf8(&bytes[..4]).unwrap());
    let back = decode_fwe(&bytes, "io".into(), Path::new("io.fwe"))?;
    println!("  round trip exact up to f32: {}", back.frames.iter().zip(&track.frames).all(|(a, b)| (a - b).abs() < 1e-6));

    let ann = Annotation::new("io", vec![Segment::new("A", 0.0, 1.5), Segment::new("B", 1.25, 3.0)]);
    let rttm = format_rttm(&ann);
    print!("RTTM:\n{rttm}");
    println!("  parsed {} segments", parse_rttm_str(&rttm, Path::new("io.rttm"))?.segments.len());

    let vad = parse_vad_mask("1\n1\n0\n1\n1\n", 0.01, Path::new("io.vad"))?;
    println!("VAD: {} of {} frames voiced", vad.num_voiced(), vad.len());

    let regions = parse_overlap_regions("# onset offset\n1.25 1.5\n2.0 2.5\n2.4 2.8\n", Path::new("io.ov"))?;
    println!("overlap regions after merging: {:?}", regions.intervals());
    Ok(())
}
