//! Overlap targets between two speaker embeddings and the loss that uses them.

use framediar::geodesic::{geodesic_loss, geodesic_target, optimal_alpha, OverlapFrameLabel, SpeakerAnchorPair};
use framediar::geometry::FrameEmbeddingTrack;
use ndarray::{array, Array2};

fn main() -> framediar::Result<()> {
    let anchors = SpeakerAnchorPair::new(array![1.0, 0.0, 0.0], array![0.0, 2.0, 0.0])?;
    println!("target radius {:.3}", anchors.target_radius());

    let d_hat = array![0.7, 0.5, 0.2];
    let alpha = optimal_alpha(&anchors, d_hat.view())?;
    let target = geodesic_target(&anchors, alpha)?;
    println!("alpha {alpha:.4}, target {target:.4}, swapped alpha {:.4}", optimal_alpha(&anchors.swapped(), d_hat.view())?);

    for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  alpha {a:.2} -> {:.4}", geodesic_target(&anchors, a)?);
    }

    let frames = Array2::from_shape_vec((3, 3), vec![0.9, 0.1, 0.0, 0.1, 1.9, 0.0, 0.7, 0.5, 0.2]).unwrap();
    let track = FrameEmbeddingTrack::new(frames, 0.01, None, "pair")?;
    let labels = [OverlapFrameLabel::Spk1, OverlapFrameLabel::Spk2, OverlapFrameLabel::Overlap];
    println!("loss over three frames {:.5}", geodesic_loss(&track, &labels, &anchors)?);
    Ok(())
}
