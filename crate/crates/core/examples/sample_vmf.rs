//! Draw vMF samples and recover the concentration from them.

use framediar::vmf::{kappa_mle, mean_resultant_length, sample_vmf, VmfComponent};
use ndarray::{Array1, Axis};

fn main() -> framediar::Result<()> {
    let dim = 32;
    let mut mu = Array1::zeros(dim);
    mu[3] = 1.0;
    for kappa in [2.0, 20.0, 80.0] {
        let comp = VmfComponent::new(mu.clone(), kappa)?;
        let x = sample_vmf(&comp, 20_000, 7)?;
        let mean = x.mean_axis(Axis(0)).unwrap();
        let r_bar = mean.dot(&mean).sqrt();
        let cos_mu = mean.dot(&mu) / r_bar;
        println!(
            "kappa {kappa:>5}: r_bar {r_bar:.4} (expected {:.4}), mean direction cosine {cos_mu:.5}, kappa estimate {:.2}",
            mean_resultant_length(dim, kappa),
            kappa_mle(r_bar, dim, f64::INFINITY)
        );
    }
    Ok(())
}
