//! Normalizer, density and concentration estimates of the von Mises–Fisher
//! distribution.

use framediar::bessel::log_bessel_i;
use framediar::vmf::{estimate_kappa, kappa_mle, log_norm_const, log_pdf, mean_resultant_length, VmfComponent};
use ndarray::Array1;

fn main() -> framediar::Result<()> {
    println!("{:>6} {:>8} {:>14} {:>14}", "dim", "kappa", "ln c_E(kappa)", "ln I_{E/2-1}");
    for dim in [3, 16, 64, 256] {
        for kappa in [1.0, 25.0, 200.0] {
            let nu = dim as f64 / 2.0 - 1.0;
            println!("{dim:>6} {kappa:>8} {:>14.6} {:>14.6}", log_norm_const(dim, kappa)?, log_bessel_i(nu, kappa));
        }
    }

    let mut mu = Array1::zeros(64);
    mu[0] = 1.0;
    let comp = VmfComponent::new(mu.clone(), 50.0)?;
    let mut off = Array1::zeros(64);
    off[0] = 0.6;
    off[1] = 0.8;
    println!("\nE=64, kappa=50: log density at mu {:.3}, at 53 degrees off {:.3}", log_pdf(mu.view(), &comp)?, log_pdf(off.view(), &comp)?);

    println!("\n{:>6} {:>10} {:>12} {:>12}", "r_bar", "A^-1 exact", "closed form", "capped at 25");
    for kappa in [5.0, 25.0, 50.0, 100.0] {
        let r = mean_resultant_length(64, kappa);
        println!("{r:>6.3} {:>10.3} {:>12.3} {:>12.3}", kappa_mle(r, 64, f64::INFINITY), estimate_kappa(r, 64, f64::INFINITY), kappa_mle(r, 64, 25.0));
    }
    Ok(())
}
