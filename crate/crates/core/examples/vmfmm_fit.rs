//! vMF mixture EM under the three initializations.

use framediar::clustering::{fit_vmfmm, MixtureConfig, MixtureInit};
use framediar::vmf::{sample_one, sample_uniform_sphere, VmfComponent};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framediar::Result<()> {
    let (k, dim, n) = (4, 16, 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mus: Vec<_> = (0..k).map(|_| sample_uniform_sphere(dim, &mut rng)).collect();
    let kappas = [15.0, 30.0, 60.0, 120.0];
    let mut data = Array2::zeros((n, dim));
    for (i, mut row) in data.rows_mut().into_iter().enumerate() {
        row.assign(&sample_one(&VmfComponent::new(mus[i % k].clone(), kappas[i % k])?, &mut rng));
    }

    for init in [MixtureInit::Random, MixtureInit::Overinit, MixtureInit::KMeans] {
        for kappa_max in [25.0, 500.0] {
            let mut cfg = MixtureConfig::new(k, init);
            cfg.kappa_max = kappa_max;
            let fit = fit_vmfmm(&data, &cfg)?;
            let mut fitted = fit.params.kappas();
            fitted.sort_by(f64::total_cmp);
            println!(
                "{init:>8} cap {kappa_max:>5}: loglik {:.1} -> {:.1}, kappas {:.1?}, fused {:?}",
                fit.loglik_trace[0],
                fit.loglik_trace.last().unwrap(),
                fitted,
                fit.fused_pair
            );
        }
    }
    Ok(())
}
