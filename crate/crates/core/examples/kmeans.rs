//! Spherical k-means++ on concentrated clusters.

use framediar::clustering::{spherical_kmeans, spherical_kmeans_restarts};
use framediar::vmf::{sample_one, sample_uniform_sphere, VmfComponent};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framediar::Result<()> {
    let (k, dim, n) = (6, 24, 1200);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let centers: Vec<_> = (0..k).map(|_| sample_uniform_sphere(dim, &mut rng)).collect();
    let mut data = Array2::zeros((n, dim));
    for (i, mut row) in data.rows_mut().into_iter().enumerate() {
        row.assign(&sample_one(&VmfComponent::new(centers[i % k].clone(), 40.0)?, &mut rng));
    }

    let single = spherical_kmeans(&data, k, 100, 3)?;
    println!("one run: {} iterations, inertia {:.3}, sizes {:?}", single.iterations, single.inertia, single.cluster_sizes());
    let best = spherical_kmeans_restarts(&data, k, 100, 10, 3)?;
    println!("best of 10: inertia {:.3}, sizes {:?}", best.inertia, best.cluster_sizes());
    let trace: Vec<String> = best.inertia_trace.iter().map(|v| format!("{v:.2}")).collect();
    println!("inertia trace {}", trace.join(" "));
    Ok(())
}
