//! Spherical k-means with k-means++ seeding.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::normalized;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// K×E unit-norm centers.
    pub centers: Array2<f64>,
    /// Sum of squared Euclidean distances of points to their centers.
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.nrows()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row indices chosen by k-means++ D² sampling.
pub fn kmeans_pp_indices(data: &Array2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = data.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("cluster count must be positive".into()));
    }
    if k > n {
        return Err(Error::TooFewPoints { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;

    let mut nearest: Vec<f64> = data
        .axis_iter(Axis(0))
        .map(|x| sq_dist(x, data.row(first)))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(&mut rng),
            // Every remaining point coincides with a chosen center.
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        taken[next] = true;
        let c = data.row(next);
        for (d, x) in nearest.iter_mut().zip(data.axis_iter(Axis(0))) {
            *d = d.min(sq_dist(x, c));
        }
        nearest[next] = 0.0;
    }
    Ok(chosen)
}

/// k-means++ seeding: the first center uniformly at random, each further one
/// with probability proportional to its squared distance to the nearest
/// chosen center.
pub fn kmeans_pp_init(data: &Array2<f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let idx = kmeans_pp_indices(data, k, seed)?;
    Ok(data.select(Axis(0), &idx))
}

fn assign(data: &Array2<f64>, centers: &Array2<f64>) -> (Vec<usize>, f64) {
    let sims = data.dot(&centers.t());
    let mut inertia = 0.0;
    let labels = sims
        .axis_iter(Axis(0))
        .zip(data.axis_iter(Axis(0)))
        .map(|(row, x)| {
            let (best, sim) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (j, &s)| if s > b.1 { (j, s) } else { b });
            // ‖x − c‖² with ‖c‖ = 1
            inertia += (x.dot(&x) + 1.0 - 2.0 * sim).max(0.0);
            best
        })
        .collect();
    (labels, inertia)
}

/// Lloyd iterations on unit vectors with centers renormalized after every
/// update. Stops after `max_iters` updates or once labels stop changing.
pub fn spherical_kmeans(
    data: &Array2<f64>,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let mut centers = kmeans_pp_init(data, k, seed)?;
    let mut inertia_trace = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    let mut iterations = 0;

    let (mut labels, mut inertia) = assign(data, &centers);
    inertia_trace.push(inertia);
    while iterations < max_iters {
        if prev.as_ref() == Some(&labels) {
            break;
        }
        update_centers(data, &labels, &mut centers);
        iterations += 1;
        prev = Some(labels);
        (labels, inertia) = assign(data, &centers);
        inertia_trace.push(inertia);
    }

    Ok(KMeansResult {
        labels,
        centers,
        inertia,
        inertia_trace,
        iterations,
    })
}

fn update_centers(data: &Array2<f64>, labels: &[usize], centers: &mut Array2<f64>) {
    let (k, e) = centers.dim();
    let mut sums = Array2::<f64>::zeros((k, e));
    let mut counts = vec![0usize; k];
    for (x, &l) in data.axis_iter(Axis(0)).zip(labels) {
        let mut row = sums.row_mut(l);
        row += &x;
        counts[l] += 1;
    }
    let mut reseeded = vec![false; data.nrows()];
    for j in 0..k {
        if counts[j] == 0 {
            // Farthest point from its own center takes over the empty cluster.
            let far = data
                .axis_iter(Axis(0))
                .zip(labels)
                .enumerate()
                .filter(|(i, _)| !reseeded[*i])
                .map(|(i, (x, &l))| (i, sq_dist(x, centers.row(l))))
                .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
                .0;
            reseeded[far] = true;
            centers.row_mut(j).assign(&data.row(far));
            continue;
        }
        if let Some(c) = normalized(sums.row(j)) {
            centers.row_mut(j).assign(&c);
        }
    }
}

/// Best of `restarts` independent [`spherical_kmeans`] runs by final
/// inertia. Restart `r` uses seed `seed + r`; ties go to the lower index.
pub fn spherical_kmeans_restarts(
    data: &Array2<f64>,
    k: usize,
    max_iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let runs: Vec<KMeansResult> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| spherical_kmeans(data, k, max_iters, seed.wrapping_add(r)))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one run"))
}

/// Unit-normalized mean of a set of rows.
pub fn mean_direction(data: &Array2<f64>) -> Option<Array1<f64>> {
    normalized(data.sum_axis(Axis(0)).view())
}
