use framediar::clustering::{
    e_step, fit_vmfmm, fit_vmfmm_from, m_step, spherical_kmeans, MixtureConfig, MixtureInit, PosteriorMatrix,
    VmfMixtureParams,
};
use framediar::vmf::{estimate_kappa, log_pdf, sample_one, sample_uniform_sphere, VmfComponent};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere_rows(n: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Array2::zeros((n, dim));
    for mut r in d.rows_mut() {
        r.assign(&sample_uniform_sphere(dim, &mut rng));
    }
    d
}

fn mixture(k: usize, dim: usize, kappa_max: f64, seed: u64) -> VmfMixtureParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let comps = (0..k)
        .map(|_| VmfComponent::new(sample_uniform_sphere(dim, &mut rng), rng.random_range(0.0..kappa_max)).unwrap())
        .collect();
    VmfMixtureParams::new(comps, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// `n` points from `k` concentrated clusters, labelled round-robin.
fn clusters(n: usize, dim: usize, k: usize, kappa: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mus: Vec<_> = (0..k).map(|_| sample_uniform_sphere(dim, &mut rng)).collect();
    let mut d = Array2::zeros((n, dim));
    for (i, mut r) in d.rows_mut().into_iter().enumerate() {
        r.assign(&sample_one(&VmfComponent::new(mus[i % k].clone(), kappa).unwrap(), &mut rng));
    }
    (d, (0..n).map(|i| i % k).collect())
}

/// True when `labels` equals `truth` up to a relabeling.
fn same_partition(labels: &[usize], truth: &[usize]) -> bool {
    let mut map = std::collections::HashMap::new();
    let mut used = std::collections::HashSet::new();
    for (&l, &t) in labels.iter().zip(truth) {
        match map.get(&t) {
            Some(&m) if m != l => return false,
            Some(_) => {}
            None => {
                if !used.insert(l) {
                    return false;
                }
                map.insert(t, l);
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn posteriors_are_row_stochastic(k in 1usize..6, dim in 2usize..12, seed in any::<u64>()) {
        let data = sphere_rows(40, dim, seed);
        let params = mixture(k, dim, 80.0, seed ^ 1);
        let (g, ll) = e_step(&data, &params).unwrap();
        prop_assert!(ll.is_finite());
        for row in g.gamma.rows() {
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn m_step_respects_the_cap(k in 1usize..5, dim in 2usize..10, cap in 0.5f64..60.0, seed in any::<u64>()) {
        let (data, _) = clusters(60, dim, 2, 200.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gamma = Array2::from_shape_fn((60, k), |_| rng.random_range(0.01..1.0));
        for mut row in gamma.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        let out = m_step(&data, &PosteriorMatrix::all_voiced(gamma), cap).unwrap();
        for c in &out.params.components {
            prop_assert!(c.kappa <= cap && c.kappa >= 0.0);
            prop_assert!((c.mu.dot(&c.mu).sqrt() - 1.0).abs() < 1e-9);
        }
        prop_assert!((out.params.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kmeans_inertia_never_increases(k in 1usize..6, dim in 2usize..10, seed in any::<u64>()) {
        let data = sphere_rows(80, dim, seed);
        let res = spherical_kmeans(&data, k, 100, seed).unwrap();
        for w in res.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        for c in res.centers.rows() {
            prop_assert!((c.dot(&c).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn kappa_estimate_is_monotone(a in 0.0f64..0.999, b in 0.0f64..0.999, dim in 2usize..128) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(estimate_kappa(lo, dim, f64::INFINITY) <= estimate_kappa(hi, dim, f64::INFINITY));
    }

    #[test]
    fn density_peaks_at_the_mean(dim in 2usize..40, kappa in 0.01f64..500.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comp = VmfComponent::new(sample_uniform_sphere(dim, &mut rng), kappa).unwrap();
        let peak = log_pdf(comp.mu.view(), &comp).unwrap();
        for _ in 0..20 {
            let x = sample_uniform_sphere(dim, &mut rng);
            prop_assert!(log_pdf(x.view(), &comp).unwrap() <= peak);
        }
    }
}

#[test]
fn separated_clusters_are_recovered_by_both_methods() {
    let (data, truth) = clusters(600, 16, 5, 60.0, 11);
    let km = spherical_kmeans(&data, 5, 100, 0).unwrap();
    assert!(same_partition(&km.labels, &truth));

    let fit = fit_vmfmm(&data, &MixtureConfig::new(5, MixtureInit::KMeans)).unwrap();
    let labels: Vec<usize> = fit.posteriors.hard_labels().into_iter().map(Option::unwrap).collect();
    assert!(same_partition(&labels, &truth));
    assert!(fit.params.kappas().iter().all(|&k| k == 25.0), "{:?}", fit.params.kappas());
}

#[test]
fn fits_are_bitwise_reproducible() {
    let (data, _) = clusters(300, 8, 3, 20.0, 5);
    for init in [MixtureInit::Random, MixtureInit::Overinit, MixtureInit::KMeans] {
        let mut cfg = MixtureConfig::new(3, init);
        cfg.seed = 99;
        let a = fit_vmfmm(&data, &cfg).unwrap();
        let b = fit_vmfmm(&data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.posteriors.gamma, b.posteriors.gamma);
        assert_eq!(a.loglik_trace, b.loglik_trace);
    }
}

#[test]
fn warm_start_checks_its_inputs() {
    let (data, _) = clusters(100, 6, 2, 20.0, 3);
    let cfg = MixtureConfig::new(2, MixtureInit::Random);
    assert!(fit_vmfmm_from(&data, mixture(4, 6, 10.0, 1), &cfg).is_err());
    assert!(fit_vmfmm_from(&data, mixture(2, 5, 10.0, 1), &cfg).is_err());
    let plain = fit_vmfmm_from(&data, mixture(2, 6, 10.0, 1), &cfg).unwrap();
    assert!(plain.fused_pair.is_none());
    let extra = fit_vmfmm_from(&data, mixture(3, 6, 10.0, 1), &cfg).unwrap();
    assert!(extra.fused_pair.is_some());
    assert_eq!(extra.params.num_components(), 2);
}
