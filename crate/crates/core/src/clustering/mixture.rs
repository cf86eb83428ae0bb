//! Mixture of von Mises–Fisher distributions fitted with EM.
//!
//! The E-step computes class affiliations `γ_tk ∝ π_k c_E(κ_k) exp(κ_k μ_kᵀx_t)`
//! in log space. The M-step sets `π_k = N_k/N`, `μ_k = r_k/‖r_k‖` with the
//! responsibility-weighted resultant `r_k`, and the concentration to the
//! maximum-likelihood value on `[0, kappa_max]` ([`kappa_mle`]), so every
//! iteration is an exact M-step and the log-likelihood cannot decrease.

use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::spherical_kmeans_restarts;
use crate::error::{Error, Result};
use crate::geometry::{norm, normalized};
use crate::vmf::{kappa_mle, log_norm_const, sample_uniform_sphere, VmfComponent};

/// Components with less total responsibility than this are re-seeded.
pub const DEAD_COMPONENT_MASS: f64 = 1e-8;
/// Concentration given to a re-seeded component.
pub const RESEED_KAPPA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VmfMixtureParams {
    pub components: Vec<VmfComponent>,
    pub weights: Vec<f64>,
}

impl VmfMixtureParams {
    pub fn new(components: Vec<VmfComponent>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidParameter("components differ in dimension".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        Ok(Self {
            components,
            weights,
        })
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.kappa).collect()
    }

    fn mean_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.num_components(), self.dim()));
        for (mut row, c) in m.rows_mut().into_iter().zip(&self.components) {
            row.assign(&c.mu);
        }
        m
    }
}

/// Class affiliations, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    pub gamma: Array2<f64>,
    /// Rows that take part in clustering; all other rows are zero.
    pub voiced: Vec<bool>,
    /// Per-row mixture log-likelihood, when produced by the E-step.
    pub row_loglik: Option<Vec<f64>>,
}

impl PosteriorMatrix {
    pub fn all_voiced(gamma: Array2<f64>) -> Self {
        let voiced = vec![true; gamma.nrows()];
        Self {
            gamma,
            voiced,
            row_loglik: None,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.gamma.ncols()
    }

    /// Argmax class of each voiced row.
    pub fn hard_labels(&self) -> Vec<Option<usize>> {
        self.gamma
            .axis_iter(Axis(0))
            .zip(&self.voiced)
            .map(|(row, &v)| v.then(|| argmax(row.iter().copied())))
            .collect()
    }

    /// Scatter rows of a posterior over a subset of frames back onto the full
    /// timeline; rows outside `keep` are zero.
    pub fn expand(&self, keep: &[bool]) -> Result<Self> {
        let n_keep = keep.iter().filter(|&&k| k).count();
        if n_keep != self.num_frames() {
            return Err(Error::DimensionMismatch {
                expected: self.num_frames(),
                found: n_keep,
            });
        }
        let mut gamma = Array2::zeros((keep.len(), self.num_classes()));
        let mut src = 0;
        for (t, &k) in keep.iter().enumerate() {
            if k {
                gamma.row_mut(t).assign(&self.gamma.row(src));
                src += 1;
            }
        }
        Ok(Self {
            gamma,
            voiced: keep.to_vec(),
            row_loglik: None,
        })
    }
}

pub(crate) fn argmax(it: impl Iterator<Item = f64>) -> usize {
    it.enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b })
        .0
}

/// Fixed-order pairwise summation.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn check_data(data: &Array2<f64>, dim: usize) -> Result<()> {
    if data.nrows() == 0 {
        return Err(Error::InvalidParameter("no data to cluster".into()));
    }
    if data.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: data.ncols(),
        });
    }
    Ok(())
}

/// Class posteriors and total log-likelihood `Σ_t ln Σ_k π_k p(x_t; μ_k, κ_k)`.
pub fn e_step(data: &Array2<f64>, params: &VmfMixtureParams) -> Result<(PosteriorMatrix, f64)> {
    check_data(data, params.dim())?;
    let dim = params.dim();
    let log_prior: Vec<f64> = params
        .components
        .iter()
        .zip(&params.weights)
        .map(|(c, &w)| Ok(w.ln() + log_norm_const(dim, c.kappa)?))
        .collect::<Result<_>>()?;
    let kappas = Array1::from(params.kappas());

    // κ_k μ_kᵀ x_t for all t, k
    let mut gamma = data.dot(&params.mean_matrix().t()) * &kappas.view().insert_axis(Axis(0));
    let mut row_loglik = Vec::with_capacity(data.nrows());
    for mut row in gamma.axis_iter_mut(Axis(0)) {
        for (v, lp) in row.iter_mut().zip(&log_prior) {
            *v += lp;
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Numerical("mixture density vanished for a frame".into()));
        }
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        row /= z;
        row_loglik.push(m + z.ln());
    }
    let loglik = pairwise_sum(&row_loglik);
    let voiced = vec![true; data.nrows()];
    Ok((
        PosteriorMatrix {
            gamma,
            voiced,
            row_loglik: Some(row_loglik),
        },
        loglik,
    ))
}

/// Result of [`m_step`].
#[derive(Debug, Clone)]
pub struct MStepOutcome {
    pub params: VmfMixtureParams,
    /// Components that carried no responsibility and were re-seeded.
    pub reseeded: Vec<usize>,
}

/// Parameter update from class affiliations over voiced rows.
pub fn m_step(data: &Array2<f64>, gamma: &PosteriorMatrix, kappa_max: f64) -> Result<MStepOutcome> {
    if gamma.num_frames() != data.nrows() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            found: gamma.num_frames(),
        });
    }
    if !(kappa_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa_max must be positive, got {kappa_max}"
        )));
    }
    let dim = data.ncols();
    let k = gamma.num_classes();
    let rows: Vec<usize> = (0..data.nrows()).filter(|&t| gamma.voiced[t]).collect();
    if rows.is_empty() {
        return Err(Error::TooFewVoiced {
            required: 1,
            found: 0,
        });
    }
    let x = data.select(Axis(0), &rows);
    let g = gamma.gamma.select(Axis(0), &rows);
    let n = rows.len() as f64;

    let mass = g.sum_axis(Axis(0));
    let resultants = g.t().dot(&x); // K×E

    let mut components = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    let mut reseeded = Vec::new();
    for j in 0..k {
        let r = resultants.row(j);
        match normalized(r).filter(|_| mass[j] >= DEAD_COMPONENT_MASS) {
            Some(mu) => {
                let r_bar = norm(r) / mass[j];
                components.push(VmfComponent {
                    mu,
                    kappa: kappa_mle(r_bar, dim, kappa_max),
                });
                weights.push(mass[j] / n);
            }
            None => {
                reseeded.push(j);
                // placeholder, filled below once all live components are known
                components.push(VmfComponent {
                    mu: Array1::zeros(dim),
                    kappa: RESEED_KAPPA.min(kappa_max),
                });
                weights.push(1.0 / n);
            }
        }
    }

    if !reseeded.is_empty() {
        let order = least_explained_rows(&x, gamma, &rows, &components, &reseeded);
        for (&j, &t) in reseeded.iter().zip(&order) {
            components[j].mu = normalized(x.row(t)).ok_or_else(|| {
                Error::Numerical("cannot re-seed a component at a zero-norm frame".into())
            })?;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }

    Ok(MStepOutcome {
        params: VmfMixtureParams {
            components,
            weights,
        },
        reseeded,
    })
}

/// Local row indices (into `x`) ordered from least to most likely, one per
/// dead component.
fn least_explained_rows(
    x: &Array2<f64>,
    gamma: &PosteriorMatrix,
    rows: &[usize],
    components: &[VmfComponent],
    dead: &[usize],
) -> Vec<usize> {
    let score: Vec<f64> = match &gamma.row_loglik {
        Some(ll) if ll.len() == gamma.num_frames() => rows.iter().map(|&t| ll[t]).collect(),
        // Without stored likelihoods use the cosine to the closest live mean.
        _ => x
            .axis_iter(Axis(0))
            .map(|xt| {
                components
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !dead.contains(j))
                    .map(|(_, c)| c.mu.dot(&xt))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    };
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    idx.truncate(dead.len());
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureInit {
    /// Mean directions uniform on the sphere.
    Random,
    /// One extra random component; the most redundant pair is fused mid-fit.
    Overinit,
    /// Mean directions from spherical k-means.
    KMeans,
}

impl std::str::FromStr for MixtureInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "overinit" => Ok(Self::Overinit),
            "kmeans" => Ok(Self::KMeans),
            other => Err(Error::InvalidParameter(format!("unknown init '{other}'"))),
        }
    }
}

impl std::fmt::Display for MixtureInit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Overinit => "overinit",
            Self::KMeans => "kmeans",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureConfig {
    pub num_components: usize,
    pub init: MixtureInit,
    pub em_iters: usize,
    pub kappa_max: f64,
    pub kappa_init: f64,
    /// Iteration index at which overinit fuses its extra component.
    pub fuse_at: usize,
    /// Posterior threshold defining the activity sets compared for fusion.
    pub fuse_threshold: f64,
    pub kmeans_iters: usize,
    /// Independent k-means++ runs; the one with the lowest inertia is kept.
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl MixtureConfig {
    pub fn new(num_components: usize, init: MixtureInit) -> Self {
        Self {
            num_components,
            init,
            em_iters: 50,
            kappa_max: 25.0,
            kappa_init: 10.0,
            fuse_at: 20,
            fuse_threshold: 0.3,
            kmeans_iters: 100,
            kmeans_restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub params: VmfMixtureParams,
    /// Posteriors under the final parameters.
    pub posteriors: PosteriorMatrix,
    /// Log-likelihood at the E-step of every EM iteration.
    pub loglik_trace: Vec<f64>,
    /// Number of components in use at every EM iteration.
    pub component_counts: Vec<usize>,
    pub fused_pair: Option<(usize, usize)>,
    /// (iteration, component) of every re-seeded dead component.
    pub reseeded: Vec<(usize, usize)>,
}

fn initial_params(data: &Array2<f64>, cfg: &MixtureConfig) -> Result<VmfMixtureParams> {
    let dim = data.ncols();
    let random = |k: usize| -> VmfMixtureParams {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let components = (0..k)
            .map(|_| VmfComponent {
                mu: sample_uniform_sphere(dim, &mut rng),
                kappa: cfg.kappa_init,
            })
            .collect();
        VmfMixtureParams {
            components,
            weights: vec![1.0 / k as f64; k],
        }
    };
    Ok(match cfg.init {
        MixtureInit::Random => random(cfg.num_components),
        MixtureInit::Overinit => random(cfg.num_components + 1),
        MixtureInit::KMeans => {
            let km = spherical_kmeans_restarts(data, cfg.num_components, cfg.kmeans_iters, cfg.kmeans_restarts, cfg.seed)?;
            let n = data.nrows() as f64;
            let components = km
                .centers
                .rows()
                .into_iter()
                .map(|c| VmfComponent {
                    mu: c.to_owned(),
                    kappa: cfg.kappa_init,
                })
                .collect();
            let weights = km.cluster_sizes().iter().map(|&s| s as f64 / n).collect();
            VmfMixtureParams {
                components,
                weights,
            }
        }
    })
}

/// Fit a vMF mixture to unit-norm rows.
///
/// Runs `em_iters` E/M alternations. Under [`MixtureInit::Overinit`] the
/// extra component is fused away at the start of iteration `fuse_at` (or
/// after the last iteration when `fuse_at ≥ em_iters`), and EM continues for
/// the remaining budget.
pub fn fit_vmfmm(data: &Array2<f64>, cfg: &MixtureConfig) -> Result<MixtureFit> {
    validate_fit_inputs(data, cfg)?;
    let params = initial_params(data, cfg)?;
    run_em(data, params, cfg)
}

/// Run EM from caller-supplied starting parameters, ignoring `cfg.init`.
///
/// `initial` must have `cfg.num_components` components, or one more, in
/// which case the redundant pair is fused exactly as under overinit.
pub fn fit_vmfmm_from(data: &Array2<f64>, initial: VmfMixtureParams, cfg: &MixtureConfig) -> Result<MixtureFit> {
    validate_fit_inputs(data, cfg)?;
    let k = initial.num_components();
    if k != cfg.num_components && k != cfg.num_components + 1 {
        return Err(Error::InvalidParameter(format!(
            "starting point has {k} components, expected {} or {}",
            cfg.num_components,
            cfg.num_components + 1
        )));
    }
    if initial.dim() != data.ncols() {
        return Err(Error::DimensionMismatch {
            expected: data.ncols(),
            found: initial.dim(),
        });
    }
    run_em(data, initial, cfg)
}

fn validate_fit_inputs(data: &Array2<f64>, cfg: &MixtureConfig) -> Result<()> {
    if cfg.num_components == 0 {
        return Err(Error::InvalidParameter("need at least one component".into()));
    }
    if data.nrows() < cfg.num_components {
        return Err(Error::TooFewPoints {
            k: cfg.num_components,
            n: data.nrows(),
        });
    }
    check_data(data, data.ncols())?;
    if !(cfg.kappa_init >= 0.0 && cfg.kappa_init.is_finite()) {
        return Err(Error::InvalidParameter("kappa_init must be finite and >= 0".into()));
    }
    Ok(())
}

fn run_em(data: &Array2<f64>, mut params: VmfMixtureParams, cfg: &MixtureConfig) -> Result<MixtureFit> {
    let mut loglik_trace = Vec::with_capacity(cfg.em_iters);
    let mut component_counts = Vec::with_capacity(cfg.em_iters);
    let mut fused_pair = None;
    let mut reseeded = Vec::new();
    let overinit = params.num_components() == cfg.num_components + 1;

    for it in 0..cfg.em_iters {
        if overinit && it == cfg.fuse_at && fused_pair.is_none() {
            let (post, _) = e_step(data, &params)?;
            let (p, pair) = fuse_components(data, &params, &post, cfg.fuse_threshold, cfg.kappa_max)?;
            params = p;
            fused_pair = Some(pair);
        }
        let (post, ll) = e_step(data, &params)?;
        loglik_trace.push(ll);
        component_counts.push(params.num_components());
        let out = m_step(data, &post, cfg.kappa_max)?;
        reseeded.extend(out.reseeded.iter().map(|&j| (it, j)));
        params = out.params;
    }
    if overinit && fused_pair.is_none() {
        let (post, _) = e_step(data, &params)?;
        let (p, pair) = fuse_components(data, &params, &post, cfg.fuse_threshold, cfg.kappa_max)?;
        params = p;
        fused_pair = Some(pair);
    }

    let (posteriors, _) = e_step(data, &params)?;
    Ok(MixtureFit {
        params,
        posteriors,
        loglik_trace,
        component_counts,
        fused_pair,
        reseeded,
    })
}

/// Intersection-over-union of two posterior-thresholded activity sets;
/// `None` when both are empty.
pub fn activity_iou(gamma: &PosteriorMatrix, i: usize, j: usize, threshold: f64) -> Option<f64> {
    let (mut inter, mut union) = (0usize, 0usize);
    for (row, _) in gamma
        .gamma
        .axis_iter(Axis(0))
        .zip(&gamma.voiced)
        .filter(|(_, &v)| v)
    {
        let a = row[i] >= threshold;
        let b = row[j] >= threshold;
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    (union > 0).then(|| inter as f64 / union as f64)
}

/// Merge the pair of components whose activity sets overlap most.
///
/// The merged class takes the summed affiliations of both and all parameters
/// are re-estimated by an M-step. When no pair shares any activity, the pair
/// with the closest mean directions is merged instead. Ties go to the
/// lexicographically smallest pair. Returns the new parameters and the merged
/// pair `(i, j)`, `i < j`; component `j` is removed.
pub fn fuse_components(
    data: &Array2<f64>,
    params: &VmfMixtureParams,
    gamma: &PosteriorMatrix,
    threshold: f64,
    kappa_max: f64,
) -> Result<(VmfMixtureParams, (usize, usize))> {
    let k = params.num_components();
    if k < 2 {
        return Err(Error::InvalidParameter("fusion needs at least two components".into()));
    }
    if gamma.num_classes() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: gamma.num_classes(),
        });
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..k {
        for j in i + 1..k {
            if let Some(iou) = activity_iou(gamma, i, j, threshold) {
                if iou > 0.0 && best.is_none_or(|(_, b)| iou > b) {
                    best = Some(((i, j), iou));
                }
            }
        }
    }
    let pair = match best {
        Some((pair, _)) => pair,
        None => {
            let mut closest = ((0, 1), f64::NEG_INFINITY);
            for i in 0..k {
                for j in i + 1..k {
                    let cos = params.components[i].mu.dot(&params.components[j].mu);
                    if cos > closest.1 {
                        closest = ((i, j), cos);
                    }
                }
            }
            closest.0
        }
    };

    let (i, j) = pair;
    let mut merged = Array2::zeros((gamma.num_frames(), k - 1));
    merged.slice_mut(s![.., ..j]).assign(&gamma.gamma.slice(s![.., ..j]));
    merged.slice_mut(s![.., j..]).assign(&gamma.gamma.slice(s![.., j + 1..]));
    {
        let mut col = merged.column_mut(i);
        col += &gamma.gamma.column(j);
    }
    let merged = PosteriorMatrix {
        gamma: merged,
        voiced: gamma.voiced.clone(),
        row_loglik: gamma.row_loglik.clone(),
    };
    Ok((m_step(data, &merged, kappa_max)?.params, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmf::sample_one;
    use ndarray::array;
    use rand::Rng;

    fn random_unit_rows(n: usize, dim: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Array2::zeros((n, dim));
        for mut r in d.rows_mut() {
            r.assign(&sample_uniform_sphere(dim, &mut rng));
        }
        d
    }

    fn random_params(k: usize, dim: usize, seed: u64, kmax: f64) -> VmfMixtureParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let comps = (0..k)
            .map(|_| VmfComponent::new(sample_uniform_sphere(dim, &mut rng), rng.random_range(0.0..kmax)).unwrap())
            .collect();
        VmfMixtureParams::new(comps, w).unwrap()
    }

    #[test]
    fn single_component_owns_everything() {
        let data = random_unit_rows(50, 4, 1);
        let p = random_params(1, 4, 2, 10.0);
        let (g, _) = e_step(&data, &p).unwrap();
        assert!(g.gamma.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn symmetric_point_splits_evenly() {
        let s = 1.0 / 2f64.sqrt();
        let p = VmfMixtureParams::new(
            vec![
                VmfComponent::new(array![1.0, 0.0, 0.0], 7.0).unwrap(),
                VmfComponent::new(array![0.0, 1.0, 0.0], 7.0).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let data = array![[s, s, 0.0]];
        let (g, _) = e_step(&data, &p).unwrap();
        assert!((g.gamma[[0, 0]] - 0.5).abs() < 1e-15);
        assert!((g.gamma[[0, 1]] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_space_matches_naive_evaluation() {
        let data = random_unit_rows(200, 16, 3);
        for seed in 0..5 {
            let p = random_params(4, 16, seed, 50.0);
            let (g, ll) = e_step(&data, &p).unwrap();
            let mut naive = 0.0;
            for (t, x) in data.axis_iter(Axis(0)).enumerate() {
                let dens: Vec<f64> = p
                    .components
                    .iter()
                    .zip(&p.weights)
                    .map(|(c, w)| w * (log_norm_const(16, c.kappa).unwrap() + c.kappa * c.mu.dot(&x)).exp())
                    .collect();
                let z: f64 = dens.iter().sum();
                naive += z.ln();
                for (k, d) in dens.iter().enumerate() {
                    assert!((g.gamma[[t, k]] - d / z).abs() < 1e-12);
                }
                assert!((g.gamma.row(t).sum() - 1.0).abs() < 1e-9);
            }
            assert!((ll - naive).abs() < 1e-8 * naive.abs().max(1.0), "{ll} vs {naive}");
        }
    }

    #[test]
    fn one_hot_partition_gives_cluster_means() {
        let data = array![[1.0, 0.0, 0.0], [0.8, 0.6, 0.0], [0.0, 0.0, 1.0], [0.0, 0.6, 0.8]];
        let gamma = PosteriorMatrix::all_voiced(array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]);
        let out = m_step(&data, &gamma, 25.0).unwrap();
        let m0 = normalized(array![1.8, 0.6, 0.0].view()).unwrap();
        let m1 = normalized(array![0.0, 0.6, 1.8].view()).unwrap();
        for (a, b) in out.params.components[0].mu.iter().zip(m0.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.params.components[1].mu.iter().zip(m1.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.params.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn uniform_affiliations_give_global_mean() {
        let data = random_unit_rows(40, 5, 9);
        let gamma = PosteriorMatrix::all_voiced(Array2::from_elem((40, 3), 1.0 / 3.0));
        let out = m_step(&data, &gamma, 25.0).unwrap();
        let global = normalized(data.sum_axis(Axis(0)).view()).unwrap();
        for c in &out.params.components {
            for (a, b) in c.mu.iter().zip(global.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kappa_is_clamped() {
        // Tight cluster: unclamped estimate is far above 25.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = VmfComponent::new(sample_uniform_sphere(8, &mut rng), 500.0).unwrap();
        let mut data = Array2::zeros((100, 8));
        for mut r in data.rows_mut() {
            r.assign(&sample_one(&c, &mut rng));
        }
        let gamma = PosteriorMatrix::all_voiced(Array2::ones((100, 1)));
        let out = m_step(&data, &gamma, 25.0).unwrap();
        assert_eq!(out.params.components[0].kappa, 25.0);
        let out = m_step(&data, &gamma, f64::INFINITY).unwrap();
        assert!(out.params.components[0].kappa > 100.0);
    }

    #[test]
    fn dead_component_is_reseeded_at_worst_frame() {
        let data = random_unit_rows(30, 4, 6);
        let p = random_params(2, 4, 1, 5.0);
        let (mut g, _) = e_step(&data, &p).unwrap();
        g.gamma.column_mut(0).fill(1.0);
        g.gamma.column_mut(1).fill(0.0);
        let ll = g.row_loglik.clone().unwrap();
        let worst = argmax(ll.iter().map(|v| -v));
        let out = m_step(&data, &g, 25.0).unwrap();
        assert_eq!(out.reseeded, vec![1]);
        for (a, b) in out.params.components[1].mu.iter().zip(data.row(worst)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.params.components[1].kappa, RESEED_KAPPA);
        assert!((out.params.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((out.params.weights[1] - (1.0 / 30.0) / (1.0 + 1.0 / 30.0)).abs() < 1e-12);
    }

    #[test]
    fn unvoiced_rows_are_ignored() {
        let data = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let mut g = PosteriorMatrix::all_voiced(array![[1.0], [1.0], [0.0]]);
        g.voiced[2] = false;
        let out = m_step(&data, &g, 25.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((out.params.components[0].mu[0] - s).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_is_fused() {
        let data = random_unit_rows(60, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = sample_uniform_sphere(3, &mut rng);
        let b = sample_uniform_sphere(3, &mut rng);
        let p = VmfMixtureParams::new(
            vec![
                VmfComponent::new(a, 4.0).unwrap(),
                VmfComponent::new(b.clone(), 4.0).unwrap(),
                VmfComponent::new(b, 4.0).unwrap(),
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let (g, _) = e_step(&data, &p).unwrap();
        let (fused, pair) = fuse_components(&data, &p, &g, 0.3, 25.0).unwrap();
        assert_eq!(pair, (1, 2));
        assert_eq!(fused.num_components(), 2);
    }

    #[test]
    fn disjoint_activity_falls_back_to_closest_means() {
        let data = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let g = PosteriorMatrix::all_voiced(Array2::from_shape_fn((3, 3), |(i, j)| (i == j) as u8 as f64));
        let mu = |v: [f64; 3]| normalized(Array1::from(v.to_vec()).view()).unwrap();
        let p = VmfMixtureParams::new(
            vec![
                VmfComponent::new(mu([1.0, 0.0, 0.0]), 1.0).unwrap(),
                VmfComponent::new(mu([0.0, 1.0, 0.1]), 1.0).unwrap(),
                VmfComponent::new(mu([0.0, 0.1, 1.0]), 1.0).unwrap(),
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(activity_iou(&g, i, j, 0.3), Some(0.0));
        }
        let (_, pair) = fuse_components(&data, &p, &g, 0.3, 25.0).unwrap();
        assert_eq!(pair, (1, 2));
    }

    #[test]
    fn overinit_fuses_exactly_once() {
        let data = random_unit_rows(300, 6, 12);
        let mut cfg = MixtureConfig::new(3, MixtureInit::Overinit);
        cfg.seed = 5;
        let fit = fit_vmfmm(&data, &cfg).unwrap();
        assert_eq!(fit.loglik_trace.len(), 50);
        assert!(fit.component_counts[..20].iter().all(|&c| c == 4));
        assert!(fit.component_counts[20..].iter().all(|&c| c == 3));
        assert_eq!(fit.params.num_components(), 3);
        assert!(fit.fused_pair.is_some());

        cfg.em_iters = 10;
        let fit = fit_vmfmm(&data, &cfg).unwrap();
        assert_eq!(fit.params.num_components(), 3);
    }

    #[test]
    fn fit_is_deterministic() {
        let data = random_unit_rows(200, 8, 4);
        for init in [MixtureInit::Random, MixtureInit::Overinit, MixtureInit::KMeans] {
            let mut cfg = MixtureConfig::new(3, init);
            cfg.seed = 77;
            let a = fit_vmfmm(&data, &cfg).unwrap();
            let b = fit_vmfmm(&data, &cfg).unwrap();
            assert_eq!(a.params, b.params);
            assert_eq!(a.posteriors, b.posteriors);
            assert_eq!(
                a.loglik_trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.loglik_trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn expand_scatters_rows() {
        let g = PosteriorMatrix::all_voiced(array![[0.2, 0.8], [1.0, 0.0]]);
        let e = g.expand(&[false, true, false, true]).unwrap();
        assert_eq!(e.gamma, array![[0.0, 0.0], [0.2, 0.8], [0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(e.hard_labels(), vec![None, Some(1), None, Some(0)]);
        assert!(g.expand(&[true]).is_err());
    }
}
