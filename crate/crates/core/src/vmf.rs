//! von Mises–Fisher distribution on the unit hypersphere S^{E−1}.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::bessel::log_bessel_i;
use crate::error::{Error, Result};
use crate::geometry::norm;

const UNIT_TOL: f64 = 1e-6;

/// One mixture component: mean direction and concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfComponent {
    pub mu: Array1<f64>,
    pub kappa: f64,
}

impl VmfComponent {
    pub fn new(mu: Array1<f64>, kappa: f64) -> Result<Self> {
        let n = norm(mu.view());
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitNorm { norm: n });
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "concentration must be finite and non-negative, got {kappa}"
            )));
        }
        Ok(Self { mu, kappa })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Log of the surface area of the unit sphere in R^dim.
pub fn log_sphere_area(dim: usize) -> f64 {
    let h = 0.5 * dim as f64;
    std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - ln_gamma(h)
}

/// `ln c_E(κ) = (E/2−1) ln κ − (E/2) ln 2π − ln I_{E/2−1}(κ)`.
///
/// At κ = 0 this is the uniform density, `−ln |S^{E−1}|`.
pub fn log_norm_const(dim: usize, kappa: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension must be at least 2, got {dim}"
        )));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "concentration must be non-negative, got {kappa}"
        )));
    }
    if kappa == 0.0 {
        return Ok(-log_sphere_area(dim));
    }
    let nu = 0.5 * dim as f64 - 1.0;
    let v = nu * kappa.ln()
        - 0.5 * dim as f64 * std::f64::consts::TAU.ln()
        - log_bessel_i(nu, kappa);
    if !v.is_finite() {
        return Err(Error::Numerical(format!(
            "normalizer overflow at E={dim}, kappa={kappa}"
        )));
    }
    Ok(v)
}

/// Log density of a unit vector under `comp`.
pub fn log_pdf(d: ArrayView1<f64>, comp: &VmfComponent) -> Result<f64> {
    if d.len() != comp.dim() {
        return Err(Error::DimensionMismatch {
            expected: comp.dim(),
            found: d.len(),
        });
    }
    let n = norm(d);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitNorm { norm: n });
    }
    Ok(log_norm_const(comp.dim(), comp.kappa)? + comp.kappa * comp.mu.dot(&d))
}

/// Closed-form concentration estimate from the mean resultant length,
/// `κ ≈ r̄(E − r̄²)/(1 − r̄²)`, clamped to `kappa_max`.
pub fn estimate_kappa(r_bar: f64, dim: usize, kappa_max: f64) -> f64 {
    if r_bar >= 1.0 {
        return kappa_max;
    }
    let r = r_bar.max(0.0);
    let e = dim as f64;
    (r * (e - r * r) / (1.0 - r * r)).min(kappa_max)
}

/// Expected cosine to the mean direction, `A_E(κ) = I_{E/2}(κ) / I_{E/2−1}(κ)`.
pub fn mean_resultant_length(dim: usize, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let h = 0.5 * dim as f64;
    (log_bessel_i(h, kappa) - log_bessel_i(h - 1.0, kappa)).exp()
}

/// Maximum-likelihood concentration on `[0, kappa_max]`: the root of
/// `A_E(κ) = r̄`, found by safeguarded Newton steps from [`estimate_kappa`].
pub fn kappa_mle(r_bar: f64, dim: usize, kappa_max: f64) -> f64 {
    if r_bar <= 0.0 {
        return 0.0;
    }
    if r_bar >= 1.0 || (kappa_max.is_finite() && mean_resultant_length(dim, kappa_max) <= r_bar) {
        return kappa_max;
    }
    let e = dim as f64;
    let (mut lo, mut hi) = (0.0, kappa_max);
    let mut k = estimate_kappa(r_bar, dim, kappa_max);
    for _ in 0..100 {
        let a = mean_resultant_length(dim, k);
        let f = a - r_bar;
        if f > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        if f.abs() <= 1e-15 {
            break;
        }
        // A'(κ) = 1 − A² − (E−1)A/κ
        let slope = 1.0 - a * a - (e - 1.0) * a / k;
        let next = k - f / slope;
        k = if slope > 0.0 && next > lo && next < hi {
            next
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * k.max(1.0)
        };
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    k
}

/// Quantile function of the cosine `w = μᵀx` for `x ~ vMF(μ, κ)` on
/// S^{E−1}, tabulated on a uniform grid of the angle `θ = acos w`, where the
/// density is proportional to `exp(κ cos θ) sin^{E−2} θ`.
#[derive(Debug, Clone)]
pub struct CosineQuantile {
    theta: Vec<f64>,
    cdf: Vec<f64>,
}

impl CosineQuantile {
    const GRID: usize = 20_001;

    pub fn new(dim: usize, kappa: f64) -> Result<Self> {
        if dim < 2 || !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need dim >= 2 and finite kappa >= 0, got dim={dim} kappa={kappa}"
            )));
        }
        let n = Self::GRID;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let theta: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let log_density: Vec<f64> = theta
            .iter()
            .map(|&t| {
                let sin_term = if dim == 2 { 0.0 } else { (dim - 2) as f64 * t.sin().ln() };
                kappa * t.cos() + sin_term
            })
            .collect();
        let peak = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let density: Vec<f64> = log_density.iter().map(|l| (l - peak).exp()).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * h * (density[i - 1] + density[i]);
        }
        let total = cdf[n - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { theta, cdf })
    }

    /// Cosine at probability level `u ∈ [0, 1]`; larger `u` gives a larger
    /// angle, so the cosine decreases in `u`.
    pub fn cosine(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        (self.theta[i - 1] + frac * (self.theta[i] - self.theta[i - 1])).cos()
    }
}

/// Draw `n` i.i.d. samples from `comp`, deterministic in `seed`.
pub fn sample_vmf(comp: &VmfComponent, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n < 1 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((n, comp.dim()));
    for mut row in out.rows_mut() {
        row.assign(&sample_one(comp, &mut rng));
    }
    Ok(out)
}

/// One vMF draw (Wood's rejection sampler on the tangent-normal split).
pub fn sample_one<R: Rng + ?Sized>(comp: &VmfComponent, rng: &mut R) -> Array1<f64> {
    let p = comp.dim();
    let kappa = comp.kappa;
    let pm1 = (p - 1) as f64;
    // b = (−2κ + √(4κ² + (p−1)²)) / (p−1), written without cancellation.
    let b = pm1 / (2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * pm1, 0.5 * pm1).expect("valid beta shape");
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + pm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    let v = tangent_direction(comp.mu.view(), rng);
    &comp.mu * w + v * (1.0 - w * w).max(0.0).sqrt()
}

/// Uniform point on S^{dim−1}.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let g: Array1<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(g.view());
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Uniform unit vector orthogonal to `mu`.
fn tangent_direction<R: Rng + ?Sized>(mu: ArrayView1<f64>, rng: &mut R) -> Array1<f64> {
    loop {
        let g: Array1<f64> = (0..mu.len()).map(|_| rng.sample(StandardNormal)).collect();
        let v = &g - &(&mu * mu.dot(&g));
        let n = norm(v.view());
        if n > 1e-12 {
            return v / n;
        }
    }
}
