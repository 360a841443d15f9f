//! Skewed-Gaussian profile and its least-squares fit to histograms.
//!
//! The profile is
//!
//! ```text
//! f(x; A, μ, σ, γ) = A / (σ√(2π)) · exp(−(x−μ)² / 2σ²) · {1 + erf[γ(x−μ) / (σ√2)]}
//! ```
//!
//! which integrates to `A` for every `γ`. Fits minimize the (optionally
//! Poisson-weighted) squared residuals between the profile at bin centres and
//! the bin counts with Levenberg–Marquardt; 1-sigma uncertainties come from the
//! residual-scaled inverse of the Gauss–Newton curvature at the optimum.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use crate::error::{Error, Result};

/// Parameters of the skewed-Gaussian profile with 1-sigma uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewGaussParams {
    pub amplitude: f64,
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub d_amplitude: f64,
    pub d_mu: f64,
    pub d_sigma: f64,
    pub d_gamma: f64,
}

impl SkewGaussParams {
    pub fn new(amplitude: f64, mu: f64, sigma: f64, gamma: f64) -> Self {
        Self {
            amplitude,
            mu,
            sigma,
            gamma,
            d_amplitude: 0.0,
            d_mu: 0.0,
            d_sigma: 0.0,
            d_gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.amplitude, self.mu, self.sigma, self.gamma];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profile parameters must be finite".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.amplitude, self.mu, self.sigma, self.gamma)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Profile value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        eval_skew_gauss(self, x)
    }
}

/// Evaluates the skewed-Gaussian profile at `x` (µT).
pub fn eval_skew_gauss(p: &SkewGaussParams, x: f64) -> f64 {
    let z = (x - p.mu) / p.sigma;
    p.amplitude / (p.sigma * (2.0 * PI).sqrt())
        * (-0.5 * z * z).exp()
        * (1.0 + libm::erf(p.gamma * z / SQRT_2))
}

/// Value and gradient with respect to `(A, μ, σ, γ)`.
fn eval_with_gradient(p: &SkewGaussParams, x: f64) -> (f64, Vector4<f64>) {
    let z = (x - p.mu) / p.sigma;
    let g = (-0.5 * z * z).exp();
    let u = p.gamma * z / SQRT_2;
    let e = 1.0 + libm::erf(u);
    let de_du = 2.0 / PI.sqrt() * (-u * u).exp();
    let c = p.amplitude / (p.sigma * (2.0 * PI).sqrt());
    let f = c * g * e;
    let df_dz = c * g * (-z * e + de_du * p.gamma / SQRT_2);
    let grad = Vector4::new(
        g * e / (p.sigma * (2.0 * PI).sqrt()),
        -df_dz / p.sigma,
        -f / p.sigma - df_dz * z / p.sigma,
        c * g * de_du * z / SQRT_2,
    );
    (f, grad)
}

/// Residual weighting used by [`fit_skew_gauss`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitWeighting {
    #[default]
    Unweighted,
    /// Weights `1 / max(count, 1)`.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub weighting: FitWeighting,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weighting: FitWeighting::Unweighted,
            max_iterations: 500,
            rel_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOutcome {
    pub params: SkewGaussParams,
    /// Weighted sum of squared residuals at the optimum.
    pub cost: f64,
    pub iterations: usize,
    pub bins_used: usize,
}

/// Starting point derived from histogram moments.
///
/// `μ₀` and `σ₀` are the binned mean and standard deviation, `γ₀` is twice the
/// binned skewness clamped to ±5, and `A₀` the in-range count times bin width.
pub fn default_init(h: &Histogram) -> Result<SkewGaussParams> {
    let (mean, std, skew) = h
        .moments()
        .ok_or_else(|| Error::Empty("histogram has no in-range counts".into()))?;
    check_degenerate(h)?;
    let gamma0 = skew.signum() * (skew.abs() * 2.0).min(5.0);
    let gamma0 = if skew == 0.0 { 0.0 } else { gamma0 };
    Ok(SkewGaussParams::new(
        h.in_range() * h.bin_width(),
        mean,
        std.max(h.bin_width() / 2.0),
        gamma0,
    ))
}

fn check_degenerate(h: &Histogram) -> Result<()> {
    let total = h.in_range();
    let peak = h.counts().iter().copied().fold(0.0, f64::max);
    if total <= 0.0 {
        return Err(Error::Empty("histogram has no in-range counts".into()));
    }
    if peak > 0.999 * total {
        return Err(Error::Degenerate(format!(
            "a single bin holds {:.3}% of the counts",
            100.0 * peak / total
        )));
    }
    Ok(())
}

/// Fits the skewed-Gaussian profile to `h`.
pub fn fit_skew_gauss(h: &Histogram, init: Option<SkewGaussParams>) -> Result<SkewGaussParams> {
    fit_skew_gauss_with(h, init, &FitOptions::default()).map(|o| o.params)
}

pub fn fit_skew_gauss_with(
    h: &Histogram,
    init: Option<SkewGaussParams>,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    check_degenerate(h)?;
    if h.nonempty_bins() < 8 {
        return Err(Error::Insufficient(format!(
            "fit needs at least 8 non-empty bins, histogram has {}",
            h.nonempty_bins()
        )));
    }
    let start = match init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => default_init(h)?,
    };
    let xs = h.centers();
    let ys = h.counts();
    let ws: Vec<f64> = match opts.weighting {
        FitWeighting::Unweighted => vec![1.0; ys.len()],
        FitWeighting::Poisson => ys.iter().map(|y| 1.0 / y.max(1.0)).collect(),
    };

    let cost_of = |p: &SkewGaussParams| -> f64 {
        xs.iter()
            .zip(ys)
            .zip(&ws)
            .map(|((&x, &y), &w)| {
                let r = y - eval_skew_gauss(p, x);
                w * r * r
            })
            .sum()
    };
    let normal_equations = |p: &SkewGaussParams| -> (Matrix4<f64>, Vector4<f64>) {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(&ws) {
            let (f, g) = eval_with_gradient(p, x);
            jtj += w * g * g.transpose();
            jtr += w * (y - f) * g;
        }
        (jtj, jtr)
    };

    let mut p = start;
    let mut cost = cost_of(&p);
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = SkewGaussParams::from_vector(&(p.as_vector() + step));
            if !(trial.sigma > 0.0) || trial.validate().is_err() {
                lambda *= 10.0;
                continue;
            }
            let trial_cost = cost_of(&trial);
            if trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < opts.rel_tolerance || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No step improves the cost: stationary point.
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }

    let (jtj, _) = normal_equations(&p);
    let dof = (xs.len() as f64 - 4.0).max(1.0);
    let s2 = cost / dof;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular curvature at the optimum".into()))?
        * s2;
    let sd = |i: usize| cov[(i, i)].max(0.0).sqrt();
    p.d_amplitude = sd(0);
    p.d_mu = sd(1);
    p.d_sigma = sd(2);
    p.d_gamma = sd(3);
    Ok(FitOutcome {
        params: p,
        cost,
        iterations,
        bins_used: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::histogram::Binning;
    use proptest::prelude::*;

    /// Composite Simpson quadrature.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn symmetric_case_is_gaussian() {
        let p = SkewGaussParams::new(3.0, 1.5, 0.4, 0.0);
        let peak = eval_skew_gauss(&p, 1.5);
        assert!((peak - 3.0 / (0.4 * (2.0 * PI).sqrt())).abs() < 1e-14);
        let ratio = eval_skew_gauss(&p, 1.9) / peak;
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn total_mass_equals_amplitude() {
        for gamma in [-4.61, -1.15, 0.0, 0.5, 1.39, 8.0] {
            let p = SkewGaussParams::new(11_488.0, 49.925, 0.212, gamma);
            let m = simpson(|x| eval_skew_gauss(&p, x), p.mu - 12.0 * p.sigma, p.mu + 12.0 * p.sigma, 20_000);
            assert!((m - p.amplitude).abs() < 1e-8 * p.amplitude, "gamma={gamma}: {m}");
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = SkewGaussParams::new(100.0, 49.3, 0.28, 1.39);
        for x in [48.9, 49.3, 49.5, 50.2] {
            let (_, g) = eval_with_gradient(&p, x);
            let base = p.as_vector();
            for i in 0..4 {
                let h = 1e-6 * base[i].abs().max(1e-3);
                let mut up = base;
                up[i] += h;
                let mut dn = base;
                dn[i] -= h;
                let fd = (eval_skew_gauss(&SkewGaussParams::from_vector(&up), x)
                    - eval_skew_gauss(&SkewGaussParams::from_vector(&dn), x))
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()), "x={x} i={i}: {fd} vs {}", g[i]);
            }
        }
    }

    fn exact_histogram(p: &SkewGaussParams, bins: usize) -> Histogram {
        let lo = p.mu - 5.0 * p.sigma;
        let w = 10.0 * p.sigma / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
        let counts = edges.windows(2).map(|e| eval_skew_gauss(p, 0.5 * (e[0] + e[1]))).collect();
        Histogram::from_counts(edges, counts).unwrap()
    }

    #[test]
    fn zero_noise_fixed_point() {
        let truth = SkewGaussParams::new(67_980.0, 49.361, 0.281, 1.39);
        let h = exact_histogram(&truth, 200);
        let fit = fit_skew_gauss(&h, Some(truth)).unwrap();
        assert!((fit.mu - truth.mu).abs() < 1e-6);
        assert!((fit.sigma - truth.sigma).abs() < 1e-6);
        assert!((fit.gamma - truth.gamma).abs() < 1e-6);
        assert!((fit.amplitude - truth.amplitude).abs() < 1e-6 * truth.amplitude);
    }

    #[test]
    fn converges_from_default_init_on_exact_curve() {
        let truth = SkewGaussParams::new(79_559.0, 92.833, 0.617, -0.93);
        let h = exact_histogram(&truth, 150);
        let fit = fit_skew_gauss(&h, None).unwrap();
        assert!((fit.mu - truth.mu).abs() < 1e-6);
        assert!((fit.gamma - truth.gamma).abs() < 1e-5);
    }

    #[test]
    fn degenerate_and_sparse_inputs() {
        let mut counts = vec![0.0; 20];
        counts[10] = 1e6;
        counts[11] = 1.0;
        let edges: Vec<f64> = (0..=20).map(f64::from).collect();
        let h = Histogram::from_counts(edges.clone(), counts).unwrap();
        assert!(matches!(fit_skew_gauss(&h, None), Err(Error::Degenerate(_))));
        assert!(matches!(default_init(&h), Err(Error::Degenerate(_))));
        let sparse: Vec<f64> = (0..20).map(|i| if i % 4 == 0 { 10.0 } else { 0.0 }).collect();
        let h = Histogram::from_counts(edges.clone(), sparse).unwrap();
        assert!(matches!(fit_skew_gauss(&h, None), Err(Error::Insufficient(_))));

        let mut counts = vec![1.0; 20];
        counts[3] = 1e7;
        let h = Histogram::from_counts(edges, counts).unwrap();
        assert!(matches!(fit_skew_gauss(&h, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn symmetric_init_has_near_zero_gamma() {
        let data: Vec<f64> = (0..10_001).map(|i| (i as f64 - 5000.0) / 2000.0).collect();
        let h = Histogram::from_samples(&data, Binning::Edges { lo: -2.6, hi: 2.6, bins: 52 }).unwrap();
        let p = default_init(&h).unwrap();
        assert!(p.gamma.abs() < 1e-2, "gamma0 {}", p.gamma);
    }

    #[test]
    fn poisson_weighting_recovers_exact_curve() {
        let truth = SkewGaussParams::new(10_000.0, 0.0, 1.0, 2.0);
        let h = exact_histogram(&truth, 100);
        let opts = FitOptions {
            weighting: FitWeighting::Poisson,
            ..FitOptions::default()
        };
        let out = fit_skew_gauss_with(&h, None, &opts).unwrap();
        assert!((out.params.gamma - 2.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn reflection_symmetry(
            mu in -100.0f64..100.0, sigma in 0.01f64..10.0, gamma in -6.0f64..6.0, d in -30.0f64..30.0,
        ) {
            let p = SkewGaussParams::new(2.0, mu, sigma, gamma);
            let q = SkewGaussParams::new(2.0, mu, sigma, -gamma);
            let a = eval_skew_gauss(&p, mu + d * sigma);
            let b = eval_skew_gauss(&q, mu - d * sigma);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
