use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SymbolSpec;
use crate::error::{Error, Result};
use crate::stats::fit_loglog;

/// Regularised kernel `K_eps(x, y) = sum_xi e^{2 pi i (x - y).xi} a(x, xi) e^{-pi |eps xi|^2} dxi^n`
/// on the lattice `dxi Z^n`, truncated where the Gaussian cutoff drops below `1e-16`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub eps: f64,
    pub dxi: f64,
    /// Also sample at `eps/2` and report the largest relative change.
    pub richardson: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { eps: 1.0 / 512.0, dxi: 1.0 / 32.0, richardson: true }
    }
}

pub const CUTOFF: &str = "gaussian exp(-pi |eps xi|^2)";
const MAX_TERMS: f64 = 4e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub distance: f64,
    pub value: Complex64,
    /// `sum |a psi| dxi^n`: the scale of rounding in `value`.
    pub magnitude: f64,
    /// The lattice resolves `e^{2 pi i (x-y).xi}` (at least 8 points per period)
    /// and `|x - y| >= 4 eps`.
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub symbol: String,
    pub dim: usize,
    pub eps: f64,
    pub cutoff: String,
    pub points: Vec<KernelPoint>,
    /// `max |K_eps - K_{eps/2}| / |K_eps|` over resolved, non-negligible pairs.
    pub stabilization: Option<f64>,
}

fn kernel_value(sym: &SymbolSpec, x: &[f64], y: &[f64], eps: f64, dxi: f64) -> (Complex64, f64) {
    let dim = sym.dim();
    let reach = 3.5 / eps;
    let m = (reach / dxi).ceil() as i64;
    let d: Vec<f64> = (0..dim).map(|a| x[a] - y[a]).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    let mut add = |xi: &[f64]| {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let cut = (-PI * eps * eps * r2).exp();
        if cut < 1e-17 {
            return;
        }
        let a = sym.eval(x, xi) * cut;
        let phase: f64 = (0..dim).map(|k| d[k] * xi[k]).sum();
        acc += a * Complex64::from_polar(1.0, 2.0 * PI * phase);
        mag += a.norm();
    };
    if dim == 1 {
        for i in -m..=m {
            add(&[i as f64 * dxi]);
        }
    } else {
        for i in -m..=m {
            for j in -m..=m {
                add(&[i as f64 * dxi, j as f64 * dxi]);
            }
        }
    }
    let w = dxi.powi(dim as i32);
    (acc * w, mag * w)
}

/// Samples `K_eps(x, y)` at the given pairs.
pub fn kernel_sample(sym: &SymbolSpec, cfg: &KernelConfig, pairs: &[([f64; 2], [f64; 2])]) -> Result<KernelSample> {
    if !(cfg.eps > 0.0 && cfg.dxi > 0.0) {
        return Err(Error::param("eps", "regularisation and lattice step must be positive"));
    }
    let dim = sym.dim();
    let finest = if cfg.richardson { cfg.eps / 2.0 } else { cfg.eps };
    let terms = (2.0 * 3.5 / (finest * cfg.dxi) + 1.0).powi(dim as i32);
    if terms > MAX_TERMS {
        return Err(Error::Unresolved(format!(
            "{terms:.2e} lattice terms per pair; increase eps or dxi"
        )));
    }
    let distance = |x: &[f64; 2], y: &[f64; 2]| (0..dim).map(|a| (x[a] - y[a]).powi(2)).sum::<f64>().sqrt();
    if pairs.iter().any(|(x, y)| distance(x, y) == 0.0) {
        return Err(Error::param("pairs", "x = y is on the diagonal"));
    }
    let rows: Vec<(KernelPoint, Option<Complex64>)> = pairs
        .par_iter()
        .map(|(x, y)| {
            let dist = distance(x, y);
            let (value, magnitude) = kernel_value(sym, &x[..dim], &y[..dim], cfg.eps, cfg.dxi);
            let resolved = cfg.dxi * dist <= 1.0 / 8.0 && dist >= 4.0 * cfg.eps;
            let refined = cfg
                .richardson
                .then(|| kernel_value(sym, &x[..dim], &y[..dim], cfg.eps / 2.0, cfg.dxi).0);
            (KernelPoint { x: *x, y: *y, distance: dist, value, magnitude, resolved }, refined)
        })
        .collect();
    let stabilization = cfg.richardson.then(|| {
        rows.iter()
            .filter(|(p, _)| p.resolved && !negligible(p))
            .map(|(p, r)| (p.value - r.unwrap()).norm() / p.value.norm())
            .fold(0.0, f64::max)
    });
    Ok(KernelSample {
        symbol: sym.name().to_string(),
        dim,
        eps: cfg.eps,
        cutoff: CUTOFF.to_string(),
        points: rows.into_iter().map(|(p, _)| p).collect(),
        stabilization,
    })
}

fn negligible(p: &KernelPoint) -> bool {
    p.value.norm() <= 1e-10 * p.magnitude
}

/// Allowed excess of the measured slope over `-(M + m + n)/rho`.
pub const DECAY_SLACK: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDecayReport {
    /// `-(M + m + n)/rho` with `M = 0`.
    pub expected_slope: f64,
    /// Log-log slope of `|K|` against `|x - y|`; `None` when fewer than two
    /// samples rise above rounding (faster than any power).
    pub slope: Option<f64>,
    pub slope_ci: Option<f64>,
    pub fitted: usize,
    pub negligible: usize,
    pub unresolved: usize,
    pub passed: bool,
}

/// Fits `log |K|` against `log |x - y|` over resolved pairs with distance in `[lo, hi]`.
pub fn kernel_decay_check(sample: &KernelSample, order: f64, rho: f64, lo: f64, hi: f64) -> Result<KernelDecayReport> {
    if !(rho > 0.0 && lo > 0.0 && hi > lo) {
        return Err(Error::param("range", "needs rho > 0 and 0 < lo < hi"));
    }
    let expected_slope = -(order + sample.dim as f64) / rho;
    let in_range: Vec<&KernelPoint> = sample.points.iter().filter(|p| p.distance >= lo * (1.0 - 1e-12) && p.distance <= hi * (1.0 + 1e-12)).collect();
    let unresolved = in_range.iter().filter(|p| !p.resolved).count();
    let usable: Vec<&KernelPoint> = in_range.iter().copied().filter(|p| p.resolved).collect();
    let negligible_count = usable.iter().filter(|p| negligible(p)).count();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        usable.iter().filter(|p| !negligible(p)).map(|p| (p.distance, p.value.norm())).unzip();
    let (slope, slope_ci) = if xs.len() >= 2 {
        let fit = fit_loglog(&xs, &ys)?;
        (Some(fit.slope), Some(fit.slope_ci))
    } else {
        (None, None)
    };
    let passed = match slope {
        Some(s) => s <= expected_slope + DECAY_SLACK,
        None => negligible_count > 0,
    };
    Ok(KernelDecayReport {
        expected_slope,
        slope,
        slope_ci,
        fitted: xs.len(),
        negligible: negligible_count,
        unresolved,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psido::{japanese_bracket, modulated_multiplier, riesz_ratio};

    fn radial_pairs(dists: &[f64]) -> Vec<([f64; 2], [f64; 2])> {
        dists.iter().map(|&d| ([0.1 + d, 0.0], [0.1, 0.0])).collect()
    }

    fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn bessel_kernel_oracle() {
        // inverse transform of (1 + xi^2)^{-1} in 1-D is pi e^{-2 pi |x|}
        let sym = japanese_bracket(1, -2.0).unwrap();
        let dists = log_spaced(0.25, 2.0, 12);
        let s = kernel_sample(&sym, &KernelConfig::default(), &radial_pairs(&dists)).unwrap();
        for p in &s.points {
            let exact = PI * (-2.0 * PI * p.distance).exp();
            assert!((p.value - exact).norm() <= 1e-3 * exact, "d {}: {} vs {exact}", p.distance, p.value);
        }
        assert!(s.stabilization.unwrap() < 1e-3);
        let rep = kernel_decay_check(&s, -2.0, 1.0, 0.25, 2.0).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn riesz_kernel_decays() {
        // oracle: 2 i sign(x) K_1(2 pi |x|), K_1(z) = int_0^inf e^{-z cosh s} cosh s ds
        let k1 = |z: f64| {
            let n = 20000;
            let top = 12.0;
            let ds = top / n as f64;
            (0..=n)
                .map(|i| {
                    let s = i as f64 * ds;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * (-z * s.cosh()).exp() * s.cosh()
                })
                .sum::<f64>()
                * ds
        };
        let sym = riesz_ratio(1, 1).unwrap();
        let dists = log_spaced(0.25, 2.0, 10);
        let s = kernel_sample(&sym, &KernelConfig::default(), &radial_pairs(&dists)).unwrap();
        for p in &s.points {
            let exact = 2.0 * k1(2.0 * PI * p.distance);
            assert!(p.value.re.abs() < 1e-9 * exact);
            assert!((p.value.im - exact).abs() <= 1e-3 * exact, "d {}: {} vs {exact}", p.distance, p.value.im);
        }
        let rep = kernel_decay_check(&s, 0.0, 1.0, 0.25, 2.0).unwrap();
        assert!(rep.passed && rep.slope.unwrap() <= -1.0 + DECAY_SLACK, "{rep:?}");
    }

    #[test]
    fn translation_invariance() {
        let sym = riesz_ratio(1, 1).unwrap();
        let cfg = KernelConfig { richardson: false, ..KernelConfig::default() };
        let pairs = vec![([0.7, 0.0], [0.2, 0.0]), ([3.7, 0.0], [3.2, 0.0]), ([-1.3, 0.0], [-1.8, 0.0])];
        let s = kernel_sample(&sym, &cfg, &pairs).unwrap();
        for p in &s.points[1..] {
            assert!((p.value - s.points[0].value).norm() <= 1e-8 * s.points[0].value.norm());
        }
        // an x-dependent symbol breaks it
        let m = modulated_multiplier(1, 1, 0.25).unwrap();
        let s = kernel_sample(&m, &cfg, &pairs).unwrap();
        assert!((s.points[1].value - s.points[0].value).norm() > 1e-3 * s.points[0].value.norm());
    }

    #[test]
    fn identity_kernel_is_negligible_off_diagonal() {
        let sym = japanese_bracket(1, 0.0).unwrap();
        let s = kernel_sample(&sym, &KernelConfig::default(), &radial_pairs(&[0.25, 0.5, 1.0, 2.0])).unwrap();
        let rep = kernel_decay_check(&s, 0.0, 1.0, 0.25, 2.0).unwrap();
        assert_eq!(rep.slope, None);
        assert!(rep.passed && rep.negligible == 4);
    }

    #[test]
    fn flags_and_errors() {
        let sym = riesz_ratio(1, 1).unwrap();
        let cfg = KernelConfig { eps: 1.0 / 64.0, dxi: 1.0 / 8.0, richardson: false };
        let s = kernel_sample(&sym, &cfg, &radial_pairs(&[0.5, 4.0])).unwrap();
        assert!(s.points[0].resolved && !s.points[1].resolved);
        assert!(kernel_sample(&sym, &cfg, &[([1.0, 0.0], [1.0, 0.0])]).is_err());
        let huge = KernelConfig { eps: 1e-6, dxi: 1e-3, richardson: false };
        assert!(matches!(kernel_sample(&sym, &huge, &radial_pairs(&[1.0])), Err(Error::Unresolved(_))));
    }
}
