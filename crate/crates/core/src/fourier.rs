//! Discrete Fourier analysis on the dual lattice and the decay laws built on it.
//!
//! The forward transform is `f_hat(xi) = int f(x) e^{-2 pi i x.xi} dx`, discretised
//! as `h^n sum_k f_k e^{-2 pi i x_k.xi}` at `xi_m = (m - N/2)/(2L)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{hkp_amplitude, hkp_profile_hat, make_hkp_atom_scaled, multi_indices, Atom, AtomRecipe};
use crate::diff::central_weights;
use crate::error::{Error, Result};
use crate::grid::{CubeFamily, Grid, GridFunction};
use crate::kernels::Kernel;
use crate::maximal::{hm_norm, ScaleLadder};
use crate::morrey::{morrey_norm, MorreyParams};
use crate::spectral::{centered_dft, centered_idft, direct_transform};
use crate::stats::fit_loglog;

pub const CONVENTION: &str = "exp(-2 pi i x.xi)";

/// Samples of `f_hat` on the dual lattice of the grid `f` lives on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFunction {
    source: Grid,
    values: Vec<Complex64>,
    convention: String,
}

impl SpectrumFunction {
    /// The spatial grid the spectrum was computed from.
    pub fn source(&self) -> &Grid {
        &self.source
    }

    /// Frequency lattice: spacing `1/(2L)`, frequencies in `[-1/(2h), 1/(2h))`.
    pub fn lattice(&self) -> Grid {
        self.source.dual()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn convention(&self) -> &str {
        &self.convention
    }

    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        self.lattice().point(idx)
    }

    /// `sum |f_hat_m|^2 (2L)^{-n}`, the discrete `||f_hat||_2^2`.
    pub fn energy(&self) -> f64 {
        let dxi = 1.0 / (2.0 * self.source.half_width());
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dxi.powi(self.source.dim() as i32)
    }

    /// `|f_hat|` as a function on the frequency lattice.
    pub fn modulus(&self) -> GridFunction {
        let values = self.values.iter().map(|v| v.norm()).collect();
        GridFunction::from_real_unchecked(self.lattice(), values)
    }
}

pub fn fourier(f: &GridFunction) -> SpectrumFunction {
    SpectrumFunction {
        source: *f.grid(),
        values: centered_dft(f),
        convention: CONVENTION.to_string(),
    }
}

pub fn inverse_fourier(s: &SpectrumFunction) -> Result<GridFunction> {
    if s.convention != CONVENTION {
        return Err(Error::param("convention", format!("expected {CONVENTION}, got {}", s.convention)));
    }
    GridFunction::from_values(s.source, centered_idft(&s.source, &s.values))
}

/// `||f_hat||_2^2 / ||f||_2^2`; 1 up to rounding.
pub fn parseval_ratio(f: &GridFunction) -> Result<f64> {
    let e = f.l2_norm_sq();
    if e == 0.0 {
        return Err(Error::ZeroDenominator("||f||_2"));
    }
    Ok(fourier(f).energy() / e)
}

/// Embeds `f` in a box `factor` times wider with the same spacing, refining the
/// frequency lattice by `factor`.
pub fn zero_pad(f: &GridFunction, factor: usize) -> Result<GridFunction> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(factor));
    }
    let g = *f.grid();
    if factor == 1 {
        return Ok(f.clone());
    }
    let n = g.samples();
    let big = Grid::new(g.dim(), g.half_width() * factor as f64, n * factor)?;
    let offset = (big.samples() - n) / 2;
    let mut values = vec![Complex64::new(0.0, 0.0); big.len()];
    for (idx, v) in f.values().iter().enumerate() {
        let ix = g.axis_indices(idx);
        let mut jx = [0usize; 2];
        for a in 0..g.dim() {
            jx[a] = ix[a] + offset;
        }
        values[big.flat_index(jx)] = *v;
    }
    GridFunction::from_values(big, values)
}

/// `e^{i pi h xi} / sinc(h xi)`: ratio between the discrete transform of the
/// left-point samples of a function constant on each cell `[x_k, x_k + h)` and
/// its continuous transform.
pub fn step_transfer(h: f64, xi: f64) -> Complex64 {
    let u = PI * h * xi;
    let factor = if u == 0.0 { 1.0 } else { u / u.sin() };
    Complex64::from_polar(factor, u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `|xi|^{n(1/lambda - 1)}`
    Homogeneous,
    /// `<xi>^{n(1/lambda - 1)}` with `<xi> = (1 + |xi|^2)^{1/2}`
    Inhomogeneous,
}

/// Dyadic annuli `|xi| in [2^j, 2^{j+1})` for `j in j_lo..=j_hi`; the slope is
/// fitted over `fit_lo..=fit_hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRange {
    pub j_lo: i32,
    pub j_hi: i32,
    pub fit_lo: i32,
    pub fit_hi: i32,
    /// Zero-padding factor refining the frequency lattice.
    pub refine: usize,
}

impl Default for FrequencyRange {
    fn default() -> Self {
        // Below 2^-5 the finite box dominates.
        Self {
            j_lo: -5,
            j_hi: 3,
            fit_lo: -5,
            fit_hi: -2,
            refine: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub lo: f64,
    pub hi: f64,
    /// `sup |f_hat| / weight` over lattice points in the annulus.
    pub sup: f64,
    /// `sup |f_hat|`.
    pub raw_sup: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub weight: WeightKind,
    pub exponent: f64,
    pub annuli: Vec<Annulus>,
    #[serde(rename = "C")]
    pub c: f64,
    /// Log-log slope of the annulus sups of `|f_hat|` over the fit range.
    pub slope: f64,
    pub slope_ci: f64,
    /// Whether the measurement is consistent with the decay law: the slope
    /// reaches `exponent - 0.1` (homogeneous) or `C` is finite (inhomogeneous).
    pub consistent: bool,
}

pub const SLOPE_TOLERANCE: f64 = 0.1;

pub fn decay_report(f: &GridFunction, p: &MorreyParams, kind: WeightKind, range: &FrequencyRange) -> Result<DecayReport> {
    if f.is_zero() {
        return Err(Error::Degenerate("decay report of the zero function".into()));
    }
    if kind == WeightKind::Homogeneous && p.lambda() > 1.0 {
        return Err(Error::param("lambda", "the homogeneous decay law needs lambda <= 1"));
    }
    if range.j_lo > range.j_hi || range.fit_lo > range.fit_hi {
        return Err(Error::param("range", "empty annulus range"));
    }
    let padded = zero_pad(f, range.refine)?;
    let spec = fourier(&padded);
    let lattice = spec.lattice();
    let dim = lattice.dim();
    let exponent = dim as f64 * (1.0 / p.lambda() - 1.0);
    // Only annuli well below the lattice edge count as resolved.
    let resolved = lattice.half_width() / 2.0;
    let js: Vec<i32> = (range.j_lo..=range.j_hi).filter(|&j| 2f64.powi(j + 1) <= resolved).collect();
    let annuli: Vec<Annulus> = js
        .par_iter()
        .map(|&j| {
            let lo = 2f64.powi(j);
            let hi = 2.0 * lo;
            let mut sup = 0.0f64;
            let mut raw = 0.0f64;
            let mut count = 0;
            for (idx, v) in spec.values().iter().enumerate() {
                let xi = lattice.point(idx);
                let r = xi[..dim].iter().map(|t| t * t).sum::<f64>().sqrt();
                if r < lo || r >= hi {
                    continue;
                }
                let w = match kind {
                    WeightKind::Homogeneous => r.powf(exponent),
                    WeightKind::Inhomogeneous => (1.0 + r * r).sqrt().powf(exponent),
                };
                count += 1;
                raw = raw.max(v.norm());
                sup = sup.max(v.norm() / w);
            }
            Annulus { lo, hi, sup, raw_sup: raw, count }
        })
        .collect();
    let annuli: Vec<Annulus> = annuli.into_iter().filter(|a| a.count > 0).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = annuli
        .iter()
        .filter(|a| {
            let j = a.lo.log2().round() as i32;
            (range.fit_lo..=range.fit_hi).contains(&j) && a.raw_sup > 0.0
        })
        .map(|a| ((a.lo * a.hi).sqrt(), a.raw_sup))
        .unzip();
    let fit = fit_loglog(&xs, &ys).map_err(|_| {
        Error::Unresolved(format!(
            "fewer than two populated annuli in 2^{}..2^{}; refine the frequency lattice",
            range.fit_lo, range.fit_hi
        ))
    })?;
    let c = annuli.iter().map(|a| a.sup).fold(0.0, f64::max);
    let consistent = match kind {
        WeightKind::Homogeneous => fit.slope >= exponent - SLOPE_TOLERANCE,
        WeightKind::Inhomogeneous => c.is_finite(),
    };
    Ok(DecayReport {
        weight: kind,
        exponent,
        annuli,
        c,
        slope: fit.slope,
        slope_ci: fit.slope_ci,
        consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDerivative {
    pub alpha: [u32; 2],
    /// `|d^alpha f_hat(0)|` by central differences.
    pub value: f64,
    /// `value / ((2 pi R)^{|alpha|} ||f||_1)` with `R` the support radius.
    pub scaled: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentDecayReport {
    pub derivatives: Vec<SpectralDerivative>,
    pub passed: bool,
}

pub const SPECTRAL_ZERO_TOLERANCE: f64 = 1e-8;

/// Checks `d^alpha f_hat(0) = 0` for `|alpha| <= order` with fourth-order central
/// differences of the transform. `order = None` uses `floor(n(1/lambda - 1))`.
pub fn moment_decay_link(a: &Atom, order: Option<i32>) -> MomentDecayReport {
    let f = &a.data;
    let grid = f.grid();
    let dim = grid.dim();
    let order = order.unwrap_or_else(|| a.params.decay_moment_order(dim));
    let mass = f.l1_norm();
    let radius = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(i, _)| grid.point(i)[..dim].iter().map(|t| t * t).sum::<f64>().sqrt())
        .fold(grid.spacing(), f64::max);
    let derivatives = multi_indices(dim, order)
        .into_par_iter()
        .map(|alpha| {
            if mass == 0.0 {
                return SpectralDerivative { alpha, value: 0.0, scaled: 0.0, passed: true };
            }
            let total = (alpha[0] + alpha[1]) as i32;
            // Balances truncation (delta^4) against rounding (eps / delta^m).
            let delta = f64::EPSILON.powf(1.0 / (total as f64 + 4.0)) / (2.0 * PI * radius);
            let w0 = central_weights(alpha[0] as usize);
            let w1 = if dim == 2 { central_weights(alpha[1] as usize) } else { vec![1.0] };
            let (s0, s1) = ((w0.len() / 2) as f64, (w1.len() / 2) as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, wi) in w0.iter().enumerate() {
                for (j, wj) in w1.iter().enumerate() {
                    if *wi == 0.0 || *wj == 0.0 {
                        continue;
                    }
                    let xi = [(i as f64 - s0) * delta, (j as f64 - s1) * delta];
                    acc += direct_transform(f, &xi[..dim]) * (wi * wj);
                }
            }
            let value = acc.norm() / delta.powi(total);
            let scaled = value / ((2.0 * PI * radius).powi(total) * mass);
            SpectralDerivative { alpha, value, scaled, passed: scaled <= SPECTRAL_ZERO_TOLERANCE }
        })
        .collect::<Vec<_>>();
    let passed = derivatives.iter().all(|d| d.passed);
    MomentDecayReport { derivatives, passed }
}

/// `(1 - cos 2 pi t)/(i pi t) (-i)^k prod_{j<=k} sin(2 pi j t)`, zero at `t = 0`.
pub fn hkp_factor(k: usize, t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut prod = (1.0 - (2.0 * PI * t).cos()) / (PI * t);
    for j in 1..=k {
        prod *= (2.0 * PI * j as f64 * t).sin();
    }
    // 1/i = -i
    Complex64::new(0.0, -1.0).powu(k as u32 + 1) * prod
}

/// Closed-form transform of the dilated explicit atom:
/// `A eps^{n(1 - 1/lambda)} psi_hat(eps xi') F(eps xi_n)` with `F` from
/// [`hkp_factor`], `A` the undilated amplitude and `psi_hat` the transverse
/// profile transform (ignored for `n = 1`). Points carry `dim` coordinates.
pub fn hkp_closed_form(
    k: usize,
    lambda: f64,
    eps: f64,
    amplitude: f64,
    psi_hat: &dyn Fn(f64) -> f64,
    dim: usize,
    points: &[[f64; 2]],
) -> Vec<Complex64> {
    let scale = amplitude * eps.powf(dim as f64 * (1.0 - 1.0 / lambda));
    points
        .iter()
        .map(|xi| {
            let transverse = if dim == 2 { psi_hat(eps * xi[0]) } else { 1.0 };
            hkp_factor(k, eps * xi[dim - 1]) * (scale * transverse)
        })
        .collect()
}

/// [`hkp_closed_form`] with the profile and amplitude used by the atom constructors.
pub fn hkp_closed_form_default(k: usize, lambda: f64, eps: f64, dim: usize, points: &[[f64; 2]]) -> Vec<Complex64> {
    let amp = hkp_amplitude(k, dim, lambda);
    hkp_closed_form(k, lambda, eps, amp, &|t| hkp_profile_hat(k, t), dim, points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkpComparison {
    /// `max |DFT - closed form| / max |closed form|` over resolved frequencies.
    pub relative_error: f64,
    pub resolved: usize,
}

/// Compares the DFT of an explicit atom with its closed form on `|xi_i| <= frac / (2h)`.
/// The step transfer factor accounts for left-point sampling along the last axis.
pub fn hkp_spectral_error(a: &Atom, frac: f64) -> Result<HkpComparison> {
    let Some(AtomRecipe::Hkp { k, eps }) = a.recipe else {
        return Err(Error::param("atom", "not built by the explicit-atom constructor"));
    };
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::param("frac", format!("must lie in (0, 1], got {frac}")));
    }
    let spec = fourier(&a.data);
    let lattice = spec.lattice();
    let dim = lattice.dim();
    let h = a.data.grid().spacing();
    let cutoff = frac * lattice.half_width();
    let mut points = Vec::new();
    let mut measured = Vec::new();
    for (idx, v) in spec.values().iter().enumerate() {
        let xi = lattice.point(idx);
        if xi[..dim].iter().all(|t| t.abs() <= cutoff) {
            points.push(xi);
            measured.push(*v);
        }
    }
    let closed = hkp_closed_form_default(k, a.params.lambda(), eps, dim, &points);
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for ((xi, m), c) in points.iter().zip(&measured).zip(&closed) {
        let expected = c * step_transfer(h, xi[dim - 1]);
        diff = diff.max((m - expected).norm());
        scale = scale.max(expected.norm());
    }
    if scale == 0.0 {
        return Err(Error::ZeroDenominator("closed-form transform"));
    }
    Ok(HkpComparison { relative_error: diff / scale, resolved: points.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    /// `|| |xi|^{n(1-2/lambda)} |f_hat| ||_{M^lambda_q}` over the frequency family.
    pub numerator: f64,
    /// `||f||_{HM^lambda_q}`.
    pub denominator: f64,
    pub ratio: f64,
}

/// `|| |xi|^{n(1 - 2/lambda)} f_hat ||_{M^lambda_q} / ||f||_{HM^lambda_q}`. The
/// frequency family lives on the dual lattice (`grid.dual()`); the sample at
/// `xi = 0` is dropped.
pub fn hardy_inequality_check(
    f: &GridFunction,
    p: &MorreyParams,
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    spatial: &CubeFamily,
    frequency: &CubeFamily,
) -> Result<HardyReport> {
    if !(p.q() < p.lambda() && p.lambda() <= 1.0) {
        return Err(Error::param("p", "needs 0 < q < lambda <= 1"));
    }
    let spec = fourier(f);
    let lattice = spec.lattice();
    let dim = lattice.dim();
    let e = dim as f64 * (1.0 - 2.0 / p.lambda());
    let weighted: Vec<f64> = spec
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let r = lattice.point(idx)[..dim].iter().map(|t| t * t).sum::<f64>().sqrt();
            if r == 0.0 {
                0.0
            } else {
                r.powf(e) * v.norm()
            }
        })
        .collect();
    let g = GridFunction::from_real(lattice, weighted)?;
    let numerator = morrey_norm(&g, p, frequency)?;
    let denominator = hm_norm(f, p, phi, ladder, spatial)?;
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator("||f||_HM"));
    }
    Ok(HardyReport { numerator, denominator, ratio: numerator / denominator })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub eps: f64,
    /// `|a_eps_hat(0, 1/(4 eps))|`, left-sampling transfer removed.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthLawReport {
    pub k: usize,
    pub lambda: f64,
    pub rows: Vec<GrowthRow>,
    /// `n(1 - 1/lambda)`.
    pub expected_slope: f64,
    pub slope: f64,
    pub slope_ci: f64,
    /// `|slope - expected| / |expected|`.
    pub relative_error: f64,
}

/// Builds `a_eps` for each dilation and reads its transform at `(0, 1/(4 eps))`
/// off the DFT. The frequency must sit on the dual lattice.
pub fn hkp_growth_law(grid: &Grid, k: usize, p: &MorreyParams, eps: &[f64]) -> Result<GrowthLawReport> {
    if eps.len() < 2 {
        return Err(Error::param("eps", "need at least two dilations"));
    }
    let dim = grid.dim();
    let lattice = grid.dual();
    let n = grid.samples();
    let two_l = 2.0 * grid.half_width();
    let rows: Vec<GrowthRow> = eps
        .par_iter()
        .map(|&e| {
            let xi = 1.0 / (4.0 * e);
            let m = xi * two_l + (n / 2) as f64;
            if m.fract() != 0.0 || m >= n as f64 || xi > 0.5 * lattice.half_width() {
                return Err(Error::Unresolved(format!("xi = {xi} is not a resolved lattice frequency")));
            }
            let a = make_hkp_atom_scaled(grid, k, p, e)?;
            let spec = fourier(&a.data);
            let mut ix = [n / 2; 2];
            ix[dim - 1] = m as usize;
            let v = spec.values()[lattice.flat_index(ix)] / step_transfer(grid.spacing(), xi);
            Ok(GrowthRow { eps: e, value: v.norm() })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let fit = fit_loglog(&xs, &ys)?;
    let expected_slope = dim as f64 * (1.0 - 1.0 / p.lambda());
    let relative_error = if expected_slope == 0.0 {
        fit.slope.abs()
    } else {
        ((fit.slope - expected_slope) / expected_slope).abs()
    };
    Ok(GrowthLawReport {
        k,
        lambda: p.lambda(),
        rows,
        expected_slope,
        slope: fit.slope,
        slope_ci: fit.slope_ci,
        relative_error,
    })
}
