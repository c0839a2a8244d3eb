//! Smooth, truncated and non-tangential maximal functions over a dyadic
//! ladder of scales, the Hardy-Littlewood maximal function, and the
//! Hardy-Morrey norms built from them.

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, CubeFamily, Grid, GridFunction, PrefixSum};
use crate::kernels::Kernel;
use crate::morrey::{morrey_norm, morrey_norm_real, MorreyParams};
use crate::spectral::PaddedSpectrum;
use crate::stats::{fit_loglog, LineFit};

/// Scales `t = 2^{-j}`, `j_lo <= j <= j_hi`, sorted descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    scales: Vec<f64>,
    truncated: bool,
}

impl ScaleLadder {
    /// Full ladder; `j_lo` may be negative (scales above 1).
    pub fn dyadic(j_lo: i32, j_hi: i32) -> Result<Self> {
        if j_lo > j_hi {
            return Err(Error::param("ladder", format!("empty level range [{j_lo}, {j_hi}]")));
        }
        Ok(Self {
            scales: (j_lo..=j_hi).map(|j| 2f64.powi(-j)).collect(),
            truncated: false,
        })
    }

    /// Ladder restricted to `t <= 1`.
    pub fn truncated(j_lo: i32, j_hi: i32) -> Result<Self> {
        if j_lo < 0 {
            return Err(Error::param("ladder", "a truncated ladder needs j_lo >= 0 (t <= 1)"));
        }
        let mut l = Self::dyadic(j_lo, j_hi)?;
        l.truncated = true;
        Ok(l)
    }

    pub fn from_scales(mut scales: Vec<f64>, truncated: bool) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::param("ladder", "no scales"));
        }
        if scales.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::param("ladder", "scales must be positive"));
        }
        if truncated && scales.iter().any(|t| *t > 1.0) {
            return Err(Error::param("ladder", "truncated ladder has a scale above 1"));
        }
        scales.sort_by(|a, b| b.total_cmp(a));
        scales.dedup();
        Ok(Self { scales, truncated })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// The same ladder with every scale above 1 removed.
    pub fn truncate(&self) -> Result<Self> {
        Self::from_scales(self.scales.iter().copied().filter(|t| *t <= 1.0).collect(), true)
    }

    /// True when some scale is below the grid spacing.
    pub fn under_resolved(&self, grid: &Grid) -> bool {
        self.scales.iter().any(|t| *t < grid.spacing())
    }
}

/// Result of [`mollify`].
#[derive(Clone, Debug)]
pub struct Mollified {
    pub function: GridFunction,
    /// `t` below the grid spacing: the kernel is not resolved.
    pub under_resolved: bool,
}

fn check_kernel(f: &GridFunction, phi: &dyn Kernel) -> Result<()> {
    if phi.dim() != f.grid().dim() {
        return Err(Error::GridMismatch(format!(
            "kernel dimension {} vs grid dimension {}",
            phi.dim(),
            f.grid().dim()
        )));
    }
    Ok(())
}

/// `phi_t * f` by zero-padded FFT (linear convolution with quadrature weight `h^n`).
pub fn mollify(f: &GridFunction, phi: &dyn Kernel, t: f64) -> Result<Mollified> {
    check_kernel(f, phi)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("scale must be positive, got {t}")));
    }
    let spec = PaddedSpectrum::new(f);
    Ok(Mollified {
        function: convolve_with(&spec, phi, t),
        under_resolved: t < f.grid().spacing(),
    })
}

fn convolve_with(spec: &PaddedSpectrum, phi: &dyn Kernel, t: f64) -> GridFunction {
    spec.apply(|xi| {
        let mut scaled = [0.0; 2];
        for (s, x) in scaled.iter_mut().zip(xi) {
            *s = t * x;
        }
        phi.spectrum(&scaled[..xi.len()])
    })
}

/// `|phi_t * f|` for every scale of the ladder, in ladder order.
pub fn mollify_ladder(f: &GridFunction, phi: &dyn Kernel, ladder: &ScaleLadder) -> Result<Vec<GridFunction>> {
    check_kernel(f, phi)?;
    let spec = PaddedSpectrum::new(f);
    Ok(ladder.scales().par_iter().map(|&t| convolve_with(&spec, phi, t)).collect())
}

fn pointwise_max(layers: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; len];
    for layer in layers {
        for (o, v) in out.iter_mut().zip(layer) {
            *o = o.max(*v);
        }
    }
    out
}

/// `M_phi f(x) = max_{t in ladder} |phi_t * f(x)|`.
pub fn smooth_maximal(f: &GridFunction, phi: &dyn Kernel, ladder: &ScaleLadder) -> Result<GridFunction> {
    let layers: Vec<Vec<f64>> = mollify_ladder(f, phi, ladder)?.iter().map(|g| g.abs_values()).collect();
    Ok(GridFunction::from_real_unchecked(*f.grid(), pointwise_max(&layers, f.grid().len())))
}

/// `m_phi f`: the smooth maximal function over a ladder with all `t <= 1`.
pub fn truncated_maximal(f: &GridFunction, phi: &dyn Kernel, ladder: &ScaleLadder) -> Result<GridFunction> {
    if !ladder.is_truncated() {
        return Err(Error::param("ladder", "truncated_maximal needs a truncated ladder"));
    }
    smooth_maximal(f, phi, ladder)
}

/// `M*_phi f(x) = max_t max_{|x-y| < t} |phi_t * f(y)|` over grid points `y`.
pub fn nontangential_maximal(f: &GridFunction, phi: &dyn Kernel, ladder: &ScaleLadder) -> Result<GridFunction> {
    nontangential_maximal_aperture(f, phi, ladder, 1.0)
}

/// Non-tangential maximal function over the cone `|x - y| < aperture * t`.
pub fn nontangential_maximal_aperture(
    f: &GridFunction,
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    aperture: f64,
) -> Result<GridFunction> {
    if !(aperture.is_finite() && aperture > 0.0) {
        return Err(Error::param("aperture", "must be positive"));
    }
    let layers = mollify_ladder(f, phi, ladder)?;
    Ok(nontangential_from_layers(&layers, ladder.scales(), aperture))
}

pub(crate) fn nontangential_from_layers(layers: &[GridFunction], scales: &[f64], aperture: f64) -> GridFunction {
    let grid = *layers[0].grid();
    let maxed: Vec<Vec<f64>> = layers
        .par_iter()
        .zip(scales.par_iter())
        .map(|(g, &t)| disk_max(&grid, &g.abs_values(), aperture * t))
        .collect();
    GridFunction::from_real_unchecked(grid, pointwise_max(&maxed, grid.len()))
}

/// Largest integer `d >= 0` with `d * h < r` (strict), or `None` if `r <= 0`.
fn strict_reach(r: f64, h: f64) -> Option<usize> {
    if r <= 0.0 {
        return None;
    }
    let mut d = (r / h).ceil() as usize;
    while d > 0 && d as f64 * h >= r * (1.0 - 1e-12) {
        d -= 1;
    }
    Some(d)
}

/// Max over the window `[i - w, i + w]` clipped to the array.
fn sliding_max(values: &[f64], w: usize, out: &mut [f64]) {
    let n = values.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + w).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| values[b] <= values[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + w < i) {
            dq.pop_front();
        }
        out[i] = values[*dq.front().expect("window is nonempty")];
    }
}

fn disk_max(grid: &Grid, values: &[f64], radius: f64) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.samples();
    let reach = strict_reach(radius, h).unwrap_or(0);
    if grid.dim() == 1 {
        let mut out = vec![0.0; n];
        sliding_max(values, reach, &mut out);
        return out;
    }
    if reach >= 2 * n {
        let m = values.iter().copied().fold(0.0, f64::max);
        return vec![m; values.len()];
    }
    let mut out = vec![0.0f64; values.len()];
    let mut row_max = vec![0.0f64; values.len()];
    let r2 = radius * radius * (1.0 - 1e-12);
    let mut last_w = usize::MAX;
    for dy in 0..=reach.min(n - 1) {
        let rem = r2 - (dy as f64 * h).powi(2);
        let w = if rem <= 0.0 { 0 } else { strict_reach(rem.sqrt(), h).unwrap_or(0) };
        if w != last_w {
            for (src, dst) in values.chunks_exact(n).zip(row_max.chunks_exact_mut(n)) {
                sliding_max(src, w, dst);
            }
            last_w = w;
        }
        for i in 0..n {
            for sign in [-1i64, 1] {
                if dy == 0 && sign == 1 {
                    continue;
                }
                let src = i as i64 + sign * dy as i64;
                if src < 0 || src >= n as i64 {
                    continue;
                }
                let src = src as usize;
                for j in 0..n {
                    let v = row_max[src * n + j];
                    if v > out[i * n + j] {
                        out[i * n + j] = v;
                    }
                }
            }
        }
    }
    out
}

/// Centered Hardy-Littlewood maximal function over cubes of side `h 2^k`, `h <= side <= 2L`.
pub fn hardy_littlewood(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let table = PrefixSum::new(&grid, &f.abs_values());
    let h = grid.spacing();
    let sides: Vec<f64> = (0..=grid.samples().trailing_zeros()).map(|k| h * 2f64.powi(k as i32)).collect();
    let dim = grid.dim();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            sides
                .iter()
                .map(|&s| {
                    let cube = Cube::new(p[..dim].to_vec(), s).expect("positive side");
                    table.cube_integral(&cube) / cube.volume()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    GridFunction::from_real_unchecked(grid, values)
}

fn check_integral(phi: &dyn Kernel) -> Result<()> {
    if phi.integral().norm() < 1e-12 {
        return Err(Error::VanishingKernelIntegral);
    }
    Ok(())
}

/// `||M_phi f||_{M^lambda_q}` over the family.
pub fn hm_norm(
    f: &GridFunction,
    p: &MorreyParams,
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<f64> {
    check_integral(phi)?;
    let m = smooth_maximal(f, phi, ladder)?;
    morrey_norm(&m, p, family)
}

/// `||m_phi f||_{M^lambda_q}` with a truncated ladder.
pub fn hm_local_norm(
    f: &GridFunction,
    p: &MorreyParams,
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<f64> {
    check_integral(phi)?;
    let m = truncated_maximal(f, phi, ladder)?;
    morrey_norm(&m, p, family)
}

/// Hardy-Morrey norms of `f` under several kernels, for comparability probes.
pub fn kernel_comparability(
    f: &GridFunction,
    p: &MorreyParams,
    kernels: &[&dyn Kernel],
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<Vec<f64>> {
    kernels.iter().map(|k| hm_norm(f, p, *k, ladder, family)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationRow {
    pub t: f64,
    /// `||phi_t * f||_{M^gamma_p}`.
    pub value: f64,
    /// `value / (t^{n(1/gamma - 1/lambda)} ||f||_{HM})`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    pub hm_norm: f64,
    pub exponent: f64,
    pub rows: Vec<RegularizationRow>,
    pub max_ratio: f64,
    /// Fit of `log value` against `log t`; absent when some value is zero.
    pub slope: Option<LineFit>,
}

/// Per-scale ratio `||phi_t * f||_{M^gamma_p} / (t^{n(1/gamma - 1/lambda)} ||f||_{HM^lambda_q})`
/// with `p/gamma = q/lambda` and `lambda <= gamma`.
pub fn regularization_check(
    f: &GridFunction,
    p: &MorreyParams,
    target: &MorreyParams,
    phi: &dyn Kernel,
    ts: &[f64],
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<RegularizationReport> {
    if ((target.q() / target.lambda()) - (p.q() / p.lambda())).abs() > 1e-12 {
        return Err(Error::param("target", "need p/gamma = q/lambda"));
    }
    if target.lambda() < p.lambda() {
        return Err(Error::param("target", "need lambda <= gamma"));
    }
    if ts.is_empty() {
        return Err(Error::param("t", "no scales"));
    }
    let n = f.grid().dim() as f64;
    let exponent = n * (1.0 / target.lambda() - 1.0 / p.lambda());
    let hm = hm_norm(f, p, phi, ladder, family)?;
    let spec = PaddedSpectrum::new(f);
    let rows: Vec<RegularizationRow> = ts
        .iter()
        .map(|&t| {
            let g = convolve_with(&spec, phi, t);
            let value = morrey_norm_real(f.grid(), &g.abs_values(), target, family)?;
            let ratio = if hm == 0.0 { 0.0 } else { value / (t.powf(exponent) * hm) };
            Ok(RegularizationRow { t, value, ratio })
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.value > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.value).collect();
        fit_loglog(&x, &y).ok()
    } else {
        None
    };
    Ok(RegularizationReport {
        hm_norm: hm,
        exponent,
        rows,
        max_ratio,
        slope,
    })
}

/// Direct `O(N^{2n})` quadrature `h^n sum_j f_j phi_t(x_k - x_j)`; test oracle.
pub fn mollify_direct(f: &GridFunction, phi: &dyn Kernel, t: f64) -> Result<GridFunction> {
    check_kernel(f, phi)?;
    let grid = *f.grid();
    let dim = grid.dim();
    let w = grid.cell_volume() * t.powi(-(dim as i32));
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.point(k);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut d = [0.0; 2];
            for (j, v) in f.values().iter().enumerate() {
                if v.norm() == 0.0 {
                    continue;
                }
                let y = grid.point(j);
                for a in 0..dim {
                    d[a] = (x[a] - y[a]) / t;
                }
                acc += v * phi.value(&d[..dim]);
            }
            acc * w
        })
        .collect();
    Ok(GridFunction::from_values_unchecked(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{enumerate_dyadic_cubes, sample_real};
    use crate::kernels::{Gaussian, SuitableCutoff};

    #[test]
    fn ladder_construction() {
        let l = ScaleLadder::dyadic(-2, 3).unwrap();
        assert_eq!(l.scales(), &[4.0, 2.0, 1.0, 0.5, 0.25, 0.125]);
        assert!(ScaleLadder::truncated(-1, 2).is_err());
        let t = l.truncate().unwrap();
        assert!(t.is_truncated());
        assert_eq!(t.scales()[0], 1.0);
        assert!(ScaleLadder::dyadic(2, 1).is_err());
    }

    #[test]
    fn constant_is_preserved_in_the_interior() {
        let g = Grid::new(1, 8.0, 512).unwrap();
        let f = sample_real(|_| 2.5, &g).unwrap();
        let phi = SuitableCutoff::new(1).unwrap();
        let scale = phi.integral().re;
        let out = mollify(&f, &phi, 0.5).unwrap().function;
        for i in 100..400 {
            assert!((out.value(i).re - 2.5 * scale).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_direct_quadrature() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 3.0, if dim == 1 { 128 } else { 32 }).unwrap();
            let f = sample_real(|x| (-(x.iter().map(|v| v * v).sum::<f64>()) * 2.0).exp(), &g).unwrap();
            let phi = Gaussian { dim, sigma: 0.35 };
            let fast = mollify(&f, &phi, 0.8).unwrap().function;
            let slow = mollify_direct(&f, &phi, 0.8).unwrap();
            let rel = fast.max_abs_diff(&slow).unwrap() / slow.sup_norm();
            assert!(rel < 1e-6, "dim {dim}: {rel}");
        }
    }

    #[test]
    fn disk_max_matches_brute_force() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 257) as f64).collect();
        for r in [0.05, 0.13, 0.3, 0.5, 5.0] {
            let fast = disk_max(&g, &vals, r);
            for i in 0..g.len() {
                let p = g.point(i);
                let want = (0..g.len())
                    .filter(|&j| {
                        let q = g.point(j);
                        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() < r
                    })
                    .map(|j| vals[j])
                    .fold(0.0, f64::max);
                assert_eq!(fast[i], want, "r={r} i={i}");
            }
        }
    }

    #[test]
    fn order_chain_and_hl() {
        let g = Grid::new(1, 4.0, 256).unwrap();
        let f = sample_real(|x| if (0.0..1.0).contains(&x[0]) { 1.0 - x[0] } else { 0.0 }, &g).unwrap();
        let phi = SuitableCutoff::new(1).unwrap();
        let full = ScaleLadder::dyadic(-2, 5).unwrap();
        let trunc = full.truncate().unwrap();
        let m = truncated_maximal(&f, &phi, &trunc).unwrap();
        let big = smooth_maximal(&f, &phi, &full).unwrap();
        let nt = nontangential_maximal(&f, &phi, &full).unwrap();
        for i in 0..g.len() {
            assert!(m.value(i).re <= big.value(i).re + 1e-15);
            assert!(big.value(i).re <= nt.value(i).re + 1e-15);
        }
        let hl = hardy_littlewood(&f);
        for i in 0..g.len() {
            assert!(hl.value(i).re >= f.value(i).norm() - 1e-15);
        }
        let fam = enumerate_dyadic_cubes(&g, -2, 5).unwrap();
        let p = MorreyParams::new(1.0, 2.0).unwrap();
        assert!(hm_local_norm(&f, &p, &phi, &trunc, &fam).unwrap() <= hm_norm(&f, &p, &phi, &full, &fam).unwrap());
        assert!(hm_local_norm(&f, &p, &phi, &full, &fam).is_err());
    }
}
