use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply, bracket, japanese_bracket, SymbolSpec};
use crate::atoms::{make_hkp_atom_scaled, Atom, AtomKind};
use crate::error::{Error, Result};
use crate::fourier::hkp_closed_form_default;
use crate::grid::{CubeFamily, Grid};
use crate::kernels::Kernel;
use crate::maximal::{hm_local_norm, hm_norm, ScaleLadder};
use crate::morrey::MorreyParams;
use crate::stats::fit_loglog;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `||m_phi f||_{M^lambda_q}` with a truncated ladder.
    Local,
    /// `||M_phi f||_{M^lambda_q}` with the full ladder.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub kind: AtomKind,
    pub side: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub symbol: String,
    pub norm: NormKind,
    pub rows: Vec<ProbeRow>,
    pub max_ratio: f64,
    /// Slope of `ln(ratio)` against `ln(side)`; `None` with a single side length.
    pub trend: Option<f64>,
    pub trend_ci: Option<f64>,
}

/// `||a(x,D) a_Q|| / ||a_Q||` over a corpus of atoms, with the trend of the
/// ratio across cube sizes.
pub fn operator_norm_probe(
    sym: &SymbolSpec,
    p: &MorreyParams,
    corpus: &[Atom],
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    family: &CubeFamily,
    norm: NormKind,
) -> Result<ProbeReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyFamily("atom corpus".into()));
    }
    let measure = |f: &crate::grid::GridFunction| match norm {
        NormKind::Local => hm_local_norm(f, p, phi, ladder, family),
        NormKind::Global => hm_norm(f, p, phi, ladder, family),
    };
    let rows: Vec<ProbeRow> = corpus
        .par_iter()
        .map(|a| {
            let input_norm = measure(&a.data)?;
            if input_norm == 0.0 {
                return Err(Error::ZeroDenominator("atom norm"));
            }
            let output_norm = measure(&apply(sym, &a.data)?)?;
            Ok(ProbeRow {
                kind: a.kind,
                side: a.cube.side,
                input_norm,
                output_norm,
                ratio: output_norm / input_norm,
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let distinct = rows.iter().any(|r| r.side != rows[0].side);
    let (trend, trend_ci) = if distinct && rows.iter().all(|r| r.ratio > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.side).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let fit = fit_loglog(&xs, &ys)?;
        (Some(fit.slope), Some(fit.slope_ci))
    } else {
        (None, None)
    };
    Ok(ProbeReport { symbol: sym.name().to_string(), norm, rows, max_ratio, trend, trend_ci })
}

/// Spectral lower bound `|g_eps(xi*)| / <xi*>^{n(1/lambda - 1)}` with
/// `g_eps = <D>^m a_eps` and `xi* = (0, 1/(4 j eps))`, from the closed form.
pub fn blowup_bound(m: f64, k: usize, lambda: f64, j: usize, eps: f64, dim: usize) -> f64 {
    let mut xi = [0.0; 2];
    xi[dim - 1] = 1.0 / (4.0 * j as f64 * eps);
    let a_hat = hkp_closed_form_default(k, lambda, eps, dim, &[xi])[0];
    let b = bracket(&xi[..dim]);
    b.powf(m) * a_hat.norm() / b.powf(dim as f64 * (1.0 / lambda - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    pub m: f64,
    pub k: usize,
    pub lambda: f64,
    /// Frequency index in `1/(4 j eps)`; `None` means `j = k`.
    pub j: Option<usize>,
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub eps: f64,
    pub bound: f64,
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub m: f64,
    pub k: usize,
    pub j: usize,
    pub q: f64,
    pub lambda: f64,
    pub rows: Vec<BlowupRow>,
    pub bound_slope: f64,
    pub measured_slope: f64,
    pub measured_slope_ci: f64,
}

/// `<D>^m` applied to dilated explicit atoms `a_eps` with `k` vanishing
/// moments and `q = n/(n + k - 1)`, for powers of two `eps <= 1`: the closed-form
/// lower bound and the measured local Hardy-Morrey norm, with their slopes in `eps`.
pub fn blowup_experiment(
    cfg: &BlowupConfig,
    grid: &Grid,
    phi: &dyn Kernel,
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<BlowupReport> {
    if !(cfg.lambda > 0.0 && cfg.lambda <= 1.0) {
        return Err(Error::param("lambda", format!("blow-up needs 0 < lambda <= 1, got {}", cfg.lambda)));
    }
    if cfg.m < 0.0 {
        return Err(Error::param("m", "order must be nonnegative"));
    }
    if cfg.eps.len() < 2 {
        return Err(Error::param("eps", "need at least two dilations"));
    }
    let dim = grid.dim();
    let j = cfg.j.unwrap_or(cfg.k);
    if j == 0 || j > cfg.k.max(1) * 2 {
        return Err(Error::param("j", format!("frequency index must lie in 1..={}", 2 * cfg.k)));
    }
    let q = dim as f64 / (dim as f64 + cfg.k as f64 - 1.0);
    let p = MorreyParams::new(q, cfg.lambda)?;
    let nyquist = 1.0 / (2.0 * grid.spacing());
    for &e in &cfg.eps {
        if !(e > 0.0 && e <= 1.0 && e.log2().fract() == 0.0) {
            return Err(Error::param("eps", format!("dilations must be powers of two <= 1, got {e}")));
        }
        if 1.0 / (4.0 * j as f64 * e) > nyquist / 4.0 {
            return Err(Error::Unresolved(format!("frequency 1/(4 j eps) at eps = {e} exceeds a quarter of Nyquist")));
        }
    }
    let sym = japanese_bracket(dim, cfg.m)?;
    let rows: Vec<BlowupRow> = cfg
        .eps
        .par_iter()
        .map(|&e| {
            let a = make_hkp_atom_scaled(grid, cfg.k, &p, e)?;
            let g = apply(&sym, &a.data)?;
            Ok(BlowupRow {
                eps: e,
                bound: blowup_bound(cfg.m, cfg.k, cfg.lambda, j, e, dim),
                measured: hm_local_norm(&g, &p, phi, ladder, family)?,
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let bound = fit_loglog(&xs, &rows.iter().map(|r| r.bound).collect::<Vec<_>>())?;
    let measured = fit_loglog(&xs, &rows.iter().map(|r| r.measured).collect::<Vec<_>>())?;
    Ok(BlowupReport {
        m: cfg.m,
        k: cfg.k,
        j,
        q,
        lambda: cfg.lambda,
        rows,
        bound_slope: bound.slope,
        measured_slope: measured.slope,
        measured_slope_ci: measured.slope_ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::make_smooth_atom;
    use crate::grid::{enumerate_dyadic_cubes, Cube};
    use crate::kernels::Gaussian;

    #[test]
    fn bound_ratio_is_power_of_two() {
        for k in 1..=3 {
            for m in [0.5, 1.0, 2.0] {
                let r = blowup_bound(m, k, 1.0, k, 2f64.powi(-15), 1) / blowup_bound(m, k, 1.0, k, 2f64.powi(-14), 1);
                assert!((r - 2f64.powf(m)).abs() <= 1e-6 * 2f64.powf(m), "k {k} m {m}: {r}");
            }
            // m = 0, lambda = 1: no blow-up at all
            let a = blowup_bound(0.0, k, 1.0, k, 0.25, 1);
            let b = blowup_bound(0.0, k, 1.0, k, 0.5, 1);
            assert!((a - b).abs() < 1e-12 * a);
        }
        // j = 1 with k = 2 hits a zero of the sine product
        assert!(blowup_bound(0.5, 2, 1.0, 1, 0.25, 1) < 1e-12);
    }

    #[test]
    fn identity_probe_has_unit_ratios() {
        let g = Grid::new(1, 4.0, 512).unwrap();
        let p = MorreyParams::new(1.0, 1.0).unwrap();
        let corpus: Vec<Atom> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&s| make_smooth_atom(&g, &p, &Cube::from_corner(&[0.0], s).unwrap(), 1).unwrap())
            .collect();
        let phi = Gaussian { dim: 1, sigma: 0.5 };
        let ladder = ScaleLadder::truncated(0, 6).unwrap();
        let fam = enumerate_dyadic_cubes(&g, -2, 4).unwrap();
        let id = japanese_bracket(1, 0.0).unwrap();
        let rep = operator_norm_probe(&id, &p, &corpus, &phi, &ladder, &fam, NormKind::Local).unwrap();
        for r in &rep.rows {
            assert!((r.ratio - 1.0).abs() < 1e-10);
        }
        assert!(rep.trend.unwrap().abs() < 1e-9);
        assert!(operator_norm_probe(&id, &p, &[], &phi, &ladder, &fam, NormKind::Local).is_err());
    }

    #[test]
    fn blowup_rejects_bad_input() {
        let g = Grid::new(1, 8.0, 256).unwrap();
        let phi = Gaussian { dim: 1, sigma: 0.5 };
        let ladder = ScaleLadder::truncated(0, 4).unwrap();
        let fam = enumerate_dyadic_cubes(&g, -2, 2).unwrap();
        let mut cfg = BlowupConfig { m: 0.5, k: 2, lambda: 1.0, j: None, eps: vec![1.0, 0.5] };
        assert!(blowup_experiment(&cfg, &g, &phi, &ladder, &fam).is_ok());
        cfg.lambda = 2.0;
        assert!(blowup_experiment(&cfg, &g, &phi, &ladder, &fam).is_err());
        cfg.lambda = 1.0;
        cfg.eps = vec![1.0, 2.0];
        assert!(blowup_experiment(&cfg, &g, &phi, &ladder, &fam).is_err());
        cfg.eps = vec![1.0 / 16.0, 1.0 / 32.0];
        assert!(matches!(blowup_experiment(&cfg, &g, &phi, &ladder, &fam), Err(Error::Unresolved(_))));
    }
}
