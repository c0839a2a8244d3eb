use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bracket, SymbolSpec};
use crate::atoms::multi_indices;
use crate::diff::central_weights;
use crate::error::{Error, Result};
use crate::stats::fit_loglog;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSample {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

/// Difference steps: `x_step` in space, `xi_rel_step * <xi>` in frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSteps {
    pub x_step: f64,
    pub xi_rel_step: f64,
}

impl Default for ClassSteps {
    fn default() -> Self {
        Self { x_step: 1e-2, xi_rel_step: 1e-2 }
    }
}

/// Three base points times frequencies `2^0..2^12` along a few directions.
pub fn default_symbol_samples(dim: usize) -> Vec<SymbolSample> {
    let xs: &[[f64; 2]] = &[[0.0, 0.0], [0.3, -0.7], [-1.1, 0.4]];
    let dirs: Vec<[f64; 2]> = if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        vec![[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]]
    };
    let mut out = Vec::new();
    for x in xs {
        for d in &dirs {
            for j in 0..=12 {
                let r = 2f64.powi(j);
                out.push(SymbolSample { x: *x, xi: [r * d[0], r * d[1]] });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub alpha: [u32; 2],
    pub beta: [u32; 2],
    /// `sup |d^alpha_x d^beta_xi a| / <xi>^{m - rho|beta| + delta|alpha|}` over samples.
    pub constant: f64,
    /// Log-log slope of the per-frequency sup of that ratio against `<xi>`
    /// for `<xi> >= 2`; `None` when the derivative vanishes identically.
    pub growth_slope: Option<f64>,
    pub grows: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassReport {
    pub symbol: String,
    pub order: f64,
    pub rho: f64,
    pub delta: f64,
    pub entries: Vec<ClassEntry>,
    /// `a(x, xi) = a(0, xi)` at every sample, checked only for multipliers.
    pub x_independence_ok: bool,
    pub in_class: bool,
}

/// Slope above which a constant counts as growing.
pub const GROWTH_THRESHOLD: f64 = 0.2;

/// Mixed partial `d^alpha_x d^beta_xi a` at one sample by tensor-product central differences.
fn mixed_partial(sym: &SymbolSpec, s: &SymbolSample, alpha: [u32; 2], beta: [u32; 2], hx: f64, hxi: f64) -> Complex64 {
    let dim = sym.dim();
    // coordinates: x_1..x_n, xi_1..xi_n
    let mut orders = Vec::new();
    for a in 0..dim {
        orders.push((a, alpha[a] as usize, hx));
    }
    for a in 0..dim {
        orders.push((dim + a, beta[a] as usize, hxi));
    }
    let stencils: Vec<(usize, Vec<f64>, f64)> = orders
        .iter()
        .filter(|(_, m, _)| *m > 0)
        .map(|&(c, m, h)| (c, central_weights(m), h))
        .collect();
    let scale: f64 = orders.iter().map(|&(_, m, h)| h.powi(m as i32)).product();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; stencils.len()];
    loop {
        let mut z = [s.x[0], s.x[1], s.xi[0], s.xi[1]];
        let mut z_flat = [0.0; 4];
        let mut w = 1.0;
        for (k, (c, weights, h)) in stencils.iter().enumerate() {
            let half = (weights.len() / 2) as f64;
            w *= weights[idx[k]];
            let shift = (idx[k] as f64 - half) * h;
            if *c < dim {
                z[*c] += shift;
            } else {
                z[2 + *c - dim] += shift;
            }
        }
        if w != 0.0 {
            z_flat[..dim].copy_from_slice(&z[..dim]);
            z_flat[2..2 + dim].copy_from_slice(&z[2..2 + dim]);
            acc += sym.eval(&z_flat[..dim], &z_flat[2..2 + dim]) * w;
        }
        // odometer
        let mut k = 0;
        loop {
            if k == stencils.len() {
                return acc / scale;
            }
            idx[k] += 1;
            if idx[k] < stencils[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Estimates the seminorm constants `C_{alpha beta}` for `|alpha| <= kx`,
/// `|beta| <= kxi` and flags constants that grow with `|xi|`.
pub fn verify_symbol_class(
    sym: &SymbolSpec,
    kx: u32,
    kxi: u32,
    samples: &[SymbolSample],
    steps: &ClassSteps,
) -> Result<SymbolClassReport> {
    if kx > 3 || kxi > 3 {
        return Err(Error::param("k", "finite-difference depth is limited to 3"));
    }
    if samples.is_empty() {
        return Err(Error::param("samples", "no sample points"));
    }
    let dim = sym.dim();
    let coord_scale = samples
        .iter()
        .flat_map(|s| s.x[..dim].iter().chain(&s.xi[..dim]).copied())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if !(steps.x_step > 1e-8 * coord_scale) || !(steps.xi_rel_step > 1e-8) {
        return Err(Error::StepUnderflow);
    }
    let (m, rho, delta) = (sym.order(), sym.rho(), sym.delta());
    let mut pairs = Vec::new();
    for alpha in multi_indices(dim, kx as i32) {
        for beta in multi_indices(dim, kxi as i32) {
            pairs.push((alpha, beta));
        }
    }
    let entries: Vec<ClassEntry> = pairs
        .par_iter()
        .map(|&(alpha, beta)| {
            let (na, nb) = ((alpha[0] + alpha[1]) as f64, (beta[0] + beta[1]) as f64);
            let e = m - rho * nb + delta * na;
            let ratios: Vec<(f64, f64)> = samples
                .iter()
                .map(|s| {
                    let b = bracket(&s.xi[..dim]);
                    let d = mixed_partial(sym, s, alpha, beta, steps.x_step, steps.xi_rel_step * b);
                    (b, d.norm() / b.powf(e))
                })
                .collect();
            let constant = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
            // per-frequency sup over base points and directions
            let mut by_freq: Vec<(f64, f64)> = Vec::new();
            for &(b, r) in &ratios {
                if b < 2.0 {
                    continue;
                }
                match by_freq.iter_mut().find(|(bb, _)| ((bb - b) / b).abs() < 1e-9) {
                    Some(slot) => slot.1 = slot.1.max(r),
                    None => by_freq.push((b, r)),
                }
            }
            let floor = 1e-9 * constant.max(1e-300);
            let usable: Vec<(f64, f64)> = by_freq.into_iter().filter(|p| p.1 > floor).collect();
            let growth_slope = if constant < 1e-12 || usable.len() < 2 {
                None
            } else {
                let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
                fit_loglog(&xs, &ys).ok().map(|f| f.slope)
            };
            let grows = growth_slope.is_some_and(|s| s > GROWTH_THRESHOLD) || !constant.is_finite();
            ClassEntry { alpha, beta, constant, growth_slope, grows }
        })
        .collect();
    let x_independence_ok = !sym.is_x_independent()
        || samples.iter().all(|s| {
            let zero = [0.0; 2];
            let a = sym.eval(&s.x[..dim], &s.xi[..dim]);
            let b = sym.eval(&zero[..dim], &s.xi[..dim]);
            (a - b).norm() <= 1e-14 * a.norm().max(1.0)
        });
    let in_class = x_independence_ok && entries.iter().all(|e| !e.grows);
    Ok(SymbolClassReport {
        symbol: sym.name().to_string(),
        order: m,
        rho,
        delta,
        entries,
        x_independence_ok,
        in_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psido::{japanese_bracket, modulated_multiplier, riesz_ratio};

    #[test]
    fn bracket_is_in_its_class() {
        for dim in [1, 2] {
            for m in [-1.0, 0.5, 2.0] {
                let sym = japanese_bracket(dim, m).unwrap();
                let rep = verify_symbol_class(&sym, 1, 3, &default_symbol_samples(dim), &ClassSteps::default()).unwrap();
                assert!(rep.in_class, "dim {dim} m {m}: {rep:?}");
                assert!(rep.entries.iter().all(|e| e.constant.is_finite()));
            }
        }
    }

    #[test]
    fn wrong_order_is_flagged() {
        let sym = japanese_bracket(1, 1.5).unwrap().with_order(0.5);
        let rep = verify_symbol_class(&sym, 0, 0, &default_symbol_samples(1), &ClassSteps::default()).unwrap();
        assert!(!rep.in_class);
        let slope = rep.entries[0].growth_slope.unwrap();
        assert!((slope - 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn derivative_oracle() {
        // d/dxi (xi/<xi>) = <xi>^{-3}; d^2/dxi^2 = -3 xi <xi>^{-5}
        let sym = riesz_ratio(1, 1).unwrap();
        for xi in [0.3, 2.0, 17.0, 900.0] {
            let s = SymbolSample { x: [0.2, 0.0], xi: [xi, 0.0] };
            let b = (1.0 + xi * xi).sqrt();
            let d1 = mixed_partial(&sym, &s, [0, 0], [1, 0], 1e-2, 1e-2 * b).re;
            let d2 = mixed_partial(&sym, &s, [0, 0], [2, 0], 1e-2, 1e-2 * b).re;
            assert!((d1 - b.powi(-3)).abs() <= 1e-6 * b.powi(-3), "xi {xi}");
            // roundoff dominates the second difference at large xi
            assert!((d2 + 3.0 * xi * b.powi(-5)).abs() <= 1e-5 * (3.0 * xi * b.powi(-5)).abs(), "xi {xi}: {d2}");
        }
        let rep = verify_symbol_class(&sym, 0, 3, &default_symbol_samples(1), &ClassSteps::default()).unwrap();
        assert!(rep.in_class);
    }

    #[test]
    fn modulated_is_order_zero() {
        let sym = modulated_multiplier(2, 2, 0.25).unwrap();
        let rep = verify_symbol_class(&sym, 2, 2, &default_symbol_samples(2), &ClassSteps::default()).unwrap();
        assert!(rep.in_class, "{rep:?}");
        // x-derivatives are nonzero: d_x chi = -pi w sin(...)
        assert!(rep.entries.iter().any(|e| e.alpha[0] == 1 && e.beta == [0, 0] && e.constant > 0.1));
    }

    #[test]
    fn rejects_tiny_steps_and_depth() {
        let sym = japanese_bracket(1, 0.0).unwrap();
        let s = default_symbol_samples(1);
        assert!(matches!(
            verify_symbol_class(&sym, 1, 1, &s, &ClassSteps { x_step: 1e-20, xi_rel_step: 1e-2 }),
            Err(Error::StepUnderflow)
        ));
        assert!(verify_symbol_class(&sym, 4, 1, &s, &ClassSteps::default()).is_err());
    }
}
