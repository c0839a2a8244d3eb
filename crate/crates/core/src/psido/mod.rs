//! Pseudodifferential operators `a(x, D)u(x) = int e^{2 pi i x.xi} a(x, xi) u_hat(xi) dxi`
//! with symbols in `S^m_{rho,delta}`: application, symbol-class checks, kernel
//! sampling and boundedness probes.

mod class;
mod kernel;
mod probe;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::atoms::bump_weight;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernels::{Gaussian, Hermite, Kernel, SuitableCutoff};
use crate::spectral::{centered_dft, PaddedSpectrum};

pub use class::{default_symbol_samples, verify_symbol_class, ClassEntry, ClassSteps, SymbolClassReport, SymbolSample};
pub use kernel::{
    kernel_decay_check, kernel_sample, KernelConfig, KernelDecayReport, KernelPoint, KernelSample, DECAY_SLACK,
};
pub use probe::{
    blowup_bound, blowup_experiment, operator_norm_probe, BlowupConfig, BlowupReport, BlowupRow, NormKind,
    ProbeReport, ProbeRow,
};

pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Structure {
    General,
    /// `a(x, xi) = b(xi)`
    Multiplier(SpaceFn),
    /// `a(x, xi) = chi(x) b(xi)`; `b = None` means `b = 1`.
    Separable { chi: SpaceFn, b: Option<SpaceFn> },
}

/// A symbol `a(x, xi)` with its declared class `S^order_{rho,delta}`.
#[derive(Clone)]
pub struct SymbolSpec {
    name: String,
    dim: usize,
    order: f64,
    rho: f64,
    delta: f64,
    eval: SymbolFn,
    structure: Structure,
}

impl fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("rho", &self.rho)
            .field("delta", &self.delta)
            .field("x_independent", &self.is_x_independent())
            .finish()
    }
}

fn check_type(dim: usize, rho: f64, delta: f64) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::param("rho", format!("must lie in (0, 1], got {rho}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::param("delta", format!("must lie in [0, 1), got {delta}")));
    }
    Ok(())
}

impl SymbolSpec {
    pub fn general(name: impl Into<String>, dim: usize, order: f64, rho: f64, delta: f64, eval: SymbolFn) -> Result<Self> {
        check_type(dim, rho, delta)?;
        Ok(Self { name: name.into(), dim, order, rho, delta, eval, structure: Structure::General })
    }

    /// `a(x, xi) = b(xi)`.
    pub fn multiplier(name: impl Into<String>, dim: usize, order: f64, rho: f64, delta: f64, b: SpaceFn) -> Result<Self> {
        check_type(dim, rho, delta)?;
        let inner = b.clone();
        let eval: SymbolFn = Arc::new(move |_x, xi| inner(xi));
        Ok(Self { name: name.into(), dim, order, rho, delta, eval, structure: Structure::Multiplier(b) })
    }

    /// `a(x, xi) = chi(x) b(xi)`, or `chi(x)` alone when `b` is `None`.
    pub fn separable(
        name: impl Into<String>,
        dim: usize,
        order: f64,
        rho: f64,
        delta: f64,
        chi: SpaceFn,
        b: Option<SpaceFn>,
    ) -> Result<Self> {
        check_type(dim, rho, delta)?;
        let (c, bb) = (chi.clone(), b.clone());
        let eval: SymbolFn = Arc::new(move |x, xi| match &bb {
            Some(b) => c(x) * b(xi),
            None => c(x),
        });
        Ok(Self { name: name.into(), dim, order, rho, delta, eval, structure: Structure::Separable { chi, b } })
    }

    /// The same symbol under another declared order.
    pub fn with_order(&self, order: f64) -> Self {
        Self { order, ..self.clone() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_x_independent(&self) -> bool {
        matches!(self.structure, Structure::Multiplier(_))
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.eval)(x, xi)
    }
}

/// `<xi> = (1 + |xi|^2)^{1/2}`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `<xi>^m`, in `S^m_{1,0}`.
pub fn japanese_bracket(dim: usize, m: f64) -> Result<SymbolSpec> {
    SymbolSpec::multiplier(
        format!("jbracket:m={m}"),
        dim,
        m,
        1.0,
        0.0,
        Arc::new(move |xi| Complex64::new(bracket(xi).powf(m), 0.0)),
    )
}

/// Multiplication by the bump `psi(x) = prod_i w((x_i - c)/(2r))`, supported in
/// `|x_i - c| < r`. Order 0, class `S^0_{1,0}`.
pub fn smooth_multiplier(dim: usize, r: f64, c: f64) -> Result<SymbolSpec> {
    if !(r > 0.0 && r.is_finite() && c.is_finite()) {
        return Err(Error::param("r", format!("radius must be positive, got {r}")));
    }
    SymbolSpec::separable(
        format!("smoothmult:r={r},c={c}"),
        dim,
        0.0,
        1.0,
        0.0,
        Arc::new(move |x| Complex64::new(x.iter().map(|v| bump_weight((v - c) / (2.0 * r))).product(), 0.0)),
        None,
    )
}

/// `phi_hat(t xi)`: applying it is mollification by `phi_t`.
pub fn frequency_cutoff(phi: Arc<dyn Kernel>, t: f64) -> Result<SymbolSpec> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("scale must be positive, got {t}")));
    }
    let dim = phi.dim();
    let name = format!("freqcutoff:t={t},kernel={}", phi.name());
    SymbolSpec::multiplier(
        name,
        dim,
        0.0,
        1.0,
        0.0,
        Arc::new(move |xi| {
            let mut s = [0.0; 2];
            for (o, v) in s.iter_mut().zip(xi) {
                *o = t * v;
            }
            phi.spectrum(&s[..xi.len()])
        }),
    )
}

fn check_axis(dim: usize, j: usize) -> Result<()> {
    if j == 0 || j > dim {
        return Err(Error::param("j", format!("axis must lie in 1..={dim}, got {j}")));
    }
    Ok(())
}

/// `xi_j / <xi>`, in `S^0_{1,0}`.
pub fn riesz_ratio(dim: usize, j: usize) -> Result<SymbolSpec> {
    check_axis(dim, j)?;
    SymbolSpec::multiplier(
        format!("rieszratio:j={j}"),
        dim,
        0.0,
        1.0,
        0.0,
        Arc::new(move |xi| Complex64::new(xi[j - 1] / bracket(xi), 0.0)),
    )
}

/// `chi(x) xi_j / <xi>` with `chi(x) = 1 + cos(2 pi w x_1)/2`, in `S^0_{1,0}`.
pub fn modulated_multiplier(dim: usize, j: usize, w: f64) -> Result<SymbolSpec> {
    check_axis(dim, j)?;
    if !w.is_finite() {
        return Err(Error::param("w", "modulation frequency must be finite"));
    }
    SymbolSpec::separable(
        format!("modulated:j={j},w={w}"),
        dim,
        0.0,
        1.0,
        0.0,
        Arc::new(move |x| Complex64::new(1.0 + 0.5 * (2.0 * PI * w * x[0]).cos(), 0.0)),
        Some(Arc::new(move |xi| Complex64::new(xi[j - 1] / bracket(xi), 0.0))),
    )
}

/// Names, parameters and one-line descriptions of the built-in symbols.
pub const SYMBOL_CATALOG: &[(&str, &str, &str)] = &[
    ("jbracket", "m=<real>", "<xi>^m, order m, type (1,0)"),
    ("smoothmult", "r=<radius>,c=<centre>", "multiplication by a smooth bump of radius r centred at c"),
    ("freqcutoff", "t=<scale>,kernel=suitable|gaussian|hermite", "phi_hat(t xi); applying it mollifies by phi_t"),
    ("rieszratio", "j=<axis>", "xi_j / <xi>, order 0"),
    ("modulated", "j=<axis>,w=<frequency>", "(1 + cos(2 pi w x_1)/2) xi_j / <xi>, order 0"),
];

/// One instance of every built-in symbol with default parameters.
pub fn builtin_symbols(dim: usize) -> Result<Vec<SymbolSpec>> {
    Ok(vec![
        japanese_bracket(dim, 0.0)?,
        smooth_multiplier(dim, 2.0, 1.0)?,
        frequency_cutoff(Arc::new(SuitableCutoff::new(dim)?), 1.0)?,
        riesz_ratio(dim, 1)?,
        modulated_multiplier(dim, 1, 0.25)?,
    ])
}

fn parse_params(s: &str) -> Result<Vec<(String, String)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::param("symbol", format!("expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn take<T: std::str::FromStr>(params: &[(String, String)], key: &str, default: T) -> Result<T> {
    match params.iter().find(|(k, _)| k == key) {
        None => Ok(default),
        Some((_, v)) => v
            .parse()
            .map_err(|_| Error::param("symbol", format!("cannot parse {key}='{v}'"))),
    }
}

fn check_keys(params: &[(String, String)], allowed: &[&str]) -> Result<()> {
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::param("symbol", format!("unknown parameter '{k}' (allowed: {})", allowed.join(", "))));
        }
    }
    Ok(())
}

/// Parses `name` or `name:key=value,...`, e.g. `jbracket:m=0.5` or `rieszratio:j=1`.
pub fn parse_symbol(spec: &str, dim: usize) -> Result<SymbolSpec> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = parse_params(rest)?;
    match name.trim() {
        "jbracket" => {
            check_keys(&params, &["m"])?;
            japanese_bracket(dim, take(&params, "m", 0.0)?)
        }
        "smoothmult" => {
            check_keys(&params, &["r", "c"])?;
            smooth_multiplier(dim, take(&params, "r", 2.0)?, take(&params, "c", 1.0)?)
        }
        "freqcutoff" => {
            check_keys(&params, &["t", "kernel"])?;
            let t = take(&params, "t", 1.0)?;
            let kernel: String = take(&params, "kernel", "suitable".to_string())?;
            let phi: Arc<dyn Kernel> = match kernel.as_str() {
                "suitable" => Arc::new(SuitableCutoff::new(dim)?),
                "gaussian" => Arc::new(Gaussian { dim, sigma: 0.25 }),
                "hermite" => Arc::new(Hermite { dim }),
                other => return Err(Error::param("kernel", format!("unknown kernel '{other}'"))),
            };
            frequency_cutoff(phi, t)
        }
        "rieszratio" => {
            check_keys(&params, &["j"])?;
            riesz_ratio(dim, take(&params, "j", 1)?)
        }
        "modulated" => {
            check_keys(&params, &["j", "w"])?;
            modulated_multiplier(dim, take(&params, "j", 1)?, take(&params, "w", 0.25)?)
        }
        other => Err(Error::UnknownSymbol(other.to_string())),
    }
}

fn check_grid(sym: &SymbolSpec, u: &GridFunction) -> Result<()> {
    if sym.dim != u.grid().dim() {
        return Err(Error::GridMismatch(format!("symbol dimension {} vs grid dimension {}", sym.dim, u.grid().dim())));
    }
    Ok(())
}

fn ensure_finite(out: GridFunction) -> Result<GridFunction> {
    if let Some(index) = out.values().iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { index });
    }
    Ok(out)
}

fn multiplier_pass(u: &GridFunction, b: &SpaceFn) -> GridFunction {
    PaddedSpectrum::new(u).apply(|xi| b(xi))
}

/// `a(x, D)u`. Multipliers use one zero-padded FFT pass (linear convolution,
/// matching `mollify`); separable symbols multiply that result by `chi`;
/// general symbols use [`apply_quadrature`].
pub fn apply(sym: &SymbolSpec, u: &GridFunction) -> Result<GridFunction> {
    check_grid(sym, u)?;
    let out = match &sym.structure {
        Structure::Multiplier(b) => multiplier_pass(u, b),
        Structure::Separable { chi, b } => {
            let base = match b {
                Some(b) => multiplier_pass(u, b),
                None => u.clone(),
            };
            let grid = *u.grid();
            let dim = grid.dim();
            let values = base
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| v * chi(&grid.point(i)[..dim]))
                .collect();
            GridFunction::from_values_unchecked(grid, values)
        }
        Structure::General => return apply_quadrature(sym, u),
    };
    ensure_finite(out)
}

/// Kohn-Nirenberg quadrature `sum_xi e^{2 pi i x.xi} a(x, xi) u_hat(xi) (2L)^{-n}`
/// over the dual lattice, for every grid point `x`. Cost `O(N^{2n})`.
pub fn apply_quadrature(sym: &SymbolSpec, u: &GridFunction) -> Result<GridFunction> {
    check_grid(sym, u)?;
    let grid = *u.grid();
    let dim = grid.dim();
    let dual = grid.dual();
    let u_hat = centered_dft(u);
    let freqs: Vec<[f64; 2]> = (0..dual.len()).map(|m| dual.point(m)).collect();
    let dxi = (1.0 / (2.0 * grid.half_width())).powi(dim as i32);
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.point(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, uh) in freqs.iter().zip(&u_hat) {
                if uh.re == 0.0 && uh.im == 0.0 {
                    continue;
                }
                let phase: f64 = (0..dim).map(|a| x[a] * xi[a]).sum();
                acc += Complex64::from_polar(1.0, 2.0 * PI * phase) * sym.eval(&x[..dim], &xi[..dim]) * uh;
            }
            acc * dxi
        })
        .collect();
    ensure_finite(GridFunction::from_values_unchecked(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_real, Grid};
    use crate::maximal::mollify;

    fn gaussian_bump(g: &Grid) -> GridFunction {
        sample_real(|x| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp(), g).unwrap()
    }

    #[test]
    fn identity_symbol() {
        let g = Grid::new(1, 4.0, 256).unwrap();
        let u = gaussian_bump(&g);
        let id = japanese_bracket(1, 0.0).unwrap();
        assert!(apply(&id, &u).unwrap().max_abs_diff(&u).unwrap() < 1e-10);
        assert!(apply_quadrature(&id, &u).unwrap().max_abs_diff(&u).unwrap() < 1e-10);
    }

    #[test]
    fn bracket_squared_is_shifted_laplacian() {
        // <D>^2 u = u - Delta u / (4 pi^2); for u = e^{-pi|x|^2},
        // Delta u = (4 pi^2 |x|^2 - 2 pi n) u.
        for (dim, n) in [(1usize, 512usize), (2, 128)] {
            let g = Grid::new(dim, 4.0, n).unwrap();
            let u = gaussian_bump(&g);
            let out = apply(&japanese_bracket(dim, 2.0).unwrap(), &u).unwrap();
            let exact = sample_real(
                |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let lap = (4.0 * PI * PI * r2 - 2.0 * PI * dim as f64) * (-PI * r2).exp();
                    (-PI * r2).exp() - lap / (4.0 * PI * PI)
                },
                &g,
            )
            .unwrap();
            let err = out.max_abs_diff(&exact).unwrap() / exact.sup_norm();
            assert!(err <= 1e-4, "dim {dim}: {err}");
        }
    }

    #[test]
    fn smooth_multiplier_is_pointwise() {
        let g = Grid::new(2, 4.0, 32).unwrap();
        let u = sample_real(|x| (x[0] - 0.3 * x[1]).sin(), &g).unwrap();
        let sym = smooth_multiplier(2, 2.0, 0.5).unwrap();
        let direct = sample_real(
            |x| (x[0] - 0.3 * x[1]).sin() * x.iter().map(|v| bump_weight((v - 0.5) / 4.0)).product::<f64>(),
            &g,
        )
        .unwrap();
        let fast = apply(&sym, &u).unwrap();
        assert!(fast.max_abs_diff(&direct).unwrap() < 1e-14);
        let general = SymbolSpec::general("general-mult", 2, 0.0, 1.0, 0.0, sym.eval.clone()).unwrap();
        let slow = apply(&general, &u).unwrap();
        assert!(slow.max_abs_diff(&direct).unwrap() <= 1e-6 * direct.sup_norm());
    }

    #[test]
    fn fast_and_quadrature_paths_agree() {
        let g = Grid::new(1, 8.0, 512).unwrap();
        let u = gaussian_bump(&g);
        for sym in [japanese_bracket(1, -2.0).unwrap(), riesz_ratio(1, 1).unwrap(), japanese_bracket(1, 0.5).unwrap()] {
            let fast = apply(&sym, &u).unwrap();
            let slow = apply_quadrature(&sym, &u).unwrap();
            let rel = fast.max_abs_diff(&slow).unwrap() / fast.sup_norm();
            assert!(rel <= 1e-6, "{}: {rel}", sym.name());
        }
    }

    #[test]
    fn frequency_cutoff_is_mollification() {
        let g = Grid::new(2, 4.0, 64).unwrap();
        let u = sample_real(|x| if x[0].abs() < 1.0 && x[1] > 0.0 { 1.0 } else { 0.0 }, &g).unwrap();
        let phi: Arc<dyn Kernel> = Arc::new(SuitableCutoff::new(2).unwrap());
        for t in [1.0, 0.5, 0.25] {
            let a = apply(&frequency_cutoff(phi.clone(), t).unwrap(), &u).unwrap();
            let b = mollify(&u, phi.as_ref(), t).unwrap().function;
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn linearity() {
        let g = Grid::new(1, 4.0, 128).unwrap();
        let u = gaussian_bump(&g);
        let v = sample_real(|x| (3.0 * x[0]).cos() * (-x[0] * x[0]).exp(), &g).unwrap();
        let c = Complex64::new(0.7, -1.3);
        for sym in builtin_symbols(1).unwrap() {
            let lhs = apply(&sym, &u.add(&v.scale(c)).unwrap()).unwrap();
            let rhs = apply(&sym, &u).unwrap().add(&apply(&sym, &v).unwrap().scale(c)).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10, "{}", sym.name());
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_symbol("jbracket:m=0.5", 1).unwrap().order(), 0.5);
        assert!(parse_symbol("rieszratio:j=1", 2).unwrap().is_x_independent());
        assert!(!parse_symbol("modulated", 1).unwrap().is_x_independent());
        assert!(parse_symbol("freqcutoff:t=0.5,kernel=gaussian", 1).is_ok());
        assert!(matches!(parse_symbol("nosuch", 1), Err(Error::UnknownSymbol(_))));
        assert!(parse_symbol("jbracket:q=1", 1).is_err());
        assert!(parse_symbol("rieszratio:j=3", 2).is_err());
        assert_eq!(builtin_symbols(2).unwrap().len(), SYMBOL_CATALOG.len());
        for (name, _, _) in SYMBOL_CATALOG {
            assert!(parse_symbol(name, 1).is_ok(), "{name}");
        }
    }
}
