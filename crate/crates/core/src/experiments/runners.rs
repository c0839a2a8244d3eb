use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::plot::{Plot, Series, Style};
use super::{Case, Check, Relation, Report};
use crate::atoms::{
    dilate_atom, global_local_gap as gap_ratio, make_hkp_atom_scaled, make_rough_block, make_smooth_atom, rough_block_decompose, verify_atom, Atom,
    AtomKind,
};
use crate::error::{Error, Result};
use crate::fourier::{decay_report, hardy_inequality_check, hkp_growth_law, hkp_spectral_error, moment_decay_link, FrequencyRange, WeightKind};
use crate::grid::{compress, enumerate_dyadic_cubes, sample_real, Cube, CubeFamily, Grid};
use crate::kernels::{Gaussian, Kernel, MomentUnit, SuitableCutoff};
use crate::maximal::{hm_local_norm, hm_norm, mollify, regularization_check, ScaleLadder};
use crate::morrey::{coefficient_norm, morrey_norm, MorreyParams};
use crate::psido::{
    apply, apply_quadrature, blowup_bound, blowup_experiment, builtin_symbols, frequency_cutoff, japanese_bracket, kernel_decay_check,
    kernel_sample, operator_norm_probe, parse_symbol, BlowupConfig, KernelConfig, NormKind,
};
use crate::stats::fit_loglog;

struct Setup {
    grid: Grid,
    family: CubeFamily,
    ladder: ScaleLadder,
    /// `phi_hat(xi) = exp(-pi |xi|^2)`.
    phi: Gaussian,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let grid = cfg.grid()?;
    Ok(Setup {
        family: cfg.family(&grid)?,
        ladder: cfg.ladder()?,
        phi: Gaussian { dim: grid.dim(), sigma: 1.0 / (2.0 * PI).sqrt() },
        grid,
    })
}

fn number(cfg: &ExperimentConfig, key: &'static str) -> Result<f64> {
    cfg.number(key).ok_or_else(|| Error::param(key, "missing option"))
}

fn list(cfg: &ExperimentConfig, key: &'static str) -> Result<Vec<f64>> {
    cfg.list(key).ok_or_else(|| Error::param(key, "missing option"))
}

fn count(cfg: &ExperimentConfig, key: &'static str) -> Result<usize> {
    let v = number(cfg, key)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::param(key, format!("must be a nonnegative integer, got {v}")));
    }
    Ok(v as usize)
}

fn integer(cfg: &ExperimentConfig, key: &'static str) -> Result<i32> {
    let v = number(cfg, key)?;
    if v.fract() != 0.0 {
        return Err(Error::param(key, format!("must be an integer, got {v}")));
    }
    Ok(v as i32)
}

fn tol(cfg: &ExperimentConfig, key: &'static str) -> (&'static str, f64) {
    (key, cfg.tolerance(key))
}

fn frequency_range(cfg: &ExperimentConfig) -> Result<FrequencyRange> {
    Ok(FrequencyRange {
        j_lo: integer(cfg, "j_lo")?,
        j_hi: integer(cfg, "j_hi")?,
        fit_lo: integer(cfg, "fit_lo")?,
        fit_hi: integer(cfg, "fit_hi")?,
        refine: count(cfg, "refine")?.max(1),
    })
}

type AtomJob<'a> = Box<dyn Fn() -> Result<Atom> + Send + Sync + 'a>;

/// Corpus entries keyed `smooth/<side index>/<seed index>`, `rough/<i>` and `file/<i>`.
fn build_corpus(cfg: &ExperimentConfig, grid: &Grid, p: &MorreyParams) -> Vec<(String, Result<Atom>)> {
    let c = &cfg.corpus;
    let dim = grid.dim();
    let mut jobs: Vec<(String, AtomJob)> = Vec::new();
    for (i, &side) in c.sides.iter().enumerate() {
        for s in 0..c.per_side {
            let corner = c.corner + side * (s % c.stagger.max(1)) as f64;
            let seed = cfg.seed.wrapping_add(1000 * i as u64 + s as u64);
            jobs.push((
                format!("smooth/{i:02}/{s:02}"),
                Box::new(move || make_smooth_atom(grid, p, &Cube::from_corner(&vec![corner; dim], side)?, seed)),
            ));
        }
    }
    for i in 0..c.rough_count {
        let side = c.rough_sides[i % c.rough_sides.len()];
        let seed = cfg.seed.wrapping_add(100_000 + i as u64);
        let corner = c.rough_corner;
        jobs.push((
            format!("rough/{i:02}"),
            Box::new(move || make_rough_block(grid, p, &Cube::from_corner(&vec![corner; dim], side)?, seed)),
        ));
    }
    for (i, path) in c.files.iter().enumerate() {
        jobs.push((
            format!("file/{i:02}"),
            Box::new(move || {
                let a = Atom::load(path)?;
                if !a.data.grid().same_as(grid) {
                    return Err(Error::GridMismatch(format!("{} was saved on another grid", path.display())));
                }
                Ok(a)
            }),
        ));
    }
    jobs.par_iter().map(|(k, f)| (k.clone(), f())).collect()
}

/// Splits the corpus into usable atoms and failure records.
fn corpus_atoms(cfg: &ExperimentConfig, grid: &Grid, p: &MorreyParams, report: &mut Report) -> Vec<(String, Atom)> {
    let mut out = Vec::new();
    for (k, r) in build_corpus(cfg, grid, p) {
        match r {
            Ok(a) => out.push((k, a)),
            Err(e) => report.fail(&k, e),
        }
    }
    out
}

fn kind_name(k: AtomKind) -> &'static str {
    match k {
        AtomKind::Smooth => "smooth",
        AtomKind::Rough => "rough",
        AtomKind::Hkp => "hkp",
    }
}

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::INFINITY, f64::min)
}

/// Line `c x^slope` through the geometric middle of `pts`, for reference slopes.
fn reference_line(pts: &[(f64, f64)], slope: f64) -> Vec<(f64, f64)> {
    let good: Vec<&(f64, f64)> = pts.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    if good.is_empty() {
        return Vec::new();
    }
    let lx = good.iter().map(|p| p.0.ln()).sum::<f64>() / good.len() as f64;
    let ly = good.iter().map(|p| p.1.ln()).sum::<f64>() / good.len() as f64;
    let (lo, hi) = (min_of(good.iter().map(|p| p.0)), max_of(good.iter().map(|p| p.0)));
    [lo, hi].iter().map(|&x| (x, (ly + slope * (x.ln() - lx)).exp())).collect()
}

pub fn morrey_scaling(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let factors = list(cfg, "factors")?;
    for &r in &factors {
        if !(r >= 1.0 && r.fract() == 0.0 && (r as usize).is_power_of_two()) {
            return Err(Error::param("factors", format!("compression factors must be powers of two, got {r}")));
        }
    }
    let mut rs = vec![1usize];
    rs.extend(factors.iter().map(|&r| r as usize).filter(|&r| r > 1));
    let expected_exp = -(s.grid.dim() as f64) / p.lambda();
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let mut plot = Plot::loglog("norm-vs-factor.svg", "Norms of f(R x)", "R", "norm");
    let mut worst = 0.0f64;
    let mut worst_exp = 0.0f64;
    for (key, a) in &atoms {
        let rows: Vec<Result<(usize, f64, f64)>> = rs
            .par_iter()
            .map(|&r| {
                let f = if r == 1 { a.data.clone() } else { compress(&a.data, r)? };
                Ok((r, morrey_norm(&f, &p, &s.family)?, hm_norm(&f, &p, &s.phi, &s.ladder, &s.family)?))
            })
            .collect();
        let rows: Vec<(usize, f64, f64)> = match rows.into_iter().collect::<Result<_>>() {
            Ok(v) => v,
            Err(e) => {
                report.fail(key, e);
                continue;
            }
        };
        let (m0, h0) = (rows[0].1, rows[0].2);
        for &(r, m, h) in &rows {
            let expected = (r as f64).powf(expected_exp);
            let (mr, hr) = (m / m0, h / h0);
            worst = worst.max((mr / expected - 1.0).abs()).max((hr / expected - 1.0).abs());
            report.cases.push(
                Case::new(format!("{key}/R={r:04}"))
                    .set("side", a.cube.side)
                    .set("R", r as f64)
                    .set("morrey", m)
                    .set("hm", h)
                    .set("morrey_ratio", mr)
                    .set("hm_ratio", hr)
                    .set("expected_ratio", expected),
            );
        }
        if rows.len() >= 2 {
            let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
            let mfit = fit_loglog(&xs, &rows.iter().map(|r| r.1).collect::<Vec<_>>())?;
            let hfit = fit_loglog(&xs, &rows.iter().map(|r| r.2).collect::<Vec<_>>())?;
            worst_exp = worst_exp.max((mfit.slope / expected_exp - 1.0).abs()).max((hfit.slope / expected_exp - 1.0).abs());
            report.cases.push(
                Case::new(format!("{key}/fit"))
                    .set("morrey_exponent", mfit.slope)
                    .set("hm_exponent", hfit.slope)
                    .set("expected_exponent", expected_exp),
            );
        }
        plot.push(Series::new(format!("{key} Morrey"), rows.iter().map(|r| (r.0 as f64, r.1)).collect(), Style::Markers));
        plot.push(Series::new(format!("{key} Hardy-Morrey"), rows.iter().map(|r| (r.0 as f64, r.2)).collect(), Style::Markers));
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.1)).collect();
        plot.push(Series::new(format!("slope {expected_exp:.2}"), reference_line(&pts, expected_exp), Style::Dashed));
    }
    report.checks.push(Check::new(
        "scaling",
        "max relative deviation of norm ratios from R^(-n/lambda)",
        worst,
        Relation::AtMost,
        cfg.tolerance("scaling"),
        tol(cfg, "scaling"),
    ));
    report.checks.push(Check::new(
        "exponent",
        "max relative error of fitted exponents against -n/lambda",
        worst_exp,
        Relation::AtMost,
        cfg.tolerance("exponent"),
        tol(cfg, "exponent"),
    ));
    report.plots.push(plot);
    Ok(report)
}

pub fn atom_uniform_bound(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let results: Vec<(String, Result<Case>)> = atoms
        .par_iter()
        .map(|(key, a)| {
            let r = hm_local_norm(&a.data, &p, &s.phi, &s.ladder, &s.family).map(|norm| {
                let cert = verify_atom(a);
                Case::new(key.as_str())
                    .set("kind", kind_name(a.kind))
                    .set("side", a.cube.side)
                    .set("hm_local", norm)
                    .set("certificate", cert.passed)
            });
            (key.clone(), r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let norms: Vec<f64> = report.cases.iter().filter_map(|c| c.number("hm_local")).collect();
    let band = if norms.is_empty() { f64::INFINITY } else { max_of(norms.iter().copied()) / min_of(norms.iter().copied()) };
    let bad = report.cases.iter().filter(|c| c.fields.get("certificate").is_some_and(|f| *f == "false".into())).count();
    report.checks.push(Check::new("band", "max/min of local norms over the corpus", band, Relation::AtMost, cfg.tolerance("band"), tol(cfg, "band")));
    report.checks.push(Check::new(
        "certificates",
        "atoms failing verify_atom",
        bad as f64,
        Relation::AtMost,
        0.0,
        ("verify_atom", crate::atoms::MOMENT_TOLERANCE),
    ));
    let mut plot = Plot::loglog("norm-vs-side.svg", "Local Hardy-Morrey norm of atoms", "side", "norm");
    for kind in ["smooth", "rough"] {
        let pts: Vec<(f64, f64)> = report
            .cases
            .iter()
            .filter(|c| c.fields.get("kind") == Some(&kind.into()))
            .filter_map(|c| Some((c.number("side")?, c.number("hm_local")?)))
            .collect();
        plot.push(Series::new(kind, pts, Style::Markers));
    }
    report.plots.push(plot);
    Ok(report)
}

fn annulus_series(rep: &crate::fourier::DecayReport) -> Vec<(f64, f64)> {
    rep.annuli.iter().map(|a| ((a.lo * a.hi).sqrt(), a.raw_sup)).collect()
}

pub fn decay_homogeneous(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let range = frequency_range(cfg)?;
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let reps: Vec<(String, AtomKind, f64, Result<crate::fourier::DecayReport>)> = atoms
        .par_iter()
        .map(|(k, a)| (k.clone(), a.kind, a.cube.side, decay_report(&a.data, &p, WeightKind::Homogeneous, &range)))
        .collect();
    let exponent = s.grid.dim() as f64 * (1.0 / p.lambda() - 1.0);
    let slack = cfg.tolerance("slope");
    let mut plot = Plot::loglog("annulus-decay.svg", "Annulus sups of |f_hat|", "|xi|", "sup |f_hat|");
    let (mut atom_slopes, mut control_slopes, mut nonfinite) = (Vec::new(), Vec::new(), 0usize);
    for (k, kind, side, r) in reps {
        match r {
            Ok(rep) => {
                if kind == AtomKind::Rough {
                    control_slopes.push(rep.slope);
                } else {
                    atom_slopes.push(rep.slope);
                    nonfinite += usize::from(!rep.c.is_finite());
                }
                if k.ends_with("/00") || kind == AtomKind::Rough {
                    plot.push(Series::new(&k, annulus_series(&rep), Style::Both));
                }
                report.cases.push(
                    Case::new(k.as_str())
                        .set("kind", kind_name(kind))
                        .set("side", side)
                        .set("slope", rep.slope)
                        .set("slope_ci", rep.slope_ci)
                        .set("C", rep.c)
                        .set("exponent", exponent)
                        .set("consistent", rep.slope >= exponent - slack),
                );
            }
            Err(e) => report.fail(&k, e),
        }
    }
    if let Some(first) = plot.series.first() {
        let line = reference_line(&first.points, exponent);
        plot.push(Series::new(format!("slope {exponent:.2}"), line, Style::Dashed));
    }
    report.checks.push(Check::new(
        "atom_slope",
        "smallest low-frequency slope over smooth atoms",
        min_of(atom_slopes.iter().copied()),
        Relation::AtLeast,
        exponent - slack,
        tol(cfg, "slope"),
    ));
    report.checks.push(Check::new("atom_constant", "atoms with non-finite C", nonfinite as f64, Relation::AtMost, 0.0, tol(cfg, "slope")));
    if !control_slopes.is_empty() {
        report.checks.push(Check::new(
            "control_slope",
            "largest slope over rough blocks; must violate the law",
            max_of(control_slopes.iter().copied()),
            Relation::AtMost,
            exponent - slack,
            tol(cfg, "slope"),
        ));
    }
    report.plots.push(plot);
    Ok(report)
}

pub fn decay_local(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let range = frequency_range(cfg)?;
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let results: Vec<(String, Result<Case>)> = atoms
        .par_iter()
        .map(|(k, a)| {
            let r = (|| {
                let rep = decay_report(&a.data, &p, WeightKind::Inhomogeneous, &range)?;
                let norm = hm_local_norm(&a.data, &p, &s.phi, &s.ladder, &s.family)?;
                Ok(Case::new(k.as_str())
                    .set("kind", kind_name(a.kind))
                    .set("side", a.cube.side)
                    .set("C", rep.c)
                    .set("hm_local", norm)
                    .set("C_over_norm", rep.c / norm)
                    .set("slope", rep.slope))
            })();
            (k.clone(), r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let ratios: Vec<f64> = report.cases.iter().filter_map(|c| c.number("C_over_norm")).collect();
    let nonfinite = ratios.iter().filter(|r| !r.is_finite()).count();
    let band = if ratios.is_empty() { f64::INFINITY } else { max_of(ratios.iter().copied()) / min_of(ratios.iter().copied()) };
    report.checks.push(Check::new("constant", "atoms with non-finite C", nonfinite as f64, Relation::AtMost, 0.0, tol(cfg, "band")));
    report.checks.push(Check::new("band", "max/min of C / ||f||_hM", band, Relation::AtMost, cfg.tolerance("band"), tol(cfg, "band")));
    let mut plot = Plot::loglog("constant-vs-side.svg", "Inhomogeneous decay constant per cube size", "side", "C / ||f||_hM");
    for kind in ["smooth", "rough"] {
        let pts: Vec<(f64, f64)> = report
            .cases
            .iter()
            .filter(|c| c.fields.get("kind") == Some(&kind.into()))
            .filter_map(|c| Some((c.number("side")?, c.number("C_over_norm")?)))
            .collect();
        plot.push(Series::new(kind, pts, Style::Markers));
    }
    report.plots.push(plot);
    Ok(report)
}

pub fn hkp_closedform(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg.grid()?;
    let p = cfg.morrey_params()?;
    let frac = number(cfg, "frac")?;
    let ks: Vec<usize> = list(cfg, "k")?.iter().map(|&k| k as usize).collect();
    let eps = list(cfg, "eps")?;
    let mut report = Report::default();
    let jobs: Vec<(usize, f64)> = ks.iter().flat_map(|&k| eps.iter().map(move |&e| (k, e))).collect();
    let results: Vec<(String, Result<Case>)> = jobs
        .par_iter()
        .map(|&(k, e)| {
            let key = format!("closed/k={k}/eps={e:e}");
            let r = make_hkp_atom_scaled(&grid, k, &p, e).and_then(|a| hkp_spectral_error(&a, frac)).map(|c| {
                Case::new(key.as_str()).set("k", k as f64).set("eps", e).set("relative_error", c.relative_error).set("resolved", c.resolved)
            });
            (key, r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let errs: Vec<f64> = report.cases.iter().filter_map(|c| c.number("relative_error")).collect();
    report.checks.push(Check::new(
        "closed_form",
        "max relative error of the DFT against the closed form",
        if errs.len() == jobs.len() { max_of(errs.iter().copied()) } else { f64::INFINITY },
        Relation::AtMost,
        cfg.tolerance("closed_form"),
        tol(cfg, "closed_form"),
    ));
    let mut err_plot = Plot::loglog("closed-form-error.svg", "DFT against closed form", "eps", "relative error");
    for &k in &ks {
        let pts: Vec<(f64, f64)> = report
            .cases
            .iter()
            .filter(|c| c.number("k") == Some(k as f64))
            .filter_map(|c| Some((c.number("eps")?, c.number("relative_error")?)))
            .collect();
        err_plot.push(Series::new(format!("k = {k}"), pts, Style::Both));
    }
    report.plots.push(err_plot);

    let gk = count(cfg, "growth_k")?;
    let glambda = number(cfg, "growth_lambda")?;
    let geps = list(cfg, "growth_eps")?;
    let growth = MorreyParams::new(p.q().min(glambda), glambda).and_then(|gp| hkp_growth_law(&grid, gk, &gp, &geps));
    match growth {
        Ok(g) => {
            for r in &g.rows {
                report.cases.push(Case::new(format!("growth/eps={:e}", r.eps)).set("eps", r.eps).set("value", r.value));
            }
            report.cases.push(
                Case::new("growth/fit")
                    .set("slope", g.slope)
                    .set("slope_ci", g.slope_ci)
                    .set("expected_slope", g.expected_slope)
                    .set("relative_error", g.relative_error),
            );
            report.checks.push(Check::new(
                "growth",
                "relative error of the growth slope against n(1-1/lambda)",
                g.relative_error,
                Relation::AtMost,
                cfg.tolerance("growth"),
                tol(cfg, "growth"),
            ));
            let pts: Vec<(f64, f64)> = g.rows.iter().map(|r| (r.eps, r.value)).collect();
            let line = reference_line(&pts, g.expected_slope);
            report.plots.push(
                Plot::loglog("growth-law.svg", "|a_eps_hat(0, 1/(4 eps))|", "eps", "modulus")
                    .with(Series::new("measured", pts, Style::Markers))
                    .with(Series::new(format!("slope {:.3}", g.expected_slope), line, Style::Dashed)),
            );
        }
        Err(e) => report.fail("growth", e),
    }
    Ok(report)
}

pub fn moment_necessity(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let range = frequency_range(cfg)?;
    let spec = &cfg.symbol.as_ref().ok_or_else(|| Error::param("symbol", "missing"))?.spec;
    let sym = parse_symbol(spec, s.grid.dim())?;
    let zero = cfg.tolerance("spectral_zero");
    let slack = cfg.tolerance("slope");
    let exponent = s.grid.dim() as f64 * (1.0 / p.lambda() - 1.0);
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let measure = |a: &Atom| -> Result<(f64, f64)> {
        let link = moment_decay_link(a, None);
        let worst = max_of(link.derivatives.iter().map(|d| d.scaled));
        let rep = decay_report(&a.data, &p, WeightKind::Homogeneous, &range)?;
        Ok((worst, rep.slope))
    };
    let results: Vec<(String, Result<Case>)> = atoms
        .par_iter()
        .map(|(k, a)| {
            let r = (|| {
                let product = Atom { data: apply(&sym, &a.data)?, moment_order: -1, recipe: None, ..a.clone() };
                let (d0, s0) = measure(a)?;
                let (d1, s1) = measure(&product)?;
                Ok(Case::new(k.as_str())
                    .set("side", a.cube.side)
                    .set("atom_moment", d0)
                    .set("atom_slope", s0)
                    .set("product_moment", d1)
                    .set("product_slope", s1))
            })();
            (k.clone(), r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let col = |name: &str| -> Vec<f64> { report.cases.iter().filter_map(|c| c.number(name)).collect() };
    let (am, asl, pm, psl) = (col("atom_moment"), col("atom_slope"), col("product_moment"), col("product_slope"));
    let checks = vec![
        Check::new("atom_moments", "largest scaled |d^alpha a_hat(0)| over atoms", max_of(am.iter().copied()), Relation::AtMost, zero, tol(cfg, "spectral_zero")),
        Check::new(
            "product_moments",
            "smallest scaled |d^alpha (psi a)_hat(0)| over products; must be nonzero",
            min_of(pm.iter().copied()),
            Relation::Above,
            zero,
            tol(cfg, "spectral_zero"),
        ),
        Check::new("atom_slope", "smallest low-frequency slope over atoms", min_of(asl.iter().copied()), Relation::AtLeast, exponent - slack, tol(cfg, "slope")),
        // a product whose mean is small next to its first moment still reads slope ~1
        // over a fixed band, so the violation is required of some product, not all
        Check::new(
            "product_slope",
            "smallest low-frequency slope over products; some product must violate the law",
            min_of(psl.iter().copied()),
            Relation::AtMost,
            exponent - slack,
            tol(cfg, "slope"),
        ),
    ];
    let violating = psl.iter().filter(|&&v| v <= exponent - slack).count();
    report.cases.push(Case::new("products/summary").set("products", psl.len()).set("violating", violating));
    report.checks.extend(checks);
    let mut plot = Plot::loglog("moments.svg", "Scaled spectral derivatives at the origin", "side", "scaled |d^alpha f_hat(0)|");
    let pts = |name: &str| -> Vec<(f64, f64)> { report.cases.iter().filter_map(|c| Some((c.number("side")?, c.number(name)?))).collect() };
    plot.push(Series::new("atoms", pts("atom_moment"), Style::Markers));
    plot.push(Series::new("bump x atom", pts("product_moment"), Style::Markers));
    report.plots.push(plot);
    Ok(report)
}

/// Seeded modulated Gaussian bumps spread across the box.
fn test_function(grid: &Grid, seed: u64) -> Result<crate::grid::GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let centre: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-0.4 * l..0.4 * l)).collect();
    let freq = rng.gen_range(0.5..7.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let width = rng.gen_range(0.5..4.5);
    sample_real(
        |x| {
            let r2: f64 = x.iter().zip(&centre).map(|(a, c)| (a - c) * (a - c)).sum();
            (freq * (x[0] - centre[0]) + phase).sin() * (-r2 / width).exp()
        },
        grid,
    )
}

pub fn blockdecomp_roundtrip(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let n = count(cfg, "functions")?;
    let psi = MomentUnit::new(s.grid.dim(), number(cfg, "psi_radius")?)?;
    let coeff_family = enumerate_dyadic_cubes(&s.grid, integer(cfg, "coeff_j_min")?, integer(cfg, "coeff_j_max")?)?;
    let local = s.ladder.truncate()?;
    let mut report = Report::default();
    let results: Vec<(String, Result<Case>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let key = format!("f/{i:03}");
            let r = (|| {
                let f = test_function(&s.grid, cfg.seed.wrapping_add(i as u64))?;
                let d = rough_block_decompose(&f, &psi, &p, &local)?;
                let rec = d.reconstruct().max_abs_diff(&d.smoothed)? / f.sup_norm();
                let coeff = coefficient_norm(&d.coefficients, &p, &coeff_family)?;
                let norm = hm_local_norm(&f, &p, &s.phi, &local, &s.family)?;
                Ok(Case::new(key.as_str())
                    .set("index", i)
                    .set("blocks", d.blocks.len())
                    .set("reconstruction", rec)
                    .set("coefficient_norm", coeff)
                    .set("hm_local", norm)
                    .set("ratio", coeff / norm))
            })();
            (key, r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let rec: Vec<f64> = report.cases.iter().filter_map(|c| c.number("reconstruction")).collect();
    let ratios: Vec<(f64, f64)> = report.cases.iter().filter_map(|c| Some((c.number("index")? + 1.0, c.number("ratio")?))).collect();
    report.checks.push(Check::new(
        "reconstruction",
        "max |sum s_Q b_Q - psi * f| / ||f||_inf",
        max_of(rec.iter().copied()),
        Relation::AtMost,
        cfg.tolerance("reconstruction"),
        tol(cfg, "reconstruction"),
    ));
    report.checks.push(Check::new(
        "coefficient_bound",
        "max ||{s_Q}|| / ||f||_hM over the test functions",
        max_of(ratios.iter().map(|r| r.1)),
        Relation::AtMost,
        cfg.tolerance("coefficient_bound"),
        tol(cfg, "coefficient_bound"),
    ));
    let mut plot = Plot::loglog("coefficient-ratio.svg", "Coefficient norm over local norm", "test function", "ratio");
    plot.log_x = false;
    plot.push(Series::new("ratio", ratios, Style::Markers));
    report.plots.push(plot);
    Ok(report)
}

pub fn psido_bounded(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let sc = cfg.symbol.as_ref().ok_or_else(|| Error::param("symbol", "missing"))?;
    let sym = parse_symbol(&sc.spec, s.grid.dim())?;
    let mut report = Report::default();
    let atoms: Vec<Atom> = corpus_atoms(cfg, &s.grid, &p, &mut report).into_iter().map(|(_, a)| a).collect();
    let local = s.ladder.truncate()?;
    let mut plot = Plot::loglog("ratio-vs-side.svg", "Operator-norm probe", "side", "||Op a|| / ||a||");
    let mut probes = vec![("symbol", sym, local, NormKind::Local)];
    if let Some(c) = &sc.control {
        probes.push(("control", parse_symbol(c, s.grid.dim())?, s.ladder.clone(), NormKind::Global));
    }
    for (role, sym, ladder, norm) in probes {
        match operator_norm_probe(&sym, &p, &atoms, &s.phi, &ladder, &s.family, norm) {
            Ok(rep) => {
                for (i, r) in rep.rows.iter().enumerate() {
                    report.cases.push(
                        Case::new(format!("{role}/{i:03}"))
                            .set("symbol", rep.symbol.as_str())
                            .set("norm", format!("{norm:?}").to_lowercase())
                            .set("side", r.side)
                            .set("input", r.input_norm)
                            .set("output", r.output_norm)
                            .set("ratio", r.ratio),
                    );
                }
                let trend = rep.trend.unwrap_or(f64::NAN);
                report.cases.push(
                    Case::new(format!("{role}/fit"))
                        .set("symbol", rep.symbol.as_str())
                        .set("trend", trend)
                        .set("trend_ci", rep.trend_ci.unwrap_or(f64::NAN))
                        .set("max_ratio", rep.max_ratio),
                );
                let check = if role == "symbol" {
                    Check::new("trend", "slope of log ratio against log side, local norm", trend, Relation::AbsAtMost, cfg.tolerance("trend"), tol(cfg, "trend"))
                } else {
                    Check::new(
                        "control_trend",
                        "slope of log ratio against log side for the control, global norm",
                        trend,
                        Relation::Above,
                        cfg.tolerance("control_trend"),
                        tol(cfg, "control_trend"),
                    )
                };
                report.checks.push(check);
                plot.push(Series::new(format!("{} ({norm:?})", rep.symbol), rep.rows.iter().map(|r| (r.side, r.ratio)).collect(), Style::Markers));
            }
            Err(e) => report.fail(role, e),
        }
    }
    report.plots.push(plot);
    Ok(report)
}

pub fn psido_blowup(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let m = number(cfg, "m")?;
    let k = count(cfg, "k")?;
    let j = count(cfg, "j")?;
    let j = if j == 0 { k } else { j };
    let lambda = cfg.params.lambda;
    let dim = s.grid.dim();
    let be = list(cfg, "bound_eps")?;
    if be.len() != 2 || be.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::param("bound_eps", "need exactly two positive dilations"));
    }
    let mut report = Report::default();
    let (b0, b1) = (blowup_bound(m, k, lambda, j, be[0], dim), blowup_bound(m, k, lambda, j, be[1], dim));
    let expected = (be[0] / be[1]).powf(m);
    let ratio = b1 / b0;
    report.cases.push(
        Case::new("bound/ratio")
            .set("eps0", be[0])
            .set("eps1", be[1])
            .set("bound0", b0)
            .set("bound1", b1)
            .set("ratio", ratio)
            .set("expected", expected),
    );
    report.checks.push(Check::new(
        "bound_ratio",
        "|bound(eps1)/bound(eps0) - (eps0/eps1)^m|",
        (ratio - expected).abs(),
        Relation::AtMost,
        cfg.tolerance("bound_ratio"),
        tol(cfg, "bound_ratio"),
    ));
    let bc = BlowupConfig { m, k, lambda, j: Some(j), eps: list(cfg, "eps")? };
    match blowup_experiment(&bc, &s.grid, &s.phi, &s.ladder, &s.family) {
        Ok(rep) => {
            for r in &rep.rows {
                report.cases.push(Case::new(format!("measured/eps={:e}", r.eps)).set("eps", r.eps).set("bound", r.bound).set("hm_local", r.measured));
            }
            report.cases.push(
                Case::new("measured/fit")
                    .set("q", rep.q)
                    .set("j", rep.j)
                    .set("bound_slope", rep.bound_slope)
                    .set("measured_slope", rep.measured_slope)
                    .set("measured_slope_ci", rep.measured_slope_ci),
            );
            let t = cfg.tolerance("measured_slope");
            report.checks.push(Check::new(
                "measured_slope",
                "slope of log ||<D>^m a_eps||_hM against log eps",
                rep.measured_slope,
                Relation::AtMost,
                -m + t,
                tol(cfg, "measured_slope"),
            ));
            let measured: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.eps, r.measured)).collect();
            let bound: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.eps, r.bound)).collect();
            let line = reference_line(&measured, -m);
            report.plots.push(
                Plot::loglog("blowup.svg", "<D>^m applied to dilated atoms", "eps", "norm")
                    .with(Series::new("measured local norm", measured, Style::Both))
                    .with(Series::new("closed-form bound", bound, Style::Both))
                    .with(Series::new(format!("slope {:.2}", -m), line, Style::Dashed)),
            );
        }
        Err(e) => report.fail("measured", e),
    }
    Ok(report)
}

pub fn kernel_decay(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg.grid()?;
    let dim = grid.dim();
    let kc = KernelConfig { eps: number(cfg, "eps")?, dxi: number(cfg, "dxi")?, richardson: true };
    let (lo, hi) = (number(cfg, "d_lo")?, number(cfg, "d_hi")?);
    let points = count(cfg, "points")?.max(2);
    let dists: Vec<f64> = (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect();
    let pairs: Vec<([f64; 2], [f64; 2])> = dists.iter().map(|&d| ([0.1 + d, 0.0], [0.1, 0.0])).collect();
    let slack = cfg.tolerance("decay_slack");
    let mut symbols: Vec<_> = builtin_symbols(dim)?.into_iter().filter(|s| s.order() == 0.0).collect();
    if let Some(sc) = &cfg.symbol {
        symbols.push(parse_symbol(&sc.spec, dim)?);
    }
    let mut report = Report::default();
    let mut plot = Plot::loglog("kernel-decay.svg", "Regularized kernel |K(x, y)|", "|x - y|", "|K|");
    let mut excess = f64::NEG_INFINITY;
    let mut unresolved = 0;
    for (i, sym) in symbols.iter().enumerate() {
        let key = format!("symbol/{i:02}");
        let r = kernel_sample(sym, &kc, &pairs).and_then(|smp| Ok((kernel_decay_check(&smp, sym.order(), sym.rho(), lo, hi)?, smp)));
        match r {
            Ok((rep, smp)) => {
                if let Some(sl) = rep.slope {
                    excess = excess.max(sl - rep.expected_slope);
                }
                unresolved += rep.unresolved;
                for (pi, pt) in smp.points.iter().enumerate() {
                    report.cases.push(
                        Case::new(format!("{key}/{pi:02}"))
                            .set("symbol", sym.name())
                            .set("distance", pt.distance)
                            .set("magnitude", pt.value.norm())
                            .set("resolved", pt.resolved),
                    );
                }
                report.cases.push(
                    Case::new(format!("{key}/fit"))
                        .set("symbol", sym.name())
                        .set("slope", rep.slope.unwrap_or(f64::NAN))
                        .set("expected_slope", rep.expected_slope)
                        .set("negligible", rep.negligible)
                        .set("unresolved", rep.unresolved)
                        .set("stabilization", smp.stabilization.unwrap_or(f64::NAN)),
                );
                plot.push(Series::new(sym.name(), smp.points.iter().map(|p| (p.distance, p.value.norm())).collect(), Style::Both));
            }
            Err(e) => report.fail(&key, e),
        }
    }
    if excess == f64::NEG_INFINITY {
        // every kernel below rounding: faster than any power
        excess = -slack;
    }
    report.checks.push(Check::new(
        "decay",
        "largest fitted slope minus -(m+n)/rho",
        excess,
        Relation::AtMost,
        slack,
        tol(cfg, "decay_slack"),
    ));
    report.checks.push(Check::new("resolved", "unresolved kernel samples in range", unresolved as f64, Relation::AtMost, 0.0, tol(cfg, "decay_slack")));
    if dim == 1 {
        let bessel = japanese_bracket(1, -2.0)?;
        match kernel_sample(&bessel, &kc, &pairs) {
            Ok(smp) => {
                let mut worst = 0.0f64;
                let mut exact_pts = Vec::new();
                for (pi, pt) in smp.points.iter().enumerate() {
                    let exact = PI * (-2.0 * PI * pt.distance).exp();
                    let err = (pt.value - exact).norm() / exact;
                    worst = worst.max(err);
                    exact_pts.push((pt.distance, exact));
                    report.cases.push(
                        Case::new(format!("bessel/{pi:02}")).set("distance", pt.distance).set("value", pt.value.re).set("exact", exact).set("relative_error", err),
                    );
                }
                report.checks.push(Check::new(
                    "bessel",
                    "max relative error of the <xi>^-2 kernel against pi exp(-2 pi |x-y|)",
                    worst,
                    Relation::AtMost,
                    cfg.tolerance("bessel"),
                    tol(cfg, "bessel"),
                ));
                plot.push(Series::new("pi exp(-2 pi d)", exact_pts, Style::Dashed));
            }
            Err(e) => report.fail("bessel", e),
        }
    }
    report.plots.push(plot);

    let phi: Arc<dyn Kernel> = Arc::new(SuitableCutoff::new(dim)?);
    let f = sample_real(
        |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (x[0] * 2.3).cos() * (-r2 / 2.0).exp() + if x.iter().all(|v| v.abs() < 1.0) { 1.0 } else { 0.0 }
        },
        &grid,
    )?;
    let mut worst = 0.0f64;
    for (i, t) in list(cfg, "cutoff_t")?.into_iter().enumerate() {
        let key = format!("cutoff/{i:02}");
        let r = (|| {
            let sym = frequency_cutoff(phi.clone(), t)?;
            let m = mollify(&f, phi.as_ref(), t)?.function;
            let scale = m.sup_norm();
            let fast = apply(&sym, &f)?.max_abs_diff(&m)? / scale;
            let quad = apply_quadrature(&sym, &f)?.max_abs_diff(&m)? / scale;
            Ok(Case::new(key.as_str()).set("t", t).set("fft_path", fast).set("quadrature_path", quad))
        })();
        if let Ok(c) = &r {
            worst = worst.max(c.number("fft_path").unwrap_or(0.0)).max(c.number("quadrature_path").unwrap_or(0.0));
        }
        report.record(&key, r);
    }
    report.checks.push(Check::new(
        "cutoff_identity",
        "max |apply(freqcutoff) - mollify| / ||mollify||_inf",
        worst,
        Relation::AtMost,
        cfg.tolerance("cutoff_identity"),
        tol(cfg, "cutoff_identity"),
    ));
    Ok(report)
}

pub fn hardy_inequality(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let dual = s.grid.dual();
    let freq = enumerate_dyadic_cubes(&dual, integer(cfg, "freq_j_min")?, integer(cfg, "freq_j_max")?)?;
    let factor = number(cfg, "dilation")?;
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let results: Vec<(String, Result<Case>)> = atoms
        .par_iter()
        .map(|(k, a)| {
            let r = (|| {
                let h = hardy_inequality_check(&a.data, &p, &s.phi, &s.ladder, &s.family, &freq)?;
                let d = dilate_atom(a, factor)?;
                let hd = hardy_inequality_check(&d.data, &p, &s.phi, &s.ladder, &s.family, &freq)?;
                Ok(Case::new(k.as_str())
                    .set("side", a.cube.side)
                    .set("numerator", h.numerator)
                    .set("denominator", h.denominator)
                    .set("ratio", h.ratio)
                    .set("dilated_ratio", hd.ratio)
                    .set("dilation_change", (hd.ratio / h.ratio - 1.0).abs()))
            })();
            (k.clone(), r)
        })
        .collect();
    for (k, r) in results {
        report.record(&k, r);
    }
    let ratios: Vec<f64> = report.cases.iter().filter_map(|c| c.number("ratio")).collect();
    let changes: Vec<f64> = report.cases.iter().filter_map(|c| c.number("dilation_change")).collect();
    let band = if ratios.is_empty() { f64::INFINITY } else { max_of(ratios.iter().copied()) / min_of(ratios.iter().copied()) };
    report.checks.push(Check::new("band", "max/min of the Hardy ratio over the corpus", band, Relation::AtMost, cfg.tolerance("band"), tol(cfg, "band")));
    report.checks.push(Check::new(
        "dilation",
        "max relative change of the ratio under dilation",
        max_of(changes.iter().copied()),
        Relation::AtMost,
        cfg.tolerance("dilation"),
        tol(cfg, "dilation"),
    ));
    let pts = |name: &str| -> Vec<(f64, f64)> { report.cases.iter().filter_map(|c| Some((c.number("side")?, c.number(name)?))).collect() };
    let plot = Plot::loglog("hardy-ratio.svg", "Hardy inequality ratio", "side", "ratio")
        .with(Series::new("atom", pts("ratio"), Style::Markers))
        .with(Series::new(format!("dilated by {factor}"), pts("dilated_ratio"), Style::Markers));
    report.plots.push(plot);
    Ok(report)
}

pub fn global_local_gap(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let psi = MomentUnit::new(s.grid.dim(), number(cfg, "psi_radius")?)?;
    let refine = count(cfg, "refine")?;
    if !refine.is_power_of_two() {
        return Err(Error::param("refine", format!("must be a power of two, got {refine}")));
    }
    let fine = Grid::new(s.grid.dim(), s.grid.half_width(), s.grid.samples() * refine)?;
    let fine_family = cfg.family(&fine)?;
    let mut report = Report::default();
    let mut plot = Plot::loglog("gap-ratio.svg", "||f - psi * f||_HM / ||f||_hM", "side", "ratio");
    let mut maxima = Vec::new();
    for (label, grid, family) in [("coarse", &s.grid, &s.family), ("fine", &fine, &fine_family)] {
        let atoms = corpus_atoms(cfg, grid, &p, &mut report);
        let results: Vec<(String, Result<Case>)> = atoms
            .par_iter()
            .map(|(k, a)| {
                let key = format!("{label}/{k}");
                let r = gap_ratio(&a.data, &psi, &s.phi, &p, &s.ladder, family)
                    .map(|g| Case::new(key.as_str()).set("samples", grid.samples()).set("side", a.cube.side).set("ratio", g));
                (key, r)
            })
            .collect();
        let mut pts = Vec::new();
        for (k, r) in results {
            if let Ok(c) = &r {
                pts.push((c.number("side").unwrap_or(f64::NAN), c.number("ratio").unwrap_or(f64::NAN)));
            }
            report.record(&k, r);
        }
        maxima.push(max_of(pts.iter().map(|p| p.1)));
        plot.push(Series::new(format!("N = {}", grid.samples()), pts, Style::Both));
    }
    report.checks.push(Check::new("gap_bound", "max gap ratio over the corpus", maxima[0], Relation::AtMost, cfg.tolerance("gap_bound"), tol(cfg, "gap_bound")));
    report.checks.push(Check::new(
        "refinement",
        "relative change of the max ratio under grid refinement",
        (maxima[0] / maxima[1] - 1.0).abs(),
        Relation::AtMost,
        cfg.tolerance("refinement"),
        tol(cfg, "refinement"),
    ));
    report.plots.push(plot);
    Ok(report)
}

pub fn regularization(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let p = cfg.morrey_params()?;
    let gamma = number(cfg, "gamma")?;
    let target = MorreyParams::new(p.q() * gamma / p.lambda(), gamma)?;
    let ts = list(cfg, "t")?;
    let mut report = Report::default();
    let atoms = corpus_atoms(cfg, &s.grid, &p, &mut report);
    let results: Vec<(String, Result<crate::maximal::RegularizationReport>, f64)> = atoms
        .par_iter()
        .map(|(k, a)| (k.clone(), regularization_check(&a.data, &p, &target, &s.phi, &ts, &s.ladder, &s.family), a.cube.side))
        .collect();
    let mut plot = Plot::loglog("regularization.svg", "Normalized ||phi_t * f|| / (t^e ||f||_HM)", "t", "ratio");
    let mut worst = 0.0f64;
    for (k, r, side) in results {
        match r {
            Ok(rep) => {
                worst = worst.max(rep.max_ratio);
                for (i, row) in rep.rows.iter().enumerate() {
                    report.cases.push(
                        Case::new(format!("{k}/{i:02}")).set("side", side).set("t", row.t).set("value", row.value).set("ratio", row.ratio),
                    );
                }
                report.cases.push(
                    Case::new(format!("{k}/fit"))
                        .set("side", side)
                        .set("hm", rep.hm_norm)
                        .set("exponent", rep.exponent)
                        .set("slope", rep.slope.as_ref().map_or(f64::NAN, |f| f.slope))
                        .set("max_ratio", rep.max_ratio),
                );
                plot.push(Series::new(format!("side {side}"), rep.rows.iter().map(|r| (r.t, r.ratio)).collect(), Style::Both));
            }
            Err(e) => report.fail(&k, e),
        }
    }
    report.checks.push(Check::new(
        "ratio_bound",
        "max normalized ratio over atoms and scales",
        if report.failures.is_empty() { worst } else { f64::INFINITY },
        Relation::AtMost,
        cfg.tolerance("ratio_bound"),
        tol(cfg, "ratio_bound"),
    ));
    report.plots.push(plot);
    Ok(report)
}
