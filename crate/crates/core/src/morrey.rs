//! Morrey norms of grid functions and the Morrey-type coefficient norm used
//! for atomic decompositions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, CubeFamily, DyadicCube, Grid, GridFunction, PrefixSum};

/// Exponent pair `(q, lambda)` with `0 < q <= lambda < inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    q: f64,
    lambda: f64,
}

impl MorreyParams {
    pub fn new(q: f64, lambda: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::param("q", format!("must be positive, got {q}")));
        }
        if !(lambda.is_finite() && lambda >= q) {
            return Err(Error::param("lambda", format!("need q <= lambda < inf, got q={q}, lambda={lambda}")));
        }
        Ok(Self { q, lambda })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Moment order `floor(n (1/q - 1))`, or `-1` when no moments are required.
    pub fn moment_order(&self, n: usize) -> i32 {
        floor_exponent(n as f64 * (1.0 / self.q - 1.0))
    }

    /// `floor(n (1/lambda - 1))`: moments forced by Fourier decay at the origin.
    pub fn decay_moment_order(&self, n: usize) -> i32 {
        floor_exponent(n as f64 * (1.0 / self.lambda - 1.0))
    }
}

fn floor_exponent(v: f64) -> i32 {
    ((v + 1e-9).floor() as i32).max(-1)
}

/// `max_Q |Q|^{1/lambda - 1/q} (int_Q |f|^q)^{1/q}` over the family.
pub fn morrey_norm(f: &GridFunction, p: &MorreyParams, family: &CubeFamily) -> Result<f64> {
    Ok(morrey_norm_with_argmax(f, p, family)?.0)
}

/// [`morrey_norm`] together with the index of a maximising cube.
pub fn morrey_norm_with_argmax(f: &GridFunction, p: &MorreyParams, family: &CubeFamily) -> Result<(f64, usize)> {
    let weights: Vec<f64> = f.values().iter().map(|v| v.norm().powf(p.q)).collect();
    morrey_norm_of_weights(f.grid(), &weights, p, family)
}

/// Morrey norm of a nonnegative real sample vector (e.g. a maximal function).
pub(crate) fn morrey_norm_real(
    grid: &Grid,
    values: &[f64],
    p: &MorreyParams,
    family: &CubeFamily,
) -> Result<f64> {
    let weights: Vec<f64> = values.iter().map(|v| v.abs().powf(p.q)).collect();
    Ok(morrey_norm_of_weights(grid, &weights, p, family)?.0)
}

fn morrey_norm_of_weights(
    grid: &Grid,
    weights: &[f64],
    p: &MorreyParams,
    family: &CubeFamily,
) -> Result<(f64, usize)> {
    if family.is_empty() {
        return Err(Error::EmptyFamily("morrey_norm".into()));
    }
    if family.dim() != grid.dim() {
        return Err(Error::GridMismatch("cube family dimension differs from grid".into()));
    }
    let table = PrefixSum::new(grid, weights);
    let exponent = 1.0 / p.lambda - 1.0 / p.q;
    let best = family
        .cubes()
        .par_iter()
        .enumerate()
        .map(|(i, cube)| {
            let integral = table.cube_integral(cube);
            (cube.volume().powf(exponent) * integral.powf(1.0 / p.q), i)
        })
        .reduce(|| (0.0, usize::MAX), pick_max);
    Ok((best.0, if best.1 == usize::MAX { 0 } else { best.1 }))
}

fn pick_max(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    // ties resolve to the lower index so results do not depend on scheduling
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Finitely supported coefficients `s_Q` indexed by dyadic cubes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    entries: BTreeMap<DyadicCube, Complex64>,
}

impl CoefficientField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cube: DyadicCube, value: Complex64) {
        if value == Complex64::new(0.0, 0.0) {
            self.entries.remove(&cube);
        } else {
            self.entries.insert(cube, value);
        }
    }

    pub fn get(&self, cube: &DyadicCube) -> Complex64 {
        self.entries.get(cube).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicCube, &Complex64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::new();
        for (k, v) in &self.entries {
            out.insert(k.clone(), v * c);
        }
        out
    }
}

impl FromIterator<(DyadicCube, Complex64)> for CoefficientField {
    fn from_iter<I: IntoIterator<Item = (DyadicCube, Complex64)>>(iter: I) -> Self {
        let mut out = Self::new();
        for (k, v) in iter {
            out.insert(k, v);
        }
        out
    }
}

/// `sup_J ( |J|^{q/lambda - 1} sum_{Q in supp s, Q subset J} (|Q|^{1/q - 1/lambda} |s_Q|)^q )^{1/q}`
/// over the dyadic cubes `J` of `family`.
pub fn coefficient_norm(s: &CoefficientField, p: &MorreyParams, family: &CubeFamily) -> Result<f64> {
    let js = family
        .dyadic()
        .ok_or_else(|| Error::param("family", "coefficient_norm needs a dyadic family"))?;
    let q = p.q;
    let terms: Vec<(&DyadicCube, f64)> = s
        .iter()
        .map(|(cube, v)| {
            let vol = cube.side().powi(cube.dim() as i32);
            (cube, (vol.powf(1.0 / q - 1.0 / p.lambda) * v.norm()).powf(q))
        })
        .collect();
    for (cube, _) in &terms {
        if !js.iter().any(|j| j.contains(cube)) {
            return Err(Error::UncoveredCoefficient(cube.to_string()));
        }
    }
    let best = js
        .par_iter()
        .map(|j| {
            let sum: f64 = terms.iter().filter(|(c, _)| j.contains(c)).map(|(_, t)| t).sum();
            let vol = j.side().powi(j.dim() as i32);
            (vol.powf(q / p.lambda - 1.0) * sum).powf(1.0 / q)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Outcome of comparing two Morrey norms with `q2/lambda2 = q1/lambda1`.
///
/// `ratio` is `||f||_{p2} / ||f||_{p1}`. It is not scale invariant when
/// `lambda2 != lambda1`, so it is reported rather than bounded. `power_ratio`
/// compares `|| |f|^r ||_{p2}` with `||f||_{p1}^r`, `r = q1/q2`, which agree
/// cube by cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub smaller_norm: f64,
    pub larger_norm: f64,
    pub ratio: f64,
    pub power_ratio: f64,
}

/// `||f||_{M^{lambda2}_{q2}} / ||f||_{M^{lambda1}_{q1}}` for `q2 <= q1`, `q2/lambda2 = q1/lambda1`.
pub fn check_embedding(
    f: &GridFunction,
    p1: &MorreyParams,
    p2: &MorreyParams,
    family: &CubeFamily,
) -> Result<EmbeddingReport> {
    if p2.q > p1.q {
        return Err(Error::param("p2", "need q2 <= q1"));
    }
    if ((p2.q / p2.lambda) - (p1.q / p1.lambda)).abs() > 1e-12 {
        return Err(Error::param("p2", "need q2/lambda2 = q1/lambda1"));
    }
    let smaller = morrey_norm(f, p2, family)?;
    let larger = morrey_norm(f, p1, family)?;
    let r = p1.q / p2.q;
    let powered: Vec<f64> = f.values().iter().map(|v| v.norm().powf(r)).collect();
    let powered_norm = morrey_norm_real(f.grid(), &powered, p2, family)?;
    Ok(EmbeddingReport {
        smaller_norm: smaller,
        larger_norm: larger,
        ratio: safe_ratio(smaller, larger),
        power_ratio: safe_ratio(powered_norm, larger.powf(r)),
    })
}

fn safe_ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// `|Q|^{1/lambda - 1/q} (int_Q |f|^q)^{1/q}` for a single cube.
pub fn morrey_cube_value(f: &GridFunction, p: &MorreyParams, cube: &Cube) -> f64 {
    let weights: Vec<f64> = f.values().iter().map(|v| v.norm().powf(p.q)).collect();
    let integral = crate::grid::integrate_real(f.grid(), &weights, cube);
    cube.volume().powf(1.0 / p.lambda - 1.0 / p.q) * integral.powf(1.0 / p.q)
}
