use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Cube, GridFunction};

const MAX_CONDITION: f64 = 1e12;
const MIN_SAMPLES_PER_AXIS: usize = 8;

/// Multi-indices with `|alpha| <= order`, graded, first axis major.
pub fn multi_indices(dim: usize, order: i32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    if order < 0 {
        return out;
    }
    for total in 0..=order as u32 {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// Smooth bump on `(-1/2, 1/2)` with value 1 at the origin.
pub fn bump_weight(u: f64) -> f64 {
    let s = 4.0 * u * u;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s)).exp()
    }
}

fn monomial(u: &[f64; 2], alpha: &[u32; 2], dim: usize) -> f64 {
    (0..dim).map(|a| u[a].powi(alpha[a] as i32)).product()
}

/// Discrete moments `h^n sum (x - c)^alpha f(x)` over the whole grid, where
/// `c` is the centre of `cube`, for every `|alpha| <= order`.
pub fn discrete_moments(f: &GridFunction, cube: &Cube, order: i32) -> Vec<([u32; 2], Complex64)> {
    let grid = f.grid();
    let dim = grid.dim();
    let alphas = multi_indices(dim, order);
    let mut acc = vec![Complex64::new(0.0, 0.0); alphas.len()];
    for (idx, v) in f.values().iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let p = grid.point(idx);
        let d = [p[0] - cube.center[0], if dim == 2 { p[1] - cube.center[1] } else { 0.0 }];
        for (slot, alpha) in acc.iter_mut().zip(&alphas) {
            *slot += v * monomial(&d, alpha, dim);
        }
    }
    let w = grid.cell_volume();
    alphas.into_iter().zip(acc.into_iter().map(|m| m * w)).collect()
}

/// Legendre polynomial `P_k(s)`.
fn legendre(k: u32, s: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, s);
    if k == 0 {
        return p0;
    }
    for j in 1..k {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * s * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn legendre_product(u: &[f64; 2], alpha: &[u32; 2], dim: usize) -> f64 {
    (0..dim).map(|a| legendre(alpha[a], 2.0 * u[a])).product()
}

/// Removes from `f` its component along `{u^alpha w(u) : |alpha| <= order}`,
/// `u = (x - c)/l`, chosen so that every discrete moment of order `<= order`
/// of the result vanishes. The result stays supported in `cube`.
pub fn project_moments(f: &GridFunction, cube: &Cube, order: i32) -> Result<GridFunction> {
    if cube.dim() != f.grid().dim() {
        return Err(Error::GridMismatch("cube dimension differs from grid".into()));
    }
    let sup = f.sup_norm();
    let leak = f.sup_outside(cube);
    if leak > 1e-12 * sup {
        return Err(Error::NotSupportedInCube { leak: leak / sup });
    }
    if order < 0 || sup == 0.0 {
        return Ok(f.clone());
    }
    match_moments(f, cube, order, 0.0)
}

/// Adds a combination of weighted polynomials supported in `cube` so that the
/// moments of `f` over the whole grid become those of `mass` times a point
/// mass at the centre of `cube`.
pub(crate) fn match_moments(f: &GridFunction, cube: &Cube, order: i32, mass: f64) -> Result<GridFunction> {
    let grid = *f.grid();
    let dim = grid.dim();
    if cube.dim() != dim {
        return Err(Error::GridMismatch("cube dimension differs from grid".into()));
    }
    if order < 0 {
        return Ok(f.clone());
    }
    let ranges = cube.index_ranges(&grid);
    if (0..dim).any(|a| ranges[a].1 - ranges[a].0 < MIN_SAMPLES_PER_AXIS) {
        return Err(Error::IllConditioned(format!(
            "cube of side {} holds fewer than {MIN_SAMPLES_PER_AXIS} samples per axis",
            cube.side
        )));
    }
    // Legendre polynomials in u span the same space as the monomials and keep
    // the Gram matrix well conditioned at higher orders.
    let alphas = multi_indices(dim, order);
    let m = alphas.len();
    let mut idxs = Vec::new();
    cube.for_each_index(&grid, |i| idxs.push(i));
    let locals: Vec<([f64; 2], f64)> = idxs
        .iter()
        .map(|&i| {
            let p = grid.point(i);
            let mut u = [0.0; 2];
            let mut w = 1.0;
            for a in 0..dim {
                u[a] = (p[a] - cube.center[a]) / cube.side;
                w *= bump_weight(u[a]);
            }
            (u, w)
        })
        .collect();
    let cell = grid.cell_volume();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs_re = DVector::<f64>::zeros(m);
    let mut rhs_im = DVector::<f64>::zeros(m);
    let mut basis = vec![0.0; m];
    for (u, w) in &locals {
        if *w == 0.0 {
            continue;
        }
        for (slot, alpha) in basis.iter_mut().zip(&alphas) {
            *slot = legendre_product(u, alpha, dim);
        }
        for a in 0..m {
            for b in a..m {
                gram[(a, b)] += basis[a] * basis[b] * w * cell;
            }
        }
    }
    for (idx, v) in f.values().iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let p = grid.point(idx);
        let mut u = [0.0; 2];
        for a in 0..dim {
            u[a] = (p[a] - cube.center[a]) / cube.side;
        }
        for (a, alpha) in alphas.iter().enumerate() {
            let b = legendre_product(&u, alpha, dim) * cell;
            rhs_re[a] += b * v.re;
            rhs_im[a] += b * v.im;
        }
    }
    if mass != 0.0 {
        let origin = [0.0; 2];
        for (a, alpha) in alphas.iter().enumerate() {
            rhs_re[a] -= mass * legendre_product(&origin, alpha, dim);
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let svd = gram.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MAX_CONDITION {
        return Err(Error::IllConditioned(format!("moment Gram condition {:.3e}", smax / smin)));
    }
    let lu = gram.lu();
    let c_re = lu.solve(&rhs_re).ok_or_else(|| Error::IllConditioned("singular moment system".into()))?;
    let c_im = lu.solve(&rhs_im).ok_or_else(|| Error::IllConditioned("singular moment system".into()))?;
    let mut values = f.values().to_vec();
    for (k, (u, w)) in locals.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let mut corr = Complex64::new(0.0, 0.0);
        for (a, alpha) in alphas.iter().enumerate() {
            let p = legendre_product(u, alpha, dim) * w;
            corr += Complex64::new(c_re[a] * p, c_im[a] * p);
        }
        values[idxs[k]] -= corr;
    }
    GridFunction::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_real, Grid};

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.3), 1.0);
        assert_eq!(legendre(1, 0.3), 0.3);
        assert!((legendre(2, 0.3) - (3.0 * 0.09 - 1.0) / 2.0).abs() < 1e-15);
        assert!((legendre(3, 0.5) - (5.0 * 0.125 - 1.5) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn indices_are_graded() {
        assert_eq!(multi_indices(1, 2), vec![[0, 0], [1, 0], [2, 0]]);
        assert_eq!(multi_indices(2, 1), vec![[0, 0], [1, 0], [0, 1]]);
        assert!(multi_indices(2, -1).is_empty());
        assert_eq!(multi_indices(2, 3).len(), 10);
    }

    #[test]
    fn weight_projects_to_zero() {
        let g = Grid::new(1, 2.0, 256).unwrap();
        let cube = Cube::new(vec![0.5], 1.0).unwrap();
        let w = sample_real(|x| bump_weight(x[0] - 0.5), &g).unwrap();
        let out = project_moments(&w, &cube, 0).unwrap();
        assert!(out.sup_norm() < 1e-14);
    }

    #[test]
    fn idempotent_and_moments_vanish() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, if dim == 1 { 256 } else { 64 }).unwrap();
            let cube = Cube::from_corner(&vec![0.0; dim], 1.0).unwrap();
            let f = sample_real(
                |x| {
                    if cube.contains_point(x) {
                        1.0 + x[0] * 3.0 - x.iter().map(|v| v.sin()).sum::<f64>()
                    } else {
                        0.0
                    }
                },
                &g,
            )
            .unwrap();
            let a = project_moments(&f, &cube, 2).unwrap();
            for (alpha, m) in discrete_moments(&a, &cube, 2) {
                let scale = a.sup_norm() * cube.side.powi((alpha[0] + alpha[1]) as i32 + dim as i32);
                assert!(m.norm() <= 1e-10 * scale, "dim {dim} alpha {alpha:?}: {}", m.norm());
            }
            assert_eq!(a.sup_outside(&cube), 0.0);
            let b = project_moments(&a, &cube, 2).unwrap();
            assert!(b.max_abs_diff(&a).unwrap() <= 1e-10 * a.sup_norm());
        }
    }

    #[test]
    fn rejects_tiny_cube_and_leaks() {
        let g = Grid::new(1, 2.0, 64).unwrap();
        let tiny = Cube::new(vec![0.0], 0.1).unwrap();
        let f = sample_real(|x| if tiny.contains_point(x) { 1.0 } else { 0.0 }, &g).unwrap();
        assert!(matches!(project_moments(&f, &tiny, 1), Err(Error::IllConditioned(_))));
        let spread = sample_real(|_| 1.0, &g).unwrap();
        assert!(matches!(project_moments(&spread, &tiny, 1), Err(Error::NotSupportedInCube { .. })));
    }
}
