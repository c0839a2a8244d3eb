use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::project::{bump_weight, project_moments};
use super::{Atom, AtomKind, AtomRecipe};
use crate::error::{Error, Result};
use crate::grid::{Cube, Grid, GridFunction};
use crate::kernels::{bspline, sinc};
use crate::morrey::MorreyParams;

const MAX_RESEEDS: u64 = 10;
const PROFILE_MODES: usize = 6;

/// Random trigonometric profile in local coordinates `u in [-1/2, 1/2)^n`.
struct Profile {
    modes: Vec<(f64, [f64; 2], f64)>,
}

impl Profile {
    fn new(seed: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..PROFILE_MODES)
            .map(|_| {
                let amp = rng.gen_range(-1.0..1.0);
                let mut k = [0.0; 2];
                for slot in k.iter_mut().take(dim) {
                    *slot = rng.gen_range(0..4) as f64;
                }
                (amp, k, rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        Self { modes }
    }

    fn eval(&self, u: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(a, k, phase)| {
                let dot: f64 = u.iter().zip(k).map(|(x, y)| x * y).sum();
                a * (2.0 * PI * dot + phase).cos()
            })
            .sum()
    }
}

fn check_inside(grid: &Grid, cube: &Cube) -> Result<()> {
    if cube.dim() != grid.dim() {
        return Err(Error::GridMismatch("cube dimension differs from grid".into()));
    }
    if !grid.box_cube().contains_cube(cube) {
        return Err(Error::SupportOverflow(format!(
            "cube centred at {:?} with side {} leaves [-{L}, {L})",
            cube.center,
            cube.side,
            L = grid.half_width()
        )));
    }
    Ok(())
}

fn sample_in_cube<F: Fn(&[f64]) -> f64>(grid: &Grid, cube: &Cube, f: F) -> GridFunction {
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let dim = grid.dim();
    cube.for_each_index(grid, |i| {
        let p = grid.point(i);
        let mut u = [0.0; 2];
        for a in 0..dim {
            u[a] = (p[a] - cube.center[a]) / cube.side;
        }
        values[i] = Complex64::new(f(&u[..dim]), 0.0);
    });
    GridFunction::from_values_unchecked(*grid, values)
}

/// Seeded smooth atom on `cube`: random profile times a bump, moments up to
/// `N_q` removed, sup normalised to `|Q|^{-1/lambda}`.
pub fn make_smooth_atom(grid: &Grid, p: &MorreyParams, cube: &Cube, seed: u64) -> Result<Atom> {
    if p.q() > 1.0 {
        return Err(Error::param("q", "smooth atoms need q <= 1"));
    }
    check_inside(grid, cube)?;
    let order = p.moment_order(grid.dim());
    for attempt in 0..MAX_RESEEDS {
        let profile = Profile::new(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)), grid.dim());
        let raw = sample_in_cube(grid, cube, |u| profile.eval(u) * u.iter().map(|v| bump_weight(*v)).product::<f64>());
        let before = raw.sup_norm();
        let projected = project_moments(&raw, cube, order)?;
        let sup = projected.sup_norm();
        if before == 0.0 || sup < 1e-8 * before {
            continue;
        }
        let bound = cube.volume().powf(-1.0 / p.lambda());
        return Ok(Atom {
            kind: AtomKind::Smooth,
            cube: cube.clone(),
            data: projected.scale_real(bound / sup),
            moment_order: order,
            params: *p,
            recipe: Some(AtomRecipe::Smooth { seed }),
        });
    }
    Err(Error::Degenerate(format!("profile vanished after projection for {MAX_RESEEDS} seeds")))
}

/// Seeded bounded block on a cube of side `>= 1` with nonzero mean and no moment conditions.
pub fn make_rough_block(grid: &Grid, p: &MorreyParams, cube: &Cube, seed: u64) -> Result<Atom> {
    if cube.side < 1.0 {
        return Err(Error::param("cube", format!("rough blocks need side >= 1, got {}", cube.side)));
    }
    check_inside(grid, cube)?;
    let profile = Profile::new(seed, grid.dim());
    let raw = sample_in_cube(grid, cube, |u| profile.eval(u));
    let span = raw.sup_norm().max(f64::MIN_POSITIVE);
    let shaped = sample_in_cube(grid, cube, |u| 1.0 + 0.5 * profile.eval(u) / span);
    let bound = cube.volume().powf(-1.0 / p.lambda());
    let sup = shaped.sup_norm();
    Ok(Atom {
        kind: AtomKind::Rough,
        cube: cube.clone(),
        data: shaped.scale_real(bound / sup),
        moment_order: -1,
        params: *p,
        recipe: Some(AtomRecipe::Rough { seed }),
    })
}

/// Order of the B-spline used for the transverse profile of two-dimensional HKP atoms.
pub const HKP_PROFILE_ORDER: usize = 8;
const HKP_MAX_K: usize = 12;

/// Half-width `1 + k(k+1)/2` of the support of `alpha_k`.
pub fn hkp_support_half_width(k: usize) -> f64 {
    1.0 + (k * (k + 1) / 2) as f64
}

/// `sign(x)` on `[-1, 1)`, right-continuous, zero elsewhere.
fn signed_unit(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        1.0
    } else if (-1.0..0.0).contains(&x) {
        -1.0
    } else {
        0.0
    }
}

/// `alpha_k(x) = (-1/2)^k sum_sigma prod_j(-sigma_j) s(x - sum_j sigma_j j)` over
/// `sigma in {-1, 1}^k`, the inverse transform of
/// `(1 - cos 2 pi xi)/(i pi xi) (-i)^k prod_j sin(2 pi j xi)`.
pub fn hkp_alpha(k: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for mask in 0u32..(1u32 << k) {
        let mut coeff = 1.0;
        let mut shift = 0.0;
        for j in 1..=k {
            let sigma = if mask & (1 << (j - 1)) != 0 { 1.0 } else { -1.0 };
            coeff *= -sigma;
            shift += sigma * j as f64;
        }
        acc += coeff * signed_unit(x - shift);
    }
    (-0.5f64).powi(k as i32) * acc
}

/// Transverse profile with sup 1, supported in `|x'| < 1 + k(k+1)/2`.
pub fn hkp_profile(k: usize, x: f64) -> f64 {
    let a = HKP_PROFILE_ORDER as f64 / (2.0 * hkp_support_half_width(k));
    bspline(HKP_PROFILE_ORDER, a * x) / bspline(HKP_PROFILE_ORDER, 0.0)
}

/// Fourier transform of [`hkp_profile`].
pub fn hkp_profile_hat(k: usize, xi: f64) -> f64 {
    let a = HKP_PROFILE_ORDER as f64 / (2.0 * hkp_support_half_width(k));
    sinc(xi / a).powi(HKP_PROFILE_ORDER as i32) / (a * bspline(HKP_PROFILE_ORDER, 0.0))
}

/// Amplitude `|Q|^{-1/lambda}` of the undilated atom on its cube of side `2(1 + k(k+1)/2)`.
pub fn hkp_amplitude(k: usize, dim: usize, lambda: f64) -> f64 {
    (2.0 * hkp_support_half_width(k)).powi(dim as i32).powf(-1.0 / lambda)
}

pub fn make_hkp_atom(grid: &Grid, k: usize, p: &MorreyParams) -> Result<Atom> {
    make_hkp_atom_scaled(grid, k, p, 1.0)
}

fn is_power_of_two(v: f64) -> bool {
    v > 0.0 && v.is_finite() && v.log2().fract() == 0.0
}

/// `a_eps(x) = eps^{-n/lambda} a(x/eps)` with `a(x) = A psi(x') alpha_k(x_n)` and
/// `A = |Q|^{-1/lambda}`; the last axis carries `alpha_k`.
pub fn make_hkp_atom_scaled(grid: &Grid, k: usize, p: &MorreyParams, eps: f64) -> Result<Atom> {
    if k == 0 || k > HKP_MAX_K {
        return Err(Error::param("k", format!("moment count must lie in 1..={HKP_MAX_K}, got {k}")));
    }
    if !is_power_of_two(eps) {
        return Err(Error::param("eps", format!("dilation must be a power of two, got {eps}")));
    }
    let h = grid.spacing();
    if eps < h || (eps / h).fract() != 0.0 || (grid.half_width() / h).fract() != 0.0 {
        return Err(Error::param("eps", "jumps of alpha_k must fall on sample points (eps/h and L/h integers)"));
    }
    let dim = grid.dim();
    let c = hkp_support_half_width(k) * eps;
    let cube = Cube::new(vec![0.0; dim], 2.0 * c)?;
    if c > grid.half_width() {
        return Err(Error::SupportOverflow(format!("support half-width {c} exceeds L = {}", grid.half_width())));
    }
    let amp = eps.powf(-(dim as f64) / p.lambda()) * hkp_amplitude(k, dim, p.lambda());
    let values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let v = if dim == 1 {
                hkp_alpha(k, x[0] / eps)
            } else {
                hkp_profile(k, x[0] / eps) * hkp_alpha(k, x[1] / eps)
            };
            Complex64::new(amp * v, 0.0)
        })
        .collect();
    Ok(Atom {
        kind: AtomKind::Hkp,
        cube,
        data: GridFunction::from_values(*grid, values)?,
        moment_order: k as i32 - 1,
        params: *p,
        recipe: Some(AtomRecipe::Hkp { k, eps }),
    })
}

fn interpolate(f: &GridFunction, x: &[f64]) -> Complex64 {
    let g = f.grid();
    let h = g.spacing();
    let l = g.half_width();
    let dim = g.dim();
    let mut base = [0usize; 2];
    let mut frac = [0.0; 2];
    for a in 0..dim {
        let s = (x[a] + l) / h;
        if s < 0.0 || s > (g.samples() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = s.floor() as usize;
        base[a] = i.min(g.samples() - 1);
        frac[a] = s - i as f64;
    }
    let corners = 1usize << dim;
    let mut acc = Complex64::new(0.0, 0.0);
    for corner in 0..corners {
        let mut w = 1.0;
        let mut ix = [0usize; 2];
        for a in 0..dim {
            let up = corner & (1 << a) != 0;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            ix[a] = if up { (base[a] + 1).min(g.samples() - 1) } else { base[a] };
        }
        if w != 0.0 {
            acc += f.value(g.flat_index(ix)) * w;
        }
    }
    acc
}

/// `a_eps(x) = eps^{-n/lambda} a(x/eps)` for a power of two `eps`. Atoms with a
/// recipe are rebuilt from it; others are resampled (exact for `eps <= 1`,
/// multilinear with moment re-projection otherwise).
pub fn dilate_atom(a: &Atom, eps: f64) -> Result<Atom> {
    if !is_power_of_two(eps) {
        return Err(Error::param("eps", format!("dilation must be a power of two, got {eps}")));
    }
    if eps == 1.0 {
        return Ok(a.clone());
    }
    let grid = *a.data.grid();
    let cube = a.cube.scale_about_origin(eps);
    if !grid.box_cube().contains_cube(&cube) {
        return Err(Error::SupportOverflow(format!("dilated cube of side {} leaves the box", cube.side)));
    }
    match &a.recipe {
        Some(AtomRecipe::Smooth { seed }) => make_smooth_atom(&grid, &a.params, &cube, *seed),
        Some(AtomRecipe::Rough { seed }) => make_rough_block(&grid, &a.params, &cube, *seed),
        Some(AtomRecipe::Hkp { k, eps: e0 }) => make_hkp_atom_scaled(&grid, *k, &a.params, e0 * eps),
        None => {
            let dim = grid.dim();
            let amp = eps.powf(-(dim as f64) / a.params.lambda());
            let values: Vec<Complex64> = (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    if !cube.contains_point(&x[..dim]) {
                        return Complex64::new(0.0, 0.0);
                    }
                    let y = [x[0] / eps, x[1] / eps];
                    interpolate(&a.data, &y[..dim]) * amp
                })
                .collect();
            let mut data = GridFunction::from_values(grid, values)?;
            if eps > 1.0 && a.moment_order >= 0 {
                data = project_moments(&data, &cube, a.moment_order)?;
            }
            let bound = cube.volume().powf(-1.0 / a.params.lambda());
            let sup = data.sup_norm();
            if sup > bound {
                data = data.scale_real(bound / sup);
            }
            Ok(Atom {
                kind: a.kind,
                cube,
                data,
                moment_order: a.moment_order,
                params: a.params,
                recipe: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::project::discrete_moments;

    #[test]
    fn alpha_one_is_explicit() {
        // alpha_1 = (1/2)(s(x-1) - s(x+1))
        for x in [-1.75, -1.25, -0.5, 0.25, 0.75, 1.5, 2.5] {
            let want = 0.5 * (signed_unit(x - 1.0) - signed_unit(x + 1.0));
            assert_eq!(hkp_alpha(1, x), want);
        }
        assert_eq!(hkp_alpha(1, 2.0), 0.0);
        assert_eq!(hkp_alpha(3, 7.0), 0.0);
        assert!(hkp_alpha(3, -6.999) != 0.0 || hkp_alpha(3, 6.5) != 0.0);
    }

    #[test]
    fn alpha_moments_and_bound() {
        for k in 1..=4 {
            let c = hkp_support_half_width(k);
            let h = 1.0 / 64.0;
            let m = (2.0 * c / h) as i64;
            let xs: Vec<f64> = (0..m).map(|i| -c + i as f64 * h).collect();
            for order in 0..=k {
                let mom: f64 = xs.iter().map(|x| x.powi(order as i32) * hkp_alpha(k, *x)).sum::<f64>() * h;
                assert!(mom.abs() < 1e-9, "k={k} order={order}: {mom}");
            }
            assert!(xs.iter().all(|x| hkp_alpha(k, *x).abs() <= 1.0));
        }
    }

    #[test]
    fn smooth_atom_normalised_and_moment_free() {
        let g = Grid::new(1, 4.0, 1024).unwrap();
        let p = MorreyParams::new(0.4, 0.8).unwrap();
        let cube = Cube::new(vec![0.3125], 0.5).unwrap();
        let a = make_smooth_atom(&g, &p, &cube, 7).unwrap();
        assert!((a.data.sup_norm() * cube.volume().powf(1.0 / p.lambda()) - 1.0).abs() < 1e-12);
        assert_eq!(a.moment_order, 1);
        for (alpha, m) in discrete_moments(&a.data, &cube, 1) {
            let scale = a.data.sup_norm() * cube.side.powi(alpha[0] as i32 + 1);
            assert!(m.norm() < 1e-10 * scale);
        }
        let again = make_smooth_atom(&g, &p, &cube, 7).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn rough_block_rules() {
        let g = Grid::new(1, 4.0, 256).unwrap();
        let p = MorreyParams::new(0.5, 1.0).unwrap();
        assert!(make_rough_block(&g, &p, &Cube::new(vec![0.0], 0.5).unwrap(), 1).is_err());
        let b = make_rough_block(&g, &p, &Cube::new(vec![0.0], 2.0).unwrap(), 1).unwrap();
        assert!((b.data.sup_norm() - 0.5).abs() < 1e-14);
        let mean: f64 = b.data.values().iter().map(|v| v.re).sum();
        assert!(mean > 0.0);
    }

    #[test]
    fn dilation_rules() {
        let g = Grid::new(1, 8.0, 1024).unwrap();
        let p = MorreyParams::new(0.5, 1.0).unwrap();
        let a = make_hkp_atom(&g, 2, &p).unwrap();
        assert_eq!(dilate_atom(&a, 1.0).unwrap(), a);
        let half = dilate_atom(&a, 0.5).unwrap();
        assert!((half.data.sup_norm() - 2.0 * a.data.sup_norm()).abs() < 1e-12);
        assert!(dilate_atom(&a, 4.0).is_err());
        assert!(dilate_atom(&a, 3.0).is_err());
        // resampling path: halving is exact on the lattice
        let mut bare = a.clone();
        bare.recipe = None;
        let resampled = dilate_atom(&bare, 0.5).unwrap();
        assert!(resampled.data.max_abs_diff(&half.data).unwrap() < 1e-12);
    }
}
