use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{Kernel, MomentUnit, SuitableCutoff};
use crate::spectral::{centered_dft, centered_idft};

use super::project::match_moments;

const MOMENT_UNIT_ORDER: i32 = 8;

/// Samples of the cutoff `phi` with `phi_hat >= 1` on the unit ball and support in `B(0,1)`.
pub fn make_suitable_cutoff(grid: &Grid) -> Result<GridFunction> {
    if grid.half_width() < 1.0 || 2.0 / grid.spacing() < 32.0 {
        return Err(Error::param(
            "grid",
            "the unit ball needs at least 32 samples per axis inside the box",
        ));
    }
    let phi = SuitableCutoff::new(grid.dim())?;
    crate::grid::sample(|x| phi.value(x), grid)
}

/// Samples of `psi` whose transform is the radial plateau of flat radius `r`.
/// The box truncates the slowly decaying tail of `psi`, so a small correction
/// along weighted polynomials near the origin restores discrete moments
/// `int psi = 1` and `int x^alpha psi = 0` for `1 <= |alpha| <= 8`.
pub fn make_moment_unit(grid: &Grid, r: f64) -> Result<GridFunction> {
    let nyquist = 1.0 / (2.0 * grid.spacing());
    if !(r > 0.0 && r < nyquist / 2.0) {
        return Err(Error::param("r", format!("flat radius must lie in (0, {}), got {r}", nyquist / 2.0)));
    }
    let psi = MomentUnit::new(grid.dim(), r)?;
    let dual = grid.dual();
    let dim = grid.dim();
    let spec: Vec<Complex64> = (0..grid.len()).map(|i| psi.spectrum(&dual.point(i)[..dim])).collect();
    let values: Vec<Complex64> = centered_idft(grid, &spec).into_iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let raw = GridFunction::from_values(*grid, values)?;
    // A cube of side 8/r keeps the conversion from scaled to raw moments mild.
    let side = (8.0 / r).min(2.0 * grid.half_width());
    let cube = crate::grid::Cube::new(vec![0.0; dim], side)?;
    match_moments(&raw, &cube, MOMENT_UNIT_ORDER, 1.0)
}

/// The cutoff `phi` and the moment unit `psi` on one grid, with measured certificates.
#[derive(Clone, Debug)]
pub struct CutoffPair {
    pub phi: GridFunction,
    pub psi: GridFunction,
    pub flat_radius: f64,
    /// Minimum of the discrete `phi_hat` over dual-lattice points with `|xi| <= 1`.
    pub phi_min_on_ball: f64,
    /// Maximum of `|psi_hat - 1|` over dual-lattice points with `|xi| <= r`.
    pub psi_flatness: f64,
}

pub fn make_cutoff_pair(grid: &Grid, r: f64) -> Result<CutoffPair> {
    let phi = make_suitable_cutoff(grid)?;
    let psi = make_moment_unit(grid, r)?;
    let dual = grid.dual();
    let dim = grid.dim();
    let radius = |i: usize| dual.point(i)[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
    let phi_hat = centered_dft(&phi);
    let psi_hat = centered_dft(&psi);
    let mut phi_min = f64::INFINITY;
    let mut flat = 0.0f64;
    for i in 0..grid.len() {
        let rho = radius(i);
        if rho <= 1.0 {
            phi_min = phi_min.min(phi_hat[i].re);
        }
        if rho <= r {
            flat = flat.max((psi_hat[i] - 1.0).norm());
        }
    }
    Ok(CutoffPair {
        phi,
        psi,
        flat_radius: r,
        phi_min_on_ball: phi_min,
        psi_flatness: flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::project::discrete_moments;
    use crate::grid::Cube;

    #[test]
    fn cutoff_pair_certificates() {
        // The moment correction costs some flatness; it is small once the
        // box holds many transition wavelengths.
        let g = Grid::new(1, 8.0, 2048).unwrap();
        let pair = make_cutoff_pair(&g, 8.0).unwrap();
        assert!(pair.phi_min_on_ball >= 1.0);
        assert!(pair.psi_flatness < 1e-3, "{}", pair.psi_flatness);
        let sup = pair.phi.sup_norm();
        let ball = Cube::new(vec![0.0], 2.0).unwrap();
        assert!(pair.phi.sup_outside(&ball) <= 1e-12 * sup);
    }

    #[test]
    fn moment_unit_moments() {
        let g = Grid::new(1, 32.0, 2048).unwrap();
        let r = 1.0;
        let psi = make_moment_unit(&g, r).unwrap();
        let origin = Cube::new(vec![0.0], 1.0).unwrap();
        for (alpha, m) in discrete_moments(&psi, &origin, 8) {
            let scaled = m.norm() * r.powi(alpha[0] as i32);
            let want = if alpha[0] == 0 { 1.0 } else { 0.0 };
            assert!((scaled - want).abs() <= 1e-8, "alpha {alpha:?}: {scaled}");
        }
        assert!(make_moment_unit(&g, 100.0).is_err());
    }

    #[test]
    fn cutoff_needs_resolution() {
        assert!(make_suitable_cutoff(&Grid::new(1, 4.0, 32).unwrap()).is_err());
        assert!(make_suitable_cutoff(&Grid::new(2, 2.0, 64).unwrap()).is_ok());
    }
}
