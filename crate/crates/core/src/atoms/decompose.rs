use num_complex::Complex64;

use super::{Atom, AtomKind};
use crate::error::{Error, Result};
use crate::grid::{Cube, CubeFamily, DyadicCube, GridFunction, PrefixSum};
use crate::kernels::Kernel;
use crate::maximal::{hm_local_norm, hm_norm, mollify, mollify_ladder, nontangential_from_layers, ScaleLadder};
use crate::morrey::{CoefficientField, MorreyParams};

/// `psi * f = sum_Q s_Q b_Q` over the unit-cube lattice.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub coefficients: CoefficientField,
    /// Normalised blocks, one per unit cube with a nonzero coefficient.
    pub blocks: Vec<(DyadicCube, Atom)>,
    /// `psi * f`.
    pub smoothed: GridFunction,
}

impl BlockDecomposition {
    /// `sum_Q s_Q b_Q`.
    pub fn reconstruct(&self) -> GridFunction {
        let grid = *self.smoothed.grid();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (cube, block) in &self.blocks {
            let s = self.coefficients.get(cube);
            block.cube.for_each_index(&grid, |i| values[i] += s * block.data.value(i));
        }
        GridFunction::from_values_unchecked(grid, values)
    }
}

/// Splits `psi * f` into blocks `b_Q = (psi * f) 1_Q / s_Q` on unit cubes, with
/// `s_Q = |Q|^{1/lambda - 1/q} ||m*_psi f||_{L^q(Q)}`. The non-tangential aperture
/// is `sqrt(n)`, the diameter of a unit cube, so `|b_Q| <= |Q|^{-1/lambda}`.
pub fn rough_block_decompose(
    f: &GridFunction,
    psi: &dyn Kernel,
    p: &MorreyParams,
    ladder: &ScaleLadder,
) -> Result<BlockDecomposition> {
    let grid = *f.grid();
    if !ladder.is_truncated() || ladder.scales()[0] != 1.0 {
        return Err(Error::param("ladder", "block decomposition needs a truncated ladder starting at t = 1"));
    }
    let l = grid.half_width();
    if l.fract() != 0.0 {
        return Err(Error::param("grid", "unit cubes tile the box only for integer L"));
    }
    let dim = grid.dim();
    let layers = mollify_ladder(f, psi, ladder)?;
    let smoothed = layers[0].clone();
    let mstar = nontangential_from_layers(&layers, ladder.scales(), (dim as f64).sqrt());
    let weights: Vec<f64> = mstar.values().iter().map(|v| v.re.powf(p.q())).collect();
    let table = PrefixSum::new(&grid, &weights);
    let li = l as i64;
    let mut cubes = Vec::new();
    if dim == 1 {
        for k in -li..li {
            cubes.push(DyadicCube::new(0, vec![k]));
        }
    } else {
        for k0 in -li..li {
            for k1 in -li..li {
                cubes.push(DyadicCube::new(0, vec![k0, k1]));
            }
        }
    }
    let mut coefficients = CoefficientField::new();
    let mut blocks = Vec::new();
    for dc in cubes {
        let cube: Cube = dc.to_cube();
        let s = table.cube_integral(&cube).powf(1.0 / p.q());
        if s == 0.0 {
            continue;
        }
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        cube.for_each_index(&grid, |i| values[i] = smoothed.value(i) / s);
        coefficients.insert(dc.clone(), Complex64::new(s, 0.0));
        blocks.push((
            dc,
            Atom {
                kind: AtomKind::Rough,
                cube,
                data: GridFunction::from_values_unchecked(grid, values),
                moment_order: -1,
                params: *p,
                recipe: None,
            },
        ));
    }
    Ok(BlockDecomposition {
        coefficients,
        blocks,
        smoothed,
    })
}

/// `||f - psi * f||_{HM} / ||f||_{hM}`: full ladder on top, its truncation below.
pub fn global_local_gap(
    f: &GridFunction,
    psi: &dyn Kernel,
    phi: &dyn Kernel,
    p: &MorreyParams,
    ladder: &ScaleLadder,
    family: &CubeFamily,
) -> Result<f64> {
    let local = hm_local_norm(f, p, phi, &ladder.truncate()?, family)?;
    if local == 0.0 {
        return Err(Error::ZeroDenominator("local Hardy-Morrey norm"));
    }
    let rest = f.sub(&mollify(f, psi, 1.0)?.function)?;
    Ok(hm_norm(&rest, p, phi, ladder, family)? / local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{enumerate_dyadic_cubes, sample_real, Grid};
    use crate::kernels::{MomentUnit, SuitableCutoff};

    #[test]
    fn reconstruction_and_block_bound() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 4.0, if dim == 1 { 512 } else { 64 }).unwrap();
            let f = sample_real(|x| (x[0] * 1.7).sin() * (-(x.iter().map(|v| v * v).sum::<f64>()) / 3.0).exp(), &g).unwrap();
            let psi = MomentUnit::new(dim, 0.5).unwrap();
            let p = MorreyParams::new(0.5, 1.0).unwrap();
            let ladder = ScaleLadder::truncated(0, 4).unwrap();
            let d = rough_block_decompose(&f, &psi, &p, &ladder).unwrap();
            let err = d.reconstruct().max_abs_diff(&d.smoothed).unwrap();
            assert!(err <= 1e-10 * f.sup_norm(), "dim {dim}: {err}");
            for (_, b) in &d.blocks {
                assert!(b.data.sup_norm() <= b.sup_bound() * (1.0 + 1e-9), "dim {dim}");
            }
        }
    }

    #[test]
    fn zero_function_has_no_coefficients() {
        let g = Grid::new(1, 2.0, 64).unwrap();
        let z = GridFunction::zeros(g);
        let psi = MomentUnit::new(1, 0.5).unwrap();
        let p = MorreyParams::new(1.0, 2.0).unwrap();
        let d = rough_block_decompose(&z, &psi, &p, &ScaleLadder::truncated(0, 2).unwrap()).unwrap();
        assert!(d.coefficients.is_empty());
        let fam = enumerate_dyadic_cubes(&g, -1, 3).unwrap();
        let phi = SuitableCutoff::new(1).unwrap();
        let full = ScaleLadder::dyadic(-1, 3).unwrap();
        assert!(matches!(global_local_gap(&z, &psi, &phi, &p, &full, &fam), Err(Error::ZeroDenominator(_))));
    }
}
