//! Fourier transform of the explicit atoms: DFT against the closed form, the
//! growth `|a_eps_hat(1/(4 eps))| ~ eps^{n(1-1/lambda)}`, and annulus decay.

use hml::atoms::{make_hkp_atom_scaled, make_smooth_atom};
use hml::fourier::{decay_report, hkp_growth_law, hkp_spectral_error, FrequencyRange, WeightKind};
use hml::{Cube, Grid, MorreyParams};

fn main() -> hml::Result<()> {
    let grid = Grid::new(1, 16.0, 1024)?;
    let p = MorreyParams::new(1.0, 2.0)?;
    for k in 1..=3 {
        for eps in [1.0, 2.0] {
            let a = make_hkp_atom_scaled(&grid, k, &p, eps)?;
            let c = hkp_spectral_error(&a, 0.5)?;
            println!("k={k} eps={eps}: relative DFT error {:.2e} over {} frequencies", c.relative_error, c.resolved);
        }
    }

    let g = hkp_growth_law(&grid, 1, &p, &[1.0, 2.0, 4.0, 8.0])?;
    println!("growth slope {:.6} (expected {:.6})", g.slope, g.expected_slope);

    let big = Grid::new(1, 32.0, 16384)?;
    let q = MorreyParams::new(2.0 / 3.0, 2.0 / 3.0)?;
    let a = make_smooth_atom(&big, &q, &Cube::from_corner(&[-0.5], 1.0)?, 3)?;
    let d = decay_report(&a.data, &q, WeightKind::Homogeneous, &FrequencyRange::default())?;
    println!("smooth atom: annulus slope {:.3} vs weight exponent {:.3}, C = {:.3}", d.slope, d.exponent, d.c);
    Ok(())
}
