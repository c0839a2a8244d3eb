//! Smooth, truncated and non-tangential maximal functions of a rough function and
//! the resulting Hardy-Morrey and local Hardy-Morrey norms.

use hml::grid::{enumerate_dyadic_cubes, sample_real};
use hml::kernels::Gaussian;
use hml::maximal::{hm_local_norm, hm_norm, nontangential_maximal, smooth_maximal, truncated_maximal, ScaleLadder};
use hml::morrey::morrey_norm;
use hml::{Grid, MorreyParams};

fn main() -> hml::Result<()> {
    let grid = Grid::new(1, 8.0, 4096)?;
    let family = enumerate_dyadic_cubes(&grid, -4, 8)?;
    let p = MorreyParams::new(0.5, 1.0)?;
    let phi = Gaussian { dim: 1, sigma: 1.0 / (2.0 * std::f64::consts::PI).sqrt() };
    let ladder = ScaleLadder::dyadic(-4, 8)?;
    let local = ScaleLadder::truncated(0, 8)?;

    // a mean-zero step pair and a wide plateau with nonzero mean
    let f = sample_real(|x| if (0.0..0.5).contains(&x[0]) { 1.0 } else if (0.5..1.0).contains(&x[0]) { -1.0 } else { 0.0 }, &grid)?;
    let g = sample_real(|x| if x[0].abs() < 4.0 { 1.0 } else { 0.0 }, &grid)?;

    for (name, u) in [("step pair", &f), ("wide plateau", &g)] {
        let m = smooth_maximal(u, &phi, &ladder)?;
        let mt = truncated_maximal(u, &phi, &local)?;
        let mn = nontangential_maximal(u, &phi, &ladder)?;
        let at = grid.index_of_coord(0.25).unwrap();
        println!("{name}");
        println!("  M f(1/4) = {:.4}, m f(1/4) = {:.4}, M* f(1/4) = {:.4}", m.value(at).re, mt.value(at).re, mn.value(at).re);
        println!("  ||f||_M      = {:.4}", morrey_norm(u, &p, &family)?);
        println!("  ||f||_HM     = {:.4}", hm_norm(u, &p, &phi, &ladder, &family)?);
        println!("  ||f||_hM     = {:.4}", hm_local_norm(u, &p, &phi, &local, &family)?);
    }
    Ok(())
}
