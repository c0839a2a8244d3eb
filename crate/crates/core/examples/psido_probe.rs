//! Applies pseudo-differential operators to an atom corpus and reports the
//! local Hardy-Morrey operator ratios, then the `<D>^m` blow-up on explicit atoms.

use hml::atoms::make_smooth_atom;
use hml::grid::enumerate_dyadic_cubes;
use hml::kernels::Gaussian;
use hml::maximal::ScaleLadder;
use hml::psido::{blowup_experiment, operator_norm_probe, parse_symbol, BlowupConfig, NormKind};
use hml::{Cube, Grid, MorreyParams};

fn main() -> hml::Result<()> {
    let grid = Grid::new(1, 2.0, 8192)?;
    let p = MorreyParams::new(0.5, 0.5)?;
    let phi = Gaussian { dim: 1, sigma: 1.0 / (2.0 * std::f64::consts::PI).sqrt() };
    let family = enumerate_dyadic_cubes(&grid, -2, 11)?;
    let ladder = ScaleLadder::truncated(0, 11)?;
    let corpus = (0..6)
        .map(|j| make_smooth_atom(&grid, &p, &Cube::from_corner(&[0.0], 2f64.powi(-j))?, j as u64))
        .collect::<hml::Result<Vec<_>>>()?;

    for spec in ["modulated:j=1,w=0.25", "smoothmult:r=1,c=0.5", "jbracket:m=0"] {
        let sym = parse_symbol(spec, 1)?;
        let r = operator_norm_probe(&sym, &p, &corpus, &phi, &ladder, &family, NormKind::Local)?;
        println!("{:<28} max ratio {:.3}  trend {:+.3}", r.symbol, r.max_ratio, r.trend.unwrap_or(f64::NAN));
    }

    let grid = Grid::new(1, 16.0, 8192)?;
    let family = enumerate_dyadic_cubes(&grid, -4, 8)?;
    let ladder = ScaleLadder::truncated(0, 8)?;
    let cfg = BlowupConfig { m: 0.5, k: 2, lambda: 1.0, j: None, eps: vec![1.0, 0.5, 0.25] };
    let b = blowup_experiment(&cfg, &grid, &phi, &ladder, &family)?;
    for row in &b.rows {
        println!("eps {:<6} bound {:.4}  measured {:.4}", row.eps, row.bound, row.measured);
    }
    println!("slopes in eps: bound {:.3}, measured {:.3}", b.bound_slope, b.measured_slope);
    Ok(())
}
