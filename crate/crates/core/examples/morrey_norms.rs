//! Morrey norms of power functions and indicator bumps, with the dilation law
//! `||f(r .)|| = r^{-n/lambda} ||f||` checked on a dyadic family.

use hml::grid::{enumerate_dyadic_cubes, sample_real};
use hml::morrey::{check_embedding, morrey_norm_with_argmax};
use hml::{Grid, MorreyParams};

fn main() -> hml::Result<()> {
    let grid = Grid::new(1, 8.0, 4096)?;
    let family = enumerate_dyadic_cubes(&grid, -4, 8)?;
    let p = MorreyParams::new(0.5, 1.0)?;

    let bump = |r: f64| sample_real(move |x| (-(r * x[0]).powi(2) * 4.0).exp(), &grid);
    println!("dilation r   norm         r^(1/lambda) * norm");
    for r in [1.0, 2.0, 4.0] {
        let (norm, i) = morrey_norm_with_argmax(&bump(r)?, &p, &family)?;
        let c = &family.cubes()[i];
        println!(
            "{r:<12} {norm:<12.6} {:<12.6} (max on [{}, {}))",
            r.powf(1.0 / p.lambda()) * norm,
            c.lower(0),
            c.upper(0)
        );
    }

    // |x|^{-1/lambda} is the extremal profile: the cube weight is flat
    for lam in [1.0, 2.0] {
        let p = MorreyParams::new(0.5, lam)?;
        let f = sample_real(|x| if x[0] == 0.0 { 0.0 } else { x[0].abs().powf(-0.5 / lam) }, &grid)?;
        let (norm, _) = morrey_norm_with_argmax(&f, &p, &family)?;
        println!("|x|^(-1/(2 lambda)), lambda = {lam}: norm {norm:.6}");
    }

    let p1 = MorreyParams::new(1.0, 2.0)?;
    let p2 = MorreyParams::new(0.5, 1.0)?;
    let e = check_embedding(&bump(1.0)?, &p1, &p2, &family)?;
    println!("embedding M^1_0.5 <= M^2_1: ratio {:.4}", e.ratio);
    Ok(())
}
