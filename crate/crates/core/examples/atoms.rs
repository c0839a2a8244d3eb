//! Builds smooth atoms, rough blocks and explicit atoms, prints their
//! certificates and round-trips one through JSON.

use hml::atoms::{make_hkp_atom, make_rough_block, make_smooth_atom, verify_atom, Atom};
use hml::{Cube, Grid, MorreyParams};

fn main() -> hml::Result<()> {
    let grid = Grid::new(1, 8.0, 4096)?;
    let p = MorreyParams::new(0.5, 1.0)?;
    let cube = Cube::from_corner(&[-0.5], 1.0)?;

    let atoms: Vec<(&str, Atom)> = vec![
        ("smooth", make_smooth_atom(&grid, &p, &cube, 11)?),
        ("rough", make_rough_block(&grid, &p, &Cube::from_corner(&[-2.0], 4.0)?, 11)?),
        ("explicit k=2", make_hkp_atom(&grid, 2, &MorreyParams::new(0.5, 1.0)?)?),
    ];
    for (name, a) in &atoms {
        let c = verify_atom(a);
        println!(
            "{name:<13} moments up to {:>2}  sup/bound {:.3}  outside {:.1e}  passed {}",
            a.moment_order,
            a.data.sup_norm() / a.sup_bound(),
            a.data.sup_outside(&a.cube),
            c.passed
        );
    }

    let dir = std::env::temp_dir().join("hml-atom-example.json");
    atoms[0].1.save(&dir)?;
    let back = Atom::load(&dir)?;
    println!("saved to {} and reloaded: identical = {}", dir.display(), back == atoms[0].1);
    Ok(())
}
