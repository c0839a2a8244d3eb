use num_complex::Complex64;
use proptest::prelude::*;

use hml::atoms::{make_hkp_atom_scaled, make_smooth_atom, verify_atom};
use hml::fourier::{hkp_spectral_error, parseval_ratio};
use hml::grid::enumerate_dyadic_cubes;
use hml::kernels::Gaussian;
use hml::maximal::{mollify, mollify_direct, nontangential_maximal, smooth_maximal, truncated_maximal, ScaleLadder};
use hml::morrey::morrey_norm;
use hml::psido::{apply, modulated_multiplier, smooth_multiplier};
use hml::stats::fit_loglog;
use hml::{Cube, CubeFamily, Grid, GridFunction, MorreyParams};

const N: usize = 128;

fn grid() -> Grid {
    Grid::new(1, 4.0, N).unwrap()
}

fn family() -> CubeFamily {
    enumerate_dyadic_cubes(&grid(), -2, 4).unwrap()
}

fn phi() -> Gaussian {
    Gaussian { dim: 1, sigma: 1.0 / (2.0 * std::f64::consts::PI).sqrt() }
}

fn real(v: &[f64]) -> GridFunction {
    GridFunction::from_real(grid(), v.to_vec()).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, N)
}

fn params() -> impl Strategy<Value = MorreyParams> {
    (0.3f64..2.5, 0.0f64..2.0).prop_map(|(q, extra)| MorreyParams::new(q, q + extra).unwrap())
}

// sup over cubes of |Q|^{1/lambda - 1/q} (h sum_{x_k in Q} |f_k|^q)^{1/q}, point by point
fn brute_morrey(v: &[f64], p: &MorreyParams, fam: &CubeFamily) -> f64 {
    let g = grid();
    let h = g.spacing();
    fam.cubes()
        .iter()
        .map(|c| {
            let s: f64 = (0..N)
                .filter(|&k| {
                    let x = -4.0 + k as f64 * h;
                    c.lower(0) <= x && x < c.upper(0)
                })
                .map(|k| v[k].abs().powf(p.q()))
                .sum();
            c.volume().powf(1.0 / p.lambda() - 1.0 / p.q()) * (h * s).powf(1.0 / p.q())
        })
        .fold(0.0, f64::max)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn morrey_norm_matches_pointwise_sum(v in samples(), p in params()) {
        let fam = family();
        let fast = morrey_norm(&real(&v), &p, &fam).unwrap();
        let slow = brute_morrey(&v, &p, &fam);
        prop_assert!(close(fast, slow, 1e-10), "{fast} vs {slow}");
    }

    #[test]
    fn morrey_norm_is_homogeneous(v in samples(), p in params(), c in -5.0f64..5.0) {
        let fam = family();
        let f = real(&v);
        let a = morrey_norm(&f.scale_real(c), &p, &fam).unwrap();
        let b = c.abs() * morrey_norm(&f, &p, &fam).unwrap();
        prop_assert!(close(a, b, 1e-10), "{a} vs {b}");
    }

    #[test]
    fn morrey_norm_quasi_triangle(v in samples(), w in samples(), p in params()) {
        let fam = family();
        let (f, g) = (real(&v), real(&w));
        let s = morrey_norm(&f.add(&g).unwrap(), &p, &fam).unwrap();
        let a = morrey_norm(&f, &p, &fam).unwrap();
        let b = morrey_norm(&g, &p, &fam).unwrap();
        let q = p.q();
        if q < 1.0 {
            prop_assert!(s.powf(q) <= (a.powf(q) + b.powf(q)) * (1.0 + 1e-12));
        } else {
            prop_assert!(s <= (a + b) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn larger_family_gives_larger_norm(v in samples(), p in params()) {
        let f = real(&v);
        let small = morrey_norm(&f, &p, &enumerate_dyadic_cubes(&grid(), 0, 2).unwrap()).unwrap();
        let big = morrey_norm(&f, &p, &family()).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-12));
    }

    #[test]
    fn maximal_functions_are_ordered(v in samples()) {
        let f = real(&v);
        let full = ScaleLadder::dyadic(-2, 3).unwrap();
        let trunc = full.truncate().unwrap();
        let m_trunc = truncated_maximal(&f, &phi(), &trunc).unwrap();
        let m = smooth_maximal(&f, &phi(), &full).unwrap();
        let m_nt = nontangential_maximal(&f, &phi(), &full).unwrap();
        for k in 0..N {
            let (a, b, c) = (m_trunc.value(k).re, m.value(k).re, m_nt.value(k).re);
            prop_assert!(a <= b + 1e-12 && b <= c + 1e-12, "{k}: {a} {b} {c}");
        }
    }

    #[test]
    fn smooth_maximal_is_sublinear(v in samples(), w in samples()) {
        let (f, g) = (real(&v), real(&w));
        let ladder = ScaleLadder::dyadic(-2, 3).unwrap();
        let mf = smooth_maximal(&f, &phi(), &ladder).unwrap();
        let mg = smooth_maximal(&g, &phi(), &ladder).unwrap();
        let ms = smooth_maximal(&f.add(&g).unwrap(), &phi(), &ladder).unwrap();
        for k in 0..N {
            prop_assert!(ms.value(k).re <= mf.value(k).re + mg.value(k).re + 1e-12);
        }
    }

    // the two agree up to spectral aliasing of order exp(-pi (t/2h)^2), which is
    // below rounding only for t >= 8h
    #[test]
    fn mollify_matches_direct_quadrature(v in samples(), j in 0i32..2) {
        let f = real(&v);
        let t = 2f64.powi(-j);
        let fast = mollify(&f, &phi(), t).unwrap().function;
        let slow = mollify_direct(&f, &phi(), t).unwrap();
        prop_assert!(fast.max_abs_diff(&slow).unwrap() <= 1e-8 * f.sup_norm());
    }

    #[test]
    fn parseval_holds(v in samples(), w in samples()) {
        let vals: Vec<Complex64> = v.iter().zip(&w).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let f = GridFunction::from_values(grid(), vals).unwrap();
        prop_assert!((parseval_ratio(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operators_are_linear(v in samples(), w in samples(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (f, g) = (real(&v), real(&w));
        for sym in [modulated_multiplier(1, 1, 0.25).unwrap(), smooth_multiplier(1, 1.0, 0.5).unwrap()] {
            let lhs = apply(&sym, &f.scale_real(a).add(&g.scale_real(b)).unwrap()).unwrap();
            let rhs = apply(&sym, &f).unwrap().scale_real(a).add(&apply(&sym, &g).unwrap().scale_real(b)).unwrap();
            let scale = lhs.sup_norm().max(1.0);
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10 * scale);
        }
    }

    #[test]
    fn loglog_fit_recovers_power_laws(s in -3.0f64..3.0, c in 0.01f64..100.0, n in 3usize..10) {
        let x: Vec<f64> = (0..n).map(|i| 2f64.powi(i as i32 - 3)).collect();
        let y: Vec<f64> = x.iter().map(|x| c * x.powf(s)).collect();
        let fit = fit_loglog(&x, &y).unwrap();
        prop_assert!((fit.slope - s).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_smooth_atoms_verify(j in 0i32..4, slot in 0usize..4, seed in any::<u64>(), lam in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let g = Grid::new(1, 4.0, 1024).unwrap();
        let p = MorreyParams::new(0.5, lam).unwrap();
        let side = 2f64.powi(-j);
        let cube = Cube::from_corner(&[-2.0 + side * slot as f64], side).unwrap();
        let a = make_smooth_atom(&g, &p, &cube, seed).unwrap();
        let cert = verify_atom(&a);
        prop_assert!(cert.passed, "{cert:?}");
    }

    #[test]
    fn hkp_transform_matches_closed_form(k in 1usize..4, e in 0i32..2, q in prop::sample::select(vec![0.5, 1.0])) {
        let g = Grid::new(1, 16.0, 1024).unwrap();
        let p = MorreyParams::new(q, 2.0 * q).unwrap();
        let a = make_hkp_atom_scaled(&g, k, &p, 2f64.powi(e)).unwrap();
        let cmp = hkp_spectral_error(&a, 0.5).unwrap();
        prop_assert!(cmp.resolved > 0);
        prop_assert!(cmp.relative_error < 1e-6, "{}", cmp.relative_error);
    }
}
