//! Central finite-difference stencils.

use nalgebra::{DMatrix, DVector};

/// Weights of the accuracy-4 central difference for the `m`-th derivative on
/// the nodes `-s..=s`, `s = (m + 1)/2 + 1`.
pub(crate) fn central_weights(m: usize) -> Vec<f64> {
    if m == 0 {
        return vec![1.0];
    }
    let s = m.div_ceil(2) + 1;
    let nodes: Vec<f64> = (-(s as i64)..=s as i64).map(|i| i as f64).collect();
    let k = nodes.len();
    let a = DMatrix::from_fn(k, k, |p, i| nodes[i].powi(p as i32));
    let factorial: f64 = (1..=m).map(|v| v as f64).product();
    let b = DVector::from_fn(k, |p, _| if p == m { factorial } else { 0.0 });
    let w = a.lu().solve(&b).expect("Vandermonde system on distinct nodes");
    w.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        for m in 1..=4usize {
            let w = central_weights(m);
            let s = (w.len() / 2) as i64;
            let d = |p: i32| w.iter().enumerate().map(|(i, wi)| wi * ((i as i64 - s) as f64).powi(p)).sum::<f64>();
            let fact: f64 = (1..=m).map(|v| v as f64).product();
            assert!((d(m as i32) - fact).abs() < 1e-9);
            for p in 0..(m as i32 + 4) {
                if p != m as i32 {
                    assert!(d(p).abs() < 1e-9, "m {m} p {p}");
                }
            }
        }
    }
}
