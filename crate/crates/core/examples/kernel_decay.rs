//! Regularized Schwartz kernels of the built-in order-0 symbols and the
//! off-diagonal decay `|K(x, y)| <~ |x - y|^{-(m+n)/rho}`.

use hml::psido::{builtin_symbols, kernel_decay_check, kernel_sample, KernelConfig};

fn main() -> hml::Result<()> {
    let cfg = KernelConfig::default();
    let dists: Vec<f64> = (0..12).map(|i| 0.25 * 8f64.powf(i as f64 / 11.0)).collect();
    let pairs: Vec<_> = dists.iter().map(|&d| ([0.1 + d, 0.0], [0.1, 0.0])).collect();
    for sym in builtin_symbols(1)?.into_iter().filter(|s| s.order() == 0.0) {
        let s = kernel_sample(&sym, &cfg, &pairs)?;
        let r = kernel_decay_check(&s, sym.order(), sym.rho(), 0.25, 2.0)?;
        let slope = r.slope.map_or("below rounding".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<32} slope {slope:<15} bound {:.3}  stabilization {:.1e}",
            sym.name(),
            r.expected_slope,
            s.stabilization.unwrap_or(0.0)
        );
    }
    Ok(())
}
