//! Convolution kernels described by their Fourier transform, with pointwise
//! values available for direct-quadrature checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// A kernel `phi` on `R^n` with `phi_t(x) = t^{-n} phi(x/t)`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;

    /// `phi_hat(xi) = int phi(x) e^{-2 pi i x.xi} dx`.
    fn spectrum(&self, xi: &[f64]) -> Complex64;

    /// Pointwise value `phi(x)`.
    fn value(&self, x: &[f64]) -> Complex64;

    fn name(&self) -> String;

    /// `int phi`.
    fn integral(&self) -> Complex64 {
        self.spectrum(&vec![0.0; self.dim()])
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `sin(pi u) / (pi u)`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - (PI * u).powi(2) / 6.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// Centered cardinal B-spline of order `k` (degree `k - 1`), supported on
/// `[-k/2, k/2]` with unit integral. Cox-de Boor recursion, stable for large `k`.
pub fn bspline(k: usize, x: f64) -> f64 {
    let y = x + k as f64 / 2.0;
    if !(y > 0.0 && y < k as f64) {
        return 0.0;
    }
    // b[i] = B_m(y - i) for the uncentered spline on [0, m]
    let mut b: Vec<f64> = (0..=k)
        .map(|i| {
            let u = y - i as f64;
            if (0.0..1.0).contains(&u) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for m in 2..=k {
        let mf = m as f64;
        for i in 0..k {
            let u = y - i as f64;
            b[i] = (u * b[i] + (mf - u) * b[i + 1]) / (mf - 1.0);
        }
        b[k] = 0.0;
    }
    b[0]
}

/// C-infinity step: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// 1 on `[0, 1]`, 0 on `[2, inf)`, smooth in between.
pub fn plateau(s: f64) -> f64 {
    1.0 - smoothstep(s - 1.0)
}

/// Normalised Gaussian with standard deviation `sigma` per axis.
#[derive(Clone, Copy, Debug)]
pub struct Gaussian {
    pub dim: usize,
    pub sigma: f64,
}

impl Kernel for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        Complex64::new((-2.0 * PI * PI * self.sigma * self.sigma * norm_sq(xi)).exp(), 0.0)
    }

    fn value(&self, x: &[f64]) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let c = (2.0 * PI * s2).powf(-(self.dim as f64) / 2.0);
        Complex64::new(c * (-norm_sq(x) / (2.0 * s2)).exp(), 0.0)
    }

    fn name(&self) -> String {
        format!("gaussian(sigma={})", self.sigma)
    }
}

/// Sign-changing Schwartz kernel `(1 + n - 2 pi |x|^2) e^{-pi |x|^2}` with
/// transform `(1 + 2 pi |xi|^2) e^{-pi |xi|^2}`.
#[derive(Clone, Copy, Debug)]
pub struct Hermite {
    pub dim: usize,
}

impl Kernel for Hermite {
    fn dim(&self) -> usize {
        self.dim
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        let r2 = norm_sq(xi);
        Complex64::new((1.0 + 2.0 * PI * r2) * (-PI * r2).exp(), 0.0)
    }

    fn value(&self, x: &[f64]) -> Complex64 {
        let r2 = norm_sq(x);
        Complex64::new((1.0 + self.dim as f64 - 2.0 * PI * r2) * (-PI * r2).exp(), 0.0)
    }

    fn name(&self) -> String {
        "hermite".into()
    }
}

const CUTOFF_ORDER: usize = 8;
const CUTOFF_C1: [f64; 6] = [1.25, 1.5, 2.0, 2.5, 3.0, 4.0];
const CUTOFF_C2_MAX: f64 = 1e3;

/// `phi(x) = c1^n c2 psi(c1 x)` with `psi = eta * eta` and `eta` a tensor
/// B-spline supported in `B(0, 1/2)`, so `phi_hat >= 0`, `phi_hat >= 1` on the
/// unit ball and `supp phi` is inside `B(0, 1/c1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuitableCutoff {
    dim: usize,
    scale: f64,
    c1: f64,
    c2: f64,
    min_on_ball: f64,
}

impl SuitableCutoff {
    pub fn new(dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let scale = CUTOFF_ORDER as f64 * (dim as f64).sqrt();
        for &c1 in &CUTOFF_C1 {
            let psi_hat = |xi: &[f64]| -> f64 {
                xi.iter().map(|v| sinc(v / (c1 * scale)).powi(2 * CUTOFF_ORDER as i32)).product()
            };
            let min = min_on_unit_ball(dim, psi_hat);
            if min > 0.0 && 1.0 / min <= CUTOFF_C2_MAX {
                let c2 = (1.0 + 1e-6) / min;
                return Ok(Self {
                    dim,
                    scale,
                    c1,
                    c2,
                    min_on_ball: c2 * min,
                });
            }
        }
        Err(Error::CutoffSearch("no c1 in the candidate list gives a positive transform on the unit ball".into()))
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Support radius `1/c1` (strictly inside the unit ball).
    pub fn support_radius(&self) -> f64 {
        1.0 / self.c1
    }

    /// Sampled minimum of `phi_hat` over the closed unit ball.
    pub fn min_on_ball(&self) -> f64 {
        self.min_on_ball
    }
}

fn min_on_unit_ball<F: Fn(&[f64]) -> f64>(dim: usize, f: F) -> f64 {
    let mut min = f64::INFINITY;
    if dim == 1 {
        for i in 0..=2000 {
            let x = -1.0 + i as f64 / 1000.0;
            min = min.min(f(&[x]));
        }
    } else {
        for ir in 0..=64 {
            let r = ir as f64 / 64.0;
            for ia in 0..256 {
                let a = 2.0 * PI * ia as f64 / 256.0;
                min = min.min(f(&[r * a.cos(), r * a.sin()]));
            }
        }
    }
    min
}

impl Kernel for SuitableCutoff {
    fn dim(&self) -> usize {
        self.dim
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        let v: f64 = xi
            .iter()
            .map(|v| sinc(v / (self.c1 * self.scale)).powi(2 * CUTOFF_ORDER as i32))
            .product();
        Complex64::new(self.c2 * v, 0.0)
    }

    fn value(&self, x: &[f64]) -> Complex64 {
        let s = self.scale;
        let v: f64 = x.iter().map(|v| s * bspline(2 * CUTOFF_ORDER, s * self.c1 * v)).product();
        Complex64::new(self.c1.powi(self.dim as i32) * self.c2 * v, 0.0)
    }

    fn name(&self) -> String {
        format!("suitable_cutoff(c1={}, c2={:.6})", self.c1, self.c2)
    }
}

/// Radial plateau in frequency: `psi_hat = 1` on `|xi| <= r`, `0` for `|xi| >= 2r`.
/// Every moment of `psi` of positive order vanishes and `int psi = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentUnit {
    pub dim: usize,
    pub radius: f64,
}

impl MomentUnit {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param("r", format!("flat radius must be positive, got {radius}")));
        }
        Ok(Self { dim, radius })
    }
}

impl Kernel for MomentUnit {
    fn dim(&self) -> usize {
        self.dim
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(plateau(norm_sq(xi).sqrt() / self.radius), 0.0)
    }

    fn value(&self, x: &[f64]) -> Complex64 {
        // Trapezoid rule on the compactly supported smooth spectrum; aliases
        // sit at distance 1/step from x and are negligible.
        let r = self.radius;
        let far = norm_sq(x).sqrt();
        let m = ((8.0 * r * (far + 4.0 / r)).ceil() as usize).max(64);
        let step = 4.0 * r / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| -2.0 * r + i as f64 * step).collect();
        let mut acc = 0.0;
        if self.dim == 1 {
            for &k in &nodes {
                acc += plateau(k.abs() / r) * (2.0 * PI * x[0] * k).cos();
            }
            acc *= step;
        } else {
            for &k1 in &nodes {
                for &k2 in &nodes {
                    let s = plateau((k1 * k1 + k2 * k2).sqrt() / r);
                    if s != 0.0 {
                        acc += s * (2.0 * PI * (x[0] * k1 + x[1] * k2)).cos();
                    }
                }
            }
            acc *= step * step;
        }
        Complex64::new(acc, 0.0)
    }

    fn name(&self) -> String {
        format!("moment_unit(r={})", self.radius)
    }
}

/// A kernel given by grid samples; its transform is the direct quadrature sum.
pub struct SampledKernel {
    dim: usize,
    cell: f64,
    support: Vec<([f64; 2], Complex64)>,
    spacing: f64,
}

impl SampledKernel {
    pub fn new(phi: &GridFunction) -> Self {
        let g = phi.grid();
        let support = phi
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, v)| (g.point(i), *v))
            .collect();
        Self {
            dim: g.dim(),
            cell: g.cell_volume(),
            support,
            spacing: g.spacing(),
        }
    }
}

impl Kernel for SampledKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        let sum: Complex64 = self
            .support
            .par_iter()
            .map(|(p, v)| {
                let phase: f64 = (0..self.dim).map(|a| p[a] * xi[a]).sum();
                v * Complex64::from_polar(1.0, -2.0 * PI * phase)
            })
            .sum();
        sum * self.cell
    }

    fn value(&self, x: &[f64]) -> Complex64 {
        let tol = self.spacing * 1e-6;
        self.support
            .iter()
            .find(|(p, _)| (0..self.dim).all(|a| (p[a] - x[a]).abs() < tol))
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    fn name(&self) -> String {
        format!("sampled({} points)", self.support.len())
    }
}
