//! FFT plumbing shared by convolution, multipliers and the discrete Fourier
//! transform. Forward kernel is `e^{-2 pi i x.xi}` throughout.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::{Grid, GridFunction};

/// In-place n-dimensional FFT (n = 1 or 2) on a row-major `side^dim` array.
/// The inverse is unnormalised.
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, side: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(side)
    } else {
        planner.plan_fft_forward(side)
    };
    if dim == 1 {
        fft.process(data);
        return;
    }
    // rows
    for row in data.chunks_exact_mut(side) {
        fft.process(row);
    }
    // columns through a scratch transpose
    let mut col = vec![Complex64::new(0.0, 0.0); side];
    for j in 0..side {
        for i in 0..side {
            col[i] = data[i * side + j];
        }
        fft.process(&mut col);
        for i in 0..side {
            data[i * side + j] = col[i];
        }
    }
}

/// Signed FFT frequency index.
#[inline]
pub(crate) fn signed_index(m: usize, len: usize) -> i64 {
    if m < len / 2 {
        m as i64
    } else {
        m as i64 - len as i64
    }
}

/// Spectrum of a grid function zero-padded to twice its length per axis, so
/// that multipliers act as linear (not circular) convolutions on the box.
pub(crate) struct PaddedSpectrum {
    grid: Grid,
    side: usize,
    freqs: Vec<f64>,
    data: Vec<Complex64>,
}

impl PaddedSpectrum {
    pub(crate) fn new(f: &GridFunction) -> Self {
        let grid = *f.grid();
        let n = grid.samples();
        let side = 2 * n;
        let dim = grid.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)];
        if dim == 1 {
            data[..n].copy_from_slice(f.values());
        } else {
            for i in 0..n {
                data[i * side..i * side + n].copy_from_slice(&f.values()[i * n..(i + 1) * n]);
            }
        }
        fft_nd(&mut data, dim, side, false);
        let step = 1.0 / (side as f64 * grid.spacing());
        let freqs = (0..side).map(|m| signed_index(m, side) as f64 * step).collect();
        Self { grid, side, freqs, data }
    }

    /// Multiplies by `mult(xi)` and returns the cropped inverse.
    pub(crate) fn apply<F>(&self, mult: F) -> GridFunction
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = self.grid.dim();
        let side = self.side;
        let mut buf = self.data.clone();
        if dim == 1 {
            for (m, v) in buf.iter_mut().enumerate() {
                *v *= mult(&[self.freqs[m]]);
            }
        } else {
            for i in 0..side {
                for j in 0..side {
                    buf[i * side + j] *= mult(&[self.freqs[i], self.freqs[j]]);
                }
            }
        }
        self.finish(buf)
    }

    /// Inverse transform of a caller-prepared padded spectrum, cropped to the box.
    pub(crate) fn finish(&self, mut buf: Vec<Complex64>) -> GridFunction {
        let dim = self.grid.dim();
        let side = self.side;
        let n = self.grid.samples();
        fft_nd(&mut buf, dim, side, true);
        let norm = 1.0 / (side.pow(dim as u32) as f64);
        let values: Vec<Complex64> = if dim == 1 {
            buf[..n].iter().map(|v| v * norm).collect()
        } else {
            (0..n)
                .flat_map(|i| buf[i * side..i * side + n].iter().map(move |v| v * norm).collect::<Vec<_>>())
                .collect()
        };
        GridFunction::from_values_unchecked(self.grid, values)
    }
}

/// Unpadded transform on the dual lattice, ordered like the spatial grid:
/// `xi_m = (m - N/2) / (2L)`, values `h^n sum_k f_k e^{-2 pi i x_k . xi_m}`.
pub(crate) fn centered_dft(f: &GridFunction) -> Vec<Complex64> {
    let grid = f.grid();
    let n = grid.samples();
    let dim = grid.dim();
    let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let ix = grid.axis_indices(idx);
            let s: f64 = (0..dim).map(|a| sign(ix[a])).product();
            v * s
        })
        .collect();
    fft_nd(&mut buf, dim, n, false);
    // N/2 is even for N >= 8, so the output phase is (-1)^m per axis.
    let w = grid.cell_volume();
    for (idx, v) in buf.iter_mut().enumerate() {
        let ix = grid.axis_indices(idx);
        let s: f64 = (0..dim).map(|a| sign(ix[a])).product();
        *v *= s * w;
    }
    buf
}

/// Exact inverse of [`centered_dft`].
pub(crate) fn centered_idft(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = grid.samples();
    let dim = grid.dim();
    let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let ix = grid.axis_indices(idx);
            let s: f64 = (0..dim).map(|a| sign(ix[a])).product();
            v * s
        })
        .collect();
    fft_nd(&mut buf, dim, n, true);
    let norm = 1.0 / (grid.cell_volume() * (n.pow(dim as u32)) as f64);
    for (idx, v) in buf.iter_mut().enumerate() {
        let ix = grid.axis_indices(idx);
        let s: f64 = (0..dim).map(|a| sign(ix[a])).product();
        *v *= s * norm;
    }
    buf
}

/// Direct evaluation of `h^n sum_k f_k e^{-2 pi i x_k . xi}` at an arbitrary frequency.
pub(crate) fn direct_transform(f: &GridFunction, xi: &[f64]) -> Complex64 {
    let grid = f.grid();
    let dim = grid.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, v) in f.values().iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let p = grid.point(idx);
        let phase: f64 = (0..dim).map(|a| p[a] * xi[a]).sum();
        acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
    }
    acc * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_real;

    #[test]
    fn centered_dft_matches_direct_sum() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, 16).unwrap();
            let f = sample_real(|x| (-(x.iter().map(|v| v * v).sum::<f64>())).exp() * (1.0 + x[0]), &g).unwrap();
            let spec = centered_dft(&f);
            let dual = g.dual();
            for idx in [0usize, 3, 7, g.len() / 2 + 1, g.len() - 1] {
                let p = dual.point(idx);
                let direct = direct_transform(&f, &p[..dim]);
                assert!((spec[idx] - direct).norm() < 1e-12, "dim {dim} idx {idx}");
            }
            let back = centered_idft(&g, &spec);
            for (a, b) in back.iter().zip(f.values()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn padded_identity_multiplier_roundtrip() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = sample_real(|x| x[0] - 2.0 * x[1], &g).unwrap();
        let out = PaddedSpectrum::new(&f).apply(|_| Complex64::new(1.0, 0.0));
        assert!(out.max_abs_diff(&f).unwrap() < 1e-13);
    }
}
