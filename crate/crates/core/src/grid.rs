//! Uniform box grids, sampled functions, cubes and the cube families that
//! every Morrey-type supremum ranges over.
//!
//! Sample points are cell centres `x_k = -L + k h`. A grid cell belongs to a
//! cube iff its centre does, and cubes are half-open `[a, b)^n`, so dyadic
//! levels tile the box exactly.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack (in units of the grid spacing) when snapping cube faces to samples.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    samples: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, samples: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if samples < 8 || !samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(samples));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", format!("must be positive, got {half_width}")));
        }
        Ok(Self {
            dim,
            half_width,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Samples per axis.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.samples as f64
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.samples.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of the `i`-th sample along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis indices of a flat (lexicographic, first axis slowest) index.
    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.samples, idx % self.samples]
        }
    }

    #[inline]
    pub fn flat_index(&self, ix: [usize; 2]) -> usize {
        if self.dim == 1 {
            ix[0]
        } else {
            ix[0] * self.samples + ix[1]
        }
    }

    /// Coordinates of sample `idx`; the trailing entry is zero when `n = 1`.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ix = self.axis_indices(idx);
        if self.dim == 1 {
            [self.coord(ix[0]), 0.0]
        } else {
            [self.coord(ix[0]), self.coord(ix[1])]
        }
    }

    /// Index of the sample at coordinate `x` if `x` is (to rounding) a sample point.
    pub fn index_of_coord(&self, x: f64) -> Option<usize> {
        let v = (x + self.half_width) / self.spacing();
        let r = v.round();
        if (v - r).abs() > SNAP || r < 0.0 || r >= self.samples as f64 {
            None
        } else {
            Some(r as usize)
        }
    }

    /// The frequency lattice dual to this grid: spacing `1/(2L)`, maximal
    /// frequency `N/(4L)`, same number of samples.
    pub fn dual(&self) -> Grid {
        Grid {
            dim: self.dim,
            half_width: self.samples as f64 / (4.0 * self.half_width),
            samples: self.samples,
        }
    }

    /// Half-open index range `[start, end)` of samples whose coordinate lies in `[lo, hi)`.
    pub fn index_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        let h = self.spacing();
        let n = self.samples as f64;
        let start = ((lo + self.half_width) / h - SNAP).ceil().clamp(0.0, n);
        let end = ((hi + self.half_width) / h - SNAP).ceil().clamp(0.0, n);
        let start = start as usize;
        let end = (end as usize).max(start);
        (start, end)
    }

    /// Whether `other` has the same geometry.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.samples == other.samples
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// The whole box as a cube.
    pub fn box_cube(&self) -> Cube {
        Cube {
            center: vec![0.0; self.dim],
            side: 2.0 * self.half_width,
        }
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::from_values(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Crate-internal constructor for values already known to be finite.
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub(crate) fn from_real_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        Self::from_values_unchecked(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm()).sum::<f64>()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_values_unchecked(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        ))
    }

    /// `max_k |self_k - other_k|`.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Restriction to the samples inside `cube` (zero elsewhere).
    pub fn restrict(&self, cube: &Cube) -> Self {
        let mut out = GridFunction::zeros(self.grid);
        cube.for_each_index(&self.grid, |idx| out.values[idx] = self.values[idx]);
        out
    }

    /// Largest modulus over samples outside `cube`.
    pub fn sup_outside(&self, cube: &Cube) -> f64 {
        let mut inside = vec![false; self.values.len()];
        cube.for_each_index(&self.grid, |idx| inside[idx] = true);
        self.values
            .iter()
            .zip(&inside)
            .filter(|(_, &i)| !i)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Samples `f` at every grid point.
///
/// `f` receives a coordinate slice of length `n`.
pub fn sample<F>(f: F, grid: &Grid) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> Complex64,
{
    let n = grid.dim();
    let values: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let p = grid.point(idx);
            f(&p[..n])
        })
        .collect();
    GridFunction::from_values(*grid, values)
}

/// Real-valued convenience wrapper around [`sample`].
pub fn sample_real<F>(f: F, grid: &Grid) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> f64,
{
    sample(|x| Complex64::new(f(x), 0.0), grid)
}

/// `f(R x)` for an integer power of two `R`; exact on the grid because `R x_k`
/// is again a sample point whenever it lies in the box.
pub fn compress(f: &GridFunction, r: usize) -> Result<GridFunction> {
    if r == 0 || !r.is_power_of_two() {
        return Err(Error::param("R", format!("dilation must be a power of two, got {r}")));
    }
    let g = *f.grid();
    let n = g.samples();
    let shift = (g.half_width() / g.spacing()).round() as usize;
    // x_k = (k - shift) h, so R x_k = x_{shift + R (k - shift)}
    let map = |k: usize| -> Option<usize> {
        let m = shift as i64 + r as i64 * (k as i64 - shift as i64);
        (0..n as i64).contains(&m).then_some(m as usize)
    };
    let values: Vec<Complex64> = (0..g.len())
        .map(|idx| {
            let ix = g.axis_indices(idx);
            let mut src = [0usize; 2];
            for a in 0..g.dim() {
                match map(ix[a]) {
                    Some(m) => src[a] = m,
                    None => return Complex64::new(0.0, 0.0),
                }
            }
            f.value(g.flat_index(src))
        })
        .collect();
    Ok(GridFunction::from_values_unchecked(g, values))
}

/// Axis-aligned cube `center + [-side/2, side/2)^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 2 {
            return Err(Error::UnsupportedDimension(center.len()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::param("side", format!("must be positive, got {side}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        Ok(Self { center, side })
    }

    /// Cube with lower corner `corner` and sidelength `side`.
    pub fn from_corner(corner: &[f64], side: f64) -> Result<Self> {
        Self::new(corner.iter().map(|c| c + side / 2.0).collect(), side)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - self.side / 2.0
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + self.side / 2.0
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| x[a] >= self.lower(a) && x[a] < self.upper(a))
    }

    /// Whether `other` lies inside `self` (as half-open sets).
    pub fn contains_cube(&self, other: &Cube) -> bool {
        let tol = 1e-12 * self.side.max(other.side);
        (0..self.dim()).all(|a| other.lower(a) >= self.lower(a) - tol && other.upper(a) <= self.upper(a) + tol)
    }

    /// Concentric dilate with sidelength multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> Cube {
        Cube {
            center: self.center.clone(),
            side: self.side * factor,
        }
    }

    /// Image under `x -> factor * x`.
    pub fn scale_about_origin(&self, factor: f64) -> Cube {
        Cube {
            center: self.center.iter().map(|c| c * factor).collect(),
            side: self.side * factor,
        }
    }

    /// Sample index ranges per axis, clipped to the box.
    pub fn index_ranges(&self, grid: &Grid) -> [(usize, usize); 2] {
        let mut r = [(0, 1); 2];
        for (a, slot) in r.iter_mut().enumerate().take(grid.dim()) {
            *slot = grid.index_range(self.lower(a), self.upper(a));
        }
        r
    }

    pub fn intersects_box(&self, grid: &Grid) -> bool {
        let l = grid.half_width();
        (0..self.dim()).all(|a| self.lower(a) < l && self.upper(a) > -l)
    }

    /// Number of samples inside the cube.
    pub fn sample_count(&self, grid: &Grid) -> usize {
        let r = self.index_ranges(grid);
        (0..grid.dim()).map(|a| r[a].1 - r[a].0).product()
    }

    pub fn for_each_index<F: FnMut(usize)>(&self, grid: &Grid, mut f: F) {
        let r = self.index_ranges(grid);
        if grid.dim() == 1 {
            (r[0].0..r[0].1).for_each(f);
        } else {
            for i in r[0].0..r[0].1 {
                for j in r[1].0..r[1].1 {
                    f(grid.flat_index([i, j]));
                }
            }
        }
    }
}

/// Dyadic cube `2^{-level} (index + [0,1)^n)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        Self { level, index }
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn to_cube(&self) -> Cube {
        let s = self.side();
        Cube {
            center: self.index.iter().map(|&k| (k as f64 + 0.5) * s).collect(),
            side: s,
        }
    }

    /// Whether `other` is contained in `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.level < self.level || other.dim() != self.dim() {
            return false;
        }
        let shift = (other.level - self.level) as u32;
        self.index
            .iter()
            .zip(&other.index)
            .all(|(&k, &m)| m.div_euclid(1i64 << shift) == k)
    }
}

impl std::fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "D(j={}, k={:?})", self.level, self.index)
    }
}

/// How a [`CubeFamily`] was generated; reported alongside every norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Dyadic { j_min: i32, j_max: i32 },
    Translated { sidelengths: Vec<f64>, offsets: usize },
    Union { parts: Vec<FamilySpec> },
    Explicit,
}

/// Finite stand-in for "all cubes" in a Morrey supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    dim: usize,
    cubes: Vec<Cube>,
    /// Dyadic labels, parallel to `cubes`, when the family is purely dyadic.
    dyadic: Vec<DyadicCube>,
    spec: FamilySpec,
}

impl CubeFamily {
    pub fn from_cubes(cubes: Vec<Cube>) -> Result<Self> {
        let dim = cubes
            .first()
            .map(Cube::dim)
            .ok_or_else(|| Error::EmptyFamily("no cubes".into()))?;
        Ok(Self {
            dim,
            cubes,
            dyadic: Vec::new(),
            spec: FamilySpec::Explicit,
        })
    }

    pub fn from_dyadic(dyadic: Vec<DyadicCube>) -> Result<Self> {
        let dim = dyadic
            .first()
            .map(DyadicCube::dim)
            .ok_or_else(|| Error::EmptyFamily("no cubes".into()))?;
        Ok(Self {
            dim,
            cubes: dyadic.iter().map(DyadicCube::to_cube).collect(),
            dyadic,
            spec: FamilySpec::Explicit,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn dyadic(&self) -> Option<&[DyadicCube]> {
        if self.dyadic.is_empty() {
            None
        } else {
            Some(&self.dyadic)
        }
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Union without duplicates. Dyadic labels survive only if both sides are dyadic.
    pub fn union(&self, other: &CubeFamily) -> Result<CubeFamily> {
        if self.dim != other.dim {
            return Err(Error::UnsupportedDimension(other.dim));
        }
        let mut seen = BTreeSet::new();
        let both_dyadic = self.dyadic().is_some() && other.dyadic().is_some();
        let mut cubes = Vec::new();
        let mut dyadic = Vec::new();
        for fam in [self, other] {
            for (i, c) in fam.cubes.iter().enumerate() {
                if seen.insert(cube_key(c)) {
                    cubes.push(c.clone());
                    if both_dyadic {
                        dyadic.push(fam.dyadic[i].clone());
                    }
                }
            }
        }
        Ok(CubeFamily {
            dim: self.dim,
            cubes,
            dyadic,
            spec: FamilySpec::Union {
                parts: vec![self.spec.clone(), other.spec.clone()],
            },
        })
    }
}

fn cube_key(c: &Cube) -> (u64, Vec<u64>) {
    (c.side.to_bits(), c.center.iter().map(|x| (x + 0.0).to_bits()).collect())
}

/// Midpoint-rule integral of `f` over `cube`: `h^n` times the sum of samples
/// whose cell centre lies in the cube. Empty intersections give zero.
pub fn integrate(f: &GridFunction, cube: &Cube) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    cube.for_each_index(f.grid(), |idx| acc += f.values[idx]);
    acc * f.grid().cell_volume()
}

/// Real counterpart of [`integrate`] for precomputed weights.
pub fn integrate_real(grid: &Grid, weights: &[f64], cube: &Cube) -> f64 {
    let mut acc = 0.0;
    cube.for_each_index(grid, |idx| acc += weights[idx]);
    acc * grid.cell_volume()
}

/// All dyadic cubes with level in `[j_min, j_max]` contained in the box.
pub fn enumerate_dyadic_cubes(grid: &Grid, j_min: i32, j_max: i32) -> Result<CubeFamily> {
    if j_min > j_max {
        return Err(Error::EmptyFamily(format!("level range [{j_min}, {j_max}] is empty")));
    }
    let l = grid.half_width();
    if 2f64.powi(-j_max) < grid.spacing() * (1.0 - 1e-12) {
        // a cube narrower than a cell holds at most one sample but is credited its own volume
        return Err(Error::param(
            "j_max",
            format!("cube side 2^{} is below the grid spacing {}", -j_max, grid.spacing()),
        ));
    }
    if 2f64.powi(-j_min) > 2.0 * l * (1.0 + 1e-12) {
        return Err(Error::param(
            "j_min",
            format!("cube side 2^{} exceeds the box width {}", -j_min, 2.0 * l),
        ));
    }
    let mut dyadic = Vec::new();
    for j in j_min..=j_max {
        let s = 2f64.powi(-j);
        let k_lo = (-l / s - SNAP).ceil() as i64;
        let k_hi = (l / s + SNAP).floor() as i64 - 1;
        if k_hi < k_lo {
            continue;
        }
        if grid.dim() == 1 {
            for k in k_lo..=k_hi {
                dyadic.push(DyadicCube::new(j, vec![k]));
            }
        } else {
            for k0 in k_lo..=k_hi {
                for k1 in k_lo..=k_hi {
                    dyadic.push(DyadicCube::new(j, vec![k0, k1]));
                }
            }
        }
    }
    let mut fam = CubeFamily::from_dyadic(dyadic)
        .map_err(|_| Error::EmptyFamily("no dyadic cube fits in the box".into()))?;
    fam.spec = FamilySpec::Dyadic { j_min, j_max };
    Ok(fam)
}

/// For each sidelength, cubes centred on the lattice `-L + (side/offsets) Z^n`
/// restricted to centres inside the box.
pub fn translate_cube_family(grid: &Grid, sidelengths: &[f64], offsets: usize) -> Result<CubeFamily> {
    if sidelengths.is_empty() {
        return Err(Error::EmptyFamily("no sidelengths".into()));
    }
    if offsets == 0 {
        return Err(Error::param("offsets", "must be at least 1"));
    }
    if let Some(s) = sidelengths.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::param("sidelengths", format!("must be positive, got {s}")));
    }
    let l = grid.half_width();
    let mut seen = BTreeSet::new();
    let mut cubes = Vec::new();
    for &side in sidelengths {
        let step = side / offsets as f64;
        let count = ((2.0 * l) / step - SNAP).ceil() as usize;
        let centers: Vec<f64> = (0..count).map(|m| -l + m as f64 * step).collect();
        let mut push = |center: Vec<f64>| {
            let c = Cube { center, side };
            if c.intersects_box(grid) && seen.insert(cube_key(&c)) {
                cubes.push(c);
            }
        };
        if grid.dim() == 1 {
            for &c in &centers {
                push(vec![c]);
            }
        } else {
            for &c0 in &centers {
                for &c1 in &centers {
                    push(vec![c0, c1]);
                }
            }
        }
    }
    let mut fam = CubeFamily::from_cubes(cubes)?;
    fam.spec = FamilySpec::Translated {
        sidelengths: sidelengths.to_vec(),
        offsets,
    };
    Ok(fam)
}

/// Summed-area table over nonnegative weights, for O(1) cube sums.
pub(crate) struct PrefixSum {
    grid: Grid,
    table: Vec<f64>,
}

impl PrefixSum {
    pub(crate) fn new(grid: &Grid, weights: &[f64]) -> Self {
        let n = grid.samples();
        if grid.dim() == 1 {
            let mut table = Vec::with_capacity(n + 1);
            table.push(0.0);
            let mut acc = 0.0;
            for w in weights {
                acc += w;
                table.push(acc);
            }
            Self { grid: *grid, table }
        } else {
            let m = n + 1;
            let mut table = vec![0.0; m * m];
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    row += weights[i * n + j];
                    table[(i + 1) * m + j + 1] = table[i * m + j + 1] + row;
                }
            }
            Self { grid: *grid, table }
        }
    }

    /// Sum of weights over the index box `ranges`.
    pub(crate) fn box_sum(&self, ranges: [(usize, usize); 2]) -> f64 {
        if self.grid.dim() == 1 {
            let (a, b) = ranges[0];
            (self.table[b] - self.table[a]).max(0.0)
        } else {
            let m = self.grid.samples() + 1;
            let (a0, b0) = ranges[0];
            let (a1, b1) = ranges[1];
            let t = &self.table;
            (t[b0 * m + b1] - t[a0 * m + b1] - t[b0 * m + a1] + t[a0 * m + a1]).max(0.0)
        }
    }

    pub(crate) fn cube_integral(&self, cube: &Cube) -> f64 {
        self.box_sum(cube.index_ranges(&self.grid)) * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn make_grid_fields() {
        let g = Grid::new(1, 8.0, 1024).unwrap();
        assert_eq!(g.spacing(), 1.0 / 64.0);
        let g2 = Grid::new(2, 4.0, 256).unwrap();
        assert_eq!(g2.spacing(), 1.0 / 32.0);
        assert_eq!(g2.len(), 65536);
        assert_eq!(Grid::new(1, 8.0, 1000), Err(Error::NotPowerOfTwo(1000)));
        assert_eq!(Grid::new(3, 8.0, 64), Err(Error::UnsupportedDimension(3)));
        assert!(Grid::new(1, -1.0, 64).is_err());
    }

    #[test]
    fn sample_identity_and_indicator() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let f = sample_real(|x| x[0], &g).unwrap();
        let expect = [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75];
        for (v, e) in f.values().iter().zip(expect) {
            assert_eq!(v.re, e);
        }
        let g = Grid::new(1, 2.0, 16).unwrap();
        let ind = sample_real(|x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 }, &g).unwrap();
        for idx in 0..g.len() {
            let x = g.point(idx)[0];
            assert_eq!(ind.value(idx).re, if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 });
        }
        assert!(matches!(
            sample_real(|x| 1.0 / x[0], &g),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::new(1, 2.0, 4096).unwrap();
        let one = sample_real(|_| 1.0, &g).unwrap();
        let unit = Cube::from_corner(&[0.0], 1.0).unwrap();
        assert_eq!(integrate(&one, &unit).re, 1.0);
        let odd = sample_real(|x| x[0].powi(3), &g).unwrap();
        let centered = Cube::new(vec![0.0], 1.0).unwrap();
        // Half-open cube at the origin: the lone unmatched sample is x = -1/2.
        let v = integrate(&odd, &Cube::new(vec![g.spacing() / 2.0], 1.0 + g.spacing()).unwrap());
        assert!(v.norm() < 1e-12);
        assert!(integrate(&odd, &centered).norm() < 1e-3);
        // x^2 on [0,1): samples sit at the left edge of each cell, so the
        // rule is first order. Oracle: h^3 sum_{k<M} k^2 in closed form, and
        // the antiderivative 1/3 up to the h/2 boundary term.
        let sq = sample_real(|x| x[0] * x[0], &g).unwrap();
        let h = g.spacing();
        let m = (1.0 / h).round();
        let riemann = h.powi(3) * (m - 1.0) * m * (2.0 * m - 1.0) / 6.0;
        let got = integrate(&sq, &unit).re;
        assert!((got - riemann).abs() < 1e-13);
        assert!((got - (1.0 / 3.0 - h / 2.0)).abs() < h * h);
        // Outside the box.
        let far = Cube::new(vec![10.0], 1.0).unwrap();
        assert_eq!(integrate(&one, &far).re, 0.0);
    }

    #[test]
    fn dyadic_counts() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        assert_eq!(enumerate_dyadic_cubes(&g, 0, 1).unwrap().len(), 6);
        assert_eq!(enumerate_dyadic_cubes(&g, 0, 0).unwrap().len(), 2);
        let g2 = Grid::new(2, 1.0, 16).unwrap();
        assert_eq!(enumerate_dyadic_cubes(&g2, 0, 0).unwrap().len(), 4);
        assert!(enumerate_dyadic_cubes(&g, 1, 0).is_err());
        assert!(enumerate_dyadic_cubes(&g, -2, 0).is_err());
        // h = 1/8: level 3 is the finest admissible
        assert!(enumerate_dyadic_cubes(&g, 0, 3).is_ok());
        assert!(enumerate_dyadic_cubes(&g, 0, 4).is_err());
    }

    #[test]
    fn dyadic_level_partitions_box() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 2.0, 32).unwrap();
            for j in [-1, 0, 2] {
                let fam = enumerate_dyadic_cubes(&g, j, j).unwrap();
                let mut count = vec![0u32; g.len()];
                for c in fam.cubes() {
                    c.for_each_index(&g, |i| count[i] += 1);
                }
                assert!(count.iter().all(|&c| c == 1), "dim {dim} level {j}");
            }
        }
    }

    #[test]
    fn translated_family() {
        let g = Grid::new(1, 2.0, 64).unwrap();
        let fam = translate_cube_family(&g, &[1.0], 2).unwrap();
        let centers: Vec<f64> = fam.cubes().iter().map(|c| c.center[0]).collect();
        assert_eq!(centers, vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]);
        assert!(translate_cube_family(&g, &[], 2).is_err());
        let both = translate_cube_family(&g, &[0.5, 1.0], 4).unwrap();
        let mut keys: Vec<_> = both.cubes().iter().map(cube_key).collect();
        let n = keys.len();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), n);
        assert_eq!(n, 32 + 16);
    }

    #[test]
    fn dyadic_containment() {
        let parent = DyadicCube::new(0, vec![-1]);
        assert!(parent.contains(&DyadicCube::new(2, vec![-4])));
        assert!(parent.contains(&DyadicCube::new(2, vec![-1])));
        assert!(!parent.contains(&DyadicCube::new(2, vec![0])));
        assert!(!parent.contains(&DyadicCube::new(-1, vec![-1])));
    }

    #[test]
    fn prefix_sum_matches_direct() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let w: Vec<f64> = (0..g.len()).map(|i| (i % 7) as f64 * 0.3).collect();
        let ps = PrefixSum::new(&g, &w);
        let c = Cube::new(vec![0.1, -0.3], 0.77).unwrap();
        assert_relative_eq!(ps.cube_integral(&c), integrate_real(&g, &w, &c), max_relative = 1e-12);
    }
    #[test]
    fn compress_samples_exactly() {
        let g = Grid::new(1, 4.0, 64).unwrap();
        let f = sample_real(|x| (-x[0] * x[0]).exp() * x[0], &g).unwrap();
        let c = compress(&f, 4).unwrap();
        let oracle = sample_real(|x| if (-4.0..4.0).contains(&(4.0 * x[0])) { (-16.0 * x[0] * x[0]).exp() * 4.0 * x[0] } else { 0.0 }, &g).unwrap();
        assert!(c.max_abs_diff(&oracle).unwrap() < 1e-14);
        assert!(compress(&f, 3).is_err());
    }
}
