//! Periodic grids, spectral calculus and the Sobolev-type norms used by the
//! energy functionals.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic tensor grid on `[0, L_x) x [0, L_y)`. In one dimension the second
/// axis is degenerate (`n = 1`).
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    length: [f64; 2],
    modes: [Vec<i64>; 2],
    xi: [Vec<f64>; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &&self.n[..self.dim])
            .field("length", &&self.length[..self.dim])
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

fn signed_modes(n: usize) -> Vec<i64> {
    (0..n)
        .map(|m| {
            if m < n / 2 || n == 1 {
                m as i64
            } else {
                m as i64 - n as i64
            }
        })
        .collect()
}

impl Grid {
    pub fn new(dim: usize, n: &[usize], length: &[f64]) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::ConfigInvalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n.len() != dim || length.len() != dim {
            return Err(Error::ConfigInvalid(format!(
                "expected {dim} grid sizes and lengths, got {} and {}",
                n.len(),
                length.len()
            )));
        }
        for &k in n {
            if k < 4 || !k.is_power_of_two() {
                return Err(Error::ConfigInvalid(format!(
                    "grid size must be a power of two >= 4, got {k}"
                )));
            }
        }
        for &l in length {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::ConfigInvalid(format!("domain length must be positive, got {l}")));
            }
        }
        let nn = [n[0], if dim == 2 { n[1] } else { 1 }];
        let ll = [length[0], if dim == 2 { length[1] } else { 1.0 }];
        let mut planner = FftPlanner::new();
        let modes = [signed_modes(nn[0]), signed_modes(nn[1])];
        let xi = [0, 1].map(|a| {
            modes[a]
                .iter()
                .map(|&m| {
                    if nn[a] == 1 {
                        0.0
                    } else {
                        2.0 * std::f64::consts::PI * m as f64 / ll[a]
                    }
                })
                .collect::<Vec<_>>()
        });
        Ok(Arc::new(Self {
            dim,
            n: nn,
            length: ll,
            modes,
            xi,
            fwd: [planner.plan_fft_forward(nn[0]), planner.plan_fft_forward(nn[1])],
            inv: [planner.plan_fft_inverse(nn[0]), planner.plan_fft_inverse(nn[1])],
        }))
    }

    pub fn line(n: usize, length: f64) -> Result<Arc<Self>> {
        Self::new(1, &[n], &[length])
    }

    pub fn plane(n: [usize; 2], length: [f64; 2]) -> Result<Arc<Self>> {
        Self::new(2, &n, &length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.n[..self.dim].to_vec()
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.length[axis]
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.length[..self.dim].to_vec()
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.length[..self.dim].iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Signed mode numbers of an axis; the Nyquist mode is `-n/2`.
    pub fn modes(&self, axis: usize) -> &[i64] {
        &self.modes[axis]
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.xi[axis]
    }

    pub fn is_nyquist(&self, axis: usize, idx: usize) -> bool {
        self.n[axis] > 1 && idx == self.n[axis] / 2
    }

    /// Largest retained mode number per axis after dealiasing.
    pub fn cutoff(&self, axis: usize) -> usize {
        if self.n[axis] == 1 {
            0
        } else {
            self.n[axis] / 3
        }
    }

    /// Largest `|xi|` surviving the dealiasing mask.
    pub fn max_retained_wavenumber(&self) -> f64 {
        (0..self.dim)
            .map(|a| (2.0 * std::f64::consts::PI * self.cutoff(a) as f64 / self.length[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n[1], idx % self.n[1])
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.split(idx);
        [
            self.length[0] * i as f64 / self.n[0] as f64,
            if self.dim == 2 {
                self.length[1] * j as f64 / self.n[1] as f64
            } else {
                0.0
            },
        ]
    }

    /// Signed mode numbers and wavevector of flat index `idx`.
    pub fn mode_at(&self, idx: usize) -> ([i64; 2], [f64; 2]) {
        let (i, j) = self.split(idx);
        (
            [self.modes[0][i], self.modes[1][j]],
            [self.xi[0][i], self.xi[1][j]],
        )
    }

    pub fn index_of_mode(&self, m: [i64; 2]) -> usize {
        let wrap = |m: i64, n: usize| m.rem_euclid(n as i64) as usize;
        wrap(m[0], self.n[0]) * self.n[1] + wrap(m[1], self.n[1])
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        let (m, _) = self.mode_at(idx);
        (0..2).all(|a| m[a].unsigned_abs() as usize <= self.cutoff(a))
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [nx, ny] = self.n;
        if ny > 1 {
            for row in data.chunks_exact_mut(ny) {
                plans[1].process(row);
            }
        }
        if ny == 1 {
            plans[0].process(data);
        } else {
            let mut col = vec![Complex64::default(); nx];
            for j in 0..ny {
                for i in 0..nx {
                    col[i] = data[i * ny + j];
                }
                plans[0].process(&mut col);
                for i in 0..nx {
                    data[i * ny + j] = col[i];
                }
            }
        }
    }

    /// Unnormalised forward transform.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    /// Inverse transform (normalised), keeping the real part.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spec, &self.inv);
        let scale = 1.0 / self.len() as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Apply a Fourier multiplier given as a function of `(modes, wavevector)`.
    pub fn apply_symbol<F>(&self, values: &[f64], symbol: F) -> Vec<f64>
    where
        F: Fn([i64; 2], [f64; 2], usize) -> Complex64,
    {
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            let (m, k) = self.mode_at(idx);
            *c *= symbol(m, k, idx);
        }
        self.inverse(spec)
    }

    /// `(1 + |xi|^2)^s` for flat index `idx`.
    pub fn sobolev_weight(&self, idx: usize, s: f64) -> f64 {
        let (_, k) = self.mode_at(idx);
        (1.0 + k[0] * k[0] + k[1] * k[1]).powf(s)
    }
}

/// Real scalar field sampled on the grid nodes.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.point(i);
                f(x, y)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Real field with the given Fourier coefficients. Only the Hermitian part
    /// of the supplied spectrum survives.
    pub fn from_spectrum(grid: &Arc<Grid>, spec: Vec<Complex64>) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.inverse(spec),
        }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Spectral derivative of the given order along `axis`.
    pub fn derivative(&self, axis: usize, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let grid = &self.grid;
        let values = grid.apply_symbol(&self.values, |_, k, idx| {
            let (i, j) = grid.split(idx);
            let along = if axis == 0 { i } else { j };
            if order % 2 == 1 && grid.is_nyquist(axis, along) {
                return Complex64::default();
            }
            Complex64::new(0.0, k[axis]).powu(order)
        });
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn dx(&self) -> Self {
        self.derivative(0, 1)
    }

    pub fn dxx(&self) -> Self {
        self.derivative(0, 2)
    }

    pub fn laplacian(&self) -> Self {
        self.grid_apply(|k| Complex64::new(-(k[0] * k[0] + k[1] * k[1]), 0.0))
    }

    pub fn gradient(&self) -> VectorField {
        VectorField {
            components: (0..self.grid.dim).map(|a| self.derivative(a, 1)).collect(),
        }
    }

    fn grid_apply(&self, symbol: impl Fn([f64; 2]) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.grid.apply_symbol(&self.values, |_, k, _| symbol(k)),
        }
    }

    /// Zero every mode outside the dealiasing mask.
    pub fn dealias(&self) -> Self {
        let grid = &self.grid;
        let values = grid.apply_symbol(&self.values, |_, _, idx| {
            if grid.is_retained(idx) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Pointwise product projected onto the retained modes.
    pub fn dealias_product(&self, other: &ScalarField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.mul_pointwise(other).dealias())
    }

    /// Plain pointwise product (no projection).
    pub fn mul_pointwise(&self, other: &ScalarField) -> Self {
        debug_assert!(same_grid(&self.grid, &other.grid));
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Grid quadrature of `f g`, exact for band-limited products.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        sum * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// `(f | g)_{H^s}` through the multiplier `(1 + |xi|^2)^s`.
    pub fn sobolev_inner(&self, other: &ScalarField, s: f64) -> f64 {
        let a = self.spectrum();
        let b = other.spectrum();
        let sum: f64 = (0..a.len())
            .map(|i| self.grid.sobolev_weight(i, s) * (a[i] * b[i].conj()).re)
            .sum();
        sum * self.grid.volume() / (self.grid.len() as f64).powi(2)
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let a = self.spectrum();
        let sum: f64 = a
            .iter()
            .enumerate()
            .map(|(i, c)| self.grid.sobolev_weight(i, s) * c.norm_sqr())
            .sum();
        (sum * self.grid.volume() / (self.grid.len() as f64).powi(2)).sqrt()
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                assert!(same_grid(&self.grid, &rhs.grid), "grid mismatch");
                ScalarField {
                    grid: self.grid.clone(),
                    values: self.values.iter().zip(&rhs.values).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                (&self).$method(rhs)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, c: f64) -> ScalarField {
        self.map(|v| v * c)
    }
}

impl Mul<f64> for ScalarField {
    type Output = ScalarField;
    fn mul(mut self, c: f64) -> ScalarField {
        self.values.iter_mut().for_each(|v| *v *= c);
        self
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self * -1.0
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        assert!(same_grid(&self.grid, &rhs.grid), "grid mismatch");
        self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a += b);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        assert!(same_grid(&self.grid, &rhs.grid), "grid mismatch");
        self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a -= b);
    }
}

/// `n`-component vector field on an `n`-dimensional grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = components.first().ok_or(Error::GridMismatch)?.grid.clone();
        if components.len() != grid.dim() || components.iter().any(|c| !same_grid(&c.grid, &grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.components[0].grid
    }

    pub fn divergence(&self) -> ScalarField {
        let mut out = self.components[0].derivative(0, 1);
        for (a, c) in self.components.iter().enumerate().skip(1) {
            out += &c.derivative(a, 1);
        }
        out
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn dealias(&self) -> Self {
        self.map_components(ScalarField::dealias)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|f| f * c)
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x += c * y);
        }
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn sobolev_inner(&self, other: &VectorField, s: f64) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sobolev_inner(b, s))
            .sum()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.sobolev_norm(s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a VectorField),
}

impl<'a> From<&'a ScalarField> for FieldRef<'a> {
    fn from(f: &'a ScalarField) -> Self {
        FieldRef::Scalar(f)
    }
}

impl<'a> From<&'a VectorField> for FieldRef<'a> {
    fn from(f: &'a VectorField) -> Self {
        FieldRef::Vector(f)
    }
}

/// Parameters of an `X^s_{eps^k}` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub k: u32,
    pub epsilon: f64,
    pub vector_mode: bool,
}

impl NormSpec {
    pub fn scalar(s: f64, k: u32, epsilon: f64) -> Self {
        Self {
            s,
            k,
            epsilon,
            vector_mode: false,
        }
    }

    pub fn vector(s: f64, k: u32, epsilon: f64) -> Self {
        Self {
            s,
            k,
            epsilon,
            vector_mode: true,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::ConfigInvalid(format!("Sobolev index must be >= 0, got {}", self.s)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Squared `X^s_{eps^k}` norm.
pub fn x_norm_sq<'a>(f: impl Into<FieldRef<'a>>, spec: NormSpec) -> Result<f64> {
    spec.check()?;
    let weight = spec.epsilon.powi(spec.k as i32);
    match (f.into(), spec.vector_mode) {
        (FieldRef::Scalar(u), false) => {
            let base = u.sobolev_norm(spec.s).powi(2);
            let top = if spec.k == 0 {
                base
            } else {
                u.sobolev_norm(spec.s + spec.k as f64).powi(2)
            };
            Ok(base + weight * top)
        }
        (FieldRef::Vector(u), true) => {
            let base = u.sobolev_norm(spec.s).powi(2);
            let div = u.divergence().sobolev_norm(spec.s + spec.k as f64 - 1.0);
            Ok(base + weight * div * div)
        }
        (FieldRef::Scalar(_), true) => Err(Error::ModeMismatch(
            "vector norm requested for a scalar field".into(),
        )),
        (FieldRef::Vector(_), false) => Err(Error::ModeMismatch(
            "scalar norm requested for a vector field".into(),
        )),
    }
}

pub fn x_norm<'a>(f: impl Into<FieldRef<'a>>, spec: NormSpec) -> Result<f64> {
    x_norm_sq(f, spec).map(f64::sqrt)
}

/// Slack of `eps^{j/2} |d^j f| <= |f|^{1-j/k} (eps^{k/2} |d^k f|)^{j/k}`.
pub fn check_interpolation(f: &ScalarField, j: u32, k: u32, epsilon: f64) -> Result<f64> {
    if j == 0 || j >= k {
        return Err(Error::InvalidOrder(format!("need 0 < j < k, got j = {j}, k = {k}")));
    }
    let base = f.l2_norm();
    if base == 0.0 {
        return Err(Error::ZeroField);
    }
    let dj = f.derivative(0, j).l2_norm();
    let dk = f.derivative(0, k).l2_norm();
    let theta = j as f64 / k as f64;
    let rhs = base.powf(1.0 - theta) * (epsilon.powf(k as f64 / 2.0) * dk).powf(theta);
    Ok(rhs - epsilon.powf(j as f64 / 2.0) * dj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dim: usize,
    pub n: Vec<usize>,
    #[serde(rename = "L")]
    pub length: Vec<f64>,
    pub columns: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
}

/// Write named fields as CSV (node coordinates followed by one column per
/// field) with a JSON sidecar next to it.
pub fn write_snapshot(path: &Path, columns: &[(&str, &ScalarField)], t: Option<f64>) -> Result<()> {
    let grid = &columns.first().ok_or(Error::GridMismatch)?.1.grid;
    for (_, f) in columns {
        if !same_grid(grid, &f.grid) {
            return Err(Error::GridMismatch);
        }
    }
    let mut out = String::new();
    let coords = if grid.dim() == 1 { vec!["x"] } else { vec!["x", "y"] };
    let names: Vec<&str> = coords
        .iter()
        .copied()
        .chain(columns.iter().map(|(n, _)| *n))
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..grid.len() {
        let p = grid.point(i);
        let mut row: Vec<String> = p[..grid.dim()].iter().map(|v| format!("{v:.17e}")).collect();
        row.extend(columns.iter().map(|(_, f)| format!("{:.17e}", f.values[i])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    let meta = SnapshotMeta {
        dim: grid.dim(),
        n: grid.sizes(),
        length: grid.lengths(),
        columns: columns.iter().map(|(n, _)| n.to_string()).collect(),
        t,
    };
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(SnapshotMeta, Vec<ScalarField>)> {
    let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
    let grid = Grid::new(meta.dim, &meta.n, &meta.length)?;
    let text = std::fs::read_to_string(path)?;
    let mut cols = vec![Vec::with_capacity(grid.len()); meta.columns.len()];
    for line in text.lines().skip(1) {
        let vals: Vec<f64> = line
            .split(',')
            .skip(meta.dim)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::ConfigInvalid(format!("bad snapshot value: {e}")))?;
        if vals.len() != cols.len() {
            return Err(Error::ConfigInvalid("snapshot row has wrong width".into()));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let fields = cols
        .into_iter()
        .map(|v| ScalarField::from_values(&grid, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, fields))
}
