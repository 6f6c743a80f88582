//! Uniform 1D axes and row-major 2D grids.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default points per axis for the frequency grid.
pub const DEFAULT_POINTS: usize = 1024;
/// Default half span (rad/s) of the frequency grid.
pub const DEFAULT_OMEGA_MAX: f64 = 8e13;
/// Smallest accepted points per axis.
pub const MIN_POINTS: usize = 64;
/// The grid span must be at least this multiple of every declared bandwidth.
pub const COVERAGE_FACTOR: f64 = 4.0;

/// Uniform axis `start + i·step`, `i ∈ [0, len)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Axis { start, step, len }
    }

    /// `len` points spanning `[-half_span, half_span]` inclusive.
    pub fn symmetric(half_span: f64, len: usize) -> Self {
        Axis { start: -half_span, step: 2.0 * half_span / (len - 1) as f64, len }
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.value(i))
    }

    /// Fractional index of coordinate `x`.
    #[inline]
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }

    /// Index of the sample closest to `x`, clamped to the axis.
    pub fn nearest(&self, x: f64) -> usize {
        self.position(x).round().clamp(0.0, (self.len - 1) as f64) as usize
    }

    pub fn scaled(&self, factor: f64) -> Axis {
        Axis { start: self.start * factor, step: self.step * factor, len: self.len }
    }
}

/// Square frequency grid shared by the signal and idler detunings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    axis: Axis,
    omega_max: f64,
}

impl FrequencyGrid {
    pub fn new(points: usize, omega_max: f64) -> Result<Self> {
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::config(format!(
                "grid points must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(Error::config(format!("grid half span must be > 0, got {omega_max}")));
        }
        Ok(FrequencyGrid { axis: Axis::symmetric(omega_max, points), omega_max })
    }

    pub fn points(&self) -> usize {
        self.axis.len
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn step(&self) -> f64 {
        self.axis.step
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Checks that the full span `2Ω_max` is at least
    /// [`COVERAGE_FACTOR`] times every named bandwidth (rad/s).
    pub fn check_coverage(&self, bandwidths: &[(&str, f64)]) -> Result<()> {
        let span = 2.0 * self.omega_max;
        for &(name, width) in bandwidths {
            if span < COVERAGE_FACTOR * width {
                return Err(Error::config(format!(
                    "grid span {span:.3e} rad/s covers less than {COVERAGE_FACTOR}x the {name} bandwidth {width:.3e} rad/s"
                )));
            }
        }
        Ok(())
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::new(DEFAULT_POINTS, DEFAULT_OMEGA_MAX).expect("default grid is valid")
    }
}

/// Row-major 2D samples; element `[j, k]` sits at `(rows.value(j), cols.value(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<T> {
    pub rows: Axis,
    pub cols: Axis,
    data: Vec<T>,
}

impl<T: Copy> Grid2<T> {
    pub fn from_fn(rows: Axis, cols: Axis, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(rows.len * cols.len);
        for j in 0..rows.len {
            let x = rows.value(j);
            for k in 0..cols.len {
                data.push(f(x, cols.value(k)));
            }
        }
        Grid2 { rows, cols, data }
    }

    pub fn from_vec(rows: Axis, cols: Axis, data: Vec<T>) -> Result<Self> {
        if data.len() != rows.len * cols.len {
            return Err(Error::config(format!(
                "grid data has {} values, axes need {}",
                data.len(),
                rows.len * cols.len
            )));
        }
        Ok(Grid2 { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> T {
        self.data[j * self.cols.len + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: T) {
        let n = self.cols.len;
        self.data[j * n + k] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.cols.len..(j + 1) * self.cols.len]
    }

    pub fn column(&self, k: usize) -> Vec<T> {
        (0..self.rows.len).map(|j| self.get(j, k)).collect()
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid2<U> {
        Grid2 { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Multiplies every element by `f(x, y)`.
    pub fn modulate<U>(&mut self, f: impl Fn(f64, f64) -> U)
    where
        T: Mul<U, Output = T>,
    {
        let n = self.cols.len;
        for (j, row) in self.data.chunks_mut(n).enumerate() {
            let x = self.rows.value(j);
            for (k, v) in row.iter_mut().enumerate() {
                *v = *v * f(x, self.cols.value(k));
            }
        }
    }
}

impl<T> Grid2<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    /// Bilinear interpolation at `(x, y)`; zero outside the sampled square.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> T {
        let px = self.rows.position(x);
        let py = self.cols.position(y);
        let max_x = (self.rows.len - 1) as f64;
        let max_y = (self.cols.len - 1) as f64;
        // Tolerate rounding at the edges so exact lattice points stay inside.
        const EDGE: f64 = 1e-9;
        if !(px >= -EDGE && px <= max_x + EDGE && py >= -EDGE && py <= max_y + EDGE) {
            return T::default();
        }
        let px = px.clamp(0.0, max_x);
        let py = py.clamp(0.0, max_y);
        let j0 = (px.floor() as usize).min(self.rows.len.saturating_sub(2));
        let k0 = (py.floor() as usize).min(self.cols.len.saturating_sub(2));
        let fx = px - j0 as f64;
        let fy = py - k0 as f64;
        let v00 = self.get(j0, k0);
        let v01 = self.get(j0, k0 + 1);
        let v10 = self.get(j0 + 1, k0);
        let v11 = self.get(j0 + 1, k0 + 1);
        v00 * ((1.0 - fx) * (1.0 - fy)) + v01 * ((1.0 - fx) * fy) + v10 * (fx * (1.0 - fy)) + v11 * (fx * fy)
    }
}

impl Grid2<f64> {
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

impl Grid2<Complex64> {
    /// `Σ|F|²·Δx·Δy`.
    pub fn norm_sqr_integral(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.rows.step.abs() * self.cols.step.abs()
    }

    pub fn intensity(&self) -> Grid2<f64> {
        self.map(|v| v.norm_sqr())
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Orientation of a spectral grid, in units of 45° rotations away from the
/// `(Ω_s, Ω_i)` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame(pub u8);

impl Frame {
    pub const SIGNAL_IDLER: Frame = Frame(0);
    /// `(Ω₊, Ω₋)` with `Ω± = (Ω_i ± Ω_s)/√2`.
    pub const PLUS_MINUS: Frame = Frame(1);

    pub fn rotated(self) -> Frame {
        Frame((self.0 + 1) % 8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Unnormalized,
    /// `Σ|F|²·δΩ² = 1`.
    Unit,
    /// `max|F| = 1`.
    Peak,
}

/// Two-photon spectral amplitude `F(Ω_s, Ω_i)` on a uniform grid; rows are
/// signal detuning and columns idler detuning (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct TpsaGrid {
    pub values: Grid2<Complex64>,
    pub frame: Frame,
    pub norm: Normalization,
}

impl TpsaGrid {
    pub fn new(values: Grid2<Complex64>) -> Self {
        TpsaGrid { values, frame: Frame::SIGNAL_IDLER, norm: Normalization::Unnormalized }
    }

    pub fn total_probability(&self) -> f64 {
        self.values.norm_sqr_integral()
    }

    /// Rescales to unit total probability; an all-zero grid is left as is.
    pub fn normalize(&mut self) {
        let total = self.total_probability();
        if total > 0.0 {
            let scale = total.sqrt().recip();
            self.values.data_mut().iter_mut().for_each(|v| *v *= scale);
            self.norm = Normalization::Unit;
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn intensity(&self) -> Grid2<f64> {
        self.values.intensity()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.data().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numeric("non-finite TPSA entry".into()))
        }
    }
}

/// Two-photon time amplitude `F(t_s, t_i)`; rows are signal arrival time and
/// columns idler arrival time (s).
#[derive(Debug, Clone, PartialEq)]
pub struct TptaGrid {
    pub values: Grid2<Complex64>,
    pub norm: Normalization,
}

impl TptaGrid {
    pub fn total_probability(&self) -> f64 {
        self.values.norm_sqr_integral()
    }

    pub fn peak_normalized(mut self) -> Self {
        let peak = self.values.max_modulus();
        if peak > 0.0 {
            self.values.data_mut().iter_mut().for_each(|v| *v /= peak);
            self.norm = Normalization::Peak;
        }
        self
    }
}
