//! Spectral to temporal two-photon amplitudes.
//!
//! Forward transform: `F(t) = (1/2π)∫∫ F(Ω) e^{-i(Ω_s t_s + Ω_i t_i)} dΩ_s dΩ_i`,
//! which with the fiber phase `e^{+ik''l Ω²/2}` puts the far field at
//! `t = +k''l·Ω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::dispersion::FiberSpec;
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2, Normalization, TpsaGrid, TptaGrid};

/// The far field is trusted once `k''l ≥ FAR_FIELD_MARGIN / ΔΩ_feature²`.
pub const FAR_FIELD_MARGIN: f64 = 10.0;

/// Time axis conjugate to a frequency axis of `n` points spaced `step`:
/// `t_m = (m − n/2)·2π/(n·step)`.
pub fn conjugate_axis(frequency: &Axis) -> Axis {
    let dt = 2.0 * PI / (frequency.len as f64 * frequency.step);
    Axis::new(-((frequency.len / 2) as f64) * dt, dt, frequency.len)
}

/// Frequency axis recovered from a conjugate time axis, symmetric about zero.
pub fn frequency_axis_for(time: &Axis) -> Axis {
    let dw = 2.0 * PI / (time.len as f64 * time.step);
    Axis::symmetric(0.5 * (time.len - 1) as f64 * dw, time.len)
}

struct Line {
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    /// `e^{∓iΩ₀t_m}` for the forward / inverse directions.
    twiddle: Vec<Complex64>,
    scale: f64,
    direction: FftDirection,
}

impl Line {
    fn new(planner: &mut FftPlanner<f64>, frequency: &Axis, direction: FftDirection) -> Line {
        let n = frequency.len;
        let time = conjugate_axis(frequency);
        let sign = match direction {
            FftDirection::Forward => -1.0,
            FftDirection::Inverse => 1.0,
        };
        let twiddle = time.values().map(|t| Complex64::from_polar(1.0, sign * frequency.start * t)).collect();
        let scale = match direction {
            FftDirection::Forward => frequency.step,
            FftDirection::Inverse => time.step,
        } / (2.0 * PI).sqrt();
        Line { fft: planner.plan_fft(n, direction), twiddle, scale, direction }
    }

    fn apply(&self, buf: &mut [Complex64]) {
        match self.direction {
            FftDirection::Forward => {
                alternate(buf);
                self.fft.process(buf);
                for (v, w) in buf.iter_mut().zip(&self.twiddle) {
                    *v *= w * self.scale;
                }
            }
            FftDirection::Inverse => {
                for (v, w) in buf.iter_mut().zip(&self.twiddle) {
                    *v *= w;
                }
                self.fft.process(buf);
                alternate(buf);
                buf.iter_mut().for_each(|v| *v *= self.scale);
            }
        }
    }
}

fn alternate(buf: &mut [Complex64]) {
    buf.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
}

fn check_even(axis: &Axis) -> Result<()> {
    if axis.len < 2 || !axis.len.is_multiple_of(2) {
        return Err(Error::config(format!("transform needs an even number of points, got {}", axis.len)));
    }
    Ok(())
}

/// Applies the 1D transform along both axes of a frequency-domain grid
/// (`direction` forward) or a time-domain grid (inverse, with the frequency
/// axes supplied).
fn transform2(values: &mut Grid2<Complex64>, rows: &Axis, cols: &Axis, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_line = Line::new(&mut planner, cols, direction);
    let col_line = Line::new(&mut planner, rows, direction);
    let ncols = values.cols.len;
    for row in values.data_mut().chunks_exact_mut(ncols) {
        row_line.apply(row);
    }
    let nrows = values.rows.len;
    let mut column = vec![Complex64::default(); nrows];
    for k in 0..ncols {
        for (j, c) in column.iter_mut().enumerate() {
            *c = values.get(j, k);
        }
        col_line.apply(&mut column);
        for (j, c) in column.iter().enumerate() {
            values.set(j, k, *c);
        }
    }
}

/// Discrete 2D Fourier transform of the TPSA onto centred time axes.
pub fn tpta_exact(tpsa: &TpsaGrid) -> Result<TptaGrid> {
    let rows = tpsa.values.rows;
    let cols = tpsa.values.cols;
    check_even(&rows)?;
    check_even(&cols)?;
    let mut values = tpsa.values.clone();
    transform2(&mut values, &rows, &cols, FftDirection::Forward);
    values.rows = conjugate_axis(&rows);
    values.cols = conjugate_axis(&cols);
    Ok(TptaGrid { values, norm: tpsa.norm })
}

/// Inverse of [`tpta_exact`] onto the given frequency axes.
pub fn tpsa_from_tpta(tpta: &TptaGrid, rows: Axis, cols: Axis) -> Result<TpsaGrid> {
    check_even(&rows)?;
    check_even(&cols)?;
    if rows.len != tpta.values.rows.len || cols.len != tpta.values.cols.len {
        return Err(Error::config("frequency axes do not match the time grid"));
    }
    let mut values = tpta.values.clone();
    transform2(&mut values, &rows, &cols, FftDirection::Inverse);
    values.rows = rows;
    values.cols = cols;
    let mut out = TpsaGrid::new(values);
    out.norm = tpta.norm;
    Ok(out)
}

/// `tpta_exact(apply_fiber(tpsa, fiber))` evaluated exactly on the far-field
/// sample points `t = k''l·Ω`.
///
/// The chirp is factored out of the transform (the Fresnel kernel
/// `e^{-i(t−s)²/(2k''l)}` split into two chirps around one transform), so the
/// rapidly varying fiber phase is never sampled on the frequency grid.
pub fn tpta_dispersed(tpsa: &TpsaGrid, fiber: &FiberSpec) -> Result<TptaGrid> {
    let beta = fiber.far_field_scale();
    if beta == 0.0 {
        return Err(Error::domain("dispersed transform needs a fiber with k''l != 0"));
    }
    let rows = tpsa.values.rows;
    let cols = tpsa.values.cols;
    check_even(&rows)?;
    check_even(&cols)?;
    let mut values = tpsa.values.clone();
    transform2(&mut values, &rows, &cols, FftDirection::Forward);
    let (tr, tc) = (conjugate_axis(&rows), conjugate_axis(&cols));
    values.rows = tr;
    values.cols = tc;
    values.modulate(|ts, ti| Complex64::from_polar(1.0, -(ts * ts + ti * ti) / (2.0 * beta)));
    transform2(&mut values, &rows, &cols, FftDirection::Inverse);
    values.rows = rows;
    values.cols = cols;
    let prefactor = Complex64::i() / beta;
    values.modulate(|ws, wi| prefactor * Complex64::from_polar(1.0, -0.5 * beta * (ws * ws + wi * wi)));
    values.rows = rows.scaled(beta);
    values.cols = cols.scaled(beta);
    Ok(TptaGrid { values, norm: tpsa.norm })
}

/// Far-field TPTA: the source TPSA read at `Ω = t/(k''l)` on the sample
/// points `t = k''l·Ω_j`, peak-normalized.
pub fn tpta_far_field(tpsa: &TpsaGrid, fiber: &FiberSpec) -> Result<TptaGrid> {
    let beta = checked_scale(fiber)?;
    warn_if_near_field(tpsa, fiber);
    let mut values = tpsa.values.clone();
    values.rows = values.rows.scaled(beta);
    values.cols = values.cols.scaled(beta);
    Ok(TptaGrid { values, norm: Normalization::Unnormalized }.peak_normalized())
}

/// Far-field TPTA bilinearly resampled onto arbitrary time axes.
pub fn tpta_far_field_on(tpsa: &TpsaGrid, fiber: &FiberSpec, ts: Axis, ti: Axis) -> Result<TptaGrid> {
    let beta = checked_scale(fiber)?;
    warn_if_near_field(tpsa, fiber);
    let values = Grid2::from_fn(ts, ti, |a, b| tpsa.values.sample_bilinear(a / beta, b / beta));
    Ok(TptaGrid { values, norm: Normalization::Unnormalized }.peak_normalized())
}

fn checked_scale(fiber: &FiberSpec) -> Result<f64> {
    let beta = fiber.far_field_scale();
    if beta == 0.0 {
        return Err(Error::domain("far-field undefined: fiber length or GVD is zero"));
    }
    Ok(beta)
}

/// RMS width (rad/s) of the narrower intensity marginal; a proxy for the
/// smallest spectral feature the far field has to resolve.
pub fn feature_width(tpsa: &TpsaGrid) -> f64 {
    let intensity = tpsa.intensity();
    let rows: Vec<f64> = (0..intensity.rows.len).map(|j| intensity.row(j).iter().sum()).collect();
    let cols: Vec<f64> = (0..intensity.cols.len).map(|k| intensity.column(k).iter().sum()).collect();
    rms_width(&intensity.rows, &rows).min(rms_width(&intensity.cols, &cols))
}

fn rms_width(axis: &Axis, weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = axis.values().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
    (axis.values().zip(weights).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total).sqrt()
}

/// Whether `k''l` is large enough for the scaling law at this feature size.
pub fn far_field_valid(fiber: &FiberSpec, feature: f64) -> bool {
    feature > 0.0 && fiber.far_field_scale().abs() >= FAR_FIELD_MARGIN / (feature * feature)
}

fn warn_if_near_field(tpsa: &TpsaGrid, fiber: &FiberSpec) {
    let feature = feature_width(tpsa);
    if !far_field_valid(fiber, feature) {
        log::warn!(
            "k''l = {:.3e} s^2 is below the far-field threshold {:.3e} s^2 for a {:.3e} rad/s feature",
            fiber.far_field_scale(),
            FAR_FIELD_MARGIN / (feature * feature),
            feature
        );
    }
}

/// `‖|a|/max|a| − |b|/max|b|‖₂ / ‖|b|/max|b|‖₂` over samples taken at the same
/// points; `b` is the reference.
pub fn normalized_l2_discrepancy(a: &Grid2<Complex64>, b: &Grid2<Complex64>) -> Result<f64> {
    if a.rows.len != b.rows.len || a.cols.len != b.cols.len {
        return Err(Error::config("grids differ in shape"));
    }
    let (pa, pb) = (a.max_modulus(), b.max_modulus());
    if pa == 0.0 || pb == 0.0 {
        return Err(Error::domain("cannot compare an all-zero grid"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data()) {
        let (u, v) = (x.norm() / pa, y.norm() / pb);
        num += (u - v).powi(2);
        den += v * v;
    }
    Ok((num / den).sqrt())
}
