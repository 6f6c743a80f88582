//! Construction and manipulation of the two-photon spectral amplitude.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::dispersion::{
    phase_mismatch, wavelength_width_to_angular, CrystalSpec, FiberSpec, Polarization, SellmeierCoefficients,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, Frame, FrequencyGrid, Grid2, TpsaGrid};
use crate::pump::PumpSpec;

/// `sinc²(x) = 1/2` at this `x`.
const SINC_SQ_HALF_POINT: f64 = 1.391_557_377_3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TpsaOptions {
    /// Keep the `e^{iΔkL/2}` factor of the phase-matching function.
    pub include_phase_matching_phase: bool,
}

/// `sin(x)/x` with the removable singularity at 0.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Phase-matching intensity FWHM (rad/s) along the signal and idler axes,
/// from the linearized mismatch `Δk ≈ (k'_p − k'_s)Ω_s + (k'_p − k'_i)Ω_i`.
pub fn phase_matching_bandwidths(crystal: &CrystalSpec) -> Result<(f64, f64)> {
    let sellmeier = SellmeierCoefficients::bbo();
    let w0 = crystal.degenerate_frequency();
    let e = crystal.extraordinary();
    let kp = sellmeier.inverse_group_velocity(2.0 * w0, e)?;
    let ks = sellmeier.inverse_group_velocity(w0, Polarization::Ordinary)?;
    let ki = sellmeier.inverse_group_velocity(w0, e)?;
    let width = |dk1: f64| 4.0 * SINC_SQ_HALF_POINT / (crystal.length * dk1.abs());
    Ok((width(kp - ks), width(kp - ki)))
}

/// `F(Ω_s, Ω_i) = pump(Ω_s + Ω_i) · sinc(Δk(Ω_s, Ω_i)·L/2)`, normalized to unit
/// total probability.
pub fn build_tpsa(grid: &FrequencyGrid, pump: &PumpSpec, crystal: &CrystalSpec) -> Result<TpsaGrid> {
    build_tpsa_with(grid, pump, crystal, TpsaOptions::default())
}

pub fn build_tpsa_with(
    grid: &FrequencyGrid,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    options: TpsaOptions,
) -> Result<TpsaGrid> {
    if ((pump.wavelength - crystal.pump_wavelength) / crystal.pump_wavelength).abs() > 1e-12 {
        return Err(Error::config(format!(
            "pump wavelength {:.3} nm differs from the crystal's design wavelength {:.3} nm",
            pump.wavelength * 1e9,
            crystal.pump_wavelength * 1e9
        )));
    }
    let (pm_s, pm_i) = phase_matching_bandwidths(crystal)?;
    grid.check_coverage(&[("pump", pump.angular_bandwidth()), ("phase-matching", pm_s.max(pm_i))])?;

    let tpsa = evaluate(grid.axis(), pump, crystal, options)?;
    tpsa.check_finite()?;
    Ok(tpsa)
}

fn evaluate(axis: Axis, pump: &PumpSpec, crystal: &CrystalSpec, options: TpsaOptions) -> Result<TpsaGrid> {
    let half_length = 0.5 * crystal.length;
    let mut data = Vec::with_capacity(axis.len * axis.len);
    for ws in axis.values() {
        for wi in axis.values() {
            let x = phase_mismatch(ws, wi, crystal)? * half_length;
            let mut value = pump.amplitude(ws + wi) * sinc(x);
            if options.include_phase_matching_phase {
                value *= Complex64::from_polar(1.0, x);
            }
            data.push(value);
        }
    }
    Ok(TpsaGrid::new(Grid2::from_vec(axis, axis, data)?).normalized())
}

/// Multiplies by the fiber phase `exp(i·l·k''(Ω_s² + Ω_i²)/2)`. The radius is
/// rotation invariant, so this holds in any frame.
pub fn apply_fiber(tpsa: &TpsaGrid, fiber: &FiberSpec) -> TpsaGrid {
    let mut out = tpsa.clone();
    let half_scale = 0.5 * fiber.far_field_scale();
    if half_scale != 0.0 {
        out.values.modulate(|x, y| Complex64::from_polar(1.0, half_scale * (x * x + y * y)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Signal,
    Idler,
}

/// Gaussian bandpass in front of one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub channel: Channel,
    /// Centre detuning, rad/s.
    pub center: f64,
    /// Intensity FWHM, rad/s; `f64::INFINITY` is a transparent filter.
    pub bandwidth: f64,
}

impl FilterSpec {
    pub fn new(channel: Channel, center: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !center.is_finite() {
            return Err(Error::config(format!("filter bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(FilterSpec { channel, center, bandwidth })
    }

    /// Filter specified by a wavelength FWHM around `carrier` (m), e.g. 1 nm at 808 nm.
    pub fn from_wavelength(channel: Channel, center: f64, bandwidth: f64, carrier: f64) -> Result<Self> {
        FilterSpec::new(channel, center, wavelength_width_to_angular(bandwidth, carrier))
    }

    /// Amplitude transmission at detuning `omega`.
    pub fn amplitude(&self, omega: f64) -> f64 {
        if self.bandwidth.is_infinite() {
            return 1.0;
        }
        let sigma = self.bandwidth / (2.0 * (2.0 * LN_2).sqrt());
        let d = omega - self.center;
        (-d * d / (4.0 * sigma * sigma)).exp()
    }
}

/// Rotates grid coordinates of `frame` back to `(Ω_s, Ω_i)`.
fn to_signal_idler(frame: Frame, x: f64, y: f64) -> (f64, f64) {
    let (mut a, mut b) = (x, y);
    for _ in 0..frame.0 {
        (a, b) = (FRAC_1_SQRT_2 * (a - b), FRAC_1_SQRT_2 * (a + b));
    }
    (a, b)
}

/// Multiplies the amplitude by the filter's transmission along its channel.
pub fn apply_filter(tpsa: &TpsaGrid, filter: &FilterSpec, renormalize: bool) -> TpsaGrid {
    let mut out = tpsa.clone();
    let frame = tpsa.frame;
    out.values.modulate(|x, y| {
        let (ws, wi) = to_signal_idler(frame, x, y);
        match filter.channel {
            Channel::Signal => filter.amplitude(ws),
            Channel::Idler => filter.amplitude(wi),
        }
    });
    if renormalize {
        out.normalize();
    } else {
        out.norm = crate::grid::Normalization::Unnormalized;
    }
    out
}

/// Samples `grid` on axes rotated by 45°: output `(u, v)` takes the input
/// value at `((u − v)/√2, (u + v)/√2)`. The output is a square grid of
/// `2n − 1` points and step `δ/√2` covering the rotated square.
pub fn rotate_grid<T>(grid: &Grid2<T>) -> Grid2<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let extent = [grid.rows.start, grid.rows.last(), grid.cols.start, grid.cols.last()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let n = grid.rows.len.max(grid.cols.len);
    let axis = Axis::symmetric(std::f64::consts::SQRT_2 * extent, 2 * n - 1);
    Grid2::from_fn(axis, axis, |u, v| grid.sample_bilinear(FRAC_1_SQRT_2 * (u - v), FRAC_1_SQRT_2 * (u + v)))
}

/// Re-expresses the amplitude over `Ω± = (Ω_i ± Ω_s)/√2` (rows Ω₊, columns Ω₋).
pub fn rotate_to_pm(tpsa: &TpsaGrid) -> TpsaGrid {
    TpsaGrid { values: rotate_grid(&tpsa.values), frame: tpsa.frame.rotated(), norm: tpsa.norm }
}
