//! Pump spectral amplitude: a Gaussian pulse, optionally split into two
//! delayed replicas by a birefringent plate.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::dispersion::{group_delay_difference, wavelength_width_to_angular};
use crate::error::{Error, Result};

/// Amplitude normalization of the pump spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PumpNormalization {
    /// Largest possible |amplitude| is 1.
    #[default]
    Peak,
    /// `∫|A(Ω)|² dΩ = 1`.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Modulation {
    #[default]
    None,
    /// Two replicas separated by `delay` (s); the second carries phase
    /// `phase` (rad) and relative amplitude `amplitude_ratio` ∈ (0, 1].
    DoublePulse { delay: f64, phase: f64, amplitude_ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    /// Central wavelength, metres.
    pub wavelength: f64,
    /// Intensity FWHM in wavelength, metres.
    pub bandwidth: f64,
    pub modulation: Modulation,
    pub normalization: PumpNormalization,
}

impl PumpSpec {
    pub fn new(wavelength: f64, bandwidth: f64, modulation: Modulation) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::config(format!("pump wavelength must be > 0, got {wavelength}")));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::config(format!("pump bandwidth must be > 0, got {bandwidth}")));
        }
        if let Modulation::DoublePulse { delay, amplitude_ratio, phase } = modulation {
            if !(delay >= 0.0) || !phase.is_finite() {
                return Err(Error::config("double-pulse delay must be >= 0 and phase finite"));
            }
            if !(amplitude_ratio > 0.0 && amplitude_ratio <= 1.0) {
                return Err(Error::config(format!(
                    "double-pulse amplitude ratio must lie in (0, 1], got {amplitude_ratio}"
                )));
            }
        }
        Ok(PumpSpec { wavelength, bandwidth, modulation, normalization: PumpNormalization::Peak })
    }

    pub fn with_normalization(mut self, normalization: PumpNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    /// Intensity rms width of the envelope, rad/s.
    pub fn sigma(&self) -> f64 {
        bandwidth_to_sigma(self.bandwidth, self.wavelength)
    }

    /// Intensity FWHM of the envelope, rad/s.
    pub fn angular_bandwidth(&self) -> f64 {
        wavelength_width_to_angular(self.bandwidth, self.wavelength)
    }

    /// Spectral amplitude at detuning `omega_p` (rad/s) from the pump centre.
    pub fn amplitude(&self, omega_p: f64) -> Complex64 {
        pump_amplitude(omega_p, self)
    }
}

/// Intensity rms width σ_ω (rad/s) of a Gaussian whose intensity FWHM in
/// wavelength is `width` around `center`: `σ_ω = Δω / (2√(2 ln 2))`.
pub fn bandwidth_to_sigma(width: f64, center: f64) -> f64 {
    wavelength_width_to_angular(width, center) / (2.0 * (2.0 * LN_2).sqrt())
}

/// Pump amplitude with intensity `exp(−Ω²/(2σ²))`, i.e. amplitude
/// `exp(−Ω²/(4σ²))`. The double pulse multiplies the envelope by
/// `e^{iΩτ/2} + r·e^{iφ}e^{−iΩτ/2}`, whose squared modulus for r = 1 is
/// `4cos²(Ωτ/2 − φ/2)`.
pub fn pump_amplitude(omega_p: f64, spec: &PumpSpec) -> Complex64 {
    let sigma = spec.sigma();
    let envelope = (-omega_p * omega_p / (4.0 * sigma * sigma)).exp();
    match spec.modulation {
        Modulation::None => {
            let norm = match spec.normalization {
                PumpNormalization::Peak => 1.0,
                PumpNormalization::Energy => ((2.0 * PI).sqrt() * sigma).sqrt(),
            };
            Complex64::new(envelope / norm, 0.0)
        }
        Modulation::DoublePulse { delay, phase, amplitude_ratio: r } => {
            let half = 0.5 * omega_p * delay;
            let first = Complex64::from_polar(1.0, half);
            let second = Complex64::from_polar(r, phase - half);
            let norm = match spec.normalization {
                PumpNormalization::Peak => 1.0 + r,
                PumpNormalization::Energy => {
                    // ∫ e^{-Ω²/2σ²}(1 + r² + 2r cos(Ωτ − φ)) dΩ
                    let overlap = (-0.5 * sigma * sigma * delay * delay).exp();
                    ((2.0 * PI).sqrt() * sigma * (1.0 + r * r + 2.0 * r * phase.cos() * overlap))
                        .sqrt()
                }
            };
            (first + second) * (envelope / norm)
        }
    }
}

/// Double-pulse modulation produced by a BBO plate of `splitter_length`
/// with its optic axis at 45° to the beam and the pump polarization at 45°
/// to the optic-axis plane (equal replicas).
pub fn double_pulse_from_crystal(splitter_length: f64, phase: f64, pump_wavelength: f64) -> Result<Modulation> {
    if !(splitter_length >= 0.0) {
        return Err(Error::config(format!("splitter length must be >= 0, got {splitter_length}")));
    }
    let delay = group_delay_difference(pump_wavelength, splitter_length)?;
    Ok(Modulation::DoublePulse { delay, phase, amplitude_ratio: 1.0 })
}
