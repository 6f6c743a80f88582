//! Refractive-index and wavevector models for BBO and for the transport fiber.
//!
//! All wavelengths are vacuum wavelengths in metres and all frequencies are
//! angular frequencies in rad/s. The crystal is treated as a collinear,
//! single-spatial-mode medium: walk-off and the transverse spectrum are
//! ignored.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Finite-difference step (rad/s) used for group velocities.
pub const GROUP_VELOCITY_STEP: f64 = 1e11;

/// Tolerance on |Δk(0,0)| (rad/m) for the phase-matching solve.
pub const PHASE_MATCHING_TOLERANCE: f64 = 1e-3;

const BBO_SELLMEIER: &str = include_str!("../data/bbo_sellmeier.toml");

pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

pub fn wavelength(angular_frequency: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / angular_frequency
}

/// Converts a wavelength FWHM around `center` into an angular-frequency FWHM,
/// `Δω = 2πcΔλ/λ²`.
pub fn wavelength_width_to_angular(width: f64, center: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * width / (center * center)
}

/// One principal-axis Sellmeier term, `n² = a + b/(λ² − c) − d·λ²` with λ in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SellmeierTerm {
    fn index_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Validity {
    min_wavelength_um: f64,
    max_wavelength_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SellmeierFile {
    material: String,
    validity: Validity,
    ordinary: SellmeierTerm,
    extraordinary: SellmeierTerm,
}

/// Which principal index of a uniaxial crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Principal {
    Ordinary,
    Extraordinary,
}

/// Polarization of a wave travelling at a fixed angle to the optic axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    Ordinary,
    /// Extraordinary wave with `theta` the angle (rad) between optic axis and
    /// propagation direction.
    Extraordinary { theta: f64 },
}

/// Principal-index dispersion of a uniaxial crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierCoefficients {
    pub material: String,
    pub ordinary: SellmeierTerm,
    pub extraordinary: SellmeierTerm,
    /// Validity window, metres.
    pub min_wavelength: f64,
    pub max_wavelength: f64,
}

impl SellmeierCoefficients {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SellmeierFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("sellmeier constants: {e}")))?;
        if !(file.validity.min_wavelength_um > 0.0
            && file.validity.max_wavelength_um > file.validity.min_wavelength_um)
        {
            return Err(Error::config("sellmeier validity window must be a nonempty positive range"));
        }
        Ok(SellmeierCoefficients {
            material: file.material,
            ordinary: file.ordinary,
            extraordinary: file.extraordinary,
            min_wavelength: file.validity.min_wavelength_um * 1e-6,
            max_wavelength: file.validity.max_wavelength_um * 1e-6,
        })
    }

    /// The bundled BBO coefficient set.
    pub fn bbo() -> &'static SellmeierCoefficients {
        static BBO: OnceLock<SellmeierCoefficients> = OnceLock::new();
        BBO.get_or_init(|| {
            SellmeierCoefficients::from_toml_str(BBO_SELLMEIER)
                .expect("bundled BBO constants file is valid")
        })
    }

    pub fn check_window(&self, wavelength: f64) -> Result<()> {
        let slack = 1e-12 * self.max_wavelength;
        if wavelength >= self.min_wavelength - slack && wavelength <= self.max_wavelength + slack {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "wavelength {:.2} nm outside the {} Sellmeier window [{:.0} nm, {:.0} nm]",
                wavelength * 1e9,
                self.material,
                self.min_wavelength * 1e9,
                self.max_wavelength * 1e9
            )))
        }
    }

    pub fn principal_index(&self, wavelength: f64, axis: Principal) -> Result<f64> {
        self.check_window(wavelength)?;
        let term = match axis {
            Principal::Ordinary => &self.ordinary,
            Principal::Extraordinary => &self.extraordinary,
        };
        Ok(term.index_squared(wavelength * 1e6).sqrt())
    }

    /// Index of an extraordinary wave at angle `theta` to the optic axis:
    /// `1/n²(θ) = cos²θ/n_o² + sin²θ/n_e²`.
    pub fn extraordinary_index(&self, wavelength: f64, theta: f64) -> Result<f64> {
        self.check_window(wavelength)?;
        let um = wavelength * 1e6;
        let no2 = self.ordinary.index_squared(um);
        let ne2 = self.extraordinary.index_squared(um);
        let (s, c) = theta.sin_cos();
        Ok((c * c / no2 + s * s / ne2).sqrt().recip())
    }

    pub fn index(&self, wavelength: f64, polarization: Polarization) -> Result<f64> {
        match polarization {
            Polarization::Ordinary => self.principal_index(wavelength, Principal::Ordinary),
            Polarization::Extraordinary { theta } => self.extraordinary_index(wavelength, theta),
        }
    }

    /// `k(ω) = n(ω)·ω/c` in rad/m.
    pub fn wavevector(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        Ok(self.index(wavelength(omega), polarization)? * omega / SPEED_OF_LIGHT)
    }

    /// Inverse group velocity `dk/dω` (s/m) by central difference with
    /// step [`GROUP_VELOCITY_STEP`], checked against the half step.
    pub fn inverse_group_velocity(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        let central = |h: f64| -> Result<f64> {
            Ok((self.wavevector(omega + h, polarization)? - self.wavevector(omega - h, polarization)?)
                / (2.0 * h))
        };
        let full = central(GROUP_VELOCITY_STEP)?;
        let half = central(0.5 * GROUP_VELOCITY_STEP)?;
        if ((full - half) / full).abs() > 1e-6 {
            return Err(Error::Numeric(format!(
                "group velocity not converged at ω = {omega:e} rad/s ({full:e} vs {half:e})"
            )));
        }
        Ok(full)
    }
}

pub fn index(wavelength: f64, axis: Principal) -> Result<f64> {
    SellmeierCoefficients::bbo().principal_index(wavelength, axis)
}

pub fn extraordinary_index(wavelength: f64, theta: f64) -> Result<f64> {
    SellmeierCoefficients::bbo().extraordinary_index(wavelength, theta)
}

pub fn wavevector(omega: f64, polarization: Polarization) -> Result<f64> {
    SellmeierCoefficients::bbo().wavevector(omega, polarization)
}

/// Down-conversion crystal. The interaction is always type-II
/// (pump e → signal o + idler e), collinear and degenerate at `λ_p/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    /// Metres.
    pub length: f64,
    /// Angle between optic axis and propagation direction, radians.
    pub cut_angle: f64,
    /// Pump central wavelength, metres.
    pub pump_wavelength: f64,
}

impl CrystalSpec {
    pub fn new(length: f64, cut_angle: f64, pump_wavelength: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::config(format!("crystal length must be > 0, got {length}")));
        }
        if !(cut_angle > 0.0 && cut_angle < FRAC_PI_2) {
            return Err(Error::config(format!("cut angle must lie in (0, π/2), got {cut_angle}")));
        }
        SellmeierCoefficients::bbo().check_window(pump_wavelength)?;
        Ok(CrystalSpec { length, cut_angle, pump_wavelength })
    }

    /// A crystal cut at the exact degenerate collinear phase-matching angle.
    pub fn phase_matched(length: f64, pump_wavelength: f64) -> Result<Self> {
        let theta = solve_phase_matching_angle(pump_wavelength)?;
        CrystalSpec::new(length, theta, pump_wavelength)
    }

    pub fn pump_frequency(&self) -> f64 {
        angular_frequency(self.pump_wavelength)
    }

    /// Degenerate signal/idler carrier `ω₀ = ω_p/2`.
    pub fn degenerate_frequency(&self) -> f64 {
        0.5 * self.pump_frequency()
    }

    pub fn extraordinary(&self) -> Polarization {
        Polarization::Extraordinary { theta: self.cut_angle }
    }
}

/// Dispersive transport fiber; both photons see the same GVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    /// Metres.
    pub length: f64,
    /// `k''` in s²/m.
    pub gvd: f64,
}

/// Calibrated fiber GVD, 4.3·10⁻²⁸ s²/cm expressed in s²/m.
pub const CALIBRATED_FIBER_GVD: f64 = 4.3e-26;

impl FiberSpec {
    pub fn new(length: f64, gvd: f64) -> Result<Self> {
        if !(length >= 0.0) || !length.is_finite() {
            return Err(Error::config(format!("fiber length must be >= 0, got {length}")));
        }
        if !gvd.is_finite() {
            return Err(Error::config("fiber GVD must be finite"));
        }
        Ok(FiberSpec { length, gvd })
    }

    /// Frequency-to-time scale `k''·l` (s²).
    pub fn far_field_scale(&self) -> f64 {
        self.gvd * self.length
    }
}

fn mismatch_at(
    sellmeier: &SellmeierCoefficients,
    omega_s: f64,
    omega_i: f64,
    crystal: &CrystalSpec,
) -> Result<f64> {
    let w0 = crystal.degenerate_frequency();
    let e = crystal.extraordinary();
    let kp = sellmeier.wavevector(2.0 * w0 + omega_s + omega_i, e)?;
    let ks = sellmeier.wavevector(w0 + omega_s, Polarization::Ordinary)?;
    let ki = sellmeier.wavevector(w0 + omega_i, e)?;
    Ok(kp - ks - ki)
}

/// `Δk = k_p(ω_p + Ω_s + Ω_i) − k_s(ω₀ + Ω_s) − k_i(ω₀ + Ω_i)` in rad/m for
/// detunings `Ω_s`, `Ω_i` (rad/s) from degeneracy.
pub fn phase_mismatch(omega_s: f64, omega_i: f64, crystal: &CrystalSpec) -> Result<f64> {
    mismatch_at(SellmeierCoefficients::bbo(), omega_s, omega_i, crystal)
}

/// Cut angle giving `Δk(0, 0) = 0` for degenerate collinear type-II
/// down-conversion of `pump_wavelength` in BBO.
pub fn solve_phase_matching_angle(pump_wavelength: f64) -> Result<f64> {
    SellmeierCoefficients::bbo().phase_matching_angle(pump_wavelength)
}

impl SellmeierCoefficients {
    /// Bisection for the type-II phase-matching angle on (0, π/2).
    pub fn phase_matching_angle(&self, pump_wavelength: f64) -> Result<f64> {
        self.check_window(pump_wavelength)?;
        self.check_window(2.0 * pump_wavelength)?;
        let eval = |theta: f64| {
            let crystal = CrystalSpec { length: 1.0, cut_angle: theta, pump_wavelength };
            mismatch_at(self, 0.0, 0.0, &crystal)
        };
        let (mut lo, mut hi) = (1e-6, FRAC_PI_2 - 1e-6);
        let (mut f_lo, f_hi) = (eval(lo)?, eval(hi)?);
        if f_lo.signum() == f_hi.signum() {
            return Err(Error::NoPhaseMatching(format!(
                "Δk(0,0) keeps its sign over (0, π/2) for λ_p = {:.1} nm",
                pump_wavelength * 1e9
            )));
        }
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            let f_mid = eval(mid)?;
            if f_mid.abs() < PHASE_MATCHING_TOLERANCE * 1e-3 {
                return Ok(mid);
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.abs() < PHASE_MATCHING_TOLERANCE {
            Ok(mid)
        } else {
            Err(Error::Numeric("phase-matching bisection did not converge".into()))
        }
    }
}

/// Delay between ordinary and extraordinary replicas of a pulse after
/// `crystal_length` of BBO with the optic axis at `theta`.
pub fn group_delay_difference_at(wavelength: f64, crystal_length: f64, theta: f64) -> Result<f64> {
    if !(crystal_length >= 0.0) {
        return Err(Error::config(format!("crystal length must be >= 0, got {crystal_length}")));
    }
    let sellmeier = SellmeierCoefficients::bbo();
    sellmeier.check_window(wavelength)?;
    let omega = angular_frequency(wavelength);
    let k1_o = sellmeier.inverse_group_velocity(omega, Polarization::Ordinary)?;
    let k1_e = sellmeier.inverse_group_velocity(omega, Polarization::Extraordinary { theta })?;
    Ok(crystal_length * (k1_o - k1_e).abs())
}

/// Pulse-splitter delay for the optic axis at 45° to the beam.
pub fn group_delay_difference(wavelength: f64, crystal_length: f64) -> Result<f64> {
    group_delay_difference_at(wavelength, crystal_length, FRAC_PI_4)
}
