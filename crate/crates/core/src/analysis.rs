//! Tilt, entanglement degree and fringe diagnostics from measured widths.

use std::fmt::Write as _;

use crate::dispersion::FiberSpec;
use crate::error::{Error, Result};
use crate::measurement::{fwhm, DelayDistribution, MeasuredSet};

/// Local maxima below this fraction of the global peak are ignored.
pub const FRINGE_PEAK_FRACTION: f64 = 0.1;
/// Two maxima count as separate fringes only if the valley between them
/// drops below this fraction of the lesser one.
pub const FRINGE_VALLEY_FRACTION: f64 = 0.8;
/// Shortest distribution the fringe detector will look at.
pub const FRINGE_MIN_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeThresholds {
    pub peak_fraction: f64,
    pub valley_fraction: f64,
}

impl Default for FringeThresholds {
    fn default() -> Self {
        FringeThresholds { peak_fraction: FRINGE_PEAK_FRACTION, valley_fraction: FRINGE_VALLEY_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fringe {
    pub detected: bool,
    /// Number of resolved maxima.
    pub maxima: usize,
    /// Mean spacing of the resolved maxima, in axis units; 0 if none.
    pub period: f64,
    /// `(max − min)/(max + min)` for the pair of maxima around the global peak.
    pub visibility: f64,
    /// Axis positions of the resolved maxima.
    pub positions: Vec<f64>,
}

impl Fringe {
    fn none() -> Fringe {
        Fringe { detected: false, maxima: 0, period: 0.0, visibility: 0.0, positions: Vec::new() }
    }
}

/// Finds resolved interference maxima.
pub fn fringe_detect(dist: &DelayDistribution, thresholds: &FringeThresholds) -> Fringe {
    let v = &dist.values;
    let n = v.len();
    let peak = dist.peak();
    if n < FRINGE_MIN_BINS || !(peak > 0.0) {
        return Fringe::none();
    }
    let floor = thresholds.peak_fraction * peak;
    let candidates = (1..n - 1).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= floor);

    let mut kept: Vec<usize> = Vec::new();
    for i in candidates {
        match kept.last().copied() {
            None => kept.push(i),
            Some(last) => {
                let valley = v[last..=i].iter().copied().fold(f64::INFINITY, f64::min);
                if valley < thresholds.valley_fraction * v[last].min(v[i]) {
                    kept.push(i);
                } else if v[i] > v[last] {
                    *kept.last_mut().unwrap() = i;
                }
            }
        }
    }
    let positions: Vec<f64> = kept.iter().map(|&i| dist.axis.value(i)).collect();
    if kept.len() < 2 {
        return Fringe { maxima: kept.len(), positions, ..Fringe::none() };
    }
    let period = (positions[positions.len() - 1] - positions[0]) / (positions.len() - 1) as f64;

    let top = (0..kept.len()).max_by(|&a, &b| v[kept[a]].total_cmp(&v[kept[b]])).unwrap();
    let partner = match (top.checked_sub(1), kept.get(top + 1)) {
        (Some(l), Some(_)) if v[kept[l]] >= v[kept[top + 1]] => l,
        (Some(l), None) => l,
        _ => top + 1,
    };
    let (a, b) = (kept[top.min(partner)], kept[top.max(partner)]);
    let hi = v[a].min(v[b]);
    let lo = v[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
    let visibility = if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 };
    Fringe { detected: true, maxima: kept.len(), period, visibility, positions }
}

/// `α = atan(ΔΩ_s/ΔΩ_i)`.
pub fn tilt_from_widths(width_s: f64, width_i: f64) -> Result<f64> {
    check_width("signal", width_s)?;
    check_width("idler", width_i)?;
    Ok((width_s / width_i).atan())
}

fn check_width(name: &str, w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::domain(format!("{name} width must be > 0, got {w}")));
    }
    Ok(())
}

/// `R = (ΔΩ/ΔΩ_s)/(1 + cot α)` and `R = (ΔΩ/ΔΩ_i)/(1 + tan α)`.
pub fn entanglement_r(width: f64, width_s: f64, width_i: f64, alpha: f64) -> Result<(f64, f64)> {
    check_width("unfiltered", width)?;
    check_width("signal", width_s)?;
    check_width("idler", width_i)?;
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain(format!("tilt must lie in (0, π/2), got {alpha}")));
    }
    let from_s = width / width_s / (1.0 + 1.0 / alpha.tan());
    let from_i = width / width_i / (1.0 + alpha.tan());
    Ok((from_s, from_i))
}

/// Removes a Gaussian instrument width in quadrature; zero if the PSF is
/// wider than the measurement.
pub fn deconvolve_width(measured: f64, psf_fwhm: f64) -> f64 {
    (measured * measured - psf_fwhm * psf_fwhm).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisOptions {
    /// PSF FWHM (s) to remove in quadrature before the widths are used.
    pub deconvolve_psf: Option<f64>,
    pub thresholds: FringeThresholds,
}


#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// Delay FWHM (s) of the unfiltered, idler-filtered and signal-filtered
    /// distributions, after optional deconvolution.
    pub delay_width: f64,
    pub delay_width_s: f64,
    pub delay_width_i: f64,
    /// The same widths on the `Ω_s − Ω_i` axis (rad/s).
    pub delta_omega: f64,
    pub delta_omega_s: f64,
    pub delta_omega_i: f64,
    /// Radians.
    pub alpha: f64,
    pub r_from_s: f64,
    pub r_from_i: f64,
    pub deconvolved: bool,
    /// Some distribution dipped below half maximum inside its FWHM.
    pub multimodal: bool,
    pub fringe: Fringe,
    pub fringe_signal_filtered: Fringe,
    pub fringe_idler_filtered: Fringe,
}

impl AnalysisReport {
    /// `R < 1` means the filters, not the source, set the measured widths.
    pub fn filter_limited(&self) -> bool {
        self.r_from_s < 1.0
    }

    pub fn alpha_degrees(&self) -> f64 {
        self.alpha.to_degrees()
    }

    /// `key: value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        kv("delay_fwhm_s", format!("{:.6e}", self.delay_width));
        kv("delay_fwhm_signal_s", format!("{:.6e}", self.delay_width_s));
        kv("delay_fwhm_idler_s", format!("{:.6e}", self.delay_width_i));
        kv("delta_omega_rad_per_s", format!("{:.6e}", self.delta_omega));
        kv("delta_omega_signal_rad_per_s", format!("{:.6e}", self.delta_omega_s));
        kv("delta_omega_idler_rad_per_s", format!("{:.6e}", self.delta_omega_i));
        kv("alpha_deg", format!("{:.4}", self.alpha_degrees()));
        kv("r_from_signal", format!("{:.6}", self.r_from_s));
        kv("r_from_idler", format!("{:.6}", self.r_from_i));
        kv("r_relative_difference", format!("{:.3e}", consistency_check(self)));
        kv("filter_limited", self.filter_limited().to_string());
        kv("psf_deconvolved", self.deconvolved.to_string());
        kv("multimodal", self.multimodal.to_string());
        for (name, f) in [
            ("unfiltered", &self.fringe),
            ("signal_filtered", &self.fringe_signal_filtered),
            ("idler_filtered", &self.fringe_idler_filtered),
        ] {
            kv(&format!("fringe_{name}_detected"), f.detected.to_string());
            kv(&format!("fringe_{name}_maxima"), f.maxima.to_string());
            kv(&format!("fringe_{name}_period_s"), format!("{:.6e}", f.period));
            kv(&format!("fringe_{name}_visibility"), format!("{:.4}", f.visibility));
        }
        s
    }
}

/// `|R_s − R_i| / max(R_s, R_i)`.
pub fn consistency_check(report: &AnalysisReport) -> f64 {
    let (a, b) = (report.r_from_s, report.r_from_i);
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Widths, tilt, R and fringes for one measured set.
pub fn analyze(set: &MeasuredSet, fiber: &FiberSpec, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let beta = fiber.far_field_scale().abs();
    if beta == 0.0 {
        return Err(Error::domain("far-field undefined: widths need k''l != 0"));
    }
    let w = fwhm(&set.unfiltered)?;
    // The signal-filtered delay spread is set by the idler bandwidth and
    // vice versa.
    let wi = fwhm(&set.signal_filtered)?;
    let ws = fwhm(&set.idler_filtered)?;
    let adjust = |x: f64| match options.deconvolve_psf {
        Some(p) => deconvolve_width(x, p),
        None => x,
    };
    let (dw, dws, dwi) = (adjust(w.width), adjust(ws.width), adjust(wi.width));
    let alpha = tilt_from_widths(dws, dwi)?;
    let (r_from_s, r_from_i) = entanglement_r(dw, dws, dwi, alpha)?;
    Ok(AnalysisReport {
        delay_width: dw,
        delay_width_s: dws,
        delay_width_i: dwi,
        delta_omega: dw / beta,
        delta_omega_s: dws / beta,
        delta_omega_i: dwi / beta,
        alpha,
        r_from_s,
        r_from_i,
        deconvolved: options.deconvolve_psf.is_some(),
        multimodal: w.multimodal || ws.multimodal || wi.multimodal,
        fringe: fringe_detect(&set.unfiltered, &options.thresholds),
        fringe_signal_filtered: fringe_detect(&set.signal_filtered, &options.thresholds),
        fringe_idler_filtered: fringe_detect(&set.idler_filtered, &options.thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::measurement::AxisKind;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn dist(n: usize, f: impl Fn(f64) -> f64) -> DelayDistribution {
        let axis = Axis::symmetric(1.0, n);
        DelayDistribution::new(axis, axis.values().map(f).collect(), AxisKind::Delay).unwrap()
    }

    #[test]
    fn symmetric_widths_give_45_degrees() {
        assert!((tilt_from_widths(3.0, 3.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_widths_rejected() {
        assert!(matches!(tilt_from_widths(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(tilt_from_widths(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(entanglement_r(1.0, 1.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(entanglement_r(1.0, 1.0, 1.0, PI / 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_r_plug_in() {
        let (a, b) = entanglement_r(2.0, 1.0, 1.0, FRAC_PI_4).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
    }

    fn report(width: f64, ws: f64, wi: f64, alpha: f64) -> AnalysisReport {
        let (r_from_s, r_from_i) = entanglement_r(width, ws, wi, alpha).unwrap();
        AnalysisReport {
            delay_width: width,
            delay_width_s: ws,
            delay_width_i: wi,
            delta_omega: width,
            delta_omega_s: ws,
            delta_omega_i: wi,
            alpha,
            r_from_s,
            r_from_i,
            deconvolved: false,
            multimodal: false,
            fringe: Fringe::none(),
            fringe_signal_filtered: Fringe::none(),
            fringe_idler_filtered: Fringe::none(),
        }
    }

    #[test]
    fn degenerate_widths_reduce_to_half_ratio() {
        let r = report(5.0, 2.0, 2.0, FRAC_PI_4);
        assert!((r.r_from_s - 5.0 / 4.0).abs() < 1e-15);
        assert!((r.r_from_i - 5.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_tilt_breaks_consistency() {
        let alpha = tilt_from_widths(3.0, 1.0).unwrap();
        let r = report(5.0, 3.0, 1.0, alpha + 5f64.to_radians());
        assert!(consistency_check(&r) > 0.0);
    }

    #[test]
    fn filter_limited_flag() {
        let a = tilt_from_widths(1.0, 1.0).unwrap();
        assert!(report(1.0, 1.0, 1.0, a).filter_limited());
        assert!(!report(5.0, 1.0, 1.0, a).filter_limited());
    }

    #[test]
    fn report_serializes_as_key_values() {
        let a = tilt_from_widths(3.0, 1.0).unwrap();
        let text = report(5.0, 3.0, 1.0, a).to_key_values();
        assert!(text.contains("alpha_deg: 71.5651"));
        assert!(text.lines().all(|l| l.contains(": ")));
    }

    proptest! {
        #[test]
        fn r_formulas_agree(w in 1e-3f64..1e3, ws in 1e-3f64..1e3, wi in 1e-3f64..1e3) {
            let alpha = tilt_from_widths(ws, wi).unwrap();
            let r = report(w, ws, wi, alpha);
            prop_assert!(consistency_check(&r) < 1e-10);
        }

        #[test]
        fn tilt_is_scale_invariant(ws in 1e-3f64..1e3, wi in 1e-3f64..1e3, c in 1e-6f64..1e6) {
            let a = tilt_from_widths(ws, wi).unwrap();
            let b = tilt_from_widths(c * ws, c * wi).unwrap();
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn deconvolution_in_quadrature() {
        assert!((deconvolve_width(150.0, 90.0) - 120.0).abs() < 1e-12);
        assert_eq!(deconvolve_width(50.0, 90.0), 0.0);
    }

    #[test]
    fn gaussian_has_no_fringes() {
        let d = dist(256, |x| (-x * x / 0.05).exp());
        let f = fringe_detect(&d, &FringeThresholds::default());
        assert!(!f.detected);
        assert_eq!(f.maxima, 1);
    }

    #[test]
    fn modulated_gaussian_fringes() {
        let n = 512;
        let p = 0.12;
        let d = dist(n, |x| (-x * x / 0.2).exp() * (PI * x / p).cos().powi(2));
        let f = fringe_detect(&d, &FringeThresholds::default());
        assert!(f.detected);
        assert!(f.maxima >= 3);
        assert!((f.period - p).abs() <= d.axis.step, "{}", f.period);
        assert!(f.visibility > 0.95);
    }

    #[test]
    fn fringe_detection_is_scale_invariant() {
        let d = dist(256, |x| (-x * x / 0.2).exp() * (1.0 + 0.6 * (40.0 * x).cos()));
        let mut scaled = d.clone();
        scaled.values.iter_mut().for_each(|v| *v *= 1234.5);
        let th = FringeThresholds::default();
        assert_eq!(fringe_detect(&d, &th), fringe_detect(&scaled, &th).clone());
    }

    #[test]
    fn shallow_ripple_is_not_a_fringe() {
        // Valleys at 90% of the neighbouring maxima stay merged.
        let d = dist(256, |x| (-x * x / 2.0).exp() * (1.0 + 0.05 * (40.0 * x).cos()));
        assert!(!fringe_detect(&d, &FringeThresholds::default()).detected);
        let loose = FringeThresholds { peak_fraction: 0.1, valley_fraction: 0.95 };
        assert!(fringe_detect(&d, &loose).detected);
    }

    #[test]
    fn short_distributions_are_not_examined() {
        let d = dist(32, |x| (20.0 * x).cos().powi(2));
        assert!(!fringe_detect(&d, &FringeThresholds::default()).detected);
    }
}
