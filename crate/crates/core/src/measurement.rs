//! What the START-STOP electronics record: the delay marginal of the
//! biphoton, the instrument response, and synthetic coincidence counts.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dispersion::FiberSpec;
use crate::error::{Error, Result};
use crate::grid::{Axis, Frame, TpsaGrid};
use crate::tpsa::{apply_filter, rotate_grid, FilterSpec};

/// Gaussian FWHM of the measured instrument response, 90 ps.
pub const DEFAULT_PSF_FWHM: f64 = 90e-12;

/// The delay span must be at least this multiple of the PSF FWHM.
pub const PSF_SPAN_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// `t_s − t_i` in seconds.
    Delay,
    /// `Ω_s − Ω_i` in rad/s.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionNorm {
    Raw,
    Peak,
    Area,
}

/// Nonnegative density on a uniform, increasing axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDistribution {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub norm: DistributionNorm,
    pub kind: AxisKind,
}

impl DelayDistribution {
    pub fn new(axis: Axis, values: Vec<f64>, kind: AxisKind) -> Result<Self> {
        if values.len() != axis.len || axis.len < 2 {
            return Err(Error::config(format!("{} values on a {}-point axis", values.len(), axis.len)));
        }
        if !(axis.step > 0.0) || !axis.step.is_finite() {
            return Err(Error::config("distribution axis must be strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain(format!("density must be finite and nonnegative, found {v}")));
        }
        Ok(DelayDistribution { axis, values, norm: DistributionNorm::Raw, kind })
    }

    pub fn area(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis.step
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn span(&self) -> f64 {
        self.axis.last() - self.axis.start
    }

    fn rescaled(mut self, by: f64, norm: DistributionNorm) -> Self {
        if by > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= by);
            self.norm = norm;
        }
        self
    }

    pub fn area_normalized(self) -> Self {
        let a = self.area();
        self.rescaled(a, DistributionNorm::Area)
    }

    pub fn peak_normalized(self) -> Self {
        let p = self.peak();
        self.rescaled(p, DistributionNorm::Peak)
    }

    /// Linear interpolation; zero outside the axis.
    pub fn value_at(&self, x: f64) -> f64 {
        let p = self.axis.position(x);
        let last = (self.axis.len - 1) as f64;
        if !(p >= -1e-9 && p <= last + 1e-9) {
            return 0.0;
        }
        let p = p.clamp(0.0, last);
        let j = (p.floor() as usize).min(self.axis.len - 2);
        let f = p - j as f64;
        self.values[j] * (1.0 - f) + self.values[j + 1] * f
    }

    pub fn centroid(&self) -> f64 {
        let total: f64 = self.values.iter().sum();
        self.axis.values().zip(&self.values).map(|(x, v)| x * v).sum::<f64>() / total
    }

    /// Adds a uniform accidental-coincidence floor of `fraction` × peak.
    pub fn with_background(mut self, fraction: f64) -> Result<Self> {
        if !(fraction >= 0.0) || !fraction.is_finite() {
            return Err(Error::config(format!("background fraction must be >= 0, got {fraction}")));
        }
        let floor = fraction * self.peak();
        self.values.iter_mut().for_each(|v| *v += floor);
        self.norm = DistributionNorm::Raw;
        Ok(self)
    }
}

/// Marginal of `|F|²` along `Ω₋ = (Ω_i − Ω_s)/√2`, integrated over `Ω₊`
/// (rad/s density on the `Ω₋` axis).
pub fn difference_marginal(tpsa: &TpsaGrid) -> Result<(Axis, Vec<f64>)> {
    let intensity = tpsa.intensity();
    let rotated = match tpsa.frame {
        Frame::SIGNAL_IDLER => rotate_grid(&intensity),
        Frame::PLUS_MINUS => intensity,
        other => return Err(Error::config(format!("projection needs the (Ω_s, Ω_i) or Ω± frame, got {other:?}"))),
    };
    let mut marginal = vec![0.0; rotated.cols.len];
    for j in 0..rotated.rows.len {
        for (m, v) in marginal.iter_mut().zip(rotated.row(j)) {
            *m += v;
        }
    }
    let d_plus = rotated.rows.step.abs();
    marginal.iter_mut().for_each(|m| *m *= d_plus);
    Ok((rotated.cols, marginal))
}

/// START-STOP delay distribution over `t_s − t_i = k''l(Ω_s − Ω_i)`.
///
/// The fiber phase cancels in `|F|²`, so only the frequency-to-time scale
/// `k''l` of the fiber matters.
pub fn delay_projection(tpsa: &TpsaGrid, fiber: &FiberSpec) -> Result<DelayDistribution> {
    let beta = fiber.far_field_scale();
    if beta == 0.0 {
        return Err(Error::domain("far-field undefined: delay projection needs k''l != 0"));
    }
    let (minus, marginal) = difference_marginal(tpsa)?;
    // t = −√2·β·Ω₋; flip to keep the delay axis increasing.
    let scale = -SQRT_2 * beta;
    let mapped = minus.scaled(scale);
    let jacobian = scale.abs();
    let mut values: Vec<f64> = marginal.iter().map(|m| m / jacobian).collect();
    let axis = if mapped.step < 0.0 {
        values.reverse();
        Axis::new(mapped.last(), -mapped.step, mapped.len)
    } else {
        mapped
    };
    DelayDistribution::new(axis, values, AxisKind::Delay)
}

/// Delay distributions for the three measurement configurations.
#[derive(Debug, Clone)]
pub struct MeasuredSet {
    pub unfiltered: DelayDistribution,
    /// Filter in front of the signal detector; its width measures the idler spread.
    pub signal_filtered: DelayDistribution,
    /// Filter in front of the idler detector; its width measures the signal spread.
    pub idler_filtered: DelayDistribution,
}

pub fn measure_set(
    tpsa: &TpsaGrid,
    fiber: &FiberSpec,
    signal_filter: &FilterSpec,
    idler_filter: &FilterSpec,
    psf: Option<&PsfSpec>,
) -> Result<MeasuredSet> {
    let project = |t: &TpsaGrid| -> Result<DelayDistribution> {
        let d = delay_projection(t, fiber)?;
        match psf {
            Some(p) => convolve_psf(&d, p),
            None => Ok(d),
        }
    };
    Ok(MeasuredSet {
        unfiltered: project(tpsa)?,
        signal_filtered: project(&apply_filter(tpsa, signal_filter, true))?,
        idler_filtered: project(&apply_filter(tpsa, idler_filter, true))?,
    })
}

/// Instrument response of the coincidence electronics.
#[derive(Debug, Clone, PartialEq)]
pub enum PsfSpec {
    Gaussian { fwhm: f64 },
    /// Measured response on a uniform delay axis.
    Tabulated(DelayDistribution),
}

impl Default for PsfSpec {
    fn default() -> Self {
        PsfSpec::Gaussian { fwhm: DEFAULT_PSF_FWHM }
    }
}

impl PsfSpec {
    pub fn gaussian(fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) || !fwhm.is_finite() {
            return Err(Error::config(format!("PSF FWHM must be > 0, got {fwhm}")));
        }
        Ok(PsfSpec::Gaussian { fwhm })
    }

    /// Tabulated response, stored centred on its centroid with unit area.
    pub fn tabulated(dist: DelayDistribution) -> Result<Self> {
        let area = dist.area();
        if !(area > 0.0) {
            return Err(Error::domain("tabulated PSF has zero area"));
        }
        let c = dist.centroid();
        let axis = Axis::new(dist.axis.start - c, dist.axis.step, dist.axis.len);
        let values = dist.values.iter().map(|v| v / area).collect();
        Ok(PsfSpec::Tabulated(DelayDistribution::new(axis, values, AxisKind::Delay)?.rescaled(1.0, DistributionNorm::Area)))
    }

    pub fn fwhm(&self) -> Result<f64> {
        match self {
            PsfSpec::Gaussian { fwhm } => Ok(*fwhm),
            PsfSpec::Tabulated(d) => Ok(fwhm(d)?.width),
        }
    }

    /// Kernel sampled at `k·step` for `k ∈ [−h, h]`, unit sum.
    pub fn kernel(&self, step: f64) -> Result<Vec<f64>> {
        let mut k = match self {
            PsfSpec::Gaussian { fwhm } => {
                let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                let half = (5.0 * sigma / step).ceil() as i64;
                (-half..=half)
                    .map(|i| {
                        let t = i as f64 * step;
                        (-t * t / (2.0 * sigma * sigma)).exp()
                    })
                    .collect::<Vec<_>>()
            }
            PsfSpec::Tabulated(d) => {
                let reach = d.axis.start.abs().max(d.axis.last().abs());
                let half = (reach / step).ceil() as i64;
                (-half..=half).map(|i| d.value_at(i as f64 * step)).collect()
            }
        };
        let total: f64 = k.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("PSF kernel vanishes on this delay step"));
        }
        k.iter_mut().for_each(|v| *v /= total);
        Ok(k)
    }

    /// The response on its own, as measured without the fiber.
    pub fn as_distribution(&self, axis: Axis) -> Result<DelayDistribution> {
        let values = match self {
            PsfSpec::Gaussian { fwhm } => {
                let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                axis.values().map(|t| norm * (-t * t / (2.0 * sigma * sigma)).exp()).collect()
            }
            PsfSpec::Tabulated(d) => axis.values().map(|t| d.value_at(t)).collect(),
        };
        DelayDistribution::new(axis, values, AxisKind::Delay)
    }
}

/// Linear convolution with the PSF, trimmed to the input axis.
pub fn convolve_psf(dist: &DelayDistribution, psf: &PsfSpec) -> Result<DelayDistribution> {
    let width = psf.fwhm()?;
    if dist.span() < PSF_SPAN_FACTOR * width {
        return Err(Error::config(format!(
            "delay span {:.3e} s is less than {PSF_SPAN_FACTOR}x the PSF FWHM {width:.3e} s",
            dist.span()
        )));
    }
    let kernel = psf.kernel(dist.axis.step)?;
    let half = (kernel.len() / 2) as isize;
    let n = dist.values.len() as isize;
    let values = (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(k, w)| {
                    let src = i - (k as isize - half);
                    (0..n).contains(&src).then(|| w * dist.values[src as usize])
                })
                .sum()
        })
        .collect();
    let mut out = DelayDistribution::new(dist.axis, values, dist.kind)?;
    out.norm = match dist.norm {
        DistributionNorm::Peak => DistributionNorm::Raw,
        n => n,
    };
    Ok(out)
}

/// Synthetic TAC/MCA record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    /// `counts.len() + 1` bin edges, seconds, stored as bit patterns so the
    /// histogram compares exactly.
    edges_bits: Vec<u64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub seed: u64,
}

impl CoincidenceHistogram {
    pub fn edges(&self) -> Vec<f64> {
        self.edges_bits.iter().map(|b| f64::from_bits(*b)).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        let e = self.edges();
        e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Draws `n_events` delays from the distribution (multinomial over bins)
/// with a seeded ChaCha8 stream.
pub fn sample_coincidences(dist: &DelayDistribution, n_events: u64, seed: u64) -> Result<CoincidenceHistogram> {
    if n_events == 0 {
        return Err(Error::config("n_events must be > 0"));
    }
    let mut cdf = Vec::with_capacity(dist.values.len());
    let mut acc = 0.0;
    for v in &dist.values {
        acc += v;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::domain("cannot sample an all-zero distribution"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.values.len()];
    for _ in 0..n_events {
        let u = rng.gen::<f64>() * acc;
        let bin = cdf.partition_point(|c| *c <= u).min(counts.len() - 1);
        counts[bin] += 1;
    }
    let step = dist.axis.step;
    let edges_bits = (0..=dist.axis.len).map(|i| (dist.axis.start + (i as f64 - 0.5) * step).to_bits()).collect();
    Ok(CoincidenceHistogram { edges_bits, counts, total: n_events, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fwhm {
    pub width: f64,
    /// The profile dips below half maximum between the outermost crossings.
    pub multimodal: bool,
}

/// Full width at half maximum with linear interpolation at the outermost
/// half-height crossings.
pub fn fwhm(dist: &DelayDistribution) -> Result<Fwhm> {
    let v = &dist.values;
    let peak = dist.peak();
    if !(peak > 0.0) {
        return Err(Error::domain("FWHM of an all-zero distribution"));
    }
    let half = 0.5 * peak;
    let first = v.iter().position(|x| *x >= half).expect("peak is above half");
    let last = v.iter().rposition(|x| *x >= half).expect("peak is above half");
    let crossing = |a: usize, b: usize| {
        let (ya, yb) = (v[a], v[b]);
        let f = if ya == yb { 0.0 } else { (half - ya) / (yb - ya) };
        dist.axis.value(a) + f * (dist.axis.value(b) - dist.axis.value(a))
    };
    let left = if first == 0 { dist.axis.start } else { crossing(first - 1, first) };
    let right = if last + 1 == v.len() { dist.axis.last() } else { crossing(last, last + 1) };
    let multimodal = v[first..=last].iter().any(|x| *x < half);
    if multimodal {
        log::warn!("multimodal distribution: FWHM taken between the outermost half-maximum crossings");
    }
    Ok(Fwhm { width: right - left, multimodal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::tpsa::apply_fiber;
    use num_complex::Complex64;
    use std::f64::consts::LN_2;

    const GAUSS_FWHM: f64 = 2.354_820_045_030_949_3;

    fn gaussian_dist(n: usize, half: f64, sigma: f64, center: f64) -> DelayDistribution {
        let axis = Axis::symmetric(half, n);
        let values = axis.values().map(|t| (-(t - center).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        DelayDistribution::new(axis, values, AxisKind::Delay).unwrap()
    }

    fn isotropic(n: usize, half: f64, sigma: f64) -> TpsaGrid {
        let axis = Axis::symmetric(half, n);
        TpsaGrid::new(Grid2::from_fn(axis, axis, |x, y| {
            Complex64::new((-(x * x + y * y) / (4.0 * sigma * sigma)).exp(), 0.0)
        }))
        .normalized()
    }

    #[test]
    fn constant_matches_sigma_conversion() {
        assert!((GAUSS_FWHM - 2.0 * (2.0 * LN_2).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_distributions() {
        let axis = Axis::symmetric(1.0, 4);
        assert!(DelayDistribution::new(axis, vec![1.0, -1.0, 0.0, 0.0], AxisKind::Delay).is_err());
        assert!(DelayDistribution::new(axis, vec![1.0; 3], AxisKind::Delay).is_err());
        assert!(DelayDistribution::new(Axis::new(0.0, -1.0, 4), vec![1.0; 4], AxisKind::Delay).is_err());
    }

    #[test]
    fn gaussian_marginal() {
        let sigma = 4e12;
        let t = isotropic(256, 4e13, sigma);
        let fiber = FiberSpec::new(500.0, 4.3e-26).unwrap();
        let d = delay_projection(&t, &fiber).unwrap();
        // Intensity rms σ along Ω₋, stretched by √2·k''l.
        let expected = GAUSS_FWHM * SQRT_2 * fiber.far_field_scale() * sigma;
        let w = fwhm(&d).unwrap();
        assert!(!w.multimodal);
        assert!((w.width / expected - 1.0).abs() < 2e-3, "{} vs {}", w.width, expected);
        assert!((d.area() - 1.0).abs() < 1e-3, "{}", d.area());
        assert!((d.axis.step - fiber.far_field_scale() * t.values.rows.step).abs() < 1e-9 * d.axis.step);
    }

    #[test]
    fn delay_sign_follows_signal_minus_idler() {
        // Amplitude displaced to Ω_s > 0: the signal is delayed.
        let axis = Axis::symmetric(4e13, 128);
        let c = 1e13;
        let t = TpsaGrid::new(Grid2::from_fn(axis, axis, |x, y| {
            Complex64::new((-((x - c).powi(2) + y * y) / (4.0 * 2e12 * 2e12)).exp(), 0.0)
        }));
        let fiber = FiberSpec::new(500.0, 4.3e-26).unwrap();
        let d = delay_projection(&t, &fiber).unwrap();
        let expected = fiber.far_field_scale() * c;
        assert!((d.centroid() - expected).abs() < 0.01 * expected, "{}", d.centroid());
    }

    #[test]
    fn projection_needs_fiber() {
        let t = isotropic(64, 4e13, 4e12);
        let err = delay_projection(&t, &FiberSpec::new(0.0, 4.3e-26).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(err.to_string().contains("far-field undefined"));
    }

    #[test]
    fn fiber_phase_cancels_in_projection() {
        let t = isotropic(128, 4e13, 4e12);
        let fiber = FiberSpec::new(500.0, 4.3e-26).unwrap();
        let a = delay_projection(&t, &fiber).unwrap();
        let b = delay_projection(&apply_fiber(&t, &fiber), &fiber).unwrap();
        assert_eq!(a.axis, b.axis);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn delta_reproduces_psf() {
        let axis = Axis::symmetric(1e-9, 401);
        let mut values = vec![0.0; 401];
        values[200] = 1.0 / axis.step;
        let d = DelayDistribution::new(axis, values, AxisKind::Delay).unwrap();
        let psf = PsfSpec::default();
        let c = convolve_psf(&d, &psf).unwrap();
        let reference = psf.as_distribution(axis).unwrap();
        let peak = reference.peak();
        for (x, y) in c.values.iter().zip(&reference.values) {
            assert!((x - y).abs() < 1e-3 * peak);
        }
        assert!((fwhm(&c).unwrap().width / 90e-12 - 1.0).abs() < 0.01);
    }

    #[test]
    fn psf_alone_measures_ninety_ps() {
        let psf = PsfSpec::default();
        let d = psf.as_distribution(Axis::symmetric(500e-12, 512)).unwrap();
        assert!((fwhm(&d).unwrap().width / 90e-12 - 1.0).abs() < 0.01);
    }

    #[test]
    fn gaussian_convolution_law() {
        let (a, b) = (120e-12, 90e-12);
        let d = gaussian_dist(1024, 2e-9, a / GAUSS_FWHM, 0.0);
        let c = convolve_psf(&d, &PsfSpec::gaussian(b).unwrap()).unwrap();
        let expected = (a * a + b * b).sqrt();
        assert!((fwhm(&c).unwrap().width / expected - 1.0).abs() < 0.02);
        assert!((c.area() / d.area() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn convolution_needs_span() {
        let d = gaussian_dist(64, 100e-12, 20e-12, 0.0);
        assert!(matches!(convolve_psf(&d, &PsfSpec::default()), Err(Error::Config(_))));
    }

    #[test]
    fn tabulated_psf_is_centred_and_normalized() {
        let raw = gaussian_dist(512, 1e-9, 90e-12 / GAUSS_FWHM, 100e-12);
        let psf = PsfSpec::tabulated(raw).unwrap();
        let PsfSpec::Tabulated(d) = &psf else { unreachable!() };
        assert!(d.centroid().abs() < 1e-15);
        assert!((d.area() - 1.0).abs() < 1e-12);
        assert!((psf.fwhm().unwrap() / 90e-12 - 1.0).abs() < 0.01);
        let k = psf.kernel(4e-12).unwrap();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fwhm_of_gaussian_and_box() {
        let sigma = 37e-12;
        let d = gaussian_dist(256, 300e-12, sigma, 10e-12);
        let w = fwhm(&d).unwrap();
        assert!((w.width / (GAUSS_FWHM * sigma) - 1.0).abs() < 5e-3);

        let axis = Axis::symmetric(1.0, 201);
        let values = axis.values().map(|x| if x.abs() <= 0.3 { 1.0 } else { 0.0 }).collect();
        let b = DelayDistribution::new(axis, values, AxisKind::Delay).unwrap();
        assert!((fwhm(&b).unwrap().width - 0.6).abs() <= axis.step);
    }

    #[test]
    fn fwhm_flags_multimodal() {
        let axis = Axis::symmetric(1.0, 201);
        let values = axis.values().map(|x| (-(x - 0.5f64).powi(2) / 0.005).exp() + (-(x + 0.5f64).powi(2) / 0.005).exp()).collect();
        let d = DelayDistribution::new(axis, values, AxisKind::Delay).unwrap();
        let w = fwhm(&d).unwrap();
        assert!(w.multimodal);
        assert!(w.width > 1.0);
    }

    #[test]
    fn fwhm_of_zero_is_domain_error() {
        let d = DelayDistribution::new(Axis::symmetric(1.0, 8), vec![0.0; 8], AxisKind::Delay).unwrap();
        assert!(matches!(fwhm(&d), Err(Error::Domain(_))));
    }

    #[test]
    fn background_floor() {
        let d = gaussian_dist(64, 1.0, 0.1, 0.0);
        let peak = d.peak();
        let d = d.with_background(0.05).unwrap();
        assert!((d.values[0] - 0.05 * peak).abs() < 1e-12);
        assert!(gaussian_dist(64, 1.0, 0.1, 0.0).with_background(-1.0).is_err());
    }

    #[test]
    fn sampling_edge_cases() {
        let d = gaussian_dist(128, 1.0, 0.1, 0.0);
        assert!(matches!(sample_coincidences(&d, 0, 1), Err(Error::Config(_))));
        let one = sample_coincidences(&d, 1, 1).unwrap();
        assert_eq!(one.counts.iter().filter(|c| **c > 0).count(), 1);
        assert_eq!(one.counts.iter().sum::<u64>(), 1);
        assert_eq!(one.edges().len(), 129);
        assert!((one.centers()[64] - d.axis.value(64)).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = gaussian_dist(128, 1.0, 0.1, 0.0);
        let a = sample_coincidences(&d, 10_000, 42).unwrap();
        let b = sample_coincidences(&d, 10_000, 42).unwrap();
        let c = sample_coincidences(&d, 10_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn sampling_chi_square() {
        let d = gaussian_dist(128, 1.0, 0.2, 0.1);
        let n = 100_000u64;
        let total: f64 = d.values.iter().sum();
        let h = sample_coincidences(&d, n, 2024).unwrap();
        let (mut chi2, mut dof) = (0.0, 0usize);
        for (c, v) in h.counts.iter().zip(&d.values) {
            let e = n as f64 * v / total;
            if e >= 5.0 {
                chi2 += (*c as f64 - e).powi(2) / e;
                dof += 1;
            }
        }
        let per = chi2 / (dof - 1) as f64;
        assert!((0.5..=2.0).contains(&per), "χ²/dof = {per}");
    }

    #[test]
    fn sampling_is_unbiased_across_seeds() {
        let d = gaussian_dist(96, 1.0, 0.25, 0.0);
        let (n, seeds) = (5_000u64, 100u64);
        let total: f64 = d.values.iter().sum();
        let mut mean = vec![0.0; 96];
        for seed in 0..seeds {
            let h = sample_coincidences(&d, n, seed).unwrap();
            mean.iter_mut().zip(&h.counts).for_each(|(m, c)| *m += *c as f64 / seeds as f64);
        }
        let within = mean
            .iter()
            .zip(&d.values)
            .filter(|(m, v)| {
                let e = n as f64 * **v / total;
                (**m - e).abs() <= 3.0 * (e / seeds as f64).sqrt() + 1e-12
            })
            .count();
        assert!(within as f64 >= 0.95 * 96.0, "{within}/96");
    }

    #[test]
    fn difference_marginal_of_pm_frame_is_direct() {
        let t = isotropic(256, 4e13, 4e12);
        let pm = crate::tpsa::rotate_to_pm(&t);
        let (a1, m1) = difference_marginal(&pm).unwrap();
        assert_eq!(a1.len, 511);
        let total: f64 = m1.iter().sum::<f64>() * a1.step;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        let peak_at = m1.iter().cloned().enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b }).0;
        assert!((a1.value(peak_at)).abs() <= a1.step);
    }
}
