//! Scenario files: TOML with unit-bearing strings, resolved to SI.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use biphoton::analysis::{AnalysisOptions, FringeThresholds, FRINGE_PEAK_FRACTION, FRINGE_VALLEY_FRACTION};
use biphoton::dispersion::{angular_frequency, CrystalSpec, FiberSpec, CALIBRATED_FIBER_GVD};
use biphoton::grid::{FrequencyGrid, DEFAULT_OMEGA_MAX, DEFAULT_POINTS};
use biphoton::io::read_distribution_csv;
use biphoton::measurement::{PsfSpec, DEFAULT_PSF_FWHM};
use biphoton::pump::{double_pulse_from_crystal, Modulation, PumpNormalization, PumpSpec};
use biphoton::tpsa::{Channel, FilterSpec, TpsaOptions};

use crate::error::CliError;
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    crystal: RawCrystal,
    pump: RawPump,
    fiber: Option<RawFiber>,
    #[serde(default)]
    filters: Vec<RawFilter>,
    psf: Option<RawPsf>,
    #[serde(default)]
    grid: RawGrid,
    sampling: Option<RawSampling>,
    #[serde(default)]
    analysis: RawAnalysis,
    outputs: RawOutputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrystal {
    length: String,
    pump_wavelength: String,
    cut_angle: Option<String>,
    #[serde(default)]
    include_pm_phase: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    bandwidth: String,
    #[serde(default)]
    normalization: RawPumpNorm,
    modulation: Option<RawModulation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawPumpNorm {
    #[default]
    Peak,
    Energy,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawModulation {
    None,
    DoublePulse {
        delay: Option<String>,
        splitter_length: Option<String>,
        #[serde(default)]
        phase: Option<String>,
        #[serde(default)]
        amplitude_ratio: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiber {
    length: String,
    gvd: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    name: String,
    channel: RawChannel,
    bandwidth: String,
    center: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawChannel {
    Signal,
    Idler,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawPsf {
    Gaussian { fwhm: Option<String> },
    File { path: String },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Option<usize>,
    omega_max: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    events: u64,
    seed: u64,
    #[serde(default)]
    background: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    #[serde(default)]
    deconvolve_psf: bool,
    peak_fraction: Option<f64>,
    valley_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    directory: Option<String>,
    products: Vec<Product>,
    #[serde(default = "default_formats")]
    formats: Vec<Format>,
    map_points: Option<usize>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Svg]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    PumpSpectrum,
    TpsaMap,
    Distributions,
    Report,
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
    Bin,
}

#[derive(Debug, Clone)]
pub struct NamedFilter {
    pub name: String,
    pub filter: FilterSpec,
}

#[derive(Debug, Clone, Copy)]
pub struct Sampling {
    pub events: u64,
    pub seed: u64,
    /// Flat background as a fraction of the distribution peak.
    pub background: f64,
}

#[derive(Debug, Clone)]
pub struct Outputs {
    pub directory: PathBuf,
    pub products: Vec<Product>,
    pub formats: Vec<Format>,
    /// Per-axis resolution of the CSV and SVG map exports.
    pub map_points: usize,
}

impl Outputs {
    pub fn wants(&self, p: Product) -> bool {
        self.products.contains(&p)
    }

    pub fn format(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// A fully resolved scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub crystal: CrystalSpec,
    pub tpsa_options: TpsaOptions,
    pub pump: PumpSpec,
    pub fiber: Option<FiberSpec>,
    pub filters: Vec<NamedFilter>,
    pub psf: Option<PsfSpec>,
    psf_source: Option<String>,
    pub grid: FrequencyGrid,
    pub sampling: Option<Sampling>,
    pub analysis: AnalysisOptions,
    pub outputs: Outputs,
}

const DEFAULT_MAP_POINTS: usize = 256;

fn field(text: &str, dim: Dimension, what: &str) -> Result<f64, CliError> {
    parse_quantity(text, dim).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn config_err(what: &str, e: biphoton::Error) -> CliError {
    CliError::Config(format!("{what}: {e}"))
}

impl Scenario {
    /// Parses a scenario; relative PSF paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Scenario, CliError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Config(format!("scenario: {}", e.message())))?;
        resolve(raw, base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_toml_str(&text, base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Carrier wavelength of signal and idler (degenerate), metres.
    pub fn carrier(&self) -> f64 {
        2.0 * self.crystal.pump_wavelength
    }

    pub fn signal_filter(&self) -> Option<&NamedFilter> {
        self.filters.iter().find(|f| f.filter.channel == Channel::Signal)
    }

    pub fn idler_filter(&self) -> Option<&NamedFilter> {
        self.filters.iter().find(|f| f.filter.channel == Channel::Idler)
    }

    /// `key: value` lines describing every resolved parameter in SI units.
    pub fn header_lines(&self) -> Vec<String> {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        kv("biphoton", env!("CARGO_PKG_VERSION").to_string());
        kv("scenario", self.name.clone());
        if !self.description.is_empty() {
            kv("description", self.description.clone());
        }
        kv("crystal.length_m", format!("{:e}", self.crystal.length));
        kv("crystal.pump_wavelength_m", format!("{:e}", self.crystal.pump_wavelength));
        kv("crystal.cut_angle_rad", format!("{:.9}", self.crystal.cut_angle));
        kv("crystal.include_pm_phase", self.tpsa_options.include_phase_matching_phase.to_string());
        kv("pump.bandwidth_m", format!("{:e}", self.pump.bandwidth));
        kv("pump.normalization", format!("{:?}", self.pump.normalization).to_lowercase());
        match self.pump.modulation {
            Modulation::None => kv("pump.modulation", "none".into()),
            Modulation::DoublePulse { delay, phase, amplitude_ratio } => {
                kv("pump.modulation", "double_pulse".into());
                kv("pump.modulation.delay_s", format!("{delay:.6e}"));
                kv("pump.modulation.phase_rad", format!("{phase:.9}"));
                kv("pump.modulation.amplitude_ratio", format!("{amplitude_ratio}"));
            }
        }
        match self.fiber {
            Some(f) => {
                kv("fiber.length_m", format!("{:e}", f.length));
                kv("fiber.gvd_s2_per_m", format!("{:e}", f.gvd));
            }
            None => kv("fiber", "none".into()),
        }
        if self.filters.is_empty() {
            kv("filters", "none".into());
        }
        for f in &self.filters {
            let ch = match f.filter.channel {
                Channel::Signal => "signal",
                Channel::Idler => "idler",
            };
            kv(
                &format!("filter.{}", f.name),
                format!("channel={ch} center_rad_per_s={:e} fwhm_rad_per_s={:e}", f.filter.center, f.filter.bandwidth),
            );
        }
        match (&self.psf, &self.psf_source) {
            (Some(p), src) => {
                let fwhm = p.fwhm().map(|w| format!("{w:e}")).unwrap_or_else(|_| "undefined".into());
                kv("psf.fwhm_s", fwhm);
                if let Some(src) = src {
                    kv("psf.file", src.clone());
                }
            }
            (None, _) => kv("psf", "none".into()),
        }
        kv("grid.points", self.grid.points().to_string());
        kv("grid.omega_max_rad_per_s", format!("{:e}", self.grid.omega_max()));
        if let Some(sm) = self.sampling {
            kv("sampling.events", sm.events.to_string());
            kv("sampling.seed", sm.seed.to_string());
            kv("sampling.background", format!("{}", sm.background));
        }
        kv("analysis.deconvolve_psf", self.analysis.deconvolve_psf.is_some().to_string());
        kv("analysis.peak_fraction", format!("{}", self.analysis.thresholds.peak_fraction));
        kv("analysis.valley_fraction", format!("{}", self.analysis.thresholds.valley_fraction));
        s.lines().map(str::to_string).collect()
    }
}

fn resolve(raw: RawScenario, base_dir: &Path) -> Result<Scenario, CliError> {
    if raw.name.trim().is_empty() || raw.name.contains(['/', '\\']) {
        return Err(CliError::Config(format!("name {:?} must be non-empty and contain no path separators", raw.name)));
    }

    let c = &raw.crystal;
    let length = field(&c.length, Dimension::Length, "crystal.length")?;
    let pump_wavelength = field(&c.pump_wavelength, Dimension::Length, "crystal.pump_wavelength")?;
    let crystal = match &c.cut_angle {
        Some(a) => CrystalSpec::new(length, field(a, Dimension::Angle, "crystal.cut_angle")?, pump_wavelength)?,
        None => CrystalSpec::phase_matched(length, pump_wavelength)?,
    };
    let tpsa_options = TpsaOptions { include_phase_matching_phase: c.include_pm_phase };

    let bandwidth = field(&raw.pump.bandwidth, Dimension::Length, "pump.bandwidth")?;
    let modulation = match &raw.pump.modulation {
        None | Some(RawModulation::None) => Modulation::None,
        Some(RawModulation::DoublePulse { delay, splitter_length, phase, amplitude_ratio }) => {
            let phase = match phase {
                Some(p) => field(p, Dimension::Angle, "pump.modulation.phase")?,
                None => 0.0,
            };
            let ratio = amplitude_ratio.unwrap_or(1.0);
            match (delay, splitter_length) {
                (Some(d), None) => Modulation::DoublePulse {
                    delay: field(d, Dimension::Time, "pump.modulation.delay")?,
                    phase,
                    amplitude_ratio: ratio,
                },
                (None, Some(l)) => {
                    let l = field(l, Dimension::Length, "pump.modulation.splitter_length")?;
                    match double_pulse_from_crystal(l, phase, pump_wavelength)? {
                        Modulation::DoublePulse { delay, phase, .. } => {
                            Modulation::DoublePulse { delay, phase, amplitude_ratio: ratio }
                        }
                        m => m,
                    }
                }
                _ => {
                    return Err(CliError::Config(
                        "pump.modulation: double_pulse needs exactly one of delay or splitter_length".into(),
                    ))
                }
            }
        }
    };
    let normalization = match raw.pump.normalization {
        RawPumpNorm::Peak => PumpNormalization::Peak,
        RawPumpNorm::Energy => PumpNormalization::Energy,
    };
    let pump = PumpSpec::new(pump_wavelength, bandwidth, modulation)?.with_normalization(normalization);

    let fiber = match &raw.fiber {
        Some(f) => {
            let l = field(&f.length, Dimension::Length, "fiber.length")?;
            let gvd = match &f.gvd {
                Some(g) => field(g, Dimension::Gvd, "fiber.gvd")?,
                None => CALIBRATED_FIBER_GVD,
            };
            Some(FiberSpec::new(l, gvd)?)
        }
        None => None,
    };

    let carrier = 2.0 * pump_wavelength;
    let mut filters = Vec::new();
    for f in &raw.filters {
        if filters.iter().any(|g: &NamedFilter| g.name == f.name) {
            return Err(CliError::Config(format!("filters: duplicate name {:?}", f.name)));
        }
        let what = format!("filters.{}", f.name);
        let channel = match f.channel {
            RawChannel::Signal => Channel::Signal,
            RawChannel::Idler => Channel::Idler,
        };
        // A wavelength centre is absolute; an angular-frequency centre is a detuning.
        let center = match &f.center {
            None => 0.0,
            Some(text) => match parse_quantity(text, Dimension::Length) {
                Ok(lambda) => angular_frequency(lambda) - angular_frequency(carrier),
                Err(_) => field(text, Dimension::AngularFrequency, &format!("{what}.center (length or rad/s)"))?,
            },
        };
        let filter = match parse_quantity(&f.bandwidth, Dimension::Length) {
            Ok(bw) => FilterSpec::from_wavelength(channel, center, bw, carrier),
            Err(_) => FilterSpec::new(
                channel,
                center,
                field(&f.bandwidth, Dimension::AngularFrequency, &format!("{what}.bandwidth (length or rad/s)"))?,
            ),
        }
        .map_err(|e| config_err(&what, e))?;
        filters.push(NamedFilter { name: f.name.clone(), filter });
    }

    let (psf, psf_source) = match &raw.psf {
        None => (None, None),
        Some(RawPsf::Gaussian { fwhm }) => {
            let w = match fwhm {
                Some(w) => field(w, Dimension::Time, "psf.fwhm")?,
                None => DEFAULT_PSF_FWHM,
            };
            (Some(PsfSpec::gaussian(w).map_err(|e| config_err("psf", e))?), None)
        }
        Some(RawPsf::File { path }) => {
            let full = base_dir.join(path);
            let file = File::open(&full).map_err(|e| CliError::io(&full, e))?;
            let (dist, _) = read_distribution_csv(file).map_err(|e| config_err(&full.display().to_string(), e))?;
            (Some(PsfSpec::tabulated(dist).map_err(|e| config_err("psf", e))?), Some(path.clone()))
        }
    };

    let grid = FrequencyGrid::new(
        raw.grid.points.unwrap_or(DEFAULT_POINTS),
        match &raw.grid.omega_max {
            Some(w) => field(w, Dimension::AngularFrequency, "grid.omega_max")?,
            None => DEFAULT_OMEGA_MAX,
        },
    )
    .map_err(|e| config_err("grid", e))?;

    let sampling = match raw.sampling {
        Some(s) => {
            if s.events == 0 {
                return Err(CliError::Config("sampling.events must be > 0".into()));
            }
            if !(0.0..1.0).contains(&s.background) {
                return Err(CliError::Config("sampling.background must lie in [0, 1)".into()));
            }
            Some(Sampling { events: s.events, seed: s.seed, background: s.background })
        }
        None => None,
    };

    let thresholds = FringeThresholds {
        peak_fraction: raw.analysis.peak_fraction.unwrap_or(FRINGE_PEAK_FRACTION),
        valley_fraction: raw.analysis.valley_fraction.unwrap_or(FRINGE_VALLEY_FRACTION),
    };
    for (name, v) in [("peak_fraction", thresholds.peak_fraction), ("valley_fraction", thresholds.valley_fraction)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::Config(format!("analysis.{name} must lie in (0, 1), got {v}")));
        }
    }
    let deconvolve_psf = if raw.analysis.deconvolve_psf {
        match &psf {
            Some(p) => Some(p.fwhm()?),
            None => return Err(CliError::Config("analysis.deconvolve_psf needs a [psf] section".into())),
        }
    } else {
        None
    };

    let o = raw.outputs;
    if o.products.is_empty() {
        return Err(CliError::Config("outputs.products is empty".into()));
    }
    if o.products.contains(&Product::Samples) && sampling.is_none() {
        return Err(CliError::Config("outputs.products has samples but there is no [sampling] section".into()));
    }
    let map_points = o.map_points.unwrap_or(DEFAULT_MAP_POINTS);
    if map_points < 2 {
        return Err(CliError::Config("outputs.map_points must be >= 2".into()));
    }
    let directory = PathBuf::from(o.directory.unwrap_or_else(|| format!("biphoton-out/{}", raw.name)));

    Ok(Scenario {
        name: raw.name,
        description: raw.description,
        crystal,
        tpsa_options,
        pump,
        fiber,
        filters,
        psf,
        psf_source,
        grid,
        sampling,
        analysis: AnalysisOptions { deconvolve_psf, thresholds },
        outputs: Outputs { directory, products: o.products, formats: o.formats, map_points },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[crystal]
length = "5 mm"
pump_wavelength = "404 nm"
[pump]
bandwidth = "2 nm"
[fiber]
length = "500 m"
gvd = "4.3e-28 s^2/cm"
[[filters]]
name = "s1"
channel = "signal"
bandwidth = "1 nm"
[outputs]
products = ["distributions"]
"#;

    fn parse(text: &str) -> Result<Scenario, CliError> {
        Scenario::from_toml_str(text, Path::new("."))
    }

    #[test]
    fn minimal_resolves_to_si() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.crystal.length, 5e-3);
        assert!((s.fiber.unwrap().gvd - 4.3e-26).abs() < 1e-40);
        assert!((s.crystal.cut_angle.to_degrees() - 41.9).abs() < 0.05);
        assert_eq!(s.filters.len(), 1);
        assert!(s.idler_filter().is_none());
        assert_eq!(s.outputs.directory, PathBuf::from("biphoton-out/t"));
        assert_eq!(s.outputs.formats, vec![Format::Csv, Format::Svg]);
        let h = s.header_lines();
        assert!(h.contains(&"fiber.length_m: 5e2".to_string()), "{h:?}");
    }

    #[test]
    fn bare_number_rejected() {
        let text = MINIMAL.replace("length = \"500 m\"", "length = \"500\"");
        assert!(matches!(parse(&text), Err(CliError::Config(m)) if m.contains("fiber.length")));
        let text = MINIMAL.replace("length = \"500 m\"", "length = 500");
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_and_bad_modulation_rejected() {
        assert!(parse(&MINIMAL.replace("[fiber]", "[fiber]\ncolour = \"red\"")).is_err());
        let both = MINIMAL.replace(
            "[fiber]",
            "[pump.modulation]\nkind = \"double_pulse\"\ndelay = \"1 ps\"\nsplitter_length = \"1 mm\"\n[fiber]",
        );
        assert!(matches!(parse(&both), Err(CliError::Config(_))));
    }

    #[test]
    fn splitter_length_gives_delay() {
        let text = MINIMAL.replace(
            "[fiber]",
            "[pump.modulation]\nkind = \"double_pulse\"\nsplitter_length = \"5 mm\"\nphase = \"180 deg\"\n[fiber]",
        );
        let s = parse(&text).unwrap();
        match s.pump.modulation {
            Modulation::DoublePulse { delay, phase, .. } => {
                assert!(delay > 1e-12 && delay < 2e-12);
                assert!((phase - std::f64::consts::PI).abs() < 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn filter_center_forms() {
        let text = MINIMAL.replace("bandwidth = \"1 nm\"", "bandwidth = \"1 nm\"\ncenter = \"808 nm\"");
        assert!(parse(&text).unwrap().filters[0].filter.center.abs() < 1.0);
        let text = MINIMAL.replace("bandwidth = \"1 nm\"", "bandwidth = \"3e12 rad/s\"\ncenter = \"1e12 rad/s\"");
        let f = parse(&text).unwrap().filters[0].filter;
        assert_eq!((f.center, f.bandwidth), (1e12, 3e12));
    }

    #[test]
    fn samples_need_sampling_section() {
        let text = MINIMAL.replace("[\"distributions\"]", "[\"samples\"]");
        assert!(matches!(parse(&text), Err(CliError::Config(m)) if m.contains("sampling")));
    }
}
