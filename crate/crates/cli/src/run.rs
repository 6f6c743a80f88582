//! Executes a resolved [`Scenario`] and writes its output products.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use biphoton::analysis::{analyze, fringe_detect, Fringe};
use biphoton::dispersion::{angular_frequency, wavelength, FiberSpec};
use biphoton::grid::{Axis, Grid2, TpsaGrid};
use biphoton::io::{write_distribution_csv, write_grid_binary, write_grid_csv, write_histogram_csv};
use biphoton::measurement::{
    convolve_psf, delay_projection, fwhm, sample_coincidences, AxisKind, DelayDistribution, MeasuredSet,
};
use biphoton::tpsa::{apply_filter, build_tpsa_with, rotate_to_pm};
use biphoton::transform::{far_field_valid, feature_width};

use crate::config::{Format, Product, Scenario};
use crate::error::CliError;
use crate::plot::{heatmap, line_plot, Series};

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    /// Report text when the `report` product was requested.
    pub report: Option<String>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        self.write(name, |w| w.write_all(body.as_bytes()).map_err(|e| CliError::io(&path, e)))
    }
}

/// Runs `scenario`, writing into `out_dir` (or the configured directory).
pub fn run_scenario(scenario: &Scenario, out_dir: Option<&Path>) -> Result<RunSummary, CliError> {
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| scenario.outputs.directory.clone());
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut out = Writer { dir: dir.clone(), files: Vec::new() };
    let header = scenario.header_lines();
    let o = &scenario.outputs;

    if o.wants(Product::PumpSpectrum) {
        write_pump_spectrum(scenario, &header, &mut out)?;
    }

    let needs_tpsa = [Product::TpsaMap, Product::Distributions, Product::Report, Product::Samples]
        .iter()
        .any(|p| o.wants(*p));
    let mut report = None;
    if needs_tpsa {
        let tpsa = build_tpsa_with(&scenario.grid, &scenario.pump, &scenario.crystal, scenario.tpsa_options)?;
        tpsa.check_finite()?;
        if o.wants(Product::TpsaMap) {
            write_tpsa_map(scenario, &tpsa, &header, &mut out)?;
        }
        let measured = [Product::Distributions, Product::Report, Product::Samples].iter().any(|p| o.wants(*p));
        if measured {
            let fiber = scenario
                .fiber
                .ok_or_else(|| biphoton::Error::Domain("far-field undefined: no [fiber] section".into()))?;
            let dists = distributions(scenario, &tpsa, &fiber)?;
            if o.wants(Product::Distributions) {
                write_distributions(scenario, &dists, &header, &mut out)?;
            }
            if o.wants(Product::Report) {
                let text = report_text(scenario, &dists, &fiber, &header)?;
                out.text("report.txt", &text)?;
                report = Some(text);
            }
            if o.wants(Product::Samples) {
                write_samples(scenario, &dists[0].1, &header, &mut out)?;
            }
        }
    }

    Ok(RunSummary { directory: dir, files: out.files, report })
}

fn write_pump_spectrum(s: &Scenario, header: &[String], out: &mut Writer) -> Result<(), CliError> {
    // Ω_p = Ω_s + Ω_i spans twice the grid half-width; an odd count keeps Ω_p = 0.
    let n = s.grid.points();
    let half = 2.0 * s.grid.omega_max();
    let axis = Axis::new(-half, 2.0 * half / n as f64, n + 1);
    let values: Vec<f64> = axis.values().map(|w| s.pump.amplitude(w).norm_sqr()).collect();
    let dist = DelayDistribution::new(axis, values, AxisKind::Frequency)?;
    if s.outputs.format(Format::Csv) {
        out.write("pump_spectrum.csv", |w| Ok(write_distribution_csv(w, &dist, header)?))?;
    }
    if s.outputs.format(Format::Svg) {
        let w0 = angular_frequency(s.pump.wavelength);
        let (lo, hi) = support(&[&dist], 1e-3);
        let peak = dist.peak();
        let (xs, ys): (Vec<f64>, Vec<f64>) = axis
            .values()
            .zip(&dist.values)
            .filter(|(w, _)| *w >= lo && *w <= hi)
            .map(|(w, v)| (wavelength(w0 + w) * 1e9, v / peak))
            .unzip();
        let svg = line_plot(&[Series { label: "|A(ω_p)|²", x: &xs, y: &ys }], "Pump spectrum", "pump wavelength (nm)", "intensity (peak = 1)", header);
        out.text("pump_spectrum.svg", &svg)?;
    }
    Ok(())
}

fn decimated(values: &Grid2<Complex64>, target: usize) -> Grid2<Complex64> {
    let stride = values.rows.len.max(values.cols.len).div_ceil(target).max(1);
    let rows = Axis::new(values.rows.start, values.rows.step * stride as f64, values.rows.len.div_ceil(stride));
    let cols = Axis::new(values.cols.start, values.cols.step * stride as f64, values.cols.len.div_ceil(stride));
    let mut data = Vec::with_capacity(rows.len * cols.len);
    for j in 0..rows.len {
        for k in 0..cols.len {
            data.push(values.get(j * stride, k * stride));
        }
    }
    Grid2::from_vec(rows, cols, data).expect("dimensions match")
}

fn write_tpsa_map(s: &Scenario, tpsa: &TpsaGrid, header: &[String], out: &mut Writer) -> Result<(), CliError> {
    let o = &s.outputs;
    if o.format(Format::Csv) {
        let small = decimated(&tpsa.values, o.map_points);
        out.write("tpsa_map.csv", |w| Ok(write_grid_csv(w, &small, ("omega_s_rad_per_s", "omega_i_rad_per_s"), header)?))?;
    }
    if o.format(Format::Bin) {
        out.write("tpsa_map.bin", |w| Ok(write_grid_binary(w, &tpsa.values, header)?))?;
    }
    if o.format(Format::Svg) {
        let pm = rotate_to_pm(tpsa).intensity();
        let peak = pm.data().iter().cloned().fold(0.0, f64::max);
        // Bounding box of the visible support, padded by 10 %.
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..pm.rows.len {
            for k in 0..pm.cols.len {
                if pm.get(j, k) > 1e-3 * peak {
                    let (y, x) = (pm.rows.value(j), pm.cols.value(k));
                    (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
                }
            }
        }
        if !x0.is_finite() {
            return Err(biphoton::Error::Numeric("TPSA map is identically zero".into()).into());
        }
        let pad = |a: f64, b: f64| {
            let p = 0.1 * (b - a).max(pm.cols.step);
            (a - p, b + p)
        };
        let ((x0, x1), (y0, y1)) = (pad(x0, x1), pad(y0, y1));
        let n = o.map_points;
        let xs: Vec<f64> = (0..n).map(|k| x0 + (x1 - x0) * k as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|j| y0 + (y1 - y0) * j as f64 / (n - 1) as f64).collect();
        let mut values = Vec::with_capacity(n * n);
        for &y in &ys {
            for &x in &xs {
                values.push(pm.sample_bilinear(y, x));
            }
        }
        let scale = 1e-12;
        let xs: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let ys: Vec<f64> = ys.iter().map(|y| y * scale).collect();
        let svg = heatmap(&xs, &ys, &values, "|F(Ω₊, Ω₋)|²", "Ω₋ (10¹² rad/s)", "Ω₊ (10¹² rad/s)", header);
        out.text("tpsa_map.svg", &svg)?;
    }
    Ok(())
}

/// The unfiltered distribution followed by one per configured filter.
fn distributions(s: &Scenario, tpsa: &TpsaGrid, fiber: &FiberSpec) -> Result<Vec<(String, DelayDistribution)>, CliError> {
    let feature = feature_width(tpsa);
    if fiber.far_field_scale() != 0.0 && !far_field_valid(fiber, feature) {
        log::warn!("fiber k''l = {:.3e} s^2 is short of the far field for this source", fiber.far_field_scale());
    }
    let project = |t: &TpsaGrid| -> Result<DelayDistribution, CliError> {
        let d = delay_projection(t, fiber)?;
        Ok(match &s.psf {
            Some(p) => convolve_psf(&d, p)?,
            None => d,
        })
    };
    let mut out = vec![("unfiltered".to_string(), project(tpsa)?)];
    for f in &s.filters {
        out.push((f.name.clone(), project(&apply_filter(tpsa, &f.filter, true))?));
    }
    Ok(out)
}

/// Fraction of the peak that sets the plotted delay range.
const PLOT_LEVEL: f64 = 1e-2;

/// Delay range where any of `dists` exceeds `level` × its peak.
fn support(dists: &[&DelayDistribution], level: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for d in dists {
        let peak = d.peak();
        for (x, v) in d.axis.values().zip(&d.values) {
            if *v > level * peak {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    if lo > hi {
        return (dists[0].axis.start, dists[0].axis.last());
    }
    let pad = 0.1 * (hi - lo);
    (lo - pad, hi + pad)
}

fn write_distributions(
    s: &Scenario,
    dists: &[(String, DelayDistribution)],
    header: &[String],
    out: &mut Writer,
) -> Result<(), CliError> {
    if s.outputs.format(Format::Csv) {
        for (name, d) in dists {
            let mut h = header.to_vec();
            h.push(format!("distribution: {name}"));
            out.write(&format!("distribution_{name}.csv"), |w| Ok(write_distribution_csv(w, d, &h)?))?;
        }
    }
    if s.outputs.format(Format::Svg) {
        let refs: Vec<&DelayDistribution> = dists.iter().map(|(_, d)| d).collect();
        let (lo, hi) = support(&refs, PLOT_LEVEL);
        let curves: Vec<(Vec<f64>, Vec<f64>)> = dists
            .iter()
            .map(|(_, d)| {
                let peak = d.peak();
                d.axis
                    .values()
                    .zip(&d.values)
                    .filter(|(t, _)| *t >= lo && *t <= hi)
                    .map(|(t, v)| (t * 1e12, v / peak))
                    .unzip()
            })
            .collect();
        let series: Vec<Series> = dists
            .iter()
            .zip(&curves)
            .map(|((name, _), (x, y))| Series { label: name, x, y })
            .collect();
        let svg = line_plot(&series, &format!("{}: coincidence delay", s.name), "t_s − t_i (ps)", "coincidences (peak = 1)", header);
        out.text("distributions.svg", &svg)?;
    }
    Ok(())
}

fn fringe_lines(s: &mut String, name: &str, f: &Fringe) {
    let _ = writeln!(s, "fringe_{name}_detected: {}", f.detected);
    let _ = writeln!(s, "fringe_{name}_maxima: {}", f.maxima);
    let _ = writeln!(s, "fringe_{name}_period_s: {:.6e}", f.period);
    let _ = writeln!(s, "fringe_{name}_visibility: {:.4}", f.visibility);
}

fn report_text(
    s: &Scenario,
    dists: &[(String, DelayDistribution)],
    fiber: &FiberSpec,
    header: &[String],
) -> Result<String, CliError> {
    let mut text = String::new();
    for line in header {
        let _ = writeln!(text, "# {line}");
    }
    let by_name = |name: &str| dists.iter().find(|(n, _)| n == name).map(|(_, d)| d.clone());
    match (s.signal_filter(), s.idler_filter()) {
        (Some(sf), Some(idf)) => {
            let set = MeasuredSet {
                unfiltered: dists[0].1.clone(),
                signal_filtered: by_name(&sf.name).expect("filter was projected"),
                idler_filtered: by_name(&idf.name).expect("filter was projected"),
            };
            let r = analyze(&set, fiber, &s.analysis)?;
            let _ = writeln!(text, "report: full");
            let _ = writeln!(text, "signal_filter: {}", sf.name);
            let _ = writeln!(text, "idler_filter: {}", idf.name);
            text.push_str(&r.to_key_values());
        }
        _ => {
            let _ = writeln!(text, "report: partial (tilt and R need one signal and one idler filter)");
            let beta = fiber.far_field_scale().abs();
            for (name, d) in dists {
                let w = fwhm(d)?;
                let _ = writeln!(text, "delay_fwhm_{name}_s: {:.6e}", w.width);
                let _ = writeln!(text, "delta_omega_{name}_rad_per_s: {:.6e}", w.width / beta);
                let _ = writeln!(text, "multimodal_{name}: {}", w.multimodal);
                fringe_lines(&mut text, name, &fringe_detect(d, &s.analysis.thresholds));
            }
        }
    }
    Ok(text)
}

fn write_samples(s: &Scenario, unfiltered: &DelayDistribution, header: &[String], out: &mut Writer) -> Result<(), CliError> {
    let sm = s.sampling.expect("validated with the config");
    let dist = unfiltered.clone().with_background(sm.background)?;
    let h = sample_coincidences(&dist, sm.events, sm.seed)?;
    let mut head = header.to_vec();
    head.push("distribution: unfiltered".into());
    out.write("samples_unfiltered.csv", |w| Ok(write_histogram_csv(w, &h, &head)?))?;
    if s.outputs.format(Format::Svg) {
        let (lo, hi) = support(&[unfiltered], PLOT_LEVEL);
        let (xs, ys): (Vec<f64>, Vec<f64>) = h
            .centers()
            .into_iter()
            .zip(&h.counts)
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|(t, c)| (t * 1e12, *c as f64))
            .unzip();
        let svg = line_plot(
            &[Series { label: "counts", x: &xs, y: &ys }],
            &format!("{}: {} sampled coincidences", s.name, sm.events),
            "t_s − t_i (ps)",
            "counts per bin",
            header,
        );
        out.text("samples_unfiltered.svg", &svg)?;
    }
    Ok(())
}
