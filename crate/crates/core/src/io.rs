//! Text and binary export of grids, distributions and histograms.
//!
//! CSV files start with a block of `# key: value` comment lines followed by
//! a column header. The binary grid dump is little-endian:
//!
//! | offset | type      | content                                  |
//! |--------|-----------|------------------------------------------|
//! | 0      | `[u8; 4]` | magic `BPHG`                             |
//! | 4      | `u32`     | format version (1)                       |
//! | 8      | `u64`     | rows                                     |
//! | 16     | `u64`     | columns                                  |
//! | 24     | `f64` × 4 | row start, row step, column start, step  |
//! | 56     | `u64`     | metadata length `m` in bytes             |
//! | 64     | `[u8; m]` | UTF-8 metadata, one header line per `\n` |
//! | 64 + m | `f64` × 2·rows·cols | `re, im` pairs, row-major      |

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};
use crate::measurement::{AxisKind, CoincidenceHistogram, DelayDistribution};

pub const BINARY_MAGIC: [u8; 4] = *b"BPHG";
pub const BINARY_VERSION: u32 = 1;

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn write_header<W: Write>(w: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        for part in line.lines() {
            writeln!(w, "# {part}")?;
        }
    }
    Ok(())
}

/// Reads the leading `#` block (without the marker) and returns it with the
/// remaining text.
fn split_header<R: Read>(mut r: R) -> Result<(Vec<String>, String)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut header = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        match line.strip_prefix('#') {
            Some(rest) => {
                header.push(rest.trim().to_string());
                body_start += line.len();
            }
            None => break,
        }
    }
    Ok((header, text[body_start..].to_string()))
}

/// `row_name,col_name,re,im` rows in row-major order.
pub fn write_grid_csv<W: Write>(
    mut w: W,
    grid: &Grid2<Complex64>,
    names: (&str, &str),
    header: &[String],
) -> Result<()> {
    write_header(&mut w, header)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([names.0, names.1, "re", "im"]).map_err(csv_error)?;
    for j in 0..grid.rows.len {
        let x = grid.rows.value(j).to_string();
        for k in 0..grid.cols.len {
            let v = grid.get(j, k);
            out.write_record([x.as_str(), &grid.cols.value(k).to_string(), &v.re.to_string(), &v.im.to_string()])
                .map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn uniform_axis(values: &[f64], what: &str) -> Result<Axis> {
    if values.len() < 2 {
        return Err(Error::Parse(format!("{what} needs at least two samples")));
    }
    let step = (values[values.len() - 1] - values[0]) / (values.len() - 1) as f64;
    let tol = 1e-6 * step.abs();
    if !(step.abs() > 0.0) || values.windows(2).any(|p| ((p[1] - p[0]) - step).abs() > tol) {
        return Err(Error::Parse(format!("{what} is not uniformly spaced")));
    }
    Ok(Axis::new(values[0], step, values.len()))
}

fn parse_field(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

/// Inverse of [`write_grid_csv`]; returns the grid and the header block.
pub fn read_grid_csv<R: Read>(r: R) -> Result<(Grid2<Complex64>, Vec<String>)> {
    let (header, body) = split_header(r)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut data = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != 4 {
            return Err(Error::Parse(format!("expected 4 columns, found {}", rec.len())));
        }
        let (x, y) = (parse_field(&rec[0])?, parse_field(&rec[1])?);
        if xs.last() != Some(&x) {
            xs.push(x);
        }
        if xs.len() == 1 {
            ys.push(y);
        }
        data.push(Complex64::new(parse_field(&rec[2])?, parse_field(&rec[3])?));
    }
    let rows = uniform_axis(&xs, "row axis")?;
    let cols = uniform_axis(&ys, "column axis")?;
    Ok((Grid2::from_vec(rows, cols, data).map_err(|e| Error::Parse(e.to_string()))?, header))
}

pub fn write_grid_binary<W: Write>(mut w: W, grid: &Grid2<Complex64>, header: &[String]) -> Result<()> {
    w.write_all(&BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(grid.rows.len as u64).to_le_bytes())?;
    w.write_all(&(grid.cols.len as u64).to_le_bytes())?;
    for v in [grid.rows.start, grid.rows.step, grid.cols.start, grid.cols.step] {
        w.write_all(&v.to_le_bytes())?;
    }
    let meta: String = header.iter().flat_map(|l| l.lines()).map(|l| format!("{l}\n")).collect();
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    for v in grid.data() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_binary<R: Read>(mut r: R) -> Result<(Grid2<Complex64>, Vec<String>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != BINARY_MAGIC {
        return Err(Error::Parse("not a grid dump (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported grid dump version {version}")));
    }
    let mut b8 = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let rows = next_u64(&mut r)? as usize;
    let cols = next_u64(&mut r)? as usize;
    let mut f = [0.0f64; 4];
    for v in f.iter_mut() {
        *v = f64::from_bits(next_u64(&mut r)?);
    }
    let meta_len = next_u64(&mut r)? as usize;
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta)?;
    let meta = String::from_utf8(meta).map_err(|_| Error::Parse("grid dump metadata is not UTF-8".into()))?;
    let header = meta.lines().map(str::to_string).collect();
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = f64::from_bits(next_u64(&mut r)?);
        let im = f64::from_bits(next_u64(&mut r)?);
        data.push(Complex64::new(re, im));
    }
    Ok((Grid2::from_vec(Axis::new(f[0], f[1], rows), Axis::new(f[2], f[3], cols), data)?, header))
}

fn axis_column(kind: AxisKind) -> &'static str {
    match kind {
        AxisKind::Delay => "delay_s",
        AxisKind::Frequency => "omega_rad_per_s",
    }
}

/// Two columns, axis and density.
pub fn write_distribution_csv<W: Write>(mut w: W, dist: &DelayDistribution, header: &[String]) -> Result<()> {
    write_header(&mut w, header)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([axis_column(dist.kind), "density"]).map_err(csv_error)?;
    for (x, v) in dist.axis.values().zip(&dist.values) {
        out.write_record([x.to_string(), v.to_string()]).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a two-column distribution (also the tabulated PSF format). The
/// axis kind follows the first column name.
pub fn read_distribution_csv<R: Read>(r: R) -> Result<(DelayDistribution, Vec<String>)> {
    let (header, body) = split_header(r)?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let kind = match reader.headers().map_err(csv_error)?.get(0).map(str::trim) {
        Some(name) if name.starts_with("omega") => AxisKind::Frequency,
        _ => AxisKind::Delay,
    };
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() < 2 {
            return Err(Error::Parse(format!("expected 2 columns, found {}", rec.len())));
        }
        xs.push(parse_field(&rec[0])?);
        vs.push(parse_field(&rec[1])?);
    }
    let axis = uniform_axis(&xs, "distribution axis")?;
    Ok((DelayDistribution::new(axis, vs, kind)?, header))
}

/// `bin_start_s,bin_end_s,count` rows.
pub fn write_histogram_csv<W: Write>(mut w: W, h: &CoincidenceHistogram, header: &[String]) -> Result<()> {
    let mut lines = header.to_vec();
    lines.push(format!("events: {}", h.total));
    lines.push(format!("seed: {}", h.seed));
    write_header(&mut w, &lines)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_start_s", "bin_end_s", "count"]).map_err(csv_error)?;
    let edges = h.edges();
    for (e, c) in edges.windows(2).zip(&h.counts) {
        out.write_record([e[0].to_string(), e[1].to_string(), c.to_string()]).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Header lines of any of the CSV formats above.
pub fn read_csv_header<R: BufRead>(r: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(rest) => out.push(rest.trim().to_string()),
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::sample_coincidences;

    fn sample_grid() -> Grid2<Complex64> {
        Grid2::from_fn(Axis::symmetric(3e13, 8), Axis::new(-1e13, 2.5e12, 6), |x, y| Complex64::new(x * 1e-13, -y / 7e12))
    }

    fn sample_dist() -> DelayDistribution {
        let axis = Axis::symmetric(1e-9, 33);
        DelayDistribution::new(axis, axis.values().map(|t| (-t * t / 1e-19).exp()).collect(), AxisKind::Delay).unwrap()
    }

    #[test]
    fn grid_csv_round_trip() {
        let g = sample_grid();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &g, ("omega_s", "omega_i"), &["crystal: 5 mm".into(), "a\nb".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# crystal: 5 mm\n# a\n# b\nomega_s,omega_i,re,im\n"));
        let (back, header) = read_grid_csv(buf.as_slice()).unwrap();
        assert_eq!(header, vec!["crystal: 5 mm", "a", "b"]);
        assert_eq!(back.data(), g.data());
        assert!((back.rows.step - g.rows.step).abs() < 1e-6 * g.rows.step);
        assert_eq!(back.cols.len, 6);
    }

    #[test]
    fn binary_layout_and_round_trip() {
        let g = sample_grid();
        let mut buf = Vec::new();
        write_grid_binary(&mut buf, &g, &["fiber: 500 m".into(), "seed: 1".into()]).unwrap();
        let meta = b"fiber: 500 m\nseed: 1\n";
        assert_eq!(buf.len(), 64 + meta.len() + 16 * 8 * 6);
        assert_eq!(&buf[0..4], b"BPHG");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), g.rows.start);
        assert_eq!(u64::from_le_bytes(buf[56..64].try_into().unwrap()), meta.len() as u64);
        assert_eq!(&buf[64..64 + meta.len()], meta);
        let d0 = 64 + meta.len();
        assert_eq!(f64::from_le_bytes(buf[d0..d0 + 8].try_into().unwrap()), g.get(0, 0).re);
        let (back, header) = read_grid_binary(buf.as_slice()).unwrap();
        assert_eq!(back, g);
        assert_eq!(header, vec!["fiber: 500 m", "seed: 1"]);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(matches!(read_grid_binary(&b"NOPE\x01\0\0\0"[..]), Err(Error::Parse(_))));
        let mut buf = Vec::new();
        write_grid_binary(&mut buf, &sample_grid(), &[]).unwrap();
        buf.truncate(100);
        assert!(matches!(read_grid_binary(buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn distribution_csv_round_trip() {
        let d = sample_dist();
        let mut buf = Vec::new();
        write_distribution_csv(&mut buf, &d, &["fiber: 500 m".into()]).unwrap();
        let (back, header) = read_distribution_csv(buf.as_slice()).unwrap();
        assert_eq!(header, vec!["fiber: 500 m"]);
        assert_eq!(back.values, d.values);
        assert_eq!(back.kind, AxisKind::Delay);
        assert!((back.axis.step / d.axis.step - 1.0).abs() < 1e-9);
        assert_eq!(read_csv_header(buf.as_slice()).unwrap(), vec!["fiber: 500 m"]);
    }

    #[test]
    fn distribution_csv_rejects_nonuniform_axis() {
        let text = "delay_s,density\n0,1\n1,2\n3,1\n";
        assert!(matches!(read_distribution_csv(text.as_bytes()), Err(Error::Parse(_))));
        let text = "delay_s,density\n0,1\n1,x\n";
        assert!(matches!(read_distribution_csv(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn histogram_csv_totals() {
        let h = sample_coincidences(&sample_dist(), 500, 3).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# events: 500\n# seed: 3\n"));
        let total: u64 = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 500);
    }
}
