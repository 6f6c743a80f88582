//! Regression comparison of two distribution CSV files.

use std::fs::File;
use std::path::Path;

use biphoton::io::read_distribution_csv;
use biphoton::measurement::DelayDistribution;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Largest absolute difference of the peak-normalized curves.
    pub max_deviation: f64,
    /// `‖a − b‖₂ / ‖b‖₂` of the peak-normalized curves.
    pub l2_deviation: f64,
    /// Number of common sample points.
    pub points: usize,
}

impl Comparison {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Compares `a` against the reference `b` on their common axis range.
///
/// Both curves are normalized to unit peak and linearly resampled on the
/// finer of the two steps over the overlap.
pub fn compare_distributions(a: &DelayDistribution, b: &DelayDistribution) -> Result<Comparison, CliError> {
    if a.kind != b.kind {
        return Err(CliError::Config("compare: axis kinds differ (delay vs frequency)".into()));
    }
    let (pa, pb) = (a.peak(), b.peak());
    if !(pa > 0.0) || !(pb > 0.0) {
        return Err(biphoton::Error::Domain("compare: a distribution has no positive peak".into()).into());
    }
    let lo = a.axis.start.max(b.axis.start);
    let hi = a.axis.last().min(b.axis.last());
    let step = a.axis.step.min(b.axis.step);
    if !(hi > lo) {
        return Err(biphoton::Error::Domain(format!(
            "compare: axes do not overlap ([{:.4e}, {:.4e}] vs [{:.4e}, {:.4e}])",
            a.axis.start,
            a.axis.last(),
            b.axis.start,
            b.axis.last()
        ))
        .into());
    }
    let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize + 1;
    let (mut max_dev, mut diff2, mut ref2) = (0.0f64, 0.0, 0.0);
    for k in 0..n {
        let x = (lo + k as f64 * step).min(hi);
        let (va, vb) = (a.value_at(x) / pa, b.value_at(x) / pb);
        max_dev = max_dev.max((va - vb).abs());
        diff2 += (va - vb).powi(2);
        ref2 += vb * vb;
    }
    Ok(Comparison { max_deviation: max_dev, l2_deviation: (diff2 / ref2).sqrt(), points: n })
}

fn load(path: &Path) -> Result<DelayDistribution, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let (d, _) = read_distribution_csv(file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(d)
}

/// Loads both files, compares them and fails with exit code 3 above `tol`.
pub fn compare_files(a: &Path, b: &Path, tol: f64) -> Result<Comparison, CliError> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(CliError::Config(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    let c = compare_distributions(&load(a)?, &load(b)?)?;
    if c.passes(tol) {
        Ok(c)
    } else {
        Err(CliError::CompareFailed(format!(
            "max deviation {:.6e} exceeds tolerance {tol:e} (l2 {:.6e}, {} points)",
            c.max_deviation, c.l2_deviation, c.points
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use biphoton::grid::Axis;
    use biphoton::measurement::AxisKind;

    fn gauss(axis: Axis, center: f64, height: f64) -> DelayDistribution {
        DelayDistribution::new(axis, axis.values().map(|t| height * (-(t - center).powi(2) / 2.0).exp()).collect(), AxisKind::Delay)
            .unwrap()
    }

    #[test]
    fn identical_and_rescaled_curves_agree() {
        let axis = Axis::symmetric(6.0, 201);
        let c = compare_distributions(&gauss(axis, 0.0, 1.0), &gauss(axis, 0.0, 7.5)).unwrap();
        assert!(c.max_deviation < 1e-15 && c.l2_deviation < 1e-15);
        assert_eq!(c.points, 201);
    }

    #[test]
    fn different_sampling_is_resampled() {
        let a = gauss(Axis::symmetric(6.0, 401), 0.0, 1.0);
        let b = gauss(Axis::symmetric(5.0, 101), 0.0, 1.0);
        let c = compare_distributions(&a, &b).unwrap();
        // Linear interpolation of a unit Gaussian at step 0.1: h²/8 · max|g''| = 1.25e-3.
        assert!(c.max_deviation < 1.25e-3, "{c:?}");
    }

    #[test]
    fn disjoint_axes_are_an_error() {
        let a = gauss(Axis::new(0.0, 0.1, 10), 0.0, 1.0);
        let b = gauss(Axis::new(5.0, 0.1, 10), 5.0, 1.0);
        assert!(matches!(compare_distributions(&a, &b), Err(CliError::Core(biphoton::Error::Domain(_)))));
    }
}
