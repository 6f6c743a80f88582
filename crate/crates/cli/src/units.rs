//! Quantities written as `"<number> <unit>"`, converted to SI.

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Angle,
    /// Group-velocity dispersion, s²/m.
    Gvd,
    AngularFrequency,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Angle => "angle",
            Dimension::Gvd => "GVD",
            Dimension::AngularFrequency => "angular frequency",
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("nm", 1e-9), ("um", 1e-6), ("µm", 1e-6), ("mm", 1e-3), ("cm", 1e-2), ("m", 1.0), ("km", 1e3)],
            Dimension::Time => &[("fs", 1e-15), ("ps", 1e-12), ("ns", 1e-9), ("us", 1e-6), ("s", 1.0)],
            Dimension::Angle => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
            Dimension::Gvd => &[("s^2/m", 1.0), ("s^2/cm", 1e2), ("fs^2/mm", 1e-27), ("ps^2/km", 1e-27)],
            Dimension::AngularFrequency => &[("rad/s", 1.0), ("rad/ps", 1e12), ("rad/fs", 1e15)],
        }
    }
}

/// Parses `text` as a quantity of `dim` and returns its SI value.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, CliError> {
    let mut parts = text.split_whitespace();
    let (Some(number), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        let allowed: Vec<_> = dim.units().iter().map(|u| u.0).collect();
        return Err(CliError::Config(format!(
            "{:?}: expected \"<number> <unit>\" for a {} ({})",
            text,
            dim.name(),
            allowed.join(", ")
        )));
    };
    let value: f64 = number
        .parse()
        .map_err(|_| CliError::Config(format!("{text:?}: {number:?} is not a number")))?;
    if !value.is_finite() {
        return Err(CliError::Config(format!("{text:?}: value must be finite")));
    }
    let factor = dim
        .units()
        .iter()
        .find(|(name, _)| *name == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            let allowed: Vec<_> = dim.units().iter().map(|u| u.0).collect();
            CliError::Config(format!("{text:?}: unknown {} unit {unit:?} (use {})", dim.name(), allowed.join(", ")))
        })?;
    Ok(value * factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(parse_quantity("404 nm", Dimension::Length).unwrap(), 404.0 * 1e-9);
        assert_eq!(parse_quantity("5 mm", Dimension::Length).unwrap(), 5e-3);
        assert_eq!(parse_quantity("1.75 ps", Dimension::Time).unwrap(), 1.75e-12);
        assert!((parse_quantity("180 deg", Dimension::Angle).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!((parse_quantity("4.3e-28 s^2/cm", Dimension::Gvd).unwrap() - 4.3e-26).abs() < 1e-40);
        assert!((parse_quantity("43 fs^2/mm", Dimension::Gvd).unwrap() - 4.3e-26).abs() < 1e-40);
        assert_eq!(parse_quantity("8e13 rad/s", Dimension::AngularFrequency).unwrap(), 8e13);
    }

    #[test]
    fn bare_numbers_and_wrong_units_rejected() {
        for (text, dim) in [
            ("5", Dimension::Length),
            ("5 ps", Dimension::Length),
            ("five mm", Dimension::Length),
            ("1 nm extra", Dimension::Length),
            ("inf m", Dimension::Length),
            ("3 s^2", Dimension::Gvd),
        ] {
            assert!(matches!(parse_quantity(text, dim), Err(CliError::Config(_))), "{text}");
        }
    }
}
