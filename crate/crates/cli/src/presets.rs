//! Scenario files bundled with the binary.

use std::path::Path;

use crate::config::Scenario;
use crate::error::CliError;

pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset { name: $name, source: include_str!(concat!("../presets/", $name, ".cfg")) }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("paper_fig1a"),
    preset!("paper_fig1b"),
    preset!("paper_fig1c"),
    preset!("paper_fig3"),
    preset!("paper_fig4a"),
    preset!("paper_fig4b"),
    preset!("paper_fig5"),
];

pub fn find(name: &str) -> Result<&'static Preset, CliError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset {name:?} (available: {})", names.join(", ")))
    })
}

impl Preset {
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::from_toml_str(self.source, Path::new("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_names_match() {
        for p in PRESETS {
            let s = p.scenario().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(s.name, p.name);
            assert!(!s.description.is_empty());
        }
        assert!(find("paper_fig2").is_err());
    }
}
