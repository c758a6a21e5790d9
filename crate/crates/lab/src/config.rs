//! TOML run configuration with strict schema and command-line overrides.
//!
//! A file holds optional top-level `seed` and `out` keys and one section per experiment,
//! named after the experiment id with underscores (`[hawking1_left]`). Every section has
//! complete defaults, so an empty file is valid. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiments::{
    car_suite::CarSuiteConfig, dyson::DysonConfig, ground::GroundConfig, hawking1::Hawking1LeftConfig,
    hawking1::Hawking1RightConfig, hawking2::Hawking2Config, hawking3::Hawking3Config, overlap::OverlapConfig,
    temperature::TemperatureConfig,
};
use crate::LabError;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for the randomized suites.
    pub seed: u64,
    /// Output directory; the command line `--out` wins.
    pub out: Option<PathBuf>,
    pub hawking1_left: Hawking1LeftConfig,
    pub hawking1_right: Hawking1RightConfig,
    pub temperature_fit: TemperatureConfig,
    pub overlap_scan: OverlapConfig,
    pub hawking3: Hawking3Config,
    pub hawking2_diagnostics: Hawking2Config,
    pub ground_state: GroundConfig,
    pub dyson_check: DysonConfig,
    pub car_suite: CarSuiteConfig,
}

const TOP_LEVEL: &[&str] = &["seed", "out"];

/// Section name of an experiment id.
pub fn section_of(experiment: &str) -> String {
    experiment.replace('-', "_")
}

impl RunConfig {
    /// Parses `text`, applies `overrides` (`key=value`, where a key without a known
    /// top-level prefix is relative to the section of `experiment`) and validates.
    pub fn from_toml(text: &str, experiment: &str, overrides: &[String]) -> Result<Self, LabError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        let section = section_of(experiment);
        for o in overrides {
            apply_override(&mut table, &section, o)?;
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, experiment: &str, overrides: &[String]) -> Result<Self, LabError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, experiment, overrides)
    }
}

fn apply_override(table: &mut toml::Table, section: &str, item: &str) -> Result<(), LabError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| LabError::Config(format!("override `{item}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(LabError::Config(format!("override `{item}` has an empty key")));
    }
    let mut path: Vec<&str> = key.split('.').collect();
    let known_section = RunConfig::default_sections().contains(&path[0]);
    if !(TOP_LEVEL.contains(&path[0]) || known_section) {
        path.insert(0, section);
    }
    let value = parse_value(raw.trim());
    let mut cur = table;
    for seg in &path[..path.len() - 1] {
        let entry = cur.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("override `{key}`: `{seg}` is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    fn default_sections() -> &'static [&'static str] {
        &[
            "hawking1_left",
            "hawking1_right",
            "temperature_fit",
            "overlap_scan",
            "hawking3",
            "hawking2_diagnostics",
            "ground_state",
            "dyson_check",
            "car_suite",
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("", "hawking1-left", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn relative_and_absolute_overrides() {
        let c = RunConfig::from_toml("", "hawking1-left", &["kappa=2".into(), "ground_state.check_lambda=0.1".into(), "seed=9".into()]).unwrap();
        assert_eq!(c.hawking1_left.kappa, 2.0);
        assert_eq!(c.ground_state.check_lambda, 0.1);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = RunConfig::from_toml("[hawking1_left]\nkapa = 1.0\n", "hawking1-left", &[]).unwrap_err();
        assert!(matches!(e, LabError::Config(ref m) if m.contains("kapa")), "{e}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let e = RunConfig::from_toml("seed = \n", "car-suite", &[]).unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
    }
}
