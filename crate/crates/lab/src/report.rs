//! Experiment output: tables, assertions, summaries and their on-disk form.
//!
//! Files for an experiment `id` use the stem `id` with dashes replaced by underscores:
//! `<stem>.csv` (main table), `<stem>_<name>.csv` (extra tables), `<stem>.json` (summary
//! and assertions) and `<stem>_<series>.dat` (two-column plot data).

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

/// One checked claim. `observed` is compared with `bound` according to `relation`.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub id: String,
    pub passed: bool,
    pub observed: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub note: String,
}

impl Assertion {
    pub fn at_most(id: impl Into<String>, observed: f64, bound: f64, note: impl Into<String>) -> Self {
        Assertion { id: id.into(), passed: observed <= bound, observed, relation: "<=", bound, note: note.into() }
    }

    pub fn at_least(id: impl Into<String>, observed: f64, bound: f64, note: impl Into<String>) -> Self {
        Assertion { id: id.into(), passed: observed >= bound, observed, relation: ">=", bound, note: note.into() }
    }

    /// Boolean claim; `observed` is 1 or 0.
    pub fn holds(id: impl Into<String>, ok: bool, note: impl Into<String>) -> Self {
        Assertion {
            id: id.into(),
            passed: ok,
            observed: if ok { 1.0 } else { 0.0 },
            relation: "==",
            bound: 1.0,
            note: note.into(),
        }
    }
}

/// Numeric table written as CSV with a header row and 17 significant digits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            s.push_str(&cells.join(","));
            s.push_str("\r\n");
        }
        s
    }
}

/// `{:.16e}` (17 significant digits); non-finite values as `nan`, `inf`, `-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub id: String,
    /// Main table first, then named extra tables.
    pub tables: Vec<(String, Table)>,
    pub summary: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub series: Vec<Series>,
}

impl Report {
    pub fn new(id: &str, main: Table) -> Self {
        Report { id: id.into(), tables: vec![(String::new(), main)], summary: Map::new(), assertions: Vec::new(), series: Vec::new() }
    }

    pub fn main_table(&self) -> &Table {
        &self.tables[0].1
    }

    pub fn add_table(&mut self, name: &str, t: Table) {
        self.tables.push((name.into(), t));
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.into(), v.into());
    }

    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn add_series(&mut self, name: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series { name: name.into(), points });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.assertions.iter().filter(|a| !a.passed).map(|a| a.id.as_str()).collect()
    }

    pub fn assertion(&self, id: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.id == id)
    }

    pub fn stem(&self) -> String {
        self.id.replace('-', "_")
    }

    pub fn to_json(&self) -> String {
        let mut root = Map::new();
        root.insert("experiment".into(), self.id.clone().into());
        root.insert("passed".into(), self.passed().into());
        root.insert("failing".into(), self.failing().into());
        root.insert("assertions".into(), serde_json::to_value(&self.assertions).expect("assertions serialize"));
        root.insert("summary".into(), Value::Object(self.summary.clone()));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json");
        s.push('\n');
        s
    }

    /// Writes all artifacts into `dir` (created if missing) and returns their paths.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.stem();
        let mut paths = Vec::new();
        for (name, table) in &self.tables {
            let file = if name.is_empty() { format!("{stem}.csv") } else { format!("{stem}_{name}.csv") };
            let p = dir.join(file);
            std::fs::write(&p, table.to_csv())?;
            paths.push(p);
        }
        let p = dir.join(format!("{stem}.json"));
        std::fs::write(&p, self.to_json())?;
        paths.push(p);
        for s in &self.series {
            let mut text = String::new();
            for (x, y) in &s.points {
                let _ = writeln!(text, "{} {}", format_number(*x), format_number(*y));
            }
            let p = dir.join(format!("{stem}_{}.dat", s.name));
            std::fs::write(&p, text)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_seventeen_digits() {
        let mut t = Table::new(&["t", "value"]);
        t.push(vec![2.0, 0.1]);
        let csv = t.to_csv();
        assert!(csv.starts_with("t,value\r\n"));
        assert!(csv.contains("2.0000000000000000e0,1.0000000000000001e-1"));
    }

    #[test]
    fn nan_observation_fails_both_relations() {
        assert!(!Assertion::at_most("a", f64::NAN, 1.0, "").passed);
        assert!(!Assertion::at_least("b", f64::NAN, 1.0, "").passed);
    }
}
