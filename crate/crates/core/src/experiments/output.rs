//! Tables, their CSV/JSON encodings, and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use super::ExperimentError;

/// One experiment's output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Not part of the data file; goes to the manifest and stderr.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn new(experiment: ExperimentKind, columns: Vec<String>) -> Self {
        SweepResult {
            experiment,
            columns,
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON with every number rounded exactly as in the CSV; non-finite
    /// values become `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| {
                        format_number(x)
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map_or(serde_json::Value::Null, serde_json::Value::Number)
                    })
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({
            "experiment": self.experiment,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table is serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Decimal with 9 significant digits, trailing zeros dropped.
///
/// Non-finite values print as `nan`, `inf`, `-inf`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut s = String::new();
    if x < 0.0 {
        s.push('-');
    }
    if exp < 0 {
        s.push_str("0.");
        s.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        s.push_str(&digits);
    } else if exp as usize >= digits.len() - 1 {
        s.push_str(&digits);
        s.extend(std::iter::repeat_n('0', exp as usize + 1 - digits.len()));
    } else {
        let (int, frac) = digits.split_at(exp as usize + 1);
        s.push_str(int);
        s.push('.');
        s.push_str(frac);
    }
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub experiment: ExperimentKind,
    pub wall_time_seconds: f64,
    /// Worker-thread cap in effect (0 = automatic).
    pub threads: usize,
    pub rows: usize,
    pub output: Option<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(
        config: &ExperimentConfig,
        result: &SweepResult,
        wall_time_seconds: f64,
        threads: usize,
    ) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            seed: config.seed,
            experiment: result.experiment,
            wall_time_seconds,
            threads,
            rows: result.rows.len(),
            output: config.output.clone(),
            warnings: result.warnings.clone(),
        }
    }

    /// `<output>.manifest.json` next to the data file.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest is serializable");
        s.push('\n');
        s
    }
}

/// Writes the table to `config.output` (plus its manifest) or to stdout.
pub fn write_result(
    config: &ExperimentConfig,
    result: &SweepResult,
    manifest: &RunManifest,
) -> Result<(), ExperimentError> {
    let body = result.render(config.format);
    match &config.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, body)?;
            std::fs::write(RunManifest::path_for(path), manifest.to_json())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
