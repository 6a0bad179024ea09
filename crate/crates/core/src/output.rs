//! Plot-ready result rows in CSV or JSON.
//!
//! One row per (scenario point, metric, seed or seed-mean). Both formats
//! render numbers through the same 11-significant-digit text, so a CSV file
//! and a JSON file of the same results agree field for field.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::engine::{AggregatePoint, NetworkKind, RunResult, SweepResult};
use crate::keying::selftest::Check;
use crate::mobility::MobilityModel;

pub const CSV_HEADER: &str =
    "network_kind,mobility_model,area_length_m,comm_density_2d,comm_density_3d,metric,value,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel {
    Seed(u64),
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub network_kind: NetworkKind,
    pub mobility_model: MobilityModel,
    pub area_length_m: f64,
    pub comm_density_2d: f64,
    pub comm_density_3d: f64,
    pub metric: String,
    /// `None` when the metric is undefined for this run (e.g. never connected).
    pub value: Option<f64>,
    pub seed: SeedLabel,
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("no results to write")]
    Empty,

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Extra context written next to a result file as `<path>.meta.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    pub config_fingerprint: Option<String>,
    pub notes: Vec<String>,
}

/// Notes attached to every result file.
pub fn standard_notes() -> Vec<String> {
    vec![
        "comm_density_3d uses the sphere volume (4/3)*pi*r^3".to_string(),
        format!(
            "comm_density_3d of planar (MANET) boxes assumes a {} m elevation",
            crate::engine::REFERENCE_ELEVATION_M
        ),
        "path metrics are means over snapshots in the final steady window".to_string(),
        "empty value (CSV) or null (JSON) marks a metric undefined for that run".to_string(),
    ]
}

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn metric_name(base: &str, tag: Option<&str>) -> String {
    match tag {
        Some(t) => format!("{base}/{t}"),
        None => base.to_string(),
    }
}

pub fn rows_for_run(run: &RunResult, strategy_tag: Option<&str>) -> Vec<OutputRow> {
    run.summary()
        .into_iter()
        .map(|(name, value)| OutputRow {
            network_kind: run.network_kind,
            mobility_model: run.mobility_model,
            area_length_m: run.area_length_m,
            comm_density_2d: run.comm_density_2d,
            comm_density_3d: run.comm_density_3d,
            metric: metric_name(name, strategy_tag),
            value,
            seed: SeedLabel::Seed(run.seed),
        })
        .collect()
}

fn rows_for_aggregate(
    kind: NetworkKind,
    model: MobilityModel,
    point: &AggregatePoint,
    strategy_tag: Option<&str>,
) -> Vec<OutputRow> {
    point
        .metrics
        .iter()
        .map(|(name, value)| OutputRow {
            network_kind: kind,
            mobility_model: model,
            area_length_m: point.area_length_m,
            comm_density_2d: point.comm_density_2d,
            comm_density_3d: point.comm_density_3d,
            metric: metric_name(name, strategy_tag),
            value: *value,
            seed: SeedLabel::Mean,
        })
        .collect()
}

/// Per area length: every seed's rows, then the seed-mean rows.
pub fn rows_for_sweep(result: &SweepResult) -> Vec<OutputRow> {
    let tag = result.strategy_tag.as_deref();
    let mut rows = Vec::new();
    for point in &result.aggregates {
        for run in result
            .runs
            .iter()
            .filter(|r| (r.area_length_m - point.area_length_m).abs() < 1e-9)
        {
            rows.extend(rows_for_run(run, tag));
        }
        rows.extend(rows_for_aggregate(
            result.network_kind,
            result.mobility_model,
            point,
            tag,
        ));
    }
    rows
}

/// Keeps only rows whose metric (without strategy suffix) is in `names`.
pub fn select_metrics(rows: Vec<OutputRow>, names: &[&str]) -> Vec<OutputRow> {
    rows.into_iter()
        .filter(|r| names.contains(&r.metric.split('/').next().unwrap_or("")))
        .collect()
}

fn text_fields(row: &OutputRow) -> [String; 8] {
    [
        row.network_kind.label().to_string(),
        row.mobility_model.label().to_string(),
        fmt_num(row.area_length_m),
        fmt_num(row.comm_density_2d),
        fmt_num(row.comm_density_3d),
        row.metric.clone(),
        row.value.map(fmt_num).unwrap_or_default(),
        match row.seed {
            SeedLabel::Seed(s) => s.to_string(),
            SeedLabel::Mean => "mean".to_string(),
        },
    ]
}

pub fn render_csv(rows: &[OutputRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))
        .expect("writing to memory");
    for row in rows {
        w.write_record(text_fields(row)).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

fn json_number(text: &str) -> Value {
    text.parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(text.to_string()))
}

pub fn render_json(rows: &[OutputRow]) -> String {
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let objects: Vec<Value> = rows
        .iter()
        .map(|row| {
            let fields = text_fields(row);
            let mut obj = Map::new();
            for (i, (col, text)) in columns.iter().zip(fields).enumerate() {
                let v = match i {
                    0 | 1 | 5 => Value::String(text),
                    6 if row.value.is_none() => Value::Null,
                    7 => match row.seed {
                        SeedLabel::Seed(s) => json!(s),
                        SeedLabel::Mean => json!("mean"),
                    },
                    _ => json_number(&text),
                };
                obj.insert(col.to_string(), v);
            }
            Value::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&objects).expect("plain JSON values");
    s.push('\n');
    s
}

pub fn render(rows: &[OutputRow], format: Format) -> String {
    match format {
        Format::Csv => render_csv(rows),
        Format::Json => render_json(rows),
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_file(path: &Path, text: &str) -> Result<(), OutputError> {
    std::fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_text(text: &str, path: Option<&Path>) -> Result<(), OutputError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| OutputError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Self-test results as `check,passed,detail` rows or a JSON array.
pub fn render_checks(checks: &[Check], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["check", "passed", "detail"]).expect("writing to memory");
            for c in checks {
                w.write_record([c.name, if c.passed { "true" } else { "false" }, &c.detail])
                    .expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
        }
        Format::Json => {
            let items: Vec<Value> = checks
                .iter()
                .map(|c| json!({"check": c.name, "passed": c.passed, "detail": c.detail}))
                .collect();
            let mut s = serde_json::to_string_pretty(&items).expect("plain JSON values");
            s.push('\n');
            s
        }
    }
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`. A file
/// output also gets a `<path>.meta.json` sidecar.
pub fn emit_results(
    rows: &[OutputRow],
    format: Format,
    path: Option<&Path>,
    meta: &Meta,
) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let text = render(rows, format);
    write_text(&text, path)?;
    match path {
        None => Ok(()),
        Some(p) => {
            let sidecar = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config_fingerprint": meta.config_fingerprint,
                "notes": meta.notes,
                "rows": rows.len(),
            });
            let mut s = serde_json::to_string_pretty(&sidecar).expect("plain JSON values");
            s.push('\n');
            write_file(&meta_path(p), &s)
        }
    }
}
