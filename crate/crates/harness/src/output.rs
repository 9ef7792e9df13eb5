//! Report files: JSON, result tables as CSV, and tidy plot-data CSVs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::report::{report_to_json, RunReport};
use crate::sweep::SweepReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Json,
    Csv,
    PlotData,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "plotdata" | "plot" => Ok(Format::PlotData),
            other => Err(format!("unknown format {other:?} (json, csv, plotdata)")),
        }
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const RESULTS_CSV: &str = "results.csv";
pub const WEIGHTS_CSV: &str = "weights.csv";
pub const COMPONENTS_CSV: &str = "components.csv";
pub const HISTORY_CSV: &str = "history.csv";
pub const PLOT_MSE: &str = "plot_mse_bars.csv";
pub const PLOT_WEIGHTS: &str = "plot_weights.csv";
pub const PLOT_LAMBDA: &str = "plot_lambda_weight.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SWEEP_CSV: &str = "sweep.csv";

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_raw(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::decode(path.display().to_string(), format!("{other:?}")),
    }
}

#[derive(Serialize)]
struct MethodRow<'a> {
    method: &'a str,
    mse: f64,
    efficiency: f64,
}

#[derive(Serialize)]
struct WeightRow {
    agent: usize,
    abloc_weight: f64,
    oracle_weight: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct BarRow<'a> {
    method: &'a str,
    mse: f64,
}

#[derive(Serialize)]
struct TidyWeight<'a> {
    agent: usize,
    source: &'a str,
    weight: f64,
}

#[derive(Serialize)]
struct LambdaRow {
    agent: usize,
    lambda: f64,
    abloc_weight: f64,
    beta: f64,
    sigma: f64,
}

fn method_rows(report: &RunReport) -> Vec<MethodRow<'static>> {
    let r = &report.results;
    let eff = |m: f64| (r.mse_baseline - m) / r.mse_baseline;
    vec![
        MethodRow {
            method: "uniform_average",
            mse: r.mse_baseline,
            efficiency: 0.0,
        },
        MethodRow {
            method: "abloc",
            mse: r.mse_abloc,
            efficiency: r.efficiency_abloc,
        },
        MethodRow {
            method: "oracle",
            mse: r.mse_oracle,
            efficiency: r.efficiency_oracle,
        },
        MethodRow {
            method: "oracle_learnable_only",
            mse: r.mse_oracle_learnable_only,
            efficiency: eff(r.mse_oracle_learnable_only),
        },
    ]
}

fn weight_rows(report: &RunReport) -> Vec<WeightRow> {
    let w = &report.weights;
    (0..w.abloc.len())
        .map(|i| WeightRow {
            agent: i,
            abloc_weight: w.abloc[i],
            oracle_weight: w.oracle[i],
            relative_error: (w.abloc[i] - w.oracle[i]) / w.oracle[i],
        })
        .collect()
}

fn history_table(report: &RunReport) -> (Vec<String>, Vec<Vec<String>>) {
    let k = report.config.agents.len();
    let mut header: Vec<String> = [
        "iteration",
        "gamma",
        "alpha",
        "validation_score",
        "relative_change",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..k).map(|i| format!("weight_{i}")));
    header.extend((0..k).map(|i| format!("variance_{i}")));
    let rows = report
        .history
        .iter()
        .map(|h| {
            let mut row = vec![
                h.iteration.to_string(),
                h.gamma.to_string(),
                h.alpha.to_string(),
                h.validation_score.to_string(),
                h.relative_change.to_string(),
            ];
            row.extend(h.weights.as_slice().iter().map(f64::to_string));
            row.extend(h.variances.iter().map(f64::to_string));
            row
        })
        .collect();
    (header, rows)
}

/// Writes the requested formats into `out_dir` (created if missing) and
/// returns the written paths in a fixed order.
pub fn emit_outputs(
    report: &RunReport,
    out_dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                let p = out_dir.join(REPORT_JSON);
                write_text(&p, &report_to_json(report))?;
                written.push(p);
            }
            Format::Csv => {
                let p = out_dir.join(RESULTS_CSV);
                write_rows(&p, &method_rows(report))?;
                written.push(p);

                let p = out_dir.join(WEIGHTS_CSV);
                write_rows(&p, &weight_rows(report))?;
                written.push(p);

                let p = out_dir.join(COMPONENTS_CSV);
                write_rows(&p, &report.components)?;
                written.push(p);

                let p = out_dir.join(HISTORY_CSV);
                let (header, rows) = history_table(report);
                write_raw(&p, &header, &rows)?;
                written.push(p);
            }
            Format::PlotData => {
                let p = out_dir.join(PLOT_MSE);
                let bars: Vec<BarRow> = method_rows(report)
                    .into_iter()
                    .map(|m| BarRow {
                        method: m.method,
                        mse: m.mse,
                    })
                    .collect();
                write_rows(&p, &bars)?;
                written.push(p);

                let p = out_dir.join(PLOT_WEIGHTS);
                let w = &report.weights;
                let tidy: Vec<TidyWeight> = (0..w.abloc.len())
                    .flat_map(|i| {
                        [
                            TidyWeight {
                                agent: i,
                                source: "abloc",
                                weight: w.abloc[i],
                            },
                            TidyWeight {
                                agent: i,
                                source: "oracle",
                                weight: w.oracle[i],
                            },
                        ]
                    })
                    .collect();
                write_rows(&p, &tidy)?;
                written.push(p);

                let p = out_dir.join(PLOT_LAMBDA);
                let scatter: Vec<LambdaRow> = report
                    .config
                    .agents
                    .iter()
                    .enumerate()
                    .map(|(i, a)| LambdaRow {
                        agent: i,
                        lambda: a.lambda,
                        abloc_weight: w.abloc[i],
                        beta: a.beta,
                        sigma: a.sigma,
                    })
                    .collect();
                write_rows(&p, &scatter)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    seed: u64,
    mse_baseline: f64,
    mse_abloc: f64,
    efficiency: f64,
    achievement: Option<f64>,
    iterations: usize,
    early_stop_iteration: usize,
}

/// `sweep.json` holds the full sweep; `sweep.csv` has one row per run.
pub fn emit_sweep(
    report: &SweepReport,
    out_dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = out_dir.join(SWEEP_JSON);
        let text = serde_json::to_string_pretty(report).expect("sweep serializes") + "\n";
        write_text(&p, &text)?;
        written.push(p);
    }
    if formats.contains(&Format::Csv) || formats.contains(&Format::PlotData) {
        let p = out_dir.join(SWEEP_CSV);
        let rows: Vec<SweepRow> = report
            .points
            .iter()
            .flat_map(|pt| {
                pt.reports.iter().map(move |r| SweepRow {
                    value: pt.value,
                    seed: r.config.seed,
                    mse_baseline: r.results.mse_baseline,
                    mse_abloc: r.results.mse_abloc,
                    efficiency: r.results.efficiency_abloc,
                    achievement: r.results.achievement_nominal,
                    iterations: r.results.iterations,
                    early_stop_iteration: r.results.early_stop_iteration,
                })
            })
            .collect();
        write_rows(&p, &rows)?;
        written.push(p);
    }
    Ok(written)
}
