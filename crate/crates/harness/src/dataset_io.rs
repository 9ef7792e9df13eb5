//! Dataset export and import as a directory of CSV files plus a JSON
//! manifest.
//!
//! Every array is one CSV with a header row and one row per time point
//! (coefficients: one row per dimension). Floats use the shortest
//! representation that parses back to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use abloc_core::model::BIAS_COVARIATES;
use abloc_core::rng::RNG_ALGORITHM;
use abloc_core::{AgentData, Dataset, ExperimentConfig};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DATASET_SCHEMA: &str = "abloc-dataset/1";
pub const MANIFEST_FILE: &str = "manifest.json";

const AGENT_ARRAYS: [&str; 6] = [
    "covariates",
    "coefficients",
    "learnable_bias",
    "stochastic_bias",
    "noise",
    "observations",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub rng: String,
    pub seed: u64,
    pub t: usize,
    pub d: usize,
    pub k: usize,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
}

fn agent_file(agent: usize, array: &str) -> String {
    format!("agent{agent}_{array}.csv")
}

fn header(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|j| format!("{prefix}{j}")).collect()
}

pub fn write_array_csv(path: &Path, columns: &[String], array: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(columns).map_err(|e| csv_io(path, e))?;
    let mut row = Vec::with_capacity(array.ncols());
    for r in array.rows() {
        row.clear();
        row.extend(r.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::decode(path.display().to_string(), format!("{other:?}")),
    }
}

/// Parses a headed numeric CSV. Every row must have the header's width and
/// every cell must be a finite float.
pub fn parse_array_csv(text: &str) -> Result<(Vec<String>, Array2<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::decode("csv header", e))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(HarnessError::decode("csv header", "no columns"));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::decode("csv row", e))?;
        if record.len() != columns.len() {
            return Err(HarnessError::decode(
                "csv row",
                format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    record.len(),
                    columns.len()
                ),
            ));
        }
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| {
                HarnessError::decode("csv cell", format!("row {}: {cell:?}", i + 1))
            })?;
            if !v.is_finite() {
                return Err(HarnessError::decode(
                    "csv cell",
                    format!("row {}: non-finite {cell}", i + 1),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    let array = Array2::from_shape_vec((rows, columns.len()), values)
        .map_err(|e| HarnessError::decode("csv", e))?;
    Ok((columns, array))
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest =
        serde_json::from_str(text).map_err(|e| HarnessError::decode("manifest", e))?;
    if m.schema != DATASET_SCHEMA {
        return Err(HarnessError::decode(
            "manifest",
            format!("unknown schema {:?}", m.schema),
        ));
    }
    if m.k != m.config.agents.len()
        || m.t != m.config.t
        || m.d != m.config.d
        || m.seed != m.config.seed
    {
        return Err(HarnessError::decode(
            "manifest",
            "header fields disagree with config",
        ));
    }
    m.config.validate().map_err(HarnessError::ConfigInvalid)?;
    Ok(m)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes `dataset` under `dir` and returns the manifest that was written.
pub fn write_dataset(dataset: &Dataset, config: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    dataset.check_shapes()?;
    create_dir(dir)?;
    let (t, d) = (dataset.t(), dataset.d());
    let dims = header("dim", d);
    let mut files = vec!["theta.csv".to_string()];
    write_array_csv(&dir.join("theta.csv"), &header("theta", d), &dataset.theta)?;
    for (i, a) in dataset.agents.iter().enumerate() {
        for name in AGENT_ARRAYS {
            let (columns, array) = match name {
                "covariates" => (header("x", a.covariates.ncols()), &a.covariates),
                "coefficients" => (header("a", a.coefficients.ncols()), &a.coefficients),
                "learnable_bias" => (dims.clone(), &a.learnable_bias),
                "stochastic_bias" => (dims.clone(), &a.stochastic_bias),
                "noise" => (dims.clone(), &a.noise),
                _ => (dims.clone(), &a.observations),
            };
            let file = agent_file(i, name);
            write_array_csv(&dir.join(&file), &columns, array)?;
            files.push(file);
        }
    }
    let manifest = Manifest {
        schema: DATASET_SCHEMA.into(),
        rng: RNG_ALGORITHM.into(),
        seed: config.seed,
        t,
        d,
        k: dataset.k(),
        config: config.clone(),
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

fn read_array(dir: &Path, file: &str, shape: (usize, usize)) -> Result<Array2<f64>> {
    let path: PathBuf = dir.join(file);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let (_, array) = parse_array_csv(&text).map_err(|e| match e {
        HarnessError::Decode { what, message } => {
            HarnessError::decode(format!("{file} ({what})"), message)
        }
        other => other,
    })?;
    if array.dim() != shape {
        return Err(HarnessError::decode(
            file,
            format!("shape {:?}, manifest implies {shape:?}", array.dim()),
        ));
    }
    Ok(array)
}

pub fn read_dataset(dir: &Path) -> Result<(Manifest, Dataset)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let manifest = parse_manifest(&text)?;
    let (t, d) = (manifest.t, manifest.d);
    let theta = read_array(dir, "theta.csv", (t, d))?;
    let mut agents = Vec::with_capacity(manifest.k);
    for (i, spec) in manifest.config.agents.iter().enumerate() {
        let arr = |name: &str, shape| read_array(dir, &agent_file(i, name), shape);
        agents.push(AgentData {
            covariates: arr("covariates", (t, spec.p))?,
            coefficients: arr("coefficients", (d, BIAS_COVARIATES))?,
            learnable_bias: arr("learnable_bias", (t, d))?,
            stochastic_bias: arr("stochastic_bias", (t, d))?,
            noise: arr("noise", (t, d))?,
            observations: arr("observations", (t, d))?,
        });
    }
    let dataset = Dataset { theta, agents };
    dataset.check_shapes()?;
    Ok((manifest, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn parse_basic_csv() {
        let (cols, a) = parse_array_csv("x0,x1\n1,2.5\n-3e-2, 4\n").unwrap();
        assert_eq!(cols, ["x0", "x1"]);
        assert_eq!(a, array![[1.0, 2.5], [-0.03, 4.0]]);
    }

    #[test]
    fn header_only_is_empty_array() {
        let (_, a) = parse_array_csv("dim0,dim1\n").unwrap();
        assert_eq!(a.dim(), (0, 2));
    }

    #[test]
    fn rejects_ragged_and_non_numeric() {
        assert!(parse_array_csv("a,b\n1\n").is_err());
        assert!(parse_array_csv("a,b\n1,x\n").is_err());
        assert!(parse_array_csv("a\nNaN\n").is_err());
        assert!(parse_array_csv("a\ninf\n").is_err());
        assert!(parse_array_csv("").is_err());
    }

    #[test]
    fn manifest_rejects_wrong_schema() {
        let m = Manifest {
            schema: "other".into(),
            rng: RNG_ALGORITHM.into(),
            seed: 42,
            t: 2000,
            d: 3,
            k: 4,
            config: ExperimentConfig::reference(),
            files: vec![],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert!(parse_manifest(&text).is_err());
        let fixed = text.replace("\"other\"", &format!("{DATASET_SCHEMA:?}"));
        assert_eq!(parse_manifest(&fixed).unwrap().k, 4);
        assert!(parse_manifest(&fixed.replace("\"k\":4", "\"k\":3")).is_err());
    }
}
