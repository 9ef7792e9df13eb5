//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets exercise, so the seeds stay meaningful as formats evolve.

use std::fs;
use std::path::PathBuf;

use abloc_harness::dataset_io::{parse_array_csv, parse_manifest};
use abloc_harness::{parse_config, parse_report, render_config};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("config_parse") {
        let parsed = parse_config(&text);
        if name.starts_with("invalid") {
            assert!(parsed.is_err(), "{name}");
        } else {
            let c = parsed.unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(parse_config(&render_config(&c)).unwrap(), c, "{name}");
        }
    }
}

#[test]
fn csv_seeds() {
    for (name, text) in seeds("dataset_csv") {
        let parsed = parse_array_csv(&text);
        assert_eq!(parsed.is_ok(), name != "ragged.csv", "{name}");
    }
}

#[test]
fn manifest_and_report_seeds() {
    for (name, text) in seeds("manifest_parse") {
        parse_manifest(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("report_json") {
        parse_report(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
