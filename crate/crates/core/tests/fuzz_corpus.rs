//! Replays the fuzz seed corpus through the same checks as the fuzz targets.

use std::path::PathBuf;

use blockade_cluster::cli::config::{parse_args, parse_axis, parse_config_text, Params};
use blockade_cluster::cli::output::Document;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_text_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("config_text") {
        if let Ok(entries) = parse_config_text(std::str::from_utf8(&data).unwrap()) {
            accepted += 1;
            assert!(entries.iter().all(|(k, _)| !k.is_empty() && !k.contains('_')), "{name}");
            let _ = Params::from_entries(entries).take_or("seed", 0u64);
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn argv_seeds() {
    for (name, data) in seeds("argv") {
        let text = String::from_utf8(data).unwrap();
        let args: Vec<&str> = text.split('\0').filter(|a| !a.is_empty()).collect();
        let inv = parse_args(&args).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(inv.help || inv.subcommand.is_some(), "{name}");
    }
}

#[test]
fn sweep_axis_seeds() {
    for (name, data) in seeds("sweep_axis") {
        let raw = std::str::from_utf8(&data).unwrap();
        match parse_axis(raw, 10_000) {
            Ok(axis) => {
                assert!(!axis.values.is_empty() && axis.values.len() <= 10_000, "{name}");
                assert!(axis.values.iter().all(|v| v.is_finite()), "{name}");
            }
            Err(_) => assert!(name.contains("empty") || name.contains("huge"), "{name} rejected"),
        }
    }
}

#[test]
fn json_document_seeds() {
    for (name, data) in seeds("json_document") {
        let doc: Document = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        let text = serde_json::to_string(&doc).unwrap();
        let again: Document = serde_json::from_str(&text).unwrap();
        assert_eq!(again, doc, "{name}");
    }
}
