//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;
pub mod suite;

use std::path::PathBuf;

use bpmn_soundness::genbench::{generate_blocks, generate_parallel};
use bpmn_soundness::{parse_bpmn, ProcessModel};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every valid corpus file, parsed, sorted by file name.
pub fn corpus_files() -> Vec<(String, ProcessModel)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "bpmn"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let xml = std::fs::read_to_string(&p).unwrap();
            let model = parse_bpmn(&xml).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            (name, model)
        })
        .collect()
}

/// Corpus files plus small generated models.
pub fn corpus() -> Vec<(String, ProcessModel)> {
    let mut models = corpus_files();
    for (n, m) in [(1, 1), (2, 2), (3, 1), (5, 1)] {
        models.push((format!("parallel_{n}_{m}"), generate_parallel(n, m)));
    }
    for k in [1, 2, 3, 6] {
        models.push((format!("blocks_{k}"), generate_blocks(k)));
    }
    models
}

pub fn corpus_model(name: &str) -> ProcessModel {
    corpus_files()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no corpus model {name}"))
        .1
}
