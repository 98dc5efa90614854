//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use poolcensor_core::games::{GameFile, GameSpec};
use poolcensor_core::sim::Scenario;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn game(rel: &str) -> GameSpec {
    GameFile::from_json(&read(rel))
        .and_then(|f| f.spec().map_err(Into::into))
        .unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn scenario(rel: &str) -> Scenario {
    Scenario::from_json(&read(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}
