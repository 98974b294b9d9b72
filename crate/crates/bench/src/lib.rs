//! Inputs shared by the benchmarks.

use std::path::Path;

use snowsat::fixtures::{load_fixture_dir, Fixture};
use snowsat::Graph;

/// The frozen fixture corpus of the core crate.
pub fn fixtures() -> Vec<Fixture> {
    load_fixture_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")).expect("fixture corpus")
}

/// A fully open `k x k` grid.
pub fn open_grid(k: usize) -> Graph {
    Graph::grid(k, k, &vec![true; k * k])
}
