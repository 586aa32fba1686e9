//! Shared fixtures for the benchmarks.

use jamguard_core::{generate_dataset, Dataset, ScenarioMix};

/// A canonical-mix dataset of `n` samples, seed 7.
pub fn fixture(n: usize) -> Dataset {
    generate_dataset(&ScenarioMix::canonical(), n, 7).expect("canonical mix is valid")
}
