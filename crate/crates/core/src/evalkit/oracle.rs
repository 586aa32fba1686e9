use std::collections::HashMap;

use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::seed;
use crate::simkit::{generate_dataset, ScenarioMix, FEATURE_COUNT};

pub const BAYES_BINS: usize = 16;
pub const MIN_ORACLE_DRAWS: usize = 10_000;
pub const CANONICAL_BAYES_N_MC: usize = 200_000;

/// Oracle accuracy for the canonical mix at `CANONICAL_BAYES_N_MC` draws, seed 42.
pub const CANONICAL_BAYES_ACCURACY: f64 = 0.98885;

/// Histogram grid over the observed ranges of a reference draw.
struct Grid {
    lo: [f64; FEATURE_COUNT],
    width: [f64; FEATURE_COUNT],
}

impl Grid {
    fn fit(d: &Dataset) -> Grid {
        let mut lo = [f64::INFINITY; FEATURE_COUNT];
        let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
        for s in &d.samples {
            for (j, v) in s.features().into_iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let mut width = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            width[j] = (hi[j] - lo[j]) / BAYES_BINS as f64;
        }
        Grid { lo, width }
    }

    fn cell(&self, x: &[f64; FEATURE_COUNT]) -> u32 {
        let mut idx = 0u32;
        for j in 0..FEATURE_COUNT {
            let b = if self.width[j] > 0.0 {
                ((x[j] - self.lo[j]) / self.width[j]).floor().clamp(0.0, (BAYES_BINS - 1) as f64) as u32
            } else {
                0
            };
            idx = idx * BAYES_BINS as u32 + b;
        }
        idx
    }
}

/// Monte-Carlo estimate of the Bayes-optimal accuracy for `mix`.
///
/// A draw of `n_mc` samples (seed `derive(seed, 0)`) fills a 16-bin-per-axis
/// histogram of joint class mass; each cell decides class 1 only when its
/// class-1 mass is strictly larger. Accuracy is measured on a fresh draw of
/// the same size (seed `derive(seed, 1)`).
pub fn bayes_oracle(mix: &ScenarioMix, n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc < MIN_ORACLE_DRAWS {
        return Err(Error::Oracle(format!(
            "n_mc = {n_mc} is below the minimum of {MIN_ORACLE_DRAWS}"
        )));
    }
    let fit = generate_dataset(mix, n_mc, seed::derive(seed, 0))?;
    let grid = Grid::fit(&fit);
    let mut mass: HashMap<u32, [u64; 2]> = HashMap::new();
    for s in &fit.samples {
        mass.entry(grid.cell(&s.features())).or_default()[s.label as usize] += 1;
    }

    let fresh = generate_dataset(mix, n_mc, seed::derive(seed, 1))?;
    let correct = fresh
        .samples
        .iter()
        .filter(|s| {
            let [c0, c1] = mass.get(&grid.cell(&s.features())).copied().unwrap_or_default();
            u8::from(c1 > c0) == s.label
        })
        .count();
    Ok(correct as f64 / n_mc as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_draws_rejected() {
        assert!(matches!(
            bayes_oracle(&ScenarioMix::canonical(), 9_999, 1),
            Err(Error::Oracle(_))
        ));
    }

    #[test]
    fn pinned_reference_reproduces() {
        let acc = bayes_oracle(&ScenarioMix::canonical(), CANONICAL_BAYES_N_MC, 42).unwrap();
        assert_eq!(acc, CANONICAL_BAYES_ACCURACY);
    }
}
