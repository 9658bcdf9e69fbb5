//! Shared fixtures for the benchmarks.

use depthtrack_core::simulator::{builtin_scenario, render};
use depthtrack_core::{Cue, ScoreMatrix, SequenceBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A dense `n x n` cost matrix with roughly `forbidden` of the pairs masked
/// out, returned as the matrix plus the mask.
pub fn random_problem(n: usize, forbidden: f64, seed: u64) -> (ScoreMatrix, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ScoreMatrix::from_fn(n, n, Cue::Match, |_, _| -rng.random_range(0.0..2.5));
    let mask = (0..n * n).map(|_| rng.random_bool(forbidden)).collect();
    (m, mask)
}

/// A rendered builtin scenario, ready to track.
pub fn scenario_bundle(name: &str) -> SequenceBundle {
    let sc = builtin_scenario(name, 1).unwrap_or_else(|| panic!("no builtin scenario `{name}`"));
    render(&sc).expect("builtin scenarios render").bundle
}
