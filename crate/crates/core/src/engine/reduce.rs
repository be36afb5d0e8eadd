//! Reduce-by-key over runs of equal consecutive keys.

use rayon::prelude::*;

use crate::scalar::Fitness;

/// Start offsets of every run of equal keys.
fn run_starts(keys: &[usize]) -> Vec<usize> {
    (0..keys.len())
        .into_par_iter()
        .filter(|&i| i == 0 || keys[i] != keys[i - 1])
        .collect()
}

/// Sum `values` over each maximal run of equal consecutive `keys`.
///
/// Returns the run keys and their sums, in input order. Each run is summed
/// left to right, so the result does not depend on the number of workers.
pub fn reduce_by_key<S: Fitness>(keys: &[usize], values: &[S]) -> (Vec<usize>, Vec<S>) {
    assert_eq!(keys.len(), values.len(), "keys and values must align");
    let starts = run_starts(keys);
    let sums = (0..starts.len())
        .into_par_iter()
        .map(|r| {
            let end = starts.get(r + 1).copied().unwrap_or(keys.len());
            values[starts[r]..end].iter().fold(S::zero(), |acc, &v| acc + v)
        })
        .collect();
    let out_keys = starts.iter().map(|&i| keys[i]).collect();
    (out_keys, sums)
}
