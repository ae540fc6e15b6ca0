//! Independent runs executed concurrently.

use std::collections::BTreeMap;

use impctl_core::sim::{run, Aborted, RunSpec, SimRecord};
use rayon::prelude::*;

pub type RunResult = Result<Vec<SimRecord>, Aborted>;

/// Run every spec on the rayon pool. Each run owns its state, so the
/// results do not depend on scheduling.
pub fn run_batch<K: Ord + Send>(jobs: Vec<(K, RunSpec)>) -> BTreeMap<K, RunResult> {
    jobs.into_par_iter().map(|(key, spec)| (key, run(&spec))).collect()
}
