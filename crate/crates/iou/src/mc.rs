//! Parallel drivers for the core Monte Carlo kernels.
//!
//! Work is split by batch or path index and collected in index order before
//! any reduction, so results do not depend on the thread count.

use iou_core::sampling::{LaplaceRun, MCEstimate, Moments, PathSample, PathSampler};
use iou_core::Result;
use rayon::prelude::*;

use crate::formats::Process;

/// Same estimates as [`LaplaceRun::run`], bit for bit.
pub fn laplace_parallel(run: &LaplaceRun) -> Vec<MCEstimate> {
    let batches: Vec<Vec<Moments>> = (0..run.batches()).into_par_iter().map(|b| run.batch(b)).collect();
    run.finish(batches)
}

/// Paths `0..n_paths` of one process on a shared time grid.
pub fn sample_paths(
    sampler: &PathSampler,
    process: Process,
    times: &[f64],
    seed: u64,
    n_paths: u64,
) -> Result<Vec<PathSample>> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| match process {
            Process::W => sampler.sample_w_stream(times, seed, i),
            Process::X => sampler.sample_x_stream(times, seed, i),
        })
        .collect()
}

/// Moments of `f(path)` over a path collection, folded in path order.
pub fn moments_of(paths: &[PathSample], f: impl Fn(&PathSample) -> f64) -> Moments {
    let mut m = Moments::default();
    for p in paths {
        m.push(f(p));
    }
    m
}
