//! Micro-benchmark comparing the spanning-tree D-optimality shortcut
//! against the full eigendecomposition route on random connected graphs.
//! Both routes see the same graphs; medians keep a stray slow repetition
//! from skewing the ratio.

use std::time::Instant;

use aslam_core::optimality::{dopt_exact, dopt_graph};
use aslam_core::synth;
use aslam_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub median_fast_s: f64,
    pub median_exact_s: f64,
    /// `median_exact_s / median_fast_s`; how many times faster the
    /// spanning-tree route is.
    pub speedup: f64,
    /// Largest relative disagreement between the two values across the
    /// repetitions, as a sanity check on the shortcut.
    pub max_rel_diff: f64,
}

pub fn benchmark_dopt(sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() || reps == 0 {
        return Err(Error::Config("need at least one size and one repetition".into()));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("graph size must be at least 2, got {n}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut fast_times = Vec::with_capacity(reps);
        let mut exact_times = Vec::with_capacity(reps);
        let mut max_rel_diff = 0.0f64;
        for _ in 0..reps {
            let graph = synth::random_connected_isotropic(n, 0.5..4.0, &mut rng);

            let t = Instant::now();
            let fast = dopt_graph(&graph)?;
            fast_times.push(t.elapsed().as_secs_f64());

            let t = Instant::now();
            let exact = dopt_exact(&graph)?;
            exact_times.push(t.elapsed().as_secs_f64());

            max_rel_diff = max_rel_diff.max((fast - exact).abs() / exact.abs().max(1e-300));
        }
        let median_fast_s = median(&mut fast_times);
        let median_exact_s = median(&mut exact_times);
        rows.push(BenchRow {
            n,
            median_fast_s,
            median_exact_s,
            speedup: median_exact_s / median_fast_s,
            max_rel_diff,
        });
    }
    Ok(rows)
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}
