//! Shared fixtures for the benchmark targets: deterministic vector streams
//! drawn through the same seed paths the experiments use.

use gramian::{SamplerSpec, SeedPath, TruncatedVector};

/// `n` draws from the dyadic-spectrum Gaussian in dimension `d`.
pub fn gaussian_stream(d: usize, n: usize, master_seed: u64) -> Vec<TruncatedVector> {
    let sampler = SamplerSpec::default_base(d);
    (0..n)
        .map(|i| {
            sampler
                .sample(SeedPath { master_seed, trial_index: 0, draw_index: i as u64 })
                .expect("base sampler cannot fail")
        })
        .collect()
}
