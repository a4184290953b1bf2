use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config_space::LabeledConfiguration;
use crate::error::Result;
use crate::wavefunction::WaveFunction;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "IDBM_WORKERS";

/// Generator for draw `index` of `branch`: ChaCha8 keyed by the seed, on
/// stream (branch << 40) | index. Every draw is reproducible on its own.
pub fn stream_rng(seed: u64, branch: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((branch << 40) | index);
    rng
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers.or_else(workers_from_env) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// M i.i.d. draws from |ψ|², one counter-derived stream per draw.
pub fn sample_initial(psi: &WaveFunction, m: usize, seed: u64) -> Result<Vec<LabeledConfiguration>> {
    sample_branch(psi, m, seed, 0)
}

pub fn sample_branch(psi: &WaveFunction, m: usize, seed: u64, branch: u64) -> Result<Vec<LabeledConfiguration>> {
    let sampler = psi.sampler();
    let d = psi.dim();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, branch, i as u64);
            LabeledConfiguration::new(d, sampler.draw(&mut rng))
        })
        .collect()
}
