//! Monte Carlo bookkeeping: running moments, estimates and seeded streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean with its Monte Carlo standard error. Exact computations carry `stderr = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Samples dropped because the observable was not finite.
    pub excluded: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
            samples: 0,
            excluded: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.samples == 0
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Welford accumulator. Merging uses Chan's pairwise update, so a stream of
/// identical values keeps the mean bit-exact and the variance at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
    excluded: usize,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        if !value.is_finite() {
            self.excluded += 1;
            return;
        }
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        self.excluded += other.excluded;
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            let excluded = self.excluded;
            *self = *other;
            self.excluded = excluded;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: self.stderr(),
            samples: self.count,
            excluded: self.excluded,
        }
    }
}

/// Per-path random stream.
///
/// Split rule: the root seed keys a ChaCha8 generator through
/// `seed_from_u64`, and path `i` reads stream number `i` of that key. Streams
/// never overlap, and the mapping does not depend on thread scheduling.
pub fn stream_rng(root_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for an independent sub-experiment.
pub fn child_seed(root_seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = root_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const BLOCK: usize = 256;

/// Runs `n` independent replicas in fixed-size blocks on the rayon pool and
/// folds each block sequentially. Blocks come back in index order, so the
/// result is the same for every thread count.
pub fn blocked_replicas<A, F, E>(n: usize, init: impl Fn() -> A + Sync, step: F) -> Result<Vec<A>, E>
where
    A: Send,
    E: Send,
    F: Fn(&mut A, usize) -> Result<(), E> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                step(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect()
}
