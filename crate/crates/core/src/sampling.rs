//! Point streams on the open simplex `{a + b + c = 1, a, b, c > 0}`.
//!
//! Monte-Carlo streams are cut into fixed-length chunks; chunk `k` draws from
//! ChaCha8 stream `k` of the run seed. Work is distributed by chunk and
//! results are merged in chunk order, so output never depends on the number
//! of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};
use crate::point::CurvaturePoint;
use crate::Point3;

/// Samples per Monte-Carlo chunk.
pub const CHUNK_LEN: u64 = 1 << 14;

/// Points with a coordinate below this are redrawn.
pub const MIN_COORDINATE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform on the simplex via normalized unit-rate exponentials.
    MonteCarlo { count: u64, seed: u64 },
    /// Lattice points `(i, j, k)/resolution` with `i, j, k ≥ 1`.
    Grid { resolution: u32 },
}

impl Sampler {
    pub fn len(&self) -> u64 {
        match *self {
            Sampler::MonteCarlo { count, .. } => count,
            Sampler::Grid { resolution } => {
                let r = resolution as u64;
                if r < 3 {
                    0
                } else {
                    (r - 1) * (r - 2) / 2
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chunk_count(&self) -> u64 {
        match *self {
            Sampler::MonteCarlo { count, .. } => count.div_ceil(CHUNK_LEN),
            Sampler::Grid { resolution } => (resolution as u64).saturating_sub(2),
        }
    }

    pub fn chunk(&self, k: u64) -> ChunkIter {
        match *self {
            Sampler::MonteCarlo { count, seed } => {
                let start = k * CHUNK_LEN;
                let len = CHUNK_LEN.min(count.saturating_sub(start));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                ChunkIter::MonteCarlo {
                    rng,
                    remaining: len,
                }
            }
            Sampler::Grid { resolution } => ChunkIter::GridRow {
                resolution,
                i: k as u32 + 1,
                j: 1,
            },
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.chunk_count()).flat_map(move |k| self.chunk(k))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Sampler::MonteCarlo { count: 0, .. } => Err(CertError::InvalidArgument(
                "sample count must be at least 1".into(),
            )),
            Sampler::Grid { resolution } if resolution < 2 => Err(CertError::InvalidArgument(
                "grid resolution must be at least 2".into(),
            )),
            _ => Ok(()),
        }
    }
}

pub enum ChunkIter {
    MonteCarlo { rng: ChaCha8Rng, remaining: u64 },
    GridRow { resolution: u32, i: u32, j: u32 },
}

impl Iterator for ChunkIter {
    type Item = Point3;

    fn next(&mut self) -> Option<Point3> {
        match self {
            ChunkIter::MonteCarlo { rng, remaining } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                Some(draw_simplex(rng))
            }
            ChunkIter::GridRow { resolution, i, j } => {
                let r = *resolution;
                if *i + *j >= r {
                    return None;
                }
                let k = r - *i - *j;
                let rf = r as f64;
                let p = [*i as f64 / rf, *j as f64 / rf, k as f64 / rf];
                *j += 1;
                Some(CurvaturePoint::new_unchecked(p))
            }
        }
    }
}

fn draw_simplex(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let e: [f64; 3] = [rng.sample(Exp1), rng.sample(Exp1), rng.sample(Exp1)];
        let s = e[0] + e[1] + e[2];
        let p = e.map(|x| x / s);
        if p.iter().all(|&x| x >= MIN_COORDINATE) {
            return CurvaturePoint::new_unchecked(p);
        }
    }
}

/// `count` uniform points on the simplex, reproducible from `seed`.
pub fn sample_simplex(count: u64, seed: u64) -> impl Iterator<Item = Point3> {
    let s = Sampler::MonteCarlo { count, seed };
    (0..s.chunk_count()).flat_map(move |k| s.chunk(k))
}

/// Barycentric lattice points with all coordinates positive.
pub fn grid_simplex(resolution: u32) -> impl Iterator<Item = Point3> {
    let s = Sampler::Grid { resolution };
    (0..s.chunk_count()).flat_map(move |k| s.chunk(k))
}

/// Runs `f` on every chunk with `workers` threads (0 = rayon default) and
/// returns the results in chunk order.
pub fn map_chunks<R, F>(sampler: &Sampler, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(ChunkIter) -> R + Sync + Send,
{
    let n = sampler.chunk_count();
    let run = || {
        (0..n)
            .into_par_iter()
            .map(|k| f(sampler.chunk(k)))
            .collect::<Vec<_>>()
    };
    if workers == 1 {
        return (0..n).map(|k| f(sampler.chunk(k))).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// `count` points log-uniform in `[lo, hi]^N`.
pub fn log_uniform_points<const N: usize>(
    count: usize,
    seed: u64,
    lo: f64,
    hi: f64,
) -> impl Iterator<Item = CurvaturePoint<f64, N>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count).map(move |_| {
        CurvaturePoint::new_unchecked(std::array::from_fn(|_| rng.random_range(llo..lhi).exp()))
    })
}
