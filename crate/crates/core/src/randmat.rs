//! Random unit-vector matrices and Monte-Carlo rank statistics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::par::{map_range, Execution};

/// Uniform unit vector by normalizing a standard Gaussian sample.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-300 {
            return v / norm;
        }
    }
}

/// Seeded source of uniform rows on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereSampler {
    pub dim: usize,
    pub seed: u64,
}

impl SphereSampler {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("sphere sampler needs dimension >= 2"));
        }
        Ok(SphereSampler { dim, seed })
    }

    /// Generator for trial `stream`; streams never overlap.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m, self.dim);
        for i in 0..m {
            out.set_row(i, &unit_vector(rng, self.dim).transpose());
        }
        out
    }
}

/// m independent uniform unit rows of length `sampler.dim`.
pub fn sample_matrix(sampler: &SphereSampler, m: usize) -> DMatrix<f64> {
    sampler.sample_with(&mut sampler.rng(0), m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub p01: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankProbability {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub full_rank_fraction: f64,
    /// Samples whose smallest singular value fell below `tol` times the largest.
    pub near_singular_count: usize,
    /// Smallest singular value of each sample (only meaningful when m >= n).
    pub min_singular_value: SingularValueStats,
}

/// Monte-Carlo estimate of P(rank = n) for m x n matrices of unit rows.
pub fn rank_probability(
    sampler: &SphereSampler,
    m: usize,
    trials: usize,
    tol: f64,
    exec: Execution,
) -> Result<RankProbability> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    let n = sampler.dim;
    let smallest: Vec<(f64, bool)> = map_range(trials, exec, |t| {
        let w = sampler.sample_with(&mut sampler.rng(t as u64), m);
        let s = singular_values(&w);
        let top = s[0];
        // only min(m, n) singular values exist; rank n needs n of them
        let sigma_n = if s.len() >= n { s[n - 1] } else { 0.0 };
        (sigma_n, sigma_n > tol * top)
    });
    let full = smallest.iter().filter(|(_, ok)| *ok).count();
    let near_singular_count = trials - full;
    let mut vals: Vec<f64> = smallest.iter().map(|(v, _)| *v).collect();
    vals.sort_by(f64::total_cmp);
    let q = |p: f64| vals[((vals.len() - 1) as f64 * p).round() as usize];
    Ok(RankProbability {
        n,
        m,
        trials,
        seed: sampler.seed,
        tol,
        full_rank_fraction: full as f64 / trials as f64,
        near_singular_count,
        min_singular_value: SingularValueStats {
            min: vals[0],
            max: vals[vals.len() - 1],
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
            median: q(0.5),
            p01: q(0.01),
        },
    })
}
