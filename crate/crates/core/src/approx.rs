//! Randomized permanent estimation with cube roots of unity.
//!
//! Each trial replaces every nonzero of a 0-1 matrix by an independent,
//! uniformly chosen cube root of unity and returns `|det B|^2`, whose
//! expectation is the permanent. The determinant of `B` is an Eisenstein
//! integer, so `|det B|^2` is a nonnegative integer; the floating-point
//! value from LU is rounded accordingly.
//!
//! Randomness comes from ChaCha8. A job's key is derived from `(seed, job
//! index)` and trial `t` reads stream `t` of that key, so every trial value
//! depends only on `(seed, job index, trial index)` and never on how work is
//! interleaved.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExpansionNode;
use crate::matrix::{IntMatrix, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub trials: usize,
    pub mean: f64,
    /// Sample variance of the trial values (zero for a single trial).
    pub variance: f64,
    pub seed: u64,
    pub n: usize,
}

impl EstimateReport {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

fn cube_roots() -> [Complex64; 3] {
    let h = 3f64.sqrt() / 2.0;
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(-0.5, h),
        Complex64::new(-0.5, -h),
    ]
}

/// `|det A|^2` by LU with partial pivoting; an exactly zero pivot column
/// gives 0. Consumes the buffer.
pub fn det_norm_sqr(n: usize, mut a: Vec<Complex64>) -> f64 {
    let mut acc = 1.0f64;
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|i| (i, a[i * n + k].norm_sqr()))
            .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        if best == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let pivot = a[k * n + k];
        acc *= best;
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let u = a[k * n + j];
                a[i * n + j] -= f * u;
            }
        }
    }
    acc
}

/// One trial on the support of `a`.
pub fn kklll_trial<T: Scalar, R: Rng + ?Sized>(a: &SparseMatrix<T>, rng: &mut R) -> f64 {
    let n = a.order();
    let roots = cube_roots();
    let b = a
        .as_slice()
        .iter()
        .map(|v| {
            if v.is_zero() {
                Complex64::new(0.0, 0.0)
            } else {
                roots[rng.gen_range(0..3)]
            }
        })
        .collect();
    det_norm_sqr(n, b).round()
}

/// Trial count used when none is given: the square of the matrix order.
pub fn default_trials(n: usize) -> usize {
    (n * n).max(1)
}

fn job_key(seed: u64, job: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&job.to_le_bytes());
    key
}

/// Generator for trial `trial` of job `job`.
pub fn trial_rng(seed: u64, job: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(job_key(seed, job));
    rng.set_stream(trial);
    rng
}

/// Welford accumulation of mean and sample variance.
#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }
}

fn estimate_substream<T: Scalar>(a: &SparseMatrix<T>, trials: usize, seed: u64, job: u64) -> Result<EstimateReport> {
    if trials == 0 {
        return Err(Error::Invalid("trial count must be positive".into()));
    }
    let mut moments = Moments::default();
    for t in 0..trials {
        let mut rng = trial_rng(seed, job, t as u64);
        moments.push(kklll_trial(a, &mut rng));
    }
    Ok(EstimateReport {
        trials,
        mean: moments.mean,
        variance: moments.variance(),
        seed,
        n: a.order(),
    })
}

/// Mean of `trials` independent trials; identical inputs give identical reports.
pub fn kklll_estimate<T: Scalar>(a: &SparseMatrix<T>, trials: usize, seed: u64) -> Result<EstimateReport> {
    estimate_substream(a, trials, seed, 0)
}

/// One estimate per node, on the node's pattern, each from its own substream.
/// `trials` defaults to the square of each node's order.
pub fn estimate_jobs<T: Scalar>(
    nodes: &[ExpansionNode<T>],
    trials: Option<usize>,
    seed: u64,
) -> Result<Vec<EstimateReport>> {
    nodes
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let pattern: IntMatrix = node.matrix.pattern();
            let n = trials.unwrap_or_else(|| default_trials(pattern.order()));
            estimate_substream(&pattern, n, seed, k as u64)
        })
        .collect()
}
