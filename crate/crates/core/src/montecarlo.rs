//! Seeded Monte Carlo estimation of correlation functions.
//!
//! Each trial owns an independent ChaCha8 stream selected by its index, so
//! the draws of trial `i` depend only on `(seed, i)`. Products are summed as
//! integers. Together these make every estimate bit-identical regardless of
//! how rayon splits the work or how many threads it has.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::CorrelationLaw;
use crate::math::{separation, PolarAngle, SeparationAngle};
use crate::protocols::{self, ProtocolSpec, TrialRecord};
use crate::{Error, Result};

/// Default number of trials per estimate.
pub const DEFAULT_N: u64 = 100_000;
/// Default number of grid points in a sweep.
pub const DEFAULT_GRID: usize = 61;

const MAX_RESAMPLES: usize = 64;
// Trials per parallel work item.
const BLOCK: u64 = 4096;
const SUBSEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Random draws for one trial.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// The stream of trial `counter` under `seed`.
    pub fn new(seed: u64, counter: u64) -> Self {
        Self::from_base(&ChaCha8Rng::seed_from_u64(seed), seed, counter)
    }

    fn from_base(base: &ChaCha8Rng, seed: u64, counter: u64) -> Self {
        let mut rng = base.clone();
        rng.set_stream(counter);
        RngStream { seed, counter, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform on `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform direction on the circle.
    pub fn next_angle(&mut self) -> PolarAngle {
        PolarAngle::new(self.next_unit() * TAU)
    }

    /// Uniform on `[lo, hi]`.
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }
}

/// Deterministic child seed, used to give grid points and CHSH pairs their
/// own independent streams.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SUBSEED_SALT);
    rng.set_stream(index);
    rng.next_u64()
}

/// Anything that can produce one trial from settings and a random stream.
pub trait TrialSampler: Sync {
    fn sample(&self, a: PolarAngle, b: PolarAngle, rng: &mut RngStream) -> Result<TrialRecord>;
}

impl TrialSampler for ProtocolSpec {
    fn sample(&self, a: PolarAngle, b: PolarAngle, rng: &mut RngStream) -> Result<TrialRecord> {
        let mut last = None;
        for _ in 0..MAX_RESAMPLES {
            let trial = match *self {
                ProtocolSpec::PlainLhv => Ok(protocols::run_trial_plain(a, b, rng.next_angle())),
                ProtocolSpec::FixedShift { delta } => {
                    protocols::run_trial_fixed(a, b, rng.next_angle(), delta)
                }
                ProtocolSpec::RandomShift => {
                    let lambda = rng.next_angle();
                    let delta = rng.next_in(0.0, FRAC_PI_2);
                    protocols::run_trial_random_shift(a, b, lambda, delta)
                }
                ProtocolSpec::TwoShare => {
                    let l1 = rng.next_angle();
                    let l2 = rng.next_angle();
                    protocols::run_trial_twoshare(a, b, l1, l2)
                }
                ProtocolSpec::AdaptiveK { k_bits } => {
                    protocols::run_trial_adaptive(a, b, rng.next_angle(), k_bits)
                }
                ProtocolSpec::QuantumReference => {
                    let u = rng.next_unit();
                    let v = rng.next_unit();
                    Ok(protocols::run_trial_quantum(a, b, u, v))
                }
            };
            match trial {
                Err(e @ Error::DegenerateResultant { .. }) => last = Some(e),
                other => return other,
            }
        }
        Err(last.expect("loop ran at least once"))
    }
}

/// Sample mean of `αβ` for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub a: PolarAngle,
    pub b: PolarAngle,
    pub theta: SeparationAngle,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    /// Exact sum of the ±1 products.
    pub sum: i64,
}

impl CorrelationEstimate {
    fn from_sum(a: PolarAngle, b: PolarAngle, sum: i64, n: u64) -> Self {
        let mean = sum as f64 / n as f64;
        CorrelationEstimate {
            a,
            b,
            theta: separation(a, b),
            mean,
            stderr: standard_error(mean, n),
            n,
            sum,
        }
    }
}

/// `sqrt((1 - m²) / n)`, the standard error of a mean of ±1 samples.
pub fn standard_error(mean: f64, n: u64) -> f64 {
    ((1.0 - mean * mean).max(0.0) / n as f64).sqrt()
}

/// Runs `n` trials of `protocol` at settings `(a, b)`.
pub fn estimate_correlation(
    protocol: ProtocolSpec,
    a: PolarAngle,
    b: PolarAngle,
    n: u64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    protocol.validate()?;
    estimate_with(&protocol, a, b, n, seed)
}

/// [`estimate_correlation`] for an arbitrary sampler.
pub fn estimate_with<S: TrialSampler + ?Sized>(
    sampler: &S,
    a: PolarAngle,
    b: PolarAngle,
    n: u64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let blocks = n.div_ceil(BLOCK);
    let sum = (0..blocks)
        .into_par_iter()
        .map(|blk| -> Result<i64> {
            let mut acc = 0i64;
            for i in blk * BLOCK..((blk + 1) * BLOCK).min(n) {
                let mut rng = RngStream::from_base(&base, seed, i);
                acc += i64::from(sampler.sample(a, b, &mut rng)?.product().value());
            }
            Ok(acc)
        })
        .try_reduce(|| 0i64, |x, y| Ok(x + y))?;
    Ok(CorrelationEstimate::from_sum(a, b, sum, n))
}

/// The closed-form law a protocol is expected to follow, if any.
pub fn reference_law(protocol: &ProtocolSpec) -> Option<CorrelationLaw> {
    match *protocol {
        ProtocolSpec::PlainLhv => Some(CorrelationLaw::Linear),
        ProtocolSpec::FixedShift { delta } => Some(CorrelationLaw::Eq2 { delta }),
        ProtocolSpec::RandomShift | ProtocolSpec::TwoShare => Some(CorrelationLaw::Eq4),
        ProtocolSpec::QuantumReference => Some(CorrelationLaw::QuantumCosine),
        ProtocolSpec::AdaptiveK { .. } => None,
    }
}

/// Estimates over a uniform θ grid on `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSweep {
    pub protocol: ProtocolSpec,
    pub grid: Vec<SeparationAngle>,
    pub estimates: Vec<CorrelationEstimate>,
    pub analytic_reference: Option<CorrelationLaw>,
    pub seed: u64,
}

impl CurveSweep {
    /// Reference value at each grid point, or `None` where there is no law.
    pub fn analytic_values(&self) -> Result<Vec<Option<f64>>> {
        self.grid
            .iter()
            .map(|&t| self.analytic_reference.map(|law| law.eval(t)).transpose())
            .collect()
    }
}

/// Sweeps `a = 0`, `b = θⱼ = jπ/(grid_points - 1)`.
pub fn sweep_curve(
    protocol: ProtocolSpec,
    grid_points: usize,
    n_per_point: u64,
    seed: u64,
) -> Result<CurveSweep> {
    protocol.validate()?;
    sweep_with(&protocol, protocol, grid_points, n_per_point, seed)
}

/// [`sweep_curve`] driven by an arbitrary sampler; `protocol` labels the
/// sweep and selects the reference law.
pub fn sweep_with<S: TrialSampler + ?Sized>(
    sampler: &S,
    protocol: ProtocolSpec,
    grid_points: usize,
    n_per_point: u64,
    seed: u64,
) -> Result<CurveSweep> {
    let grid = SeparationAngle::uniform_grid(grid_points)?;
    let a = PolarAngle::ZERO;
    let estimates = grid
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let b = PolarAngle::new(t.value());
            estimate_with(sampler, a, b, n_per_point, sub_seed(seed, j as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSweep {
        protocol,
        grid,
        estimates,
        analytic_reference: reference_law(&protocol),
        seed,
    })
}

/// Largest `|mean - law(θ)|` over the sweep.
pub fn max_abs_deviation(sweep: &CurveSweep) -> Result<f64> {
    let law = sweep
        .analytic_reference
        .ok_or_else(|| Error::Usage(format!("{} has no analytic reference", sweep.protocol)))?;
    sweep
        .grid
        .iter()
        .zip(&sweep.estimates)
        .try_fold(0.0f64, |acc, (&t, e)| {
            Ok(acc.max((e.mean - law.eval(t)?).abs()))
        })
}

/// Like [`max_abs_deviation`], but returns the worst point as well.
pub fn worst_deviation(sweep: &CurveSweep) -> Result<(SeparationAngle, f64)> {
    let law = sweep
        .analytic_reference
        .ok_or_else(|| Error::Usage(format!("{} has no analytic reference", sweep.protocol)))?;
    let mut worst = (SeparationAngle::default(), 0.0);
    for (&t, e) in sweep.grid.iter().zip(&sweep.estimates) {
        let d = (e.mean - law.eval(t)?).abs();
        if d > worst.1 {
            worst = (t, d);
        }
    }
    Ok(worst)
}
