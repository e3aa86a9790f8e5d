//! The CHSH functional and its three reference bounds.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fmt;

use crate::analytics::CorrelationLaw;
use crate::math::{separation, PolarAngle};
use crate::montecarlo::{estimate_with, sub_seed, TrialSampler};
use crate::protocols::ProtocolSpec;
use crate::{Error, Result};

/// Maximum of `|S|` for any local model.
pub const LOCAL_BOUND: f64 = 2.0;
/// Maximum of `|S|` for quantum correlations.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;
/// Maximum of `|S|` for any ±1-valued outcomes.
pub const ALGEBRAIC_BOUND: f64 = 4.0;

const ALGEBRAIC_SLACK: f64 = 1e-9;

/// The four measurement directions entering the CHSH functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: PolarAngle,
    pub a_prime: PolarAngle,
    pub b: PolarAngle,
    pub b_prime: PolarAngle,
}

impl ChshSettings {
    pub fn new(a: PolarAngle, a_prime: PolarAngle, b: PolarAngle, b_prime: PolarAngle) -> Self {
        ChshSettings {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// `a = π/2, a' = 0, b = π/4, b' = 3π/4`.
    pub fn canonical() -> Self {
        ChshSettings {
            a: PolarAngle::new(FRAC_PI_2),
            a_prime: PolarAngle::ZERO,
            b: PolarAngle::new(FRAC_PI_4),
            b_prime: PolarAngle::new(3.0 * FRAC_PI_4),
        }
    }

    /// Setting pairs in functional order: (a,b), (a,b'), (a',b), (a',b').
    pub fn pairs(&self) -> [(PolarAngle, PolarAngle); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

impl Default for ChshSettings {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `|S| ≤ 2`.
    Local,
    /// `2 < |S| ≤ 2√2`.
    Superclassical,
    /// `|S| > 2√2`.
    Superquantum,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Local => "Local",
            Classification::Superclassical => "Superclassical",
            Classification::Superquantum => "Superquantum",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Places `|S|` relative to the local and Tsirelson bounds.
pub fn classify(abs_s: f64) -> Result<Classification> {
    if !abs_s.is_finite() || abs_s < 0.0 {
        return Err(Error::Domain(abs_s));
    }
    if abs_s > ALGEBRAIC_BOUND + ALGEBRAIC_SLACK {
        return Err(Error::InvariantViolation(format!(
            "|S| = {abs_s} exceeds the algebraic maximum {ALGEBRAIC_BOUND}"
        )));
    }
    Ok(if abs_s <= LOCAL_BOUND {
        Classification::Local
    } else if abs_s <= TSIRELSON_BOUND {
        Classification::Superclassical
    } else {
        Classification::Superquantum
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub e_ab: f64,
    pub e_abp: f64,
    pub e_apb: f64,
    pub e_apbp: f64,
    pub s: f64,
    pub abs_s: f64,
    pub classification: Classification,
    /// Root-sum-square of the four standard errors, for sampled results.
    pub stderr_s: Option<f64>,
}

impl ChshResult {
    fn assemble(e: [f64; 4], stderr_s: Option<f64>) -> Result<Self> {
        let s = e[0] + e[1] + e[2] - e[3];
        let abs_s = s.abs();
        Ok(ChshResult {
            e_ab: e[0],
            e_abp: e[1],
            e_apb: e[2],
            e_apbp: e[3],
            s,
            abs_s,
            classification: classify(abs_s)?,
            stderr_s,
        })
    }

    pub fn correlations(&self) -> [f64; 4] {
        [self.e_ab, self.e_abp, self.e_apb, self.e_apbp]
    }
}

/// Evaluates a closed-form law at the four setting pairs.
pub fn chsh_analytic(law: CorrelationLaw, settings: &ChshSettings) -> Result<ChshResult> {
    let mut e = [0.0; 4];
    for (slot, (x, y)) in e.iter_mut().zip(settings.pairs()) {
        *slot = law.eval(separation(x, y))?;
    }
    ChshResult::assemble(e, None)
}

/// Estimates the four correlations by Monte Carlo. Pair `i` uses the
/// sub-seed `i` of `seed`.
pub fn chsh_sampled(
    protocol: ProtocolSpec,
    settings: &ChshSettings,
    n_per_pair: u64,
    seed: u64,
) -> Result<ChshResult> {
    protocol.validate()?;
    chsh_sampled_with(&protocol, settings, n_per_pair, seed)
}

pub fn chsh_sampled_with<S: TrialSampler + ?Sized>(
    sampler: &S,
    settings: &ChshSettings,
    n_per_pair: u64,
    seed: u64,
) -> Result<ChshResult> {
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (i, (x, y)) in settings.pairs().into_iter().enumerate() {
        let est = estimate_with(sampler, x, y, n_per_pair, sub_seed(seed, i as u64))?;
        e[i] = est.mean;
        var += est.stderr * est.stderr;
    }
    ChshResult::assemble(e, Some(var.sqrt()))
}
