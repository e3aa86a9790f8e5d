//! The self-check suite run by `bellcomm verify`.
//!
//! Analytic identities are checked at full tolerance; Monte Carlo
//! reproductions run at a reduced sample count with a 5σ band, where σ is
//! bounded by `1/√n` for a mean of ±1 samples.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::analytics::{
    delta_average, eval_eq1_with_step, eval_eq2, eval_eq4, eval_quantum, inner_integral,
    inner_integral_quadrature, outer_integral, CorrelationLaw,
};
use crate::bell::{chsh_analytic, chsh_sampled, ChshSettings, TSIRELSON_BOUND};
use crate::math::{heaviside, PolarAngle, SeparationAngle};
use crate::montecarlo::{sweep_with, worst_deviation, RngStream, TrialSampler};
use crate::protocols::{ProtocolSpec, TrialRecord};
use crate::{Error, Result};

/// Shift values of the fixed-shift family plotted against θ.
pub const DELTA_FAMILY: [f64; 6] = [
    0.0,
    PI / 10.0,
    PI / 5.0,
    3.0 * PI / 10.0,
    2.0 * PI / 5.0,
    FRAC_PI_2,
];

/// Fault injection for exercising the suite itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyHooks {
    /// Negate Bob's outcome in the fixed-shift protocol.
    pub flip_fixed_shift_bob: bool,
    /// Evaluate the Heaviside form with `H(0) = 1`.
    pub heaviside_zero_is_one: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub n: u64,
    pub grid_points: usize,
    pub seed: u64,
    pub hooks: VerifyHooks,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n: 20_000,
            grid_points: 31,
            seed: 0,
            hooks: VerifyHooks::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(
        name: impl Into<String>,
        observed: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) -> Self {
        CheckOutcome {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            threshold,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} deviation {:.3e} (limit {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.threshold
        )?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A sampler that negates Bob's fixed-shift outcome.
struct FlippedFixedShift(ProtocolSpec);

impl TrialSampler for FlippedFixedShift {
    fn sample(&self, a: PolarAngle, b: PolarAngle, rng: &mut RngStream) -> Result<TrialRecord> {
        let mut t = self.0.sample(a, b, rng)?;
        if matches!(self.0, ProtocolSpec::FixedShift { .. }) {
            t.beta = -t.beta;
        }
        Ok(t)
    }
}

fn th(x: f64) -> SeparationAngle {
    SeparationAngle::new(x).expect("grid point in [0, π]")
}

/// `n` points strictly inside `(0, π)`, avoiding both endpoints.
fn interior_grid(n: usize) -> impl Iterator<Item = SeparationAngle> {
    (0..n).map(move |i| th((i as f64 + 0.5) * PI / n as f64))
}

fn check_eq1_eq2(hooks: VerifyHooks) -> Result<CheckOutcome> {
    let step = |x: f64| -> Result<u8> {
        if hooks.heaviside_zero_is_one && x == 0.0 {
            Ok(1)
        } else {
            heaviside(x)
        }
    };
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for t in interior_grid(10_000) {
        let e1 = match eval_eq1_with_step(t, step) {
            Ok(v) => v,
            Err(Error::BoundaryAmbiguity { .. }) => continue,
            Err(e) => return Err(e),
        };
        worst = worst.max((e1 - eval_eq2(t, FRAC_PI_2)?).abs());
        count += 1;
    }
    Ok(CheckOutcome::at_most(
        "heaviside-form-equals-piecewise",
        worst,
        1e-12,
        format!("{count} interior points"),
    ))
}

fn check_delta_average() -> Result<CheckOutcome> {
    let grid = SeparationAngle::uniform_grid(181)?;
    let mut worst = 0.0f64;
    for t in grid {
        worst = worst.max((delta_average(t, 1e-9)? - eval_eq4(t)).abs());
    }
    Ok(CheckOutcome::at_most(
        "delta-average-equals-quadratic",
        worst,
        1e-8,
        "181 points",
    ))
}

fn check_inner() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for t in SeparationAngle::uniform_grid(100)? {
        let t = t.value();
        worst = worst.max((inner_integral(t)? - inner_integral_quadrature(t, 1e-10)?).abs());
    }
    Ok(CheckOutcome::at_most(
        "inner-integral-quadrature",
        worst,
        1e-6,
        "100 points",
    ))
}

fn check_outer() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for r in SeparationAngle::uniform_grid(100)? {
        worst = worst.max((outer_integral(r.value(), 1e-10)? - eval_eq4(r)).abs());
    }
    Ok(CheckOutcome::at_most(
        "outer-integral-equals-quadratic",
        worst,
        1e-8,
        "100 points",
    ))
}

fn check_superquantum() -> Result<CheckOutcome> {
    // Margin by which the weakest δ > 0 still beats -cos θ somewhere.
    let mut weakest = f64::INFINITY;
    let grid = SeparationAngle::uniform_grid(1001)?;
    for &delta in DELTA_FAMILY.iter().filter(|d| **d > 0.0) {
        let mut best = f64::NEG_INFINITY;
        for &t in &grid {
            best = best.max(eval_eq2(t, delta)?.abs() - eval_quantum(t).abs());
        }
        weakest = weakest.min(best);
    }
    Ok(CheckOutcome {
        name: "superquantum-crossing".into(),
        passed: weakest > 1e-9,
        observed: weakest,
        threshold: 1e-9,
        detail: "largest |E| - |cos θ| for the weakest δ > 0; must exceed the limit".into(),
    })
}

fn check_chsh_analytic() -> Result<Vec<CheckOutcome>> {
    let st = ChshSettings::canonical();
    let cases = [
        (
            "chsh-piecewise-pi/2",
            CorrelationLaw::Eq2 { delta: FRAC_PI_2 },
            4.0,
            0.0,
        ),
        (
            "chsh-quantum-cosine",
            CorrelationLaw::QuantumCosine,
            TSIRELSON_BOUND,
            1e-12,
        ),
        ("chsh-linear", CorrelationLaw::Linear, 2.0, 0.0),
        ("chsh-quadratic", CorrelationLaw::Eq4, 3.0, 0.0),
    ];
    cases
        .into_iter()
        .map(|(name, law, expected, tol)| {
            let r = chsh_analytic(law, &st)?;
            Ok(CheckOutcome::at_most(
                name,
                (r.abs_s - expected).abs(),
                tol,
                format!("|S| = {}", r.abs_s),
            ))
        })
        .collect()
}

fn mc_tolerance(n: u64) -> f64 {
    5.0 / (n as f64).sqrt()
}

fn check_sweep<S: TrialSampler + ?Sized>(
    name: String,
    sampler: &S,
    protocol: ProtocolSpec,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<CheckOutcome> {
    let sweep = sweep_with(sampler, protocol, cfg.grid_points, cfg.n, seed)?;
    let (at, dev) = worst_deviation(&sweep)?;
    Ok(CheckOutcome::at_most(
        name,
        dev,
        mc_tolerance(cfg.n),
        format!("worst at θ = {:.4}", at.value()),
    ))
}

/// Runs every check and collects the outcomes. Errors are reserved for
/// invalid configuration; failed checks are reported, not raised.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.n == 0 {
        return Err(Error::Config("verify needs n ≥ 1".into()));
    }
    let mut checks = vec![
        check_eq1_eq2(cfg.hooks)?,
        check_delta_average()?,
        check_inner()?,
        check_outer()?,
        check_superquantum()?,
    ];
    checks.extend(check_chsh_analytic()?);

    for (i, &delta) in DELTA_FAMILY.iter().enumerate() {
        let spec = ProtocolSpec::fixed_shift(delta)?;
        let name = format!("mc-fixed-shift-delta-{:.4}", delta);
        let seed = cfg.seed.wrapping_add(i as u64);
        let outcome = if cfg.hooks.flip_fixed_shift_bob {
            check_sweep(name, &FlippedFixedShift(spec), spec, cfg, seed)?
        } else {
            check_sweep(name, &spec, spec, cfg, seed)?
        };
        checks.push(outcome);
    }
    for (i, spec) in [
        ProtocolSpec::TwoShare,
        ProtocolSpec::RandomShift,
        ProtocolSpec::PlainLhv,
        ProtocolSpec::QuantumReference,
    ]
    .into_iter()
    .enumerate()
    {
        let seed = cfg.seed.wrapping_add(100 + i as u64);
        checks.push(check_sweep(
            format!("mc-{}", spec.name()),
            &spec,
            spec,
            cfg,
            seed,
        )?);
    }

    let adaptive = chsh_sampled(
        ProtocolSpec::adaptive(3)?,
        &ChshSettings::canonical(),
        cfg.n.min(1000),
        cfg.seed,
    )?;
    checks.push(CheckOutcome::at_most(
        "mc-adaptive-chsh",
        (adaptive.abs_s - 4.0).abs(),
        0.0,
        format!("|S| = {}", adaptive.abs_s),
    ));

    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            n: 4000,
            grid_points: 13,
            seed: 3,
            hooks: VerifyHooks::default(),
        }
    }

    #[test]
    fn clean_run_passes() {
        let report = run_verify(&quick()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn flipped_bob_is_caught_at_theta_zero() {
        let cfg = VerifyConfig {
            hooks: VerifyHooks {
                flip_fixed_shift_bob: true,
                ..Default::default()
            },
            ..quick()
        };
        let report = run_verify(&cfg).unwrap();
        assert!(!report.all_passed());
        let failed: Vec<_> = report.failures().collect();
        assert_eq!(failed.len(), DELTA_FAMILY.len());
        for c in failed {
            assert!(c.name.starts_with("mc-fixed-shift"));
            assert!((c.observed - 2.0).abs() < 1e-12, "{c}");
            assert!(c.detail.contains("θ = 0.0000"), "{c}");
        }
    }

    #[test]
    fn heaviside_variant_keeps_interior_agreement() {
        let cfg = VerifyConfig {
            hooks: VerifyHooks {
                heaviside_zero_is_one: true,
                ..Default::default()
            },
            ..quick()
        };
        let report = run_verify(&cfg).unwrap();
        assert!(
            report
                .get("heaviside-form-equals-piecewise")
                .unwrap()
                .passed
        );
    }
}
