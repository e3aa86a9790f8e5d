//! Closed-form correlation laws and the integral oracles behind them.
//!
//! All laws use the singlet convention: `E(0) = -1` and `E(π) = +1`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use crate::math::{heaviside, PolarAngle, SeparationAngle, Sign};
use crate::quadrature::integrate_with_breaks;
use crate::{Error, Result};

/// Default absolute tolerance for the quadrature-based routines.
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

const THREE_PI_4: f64 = 3.0 * FRAC_PI_4;

/// A closed-form correlation function of the separation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationLaw {
    /// Heaviside form of the fixed-shift law at δ = π/2; undefined on its
    /// step boundaries.
    Eq1,
    /// Five-domain piecewise-linear law of the fixed-shift protocol.
    Eq2 { delta: f64 },
    /// Piecewise-quadratic law of the two-share and random-shift protocols.
    Eq4,
    /// `2θ/π - 1`, the plain shared-direction model.
    Linear,
    /// `-cos θ`.
    QuantumCosine,
}

impl CorrelationLaw {
    pub fn eq2(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(CorrelationLaw::Eq2 { delta })
    }

    pub fn eval(&self, theta: SeparationAngle) -> Result<f64> {
        match *self {
            CorrelationLaw::Eq1 => eval_eq1(theta),
            CorrelationLaw::Eq2 { delta } => eval_eq2(theta, delta),
            CorrelationLaw::Eq4 => Ok(eval_eq4(theta)),
            CorrelationLaw::Linear => Ok(eval_linear(theta)),
            CorrelationLaw::QuantumCosine => Ok(eval_quantum(theta)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorrelationLaw::Eq1 => "heaviside",
            CorrelationLaw::Eq2 { .. } => "piecewise-linear",
            CorrelationLaw::Eq4 => "piecewise-quadratic",
            CorrelationLaw::Linear => "linear",
            CorrelationLaw::QuantumCosine => "quantum-cosine",
        }
    }
}

impl fmt::Display for CorrelationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationLaw::Eq2 { delta } => write!(f, "{}(delta={delta})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && (0.0..=FRAC_PI_2).contains(&delta) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "shift delta {delta} outside [0, π/2]"
        )))
    }
}

/// Heaviside form of the δ = π/2 law, using `H(0) = 0`.
pub fn eval_eq1(theta: SeparationAngle) -> Result<f64> {
    eval_eq1_with_step(theta, heaviside)
}

/// Heaviside form with a caller-supplied step function. The result does not
/// depend on the step's value at zero away from the two boundaries, which
/// are rejected regardless.
pub fn eval_eq1_with_step<H>(theta: SeparationAngle, step: H) -> Result<f64>
where
    H: Fn(f64) -> Result<u8>,
{
    let t = theta.value();
    if t == FRAC_PI_4 || t == THREE_PI_4 {
        return Err(Error::BoundaryAmbiguity { theta: t });
    }
    let h = |x: f64| step(x).map(f64::from);
    Ok(h(t - THREE_PI_4)?
        - h(FRAC_PI_4 - t)?
        - 2.0 * (1.0 - 2.0 * t / PI) * h(t - FRAC_PI_4)? * h(THREE_PI_4 - t)?)
}

/// Which of the five half-open domains of the piecewise-linear law holds `θ`.
/// Domains are numbered 1..=5 from θ = 0 upward.
pub fn eq2_domain(theta: f64, delta: f64) -> u8 {
    let half = delta / 2.0;
    if theta <= half {
        1
    } else if theta <= (PI - delta) / 2.0 {
        2
    } else if theta <= (PI + delta) / 2.0 {
        3
    } else if theta <= PI - half {
        4
    } else {
        5
    }
}

fn eq2_piece(domain: u8, theta: f64, delta: f64) -> f64 {
    let slope = 2.0 / PI;
    match domain {
        1 => -1.0,
        2 => -1.0 + slope * (theta - delta / 2.0),
        3 => -2.0 * (1.0 - slope * theta),
        4 => 1.0 + slope * (theta - PI + delta / 2.0),
        _ => 1.0,
    }
}

/// Correlation of the fixed-shift protocol with shift `delta`.
pub fn eval_eq2(theta: SeparationAngle, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let t = theta.value();
    Ok(eq2_piece(eq2_domain(t, delta), t, delta))
}

/// Piecewise-quadratic correlation of the averaged protocols.
pub fn eval_eq4(theta: SeparationAngle) -> f64 {
    let t = theta.value();
    let tail = if t > FRAC_PI_2 {
        (t - FRAC_PI_2).powi(2)
    } else {
        0.0
    };
    4.0 / (PI * PI) * ((t * t - PI * PI / 4.0) - 2.0 * tail)
}

pub fn eval_linear(theta: SeparationAngle) -> f64 {
    2.0 * theta.value() / PI - 1.0
}

pub fn eval_quantum(theta: SeparationAngle) -> f64 {
    -theta.value().cos()
}

/// `(2/π) ∫₀^{π/2} E(θ, δ) dδ` of the piecewise-linear law, by quadrature.
pub fn delta_average(theta: SeparationAngle, quad_tol: f64) -> Result<f64> {
    if quad_tol.is_nan() || quad_tol <= 0.0 {
        return Err(Error::Config(format!(
            "quadrature tolerance must be positive, got {quad_tol}"
        )));
    }
    let t = theta.value();
    // δ values where θ crosses a domain boundary.
    let kinks = [2.0 * t, PI - 2.0 * t, 2.0 * t - PI, 2.0 * PI - 2.0 * t];
    let integral = integrate_with_breaks(
        |d: f64| eq2_piece(eq2_domain(t, d), t, d),
        0.0,
        FRAC_PI_2,
        &kinks,
        quad_tol * FRAC_PI_2,
    )?;
    Ok(integral * 2.0 / PI)
}

/// Bob-side average `(1/2π) ∫ sgn[b̂ · (λ̂₂ - λ̂₁)] dλ₂` in closed form, as a
/// function of the angle `t` between `b̂` and `λ̂₁`.
pub fn inner_integral(t: f64) -> Result<f64> {
    check_unit_range(t)?;
    Ok(2.0 * t / PI - 1.0)
}

/// The same average by direct quadrature over `λ₂`, with `b̂` along the
/// positive y axis.
pub fn inner_integral_quadrature(t: f64, quad_tol: f64) -> Result<f64> {
    check_unit_range(t)?;
    let b = PolarAngle::new(FRAC_PI_2);
    // λ̂₁ = (sin t, cos t)
    let lambda1 = PolarAngle::new(FRAC_PI_2 - t);
    let b_dot_l1 = b.dot(lambda1);
    let integrand = |tau: f64| {
        // λ̂₂ = (sin τ, cos τ)
        let lambda2 = PolarAngle::new(FRAC_PI_2 - tau);
        Sign::of(b.dot(lambda2) - b_dot_l1).as_f64()
    };
    let total = integrate_with_breaks(
        integrand,
        0.0,
        2.0 * PI,
        &[t, 2.0 * PI - t],
        quad_tol * 2.0 * PI,
    )?;
    Ok(total / (2.0 * PI))
}

/// `(4/π²) ∫₀^π sgn(cos τ) |τ - r| dτ`, split at its two kinks.
pub fn outer_integral(r: f64, quad_tol: f64) -> Result<f64> {
    check_unit_range(r)?;
    let scale = 4.0 / (PI * PI);
    let integrand = |tau: f64| Sign::of(tau.cos()).as_f64() * (tau - r).abs();
    let total = integrate_with_breaks(integrand, 0.0, PI, &[FRAC_PI_2, r], quad_tol / scale)?;
    Ok(scale * total)
}

fn check_unit_range(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=PI).contains(&x) {
        Ok(())
    } else {
        Err(Error::Config(format!("angle {x} outside [0, π]")))
    }
}
