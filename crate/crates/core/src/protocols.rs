//! Per-trial protocol state machines.
//!
//! Every communication protocol is split into an Alice half and a Bob half.
//! Alice's functions see her setting `a` and the shares; Bob's functions see
//! his setting `b`, the shares and the communicated bits, and nothing else.
//! The `run_trial_*` functions only wire the two halves together, so no
//! information about `a` reaches Bob except through the recorded bits.
//!
//! Bob's reported outcome follows the singlet convention `E(0) = -1`. For the
//! shift protocols this means he reports the negative of the sign of his
//! resultant direction.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use arrayvec::ArrayVec;

use crate::math::{resultant_sign, separation, PolarAngle, Sign};
use crate::{Error, Result};

/// Upper bound on the number of bits the adaptive protocol may send.
pub const MAX_ADAPTIVE_BITS: u32 = 32;

/// Which protocol to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolSpec {
    /// Shared direction only, no communication.
    PlainLhv,
    /// One bit about the quadrant pair of `a` relative to `λ` and `λ + δ`.
    FixedShift { delta: f64 },
    /// As `FixedShift`, with δ drawn uniformly from `[0, π/2]` every trial.
    RandomShift,
    /// Two independent shares and one parity bit.
    TwoShare,
    /// Alice sends a k-bit quantization of her setting.
    AdaptiveK { k_bits: u32 },
    /// Joint sampler with the singlet statistics `E = -cos θ`.
    QuantumReference,
}

impl ProtocolSpec {
    pub fn fixed_shift(delta: f64) -> Result<Self> {
        let spec = ProtocolSpec::FixedShift { delta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn adaptive(k_bits: u32) -> Result<Self> {
        let spec = ProtocolSpec::AdaptiveK { k_bits };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProtocolSpec::FixedShift { delta } => check_delta(delta),
            ProtocolSpec::AdaptiveK { k_bits } => check_k(k_bits),
            _ => Ok(()),
        }
    }

    /// Stable lowercase name, as used on the command line and in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::PlainLhv => "plain",
            ProtocolSpec::FixedShift { .. } => "fixed-shift",
            ProtocolSpec::RandomShift => "random-shift",
            ProtocolSpec::TwoShare => "two-share",
            ProtocolSpec::AdaptiveK { .. } => "adaptive",
            ProtocolSpec::QuantumReference => "quantum",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            ProtocolSpec::FixedShift { delta } => Some(delta),
            _ => None,
        }
    }

    /// Number of bits Alice sends per trial.
    pub fn bits_per_trial(&self) -> usize {
        match *self {
            ProtocolSpec::PlainLhv | ProtocolSpec::QuantumReference => 0,
            ProtocolSpec::FixedShift { .. }
            | ProtocolSpec::RandomShift
            | ProtocolSpec::TwoShare => 1,
            ProtocolSpec::AdaptiveK { k_bits } => k_bits as usize,
        }
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProtocolSpec::FixedShift { delta } => write!(f, "fixed-shift(delta={delta})"),
            ProtocolSpec::AdaptiveK { k_bits } => write!(f, "adaptive(k={k_bits})"),
            other => f.write_str(other.name()),
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

fn check_k(k: u32) -> Result<()> {
    if (1..=MAX_ADAPTIVE_BITS).contains(&k) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "adaptive protocol needs 1..={MAX_ADAPTIVE_BITS} bits, got {k}"
        )))
    }
}

pub type Shares = ArrayVec<PolarAngle, 2>;
pub type CommBits = ArrayVec<Sign, { MAX_ADAPTIVE_BITS as usize }>;

/// One experiment: settings, shares, communication and outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub a: PolarAngle,
    pub b: PolarAngle,
    pub shares: Shares,
    pub comm_bits: CommBits,
    pub alpha: Sign,
    pub beta: Sign,
}

impl TrialRecord {
    #[inline]
    pub fn product(&self) -> Sign {
        self.alpha * self.beta
    }
}

impl fmt::Display for TrialRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "a       = {}", self.a)?;
        writeln!(f, "b       = {}", self.b)?;
        let shares: Vec<String> = self.shares.iter().map(ToString::to_string).collect();
        writeln!(f, "shares  = [{}]", shares.join(", "))?;
        let bits: Vec<String> = self.comm_bits.iter().map(ToString::to_string).collect();
        writeln!(
            f,
            "bits    = [{}] ({} sent)",
            bits.join(", "),
            self.comm_bits.len()
        )?;
        writeln!(f, "alpha   = {}", self.alpha)?;
        writeln!(f, "beta    = {}", self.beta)?;
        write!(f, "product = {}", self.product())
    }
}

// Alice's side.

/// `sgn(â · λ̂)`.
#[inline]
pub fn alice_output(a: PolarAngle, lambda: PolarAngle) -> Sign {
    Sign::of(a.dot(lambda))
}

/// The shift bit `sgn(â · λ̂) sgn(â · Δ̂)` with `Δ = λ + δ`.
pub fn comm_bit_fixed(a: PolarAngle, lambda: PolarAngle, delta: f64) -> Result<Sign> {
    check_delta(delta)?;
    Ok(alice_output(a, lambda) * alice_output(a, lambda.rotated(delta)))
}

/// Parity bit of the two-share protocol.
#[inline]
pub fn comm_bit_twoshare(a: PolarAngle, lambda1: PolarAngle, lambda2: PolarAngle) -> Sign {
    alice_output(a, lambda1) * alice_output(a, lambda2)
}

/// Index of the `2^k` equal sectors of the circle that contains `a`.
fn sector_index(a: PolarAngle, k: u32) -> u64 {
    let sectors = 1u64 << k;
    let idx = (a.value() / TAU * sectors as f64).floor() as u64;
    idx.min(sectors - 1)
}

/// Alice's k-bit message: the sector index of `a`, most significant bit
/// first, with 0 sent as -1 and 1 as +1.
pub fn adaptive_bits(a: PolarAngle, k: u32) -> Result<CommBits> {
    check_k(k)?;
    let idx = sector_index(a, k);
    Ok((0..k)
        .rev()
        .map(|bit| {
            if (idx >> bit) & 1 == 1 {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect())
}

/// Midpoint of the sector named by an adaptive message.
pub fn adaptive_center(bits: &[Sign]) -> Result<PolarAngle> {
    let k = bits.len() as u32;
    check_k(k)?;
    let idx = bits
        .iter()
        .fold(0u64, |acc, s| (acc << 1) | u64::from(*s == Sign::Plus));
    let width = TAU / (1u64 << k) as f64;
    Ok(PolarAngle::new((idx as f64 + 0.5) * width))
}

// Bob's side. None of these take Alice's setting.

/// `-sgn[b̂ · (λ̂ + c Δ̂)]` with `Δ = λ + δ`.
pub fn bob_fixed(b: PolarAngle, lambda: PolarAngle, delta: f64, c: Sign) -> Result<Sign> {
    check_delta(delta)?;
    Ok(-resultant_sign(b, lambda, c, lambda.rotated(delta))?)
}

/// `-sgn(b̂ · λ̂)`.
#[inline]
pub fn bob_plain(b: PolarAngle, lambda: PolarAngle) -> Sign {
    -Sign::of(b.dot(lambda))
}

/// `-sgn[b̂ · (λ̂₁ + c λ̂₂)]`.
pub fn bob_twoshare(
    b: PolarAngle,
    lambda1: PolarAngle,
    lambda2: PolarAngle,
    c: Sign,
) -> Result<Sign> {
    Ok(-resultant_sign(b, lambda1, c, lambda2)?)
}

/// Step response of the adaptive protocol: anticorrelated when the
/// reconstructed separation is below π/2, correlated otherwise.
fn adaptive_step(theta: f64) -> Sign {
    if theta < FRAC_PI_2 {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

/// Bob decodes Alice's sector, recomputes her outcome from the sector
/// midpoint and multiplies in the step response.
pub fn bob_adaptive(b: PolarAngle, lambda: PolarAngle, bits: &[Sign]) -> Result<Sign> {
    let center = adaptive_center(bits)?;
    let alpha = alice_output(center, lambda);
    Ok(alpha * adaptive_step(separation(center, b).value()))
}

// Full trials.

pub fn run_trial_fixed(
    a: PolarAngle,
    b: PolarAngle,
    lambda: PolarAngle,
    delta: f64,
) -> Result<TrialRecord> {
    let alpha = alice_output(a, lambda);
    let c = comm_bit_fixed(a, lambda, delta)?;
    let beta = bob_fixed(b, lambda, delta, c)?;
    Ok(TrialRecord {
        a,
        b,
        shares: [lambda].into_iter().collect(),
        comm_bits: [c].into_iter().collect(),
        alpha,
        beta,
    })
}

pub fn run_trial_plain(a: PolarAngle, b: PolarAngle, lambda: PolarAngle) -> TrialRecord {
    TrialRecord {
        a,
        b,
        shares: [lambda].into_iter().collect(),
        comm_bits: CommBits::new(),
        alpha: alice_output(a, lambda),
        beta: bob_plain(b, lambda),
    }
}

/// Fixed-shift trial with a per-trial shift known to both parties. The
/// shift is recorded as the second share.
pub fn run_trial_random_shift(
    a: PolarAngle,
    b: PolarAngle,
    lambda: PolarAngle,
    delta_draw: f64,
) -> Result<TrialRecord> {
    let mut rec = run_trial_fixed(a, b, lambda, delta_draw)?;
    rec.shares.push(PolarAngle::new(delta_draw));
    Ok(rec)
}

pub fn run_trial_twoshare(
    a: PolarAngle,
    b: PolarAngle,
    lambda1: PolarAngle,
    lambda2: PolarAngle,
) -> Result<TrialRecord> {
    let alpha = alice_output(a, lambda1);
    let c = comm_bit_twoshare(a, lambda1, lambda2);
    let beta = bob_twoshare(b, lambda1, lambda2, c)?;
    Ok(TrialRecord {
        a,
        b,
        shares: [lambda1, lambda2].into_iter().collect(),
        comm_bits: [c].into_iter().collect(),
        alpha,
        beta,
    })
}

/// Adaptive trial. Alice reports `sgn(ĉ · λ̂)` where `ĉ` is the midpoint of
/// her sector, so that Bob can reproduce her outcome from the message.
pub fn run_trial_adaptive(
    a: PolarAngle,
    b: PolarAngle,
    lambda: PolarAngle,
    k: u32,
) -> Result<TrialRecord> {
    let bits = adaptive_bits(a, k)?;
    let alpha = alice_output(adaptive_center(&bits)?, lambda);
    let beta = bob_adaptive(b, lambda, &bits)?;
    Ok(TrialRecord {
        a,
        b,
        shares: [lambda].into_iter().collect(),
        comm_bits: bits,
        alpha,
        beta,
    })
}

/// Reference sampler for singlet statistics. Not a local protocol: the joint
/// outcome is drawn from the separation directly.
pub fn run_trial_quantum(a: PolarAngle, b: PolarAngle, u: f64, v: f64) -> TrialRecord {
    let alpha = if u < 0.5 { Sign::Plus } else { Sign::Minus };
    let half = separation(a, b).value() / 2.0;
    let anti = half.cos().powi(2);
    let beta = if v < anti { -alpha } else { alpha };
    TrialRecord {
        a,
        b,
        shares: Shares::new(),
        comm_bits: CommBits::new(),
        alpha,
        beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, PI};

    fn p(x: f64) -> PolarAngle {
        PolarAngle::new(x)
    }

    #[test]
    fn alice_examples() {
        assert_eq!(alice_output(p(0.0), p(0.0)), Sign::Plus);
        assert_eq!(alice_output(p(0.0), p(PI)), Sign::Minus);
        // cos(π/3 - 3π/4) = cos(-5π/12) > 0
        assert_eq!(alice_output(p(FRAC_PI_3), p(3.0 * FRAC_PI_4)), Sign::Plus);
    }

    #[test]
    fn shift_bit_examples() {
        for (a, l) in [(0.3, 1.9), (4.0, 0.2), (2.2, 5.5)] {
            assert_eq!(comm_bit_fixed(p(a), p(l), 0.0).unwrap(), Sign::Plus);
        }
        // â · Δ̂ = cos(-π/2) = 0 up to rounding; sgn(0) = +1.
        assert_eq!(
            comm_bit_fixed(p(0.0), p(0.0), FRAC_PI_2).unwrap(),
            Sign::Plus
        );
        assert_eq!(
            comm_bit_fixed(p(0.0), p(3.0 * FRAC_PI_8), FRAC_PI_2).unwrap(),
            Sign::Minus
        );
        assert!(matches!(
            comm_bit_fixed(p(0.0), p(0.0), 2.0),
            Err(Error::Config(_))
        ));
        assert!(comm_bit_fixed(p(0.0), p(0.0), -0.1).is_err());
    }

    #[test]
    fn fixed_trial_examples() {
        let r = run_trial_fixed(p(0.0), p(0.0), p(FRAC_PI_6), 0.0).unwrap();
        assert_eq!((r.alpha, r.beta), (Sign::Plus, Sign::Minus));
        assert_eq!(r.comm_bits.as_slice(), &[Sign::Plus]);
        assert_eq!(r.product(), Sign::Minus);

        let r = run_trial_fixed(p(0.0), p(PI), p(FRAC_PI_6), 0.0).unwrap();
        assert_eq!(r.product(), Sign::Plus);
    }

    #[test]
    fn fixed_trial_deterministic_inside_first_domain() {
        // θ = π/8 ≤ δ/2 for δ = π/2: every share gives -1.
        for i in 0..2000 {
            let l = p(i as f64 * TAU / 2000.0 + 1e-4);
            let r = run_trial_fixed(p(0.0), p(FRAC_PI_8), l, FRAC_PI_2).unwrap();
            assert_eq!(r.product(), Sign::Minus, "λ = {l}");
        }
    }

    #[test]
    fn plain_matches_fixed_at_zero_shift() {
        let r = run_trial_plain(p(0.4), p(2.0), p(1.0));
        assert!(r.comm_bits.is_empty());
        assert_eq!(r.shares.len(), 1);
    }

    #[test]
    fn twoshare_record_shape() {
        let r = run_trial_twoshare(p(0.0), p(0.0), p(FRAC_PI_6), p(FRAC_PI_3)).unwrap();
        assert_eq!(r.comm_bits.as_slice(), &[Sign::Plus]);
        assert_eq!(r.shares.len(), 2);
        assert_eq!(r.product(), Sign::Minus);
    }

    #[test]
    fn twoshare_degenerate() {
        // c = -1 and λ₂ = λ₁ cancel the resultant.
        let l = p(FRAC_PI_3);
        let a = p(FRAC_PI_3 + 0.5 * PI + 0.3);
        assert_eq!(comm_bit_twoshare(a, l, l), Sign::Plus);
        let err = bob_twoshare(p(0.0), l, l, Sign::Minus).unwrap_err();
        assert!(matches!(err, Error::DegenerateResultant { .. }));
    }

    #[test]
    fn random_shift_records_both_shares() {
        let r = run_trial_random_shift(p(0.0), p(1.0), p(2.0), 0.7).unwrap();
        assert_eq!(r.shares.len(), 2);
        assert_eq!(r.comm_bits.len(), 1);
        assert!(run_trial_random_shift(p(0.0), p(1.0), p(2.0), 1.6).is_err());
    }

    #[test]
    fn adaptive_examples() {
        for l in [0.1, 1.3, 2.9, 4.4, 6.0] {
            let r = run_trial_adaptive(p(FRAC_PI_2), p(FRAC_PI_4), p(l), 3).unwrap();
            assert_eq!(r.product(), Sign::Minus);
            assert_eq!(r.comm_bits.len(), 3);
            let r = run_trial_adaptive(p(0.0), p(3.0 * FRAC_PI_4), p(l), 3).unwrap();
            assert_eq!(r.product(), Sign::Plus);
            for k in [1, 2, 5, 12] {
                let r = run_trial_adaptive(p(l), p(l), p(0.3), k).unwrap();
                assert_eq!(r.product(), Sign::Minus);
            }
        }
    }

    #[test]
    fn adaptive_encoding() {
        // a = π/2 lies in sector 2 of 8: bits 010.
        let bits = adaptive_bits(p(FRAC_PI_2), 3).unwrap();
        assert_eq!(bits.as_slice(), &[Sign::Minus, Sign::Plus, Sign::Minus]);
        let c = adaptive_center(&bits).unwrap();
        assert!((c.value() - 5.0 * PI / 8.0).abs() < 1e-15);
        assert!(adaptive_bits(p(0.0), 0).is_err());
        assert!(ProtocolSpec::adaptive(33).is_err());
        assert!(adaptive_center(&[]).is_err());
    }

    #[test]
    fn quantum_sampler() {
        let r = run_trial_quantum(p(0.0), p(0.0), 0.2, 0.99);
        assert_eq!(r.product(), Sign::Minus);
        let r = run_trial_quantum(p(0.0), p(PI), 0.7, 0.5);
        assert_eq!(r.product(), Sign::Plus);
        assert!(r.comm_bits.is_empty() && r.shares.is_empty());
    }

    #[test]
    fn spec_validation() {
        assert!(ProtocolSpec::fixed_shift(FRAC_PI_2).is_ok());
        assert!(ProtocolSpec::fixed_shift(FRAC_PI_2 + 1e-9).is_err());
        assert!(ProtocolSpec::fixed_shift(f64::NAN).is_err());
        assert!(ProtocolSpec::adaptive(0).is_err());
        assert_eq!(ProtocolSpec::adaptive(4).unwrap().bits_per_trial(), 4);
        assert_eq!(ProtocolSpec::PlainLhv.bits_per_trial(), 0);
        assert_eq!(ProtocolSpec::TwoShare.bits_per_trial(), 1);
    }

    fn off_tie(x: f64) -> bool {
        x.abs() > 1e-9
    }

    proptest! {
        #[test]
        fn plain_equals_zero_shift(a in 0.0f64..TAU, b in 0.0f64..TAU, l in 0.0f64..TAU) {
            let plain = run_trial_plain(p(a), p(b), p(l));
            let fixed = run_trial_fixed(p(a), p(b), p(l), 0.0).unwrap();
            prop_assert_eq!((plain.alpha, plain.beta), (fixed.alpha, fixed.beta));
        }

        #[test]
        fn rotation_covariance(
            a in 0.0f64..TAU, b in 0.0f64..TAU, l1 in 0.0f64..TAU, l2 in 0.0f64..TAU,
            d in 0.0f64..FRAC_PI_2, phi in 0.0f64..TAU,
        ) {
            let (pa, pb, p1, p2) = (p(a), p(b), p(l1), p(l2));
            let r = |x: PolarAngle| x.rotated(phi);
            // Skip configurations within rounding distance of a tie.
            let dots = [
                pa.dot(p1), pa.dot(p2), pa.dot(p1.rotated(d)),
                pb.dot(p1), pb.dot(p2), pb.dot(p1.rotated(d)),
            ];
            prop_assume!(dots.iter().all(|x| off_tie(*x)));
            let w_fixed = {
                let c = comm_bit_fixed(pa, p1, d).unwrap().as_f64();
                let dl = p1.rotated(d);
                pb.dot(p1) + c * pb.dot(dl)
            };
            let w_two = {
                let c = comm_bit_twoshare(pa, p1, p2).as_f64();
                pb.dot(p1) + c * pb.dot(p2)
            };
            prop_assume!(off_tie(w_fixed) && off_tie(w_two));

            let x = run_trial_plain(pa, pb, p1);
            let y = run_trial_plain(r(pa), r(pb), r(p1));
            prop_assert_eq!((x.alpha, x.beta), (y.alpha, y.beta));

            let x = run_trial_fixed(pa, pb, p1, d).unwrap();
            let y = run_trial_fixed(r(pa), r(pb), r(p1), d).unwrap();
            prop_assert_eq!((x.alpha, x.beta), (y.alpha, y.beta));

            let x = run_trial_random_shift(pa, pb, p1, d).unwrap();
            let y = run_trial_random_shift(r(pa), r(pb), r(p1), d).unwrap();
            prop_assert_eq!((x.alpha, x.beta), (y.alpha, y.beta));

            let x = run_trial_twoshare(pa, pb, p1, p2).unwrap();
            let y = run_trial_twoshare(r(pa), r(pb), r(p1), r(p2)).unwrap();
            prop_assert_eq!((x.alpha, x.beta), (y.alpha, y.beta));
        }

        #[test]
        fn twoshare_negation_symmetry(
            a in 0.0f64..TAU, b in 0.0f64..TAU, l1 in 0.0f64..TAU, l2 in 0.0f64..TAU,
        ) {
            let (pa, pb, p1, p2) = (p(a), p(b), p(l1), p(l2));
            prop_assume!([pa.dot(p1), pa.dot(p2), pb.dot(p1), pb.dot(p2)].iter().all(|x| off_tie(*x)));
            let c = comm_bit_twoshare(pa, p1, p2).as_f64();
            prop_assume!(off_tie(pb.dot(p1) + c * pb.dot(p2)));
            let base = run_trial_twoshare(pa, pb, p1, p2).unwrap().product();
            let flip1 = run_trial_twoshare(pa, pb, p1.opposite(), p2).unwrap().product();
            let flip2 = run_trial_twoshare(pa, pb, p1, p2.opposite()).unwrap().product();
            prop_assert_eq!(base, flip1);
            prop_assert_eq!(base, flip2);
        }

        #[test]
        fn adaptive_bob_depends_only_on_sector(
            a1 in 0.0f64..TAU, a2 in 0.0f64..TAU, b in 0.0f64..TAU, l in 0.0f64..TAU, k in 1u32..8,
        ) {
            let x = run_trial_adaptive(p(a1), p(b), p(l), k).unwrap();
            let y = run_trial_adaptive(p(a2), p(b), p(l), k).unwrap();
            if x.comm_bits == y.comm_bits {
                prop_assert_eq!(x.beta, y.beta);
                prop_assert_eq!(x.alpha, y.alpha);
            }
            prop_assert_eq!(x.comm_bits.len(), k as usize);
        }
    }
}
