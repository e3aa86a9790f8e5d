//! Planar angle arithmetic and the sign conventions shared by every protocol.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::{Error, Result};

/// Vectors shorter than this are treated as having no direction.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// A direction in the plane, stored as a polar angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct PolarAngle(f64);

impl PolarAngle {
    pub const ZERO: PolarAngle = PolarAngle(0.0);

    /// Normalizes `radians` into `[0, 2π)`.
    ///
    /// Non-finite input is a programming error and panics; use
    /// [`PolarAngle::try_new`] for values read from the outside world.
    pub fn new(radians: f64) -> Self {
        Self::try_new(radians).expect("polar angle must be finite")
    }

    pub fn try_new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::Domain(radians));
        }
        let mut v = radians.rem_euclid(TAU);
        // rem_euclid can round a tiny negative input up to exactly 2π.
        if v >= TAU {
            v = 0.0;
        }
        Ok(PolarAngle(v))
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::try_new(degrees.to_radians())
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The angle rotated by `radians`, renormalized.
    #[inline]
    pub fn rotated(self, radians: f64) -> Self {
        Self::new(self.0 + radians)
    }

    /// The opposite direction.
    #[inline]
    pub fn opposite(self) -> Self {
        self.rotated(PI)
    }

    /// Cartesian components of the unit vector.
    #[inline]
    pub fn unit(self) -> (f64, f64) {
        let (s, c) = self.0.sin_cos();
        (c, s)
    }

    /// Scalar product of the two unit vectors.
    #[inline]
    pub fn dot(self, other: PolarAngle) -> f64 {
        let (x1, y1) = self.unit();
        let (x2, y2) = other.unit();
        x1 * x2 + y1 * y2
    }
}

impl fmt::Display for PolarAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The folded difference between two settings, in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SeparationAngle(f64);

impl SeparationAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Domain(theta));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Config(format!(
                "separation angle {theta} outside [0, π]"
            )));
        }
        Ok(SeparationAngle(theta))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `n` evenly spaced separations from 0 to π inclusive.
    pub fn uniform_grid(n: usize) -> Result<Vec<SeparationAngle>> {
        if n < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points, got {n}"
            )));
        }
        let last = (n - 1) as f64;
        Ok((0..n)
            .map(|j| {
                // Pin the last node to π exactly.
                let theta = if j == n - 1 { PI } else { j as f64 * PI / last };
                SeparationAngle(theta)
            })
            .collect())
    }
}

impl fmt::Display for SeparationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A dichotomic value, -1 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// Sign of a finite real with `sgn(0) = +1`.
    #[inline]
    pub(crate) fn of(x: f64) -> Sign {
        if x >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;

    #[inline]
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;

    #[inline]
    fn neg(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Minus => f.write_str("-1"),
            Sign::Plus => f.write_str("+1"),
        }
    }
}

/// `+1` for `x >= 0`, `-1` otherwise.
pub fn sgn(x: f64) -> Result<Sign> {
    if !x.is_finite() {
        return Err(Error::Domain(x));
    }
    Ok(Sign::of(x))
}

/// Unit step with `H(0) = 0`.
pub fn heaviside(x: f64) -> Result<u8> {
    if !x.is_finite() {
        return Err(Error::Domain(x));
    }
    Ok(u8::from(x > 0.0))
}

/// Folded angular distance between two directions.
pub fn separation(a: PolarAngle, b: PolarAngle) -> SeparationAngle {
    let d = (a.0 - b.0).abs();
    SeparationAngle((TAU - d).min(d))
}

/// Sign of `b̂ · (û + c v̂)`.
///
/// Fails when the resultant `û + c v̂` is too short to carry a direction.
pub fn resultant_sign(b: PolarAngle, u: PolarAngle, c: Sign, v: PolarAngle) -> Result<Sign> {
    let (ux, uy) = u.unit();
    let (vx, vy) = v.unit();
    let cf = c.as_f64();
    let wx = ux + cf * vx;
    let wy = uy + cf * vy;
    let norm = wx.hypot(wy);
    if norm <= DEGENERATE_NORM {
        return Err(Error::DegenerateResultant { norm });
    }
    let (bx, by) = b.unit();
    Ok(Sign::of(bx * wx + by * wy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn sgn_convention() {
        assert_eq!(sgn(0.5).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.2).unwrap(), Sign::Minus);
        assert_eq!(sgn(0.0).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.0).unwrap(), Sign::Plus);
        assert!(matches!(sgn(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(sgn(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn heaviside_convention() {
        assert_eq!(heaviside(1.0).unwrap(), 1);
        assert_eq!(heaviside(-1.0).unwrap(), 0);
        assert_eq!(heaviside(0.0).unwrap(), 0);
        assert!(heaviside(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn separation_examples() {
        let s = separation(PolarAngle::new(FRAC_PI_2), PolarAngle::new(FRAC_PI_4));
        assert!((s.value() - FRAC_PI_4).abs() < 1e-15);
        let s = separation(PolarAngle::new(0.0), PolarAngle::new(3.0 * FRAC_PI_2));
        assert!((s.value() - FRAC_PI_2).abs() < 1e-15);
        let x = PolarAngle::new(1.234);
        assert_eq!(separation(x, x).value(), 0.0);
    }

    #[test]
    fn resultant_examples() {
        let z = PolarAngle::ZERO;
        assert_eq!(resultant_sign(z, z, Sign::Plus, z).unwrap(), Sign::Plus);
        assert_eq!(
            resultant_sign(PolarAngle::new(PI), z, Sign::Plus, z).unwrap(),
            Sign::Minus
        );
        // w = (cos π/3 - cos 2π/3, sin π/3 - sin 2π/3) = (1, 0)
        let r = resultant_sign(
            z,
            PolarAngle::new(FRAC_PI_3),
            Sign::Minus,
            PolarAngle::new(2.0 * FRAC_PI_3),
        );
        assert_eq!(r.unwrap(), Sign::Plus);
    }

    #[test]
    fn resultant_degenerate() {
        let u = PolarAngle::new(0.7);
        let err = resultant_sign(PolarAngle::ZERO, u, Sign::Minus, u).unwrap_err();
        assert!(matches!(err, Error::DegenerateResultant { .. }));
    }

    #[test]
    fn normalization_edges() {
        assert_eq!(PolarAngle::new(TAU).value(), 0.0);
        let v = PolarAngle::new(-1e-18).value();
        assert!((0.0..TAU).contains(&v));
        assert!(PolarAngle::try_new(f64::NAN).is_err());
        assert!(SeparationAngle::new(4.0).is_err());
        assert!(SeparationAngle::uniform_grid(1).is_err());
        let g = SeparationAngle::uniform_grid(5).unwrap();
        assert_eq!(g[0].value(), 0.0);
        assert_eq!(g[4].value(), PI);
    }

    #[test]
    fn sign_algebra() {
        for s in [Sign::Minus, Sign::Plus] {
            assert_eq!(s * s, Sign::Plus);
            assert_eq!((-s).value(), -s.value());
        }
    }

    proptest! {
        #[test]
        fn normalized_range(x in -1e6f64..1e6) {
            let v = PolarAngle::new(x).value();
            prop_assert!((0.0..TAU).contains(&v));
        }

        #[test]
        fn full_turn_is_identity(x in -1e3f64..1e3) {
            let a = PolarAngle::new(x).value();
            let b = PolarAngle::new(x + TAU).value();
            // The two inputs differ by a rounded 2π, so compare on the circle.
            let d = (a - b).abs();
            prop_assert!(d.min(TAU - d) < 1e-9);
        }

        #[test]
        fn sgn_is_odd(x in prop::num::f64::NORMAL) {
            prop_assert_eq!(sgn(x).unwrap() * sgn(-x).unwrap(), Sign::Minus);
        }

        #[test]
        fn heaviside_complements(x in prop::num::f64::NORMAL) {
            prop_assert_eq!(heaviside(x).unwrap() + heaviside(-x).unwrap(), 1);
        }

        #[test]
        fn separation_symmetric_and_bounded(a in 0.0f64..TAU, b in 0.0f64..TAU) {
            let pa = PolarAngle::new(a);
            let pb = PolarAngle::new(b);
            let s = separation(pa, pb).value();
            prop_assert_eq!(s, separation(pb, pa).value());
            prop_assert!((0.0..=PI).contains(&s));
            let shifted = separation(PolarAngle::new(a + TAU), pb).value();
            prop_assert!((shifted - s).abs() < 1e-9);
        }

        #[test]
        fn resultant_commutes_for_plus(b in 0.0f64..TAU, u in 0.0f64..TAU, v in 0.0f64..TAU) {
            let (b, u, v) = (PolarAngle::new(b), PolarAngle::new(u), PolarAngle::new(v));
            if let (Ok(x), Ok(y)) = (
                resultant_sign(b, u, Sign::Plus, v),
                resultant_sign(b, v, Sign::Plus, u),
            ) {
                prop_assert_eq!(x, y);
            }
        }
    }
}
