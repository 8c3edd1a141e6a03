//! Norm values, kept exact.
//!
//! A norm is either `r * log2(x)` for a natural `x >= 1` and a positive
//! rational scale `r` (the shape split creatures produce), or an explicitly
//! declared rational (the shape tabular systems carry). Every comparison and
//! drop check reduces to an integer inequality of the form
//! `2^p * x1^a >= x2^b`, so no floating point is involved anywhere.

use crate::error::{KernelError, Result};
use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Cap on exponents produced by cross-multiplying norm scales.
const MAX_POW: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NormValue {
    /// `r * log2(x)`, `x >= 1`.
    ExactLog { x: BigUint, r: Ratio<u64> },
    Rational(Ratio<BigInt>),
}

fn pow_guarded(x: &BigUint, e: u64) -> Result<BigUint> {
    if e == 0 {
        return Ok(BigUint::from(1u32));
    }
    if x.bits().saturating_mul(e) > MAX_POW {
        return Err(KernelError::BudgetExceeded(format!(
            "norm comparison power {x}^{e} too large"
        )));
    }
    let e = u32::try_from(e)
        .map_err(|_| KernelError::BudgetExceeded(format!("norm exponent {e} too large")))?;
    Ok(x.pow(e))
}

fn shift_guarded(e: u64) -> Result<BigUint> {
    if e > MAX_POW {
        return Err(KernelError::BudgetExceeded(format!(
            "norm comparison shift 2^{e} too large"
        )));
    }
    Ok(BigUint::from(1u32) << e)
}

impl NormValue {
    pub fn exact_log(x: BigUint, r: Ratio<u64>) -> Result<NormValue> {
        if x.is_zero() {
            return Err(KernelError::Precondition(
                "norm argument must be at least 1".into(),
            ));
        }
        if r.numer() == &0 {
            return Err(KernelError::Precondition(
                "norm scale must be positive".into(),
            ));
        }
        Ok(NormValue::ExactLog { x, r })
    }

    pub fn rational(q: Ratio<BigInt>) -> NormValue {
        NormValue::Rational(q)
    }

    pub fn rational_u64(n: u64, d: u64) -> NormValue {
        NormValue::Rational(Ratio::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Three-way comparison against a rational threshold.
    pub fn cmp_ratio(&self, t: &Ratio<BigInt>) -> Result<Ordering> {
        match self {
            NormValue::Rational(q) => Ok(q.cmp(t)),
            NormValue::ExactLog { x, r } => {
                if t.is_negative() {
                    return Ok(Ordering::Greater);
                }
                // r*log2(x) vs p/q  <=>  x^(q*num) vs 2^(p*den).
                let p = t.numer().magnitude();
                let q = t.denom().magnitude();
                let a = (q * r.numer())
                    .to_u64()
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                let b = (p * r.denom())
                    .to_u64()
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                let lhs = pow_guarded(x, a)?;
                let rhs = shift_guarded(b)?;
                Ok(lhs.cmp(&rhs))
            }
        }
    }

    pub fn gt_ratio(&self, t: &Ratio<BigInt>) -> Result<bool> {
        Ok(self.cmp_ratio(t)? == Ordering::Greater)
    }

    pub fn ge_ratio(&self, t: &Ratio<BigInt>) -> Result<bool> {
        Ok(self.cmp_ratio(t)? != Ordering::Less)
    }

    pub fn gt_nat(&self, t: u64) -> Result<bool> {
        self.gt_ratio(&Ratio::from(BigInt::from(t)))
    }

    pub fn ge_nat(&self, t: u64) -> Result<bool> {
        self.ge_ratio(&Ratio::from(BigInt::from(t)))
    }

    pub fn is_positive(&self) -> Result<bool> {
        self.gt_nat(0)
    }

    /// `self >= other - delta`, exact across both norm shapes.
    pub fn ge_minus(&self, other: &NormValue, delta: &Ratio<BigInt>) -> Result<bool> {
        match (self, other) {
            (NormValue::Rational(a), NormValue::Rational(b)) => Ok(*a >= b - delta),
            (_, NormValue::Rational(b)) => self.ge_ratio(&(b - delta)),
            (NormValue::Rational(a), NormValue::ExactLog { .. }) => {
                // a >= r*log2(x) - delta  <=>  not (r*log2(x) > a + delta).
                Ok(other.cmp_ratio(&(a + delta))? != Ordering::Greater)
            }
            (
                NormValue::ExactLog { x: x1, r: r1 },
                NormValue::ExactLog { x: x2, r: r2 },
            ) => {
                if r1 != r2 {
                    return Err(KernelError::KindMismatch(
                        "norm drop check across different scales".into(),
                    ));
                }
                // r*log2(x1) >= r*log2(x2) - p/q
                //   <=> q*num*log2(x1) + p*den >= q*num*log2(x2)   (p >= 0)
                //   <=> 2^(p*den) * x1^(q*num) >= x2^(q*num).
                let qn = (t_denom(delta) * r1.numer())
                    .to_u64()
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                let pd = (t_numer_abs(delta) * r1.denom())
                    .to_u64()
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                let l = pow_guarded(x1, qn)?;
                let rhs = pow_guarded(x2, qn)?;
                if delta.is_negative() {
                    Ok(l >= rhs * shift_guarded(pd)?)
                } else {
                    Ok(l * shift_guarded(pd)? >= rhs)
                }
            }
        }
    }

    /// Exact three-way comparison between two norms.
    pub fn compare(&self, other: &NormValue) -> Result<Ordering> {
        match (self, other) {
            (NormValue::Rational(a), NormValue::Rational(b)) => Ok(a.cmp(b)),
            (_, NormValue::Rational(b)) => self.cmp_ratio(b),
            (NormValue::Rational(a), NormValue::ExactLog { .. }) => {
                Ok(other.cmp_ratio(a)?.reverse())
            }
            (
                NormValue::ExactLog { x: x1, r: r1 },
                NormValue::ExactLog { x: x2, r: r2 },
            ) => {
                // num1/den1*log2(x1) vs num2/den2*log2(x2)
                //   <=> x1^(num1*den2) vs x2^(num2*den1).
                let a = r1
                    .numer()
                    .checked_mul(*r2.denom())
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                let b = r2
                    .numer()
                    .checked_mul(*r1.denom())
                    .ok_or_else(|| KernelError::BudgetExceeded("norm exponent overflow".into()))?;
                Ok(pow_guarded(x1, a)?.cmp(&pow_guarded(x2, b)?))
            }
        }
    }

    /// Approximate magnitude for report detail only; never used in checks.
    pub fn approx(&self) -> f64 {
        match self {
            NormValue::Rational(q) => {
                let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
                let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
                n / d
            }
            NormValue::ExactLog { x, r } => {
                let scale = *r.numer() as f64 / *r.denom() as f64;
                let lx = match x.to_f64() {
                    Some(v) if v.is_finite() => v.log2(),
                    _ => x.bits() as f64,
                };
                scale * lx
            }
        }
    }
}

fn t_numer_abs(t: &Ratio<BigInt>) -> BigUint {
    t.numer().magnitude().clone()
}

fn t_denom(t: &Ratio<BigInt>) -> BigUint {
    t.denom().magnitude().clone()
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Rational(q) => {
                if q.denom() == &BigInt::from(1) {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            NormValue::ExactLog { x, r } => {
                // Collapse exact powers of two to a rational.
                if x.count_ones() == 1 {
                    let t = x.trailing_zeros().unwrap_or(0);
                    let v = Ratio::new(
                        BigInt::from(*r.numer() * t),
                        BigInt::from(*r.denom()),
                    );
                    return NormValue::Rational(v).fmt(f);
                }
                if r == &Ratio::new(1, 1) {
                    write!(f, "log2({x})")
                } else {
                    write!(f, "log2({x})*{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl serde::Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Serialize `Ratio<BigInt>` as "9/4" (or "3" when integral).
pub mod ratio_string {
    use num_bigint::BigInt;
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Ratio<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        if v.denom() == &BigInt::from(1) {
            s.collect_str(v.numer())
        } else {
            s.collect_str(&format_args!("{}/{}", v.numer(), v.denom()))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<BigInt>, D::Error> {
        let raw = String::deserialize(d)?;
        raw.trim().parse().map_err(serde::de::Error::custom)
    }
}

/// Serialize `Ratio<u64>` as "1/2" (or "1" when integral).
pub mod ratio_u64_string {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        if v.denom() == &1 {
            s.collect_str(v.numer())
        } else {
            s.collect_str(&format_args!("{}/{}", v.numer(), v.denom()))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let raw = String::deserialize(d)?;
        let v: Ratio<u64> = raw.trim().parse().map_err(serde::de::Error::custom)?;
        if v.numer() == &0 {
            return Err(serde::de::Error::custom("ratio must be positive"));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(x: u64, num: u64, den: u64) -> NormValue {
        NormValue::exact_log(BigUint::from(x), Ratio::new(num, den)).unwrap()
    }

    fn rat(n: i64, d: i64) -> Ratio<BigInt> {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn thresholds_on_logs() {
        let v = log(2, 1, 1);
        assert!(v.is_positive().unwrap());
        assert!(!v.gt_nat(1).unwrap());
        assert!(v.ge_nat(1).unwrap());
        let w = log(3, 1, 1);
        assert!(w.gt_nat(1).unwrap());
        assert!(!w.gt_nat(2).unwrap());
        assert!(log(1, 1, 1).cmp_ratio(&rat(0, 1)).unwrap() == Ordering::Equal);
        // 2*log2(3) > 3  <=>  9 > 8.
        assert!(log(3, 2, 1).gt_nat(3).unwrap());
        // log2(5)/2 > 1  <=>  5 > 4.
        assert!(log(5, 1, 2).gt_nat(1).unwrap());
    }

    #[test]
    fn drop_checks_are_exact() {
        // log2(5) >= log2(9) - 1  <=>  10 >= 9.
        assert!(log(5, 1, 1).ge_minus(&log(9, 1, 1), &rat(1, 1)).unwrap());
        // log2(4) >= log2(9) - 1  <=>  8 >= 9 fails.
        assert!(!log(4, 1, 1).ge_minus(&log(9, 1, 1), &rat(1, 1)).unwrap());
        // Negative delta demands a strict rise.
        assert!(log(9, 1, 1).ge_minus(&log(4, 1, 1), &rat(-1, 1)).unwrap());
        assert!(!log(7, 1, 1).ge_minus(&log(4, 1, 1), &rat(-1, 1)).unwrap());
        // Mixed shapes.
        assert!(log(4, 1, 1).ge_minus(&NormValue::rational_u64(5, 2), &rat(1, 2)).unwrap());
        assert!(NormValue::rational_u64(3, 2)
            .ge_minus(&log(5, 1, 1), &rat(1, 1))
            .unwrap());
        assert!(!NormValue::rational_u64(2, 2)
            .ge_minus(&log(5, 1, 1), &rat(1, 1))
            .unwrap());
    }

    #[test]
    fn comparisons_cross_scales() {
        // log2(8) = 3 vs 2*log2(3) = log2(9).
        assert_eq!(log(8, 1, 1).compare(&log(3, 2, 1)).unwrap(), Ordering::Less);
        assert_eq!(
            log(4, 1, 2).compare(&log(2, 1, 1)).unwrap(),
            Ordering::Equal
        );
        assert_eq!(
            log(4, 1, 1).compare(&NormValue::rational_u64(2, 1)).unwrap(),
            Ordering::Equal
        );
    }

    #[test]
    fn display_forms() {
        assert_eq!(log(1, 1, 1).to_string(), "0");
        assert_eq!(log(8, 1, 1).to_string(), "3");
        assert_eq!(log(8, 1, 2).to_string(), "3/2");
        assert_eq!(log(5, 1, 1).to_string(), "log2(5)");
        assert_eq!(log(5, 2, 3).to_string(), "log2(5)*2/3");
        assert_eq!(NormValue::rational_u64(9, 4).to_string(), "9/4");
    }

    #[test]
    fn approx_tracks_exact_comparisons() {
        let vals = [log(2, 1, 1), log(3, 1, 1), log(5, 2, 3), log(7, 1, 2)];
        for a in &vals {
            for b in &vals {
                let exact = a.compare(b).unwrap();
                let approx = a.approx().partial_cmp(&b.approx()).unwrap();
                if exact != Ordering::Equal {
                    assert_eq!(exact, approx);
                }
            }
        }
    }
}
