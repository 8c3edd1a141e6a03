//! Bigness schedules.
//!
//! A schedule assigns to every natural `m` a required block count `flarge(m) >= 2`.
//! The default schedule is the double-exponential `m -> 2^(2^(m^2))`; bounded
//! alternatives (a constant, or an explicit table with a tail value) exist so that
//! small instances stay exhaustively checkable.

use crate::error::{KernelError, Result};
use crate::extnat::ExtNat;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Flarge {
    /// `flarge(m) = 2^(2^(m^2))`.
    Default,
    /// `flarge(m) = v` for every `m` (v >= 2).
    Const(u64),
    /// `flarge(m) = values[m]` while `m < values.len()`, then `tail`.
    /// Every entry and the tail must be >= 2.
    Table { values: Vec<u64>, tail: u64 },
}

impl Flarge {
    pub fn const_of(v: u64) -> Result<Flarge> {
        if v < 2 {
            return Err(KernelError::Schema(format!(
                "schedule values must be >= 2, got const:{v}"
            )));
        }
        Ok(Flarge::Const(v))
    }

    pub fn table(values: Vec<u64>, tail: u64) -> Result<Flarge> {
        if let Some(bad) = values.iter().find(|&&v| v < 2) {
            return Err(KernelError::Schema(format!(
                "schedule values must be >= 2, got table entry {bad}"
            )));
        }
        if tail < 2 {
            return Err(KernelError::Schema(format!(
                "schedule values must be >= 2, got tail {tail}"
            )));
        }
        Ok(Flarge::Table { values, tail })
    }

    /// The schedule value at `m`, exact or symbolic.
    pub fn value(&self, m: u64) -> ExtNat {
        self.value_big(&BigUint::from(m))
    }

    pub fn value_big(&self, m: &BigUint) -> ExtNat {
        match self {
            Flarge::Default => {
                let sq = m * m;
                ExtNat::pow2(ExtNat::pow2(ExtNat::exact(sq)))
            }
            Flarge::Const(v) => ExtNat::exact_u64(*v),
            Flarge::Table { values, tail } => {
                let v = match m.to_usize() {
                    Some(i) if i < values.len() => values[i],
                    _ => *tail,
                };
                ExtNat::exact_u64(v)
            }
        }
    }

    /// Numeric value at `m` when it materializes in at most `bit_budget` bits.
    pub fn eval(&self, m: &BigUint, bit_budget: u64) -> Option<BigUint> {
        self.value_big(m).eval(bit_budget)
    }

    /// Non-decreasing in `m`. Trivially true for `Default` and `Const`.
    pub fn is_monotone(&self) -> bool {
        match self {
            Flarge::Default | Flarge::Const(_) => true,
            Flarge::Table { values, tail } => {
                values.windows(2).all(|w| w[0] <= w[1])
                    && values.last().map_or(true, |&last| last <= *tail)
            }
        }
    }

    /// `flarge(m+1) >= 2 * flarge(m)` for every `m`. Holds for `Default`
    /// (the exponent `2^(m^2)` at least doubles); reported false for the
    /// bounded schedules.
    pub fn is_doubling(&self) -> bool {
        matches!(self, Flarge::Default)
    }

    /// Resolve a CLI schedule spec: `default`, `const:<v>`, or `file:<path>`
    /// where the file holds JSON `{"values": [...], "tail": t}`.
    pub fn from_cli_spec(spec: &str) -> Result<Flarge> {
        if let Some(path) = spec.strip_prefix("file:") {
            let text = std::fs::read_to_string(path).map_err(|e| {
                KernelError::Schema(format!("cannot read schedule file {path}: {e}"))
            })?;
            let raw: TableFile = serde_json::from_str(&text)
                .map_err(|e| KernelError::Schema(format!("bad schedule file {path}: {e}")))?;
            return Flarge::table(raw.values, raw.tail);
        }
        spec.parse()
    }
}

#[derive(serde::Deserialize)]
struct TableFile {
    values: Vec<u64>,
    tail: u64,
}

impl fmt::Display for Flarge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flarge::Default => write!(f, "default"),
            Flarge::Const(v) => write!(f, "const:{v}"),
            Flarge::Table { values, tail } => {
                write!(f, "table:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ";{tail}")
            }
        }
    }
}

impl FromStr for Flarge {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Flarge> {
        if s == "default" {
            return Ok(Flarge::Default);
        }
        if let Some(v) = s.strip_prefix("const:") {
            let v: u64 = v
                .parse()
                .map_err(|_| KernelError::Schema(format!("bad schedule const value: {v}")))?;
            return Flarge::const_of(v);
        }
        if let Some(body) = s.strip_prefix("table:") {
            let (vals, tail) = body
                .split_once(';')
                .ok_or_else(|| KernelError::Schema(format!("bad schedule table: {body}")))?;
            let values = if vals.is_empty() {
                Vec::new()
            } else {
                vals.split(',')
                    .map(|t| {
                        t.parse::<u64>().map_err(|_| {
                            KernelError::Schema(format!("bad schedule table entry: {t}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let tail: u64 = tail
                .parse()
                .map_err(|_| KernelError::Schema(format!("bad schedule tail: {tail}")))?;
            return Flarge::table(values, tail);
        }
        Err(KernelError::Schema(format!("unknown schedule spec: {s}")))
    }
}

impl serde::Serialize for Flarge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Flarge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Flarge, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn default_schedule_small_values() {
        let f = Flarge::Default;
        assert_eq!(f.eval(&u(0), 1 << 20), Some(u(2)));
        assert_eq!(f.eval(&u(1), 1 << 20), Some(u(4)));
        assert_eq!(f.eval(&u(2), 1 << 20), Some(u(65536)));
        assert_eq!(f.eval(&u(3), 1 << 20), Some(BigUint::from(2u32).pow(512)));
        assert_eq!(f.eval(&u(4), 1 << 20), Some(BigUint::from(2u32).pow(65536)));
        // 2^(2^25) needs 2^25 + 1 bits, beyond a 2^20-bit budget.
        assert_eq!(f.eval(&u(5), 1 << 20), None);
    }

    #[test]
    fn table_lookup_and_tail() {
        let f = Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap();
        assert_eq!(f.eval(&u(3), 64), Some(u(2)));
        assert_eq!(f.eval(&u(4), 64), Some(u(1000)));
        assert_eq!(f.eval(&u(5), 64), Some(u(2)));
        assert_eq!(f.eval(&(u(1) << 100), 64), Some(u(2)));
        assert!(!f.is_monotone());
        let g = Flarge::table(vec![2, 3, 5], 5).unwrap();
        assert!(g.is_monotone());
        assert!(!g.is_doubling());
    }

    #[test]
    fn values_below_two_rejected() {
        assert!(Flarge::const_of(1).is_err());
        assert!(Flarge::table(vec![2, 1], 2).is_err());
        assert!(Flarge::table(vec![2, 2], 1).is_err());
        assert!("const:0".parse::<Flarge>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for f in [
            Flarge::Default,
            Flarge::const_of(7).unwrap(),
            Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap(),
            Flarge::table(vec![], 3).unwrap(),
        ] {
            let s = f.to_string();
            assert_eq!(s.parse::<Flarge>().unwrap(), f);
        }
    }
}
