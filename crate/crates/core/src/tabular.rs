//! Creature systems given by explicit tables.
//!
//! A tabular system lists finitely many creatures by id, each with a value
//! set of string labels, a rational norm, its direct successors, and
//! optionally a declared halving and a declared decisive witness. The
//! successor relation used everywhere is the reflexive transitive closure of
//! the declared edges. Construction validates the table: all references
//! resolve, value sets shrink and norms do not grow along edges, singleton
//! values force norm zero, and declared witnesses are successors.

use crate::error::{KernelError, Result};
use crate::norm::NormValue;
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabDecisive {
    pub k_cap: u64,
    pub d_minus: String,
    pub d_plus: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabCreature {
    pub val: BTreeSet<String>,
    #[serde(with = "crate::norm::ratio_string")]
    pub norm: Ratio<BigInt>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub succ: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decisive: Option<TabDecisive>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabularCreatureSystem {
    creatures: BTreeMap<String, TabCreature>,
    closure: BTreeMap<String, Vec<String>>,
}

impl TabularCreatureSystem {
    pub fn new(creatures: BTreeMap<String, TabCreature>) -> Result<TabularCreatureSystem> {
        for (id, c) in &creatures {
            if c.val.is_empty() {
                return Err(KernelError::Schema(format!("creature {id} has empty value")));
            }
            if c.norm.is_negative() {
                return Err(KernelError::Schema(format!("creature {id} has negative norm")));
            }
            if c.val.len() == 1 && !c.norm.numer().is_zero() {
                return Err(KernelError::Schema(format!(
                    "creature {id} has a single value but nonzero norm"
                )));
            }
            for d in &c.succ {
                let dc = creatures.get(d).ok_or_else(|| {
                    KernelError::Schema(format!("creature {id} lists unknown successor {d}"))
                })?;
                if !dc.val.is_subset(&c.val) {
                    return Err(KernelError::Schema(format!(
                        "successor {d} of {id} does not shrink the value set"
                    )));
                }
                if dc.norm > c.norm {
                    return Err(KernelError::Schema(format!(
                        "successor {d} of {id} has larger norm"
                    )));
                }
            }
        }

        let mut closure: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for id in creatures.keys() {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut queue: VecDeque<&str> = VecDeque::new();
            seen.insert(id);
            queue.push_back(id);
            while let Some(cur) = queue.pop_front() {
                for d in &creatures[cur].succ {
                    if seen.insert(d) {
                        queue.push_back(d);
                    }
                }
            }
            closure.insert(id.clone(), seen.into_iter().map(String::from).collect());
        }

        for (id, c) in &creatures {
            let reach = &closure[id];
            if let Some(h) = &c.half {
                if !creatures.contains_key(h) {
                    return Err(KernelError::Schema(format!(
                        "creature {id} halves to unknown {h}"
                    )));
                }
                if reach.binary_search(h).is_err() {
                    return Err(KernelError::Schema(format!(
                        "halving {h} of {id} is not a successor"
                    )));
                }
            }
            if let Some(dw) = &c.decisive {
                for part in [&dw.d_minus, &dw.d_plus] {
                    if !creatures.contains_key(part) {
                        return Err(KernelError::Schema(format!(
                            "decisive part {part} of {id} is unknown"
                        )));
                    }
                    if reach.binary_search(part).is_err() {
                        return Err(KernelError::Schema(format!(
                            "decisive part {part} of {id} is not a successor"
                        )));
                    }
                }
                if creatures[&dw.d_minus].val.len() as u64 > dw.k_cap {
                    return Err(KernelError::Schema(format!(
                        "decisive small part {} of {id} exceeds its size cap {}",
                        dw.d_minus, dw.k_cap
                    )));
                }
            }
        }

        Ok(TabularCreatureSystem { creatures, closure })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.creatures.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&TabCreature> {
        self.creatures
            .get(id)
            .ok_or_else(|| KernelError::Schema(format!("unknown creature {id}")))
    }

    pub fn norm_value(&self, id: &str) -> Result<NormValue> {
        Ok(NormValue::rational(self.get(id)?.norm.clone()))
    }

    /// All successors of `id` (reflexive transitive closure), sorted.
    pub fn successors(&self, id: &str) -> Result<&[String]> {
        self.get(id)?;
        Ok(&self.closure[id])
    }

    pub fn in_sigma(&self, id: &str, d: &str) -> Result<bool> {
        self.get(d)?;
        Ok(self.successors(id)?.binary_search_by(|x| x.as_str().cmp(d)).is_ok())
    }

    pub fn halve(&self, id: &str) -> Result<&str> {
        self.get(id)?
            .half
            .as_deref()
            .ok_or_else(|| KernelError::WitnessUnavailable(format!("{id} declares no halving")))
    }

    pub fn decisive(&self, id: &str) -> Result<Option<&TabDecisive>> {
        Ok(self.get(id)?.decisive.as_ref())
    }

    /// Find a successor of `id` that is monochromatic under `colors` and
    /// drops at most `r` of norm. Highest norm wins, ties by id.
    pub fn extract_big(
        &self,
        id: &str,
        colors: &BTreeMap<String, u64>,
        r: &Ratio<BigInt>,
    ) -> Result<(&str, u64)> {
        let c = self.get(id)?;
        for v in &c.val {
            if !colors.contains_key(v) {
                return Err(KernelError::Precondition(format!(
                    "coloring misses value {v} of {id}"
                )));
            }
        }
        let floor = &c.norm - r;
        let mut best: Option<(&str, u64)> = None;
        for d in self.successors(id)? {
            let dc = &self.creatures[d];
            if dc.norm < floor {
                continue;
            }
            let mut it = dc.val.iter().map(|v| colors[v]);
            let first = it.next().expect("validated nonempty");
            if !it.all(|f| f == first) {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, _)) => dc.norm > self.creatures[b].norm,
            };
            if better {
                best = Some((d.as_str(), first));
            }
        }
        best.ok_or_else(|| {
            KernelError::WitnessUnavailable(format!(
                "no monochromatic successor of {id} within norm drop {r}"
            ))
        })
    }

    /// Undo a halving: given `d` in Σ(halve(id)) of positive norm, find a
    /// successor of `id` with value inside `val(d)` and norm within `r` of
    /// `norm(id)`.
    pub fn unhalve(&self, id: &str, d: &str, r: &Ratio<BigInt>) -> Result<&str> {
        let half = self.halve(id)?;
        if !self.in_sigma(half, d)? {
            return Err(KernelError::Precondition(format!(
                "{d} is not a successor of the halving of {id}"
            )));
        }
        let dc = self.get(d)?;
        if !dc.norm.is_positive() {
            return Err(KernelError::NormTooSmall(format!(
                "unhalving needs positive norm, {d} has {}",
                dc.norm
            )));
        }
        let floor = &self.get(id)?.norm - r;
        let mut best: Option<&str> = None;
        for e in self.successors(id)? {
            let ec = &self.creatures[e];
            if ec.norm >= floor && ec.val.is_subset(&dc.val) {
                let better = match best {
                    None => true,
                    Some(b) => ec.norm > self.creatures[b].norm,
                };
                if better {
                    best = Some(e);
                }
            }
        }
        best.ok_or_else(|| {
            KernelError::WitnessUnavailable(format!(
                "no successor of {id} inside {d} within norm drop {r}"
            ))
        })
    }
}

impl Serialize for TabularCreatureSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.creatures.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TabularCreatureSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let creatures = BTreeMap::deserialize(d)?;
        TabularCreatureSystem::new(creatures).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn creature(val: &[&str], norm: (i64, i64), succ: &[&str]) -> TabCreature {
        TabCreature {
            val: val.iter().map(|s| s.to_string()).collect(),
            norm: Ratio::new(BigInt::from(norm.0), BigInt::from(norm.1)),
            succ: succ.iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: None,
        }
    }

    fn chain() -> TabularCreatureSystem {
        let mut m = BTreeMap::new();
        m.insert("top".into(), creature(&["a", "b", "c"], (2, 1), &["mid"]));
        m.insert("mid".into(), creature(&["a", "b"], (3, 2), &["leaf"]));
        m.insert("leaf".into(), creature(&["a"], (0, 1), &[]));
        TabularCreatureSystem::new(m).unwrap()
    }

    #[test]
    fn closure_is_reflexive_and_transitive() {
        let sys = chain();
        assert_eq!(sys.successors("top").unwrap(), &["leaf", "mid", "top"]);
        assert!(sys.in_sigma("top", "leaf").unwrap());
        assert!(!sys.in_sigma("mid", "top").unwrap());
    }

    #[test]
    fn validation_rejects_bad_tables() {
        let mut m = BTreeMap::new();
        m.insert("a".into(), creature(&["x"], (0, 1), &["ghost"]));
        assert!(TabularCreatureSystem::new(m).is_err());

        let mut m = BTreeMap::new();
        m.insert("a".into(), creature(&["x"], (1, 1), &[]));
        assert!(TabularCreatureSystem::new(m).is_err());

        let mut m = BTreeMap::new();
        m.insert("a".into(), creature(&["x"], (0, 1), &["b"]));
        m.insert("b".into(), creature(&["x", "y"], (0, 1), &[]));
        assert!(TabularCreatureSystem::new(m).is_err());

        let mut m = BTreeMap::new();
        m.insert("a".into(), creature(&["x", "y"], (1, 1), &["b"]));
        m.insert("b".into(), creature(&["x", "y"], (2, 1), &[]));
        assert!(TabularCreatureSystem::new(m).is_err());
    }

    #[test]
    fn extraction_prefers_the_highest_norm() {
        let mut m = BTreeMap::new();
        m.insert(
            "c".into(),
            creature(&["a", "b", "x", "y"], (2, 1), &["ab", "xy", "ay"]),
        );
        m.insert("ab".into(), creature(&["a", "b"], (3, 2), &[]));
        m.insert("xy".into(), creature(&["x", "y"], (7, 4), &[]));
        m.insert("ay".into(), creature(&["a", "y"], (2, 1), &[]));
        let sys = TabularCreatureSystem::new(m).unwrap();
        let colors: BTreeMap<String, u64> = [("a", 0), ("b", 0), ("x", 1), ("y", 1)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        // "ay" is bichromatic; "xy" beats "ab" on norm.
        let (d, color) = sys.extract_big("c", &colors, &Ratio::new(BigInt::from(1), BigInt::from(1))).unwrap();
        assert_eq!((d, color), ("xy", 1));
        // A tight drop bound excludes both monochromatic candidates.
        let err = sys.extract_big("c", &colors, &Ratio::new(BigInt::from(1), BigInt::from(8)));
        assert!(err.is_err());
    }

    #[test]
    fn unhalving_searches_the_original_successors() {
        let mut m = BTreeMap::new();
        let mut top = creature(&["a", "b", "c", "d"], (2, 1), &["half", "wide"]);
        top.half = Some("half".into());
        m.insert("top".into(), top);
        m.insert("half".into(), creature(&["a", "b", "c", "d"], (1, 1), &["sub"]));
        m.insert("sub".into(), creature(&["a", "b"], (1, 2), &[]));
        m.insert("wide".into(), creature(&["a", "b"], (3, 2), &[]));
        let sys = TabularCreatureSystem::new(m).unwrap();
        assert_eq!(sys.halve("top").unwrap(), "half");
        // sub has positive norm; wide sits inside its value set and keeps
        // norm within 1 of top.
        assert_eq!(sys.unhalve("top", "sub", &Ratio::new(BigInt::from(1), BigInt::from(1))).unwrap(), "wide");
        assert!(sys.unhalve("top", "half", &Ratio::new(BigInt::from(1), BigInt::from(1))).is_ok());
    }

    #[test]
    fn serde_round_trip() {
        let mut m = BTreeMap::new();
        let mut top = creature(&["a", "b"], (3, 2), &["low"]);
        top.decisive = Some(TabDecisive {
            k_cap: 2,
            d_minus: "low".into(),
            d_plus: "top".into(),
        });
        m.insert("top".into(), top);
        m.insert("low".into(), creature(&["a"], (0, 1), &[]));
        let sys = TabularCreatureSystem::new(m).unwrap();
        let json = serde_json::to_string_pretty(&sys).unwrap();
        assert!(json.contains("\"3/2\""));
        let back: TabularCreatureSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);

        let bad = json.replace("\"3/2\"", "\"-1/2\"");
        assert!(serde_json::from_str::<TabularCreatureSystem>(&bad).is_err());
    }
}
