//! One interface over split creatures and tabular systems.
//!
//! The homogenization and decision engines only need value sets, norms, the
//! successor relation, halving, bigness extraction, and decisive witnesses.
//! `AnyCreature` provides those uniformly: split creatures compute them from
//! rank, tabular creatures read them from their table. Values are exchanged
//! as strings (binary renderings on the split side, labels on the tabular
//! side).

use crate::error::{KernelError, Result};
use crate::norm::NormValue;
use crate::split::SplitCreature;
use crate::tabular::TabularCreatureSystem;
use num_bigint::BigInt;
use num_rational::Ratio;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum AnyCreature {
    Split(SplitCreature),
    Tab {
        sys: Arc<TabularCreatureSystem>,
        id: String,
    },
}

/// The decisive witness, seen uniformly: a small part of at most `k_cap`
/// values and a big part.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisiveParts {
    pub k_cap: u64,
    pub d_minus: AnyCreature,
    pub d_plus: AnyCreature,
}

impl PartialEq for AnyCreature {
    fn eq(&self, other: &AnyCreature) -> bool {
        match (self, other) {
            (AnyCreature::Split(a), AnyCreature::Split(b)) => a == b,
            (AnyCreature::Tab { sys: s1, id: i1 }, AnyCreature::Tab { sys: s2, id: i2 }) => {
                i1 == i2 && (Arc::ptr_eq(s1, s2) || s1 == s2)
            }
            _ => false,
        }
    }
}

fn big_ratio(r: &Ratio<u64>) -> Ratio<BigInt> {
    Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl AnyCreature {
    pub fn tab(sys: &Arc<TabularCreatureSystem>, id: &str) -> Result<AnyCreature> {
        sys.get(id)?;
        Ok(AnyCreature::Tab {
            sys: Arc::clone(sys),
            id: id.to_string(),
        })
    }

    pub fn label(&self) -> String {
        match self {
            AnyCreature::Split(c) => format!(
                "split(width={}, k={}, |val|={})",
                c.width(),
                c.k(),
                c.val().len()
            ),
            AnyCreature::Tab { id, .. } => id.clone(),
        }
    }

    pub fn val_strings(&self) -> Result<Vec<String>> {
        match self {
            AnyCreature::Split(c) => Ok(c.val().iter().map(|&b| c.render_string(b)).collect()),
            AnyCreature::Tab { sys, id } => Ok(sys.get(id)?.val.iter().cloned().collect()),
        }
    }

    pub fn val_len(&self) -> Result<usize> {
        match self {
            AnyCreature::Split(c) => Ok(c.val().len()),
            AnyCreature::Tab { sys, id } => Ok(sys.get(id)?.val.len()),
        }
    }

    pub fn norm(&self) -> Result<NormValue> {
        match self {
            AnyCreature::Split(c) => c.norm(),
            AnyCreature::Tab { sys, id } => sys.norm_value(id),
        }
    }

    fn check_scale(c: &SplitCreature, r: &Ratio<u64>) -> Result<()> {
        if &c.params().r != r {
            return Err(KernelError::KindMismatch(format!(
                "operation norm scale {r} differs from the creature's {}",
                c.params().r
            )));
        }
        Ok(())
    }

    pub fn in_sigma(&self, d: &AnyCreature) -> Result<bool> {
        match (self, d) {
            (AnyCreature::Split(a), AnyCreature::Split(b)) => Ok(a.in_sigma(b)),
            (AnyCreature::Tab { sys, id }, AnyCreature::Tab { sys: s2, id: i2 }) => {
                if !(Arc::ptr_eq(sys, s2) || sys == s2) {
                    return Err(KernelError::KindMismatch(
                        "successor test across different systems".into(),
                    ));
                }
                sys.in_sigma(id, i2)
            }
            _ => Err(KernelError::KindMismatch(
                "successor test across creature kinds".into(),
            )),
        }
    }

    /// All successors, subset enumeration capped at `max_subsets` on the
    /// split side. Deterministic order.
    pub fn successors(&self, max_subsets: u64) -> Result<Vec<AnyCreature>> {
        match self {
            AnyCreature::Split(c) => Ok(c
                .enumerate_sigma(max_subsets)?
                .into_iter()
                .map(AnyCreature::Split)
                .collect()),
            AnyCreature::Tab { sys, id } => Ok(sys
                .successors(id)?
                .iter()
                .map(|d| AnyCreature::Tab {
                    sys: Arc::clone(sys),
                    id: d.clone(),
                })
                .collect()),
        }
    }

    pub fn halve(&self) -> Result<AnyCreature> {
        match self {
            AnyCreature::Split(c) => Ok(AnyCreature::Split(c.halve()?)),
            AnyCreature::Tab { sys, id } => Ok(AnyCreature::Tab {
                sys: Arc::clone(sys),
                id: sys.halve(id)?.to_string(),
            }),
        }
    }

    pub fn unhalve(&self, d: &AnyCreature, r: &Ratio<u64>) -> Result<AnyCreature> {
        match (self, d) {
            (AnyCreature::Split(a), AnyCreature::Split(b)) => {
                Self::check_scale(a, r)?;
                Ok(AnyCreature::Split(a.unhalve(b)?))
            }
            (AnyCreature::Tab { sys, id }, AnyCreature::Tab { id: i2, .. }) => {
                Ok(AnyCreature::Tab {
                    sys: Arc::clone(sys),
                    id: sys.unhalve(id, i2, &big_ratio(r))?.to_string(),
                })
            }
            _ => Err(KernelError::KindMismatch(
                "unhalving across creature kinds".into(),
            )),
        }
    }

    /// Extract a monochromatic successor within norm drop `r`. `colors` must
    /// cover the value set; returns the successor and its color.
    pub fn extract_big(
        &self,
        colors: &BTreeMap<String, u64>,
        r: &Ratio<u64>,
    ) -> Result<(AnyCreature, u64)> {
        match self {
            AnyCreature::Split(c) => {
                Self::check_scale(c, r)?;
                let by_string: Vec<u64> = c
                    .val()
                    .iter()
                    .map(|&b| {
                        colors.get(&c.render_string(b)).copied().ok_or_else(|| {
                            KernelError::Precondition(format!(
                                "coloring misses value {}",
                                c.render_string(b)
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                let (d, color) = c.big_extract(&by_string)?;
                Ok((AnyCreature::Split(d), color))
            }
            AnyCreature::Tab { sys, id } => {
                let (d, color) = sys.extract_big(id, colors, &big_ratio(r))?;
                Ok((
                    AnyCreature::Tab {
                        sys: Arc::clone(sys),
                        id: d.to_string(),
                    },
                    color,
                ))
            }
        }
    }

    pub fn decisive(&self) -> Result<Option<DecisiveParts>> {
        match self {
            AnyCreature::Split(c) => Ok(c.decisive_witness()?.map(|w| DecisiveParts {
                k_cap: w.k_cap,
                d_minus: AnyCreature::Split(w.d_minus),
                d_plus: AnyCreature::Split(w.d_plus),
            })),
            AnyCreature::Tab { sys, id } => Ok(sys.decisive(id)?.map(|w| DecisiveParts {
                k_cap: w.k_cap,
                d_minus: AnyCreature::Tab {
                    sys: Arc::clone(sys),
                    id: w.d_minus.clone(),
                },
                d_plus: AnyCreature::Tab {
                    sys: Arc::clone(sys),
                    id: w.d_plus.clone(),
                },
            })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::RankParams;
    use crate::schedule::Flarge;
    use crate::tabular::TabCreature;
    use std::collections::BTreeSet;

    fn split_cube() -> AnyCreature {
        let params = RankParams::new(2, 0, Ratio::new(1, 1), Flarge::const_of(2).unwrap()).unwrap();
        AnyCreature::Split(
            SplitCreature::new(4, (0..16).collect(), 0, params, 1 << 20).unwrap(),
        )
    }

    fn tab_pair() -> Arc<TabularCreatureSystem> {
        let mut m = BTreeMap::new();
        m.insert(
            "top".into(),
            TabCreature {
                val: ["a", "b"].iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
                norm: Ratio::new(BigInt::from(1), BigInt::from(1)),
                succ: ["low"].iter().map(|s| s.to_string()).collect(),
                half: None,
                decisive: None,
            },
        );
        m.insert(
            "low".into(),
            TabCreature {
                val: ["a"].iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
                norm: Ratio::new(BigInt::from(0), BigInt::from(1)),
                succ: BTreeSet::new(),
                half: None,
                decisive: None,
            },
        );
        Arc::new(TabularCreatureSystem::new(m).unwrap())
    }

    #[test]
    fn values_render_uniformly() {
        let c = split_cube();
        let vals = c.val_strings().unwrap();
        assert_eq!(vals[0], "0000");
        assert_eq!(vals[15], "1111");
        let sys = tab_pair();
        let t = AnyCreature::tab(&sys, "top").unwrap();
        assert_eq!(t.val_strings().unwrap(), vec!["a", "b"]);
        assert!(AnyCreature::tab(&sys, "ghost").is_err());
    }

    #[test]
    fn kinds_do_not_mix() {
        let c = split_cube();
        let sys = tab_pair();
        let t = AnyCreature::tab(&sys, "top").unwrap();
        assert!(c.in_sigma(&t).is_err());
        assert_ne!(c, t);
    }

    #[test]
    fn scale_mismatch_is_rejected() {
        let c = split_cube();
        let colors: BTreeMap<String, u64> = c
            .val_strings()
            .unwrap()
            .into_iter()
            .map(|s| {
                let f = u64::from(s.starts_with('1'));
                (s, f)
            })
            .collect();
        assert!(c.extract_big(&colors, &Ratio::new(1, 2)).is_err());
        let (d, color) = c.extract_big(&colors, &Ratio::new(1, 1)).unwrap();
        assert_eq!(color, 1);
        assert_eq!(d.val_len().unwrap(), 8);
        assert!(c.in_sigma(&d).unwrap());
    }

    #[test]
    fn tabular_ops_round_trip_through_the_interface() {
        let sys = tab_pair();
        let t = AnyCreature::tab(&sys, "top").unwrap();
        let succ = t.successors(1 << 20).unwrap();
        assert_eq!(succ.len(), 2);
        assert!(succ.iter().all(|d| t.in_sigma(d).unwrap()));
        assert_eq!(t.norm().unwrap().to_string(), "1");
    }
}
