//! Deterministic tabular fixtures for the homogenization and decision
//! engines.
//!
//! The central builder is a graded subset lattice: nodes are (value subset,
//! level) pairs with norm `level * r`, singletons live at level zero, pairs
//! at level one, and everything above keeps at least three values so that a
//! two-coloring always pins a monochromatic pair one level down. Nodes of
//! level two and up declare a decisive witness. Generated product instances
//! come in two flavors: solvable ones, whose caps and colorings are arranged
//! so that every homogenization round finds its witnesses, and unsolvable
//! ones built from injective colorings over roots too high to reach their
//! singletons.

use crate::decision::{level_scale, Entry, FiniteCondition, NameTable};
use crate::family::AnyCreature;
use crate::tabular::{TabCreature, TabDecisive, TabularCreatureSystem};
use num_bigint::BigInt;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Norm unit shared by the generated systems. The solvable window
/// `(1 + r*(k-1), r*k]` is nonempty only for r > 1.
pub fn fixture_r() -> Ratio<u64> {
    Ratio::new(2, 1)
}

/// Decision threshold declared on non-root lattice nodes.
pub const DEEP_CAP: u64 = 1 << 62;

/// A generated product instance together with its codomain bound.
#[derive(Debug, Clone)]
pub struct ProductFixture {
    pub creatures: Vec<AnyCreature>,
    pub table: BTreeMap<Vec<String>, u64>,
    pub m: u64,
    pub t: u64,
    pub r: Ratio<u64>,
    /// Whether the generator arranged the instance to be solvable.
    pub solvable: bool,
}

fn node_id(values: &[&str], mask: u32, level: u64) -> String {
    let members: Vec<&str> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, v)| *v)
        .collect();
    format!("L{level}:{}", members.join("."))
}

fn min_width(level: u64) -> u32 {
    match level {
        0 => 1,
        1 => 2,
        _ => 3,
    }
}

/// Build a graded subset-lattice creature over `values` with its root at
/// `root_level`. The root's decisive witness carries `root_cap`, deeper
/// witnesses carry [`DEEP_CAP`]; the small part keeps the first three values
/// one level down, the large part the full set one level down.
pub fn lattice_creature(values: &[&str], root_level: u64, root_cap: u64) -> AnyCreature {
    assert!(root_level < 2 || root_cap >= 3);
    lattice_with_caps(values, root_level, &|level| {
        if level == root_level { root_cap } else { DEEP_CAP }
    })
}

/// Like [`lattice_creature`], but the finite cap sits at `cap_level` rather
/// than at the root, so the creature can absorb `root_level - cap_level`
/// boosting steps before its decision thresholds come into play.
pub fn boosted_lattice(values: &[&str], root_level: u64, cap_level: u64, cap: u64) -> AnyCreature {
    assert!((2..=root_level).contains(&cap_level));
    assert!(cap >= 3);
    lattice_with_caps(values, root_level, &|level| {
        if level == cap_level { cap } else { DEEP_CAP }
    })
}

fn lattice_with_caps(
    values: &[&str],
    root_level: u64,
    cap_at: &dyn Fn(u64) -> u64,
) -> AnyCreature {
    assert!(values.len() >= min_width(root_level) as usize);
    let r = fixture_r();
    let full: u32 = (1u32 << values.len()) - 1;
    let mut table = BTreeMap::new();
    for level in 0..=root_level {
        for mask in 1..=full {
            if mask.count_ones() < min_width(level) {
                continue;
            }
            let val: BTreeSet<String> = values
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v.to_string())
                .collect();
            let mut succ = BTreeSet::new();
            for sub_level in 0..=level {
                for sub in 1..=mask {
                    if sub & mask == sub
                        && sub.count_ones() >= min_width(sub_level)
                        && (sub, sub_level) != (mask, level)
                    {
                        succ.insert(node_id(values, sub, sub_level));
                    }
                }
            }
            let decisive = if level >= 2 {
                let mut kept = 0u32;
                let mut small_mask = 0u32;
                for i in 0..values.len() {
                    if mask >> i & 1 == 1 && kept < 3 {
                        small_mask |= 1 << i;
                        kept += 1;
                    }
                }
                Some(TabDecisive {
                    k_cap: cap_at(level),
                    d_minus: node_id(values, small_mask, level - 1),
                    d_plus: node_id(values, mask, level - 1),
                })
            } else {
                None
            };
            table.insert(
                node_id(values, mask, level),
                TabCreature {
                    val,
                    norm: Ratio::new(BigInt::from(*r.numer() * level), BigInt::from(*r.denom())),
                    succ,
                    half: None,
                    decisive,
                },
            );
        }
    }
    let sys = Arc::new(TabularCreatureSystem::new(table).expect("lattice validates"));
    AnyCreature::tab(&sys, &node_id(values, full, root_level)).expect("root exists")
}

/// Value names shared by the generated lattices.
pub const NAMES: [&str; 4] = ["v0", "v1", "v2", "v3"];

fn product_keys(creatures: &[AnyCreature]) -> Vec<Vec<String>> {
    let vals: Vec<Vec<String>> = creatures
        .iter()
        .map(|c| c.val_strings().expect("fixture values"))
        .collect();
    let mut out = vec![Vec::new()];
    for v in &vals {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for tup in &out {
            for x in v {
                let mut t = tup.clone();
                t.push(x.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// A solvable product instance: `k` lattice creatures rooted at level `k`,
/// a random two-coloring of their value product (bound `2^(1^1) = 2`), and
/// caps arranged so that the large block never shrinks to a lone coordinate
/// above level one. Supports `1 <= k <= 3`.
pub fn rich_product(seed: u64, k: usize) -> ProductFixture {
    assert!((1..=3).contains(&k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last_cap = rng.gen_range(4..=7u64);
    let mut caps = vec![0u64; k];
    caps[k - 1] = last_cap;
    if k >= 2 {
        caps[0] = if rng.gen_bool(0.5) {
            rng.gen_range(3..=last_cap)
        } else {
            last_cap + rng.gen_range(1..=3)
        };
    }
    if k == 3 {
        caps[1] = last_cap + rng.gen_range(1..=3);
    }
    let creatures: Vec<AnyCreature> = caps
        .iter()
        .map(|&cap| {
            let width = rng.gen_range(3..=4usize);
            lattice_creature(&NAMES[..width], k as u64, cap)
        })
        .collect();
    let table = product_keys(&creatures)
        .into_iter()
        .map(|tup| {
            let color = rng.gen_range(0..2u64);
            (tup, color)
        })
        .collect();
    ProductFixture {
        creatures,
        table,
        m: 1,
        t: 1,
        r: fixture_r(),
        solvable: true,
    }
}

/// An unsolvable product instance: roots one level higher than solvable ones
/// of the same width, colored injectively, so no monochromatic product
/// survives within the norm budget. Supports `k` of 1 or 2.
pub fn barren_product(seed: u64, k: usize) -> ProductFixture {
    assert!((1..=2).contains(&k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let creatures: Vec<AnyCreature> = (0..k)
        .map(|_| {
            let width = rng.gen_range(3..=4usize);
            lattice_creature(&NAMES[..width], k as u64 + 1, 20)
        })
        .collect();
    let keys = product_keys(&creatures);
    let mut colors: Vec<u64> = (0..keys.len() as u64).collect();
    colors.shuffle(&mut rng);
    let table = keys.into_iter().zip(colors).collect();
    ProductFixture {
        creatures,
        table,
        m: 4,
        t: 1,
        r: fixture_r(),
        solvable: false,
    }
}

/// A boosting chain: caps 2 then 5 along the large parts, norms 6 / 4 / 2.
pub fn boost_chain() -> AnyCreature {
    let vals = |s: &[&str]| s.iter().map(|v| v.to_string()).collect::<BTreeSet<_>>();
    let norm = |n: u64| Ratio::new(BigInt::from(n), BigInt::from(1));
    let mut table = BTreeMap::new();
    table.insert(
        "b0".into(),
        TabCreature {
            val: vals(&["a", "b", "c", "d"]),
            norm: norm(6),
            succ: ["b1", "s0"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: Some(TabDecisive {
                k_cap: 2,
                d_minus: "s0".into(),
                d_plus: "b1".into(),
            }),
        },
    );
    table.insert(
        "b1".into(),
        TabCreature {
            val: vals(&["a", "b", "c", "d"]),
            norm: norm(4),
            succ: ["b2", "s1"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: Some(TabDecisive {
                k_cap: 5,
                d_minus: "s1".into(),
                d_plus: "b2".into(),
            }),
        },
    );
    table.insert(
        "b2".into(),
        TabCreature {
            val: vals(&["a", "b", "c", "d"]),
            norm: norm(2),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "s0".into(),
        TabCreature {
            val: vals(&["a", "b"]),
            norm: norm(4),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "s1".into(),
        TabCreature {
            val: vals(&["a", "b", "c"]),
            norm: norm(2),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    let sys = Arc::new(TabularCreatureSystem::new(table).expect("chain validates"));
    AnyCreature::tab(&sys, "b0").expect("b0 exists")
}

/// Five values with an escape route around the obstruction value `x`: the
/// large part of `a0` keeps all five values, and its successor `a2` drops
/// `x` while keeping enough norm.
pub fn avoid_system() -> AnyCreature {
    let vals = |s: &[&str]| s.iter().map(|v| v.to_string()).collect::<BTreeSet<_>>();
    let norm = |n: u64| Ratio::new(BigInt::from(n), BigInt::from(1));
    let mut table = BTreeMap::new();
    table.insert(
        "a0".into(),
        TabCreature {
            val: vals(&["p", "q", "s", "u", "x"]),
            norm: norm(6),
            succ: ["a1", "am"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: Some(TabDecisive {
                k_cap: 3,
                d_minus: "am".into(),
                d_plus: "a1".into(),
            }),
        },
    );
    table.insert(
        "a1".into(),
        TabCreature {
            val: vals(&["p", "q", "s", "u", "x"]),
            norm: norm(4),
            succ: ["a2"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "a2".into(),
        TabCreature {
            val: vals(&["p", "q", "s", "u"]),
            norm: norm(2),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "am".into(),
        TabCreature {
            val: vals(&["p", "q", "s"]),
            norm: norm(4),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    let sys = Arc::new(TabularCreatureSystem::new(table).expect("system validates"));
    AnyCreature::tab(&sys, "a0").expect("a0 exists")
}

/// A creature whose declared witness drop overdraws the norm budget: the
/// large part crashes to norm 1 over the two obstruction values, so the only
/// sufficiently big pieces are the obstruction singletons themselves. With
/// honest drops (at most r per step) this shape cannot occur.
pub fn trapped_system() -> AnyCreature {
    let vals = |s: &[&str]| s.iter().map(|v| v.to_string()).collect::<BTreeSet<_>>();
    let norm = |n: u64| Ratio::new(BigInt::from(n), BigInt::from(1));
    let mut table = BTreeMap::new();
    table.insert(
        "t0".into(),
        TabCreature {
            val: vals(&["p", "x1", "x2"]),
            norm: norm(6),
            succ: ["t1", "tm"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: Some(TabDecisive {
                k_cap: 3,
                d_minus: "tm".into(),
                d_plus: "t1".into(),
            }),
        },
    );
    table.insert(
        "t1".into(),
        TabCreature {
            val: vals(&["x1", "x2"]),
            norm: norm(1),
            succ: ["sx1", "sx2"].iter().map(|s| s.to_string()).collect(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "sx1".into(),
        TabCreature {
            val: vals(&["x1"]),
            norm: norm(0),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "sx2".into(),
        TabCreature {
            val: vals(&["x2"]),
            norm: norm(0),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    table.insert(
        "tm".into(),
        TabCreature {
            val: vals(&["p", "x1"]),
            norm: norm(4),
            succ: BTreeSet::new(),
            half: None,
            decisive: None,
        },
    );
    let sys = Arc::new(TabularCreatureSystem::new(table).expect("system validates"));
    AnyCreature::tab(&sys, "t0").expect("t0 exists")
}

fn rung_id(values: &[&str], mask: u32, rung: u64) -> String {
    let members: Vec<&str> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, v)| *v)
        .collect();
    format!("g{rung:04}:{}", members.join("."))
}

/// A rung-grid creature for the decision engine: every value subset of size
/// two or more sits on a ladder of `rungs` rungs with norm `rung * unit`,
/// singletons live at norm zero. Direct edges cost exactly one rung, whether
/// they keep the value set (this is the declared halving) or shrink it, so
/// every norm-positive part of a successor can be matched one rung below the
/// original: witness drops never overdraw `unit`.
pub fn rung_creature(values: &[&str], unit: &Ratio<u64>, rungs: u64) -> AnyCreature {
    assert!((2..=4).contains(&values.len()));
    let full: u32 = (1u32 << values.len()) - 1;
    let norm_of = |rung: u64| {
        Ratio::new(
            BigInt::from(*unit.numer() * rung),
            BigInt::from(*unit.denom()),
        )
    };
    let mut table = BTreeMap::new();
    for mask in 1..=full {
        if mask.count_ones() == 1 {
            table.insert(
                rung_id(values, mask, 0),
                TabCreature {
                    val: values
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, v)| v.to_string())
                        .collect(),
                    norm: norm_of(0),
                    succ: BTreeSet::new(),
                    half: None,
                    decisive: None,
                },
            );
            continue;
        }
        for rung in 0..=rungs {
            let val: BTreeSet<String> = values
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v.to_string())
                .collect();
            let mut succ = BTreeSet::new();
            if rung >= 1 {
                succ.insert(rung_id(values, mask, rung - 1));
                for sub in 1..mask {
                    if sub & mask == sub && sub.count_ones() >= 2 {
                        succ.insert(rung_id(values, sub, rung - 1));
                    }
                }
                for i in 0..values.len() {
                    if mask >> i & 1 == 1 {
                        succ.insert(rung_id(values, 1 << i, 0));
                    }
                }
            }
            let half = (rung >= 1).then(|| rung_id(values, mask, rung - 1));
            table.insert(
                rung_id(values, mask, rung),
                TabCreature {
                    val,
                    norm: norm_of(rung),
                    succ,
                    half,
                    decisive: None,
                },
            );
        }
    }
    let sys = Arc::new(TabularCreatureSystem::new(table).expect("rung grid validates"));
    AnyCreature::tab(&sys, &rung_id(values, full, rungs)).expect("top rung exists")
}

/// A condition over rung grids: domains of the given widths drawn from
/// [`NAMES`], fixed trunk values below, one rung creature per level above
/// with `tops[i]` rungs and the level's own norm scale as rung unit.
pub fn ladder_condition(trunk: &[&str], widths: &[usize], tops: &[u64]) -> FiniteCondition {
    assert_eq!(trunk.len() + tops.len(), widths.len());
    let domains: Vec<Vec<String>> = widths
        .iter()
        .map(|&w| NAMES[..w].iter().map(|v| v.to_string()).collect())
        .collect();
    let entries: Vec<Entry> = (0..widths.len())
        .map(|i| {
            if i < trunk.len() {
                Entry::Value(trunk[i].to_string())
            } else {
                let unit = level_scale(widths, i).expect("scale fits a machine word");
                Entry::Creature(rung_creature(
                    &NAMES[..widths[i]],
                    &unit,
                    tops[i - trunk.len()],
                ))
            }
        })
        .collect();
    FiniteCondition::new(entries, domains).expect("ladder validates")
}

fn string_product(lists: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        let mut next = Vec::with_capacity(out.len() * l.len());
        for tup in &out {
            for v in l {
                let mut t = tup.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// A name table filled by a rule on branches.
pub fn name_from(
    domains: &[Vec<String>],
    rule: impl Fn(&[String]) -> Option<u64>,
) -> NameTable {
    let map: BTreeMap<Vec<String>, Option<u64>> = string_product(domains)
        .into_iter()
        .map(|b| {
            let v = rule(&b);
            (b, v)
        })
        .collect();
    NameTable::new(domains.to_vec(), map).expect("rule table validates")
}

/// A name constant across all branches.
pub fn constant_name(domains: &[Vec<String>], value: u64) -> NameTable {
    name_from(domains, |_| Some(value))
}

/// A random name: each branch gets a value below 4, or stays unresolved
/// with probability `bot_percent` in a hundred.
pub fn random_name(domains: &[Vec<String>], bot_percent: u32, seed: u64) -> NameTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map: BTreeMap<Vec<String>, Option<u64>> = string_product(domains)
        .into_iter()
        .map(|b| {
            let v = if rng.gen_range(0..100) < bot_percent {
                None
            } else {
                Some(rng.gen_range(0..4u64))
            };
            (b, v)
        })
        .collect();
    NameTable::new(domains.to_vec(), map).expect("random table validates")
}

fn positive_val_classes(c: &AnyCreature) -> Vec<Vec<String>> {
    let mut pool = vec![c.clone()];
    pool.extend(c.successors(1 << 20).expect("fixture closure"));
    let mut classes = BTreeSet::new();
    for d in pool {
        if d.norm().expect("fixture norm").is_positive().expect("rational norm") {
            classes.insert(d.val_strings().expect("fixture values"));
        }
    }
    classes.into_iter().collect()
}

fn branches_resolved(prefix: &mut Vec<String>, lists: &[Vec<String>], tau: &NameTable) -> bool {
    let Some((head, rest)) = lists.split_first() else {
        return tau.value(prefix).expect("covered branch").is_some();
    };
    head.iter().all(|v| {
        prefix.push(v.clone());
        let ok = branches_resolved(prefix, rest, tau);
        prefix.pop();
        ok
    })
}

fn class_search(
    prefix: &mut Vec<String>,
    classes: &[Vec<Vec<String>>],
    chosen: &mut Vec<Vec<String>>,
    tau: &NameTable,
) -> bool {
    let Some((head, rest)) = classes.split_first() else {
        return branches_resolved(prefix, chosen, tau);
    };
    for cls in head {
        chosen.push(cls.clone());
        let found = class_search(prefix, rest, chosen, tau);
        chosen.pop();
        if found {
            return true;
        }
    }
    false
}

/// Exhaustive check whether any condition below `q` with one more trunk
/// level and positive norms resolves the name on all its branches. Whether a
/// condition resolves the name depends only on its per-level value sets, so
/// the search ranges over the distinct value sets of norm-positive closure
/// members, one level at a time.
pub fn exists_deciding_extension(q: &FiniteCondition, tau: &NameTable) -> bool {
    let n0 = q.trunklg();
    assert!(n0 < q.depth(), "needs a creature level to extend into");
    let mut prefix: Vec<String> = (0..n0)
        .map(|i| q.level_values(i).expect("trunk value")[0].clone())
        .collect();
    let classes: Vec<Vec<Vec<String>>> = (n0 + 1..q.depth())
        .map(|i| match q.entry(i) {
            Entry::Creature(c) => positive_val_classes(c),
            Entry::Value(_) => unreachable!("levels above the trunk are creatures"),
        })
        .collect();
    if classes.iter().any(Vec::is_empty) {
        return false;
    }
    for v in q.level_values(n0).expect("stage values") {
        prefix.push(v);
        let found = class_search(&mut prefix, &classes, &mut Vec::new(), tau);
        prefix.pop();
        if found {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_grades_norms_by_level() {
        let c = lattice_creature(&["a", "b", "c", "d"], 3, 5);
        assert_eq!(c.val_len().unwrap(), 4);
        assert_eq!(c.norm().unwrap().to_string(), "6");
        let parts = c.decisive().unwrap().unwrap();
        assert_eq!(parts.k_cap, 5);
        assert_eq!(parts.d_minus.val_len().unwrap(), 3);
        assert_eq!(parts.d_plus.val_len().unwrap(), 4);
        assert_eq!(parts.d_plus.norm().unwrap().to_string(), "4");
        let deep = parts.d_plus.decisive().unwrap().unwrap();
        assert_eq!(deep.k_cap, DEEP_CAP);
    }

    #[test]
    fn lattice_successors_stay_inside() {
        let c = lattice_creature(&["a", "b", "c"], 2, 4);
        for d in c.successors(1 << 20).unwrap() {
            assert!(c.in_sigma(&d).unwrap());
            assert!(d
                .val_strings()
                .unwrap()
                .iter()
                .all(|v| c.val_strings().unwrap().contains(v)));
        }
    }

    #[test]
    fn generated_tables_cover_the_product() {
        for seed in 0..5 {
            for k in 1..=3 {
                let fx = rich_product(seed, k);
                let keys = product_keys(&fx.creatures);
                assert_eq!(fx.table.len(), keys.len());
                assert!(keys.iter().all(|t| fx.table.contains_key(t)));
                assert!(fx.table.values().all(|&v| v < 2));
            }
        }
    }

    #[test]
    fn barren_tables_are_injective() {
        for seed in 0..5 {
            for k in 1..=2 {
                let fx = barren_product(seed, k);
                let distinct: BTreeSet<u64> = fx.table.values().copied().collect();
                assert_eq!(distinct.len(), fx.table.len());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = rich_product(9, 2);
        let b = rich_product(9, 2);
        assert_eq!(a.table, b.table);
        assert_eq!(a.creatures, b.creatures);
    }
}
