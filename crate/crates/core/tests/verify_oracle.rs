//! Bigness checking against a literal oracle: enumerate every subset of the
//! value set and every admissible `k'`, with no witness machinery at all.

use creatures_core::rank::{RankCtx, RankParams};
use creatures_core::schedule::Flarge;
use creatures_core::verify::{verify, Outcome, Property, VerifyMode};
use creatures_core::{AnyCreature, SplitCreature, TabCreature, TabularCreatureSystem};
use num_bigint::BigInt;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

fn toy_schedules() -> Vec<Flarge> {
    vec![
        Flarge::Default,
        Flarge::const_of(2).unwrap(),
        Flarge::const_of(3).unwrap(),
        Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap(),
        Flarge::table(vec![4, 2], 2).unwrap(),
    ]
}

/// Definitional check of one coloring: some nonempty subset is monochromatic
/// and carries some admissible k' with norm within r of the original.
/// Subset prenorms are precomputed by position mask.
fn oracle_coloring_holds(prenorms: &[u64], k: u64, x_c: u64, coloring: &[u64]) -> bool {
    let n = coloring.len();
    'subset: for mask in 1u64..1 << n {
        let mut color = None;
        for (i, &f) in coloring.iter().enumerate() {
            if mask >> i & 1 == 1 {
                match color {
                    None => color = Some(f),
                    Some(g) if g == f => {}
                    _ => continue 'subset,
                }
            }
        }
        let p = prenorms[mask as usize];
        if p < k + 1 {
            continue;
        }
        for k_prime in k..=p - 1 {
            // Dropping exactly r halves the norm argument, whatever r is.
            if 2 * (p - k_prime) >= x_c {
                return true;
            }
        }
    }
    false
}

#[test]
fn split_bigness_matches_the_literal_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let schedules = toy_schedules();
    // Width <= 3 keeps prenorm <= 2, so only the scale 2 rows are
    // non-vacuous; sizes are swept systematically so that injective
    // colorings (the failing ones) are guaranteed to appear.
    let mut combos = Vec::new();
    for width in [2u32, 3] {
        for r in [Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(1, 2)] {
            for size in 3..=(1usize << width).min(8) {
                combos.push((width, r, size));
            }
        }
    }
    let mut nontrivial_pass = 0u64;
    let mut nontrivial_fail = 0u64;

    for (trial, &(width, r, size)) in combos.iter().enumerate() {
        let universe: Vec<u32> = (0..1u32 << width).collect();
        let val: Vec<u32> = universe
            .choose_multiple(&mut rng, size)
            .copied()
            .collect();
        let schedule = schedules[trial % schedules.len()].clone();
        let params = RankParams::new(2, 0, r, schedule).unwrap();
        let Ok(c) = SplitCreature::new(width, val, 0, params.clone(), 1 << 20) else {
            continue;
        };
        let n = c.val().len();

        let ctx = RankCtx::new(params, 1 << 20);
        let mut prenorms = vec![0u64; 1 << n];
        for mask in 1usize..1 << n {
            let sub: Vec<u32> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| c.val()[i])
                .collect();
            prenorms[mask] = ctx.prenorm(&sub, width).unwrap().value;
        }
        let x_c = c.norm_arg();

        // With B below |val| some color repeats and any monochromatic pair
        // qualifies at these prenorms, so failures require B = |val|
        // (injective colorings). Keep that case exhaustive-sized.
        let mut color_counts = vec![2u64, 3];
        if n <= 6 {
            color_counts.push(n as u64);
        }
        for colors in color_counts {
            let any = AnyCreature::Split(c.clone());
            let rep = verify(
                &any,
                &Property::Big { colors },
                &r,
                VerifyMode::Exhaustive,
                1 << 20,
            )
            .unwrap();

            if !c.norm().unwrap().gt_nat(1).unwrap() {
                assert_eq!(rep.outcome, Outcome::Vacuous);
                continue;
            }

            let total = colors.pow(n as u32);
            let mut oracle_failures = 0u64;
            let mut coloring = vec![0u64; n];
            for idx in 0..total {
                let mut rest = idx;
                for slot in coloring.iter_mut() {
                    *slot = rest % colors;
                    rest /= colors;
                }
                if !oracle_coloring_holds(&prenorms, c.k(), x_c, &coloring) {
                    oracle_failures += 1;
                }
            }

            assert_eq!(rep.checked, total, "trial {trial} colors {colors}");
            assert_eq!(
                rep.failures, oracle_failures,
                "trial {trial} colors {colors} schedule {} r {r}",
                c.params().schedule
            );
            if oracle_failures == 0 {
                assert_eq!(rep.outcome, Outcome::Pass);
                nontrivial_pass += 1;
            } else {
                assert_eq!(rep.outcome, Outcome::Fail);
                nontrivial_fail += 1;
            }
        }
    }
    // The sweep must exercise both outcomes, not just vacuous creatures.
    assert!(nontrivial_pass > 0 && nontrivial_fail > 0);
}

fn random_tab_system(rng: &mut ChaCha8Rng) -> Arc<TabularCreatureSystem> {
    // A root over a pool of subsets of a small label universe, with edges
    // only where value sets nest and norms do not grow.
    let labels = ["a", "b", "c", "d"];
    let root_val: BTreeSet<String> = labels.iter().map(|s| s.to_string()).collect();
    let mut creatures = BTreeMap::new();
    let mut pool: Vec<(String, BTreeSet<String>, Ratio<BigInt>)> = Vec::new();
    for i in 0..rng.gen_range(3..=6) {
        let size = rng.gen_range(1..=labels.len());
        let val: BTreeSet<String> = labels
            .choose_multiple(rng, size)
            .map(|s| s.to_string())
            .collect();
        let norm = if val.len() == 1 {
            Ratio::new(BigInt::from(0), BigInt::from(1))
        } else {
            Ratio::new(BigInt::from(rng.gen_range(0..=6)), BigInt::from(4))
        };
        pool.push((format!("d{i}"), val, norm));
    }
    let root_norm = Ratio::new(BigInt::from(2), BigInt::from(1));
    let succ: BTreeSet<String> = pool
        .iter()
        .filter(|(_, _, n)| n <= &root_norm)
        .map(|(id, _, _)| id.clone())
        .collect();
    creatures.insert(
        "root".to_string(),
        TabCreature {
            val: root_val,
            norm: root_norm,
            succ,
            half: None,
            decisive: None,
        },
    );
    for (id, val, norm) in pool {
        creatures.insert(
            id,
            TabCreature {
                val,
                norm,
                succ: BTreeSet::new(),
                half: None,
                decisive: None,
            },
        );
    }
    Arc::new(TabularCreatureSystem::new(creatures).unwrap())
}

#[test]
fn tabular_bigness_matches_a_direct_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let r = Ratio::new(1, 1);
    let rb = Ratio::new(BigInt::from(1), BigInt::from(1));
    let mut outcomes = BTreeSet::new();
    // One crafted system that passes: every pair of labels is a norm-1
    // successor, and any 2-coloring of 4 labels leaves some pair
    // monochromatic. The random sweep supplies the failing systems.
    let all_pairs = {
        let labels = ["a", "b", "c", "d"];
        let mut creatures = BTreeMap::new();
        let mut succ = BTreeSet::new();
        for (i, x) in labels.iter().enumerate() {
            for y in &labels[i + 1..] {
                let id = format!("{x}{y}");
                creatures.insert(
                    id.clone(),
                    TabCreature {
                        val: [x.to_string(), y.to_string()].into_iter().collect(),
                        norm: Ratio::new(BigInt::from(1), BigInt::from(1)),
                        succ: BTreeSet::new(),
                        half: None,
                        decisive: None,
                    },
                );
                succ.insert(id);
            }
        }
        creatures.insert(
            "root".to_string(),
            TabCreature {
                val: labels.iter().map(|s| s.to_string()).collect(),
                norm: Ratio::new(BigInt::from(2), BigInt::from(1)),
                succ,
                half: None,
                decisive: None,
            },
        );
        Arc::new(TabularCreatureSystem::new(creatures).unwrap())
    };
    let mut systems: Vec<Arc<TabularCreatureSystem>> = vec![all_pairs];
    systems.extend((0..40).map(|_| random_tab_system(&mut rng)));
    for sys in systems {
        let root = AnyCreature::tab(&sys, "root").unwrap();
        let vals = root.val_strings().unwrap();
        let n = vals.len();
        let colors = 2u64;
        let rep = verify(
            &root,
            &Property::Big { colors },
            &r,
            VerifyMode::Exhaustive,
            1 << 20,
        )
        .unwrap();

        let floor = &sys.get("root").unwrap().norm - &rb;
        let mut oracle_failures = 0u64;
        for idx in 0..colors.pow(n as u32) {
            let coloring: Vec<u64> = (0..n).map(|i| idx >> i & 1).collect();
            let mono = sys.successors("root").unwrap().iter().any(|d| {
                let dc = sys.get(d).unwrap();
                if dc.norm < floor {
                    return false;
                }
                let mut cs = dc
                    .val
                    .iter()
                    .map(|v| coloring[vals.iter().position(|x| x == v).unwrap()]);
                let first = cs.next().unwrap();
                cs.all(|f| f == first)
            });
            if !mono {
                oracle_failures += 1;
            }
        }
        assert_eq!(rep.failures, oracle_failures);
        outcomes.insert(format!("{:?}", rep.outcome));
    }
    assert!(outcomes.contains("Pass") && outcomes.contains("Fail"));
}

#[test]
fn sigma_preserves_values_and_norms() {
    // Successors shrink values and never gain norm, exhaustively at small
    // sizes.
    let schedule = Flarge::const_of(2).unwrap();
    let params = RankParams::new(2, 0, Ratio::new(1, 1), schedule).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..10 {
        let universe: Vec<u32> = (0..16).collect();
        let size = rng.gen_range(4..=10usize);
        let val: Vec<u32> = universe.choose_multiple(&mut rng, size).copied().collect();
        let Ok(c) = SplitCreature::new(4, val, 0, params.clone(), 1 << 20) else {
            continue;
        };
        for d in c.enumerate_sigma(1 << 20).unwrap() {
            assert!(c.in_sigma(&d));
            assert!(d.val().iter().all(|b| c.val().contains(b)));
            // nor(d) <= nor(c): same scale, so compare norm arguments.
            assert!(d.norm_arg() <= c.norm_arg());
        }
    }
}
