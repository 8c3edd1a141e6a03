//! Cross-checks of the decision engine against exhaustive search.
//!
//! The dichotomy under test: a basic step either returns a condition that
//! resolves the name on every branch, or one with no norm-positive
//! one-more-trunk extension resolving it. The oracle enumerates those
//! extensions outright, one representative per value-set shape.

use creatures_core::fixtures::{
    exists_deciding_extension, ladder_condition, name_from, random_name,
};
use creatures_core::{
    and_value, basic_step, decision_status, leq, leq_n, pure_decide, DecideMode, DecisionStatus,
    Entry, FiniteCondition, KernelError, StepFlag, DEFAULT_SEARCH_BUDGET,
};

fn step_ladder() -> FiniteCondition {
    ladder_condition(&["v0"], &[2, 3, 3], &[16, 112])
}

fn driver_ladder() -> FiniteCondition {
    ladder_condition(&["v0"], &[2, 3, 2, 2], &[16, 112, 330])
}

#[test]
fn steps_split_into_deciders_and_certified_halves() {
    let p = step_ladder();
    let mut decided = 0;
    let mut halved = 0;
    for (rate, seeds) in [(30, 0..60), (80, 60..120)] {
        for seed in seeds {
            let tau = random_name(p.domains(), rate, seed);
            let (q, flag) =
                basic_step(&p, 5, &tau, DecideMode::Essential, DEFAULT_SEARCH_BUDGET).unwrap();
            assert!(leq(&q, &p).unwrap());
            match flag {
                StepFlag::Dec => {
                    assert_ne!(decision_status(&q, &tau).unwrap(), DecisionStatus::Undecided);
                    decided += 1;
                }
                StepFlag::Half => {
                    assert!(!exists_deciding_extension(&q, &tau));
                    halved += 1;
                }
            }
        }
    }
    assert!(decided > 0, "no step ever resolved a name");
    assert!(halved > 0, "no step ever certified a truncation");
}

#[test]
fn value_steps_pin_values_or_report_why_not() {
    // Pinning values can need more classes than the trunk level is big for:
    // three stages pinning three different values color the width-3 level
    // injectively, and the only monochromatic parts left are worthless
    // singletons. That is a reported outcome, not a panic.
    let p = step_ladder();
    let mut pinned = 0;
    for seed in 0..40 {
        let tau = random_name(p.domains(), 20, seed);
        match basic_step(&p, 5, &tau, DecideMode::Value, DEFAULT_SEARCH_BUDGET) {
            Ok((q, StepFlag::Dec)) => {
                assert!(creatures_core::constant_on(&q, &tau).unwrap().is_some());
                pinned += 1;
            }
            Ok((_, StepFlag::Half)) => {}
            Err(KernelError::WitnessUnavailable(_)) => {}
            Err(e) => panic!("seed {seed}: unexpected failure {e}"),
        }
    }
    assert!(pinned > 0, "no step ever pinned a value");
}

#[test]
fn driver_outcomes_are_exactly_two() {
    let p = driver_ladder();
    let mut resolved = 0;
    let mut truncated = 0;
    for seed in 0..200 {
        let tau = random_name(p.domains(), 20, seed);
        match pure_decide(&p, 0, &tau, DecideMode::Essential, DEFAULT_SEARCH_BUDGET) {
            Ok(out) => {
                assert!(leq_n(&out.condition, &p, 0).unwrap());
                assert_ne!(out.status, DecisionStatus::Undecided);
                assert!(exists_deciding_extension(&out.condition, &tau));
                resolved += 1;
            }
            Err(KernelError::HorizonExhausted(_)) => truncated += 1,
            Err(e) => panic!("seed {seed}: unexpected failure {e}"),
        }
    }
    assert_eq!(resolved + truncated, 200);
    assert!(resolved > 0, "no run resolved its name");
    assert!(truncated > 0, "no run hit the horizon");
}

#[test]
fn resolution_level_survives_any_extension() {
    let p = step_ladder();
    for seed in 0..20 {
        let tau = random_name(p.domains(), 0, seed);
        let DecisionStatus::DecidedBelow(n) = decision_status(&p, &tau).unwrap() else {
            panic!("a fully resolved name is always decided at full depth");
        };
        for s in p.values_below(n).unwrap() {
            let q = and_value(&p, &s).unwrap();
            match decision_status(&q, &tau).unwrap() {
                DecisionStatus::DecidedBelow(m) => assert!(m <= n),
                DecisionStatus::Undecided => panic!("trunk extension lost the resolution"),
            }
        }
    }
    // Shrinking upper levels cannot raise the resolution level either.
    let tau = name_from(p.domains(), |b| Some(u64::from(b[1] == "v0")));
    let DecisionStatus::DecidedBelow(n) = decision_status(&p, &tau).unwrap() else {
        panic!("resolved name");
    };
    let Entry::Creature(c2) = p.entry(2) else {
        panic!("creature level");
    };
    for d in c2.successors(1 << 20).unwrap() {
        if !d.norm().unwrap().is_positive().unwrap() {
            continue;
        }
        let q = FiniteCondition::new(
            vec![
                p.entry(0).clone(),
                p.entry(1).clone(),
                Entry::Creature(d),
            ],
            p.domains().to_vec(),
        )
        .unwrap();
        match decision_status(&q, &tau).unwrap() {
            DecisionStatus::DecidedBelow(m) => assert!(m <= n),
            DecisionStatus::Undecided => panic!("upper shrink lost the resolution"),
        }
    }
}
