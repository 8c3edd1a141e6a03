//! Brute-force property checking for creatures.
//!
//! Four properties: `big(B)` (every coloring of the values into `B` colors
//! admits a monochromatic successor within norm drop `r`), hereditary bigness
//! (the same for every positive-norm successor, to a configured depth),
//! halving (the halve exists, drops at most `r`, and every positive-norm
//! successor of the half can be un-halved), and decisiveness (the witness
//! triple's inequalities plus hereditary `2^(K^n)`-bigness of the big part).
//!
//! For split creatures the best monochromatic successor for a color is the
//! full color class with unchanged `k` (prenorm is monotone in the value set
//! and the norm falls in `k`), so the per-coloring search is linear in the
//! number of colors. Class prenorms are memoized across colorings by
//! position mask. A creature of norm at most 1 is vacuous for every
//! property.

use crate::error::{KernelError, Result};
use crate::family::AnyCreature;
use crate::rank::RankCtx;
use crate::split::SplitCreature;
use num_bigint::BigInt;
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

/// Cap on exhaustively enumerated colorings per creature.
pub const MAX_EXHAUSTIVE_COLORINGS: u64 = 1 << 22;
/// Counterexamples kept per report.
pub const MAX_COUNTEREXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "property")]
pub enum Property {
    Big { colors: u64 },
    HereditarilyBig { colors: u64, depth: u64 },
    Halving,
    Decisive { level: u64, depth: u64 },
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Property::Big { colors } => write!(f, "big({colors})"),
            Property::HereditarilyBig { colors, depth } => {
                write!(f, "hereditarily-big({colors}, depth {depth})")
            }
            Property::Halving => write!(f, "halving"),
            Property::Decisive { level, depth } => {
                write!(f, "decisive({level}, depth {depth})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sample { count: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Vacuous,
    /// The decisive search produced no witness; the property is unconfirmed
    /// rather than refuted.
    NoWitness,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VerifyReport {
    pub outcome: Outcome,
    pub checked: u64,
    pub failures: u64,
    pub detail: String,
    pub counterexamples: Vec<String>,
}

impl VerifyReport {
    fn pass(checked: u64, detail: String) -> VerifyReport {
        VerifyReport {
            outcome: Outcome::Pass,
            checked,
            failures: 0,
            detail,
            counterexamples: Vec::new(),
        }
    }

    fn vacuous(detail: &str) -> VerifyReport {
        VerifyReport {
            outcome: Outcome::Vacuous,
            checked: 0,
            failures: 0,
            detail: detail.to_string(),
            counterexamples: Vec::new(),
        }
    }
}

pub fn verify(
    c: &AnyCreature,
    property: &Property,
    r: &Ratio<u64>,
    mode: VerifyMode,
    max_subsets: u64,
) -> Result<VerifyReport> {
    if let AnyCreature::Split(sc) = c {
        if &sc.params().r != r {
            return Err(KernelError::KindMismatch(format!(
                "verification norm scale {r} differs from the creature's {}",
                sc.params().r
            )));
        }
    }
    match property {
        Property::Big { colors } => verify_big(c, *colors, r, mode),
        Property::HereditarilyBig { colors, depth } => {
            verify_hereditary(c, *colors, *depth, r, mode, max_subsets)
        }
        Property::Halving => verify_halving(c, r, mode, max_subsets),
        Property::Decisive { level, depth } => {
            verify_decisive(c, *level, *depth, r, mode, max_subsets)
        }
    }
}

fn big_ratio(r: &Ratio<u64>) -> Ratio<BigInt> {
    Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn not_vacuous(c: &AnyCreature) -> Result<bool> {
    c.norm()?.gt_nat(1)
}

struct BigRun {
    checked: u64,
    failures: u64,
    counterexamples: Vec<String>,
}

fn render_coloring(vals: &[String], coloring: &[u64]) -> String {
    let map: BTreeMap<&str, u64> = vals
        .iter()
        .map(String::as_str)
        .zip(coloring.iter().copied())
        .collect();
    serde_json::to_string(&map).expect("string map serializes")
}

/// Does some color class of `coloring` give a successor of `c` within drop
/// `r`? The class keeps `k`, so the check is `2 * (prenorm(class) - k) >=
/// prenorm(c) - k` with a valid norm argument.
fn split_coloring_holds(
    ctx: &RankCtx,
    memo: &mut HashMap<u64, u64>,
    c: &SplitCreature,
    coloring: &[u64],
    colors: u64,
) -> Result<bool> {
    let x_c = c.norm_arg();
    let k = c.k();
    let mut masks = vec![0u64; colors as usize];
    for (i, &f) in coloring.iter().enumerate() {
        masks[f as usize] |= 1 << i;
    }
    for &mask in masks.iter().filter(|&&m| m != 0) {
        let p = match memo.get(&mask) {
            Some(&p) => p,
            None => {
                let class: Vec<u32> = (0..c.val().len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| c.val()[i])
                    .collect();
                let p = ctx.prenorm(&class, c.width())?.value;
                memo.insert(mask, p);
                p
            }
        };
        if p >= k + 1 && 2 * (p - k) >= x_c {
            return Ok(true);
        }
    }
    Ok(false)
}

fn run_big(
    e: &AnyCreature,
    colors: u64,
    r: &Ratio<u64>,
    mode: VerifyMode,
    label_prefix: &str,
) -> Result<BigRun> {
    if colors == 0 {
        return Err(KernelError::Precondition(
            "bigness needs at least one color".into(),
        ));
    }
    let vals = e.val_strings()?;
    let n = vals.len();
    if n > 63 {
        return Err(KernelError::SearchSpaceExceeded(u64::MAX));
    }
    let mut run = BigRun {
        checked: 0,
        failures: 0,
        counterexamples: Vec::new(),
    };
    let rb = big_ratio(r);
    let ctx_memo = match e {
        AnyCreature::Split(sc) => Some((
            RankCtx::new(sc.params().clone(), crate::extnat::DEFAULT_BIT_BUDGET),
            HashMap::new(),
        )),
        AnyCreature::Tab { .. } => None,
    };
    let (mut ctx_memo, mut coloring) = (ctx_memo, vec![0u64; n]);

    let mut check_one = |coloring: &[u64], run: &mut BigRun| -> Result<()> {
        let holds = match (e, &mut ctx_memo) {
            (AnyCreature::Split(sc), Some((ctx, memo))) => {
                split_coloring_holds(ctx, memo, sc, coloring, colors)?
            }
            (AnyCreature::Tab { sys, id }, _) => {
                let map: BTreeMap<String, u64> = vals
                    .iter()
                    .cloned()
                    .zip(coloring.iter().copied())
                    .collect();
                match sys.extract_big(id, &map, &rb) {
                    Ok(_) => true,
                    Err(KernelError::WitnessUnavailable(_)) => false,
                    Err(other) => return Err(other),
                }
            }
            _ => unreachable!("memo allocated per kind"),
        };
        run.checked += 1;
        if !holds {
            run.failures += 1;
            if run.counterexamples.len() < MAX_COUNTEREXAMPLES {
                run.counterexamples
                    .push(format!("{label_prefix}{}", render_coloring(&vals, coloring)));
            }
        }
        Ok(())
    };

    match mode {
        VerifyMode::Exhaustive => {
            let total = colors
                .checked_pow(n as u32)
                .filter(|&t| t <= MAX_EXHAUSTIVE_COLORINGS)
                .ok_or(KernelError::SearchSpaceExceeded(u64::MAX))?;
            for idx in 0..total {
                let mut rest = idx;
                for slot in coloring.iter_mut() {
                    *slot = rest % colors;
                    rest /= colors;
                }
                check_one(&coloring, &mut run)?;
            }
        }
        VerifyMode::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                for slot in coloring.iter_mut() {
                    *slot = rng.gen_range(0..colors);
                }
                check_one(&coloring, &mut run)?;
            }
        }
    }
    Ok(run)
}

fn verify_big(c: &AnyCreature, colors: u64, r: &Ratio<u64>, mode: VerifyMode) -> Result<VerifyReport> {
    if !not_vacuous(c)? {
        return Ok(VerifyReport::vacuous("norm at most 1"));
    }
    let run = run_big(c, colors, r, mode, "F = ")?;
    if run.failures == 0 {
        Ok(VerifyReport::pass(
            run.checked,
            format!(
                "all {} colorings into {colors} colors admit a monochromatic successor within drop {r}",
                run.checked
            ),
        ))
    } else {
        Ok(VerifyReport {
            outcome: Outcome::Fail,
            checked: run.checked,
            failures: run.failures,
            detail: format!(
                "{} of {} colorings admit no monochromatic successor within drop {r}",
                run.failures, run.checked
            ),
            counterexamples: run.counterexamples,
        })
    }
}

/// `c` plus its successors to the given depth: depth 0 is `c` alone, and on
/// the split side any positive depth closes the relation in one step.
fn candidates_to_depth(
    c: &AnyCreature,
    depth: u64,
    max_subsets: u64,
) -> Result<Vec<AnyCreature>> {
    if depth == 0 {
        return Ok(vec![c.clone()]);
    }
    match c {
        AnyCreature::Split(_) => c.successors(max_subsets),
        AnyCreature::Tab { sys, id } => {
            let mut seen: BTreeSet<String> = BTreeSet::new();
            seen.insert(id.clone());
            let mut frontier = vec![id.clone()];
            for _ in 0..depth {
                let mut next = Vec::new();
                for cur in frontier.drain(..) {
                    for d in &sys.get(&cur)?.succ {
                        if seen.insert(d.clone()) {
                            next.push(d.clone());
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                frontier = next;
            }
            Ok(seen
                .into_iter()
                .map(|id| AnyCreature::Tab {
                    sys: Arc::clone(sys),
                    id,
                })
                .collect())
        }
    }
}

fn verify_hereditary(
    c: &AnyCreature,
    colors: u64,
    depth: u64,
    r: &Ratio<u64>,
    mode: VerifyMode,
    max_subsets: u64,
) -> Result<VerifyReport> {
    if !not_vacuous(c)? {
        return Ok(VerifyReport::vacuous("norm at most 1"));
    }
    let mut checked = 0u64;
    let mut certified = 0u64;
    let mut enumerated = 0u64;
    let mut counterexamples = Vec::new();
    let mut failures = 0u64;
    for e in candidates_to_depth(c, depth, max_subsets)? {
        if !not_vacuous(&e)? {
            continue;
        }
        checked += 1;
        // A split creature whose witness has at least `colors` blocks is big
        // by the pigeonhole argument; no enumeration needed.
        if let AnyCreature::Split(sc) = &e {
            let m = sc.witness().map_or(0, |w| w.m_count);
            if m >= colors {
                certified += 1;
                continue;
            }
        }
        let run = run_big(&e, colors, r, mode, &format!("{}: F = ", e.label()))?;
        enumerated += 1;
        if run.failures > 0 {
            failures += run.failures;
            for cex in run.counterexamples {
                if counterexamples.len() < MAX_COUNTEREXAMPLES {
                    counterexamples.push(cex);
                }
            }
        }
    }
    if failures == 0 {
        Ok(VerifyReport::pass(
            checked,
            format!(
                "{checked} positive-norm successors to depth {depth} are {colors}-big ({certified} by witness block count, {enumerated} by coloring enumeration)"
            ),
        ))
    } else {
        Ok(VerifyReport {
            outcome: Outcome::Fail,
            checked,
            failures,
            detail: format!("{failures} colorings across the successor sweep lack witnesses"),
            counterexamples,
        })
    }
}

fn verify_halving(
    c: &AnyCreature,
    r: &Ratio<u64>,
    mode: VerifyMode,
    max_subsets: u64,
) -> Result<VerifyReport> {
    if !not_vacuous(c)? {
        return Ok(VerifyReport::vacuous("norm at most 1"));
    }
    let rb = big_ratio(r);
    let c_norm = c.norm()?;
    let half = c.halve()?;
    let mut counterexamples = Vec::new();
    let mut failures = 0u64;
    if !half.norm()?.ge_minus(&c_norm, &rb)? {
        failures += 1;
        counterexamples.push(format!(
            "halving drops the norm below {} - {r}",
            c_norm
        ));
    }

    let pool = half.successors(max_subsets)?;
    let targets: Vec<&AnyCreature> = match mode {
        VerifyMode::Exhaustive => pool.iter().collect(),
        VerifyMode::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| &pool[rng.gen_range(0..pool.len())])
                .collect()
        }
    };
    let mut checked = 0u64;
    for d in targets {
        if !d.norm()?.is_positive()? {
            continue;
        }
        checked += 1;
        let fail = |why: String| format!("{}: {why}", d.label());
        match c.unhalve(d, r) {
            Err(e) => {
                failures += 1;
                if counterexamples.len() < MAX_COUNTEREXAMPLES {
                    counterexamples.push(fail(format!("un-halving failed: {e}")));
                }
            }
            Ok(e) => {
                let d_vals: BTreeSet<String> = d.val_strings()?.into_iter().collect();
                let e_vals: BTreeSet<String> = e.val_strings()?.into_iter().collect();
                let mut bad = Vec::new();
                if !e_vals.is_subset(&d_vals) {
                    bad.push("value set escapes the successor");
                }
                if !c.in_sigma(&e)? {
                    bad.push("result is not a successor of the original");
                }
                if !e.norm()?.ge_minus(&c_norm, &rb)? {
                    bad.push("norm drops by more than r");
                }
                if !bad.is_empty() {
                    failures += 1;
                    if counterexamples.len() < MAX_COUNTEREXAMPLES {
                        counterexamples.push(fail(bad.join("; ")));
                    }
                }
            }
        }
    }
    if failures == 0 {
        Ok(VerifyReport::pass(
            checked,
            format!("halving drops at most {r} and all {checked} positive-norm successors of the half un-halve"),
        ))
    } else {
        Ok(VerifyReport {
            outcome: Outcome::Fail,
            checked,
            failures,
            detail: format!("{failures} halving clauses fail"),
            counterexamples,
        })
    }
}

fn verify_decisive(
    c: &AnyCreature,
    level: u64,
    depth: u64,
    r: &Ratio<u64>,
    mode: VerifyMode,
    max_subsets: u64,
) -> Result<VerifyReport> {
    if !not_vacuous(c)? {
        return Ok(VerifyReport::vacuous("norm at most 1"));
    }
    let Some(parts) = c.decisive()? else {
        return Ok(VerifyReport {
            outcome: Outcome::NoWitness,
            checked: 0,
            failures: 0,
            detail: "no decisive witness at these parameters".into(),
            counterexamples: Vec::new(),
        });
    };
    let rb = big_ratio(r);
    let c_norm = c.norm()?;
    let mut counterexamples = Vec::new();
    if parts.d_minus.val_len()? as u64 > parts.k_cap {
        counterexamples.push(format!(
            "small part has {} values, over the cap {}",
            parts.d_minus.val_len()?,
            parts.k_cap
        ));
    }
    for (name, part) in [("small", &parts.d_minus), ("big", &parts.d_plus)] {
        if !c.in_sigma(part)? {
            counterexamples.push(format!("{name} part is not a successor"));
        }
        if !part.norm()?.ge_minus(&c_norm, &rb)? {
            counterexamples.push(format!("{name} part drops more than {r} of norm"));
        }
    }

    let exponent = parts
        .k_cap
        .checked_pow(u32::try_from(level).map_err(|_| {
            KernelError::BudgetExceeded(format!("decisiveness level {level} too large"))
        })?)
        .ok_or_else(|| {
            KernelError::BudgetExceeded(format!(
                "K^n overflows for K = {} at level {level}",
                parts.k_cap
            ))
        })?;
    if exponent >= 63 {
        return Err(KernelError::BudgetExceeded(format!(
            "hereditary bigness bound 2^{exponent} is out of checking range"
        )));
    }
    let b_star = 1u64 << exponent;
    let hereditary = verify_hereditary(&parts.d_plus, b_star, depth, r, mode, max_subsets)?;
    let checked = hereditary.checked;
    if hereditary.outcome == Outcome::Fail {
        for cex in hereditary.counterexamples {
            if counterexamples.len() < MAX_COUNTEREXAMPLES {
                counterexamples.push(format!("big part not hereditarily {b_star}-big: {cex}"));
            }
        }
    }

    if counterexamples.is_empty() {
        Ok(VerifyReport::pass(
            checked + 1,
            format!(
                "witness with K = {} passes; big part hereditarily {b_star}-big over {checked} successors ({})",
                parts.k_cap, hereditary.detail
            ),
        ))
    } else {
        Ok(VerifyReport {
            outcome: Outcome::Fail,
            checked: checked + 1,
            failures: counterexamples.len() as u64,
            detail: "decisive witness checks fail".into(),
            counterexamples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::RankParams;
    use crate::schedule::Flarge;

    fn cube(width: u32, k: u64, schedule: Flarge) -> AnyCreature {
        let params = RankParams::new(2, 0, Ratio::new(1, 1), schedule).unwrap();
        AnyCreature::Split(
            SplitCreature::new(width, (0..1u32 << width).collect(), k, params, 1 << 20).unwrap(),
        )
    }

    #[test]
    fn one_color_always_passes() {
        let c = cube(4, 0, Flarge::const_of(2).unwrap());
        let rep = verify(
            &c,
            &Property::Big { colors: 1 },
            &Ratio::new(1, 1),
            VerifyMode::Exhaustive,
            1 << 20,
        )
        .unwrap();
        assert_eq!(rep.outcome, Outcome::Pass);
        assert_eq!(rep.checked, 1);
    }

    #[test]
    fn low_norm_creatures_are_vacuous() {
        let c = cube(4, 0, Flarge::Default);
        assert_eq!(c.norm().unwrap().to_string(), "1");
        for p in [
            Property::Big { colors: 2 },
            Property::Halving,
            Property::Decisive { level: 0, depth: 1 },
        ] {
            let rep = verify(&c, &p, &Ratio::new(1, 1), VerifyMode::Exhaustive, 1 << 20).unwrap();
            assert_eq!(rep.outcome, Outcome::Vacuous, "{p}");
        }
    }

    #[test]
    fn too_many_colors_fail() {
        // 16 colors on 16 values forces singletons of norm 0 while
        // nor(c) - r = log2(3) - 1 > 0.
        let c = cube(4, 0, Flarge::const_of(2).unwrap());
        let rep = verify(
            &c,
            &Property::Big { colors: 16 },
            &Ratio::new(1, 1),
            VerifyMode::Sample { count: 64, seed: 7 },
            1 << 20,
        )
        .unwrap();
        assert_eq!(rep.outcome, Outcome::Fail);
        assert!(!rep.counterexamples.is_empty());
    }

    #[test]
    fn halving_holds_on_the_full_cube() {
        // Width 3 tops out at norm 1 under this schedule and is vacuous;
        // width 4 reaches log2(3).
        let v = verify(
            &cube(3, 0, Flarge::const_of(2).unwrap()),
            &Property::Halving,
            &Ratio::new(1, 1),
            VerifyMode::Exhaustive,
            1 << 20,
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Vacuous);
        let rep = verify(
            &cube(4, 0, Flarge::const_of(2).unwrap()),
            &Property::Halving,
            &Ratio::new(1, 1),
            VerifyMode::Exhaustive,
            1 << 20,
        )
        .unwrap();
        assert_eq!(rep.outcome, Outcome::Pass, "{:?}", rep.counterexamples);
    }

    #[test]
    fn decisive_reports_no_witness_on_the_flat_schedule() {
        let c = cube(4, 0, Flarge::const_of(2).unwrap());
        let rep = verify(
            &c,
            &Property::Decisive { level: 0, depth: 1 },
            &Ratio::new(1, 1),
            VerifyMode::Exhaustive,
            1 << 20,
        )
        .unwrap();
        assert_eq!(rep.outcome, Outcome::NoWitness);
    }

    #[test]
    fn decisive_passes_under_the_spiked_schedule() {
        let spike = Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap();
        let params = RankParams::new(2, 0, Ratio::new(1, 1), spike).unwrap();
        let c = AnyCreature::Split(
            SplitCreature::new(8, (0..256).collect(), 0, params, 1 << 20).unwrap(),
        );
        // The big part has 64 values, so its own successors cannot be
        // enumerated; depth 0 checks the part itself, certified by its
        // witness block count.
        let rep = verify(
            &c,
            &Property::Decisive { level: 0, depth: 0 },
            &Ratio::new(1, 1),
            VerifyMode::Sample { count: 40, seed: 11 },
            1 << 30,
        )
        .unwrap();
        assert_eq!(rep.outcome, Outcome::Pass, "{:?}", rep.counterexamples);
    }
}
