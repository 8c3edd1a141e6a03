//! Homogenization of colorings over finite creature products.
//!
//! Given creatures `c_0 .. c_{k-1}` and a total map `F` from their value
//! product into an initial segment of the naturals, homogenization finds
//! successors `d_i` with `F` constant on `val(d_0) x .. x val(d_{k-1})`,
//! paying at most `r` of norm per creature per round. The engine follows the
//! small/large split: the decision threshold `M` of the last creature
//! separates small coordinates (bounded value sets) from large ones
//! (hereditarily big), the large block is homogenized against the trace of
//! `F` over every small assignment at once, and the small block is finished
//! against a frozen large tuple. Each round strictly shrinks the number of
//! coordinates because the last coordinate always takes the kind opposite to
//! the first.
//!
//! `boost` raises the bigness of a single creature by walking its large
//! decisive parts against a tower schedule, `avoid` additionally steers the
//! value set around a finite obstruction set, and `homogenize_product`
//! packages boosting and the product engine behind tower bookkeeping.

use crate::error::{KernelError, Result};
use crate::extnat::{ext_ge, ext_gt, ext_le, ext_lt, ExtNat};
use crate::family::{AnyCreature, DecisiveParts};
use crate::towers::exp_tower;
use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use std::collections::{BTreeMap, BTreeSet};

/// Largest value product enumerated explicitly.
pub const MAX_PRODUCT: u64 = 1 << 20;

/// A product homogenization problem: creatures, a total coloring table on
/// their value product, and the codomain bound `2^(m^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationInstance {
    pub creatures: Vec<AnyCreature>,
    pub table: BTreeMap<Vec<String>, u64>,
    pub m: u64,
    pub t: u64,
    pub r: Ratio<u64>,
}

/// The homogenized product: successors in the original order, the constant
/// color on their product, and the decision thresholds consumed per round.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizeOutcome {
    pub creatures: Vec<AnyCreature>,
    pub constant_value: u64,
    pub m_trace: Vec<u64>,
}

fn big_r(r: &Ratio<u64>) -> Ratio<BigInt> {
    Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Does `v < 2^(m^t)` hold? Only the bit length of `v` matters, so the
/// tower exponent never needs to be built.
fn fits_bound(v: u64, m: u64, t: u64) -> bool {
    let need = u64::from(64 - v.leading_zeros());
    if m == 1 {
        return need <= 1;
    }
    let mut acc: u128 = 1;
    for _ in 0..t {
        acc = acc.saturating_mul(u128::from(m));
        if acc >= u128::from(need) {
            return true;
        }
    }
    acc >= u128::from(need)
}

/// The codomain bound `2^(m^t)` as a magnitude, when the exponent `m^t`
/// itself fits the budget. `None` means "astronomically large".
fn codomain_bound(m: u64, t: u64, bit_budget: u64) -> Option<ExtNat> {
    if m == 1 {
        return Some(ExtNat::exact_u64(2));
    }
    let bits = u64::from(64 - m.leading_zeros());
    if bits.saturating_mul(t) > bit_budget.min(1 << 26) {
        return None;
    }
    let e = BigUint::from(m).pow(u32::try_from(t).ok()?);
    Some(ExtNat::pow2(ExtNat::exact(e)))
}

/// The value product in lexicographic order, capped at `cap` tuples.
fn product_tuples(vals: &[Vec<String>], cap: u64) -> Result<Vec<Vec<String>>> {
    let mut size: u64 = 1;
    for v in vals {
        if v.is_empty() {
            return Err(KernelError::Schema("empty value set in a product".into()));
        }
        size = size
            .checked_mul(v.len() as u64)
            .filter(|&s| s <= cap)
            .ok_or(KernelError::SearchSpaceExceeded(cap))?;
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; vals.len()];
    loop {
        out.push(
            idx.iter()
                .zip(vals)
                .map(|(&i, v)| v[i].clone())
                .collect::<Vec<String>>(),
        );
        let mut pos = vals.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < vals[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn value_lists(creatures: &[AnyCreature]) -> Result<Vec<Vec<String>>> {
    creatures.iter().map(|c| c.val_strings()).collect()
}

fn merge(k: usize, l_idx: &[usize], lt: &[String], s_idx: &[usize], st: &[String]) -> Vec<String> {
    let mut tup = vec![String::new(); k];
    for (j, &i) in l_idx.iter().enumerate() {
        tup[i] = lt[j].clone();
    }
    for (j, &i) in s_idx.iter().enumerate() {
        tup[i] = st[j].clone();
    }
    tup
}

impl HomogenizationInstance {
    /// Validate shapes: at least one creature, `m, t >= 1`, the table defined
    /// on exactly the value product, and every color below `2^(m^t)`.
    pub fn new(
        creatures: Vec<AnyCreature>,
        table: BTreeMap<Vec<String>, u64>,
        m: u64,
        t: u64,
        r: Ratio<u64>,
    ) -> Result<HomogenizationInstance> {
        if creatures.is_empty() {
            return Err(KernelError::Precondition(
                "homogenization needs at least one creature".into(),
            ));
        }
        if m == 0 || t == 0 {
            return Err(KernelError::Precondition(
                "the codomain bound needs m >= 1 and t >= 1".into(),
            ));
        }
        let tuples = product_tuples(&value_lists(&creatures)?, MAX_PRODUCT)?;
        if table.len() != tuples.len() {
            return Err(KernelError::Schema(format!(
                "table has {} entries, the value product has {}",
                table.len(),
                tuples.len()
            )));
        }
        for tup in &tuples {
            if !table.contains_key(tup) {
                return Err(KernelError::Schema(format!(
                    "table misses the product entry ({})",
                    tup.join(", ")
                )));
            }
        }
        for (tup, &v) in &table {
            if !fits_bound(v, m, t) {
                return Err(KernelError::Schema(format!(
                    "color {v} at ({}) is not below 2^({m}^{t})",
                    tup.join(", ")
                )));
            }
        }
        Ok(HomogenizationInstance {
            creatures,
            table,
            m,
            t,
            r,
        })
    }
}

/// Homogenize an instance: returns successors `d_i` of its creatures with
/// the table constant on their value product and `nor(d_i) >= nor(c_i) -
/// k*r`. Both facts are re-checked on the result before it is returned, so
/// inconsistent declared witness data surfaces as an error instead of a
/// wrong answer.
///
/// Requires `nor(c_i) > 1 + r*(k-1)` and, in every round that still holds
/// two or more coordinates, a decisive witness on each creature whose
/// threshold (read off the last coordinate) exceeds the current color bound.
pub fn multi_homogenize(
    inst: &HomogenizationInstance,
    bit_budget: u64,
) -> Result<HomogenizeOutcome> {
    let k = inst.creatures.len();
    let floor = Ratio::from_integer(BigInt::from(1))
        + big_r(&inst.r) * BigInt::from(k as u64 - 1);
    for c in &inst.creatures {
        if !c.norm()?.gt_ratio(&floor)? {
            return Err(KernelError::NormTooSmall(format!(
                "homogenizing {k} creatures needs norm above {floor}, {} has {}",
                c.label(),
                c.norm()?
            )));
        }
    }
    let mut m_trace = Vec::new();
    let out = rec(
        &inst.creatures,
        &inst.table,
        inst.m,
        inst.t,
        &inst.r,
        bit_budget,
        &mut m_trace,
    )?;

    let budget = big_r(&inst.r) * BigInt::from(k as u64);
    for (c, d) in inst.creatures.iter().zip(&out) {
        if !c.in_sigma(d)? {
            return Err(KernelError::Precondition(format!(
                "declared witness data leads outside the successors of {}",
                c.label()
            )));
        }
        if !d.norm()?.ge_minus(&c.norm()?, &budget)? {
            return Err(KernelError::Precondition(format!(
                "declared witness data overdraws the norm budget {budget} on {}",
                c.label()
            )));
        }
    }
    let tuples = product_tuples(&value_lists(&out)?, MAX_PRODUCT)?;
    let constant_value = inst.table[&tuples[0]];
    for tup in &tuples {
        if inst.table[tup] != constant_value {
            return Err(KernelError::Precondition(
                "declared witness data breaks constancy on the homogenized product".into(),
            ));
        }
    }
    Ok(HomogenizeOutcome {
        creatures: out,
        constant_value,
        m_trace,
    })
}

fn rec(
    creatures: &[AnyCreature],
    table: &BTreeMap<Vec<String>, u64>,
    m: u64,
    t: u64,
    r: &Ratio<u64>,
    bit_budget: u64,
    m_trace: &mut Vec<u64>,
) -> Result<Vec<AnyCreature>> {
    let k = creatures.len();
    let mut colors = table.values();
    let first = *colors.next().expect("tables are nonempty");
    if colors.all(|&v| v == first) {
        return Ok(creatures.to_vec());
    }
    if k == 1 {
        let coloring: BTreeMap<String, u64> = table
            .iter()
            .map(|(tup, &v)| (tup[0].clone(), v))
            .collect();
        let (d, _) = creatures[0].extract_big(&coloring, r)?;
        return Ok(vec![d]);
    }

    let witnesses: Vec<DecisiveParts> = creatures
        .iter()
        .map(|c| {
            c.decisive()?.ok_or_else(|| {
                KernelError::WitnessUnavailable(format!(
                    "{} declares no decisive witness",
                    c.label()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let cap_m = witnesses[k - 1].k_cap;
    m_trace.push(cap_m);
    let bound_ok = match codomain_bound(m, t, bit_budget) {
        Some(bound) => ext_gt(&ExtNat::exact_u64(cap_m), &bound, bit_budget)?,
        None => false,
    };
    if !bound_ok {
        return Err(KernelError::Precondition(format!(
            "decision threshold {cap_m} of {} does not exceed the color bound 2^({m}^{t})",
            creatures[k - 1].label()
        )));
    }

    // Small coordinates take their bounded part, large ones the big part;
    // the last coordinate takes the kind opposite to the first, so neither
    // block is empty.
    let mut small = vec![false; k];
    for i in 0..k - 1 {
        small[i] = witnesses[i].k_cap <= cap_m;
    }
    small[k - 1] = !small[0];
    let parts: Vec<AnyCreature> = (0..k)
        .map(|i| {
            if small[i] {
                witnesses[i].d_minus.clone()
            } else {
                witnesses[i].d_plus.clone()
            }
        })
        .collect();
    let s_idx: Vec<usize> = (0..k).filter(|&i| small[i]).collect();
    let l_idx: Vec<usize> = (0..k).filter(|&i| !small[i]).collect();
    let s_parts: Vec<AnyCreature> = s_idx.iter().map(|&i| parts[i].clone()).collect();
    let l_parts: Vec<AnyCreature> = l_idx.iter().map(|&i| parts[i].clone()).collect();
    let y_tuples = product_tuples(&value_lists(&s_parts)?, MAX_PRODUCT)?;
    let l_tuples = product_tuples(&value_lists(&l_parts)?, MAX_PRODUCT)?;

    // One color per large tuple: the trace of the table against every small
    // tuple, interned in first-encounter order.
    let mut intern: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut l_table: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for lt in &l_tuples {
        let sig: Vec<u64> = y_tuples
            .iter()
            .map(|y| table[&merge(k, &l_idx, lt, &s_idx, y)])
            .collect();
        let next = intern.len() as u64;
        let id = *intern.entry(sig).or_insert(next);
        l_table.insert(lt.clone(), id);
    }
    let l_out = rec(
        &l_parts,
        &l_table,
        cap_m,
        s_idx.len() as u64 + 1,
        r,
        bit_budget,
        m_trace,
    )?;

    // Freeze the large block at its least value tuple and finish the small
    // one against the original bound.
    let x0: Vec<String> = l_out
        .iter()
        .map(|d| Ok(d.val_strings()?.swap_remove(0)))
        .collect::<Result<_>>()?;
    let mut s_table: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for y in &y_tuples {
        s_table.insert(y.clone(), table[&merge(k, &l_idx, &x0, &s_idx, y)]);
    }
    let s_out = rec(&s_parts, &s_table, m, t, r, bit_budget, m_trace)?;

    let mut out: Vec<Option<AnyCreature>> = vec![None; k];
    for (j, &i) in l_idx.iter().enumerate() {
        out[i] = Some(l_out[j].clone());
    }
    for (j, &i) in s_idx.iter().enumerate() {
        out[i] = Some(s_out[j].clone());
    }
    Ok(out.into_iter().map(|d| d.expect("blocks partition")).collect())
}

/// Walk the large decisive parts of `c` for `steps` rounds, requiring the
/// decision threshold at round `j` to reach the tower value
/// `exp_tower(base, height, j)`. Drops at most `steps * r` of norm.
pub fn boost(
    c: &AnyCreature,
    base: u64,
    height: u64,
    steps: u64,
    r: &Ratio<u64>,
    bit_budget: u64,
) -> Result<AnyCreature> {
    let floor =
        Ratio::from_integer(BigInt::from(1)) + big_r(r) * BigInt::from(steps);
    if !c.norm()?.gt_ratio(&floor)? {
        return Err(KernelError::NormTooSmall(format!(
            "boosting {steps} rounds needs norm above {floor}, {} has {}",
            c.label(),
            c.norm()?
        )));
    }
    let mut cur = c.clone();
    for j in 0..steps {
        let parts = cur.decisive()?.ok_or_else(|| {
            KernelError::WitnessUnavailable(format!(
                "{} declares no decisive witness",
                cur.label()
            ))
        })?;
        let need = exp_tower(base, height, j)?;
        if !ext_ge(&ExtNat::exact_u64(parts.k_cap), &need, bit_budget)? {
            return Err(KernelError::Precondition(format!(
                "boost step {j}: decision threshold {} is below the tower value {need}",
                parts.k_cap
            )));
        }
        cur = parts.d_plus;
    }
    Ok(cur)
}

/// Boost `c` for `steps` rounds and extract a large part whose values avoid
/// `x` entirely. Requires `x` inside `val(c)` with fewer than
/// `exp_tower(base, height, steps)` members and norm above
/// `1 + (steps+1) * r`; the total norm drop stays within `(steps+1) * r`.
pub fn avoid(
    c: &AnyCreature,
    x: &BTreeSet<String>,
    base: u64,
    height: u64,
    steps: u64,
    r: &Ratio<u64>,
    bit_budget: u64,
) -> Result<AnyCreature> {
    let vals: BTreeSet<String> = c.val_strings()?.into_iter().collect();
    for v in x {
        if !vals.contains(v) {
            return Err(KernelError::Precondition(format!(
                "avoided value {v} is not a value of {}",
                c.label()
            )));
        }
    }
    let limit = exp_tower(base, height, steps)?;
    if !ext_lt(&ExtNat::exact_u64(x.len() as u64), &limit, bit_budget)? {
        return Err(KernelError::Precondition(format!(
            "cannot avoid {} values under the tower bound {limit}",
            x.len()
        )));
    }
    let floor = Ratio::from_integer(BigInt::from(1))
        + big_r(r) * BigInt::from(steps + 1);
    if !c.norm()?.gt_ratio(&floor)? {
        return Err(KernelError::NormTooSmall(format!(
            "avoiding after {steps} boost rounds needs norm above {floor}, {} has {}",
            c.label(),
            c.norm()?
        )));
    }
    let boosted = boost(c, base, height, steps, r, bit_budget)?;
    if x.is_empty() {
        return Ok(boosted);
    }
    // Each avoided value is its own class, class 0 is "not in x". Honest
    // witness data keeps the boosted creature big enough that class 0 wins.
    let coloring: BTreeMap<String, u64> = boosted
        .val_strings()?
        .into_iter()
        .map(|v| {
            let color = x.iter().position(|w| w == &v).map_or(0, |p| p as u64 + 1);
            (v, color)
        })
        .collect();
    let (d, color) = boosted.extract_big(&coloring, r)?;
    if color != 0 {
        let landed = x.iter().nth(color as usize - 1).expect("class indexes x");
        return Err(KernelError::ImpossibleClass(format!(
            "the homogeneous class of {} is the avoided value {landed}",
            c.label()
        )));
    }
    Ok(d)
}

/// Boost every creature `steps` rounds against `base` (tower height = the
/// number of creatures) and homogenize the boosted product. The coloring may
/// use at most `exp_tower(base, k, steps)` distinct colors; the norm drop
/// per creature stays within `(steps + k) * r`.
pub fn homogenize_product(
    creatures: &[AnyCreature],
    table: &BTreeMap<Vec<String>, u64>,
    base: u64,
    steps: u64,
    r: &Ratio<u64>,
    bit_budget: u64,
) -> Result<HomogenizeOutcome> {
    if creatures.is_empty() {
        return Err(KernelError::Precondition(
            "homogenization needs at least one creature".into(),
        ));
    }
    let k = creatures.len() as u64;
    let distinct: BTreeSet<u64> = table.values().copied().collect();
    let limit = exp_tower(base, k, steps)?;
    if !ext_le(
        &ExtNat::exact_u64(distinct.len() as u64),
        &limit,
        bit_budget,
    )? {
        return Err(KernelError::Precondition(format!(
            "the coloring uses {} colors, above the tower bound {limit}",
            distinct.len()
        )));
    }
    let floor = Ratio::from_integer(BigInt::from(1))
        + big_r(r) * BigInt::from(steps + k - 1);
    for c in creatures {
        if !c.norm()?.gt_ratio(&floor)? {
            return Err(KernelError::NormTooSmall(format!(
                "boosted homogenization needs norm above {floor}, {} has {}",
                c.label(),
                c.norm()?
            )));
        }
    }
    // A constant coloring is already homogeneous, no boosting needed.
    if distinct.len() == 1 {
        let tuples = product_tuples(&value_lists(creatures)?, MAX_PRODUCT)?;
        if tuples.iter().all(|tup| table.contains_key(tup)) {
            return Ok(HomogenizeOutcome {
                creatures: creatures.to_vec(),
                constant_value: *distinct.iter().next().expect("one color"),
                m_trace: Vec::new(),
            });
        }
    }
    let boosted: Vec<AnyCreature> = creatures
        .iter()
        .map(|c| boost(c, base, k, steps, r, bit_budget))
        .collect::<Result<_>>()?;
    let (m, t) = if steps >= 1 {
        let tower = exp_tower(base, k, steps - 1)?;
        let m = tower
            .eval(bit_budget)
            .and_then(|v| v.to_u64())
            .ok_or_else(|| {
                KernelError::BudgetExceeded(format!(
                    "the bigness base {tower} does not materialize to a machine word"
                ))
            })?;
        (m, k)
    } else {
        (base.max(1), 1)
    };

    // Dense colors keep the restricted table inside the bound 2^(m^t).
    let mut dense: BTreeMap<u64, u64> = BTreeMap::new();
    let mut back: Vec<u64> = Vec::new();
    let tuples = product_tuples(&value_lists(&boosted)?, MAX_PRODUCT)?;
    let mut sub = BTreeMap::new();
    for tup in tuples {
        let v = *table.get(&tup).ok_or_else(|| {
            KernelError::Schema(format!("table misses the product entry ({})", tup.join(", ")))
        })?;
        let next = back.len() as u64;
        let id = *dense.entry(v).or_insert_with(|| {
            back.push(v);
            next
        });
        sub.insert(tup, id);
    }
    let inst = HomogenizationInstance::new(boosted, sub, m, t, *r)?;
    let mut out = multi_homogenize(&inst, bit_budget)?;
    out.constant_value = back[out.constant_value as usize];

    let budget = big_r(r) * BigInt::from(steps + k);
    for (c, d) in creatures.iter().zip(&out.creatures) {
        if !c.in_sigma(d)? {
            return Err(KernelError::Precondition(format!(
                "declared witness data leads outside the successors of {}",
                c.label()
            )));
        }
        if !d.norm()?.ge_minus(&c.norm()?, &budget)? {
            return Err(KernelError::Precondition(format!(
                "declared witness data overdraws the norm budget {budget} on {}",
                c.label()
            )));
        }
    }
    Ok(out)
}
