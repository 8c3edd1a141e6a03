//! Finite-depth conditions and the norm-respecting decision procedure.
//!
//! A condition is a stack of levels: a trunk of fixed values at the bottom,
//! one creature per level above. A name assigns to every full branch either
//! a value or the marker "unresolved beyond this depth". The basic step
//! walks the trunk-level values piece by piece, searching the successor
//! space above for parts that resolve the name within a norm profile, and
//! halves everything above when no such parts exist; the driver chains
//! basic steps over all trunks below a chosen level.

use crate::error::{KernelError, Result};
use crate::family::AnyCreature;
use crate::norm::NormValue;
use num_bigint::BigInt;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Node cap for the per-piece successor search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1 << 20;
/// Subset cap handed to creature closure enumeration.
const CLOSURE_CAP: u64 = 1 << 20;
/// Largest branch product a name or condition may span.
const MAX_BRANCHES: u64 = 1 << 16;

/// One level of a condition: a fixed trunk value or a creature.
#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Value(String),
    Creature(AnyCreature),
}

/// A condition of finite depth: trunk values below, creatures above, with
/// the ambient per-level value domains and the per-level norm scale
/// `r(i) = 1 / (i * |domain(0)| * ... * |domain(i-1)|)`, `r(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCondition {
    entries: Vec<Entry>,
    domains: Vec<Vec<String>>,
    scales: Vec<Ratio<u64>>,
}

/// `1 / (level * prod_{j < level} sizes[j])`, with level 0 clamped to 1.
pub fn level_scale(sizes: &[usize], level: usize) -> Result<Ratio<u64>> {
    if level == 0 {
        return Ok(Ratio::new(1, 1));
    }
    let mut denom: u64 = level as u64;
    for &s in &sizes[..level] {
        denom = denom.checked_mul(s as u64).ok_or_else(|| {
            KernelError::BudgetExceeded(format!(
                "norm scale denominator at level {level} overflows a machine word"
            ))
        })?;
    }
    Ok(Ratio::new(1, denom))
}

fn product_strings(lists: &[Vec<String>], cap: u64) -> Result<Vec<Vec<String>>> {
    let mut size: u64 = 1;
    for l in lists {
        size = size
            .checked_mul(l.len() as u64)
            .filter(|&s| s <= cap)
            .ok_or(KernelError::SearchSpaceExceeded(cap))?;
    }
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
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
    Ok(out)
}

fn big_scale(r: &Ratio<u64>) -> Ratio<BigInt> {
    Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl FiniteCondition {
    pub fn new(entries: Vec<Entry>, domains: Vec<Vec<String>>) -> Result<FiniteCondition> {
        if entries.is_empty() {
            return Err(KernelError::Precondition(
                "a condition needs at least one level".into(),
            ));
        }
        if entries.len() != domains.len() {
            return Err(KernelError::Schema(format!(
                "{} levels but {} domains",
                entries.len(),
                domains.len()
            )));
        }
        let mut norm_domains = Vec::with_capacity(domains.len());
        for (i, d) in domains.iter().enumerate() {
            let mut d = d.clone();
            d.sort();
            d.dedup();
            if d.is_empty() {
                return Err(KernelError::Schema(format!("domain at level {i} is empty")));
            }
            norm_domains.push(d);
        }
        let mut seen_creature = false;
        for (i, e) in entries.iter().enumerate() {
            match e {
                Entry::Value(v) => {
                    if seen_creature {
                        return Err(KernelError::Schema(format!(
                            "trunk value at level {i} sits above a creature level"
                        )));
                    }
                    if !norm_domains[i].contains(v) {
                        return Err(KernelError::Schema(format!(
                            "trunk value {v} is outside the domain of level {i}"
                        )));
                    }
                }
                Entry::Creature(c) => {
                    seen_creature = true;
                    for v in c.val_strings()? {
                        if !norm_domains[i].contains(&v) {
                            return Err(KernelError::Schema(format!(
                                "creature value {v} is outside the domain of level {i}"
                            )));
                        }
                    }
                    if !c.norm()?.is_positive()? {
                        return Err(KernelError::Precondition(format!(
                            "creature levels need positive norm, level {i} has {}",
                            c.norm()?
                        )));
                    }
                }
            }
        }
        let sizes: Vec<usize> = norm_domains.iter().map(|d| d.len()).collect();
        let scales = (0..entries.len())
            .map(|i| level_scale(&sizes, i))
            .collect::<Result<_>>()?;
        Ok(FiniteCondition {
            entries,
            domains: norm_domains,
            scales,
        })
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    /// Number of leading fixed-value levels.
    pub fn trunklg(&self) -> usize {
        self.entries
            .iter()
            .position(|e| matches!(e, Entry::Creature(_)))
            .unwrap_or(self.entries.len())
    }

    pub fn entry(&self, i: usize) -> &Entry {
        &self.entries[i]
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    /// The norm scale `r(i)` of a level.
    pub fn scale(&self, i: usize) -> &Ratio<u64> {
        &self.scales[i]
    }

    /// Values a level can take: the trunk value alone, or the creature's set.
    pub fn level_values(&self, i: usize) -> Result<Vec<String>> {
        match &self.entries[i] {
            Entry::Value(v) => Ok(vec![v.clone()]),
            Entry::Creature(c) => c.val_strings(),
        }
    }

    /// Norm of a level; trunk values carry norm zero.
    pub fn norm_at(&self, i: usize) -> Result<NormValue> {
        match &self.entries[i] {
            Entry::Value(_) => Ok(NormValue::rational_u64(0, 1)),
            Entry::Creature(c) => c.norm(),
        }
    }

    /// All value tuples for levels below `n`, in lexicographic order.
    pub fn values_below(&self, n: usize) -> Result<Vec<Vec<String>>> {
        let lists: Vec<Vec<String>> = (0..n)
            .map(|i| self.level_values(i))
            .collect::<Result<_>>()?;
        product_strings(&lists, MAX_BRANCHES)
    }

    /// All full branches through the condition.
    pub fn branches(&self) -> Result<Vec<Vec<String>>> {
        self.values_below(self.depth())
    }
}

/// A name at finite depth: a total map from full branches over the declared
/// domains to values, with `None` marking entries the depth cannot resolve.
#[derive(Debug, Clone, PartialEq)]
pub struct NameTable {
    domains: Vec<Vec<String>>,
    map: BTreeMap<Vec<String>, Option<u64>>,
}

impl NameTable {
    pub fn new(
        domains: Vec<Vec<String>>,
        map: BTreeMap<Vec<String>, Option<u64>>,
    ) -> Result<NameTable> {
        let mut norm_domains = Vec::with_capacity(domains.len());
        for (i, d) in domains.iter().enumerate() {
            let mut d = d.clone();
            d.sort();
            d.dedup();
            if d.is_empty() {
                return Err(KernelError::Schema(format!("domain at level {i} is empty")));
            }
            norm_domains.push(d);
        }
        let full = product_strings(&norm_domains, MAX_BRANCHES)?;
        if full.len() != map.len() {
            return Err(KernelError::Schema(format!(
                "name table has {} entries, the domain product has {}",
                map.len(),
                full.len()
            )));
        }
        for b in &full {
            if !map.contains_key(b) {
                return Err(KernelError::Schema(format!(
                    "name table misses the branch ({})",
                    b.join(", ")
                )));
            }
        }
        Ok(NameTable {
            domains: norm_domains,
            map,
        })
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn value(&self, branch: &[String]) -> Result<Option<u64>> {
        self.map.get(branch).copied().ok_or_else(|| {
            KernelError::Schema(format!(
                "branch ({}) is outside the name table",
                branch.join(", ")
            ))
        })
    }

    /// Every level value of `p` must be inside the matching name domain.
    pub fn covers(&self, p: &FiniteCondition) -> Result<()> {
        if self.domains.len() != p.depth() {
            return Err(KernelError::Schema(format!(
                "name has {} levels, condition has {}",
                self.domains.len(),
                p.depth()
            )));
        }
        for i in 0..p.depth() {
            for v in p.level_values(i)? {
                if !self.domains[i].contains(&v) {
                    return Err(KernelError::Schema(format!(
                        "condition value {v} at level {i} is outside the name's domain"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the minimal-level decision scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionStatus {
    DecidedBelow(usize),
    Undecided,
}

impl fmt::Display for DecisionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionStatus::DecidedBelow(n) => write!(f, "decided-below({n})"),
            DecisionStatus::Undecided => write!(f, "undecided"),
        }
    }
}

/// Extend the trunk: levels below `s.len()` become the fixed values `s`,
/// everything above is kept. Values must come from the ambient domains.
pub fn and_value(p: &FiniteCondition, s: &[String]) -> Result<FiniteCondition> {
    if s.len() > p.depth() {
        return Err(KernelError::Schema(format!(
            "trunk extension of length {} on a condition of depth {}",
            s.len(),
            p.depth()
        )));
    }
    let entries: Vec<Entry> = (0..p.depth())
        .map(|i| {
            if i < s.len() {
                Entry::Value(s[i].clone())
            } else {
                p.entry(i).clone()
            }
        })
        .collect();
    FiniteCondition::new(entries, p.domains().to_vec())
}

fn entry_le(q: &Entry, p: &Entry) -> Result<bool> {
    match (q, p) {
        (Entry::Value(v), Entry::Value(w)) => Ok(v == w),
        (Entry::Value(v), Entry::Creature(c)) => Ok(c.val_strings()?.contains(v)),
        (Entry::Creature(d), Entry::Creature(c)) => c.in_sigma(d),
        (Entry::Creature(_), Entry::Value(_)) => Ok(false),
    }
}

/// `q` extends `p`: a longer-or-equal trunk, and every level a successor of
/// `p`'s level (trunk values count as singletons).
pub fn leq(q: &FiniteCondition, p: &FiniteCondition) -> Result<bool> {
    if q.domains() != p.domains() {
        return Err(KernelError::KindMismatch(
            "conditions over different level domains".into(),
        ));
    }
    if q.trunklg() < p.trunklg() {
        return Ok(false);
    }
    for i in 0..p.depth() {
        if !entry_le(q.entry(i), p.entry(i))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The level certifying `leq_n`: the least `h >= strength` with `q` and `p`
/// identical below `h` and every `q` norm from `h` up at least `strength`.
pub fn leq_n_witness(
    q: &FiniteCondition,
    p: &FiniteCondition,
    strength: u64,
) -> Result<Option<usize>> {
    if !leq(q, p)? {
        return Ok(None);
    }
    let nn = q.depth();
    let lo = usize::try_from(strength).unwrap_or(usize::MAX);
    if lo > nn {
        return Ok(None);
    }
    'candidates: for h in lo..=nn {
        for i in 0..h {
            if q.entry(i) != p.entry(i) {
                continue 'candidates;
            }
        }
        for i in h..nn {
            if !q.norm_at(i)?.ge_nat(strength)? {
                continue 'candidates;
            }
        }
        return Ok(Some(h));
    }
    Ok(None)
}

pub fn leq_n(q: &FiniteCondition, p: &FiniteCondition, strength: u64) -> Result<bool> {
    Ok(leq_n_witness(q, p, strength)?.is_some())
}

/// Minimal `n` such that the name is constant and resolved on every branch
/// bundle `p` with a fixed length-`n` prefix; `Undecided` when even the full
/// branches leave unresolved entries.
pub fn decision_status(p: &FiniteCondition, tau: &NameTable) -> Result<DecisionStatus> {
    tau.covers(p)?;
    let branches = p.branches()?;
    let values: Vec<Option<u64>> = branches
        .iter()
        .map(|b| tau.value(b))
        .collect::<Result<_>>()?;
    for n in 0..=p.depth() {
        let mut groups: BTreeMap<&[String], Option<u64>> = BTreeMap::new();
        let mut ok = true;
        for (b, v) in branches.iter().zip(&values) {
            let Some(v) = v else {
                ok = false;
                break;
            };
            match groups.get(&b[..n]) {
                None => {
                    groups.insert(&b[..n], Some(*v));
                }
                Some(Some(w)) if w == v => {}
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(DecisionStatus::DecidedBelow(n));
        }
    }
    Ok(DecisionStatus::Undecided)
}

/// The name's single value across all branches of `p`, when there is one.
pub fn constant_on(p: &FiniteCondition, tau: &NameTable) -> Result<Option<u64>> {
    let mut seen: Option<u64> = None;
    for b in p.branches()? {
        match tau.value(&b)? {
            None => return Ok(None),
            Some(v) => match seen {
                None => seen = Some(v),
                Some(w) if w == v => {}
                Some(_) => return Ok(None),
            },
        }
    }
    Ok(seen)
}

/// What the per-piece search is after: any fully resolved extension, or one
/// pinning the name to a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecideMode {
    Essential,
    Value,
}

/// Constant class of the homogenized trunk level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepFlag {
    Dec,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TauSummary {
    HasBot,
    Constant(u64),
    Mixed,
}

struct StepSearch<'a> {
    tau: &'a NameTable,
    budget: u64,
    cap: u64,
    memo: HashMap<(String, Vec<String>), TauSummary>,
}

impl<'a> StepSearch<'a> {
    fn summary(
        &mut self,
        prefix: &[String],
        stage: &str,
        parts: &[AnyCreature],
    ) -> Result<TauSummary> {
        let key = (
            stage.to_string(),
            parts.iter().map(|d| d.label()).collect::<Vec<_>>(),
        );
        if let Some(s) = self.memo.get(&key) {
            return Ok(*s);
        }
        let lists: Vec<Vec<String>> = parts
            .iter()
            .map(|d| d.val_strings())
            .collect::<Result<_>>()?;
        let tuples = product_strings(&lists, MAX_BRANCHES)?;
        let mut seen: Option<u64> = None;
        let mut mixed = false;
        let mut summary = TauSummary::Mixed;
        let mut branch: Vec<String> = prefix.to_vec();
        branch.push(stage.to_string());
        let base = branch.len();
        'tuples: for tup in tuples {
            branch.truncate(base);
            branch.extend(tup);
            match self.tau.value(&branch)? {
                None => {
                    summary = TauSummary::HasBot;
                    break 'tuples;
                }
                Some(v) => match seen {
                    None => seen = Some(v),
                    Some(w) if w == v => {}
                    Some(_) => mixed = true,
                },
            }
        }
        if summary != TauSummary::HasBot {
            summary = if mixed {
                TauSummary::Mixed
            } else {
                TauSummary::Constant(seen.expect("nonempty branch product"))
            };
        }
        self.memo.insert(key, summary);
        Ok(summary)
    }

    fn dfs(
        &mut self,
        lists: &[Vec<AnyCreature>],
        idx: usize,
        chosen: &mut Vec<AnyCreature>,
        prefix: &[String],
        stage: &str,
        mode: DecideMode,
    ) -> Result<Option<(Vec<AnyCreature>, Option<u64>)>> {
        if idx == lists.len() {
            if self.budget == 0 {
                return Err(KernelError::SearchSpaceExceeded(self.cap));
            }
            self.budget -= 1;
            let summary = self.summary(prefix, stage, chosen)?;
            return Ok(match (mode, summary) {
                (DecideMode::Essential, TauSummary::Constant(v)) => {
                    Some((chosen.clone(), Some(v)))
                }
                (DecideMode::Essential, TauSummary::Mixed) => Some((chosen.clone(), None)),
                (DecideMode::Value, TauSummary::Constant(v)) => Some((chosen.clone(), Some(v))),
                _ => None,
            });
        }
        for d in &lists[idx] {
            chosen.push(d.clone());
            let found = self.dfs(lists, idx + 1, chosen, prefix, stage, mode)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Candidates of one level under a norm floor: the closure of `cur`
/// (including itself), one representative per value set (highest norm,
/// ties to the smaller label), positive norms only.
fn level_candidates(
    cur: &AnyCreature,
    drop_from: Option<&Ratio<u64>>,
    floor: u64,
) -> Result<Vec<AnyCreature>> {
    let mut pool = vec![cur.clone()];
    pool.extend(cur.successors(CLOSURE_CAP)?);
    let cur_norm = cur.norm()?;
    let mut by_val: BTreeMap<Vec<String>, AnyCreature> = BTreeMap::new();
    for d in pool {
        let norm = d.norm()?;
        if !norm.is_positive()? {
            continue;
        }
        let admitted = match drop_from {
            Some(r) => norm.ge_minus(&cur_norm, &big_scale(r))?,
            None => norm.ge_nat(floor)?,
        };
        if !admitted {
            continue;
        }
        let key = d.val_strings()?;
        match by_val.get(&key) {
            None => {
                by_val.insert(key, d);
            }
            Some(held) => {
                let better = match norm.compare(&held.norm()?)? {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Equal => d.label() < held.label(),
                    std::cmp::Ordering::Less => false,
                };
                if better {
                    by_val.insert(key, d);
                }
            }
        }
    }
    let mut out: Vec<AnyCreature> = by_val.into_values().collect();
    out.sort_by(|a, b| {
        let na = a.norm().map(|n| n.approx()).unwrap_or(0.0);
        let nb = b.norm().map(|n| n.approx()).unwrap_or(0.0);
        nb.partial_cmp(&na)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.label().cmp(&b.label()))
    });
    Ok(out)
}

fn upper_creatures(p: &FiniteCondition) -> Vec<AnyCreature> {
    (p.trunklg() + 1..p.depth())
        .map(|i| match p.entry(i) {
            Entry::Creature(c) => c.clone(),
            Entry::Value(_) => unreachable!("levels above the trunk are creatures"),
        })
        .collect()
}

/// One stage outcome, interned into the coloring of the trunk-level values.
type StageKey = Option<Option<u64>>;

/// The basic construction: walk the trunk-level values, per piece search for
/// upper parts that resolve the name while dropping at most `r(m)` per level
/// below some pivot and keeping norms at least `floor` above it; halve every
/// upper level when the search fails. The trunk-level creature is then
/// thinned to a class with a uniform outcome.
pub fn basic_step(
    p: &FiniteCondition,
    floor: u64,
    tau: &NameTable,
    mode: DecideMode,
    search_budget: u64,
) -> Result<(FiniteCondition, StepFlag)> {
    tau.covers(p)?;
    let n0 = p.trunklg();
    let nn = p.depth();
    if n0 >= nn {
        return Err(KernelError::Precondition(
            "the trunk already fills the condition, no level left to decide on".into(),
        ));
    }
    for i in n0..nn {
        if !p.norm_at(i)?.gt_nat(1)? {
            return Err(KernelError::NormTooSmall(format!(
                "the basic step is undefined at norms below 1, level {i} has {}",
                p.norm_at(i)?
            )));
        }
    }
    let stage_values = p.level_values(n0)?;
    let prefix: Vec<String> = (0..n0)
        .map(|i| p.level_values(i).map(|v| v[0].clone()))
        .collect::<Result<_>>()?;
    let mut uppers = upper_creatures(p);
    let mut search = StepSearch {
        tau,
        budget: search_budget,
        cap: search_budget,
        memo: HashMap::new(),
    };
    let mut outcomes: Vec<StageKey> = Vec::with_capacity(stage_values.len());
    for stage in &stage_values {
        let mut found: Option<(Vec<AnyCreature>, Option<u64>)> = None;
        for pivot in (n0 + 1)..=nn {
            let mut lists: Vec<Vec<AnyCreature>> = Vec::with_capacity(uppers.len());
            for (off, cur) in uppers.iter().enumerate() {
                let m = n0 + 1 + off;
                let cands = if m < pivot {
                    level_candidates(cur, Some(p.scale(m)), floor)?
                } else {
                    level_candidates(cur, None, floor)?
                };
                if cands.is_empty() {
                    break;
                }
                lists.push(cands);
            }
            if lists.len() < uppers.len() {
                continue;
            }
            found = search.dfs(&lists, 0, &mut Vec::new(), &prefix, stage, mode)?;
            if found.is_some() {
                break;
            }
        }
        match found {
            Some((parts, decided)) => {
                uppers = parts;
                outcomes.push(Some(match mode {
                    DecideMode::Essential => None,
                    DecideMode::Value => decided,
                }));
            }
            None => {
                for (off, c) in uppers.iter().enumerate() {
                    if !c.norm()?.gt_nat(1)? {
                        return Err(KernelError::NormTooSmall(format!(
                            "halving level {} needs norm above 1, found {}",
                            n0 + 1 + off,
                            c.norm()?
                        )));
                    }
                }
                uppers = uppers.iter().map(AnyCreature::halve).collect::<Result<_>>()?;
                outcomes.push(None);
            }
        }
    }

    let mut palette: BTreeMap<StageKey, u64> = BTreeMap::new();
    let mut back: Vec<StageKey> = Vec::new();
    let colors: BTreeMap<String, u64> = stage_values
        .iter()
        .zip(&outcomes)
        .map(|(v, key)| {
            let next = back.len() as u64;
            let id = *palette.entry(*key).or_insert_with(|| {
                back.push(*key);
                next
            });
            (v.clone(), id)
        })
        .collect();
    let Entry::Creature(base) = p.entry(n0) else {
        unreachable!("the first non-trunk level is a creature");
    };
    let (thinned, winner) = base.extract_big(&colors, p.scale(n0))?;
    let flag = if back[winner as usize].is_some() {
        StepFlag::Dec
    } else {
        StepFlag::Half
    };

    let entries: Vec<Entry> = (0..nn)
        .map(|i| {
            if i < n0 {
                p.entry(i).clone()
            } else if i == n0 {
                Entry::Creature(thinned.clone())
            } else {
                Entry::Creature(uppers[i - n0 - 1].clone())
            }
        })
        .collect();
    let q = FiniteCondition::new(entries, p.domains().to_vec())?;

    // The upper levels owe at most one scale unit per trunk-level value;
    // declared systems can break that, so the budget is re-checked.
    let width = BigInt::from(p.domains()[n0].len());
    for m in (n0 + 1)..nn {
        let allowance = big_scale(p.scale(m)) * width.clone();
        let p_norm = p.norm_at(m)?;
        let q_norm = q.norm_at(m)?;
        let ok = if p_norm.ge_nat(floor)? {
            let target = Ratio::from_integer(BigInt::from(floor)) - &allowance;
            q_norm.ge_ratio(&target)?
        } else {
            q_norm.ge_minus(&p_norm, &allowance)?
        };
        if !ok {
            return Err(KernelError::Precondition(format!(
                "declared witness data overdraws the norm allowance {allowance} at level {m}"
            )));
        }
    }
    Ok((q, flag))
}

/// Result of the chained decision driver.
#[derive(Debug, Clone, PartialEq)]
pub struct PureDecision {
    pub condition: FiniteCondition,
    pub status: DecisionStatus,
    /// Trunk pieces the driver chained a basic step over.
    pub pieces: usize,
    /// Witness level for the norm relation: the output agrees with the
    /// input below it and keeps norms at least `strength` from it on up.
    pub level: usize,
    /// The name's single value on the output, when it is pinned down.
    pub value: Option<u64>,
}

/// Chain basic steps over every trunk below the first level from which all
/// norms exceed `strength + 5`. Any halving flag aborts: at this depth the
/// name cannot be resolved, which is reported rather than absorbed.
pub fn pure_decide(
    p: &FiniteCondition,
    strength: u64,
    tau: &NameTable,
    mode: DecideMode,
    search_budget: u64,
) -> Result<PureDecision> {
    tau.covers(p)?;
    let already = match mode {
        DecideMode::Essential => decision_status(p, tau)? != DecisionStatus::Undecided,
        DecideMode::Value => constant_on(p, tau)?.is_some(),
    };
    if already {
        if let Some(witness) = leq_n_witness(p, p, strength)? {
            return Ok(PureDecision {
                condition: p.clone(),
                status: decision_status(p, tau)?,
                pieces: 0,
                level: witness,
                value: constant_on(p, tau)?,
            });
        }
    }
    let nn = p.depth();
    let n0 = p.trunklg();
    let lo = n0.max(usize::try_from(strength).unwrap_or(usize::MAX));
    let mut base: Option<usize> = None;
    'levels: for n in lo..nn {
        for m in n..nn {
            if !p.norm_at(m)?.gt_nat(strength + 5)? {
                continue 'levels;
            }
        }
        base = Some(n);
        break;
    }
    let Some(n) = base else {
        return Err(KernelError::NormTooSmall(format!(
            "no level from which every norm exceeds {}",
            strength + 5
        )));
    };
    let pieces = p.values_below(n)?;
    let mut cur = p.clone();
    for (k, s) in pieces.iter().enumerate() {
        let glued = and_value(&cur, s)?;
        let (next, flag) = basic_step(&glued, strength + 5, tau, mode, search_budget)?;
        if flag == StepFlag::Half {
            return Err(KernelError::HorizonExhausted(format!(
                "piece {} of {} needs values beyond this depth",
                k + 1,
                pieces.len()
            )));
        }
        cur = next;
    }
    let entries: Vec<Entry> = (0..nn)
        .map(|i| {
            if i < n {
                p.entry(i).clone()
            } else {
                cur.entry(i).clone()
            }
        })
        .collect();
    let q = FiniteCondition::new(entries, p.domains().to_vec())?;
    // The output agrees with the input below `n` by construction; `n` itself
    // must certify the norm relation, so the norms above it are re-checked.
    for m in n..nn {
        if !q.norm_at(m)?.ge_nat(strength)? {
            return Err(KernelError::Precondition(
                "declared witness data broke the norm ladder of the decision driver".into(),
            ));
        }
    }
    if !leq_n(&q, p, strength)? {
        return Err(KernelError::Precondition(
            "declared witness data broke the norm ladder of the decision driver".into(),
        ));
    }
    let status = decision_status(&q, tau)?;
    let decided = match mode {
        DecideMode::Essential => status != DecisionStatus::Undecided,
        DecideMode::Value => constant_on(&q, tau)?.is_some(),
    };
    if !decided {
        return Err(KernelError::Precondition(
            "declared witness data broke the decision postcondition".into(),
        ));
    }
    let value = constant_on(&q, tau)?;
    Ok(PureDecision {
        condition: q,
        status,
        pieces: pieces.len(),
        level: n,
        value,
    })
}
