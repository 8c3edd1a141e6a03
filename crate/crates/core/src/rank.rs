//! Interval rank of finite sets of naturals, with greedy witnesses.
//!
//! The rank `ns` of a finite set `u` is defined recursively: the empty set has
//! rank 0, any nonempty set has rank at least 1, and `ns(u) >= k+1` holds when
//! there are cuts `0 = j_0 < j_1 < ... < j_M` such that every block
//! `u ∩ [j_i, j_{i+1})` is nonempty of rank at least `k`, where the number of
//! blocks `M` must reach `max(B, flarge(j_1 + n))`. Blocks need not cover `u`.
//!
//! The greedy evaluation scans every admissible first cut `j_1` and packs the
//! remaining blocks minimally; packing minimally maximizes the block count for
//! a fixed `j_1`, and scanning all `j_1` keeps the search complete for
//! non-monotone schedules, where a deeper first cut can face a much smaller
//! threshold.
//!
//! On top of the rank sit: `minimal_block` (least interval end reaching a given
//! rank), `choose_j` (least `J` whose initial interval reaches the norm target),
//! `prenorm` (best rank over fully-projecting coordinate sets of a set of
//! binary strings), and the pigeonhole index of a full piece.

use crate::error::{KernelError, Result};
use crate::extnat::{ext_le, ExtNat};
use crate::schedule::Flarge;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use std::cell::RefCell;
use std::collections::HashMap;

/// Sets handled as bitmasks live inside `[0, 64)`.
pub const MAX_SET_BOUND: u64 = 64;

/// Coordinate width cap for string sets.
pub const MAX_WIDTH: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RankParams {
    /// Bigness floor `B`.
    pub bigness: u64,
    /// Level `n`, shifting the schedule argument.
    pub level: u64,
    /// Norm scale `r`.
    #[serde(with = "crate::norm::ratio_u64_string")]
    pub r: Ratio<u64>,
    pub schedule: Flarge,
}

impl RankParams {
    pub fn new(bigness: u64, level: u64, r: Ratio<u64>, schedule: Flarge) -> Result<RankParams> {
        if r.numer() == &0 {
            return Err(KernelError::Schema("norm scale r must be positive".into()));
        }
        Ok(RankParams {
            bigness,
            level,
            r,
            schedule,
        })
    }
}

pub struct RankCtx {
    pub params: RankParams,
    pub bit_budget: u64,
    memo: RefCell<HashMap<u64, u64>>,
}

/// A witness that a coordinate set reaches its rank: the first cut, the full
/// cut sequence, and the blocks (each of rank >= rank-1).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RankWitness {
    pub u_mask: u64,
    pub j1: u64,
    pub cuts: Vec<u64>,
    pub blocks: Vec<u64>,
    pub m_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PrenormInfo {
    pub value: u64,
    /// Present when the value is at least 2.
    pub witness: Option<RankWitness>,
}

fn mask_below(hi: u64) -> u64 {
    if hi >= 64 {
        u64::MAX
    } else {
        (1u64 << hi) - 1
    }
}

fn max_element(u: u64) -> u64 {
    63 - u.leading_zeros() as u64
}

impl RankCtx {
    pub fn new(params: RankParams, bit_budget: u64) -> RankCtx {
        RankCtx {
            params,
            bit_budget,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Exact rank of the set encoded by `u`.
    pub fn ns(&self, u: u64) -> Result<u64> {
        if u == 0 {
            return Ok(0);
        }
        if let Some(&v) = self.memo.borrow().get(&u) {
            return Ok(v);
        }
        let mut k = 1;
        while self.reaches(u, k + 1)? {
            k += 1;
        }
        self.memo.borrow_mut().insert(u, k);
        Ok(k)
    }

    /// Does `u` admit a cut system witnessing rank >= kk (kk >= 2)?
    fn reaches(&self, u: u64, kk: u64) -> Result<bool> {
        Ok(self.best_witness(u, kk)?.is_some())
    }

    /// Best cut system for rank `kk >= 2` on `u`: maximal block count,
    /// then minimal first cut. `None` when the rank is not reached.
    fn best_witness(&self, u: u64, kk: u64) -> Result<Option<RankWitness>> {
        debug_assert!(kk >= 2);
        if u == 0 {
            return Ok(None);
        }
        let max_el = max_element(u);
        let mut best: Option<RankWitness> = None;
        for j1 in 1..=max_el {
            let block0 = u & mask_below(j1);
            if block0 == 0 || u >> j1 == 0 {
                continue;
            }
            if self.ns(block0)? < kk - 1 {
                continue;
            }
            let mut cuts = vec![0, j1];
            let mut blocks = vec![block0];
            let mut cur = j1;
            loop {
                if cur >= 64 || u >> cur == 0 {
                    break;
                }
                let mut found = None;
                for j2 in cur + 1..=max_el + 1 {
                    let blk = u & mask_below(j2) & !mask_below(cur);
                    if blk == 0 {
                        continue;
                    }
                    if self.ns(blk)? >= kk - 1 {
                        found = Some((j2, blk));
                        break;
                    }
                }
                match found {
                    Some((j2, blk)) => {
                        cuts.push(j2);
                        blocks.push(blk);
                        cur = j2;
                    }
                    None => break,
                }
            }
            let m_count = blocks.len() as u64;
            if m_count < self.params.bigness {
                continue;
            }
            if !self.threshold_met(j1, m_count)? {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => m_count > b.m_count,
            };
            if better {
                best = Some(RankWitness {
                    u_mask: u,
                    j1,
                    cuts,
                    blocks,
                    m_count,
                });
            }
        }
        Ok(best)
    }

    /// `m_count >= flarge(j1 + n)`, decided exactly or via a certified bound.
    fn threshold_met(&self, j1: u64, m_count: u64) -> Result<bool> {
        let arg = BigUint::from(j1 + self.params.level);
        if let Some(v) = self.params.schedule.eval(&arg, 64) {
            return Ok(v <= BigUint::from(m_count));
        }
        let fl = self.params.schedule.value_big(&arg);
        ext_le(&fl, &ExtNat::exact_u64(m_count), self.bit_budget)
    }

    /// Least `b > a_start` such that the interval `[a_start, b)` has rank >= k.
    pub fn minimal_block(&self, a_start: u64, k: u64) -> Result<ExtNat> {
        if k == 0 {
            return Ok(ExtNat::exact_u64(a_start));
        }
        // Direct search while the interval fits in a bitmask.
        for b in a_start + 1..=MAX_SET_BOUND {
            let u = mask_below(b) & !mask_below(a_start);
            if self.ns(u)? >= k {
                return Ok(ExtNat::exact_u64(b));
            }
        }
        if !self.params.schedule.is_monotone() {
            return Err(KernelError::BudgetExceeded(format!(
                "minimal block for rank {k} from {a_start} exceeds the direct search range \
                 and the schedule {} is not monotone",
                self.params.schedule
            )));
        }
        // Under a monotone schedule the greedy witness on an interval always
        // takes the least admissible cut, so the minimal end is the block
        // recursion value; evaluate it exactly within budget.
        let bb = ExtNat::block(
            self.params.level,
            ExtNat::exact_u64(self.params.bigness),
            ExtNat::exact_u64(k),
            self.params.schedule.clone(),
        )?;
        // The recursion starts at 0; a_start shifts only by monotone offset,
        // which the direct search above already covers for representable ends.
        if a_start != 0 {
            return Err(KernelError::BudgetExceeded(format!(
                "minimal block for rank {k} from {a_start} exceeds the representable range"
            )));
        }
        match bb.eval(self.bit_budget) {
            Some(v) => Ok(ExtNat::exact(v)),
            None => Ok(bb),
        }
    }

    /// Norm target `ceil(a^(n+1))` with `a = 2^(1/r)`.
    pub fn norm_target(&self) -> Result<u64> {
        let p = *self.params.r.numer();
        let q = (self.params.level + 1)
            .checked_mul(*self.params.r.denom())
            .ok_or_else(|| KernelError::BudgetExceeded("norm target exponent overflow".into()))?;
        if q > 4096 {
            return Err(KernelError::BudgetExceeded(format!(
                "norm target 2^({q}/{p}) too large"
            )));
        }
        let target = if q % p == 0 {
            BigUint::from(1u32) << (q / p)
        } else {
            // floor of the p-th root of 2^q, plus one; 2^(q/p) is irrational here.
            let v = BigUint::from(1u32) << q;
            v.nth_root(u32::try_from(p).map_err(|_| {
                KernelError::BudgetExceeded(format!("norm scale numerator {p} too large"))
            })?) + 1u32
        };
        target
            .to_u64()
            .ok_or_else(|| KernelError::BudgetExceeded("norm target exceeds u64".into()))
    }

    /// Least width `J` such that `[0, J)` reaches the norm target, and `2^J`.
    pub fn choose_j(&self) -> Result<(u64, ExtNat)> {
        let target = self.norm_target()?;
        let end = self.minimal_block(0, target)?;
        let j = end
            .eval(self.bit_budget)
            .and_then(|v| v.to_u64())
            .ok_or_else(|| {
                KernelError::BudgetExceeded(format!(
                    "chosen width {end} does not materialize within budget"
                ))
            })?;
        let psi = ExtNat::pow2(ExtNat::exact_u64(j));
        Ok((j, psi))
    }

    /// Best rank over fully-projecting coordinate sets of `c`, with a witness
    /// when the value is at least 2. Strings are width-`width` bitmasks with
    /// coordinate 0 as the most significant bit.
    pub fn prenorm(&self, c: &[u32], width: u32) -> Result<PrenormInfo> {
        if c.is_empty() {
            return Err(KernelError::Precondition(
                "prenorm requires a nonempty string set".into(),
            ));
        }
        if width > MAX_WIDTH {
            return Err(KernelError::Precondition(format!(
                "width {width} exceeds the cap {MAX_WIDTH}"
            )));
        }
        if let Some(bad) = c.iter().find(|&&b| u64::from(b) >> width != 0) {
            return Err(KernelError::Schema(format!(
                "string {bad:#b} does not fit width {width}"
            )));
        }
        let maximal = maximal_full_sets(c, width);
        let mut value = 0u64;
        let mut ranked: Vec<(u64, u64)> = Vec::new();
        for &u in &maximal {
            let r = self.ns(u)?;
            ranked.push((u, r));
            value = value.max(r);
        }
        let mut witness = None;
        if value >= 2 {
            for &(u, r) in &ranked {
                if r != value {
                    continue;
                }
                if let Some(w) = self.best_witness(u, value)? {
                    let better = match &witness {
                        None => true,
                        Some(prev) => {
                            let prev: &RankWitness = prev;
                            (w.m_count, std::cmp::Reverse(w.j1), std::cmp::Reverse(w.u_mask))
                                > (
                                    prev.m_count,
                                    std::cmp::Reverse(prev.j1),
                                    std::cmp::Reverse(prev.u_mask),
                                )
                        }
                    };
                    if better {
                        witness = Some(w);
                    }
                }
            }
        }
        Ok(PrenormInfo { value, witness })
    }
}

/// Project string `b` onto the coordinate set `u` (compressed, ascending).
pub fn project(b: u32, u_mask: u64, width: u32) -> u32 {
    let mut out = 0u32;
    let mut bit = 0;
    for i in 0..width as u64 {
        if u_mask >> i & 1 == 1 {
            let v = b >> (width as u64 - 1 - i) & 1;
            out |= v << bit;
            bit += 1;
        }
    }
    out
}

/// Does every pattern on `u` appear among the projections of `c`?
pub fn fully_projects(c: &[u32], u_mask: u64, width: u32) -> bool {
    let k = u_mask.count_ones();
    if 1u64.checked_shl(k).map_or(true, |need| need > c.len() as u64) {
        return false;
    }
    let mut seen = vec![false; 1 << k];
    let mut count = 0u64;
    for &b in c {
        let p = project(b, u_mask, width) as usize;
        if !seen[p] {
            seen[p] = true;
            count += 1;
        }
    }
    count == 1u64 << k
}

/// All inclusion-maximal fully-projecting coordinate sets. Fullness is
/// downward closed, so a forward DFS enumerates the family once.
fn maximal_full_sets(c: &[u32], width: u32) -> Vec<u64> {
    let mut full: Vec<u64> = Vec::new();
    let mut stack: Vec<(u64, u32)> = vec![(0, 0)];
    while let Some((u, next)) = stack.pop() {
        full.push(u);
        for i in next..width {
            let ext = u | 1u64 << i;
            if fully_projects(c, ext, width) {
                stack.push((ext, i + 1));
            }
        }
    }
    full.sort_unstable();
    full.dedup();
    let mut maximal: Vec<u64> = Vec::new();
    'outer: for &u in &full {
        for i in 0..width as u64 {
            if u >> i & 1 == 0 && fully_projects(c, u | 1 << i, width) {
                continue 'outer;
            }
        }
        maximal.push(u);
    }
    maximal
}

/// Least `i` such that `pieces[i]` is full on `blocks[i]`.
///
/// Preconditions: `c` is full on `u`, the pieces cover `c`, the blocks are
/// pairwise disjoint subsets of `u`, and the counts agree. Finding no index
/// means a precondition was violated.
pub fn pigeonhole_index(
    c: &[u32],
    u_mask: u64,
    pieces: &[Vec<u32>],
    blocks: &[u64],
    width: u32,
) -> Result<usize> {
    if pieces.len() != blocks.len() {
        return Err(KernelError::Precondition(format!(
            "{} pieces vs {} blocks",
            pieces.len(),
            blocks.len()
        )));
    }
    if !fully_projects(c, u_mask, width) {
        return Err(KernelError::Precondition(
            "the ambient set is not full on u".into(),
        ));
    }
    let mut union: Vec<u32> = pieces.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let mut cs: Vec<u32> = c.to_vec();
    cs.sort_unstable();
    cs.dedup();
    if union != cs {
        return Err(KernelError::Precondition(
            "the pieces do not cover the ambient set exactly".into(),
        ));
    }
    let mut used = 0u64;
    for &b in blocks {
        if b & !u_mask != 0 {
            return Err(KernelError::Precondition(
                "a block leaves the coordinate set u".into(),
            ));
        }
        if b & used != 0 {
            return Err(KernelError::Precondition("blocks overlap".into()));
        }
        used |= b;
    }
    for (i, (piece, &block)) in pieces.iter().zip(blocks).enumerate() {
        if fully_projects(piece, block, width) {
            return Ok(i);
        }
    }
    Err(KernelError::NoWitness(
        "no piece is full on its block; a precondition must have been violated".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(bigness: u64, level: u64, schedule: Flarge) -> RankCtx {
        RankCtx::new(
            RankParams::new(bigness, level, Ratio::new(1, 1), schedule).unwrap(),
            crate::extnat::DEFAULT_BIT_BUDGET,
        )
    }

    fn interval(lo: u64, hi: u64) -> u64 {
        mask_below(hi) & !mask_below(lo)
    }

    #[test]
    fn rank_base_cases() {
        let c = ctx(2, 0, Flarge::Default);
        assert_eq!(c.ns(0).unwrap(), 0);
        assert_eq!(c.ns(1 << 5).unwrap(), 1);
    }

    #[test]
    fn rank_of_initial_interval() {
        let c = ctx(2, 0, Flarge::Default);
        assert_eq!(c.ns(interval(0, 4)).unwrap(), 2);
        let c2 = ctx(2, 0, Flarge::const_of(2).unwrap());
        assert_eq!(c2.ns(interval(0, 4)).unwrap(), 3);
    }

    #[test]
    fn rank_under_spiked_schedule() {
        let spike = Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap();
        let c = ctx(2, 0, spike);
        assert_eq!(c.ns(interval(2, 8)).unwrap(), 3);
    }

    #[test]
    fn minimal_blocks() {
        let c = ctx(2, 0, Flarge::Default);
        assert_eq!(c.minimal_block(0, 1).unwrap(), ExtNat::exact_u64(1));
        assert_eq!(c.minimal_block(0, 2).unwrap(), ExtNat::exact_u64(4));
        let c2 = ctx(2, 0, Flarge::const_of(2).unwrap());
        assert_eq!(c2.minimal_block(2, 2).unwrap(), ExtNat::exact_u64(4));
    }

    #[test]
    fn chosen_widths() {
        let c = ctx(2, 0, Flarge::Default);
        let (j, psi) = c.choose_j().unwrap();
        assert_eq!(j, 4);
        assert_eq!(psi, ExtNat::exact_u64(16));
        let c2 = ctx(2, 0, Flarge::const_of(2).unwrap());
        assert_eq!(c2.choose_j().unwrap().0, 2);
    }

    #[test]
    fn norm_targets() {
        let c = ctx(2, 0, Flarge::Default);
        assert_eq!(c.norm_target().unwrap(), 2);
        let c2 = RankCtx::new(
            RankParams::new(2, 2, Ratio::new(2, 1), Flarge::Default).unwrap(),
            1 << 20,
        );
        // ceil(2^(3/2)) = ceil(2.828...) = 3.
        assert_eq!(c2.norm_target().unwrap(), 3);
    }

    #[test]
    fn prenorm_values() {
        let c = ctx(2, 0, Flarge::Default);
        let full: Vec<u32> = (0..16).collect();
        assert_eq!(c.prenorm(&full, 4).unwrap().value, 2);
        let c2 = ctx(2, 0, Flarge::const_of(2).unwrap());
        let info = c2.prenorm(&full, 4).unwrap();
        assert_eq!(info.value, 3);
        let w = info.witness.unwrap();
        assert_eq!(w.u_mask, 0b1111);
        assert_eq!(w.j1, 2);
        assert_eq!(w.m_count, 2);
        // Strings with coordinate 0 forced to 1 project fully only inside {1,2,3}.
        let half: Vec<u32> = (8..16).collect();
        assert_eq!(c2.prenorm(&half, 4).unwrap().value, 2);
        assert_eq!(c.prenorm(&[0b1010], 4).unwrap().value, 0);
    }

    #[test]
    fn prenorm_rejects_bad_input() {
        let c = ctx(2, 0, Flarge::Default);
        assert!(c.prenorm(&[], 4).is_err());
        assert!(c.prenorm(&[0b10000], 4).is_err());
        assert!(c.prenorm(&[0], 24).is_err());
    }

    #[test]
    fn pigeonhole_picks_least_full_piece() {
        let full: Vec<u32> = (0..16).collect();
        let piece0: Vec<u32> = (0..8).collect();
        let piece1: Vec<u32> = (8..16).collect();
        let i = pigeonhole_index(
            &full,
            0b1111,
            &[piece0, piece1],
            &[0b0011, 0b1100],
            4,
        )
        .unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn pigeonhole_validates_preconditions() {
        let full: Vec<u32> = (0..16).collect();
        let piece0: Vec<u32> = (0..8).collect();
        assert!(pigeonhole_index(&full, 0b1111, &[piece0.clone()], &[0b0011, 0b1100], 4).is_err());
        assert!(pigeonhole_index(&full, 0b1111, &[piece0], &[0b0011], 4).is_err());
    }
}
