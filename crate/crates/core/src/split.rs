//! Split creatures over binary strings.
//!
//! A split creature is a pair `(c, k)` where `c` is a nonempty set of
//! width-`J` binary strings and `k` is a natural with `k <= prenorm(c) - 1`.
//! Its norm is `r * log2(prenorm(c) - k)`. Successors shrink the value set and
//! raise `k`; halving raises `k` halfway to the top; bigness extracts a full
//! color class along the prenorm witness blocks; the decisive witness splits
//! the creature into a small part `d-` (one string per pattern on the early
//! coordinates) and a big part `d+` (a full class of the projection to the
//! first `j1` coordinates).
//!
//! Strings are bitmasks with coordinate 0 as the most significant bit, so
//! numeric order coincides with lexicographic order.

use crate::error::{KernelError, Result};
use crate::norm::NormValue;
use crate::rank::{pigeonhole_index, project, PrenormInfo, RankCtx, RankParams, RankWitness};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCreature {
    width: u32,
    val: Vec<u32>,
    k: u64,
    params: RankParams,
    prenorm: PrenormInfo,
}

/// The two-part decisive witness of a split creature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDecisive {
    pub j1: u64,
    /// `K = 2^j1`.
    pub k_cap: u64,
    /// The projection value selecting `d_plus`; never 0, because the class
    /// projecting to 0 is constant on the first witness block.
    pub plus_color: u64,
    pub d_minus: SplitCreature,
    pub d_plus: SplitCreature,
}

impl SplitCreature {
    pub fn new(
        width: u32,
        mut val: Vec<u32>,
        k: u64,
        params: RankParams,
        bit_budget: u64,
    ) -> Result<SplitCreature> {
        val.sort_unstable();
        val.dedup();
        let ctx = RankCtx::new(params.clone(), bit_budget);
        let prenorm = ctx.prenorm(&val, width)?;
        Self::from_parts(width, val, k, params, prenorm)
    }

    fn from_parts(
        width: u32,
        val: Vec<u32>,
        k: u64,
        params: RankParams,
        prenorm: PrenormInfo,
    ) -> Result<SplitCreature> {
        if prenorm.value < k + 1 {
            return Err(KernelError::Precondition(format!(
                "k = {k} exceeds prenorm - 1 = {}",
                prenorm.value as i64 - 1
            )));
        }
        Ok(SplitCreature {
            width,
            val,
            k,
            params,
            prenorm,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn val(&self) -> &[u32] {
        &self.val
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn params(&self) -> &RankParams {
        &self.params
    }

    pub fn prenorm_value(&self) -> u64 {
        self.prenorm.value
    }

    pub fn witness(&self) -> Option<&RankWitness> {
        self.prenorm.witness.as_ref()
    }

    /// `prenorm(c) - k`, the argument of the norm logarithm.
    pub fn norm_arg(&self) -> u64 {
        self.prenorm.value - self.k
    }

    pub fn norm(&self) -> Result<NormValue> {
        NormValue::exact_log(self.norm_arg().into(), self.params.r)
    }

    pub fn render_string(&self, b: u32) -> String {
        format!("{b:0w$b}", w = self.width as usize)
    }

    /// Is `d` a successor of `self` (smaller value set, larger k)?
    pub fn in_sigma(&self, d: &SplitCreature) -> bool {
        self.width == d.width
            && self.params == d.params
            && d.k >= self.k
            && is_subset(&d.val, &self.val)
    }

    /// Raise `k` halfway: `(c, k + floor(x/2))` where `x = prenorm - k`.
    /// Requires norm > 1. The norm drops by at most `r`.
    pub fn halve(&self) -> Result<SplitCreature> {
        if !self.norm()?.gt_nat(1)? {
            return Err(KernelError::NormTooSmall(
                "halving requires norm > 1".into(),
            ));
        }
        let x = self.norm_arg();
        let out = SplitCreature {
            k: self.k + x / 2,
            ..self.clone()
        };
        // 2 * ceil(x/2) >= x guarantees the drop stays within r.
        debug_assert!(2 * out.norm_arg() >= x);
        Ok(out)
    }

    /// Undo a halving on a successor: given `d` in Σ(halve(c)) with positive
    /// norm, `(val(d), c.k)` is a successor of `c` with norm >= nor(c) - r.
    pub fn unhalve(&self, d: &SplitCreature) -> Result<SplitCreature> {
        let half = self.halve()?;
        if !half.in_sigma(d) {
            return Err(KernelError::Precondition(
                "unhalve requires a successor of the halved creature".into(),
            ));
        }
        if !d.norm()?.is_positive()? {
            return Err(KernelError::NormTooSmall(
                "unhalve requires a successor of positive norm".into(),
            ));
        }
        let out = SplitCreature::from_parts(
            self.width,
            d.val.clone(),
            self.k,
            self.params.clone(),
            d.prenorm.clone(),
        )?;
        // prenorm(d) >= half.k + 1 = c.k + floor(x/2) + 1, so
        // 2 * (prenorm(d) - c.k) >= 2*(floor(x/2) + 1) >= x.
        debug_assert!(2 * out.norm_arg() >= self.norm_arg());
        Ok(out)
    }

    /// Extract a full color class along the prenorm witness blocks.
    /// `colors[i]` is the color of `val[i]`; the number of colors must not
    /// exceed the witness block count. Requires norm > 1. The result keeps
    /// `k` and loses at most `r` of norm.
    pub fn big_extract(&self, colors: &[u64]) -> Result<(SplitCreature, u64)> {
        if colors.len() != self.val.len() {
            return Err(KernelError::Precondition(format!(
                "{} colors for {} strings",
                colors.len(),
                self.val.len()
            )));
        }
        if !self.norm()?.gt_nat(1)? {
            return Err(KernelError::NormTooSmall(
                "bigness extraction requires norm > 1".into(),
            ));
        }
        let w = self.prenorm.witness.as_ref().ok_or_else(|| {
            KernelError::WitnessUnavailable("no prenorm witness despite norm > 1".into())
        })?;
        let num_colors = colors.iter().copied().max().unwrap_or(0) + 1;
        if num_colors > w.m_count {
            return Err(KernelError::Precondition(format!(
                "{num_colors} colors exceed the witness block count {}",
                w.m_count
            )));
        }
        let mut pieces: Vec<Vec<u32>> = vec![Vec::new(); w.m_count as usize];
        for (&b, &f) in self.val.iter().zip(colors) {
            pieces[f as usize].push(b);
        }
        let idx = pigeonhole_index(&self.val, w.u_mask, &pieces, &w.blocks, self.width)?;
        debug_assert!((idx as u64) < num_colors, "an empty padding piece won");
        let out = SplitCreature::new(
            self.width,
            pieces[idx].clone(),
            self.k,
            self.params.clone(),
            crate::extnat::DEFAULT_BIT_BUDGET,
        )?;
        // The class is full on a block of rank >= prenorm - 1.
        debug_assert!(2 * out.norm_arg() >= self.norm_arg());
        Ok((out, idx as u64))
    }

    /// The decisive witness: `None` exactly when `2^j1` exceeds the witness
    /// block count. Requires norm > 1.
    pub fn decisive_witness(&self) -> Result<Option<SplitDecisive>> {
        if !self.norm()?.gt_nat(1)? {
            return Err(KernelError::NormTooSmall(
                "decisive witness requires norm > 1".into(),
            ));
        }
        let w = self
            .prenorm
            .witness
            .clone()
            .ok_or_else(|| {
                KernelError::WitnessUnavailable("no prenorm witness despite norm > 1".into())
            })?;
        if w.j1 >= 32 {
            return Err(KernelError::BudgetExceeded(format!(
                "first cut {} too deep for a projection table",
                w.j1
            )));
        }
        let k_cap = 1u64 << w.j1;
        if k_cap > w.m_count {
            return Ok(None);
        }

        // d-: the lexicographically least string for each pattern on the
        // early coordinates u ∩ [0, j1). The value set is sorted, so the
        // first string per pattern is the least.
        let u_minus = w.u_mask & ((1u64 << w.j1) - 1);
        let pat_count = 1u32 << u_minus.count_ones();
        let mut minus: Vec<u32> = Vec::with_capacity(pat_count as usize);
        for pat in 0..pat_count {
            let b = self
                .val
                .iter()
                .copied()
                .find(|&b| project(b, u_minus, self.width) == pat)
                .ok_or_else(|| {
                    KernelError::Precondition("value set not full on the early block".into())
                })?;
            minus.push(b);
        }
        let d_minus = SplitCreature::new(
            self.width,
            minus,
            self.k,
            self.params.clone(),
            crate::extnat::DEFAULT_BIT_BUDGET,
        )?;
        debug_assert!(d_minus.val.len() as u64 <= k_cap);
        debug_assert!(d_minus.prenorm.value + 1 >= self.prenorm.value);

        // d+: a full class of the projection to the first j1 coordinates,
        // found along the first 2^j1 witness blocks.
        let mut pieces: Vec<Vec<u32>> = vec![Vec::new(); k_cap as usize];
        for &b in &self.val {
            let f = b >> (self.width - w.j1 as u32);
            pieces[f as usize].push(b);
        }
        let blocks = &w.blocks[..k_cap as usize];
        let idx = pigeonhole_index(&self.val, w.u_mask, &pieces, blocks, self.width)?;
        if idx == 0 {
            return Err(KernelError::Precondition(
                "the constant projection class cannot be full on the first block".into(),
            ));
        }
        let d_plus = SplitCreature::new(
            self.width,
            pieces[idx].clone(),
            self.k,
            self.params.clone(),
            crate::extnat::DEFAULT_BIT_BUDGET,
        )?;
        debug_assert!(d_plus.prenorm.value + 1 >= self.prenorm.value);

        Ok(Some(SplitDecisive {
            j1: w.j1,
            k_cap,
            plus_color: idx as u64,
            d_minus,
            d_plus,
        }))
    }

    /// Every successor `(d, k')` with `d ⊆ val` nonempty and
    /// `self.k <= k' <= prenorm(d) - 1`, in deterministic order.
    pub fn enumerate_sigma(&self, max_subsets: u64) -> Result<Vec<SplitCreature>> {
        let n = self.val.len();
        if n >= 63 || 1u64 << n > max_subsets {
            return Err(KernelError::SearchSpaceExceeded(
                1u64.checked_shl(n as u32).unwrap_or(u64::MAX),
            ));
        }
        let ctx = RankCtx::new(self.params.clone(), crate::extnat::DEFAULT_BIT_BUDGET);
        let mut out = Vec::new();
        for mask in 1u64..1 << n {
            let sub: Vec<u32> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| self.val[i])
                .collect();
            let pn = ctx.prenorm(&sub, self.width)?;
            if pn.value < self.k + 1 {
                continue;
            }
            for k in self.k..=pn.value - 1 {
                out.push(SplitCreature::from_parts(
                    self.width,
                    sub.clone(),
                    k,
                    self.params.clone(),
                    pn.clone(),
                )?);
            }
        }
        Ok(out)
    }
}

fn is_subset(sub: &[u32], sup: &[u32]) -> bool {
    let mut it = sup.iter();
    'outer: for &x in sub {
        for &y in it.by_ref() {
            match y.cmp(&x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}
