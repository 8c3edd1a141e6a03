//! Parameter towers.
//!
//! Everything here feeds the large-parameter side of the construction: the
//! `EXP` tower recursion, the level products `phi` with their norm scales `r`,
//! certified upper bounds for the width function `psi`, and generators for the
//! interleaved `(f, g)` parameter families, together with a checker that
//! certifies every required inequality one instance at a time.
//!
//! Soundness of the symbolic `psi` bound: the exact mode computes the least
//! width `J` whose initial interval reaches the norm target and returns `2^J`.
//! Under a monotone schedule that `J` is exactly the block-end recursion
//! value `be(target, 0)`, which is what a `Block` node denotes, so the
//! symbolic mode returns `2^be(target, 0)` = the same bound, represented
//! symbolically and compared only through certified evaluation or dominance.
//! When a caller passes upper bounds for the bigness or the target rank (the
//! generators do, for the `phi` products), monotonicity of `be` in both
//! arguments keeps the result an upper bound of the true width.

use crate::error::{KernelError, Result};
use crate::extnat::{
    bump_strict, checked_mul_nat, ext_compare, ext_ge, ext_gt, rel, ub_max, ub_mul, ub_pow_nat,
    ExtNat, Rel,
};
use crate::rank::{RankCtx, RankParams};
use crate::schedule::Flarge;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Caps on generator shapes; beyond this the symbolic closure is untested.
const MAX_INDICES: u64 = 8;
const MAX_LEVELS: u64 = 16;

/// Exact `x^n` within the exact/scaled fragment.
fn pow_exact(x: &ExtNat, n: u64) -> Result<ExtNat> {
    if n == 0 {
        return Ok(ExtNat::one());
    }
    if n == 1 {
        return Ok(x.clone());
    }
    let exp = u32::try_from(n)
        .map_err(|_| KernelError::BudgetExceeded(format!("power exponent {n} too large")))?;
    match x {
        ExtNat::Exact(v) => {
            if v.bits().saturating_mul(n) > crate::extnat::DEFAULT_BIT_BUDGET {
                return Err(KernelError::BudgetExceeded(format!(
                    "{v}^{n} does not materialize"
                )));
            }
            Ok(ExtNat::exact(v.pow(exp)))
        }
        ExtNat::Scaled { k, e } => {
            if k.bits().saturating_mul(n) > 64 {
                return Err(KernelError::BudgetExceeded(format!(
                    "scaled coefficient {k}^{n} too large for an exact power"
                )));
            }
            let en = checked_mul_nat(&BigUint::from(n), e).ok_or_else(|| {
                KernelError::BudgetExceeded(format!("exponent of {x} is not closed under *{n}"))
            })?;
            Ok(ExtNat::scaled(k.pow(exp), en))
        }
        ExtNat::Block(_) => Err(KernelError::BudgetExceeded(format!(
            "{x}^{n} has no exact representation"
        ))),
    }
}

/// The tower `EXP(b, n, 0) = b`, `EXP(b, n, m+1) = 2^(EXP(b, n, m)^n)`.
/// Exact while materializable, then an exact symbolic power stack.
pub fn exp_tower(b: u64, n: u64, m: u64) -> Result<ExtNat> {
    if b < 1 || n < 1 {
        return Err(KernelError::Precondition(format!(
            "exp_tower requires base >= 1 and degree >= 1, got ({b}, {n})"
        )));
    }
    let mut x = ExtNat::exact_u64(b);
    for _ in 0..m {
        x = ExtNat::pow2(pow_exact(&x, n)?);
    }
    Ok(x)
}

/// Which denominator the norm scale uses: `n * phi(<n)` or `n^2 * phi(<n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RMode {
    Linear,
    Quadratic,
}

impl fmt::Display for RMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RMode::Linear => write!(f, "linear"),
            RMode::Quadratic => write!(f, "quadratic"),
        }
    }
}

/// A norm scale `r = 1 / denom`, with the denominator kept symbolic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reciprocal {
    pub denom: ExtNat,
}

impl Reciprocal {
    pub fn one() -> Reciprocal {
        Reciprocal {
            denom: ExtNat::one(),
        }
    }

    /// Materialize as a rational, when the denominator fits.
    pub fn as_ratio(&self, bit_budget: u64) -> Result<Ratio<u64>> {
        let d = self
            .denom
            .eval(bit_budget)
            .and_then(|v| v.to_u64())
            .ok_or_else(|| {
                KernelError::BudgetExceeded(format!(
                    "reciprocal denominator {} does not materialize as u64",
                    self.denom
                ))
            })?;
        if d == 0 {
            return Err(KernelError::Precondition(
                "reciprocal denominator is zero".into(),
            ));
        }
        Ok(Ratio::new(1, d))
    }
}

/// `phi(<n) = prod_{m<n} sizes[m]^m`. Exact on exact inputs; on symbolic
/// inputs the product is a certified upper bound, which is the sound
/// direction everywhere `phi` is consumed (it only ever shrinks `r` or
/// raises a target).
pub fn phi_less(level_sizes: &[ExtNat], n: u64, bit_budget: u64) -> Result<ExtNat> {
    let mut acc = ExtNat::one();
    for m in 0..n {
        let size = level_sizes.get(m as usize).ok_or_else(|| {
            KernelError::Schema(format!(
                "phi(<{n}) needs a size for level {m}, table has {}",
                level_sizes.len()
            ))
        })?;
        let factor = ub_pow_nat(size, m, bit_budget)?;
        acc = ub_mul(&acc, &factor, bit_budget)?;
    }
    Ok(acc)
}

/// The pair `(phi(<n), r(n))` with `r(n) = 1 / (n * phi(<n))` in linear mode
/// and `1 / (n^2 * phi(<n))` in quadratic mode. `r(0)` is clamped to 1.
pub fn phi_r(
    level_sizes: &[ExtNat],
    n: u64,
    mode: RMode,
    bit_budget: u64,
) -> Result<(ExtNat, Reciprocal)> {
    let phi = phi_less(level_sizes, n, bit_budget)?;
    let r = r_denom_from_phi(&phi, n, mode, bit_budget)?;
    Ok((phi, r))
}

fn r_denom_from_phi(phi: &ExtNat, n: u64, mode: RMode, bit_budget: u64) -> Result<Reciprocal> {
    if n == 0 {
        return Ok(Reciprocal::one());
    }
    let c = match mode {
        RMode::Linear => BigUint::from(n),
        RMode::Quadratic => BigUint::from(n) * n,
    };
    let denom = match checked_mul_nat(&c, phi) {
        Some(d) => d,
        None => crate::extnat::ub_mul_nat(&c, phi, bit_budget)?,
    };
    Ok(Reciprocal { denom })
}

/// How to compute the width bound: run the greedy search and materialize, or
/// return the certified symbolic node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiMode {
    Exact,
    Symbolic,
}

impl fmt::Display for PsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiMode::Exact => write!(f, "exact"),
            PsiMode::Symbolic => write!(f, "symbolic"),
        }
    }
}

fn materialize(x: ExtNat, bit_budget: u64) -> ExtNat {
    match x.eval(bit_budget) {
        Some(v) => ExtNat::exact(v),
        None => x,
    }
}

/// `2^be(target, 0)` as a certified node; see the module docs for why this
/// is an upper bound of the true width function.
fn psi_node(level: u64, bigness: &ExtNat, target: &ExtNat, schedule: &Flarge) -> Result<ExtNat> {
    Ok(ExtNat::pow2(ExtNat::block(
        level,
        bigness.clone(),
        target.clone(),
        schedule.clone(),
    )?))
}

/// Norm target `2^((level+1) * denom)` for a reciprocal scale `r = 1/denom`,
/// with the level-0 clamp `r(0) := 1` giving target 2.
fn target_from_recip(level: u64, r_denom: &ExtNat) -> Result<ExtNat> {
    if level == 0 {
        return Ok(ExtNat::exact_u64(2));
    }
    let e = checked_mul_nat(&BigUint::from(level + 1), r_denom).ok_or_else(|| {
        KernelError::BudgetExceeded(format!(
            "norm target exponent ({}+1) * {r_denom} is not exactly representable",
            level
        ))
    })?;
    Ok(ExtNat::pow2(e))
}

/// Upper bound for the least width whose initial interval reaches the norm
/// target for `(level, bigness, r)`.
pub fn psi_upper(
    level: u64,
    bigness: u64,
    r: Ratio<u64>,
    mode: PsiMode,
    schedule: &Flarge,
    bit_budget: u64,
) -> Result<ExtNat> {
    let params = RankParams::new(bigness, level, r, schedule.clone())?;
    let ctx = RankCtx::new(params, bit_budget);
    match mode {
        PsiMode::Exact => {
            let (_, psi) = ctx.choose_j()?;
            Ok(psi)
        }
        PsiMode::Symbolic => {
            let target = ctx.norm_target()?;
            let node = psi_node(
                level,
                &ExtNat::exact_u64(bigness),
                &ExtNat::exact_u64(target),
                schedule,
            )?;
            Ok(materialize(node, bit_budget))
        }
    }
}

/// The interleaved parameter families: `f[eps][m]`, `g[eps][m]`, the per-level
/// maxima, and the `phi` / `r` tables they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTables {
    pub schedule: Flarge,
    pub indices: u64,
    pub levels: u64,
    pub f: Vec<Vec<ExtNat>>,
    pub g: Vec<Vec<ExtNat>>,
    pub fmax: Vec<ExtNat>,
    pub phi_less: Vec<ExtNat>,
    pub r_denom: Vec<ExtNat>,
}

/// Upper bound for the obstruction term `phi(<m) * f^m`.
fn ub_obstruction(phi: &ExtNat, f: &ExtNat, m: u64, bit_budget: u64) -> Result<ExtNat> {
    let fp = ub_pow_nat(f, m, bit_budget)?;
    ub_mul(phi, &fp, bit_budget)
}

/// Build the families level by level, index by index: each `g` is bumped
/// strictly above every obstruction term seen so far, and each `f` is the
/// symbolic width bound at that `g` with a rank offset of `2^eps` certifying
/// pairwise distinctness along the level.
pub fn gen_sequences(
    indices: u64,
    levels: u64,
    schedule: &Flarge,
    bit_budget: u64,
) -> Result<ParamTables> {
    if indices < 1 || levels < 1 {
        return Err(KernelError::Precondition(format!(
            "gen_sequences requires at least one index and one level, got ({indices}, {levels})"
        )));
    }
    if indices > MAX_INDICES || levels > MAX_LEVELS {
        return Err(KernelError::Precondition(format!(
            "gen_sequences({indices}, {levels}) exceeds the supported shape \
             ({MAX_INDICES}, {MAX_LEVELS})"
        )));
    }
    if !schedule.is_monotone() {
        return Err(KernelError::Precondition(format!(
            "gen_sequences requires a monotone schedule, got {schedule}"
        )));
    }
    let e_count = indices as usize;
    let mut f: Vec<Vec<ExtNat>> = vec![Vec::new(); e_count];
    let mut g: Vec<Vec<ExtNat>> = vec![Vec::new(); e_count];
    let mut fmax: Vec<ExtNat> = Vec::new();
    let mut phi: Vec<ExtNat> = Vec::new();
    let mut r_denom: Vec<ExtNat> = Vec::new();

    for m in 0..levels {
        let phi_m = if m == 0 {
            ExtNat::one()
        } else {
            let factor = ub_pow_nat(&fmax[(m - 1) as usize], m - 1, bit_budget)?;
            ub_mul(&phi[(m - 1) as usize], &factor, bit_budget)?
        };
        let rd = r_denom_from_phi(&phi_m, m, RMode::Quadratic, bit_budget)?.denom;
        let target = target_from_recip(m, &rd)?;
        phi.push(phi_m.clone());
        r_denom.push(rd);

        for eps in 0..e_count {
            let mut terms: Vec<ExtNat> = vec![phi_m.clone()];
            for prev in f.iter().take(eps) {
                terms.push(ub_obstruction(&phi_m, &prev[m as usize], m, bit_budget)?);
            }
            if m >= 1 {
                terms.push(fmax[(m - 1) as usize].clone());
            }
            if eps >= 1 {
                terms.push(g[eps - 1][m as usize].clone());
            }
            let mut u = terms[0].clone();
            for t in &terms[1..] {
                u = ub_max(&u, t, bit_budget)?;
            }
            let g_val = bump_strict(&u);
            let rank = checked_mul_nat(&(BigUint::from(1u32) << eps), &target).ok_or_else(
                || KernelError::BudgetExceeded(format!("rank offset 2^{eps} * {target} overflows")),
            )?;
            let f_val = materialize(
                psi_node(m, &g_val, &rank, schedule)?,
                bit_budget,
            );
            g[eps].push(g_val);
            f[eps].push(f_val);
        }
        fmax.push(f[e_count - 1][m as usize].clone());
    }

    let tables = ParamTables {
        schedule: schedule.clone(),
        indices,
        levels,
        f,
        g,
        fmax,
        phi_less: phi,
        r_denom,
    };
    let report = check_assumption(&tables, bit_budget);
    if !report.certified() {
        return Err(KernelError::Incomparable(format!(
            "generated tables failed self-certification: {}",
            report.summary()
        )));
    }
    Ok(tables)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Incomparable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Pass => write!(f, "pass"),
            CheckStatus::Fail => write!(f, "fail"),
            CheckStatus::Incomparable => write!(f, "incomparable"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub items: Vec<CheckItem>,
}

impl AssumptionReport {
    pub fn certified(&self) -> bool {
        self.items.iter().all(|i| i.status == CheckStatus::Pass)
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut p = 0;
        let mut f = 0;
        let mut inc = 0;
        for i in &self.items {
            match i.status {
                CheckStatus::Pass => p += 1,
                CheckStatus::Fail => f += 1,
                CheckStatus::Incomparable => inc += 1,
            }
        }
        (p, f, inc)
    }

    pub fn summary(&self) -> String {
        let (p, f, inc) = self.counts();
        let first_bad = self
            .items
            .iter()
            .find(|i| i.status != CheckStatus::Pass)
            .map(|i| format!("; first: {} ({})", i.name, i.detail))
            .unwrap_or_default();
        format!("{p} pass, {f} fail, {inc} incomparable{first_bad}")
    }

    fn push(&mut self, name: String, status: CheckStatus, detail: String) {
        self.items.push(CheckItem {
            name,
            status,
            detail,
        });
    }

    /// Record a `>=` or `>` comparison, falling back to a chained certificate
    /// through `mid` when the direct comparison is inconclusive: `a > mid`
    /// together with `mid >= b` certifies `a > b`.
    fn push_cmp(
        &mut self,
        name: String,
        a: &ExtNat,
        b: &ExtNat,
        strict: bool,
        mid: Option<&ExtNat>,
        budget: u64,
    ) {
        let direct = if strict {
            ext_gt(a, b, budget)
        } else {
            ext_ge(a, b, budget)
        };
        match direct {
            Ok(true) => self.push(name, CheckStatus::Pass, String::new()),
            Ok(false) => self.push(
                name,
                CheckStatus::Fail,
                format!("{a} is not {} {b}", if strict { ">" } else { ">=" }),
            ),
            Err(e) => {
                if let Some(u) = mid {
                    let chained = matches!(rel(a, u, budget), Rel::Gt)
                        && matches!(rel(u, b, budget), Rel::Eq | Rel::Ge | Rel::Gt);
                    if chained {
                        self.push(name, CheckStatus::Pass, "via chained bound".into());
                        return;
                    }
                }
                self.push(name, CheckStatus::Incomparable, e.to_string());
            }
        }
    }

    fn push_eq(&mut self, name: String, a: &ExtNat, b: &ExtNat, budget: u64) {
        if a == b {
            self.push(name, CheckStatus::Pass, String::new());
            return;
        }
        match ext_compare(a, b, budget) {
            Ok(Ordering::Equal) => self.push(name, CheckStatus::Pass, String::new()),
            Ok(_) => self.push(name, CheckStatus::Fail, format!("{a} != {b}")),
            Err(e) => self.push(name, CheckStatus::Incomparable, e.to_string()),
        }
    }
}

/// Certify every inequality the parameter families must satisfy, one item
/// per instance. Product terms are compared through their certified upper
/// bounds, so a pass always implies the defining inequality.
pub fn check_assumption(t: &ParamTables, bit_budget: u64) -> AssumptionReport {
    let mut rep = AssumptionReport { items: Vec::new() };
    let e_count = t.indices as usize;
    let shape_ok = t.f.len() == e_count
        && t.g.len() == e_count
        && t.f.iter().all(|row| row.len() == t.levels as usize)
        && t.g.iter().all(|row| row.len() == t.levels as usize)
        && t.fmax.len() == t.levels as usize
        && t.phi_less.len() == t.levels as usize
        && t.r_denom.len() == t.levels as usize;
    if !shape_ok {
        rep.push(
            "shape".into(),
            CheckStatus::Fail,
            "table dimensions do not match the declared (indices, levels)".into(),
        );
        return rep;
    }

    for m in 0..t.levels as usize {
        // phi / r recomputation.
        if m == 0 {
            rep.push_eq("phi[0]".into(), &t.phi_less[0], &ExtNat::one(), bit_budget);
        } else {
            match ub_pow_nat(&t.fmax[m - 1], (m - 1) as u64, bit_budget)
                .and_then(|fac| ub_mul(&t.phi_less[m - 1], &fac, bit_budget))
            {
                Ok(expect) => rep.push_eq(format!("phi[{m}]"), &t.phi_less[m], &expect, bit_budget),
                Err(e) => rep.push(format!("phi[{m}]"), CheckStatus::Incomparable, e.to_string()),
            }
        }
        match r_denom_from_phi(&t.phi_less[m], m as u64, RMode::Quadratic, bit_budget) {
            Ok(expect) => rep.push_eq(
                format!("r-denom[{m}]"),
                &t.r_denom[m],
                &expect.denom,
                bit_budget,
            ),
            Err(e) => rep.push(
                format!("r-denom[{m}]"),
                CheckStatus::Incomparable,
                e.to_string(),
            ),
        }

        let target = match target_from_recip(m as u64, &t.r_denom[m]) {
            Ok(v) => Some(v),
            Err(e) => {
                rep.push(
                    format!("target[{m}]"),
                    CheckStatus::Incomparable,
                    e.to_string(),
                );
                None
            }
        };

        // fmax is one of the f's and dominates all of them.
        if t.f.iter().any(|row| row[m] == t.fmax[m]) {
            rep.push(format!("fmax-member[{m}]"), CheckStatus::Pass, String::new());
        } else {
            rep.push(
                format!("fmax-member[{m}]"),
                CheckStatus::Fail,
                "fmax is not one of the level's f values".into(),
            );
        }
        for eps in 0..e_count {
            rep.push_cmp(
                format!("fmax-dominates[{m}][{eps}]"),
                &t.fmax[m],
                &t.f[eps][m],
                false,
                None,
                bit_budget,
            );
        }

        for eps in 0..e_count {
            let g = &t.g[eps][m];
            let f = &t.f[eps][m];

            // The width requirement at this (g, r).
            match target.as_ref().map(|tg| psi_node(m as u64, g, tg, &t.schedule)) {
                Some(Ok(req)) => rep.push_cmp(
                    format!("psi[{m}][{eps}]"),
                    f,
                    &req,
                    false,
                    None,
                    bit_budget,
                ),
                Some(Err(e)) => rep.push(
                    format!("psi[{m}][{eps}]"),
                    CheckStatus::Incomparable,
                    e.to_string(),
                ),
                None => rep.push(
                    format!("psi[{m}][{eps}]"),
                    CheckStatus::Incomparable,
                    "no target".into(),
                ),
            }

            // g strictly above phi and above every earlier obstruction term.
            rep.push_cmp(
                format!("g-above-phi[{m}][{eps}]"),
                g,
                &t.phi_less[m],
                true,
                None,
                bit_budget,
            );
            for ep in 0..eps {
                match ub_obstruction(&t.phi_less[m], &t.f[ep][m], m as u64, bit_budget) {
                    Ok(term) => rep.push_cmp(
                        format!("obstruction[{m}][{eps}][{ep}]"),
                        g,
                        &term,
                        true,
                        None,
                        bit_budget,
                    ),
                    Err(e) => rep.push(
                        format!("obstruction[{m}][{eps}][{ep}]"),
                        CheckStatus::Incomparable,
                        e.to_string(),
                    ),
                }
            }
            if m >= 1 {
                rep.push_cmp(
                    format!("level-seam[{m}][{eps}]"),
                    g,
                    &t.fmax[m - 1],
                    false,
                    None,
                    bit_budget,
                );
            }
        }

        // Pairwise distinct f values on the level.
        for eps in 0..e_count {
            for ep in 0..eps {
                let name = format!("distinct[{m}][{ep}][{eps}]");
                match ext_compare(&t.f[ep][m], &t.f[eps][m], bit_budget) {
                    Ok(Ordering::Equal) => rep.push(
                        name,
                        CheckStatus::Fail,
                        "two f values on a level coincide".into(),
                    ),
                    Ok(_) => rep.push(name, CheckStatus::Pass, String::new()),
                    Err(e) => rep.push(name, CheckStatus::Incomparable, e.to_string()),
                }
            }
        }
    }
    rep
}

/// The triangular refinement grid: row `n` holds `f[n][0] = f_{n,-1}` (the
/// seam value from the previous row), then `f_{n,0} .. f_{n,n}`, with
/// `g[n][l] = g_{n,l}` strictly between consecutive f's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTables {
    pub schedule: Flarge,
    pub rows: u64,
    pub f: Vec<Vec<ExtNat>>,
    pub g: Vec<Vec<ExtNat>>,
    pub phi_less: Vec<ExtNat>,
    pub r_denom: Vec<ExtNat>,
}

/// Build the grid row by row and certify it; the seam value of row `n+1` is
/// the last f of row `n`, and row 0 starts from 0.
pub fn gen_grid(
    rows: u64,
    schedule: &Flarge,
    bit_budget: u64,
) -> Result<(GridTables, AssumptionReport)> {
    if rows > MAX_LEVELS {
        return Err(KernelError::Precondition(format!(
            "gen_grid({rows}) exceeds the supported shape ({MAX_LEVELS})"
        )));
    }
    if !schedule.is_monotone() {
        return Err(KernelError::Precondition(format!(
            "gen_grid requires a monotone schedule, got {schedule}"
        )));
    }
    let mut f: Vec<Vec<ExtNat>> = Vec::new();
    let mut g: Vec<Vec<ExtNat>> = Vec::new();
    let mut phi: Vec<ExtNat> = Vec::new();
    let mut r_denom: Vec<ExtNat> = Vec::new();

    for n in 0..rows {
        let phi_n = if n == 0 {
            ExtNat::one()
        } else {
            let prev_max = f[(n - 1) as usize].last().unwrap();
            let factor = ub_pow_nat(prev_max, n - 1, bit_budget)?;
            ub_mul(&phi[(n - 1) as usize], &factor, bit_budget)?
        };
        let rd = r_denom_from_phi(&phi_n, n, RMode::Quadratic, bit_budget)?.denom;
        let target = target_from_recip(n, &rd)?;
        phi.push(phi_n.clone());
        r_denom.push(rd);

        let seam = if n == 0 {
            ExtNat::zero()
        } else {
            f[(n - 1) as usize].last().unwrap().clone()
        };
        let mut f_row = vec![seam];
        let mut g_row = Vec::new();
        for l in 0..=n {
            let prev = f_row.last().unwrap().clone();
            let term = ub_obstruction(&phi_n, &prev, n, bit_budget)?;
            let u = ub_max(&term, &prev, bit_budget)?;
            let g_val = bump_strict(&u);
            let rank = checked_mul_nat(&(BigUint::from(1u32) << l), &target).ok_or_else(
                || KernelError::BudgetExceeded(format!("rank offset 2^{l} * {target} overflows")),
            )?;
            let f_val = materialize(psi_node(n, &g_val, &rank, schedule)?, bit_budget);
            g_row.push(g_val);
            f_row.push(f_val);
        }
        f.push(f_row);
        g.push(g_row);
    }

    let grid = GridTables {
        schedule: schedule.clone(),
        rows,
        f,
        g,
        phi_less: phi,
        r_denom,
    };
    let report = check_grid(&grid, bit_budget);
    if !report.certified() {
        return Err(KernelError::Incomparable(format!(
            "generated grid failed self-certification: {}",
            report.summary()
        )));
    }
    Ok((grid, report))
}

/// Certify the grid constraints: the strict chain through each row, the
/// width requirement at each cell, the obstruction floor, the row seams,
/// and the phi / r recomputation.
pub fn check_grid(grid: &GridTables, bit_budget: u64) -> AssumptionReport {
    let mut rep = AssumptionReport { items: Vec::new() };
    let rows = grid.rows as usize;
    let shape_ok = grid.f.len() == rows
        && grid.g.len() == rows
        && grid.phi_less.len() == rows
        && grid.r_denom.len() == rows
        && (0..rows).all(|n| grid.f[n].len() == n + 2 && grid.g[n].len() == n + 1);
    if !shape_ok {
        rep.push(
            "shape".into(),
            CheckStatus::Fail,
            "grid dimensions are not triangular for the declared rows".into(),
        );
        return rep;
    }

    for n in 0..rows {
        if n == 0 {
            rep.push_eq("phi[0]".into(), &grid.phi_less[0], &ExtNat::one(), bit_budget);
            rep.push_eq("seam[0]".into(), &grid.f[0][0], &ExtNat::zero(), bit_budget);
        } else {
            match ub_pow_nat(grid.f[n - 1].last().unwrap(), (n - 1) as u64, bit_budget)
                .and_then(|fac| ub_mul(&grid.phi_less[n - 1], &fac, bit_budget))
            {
                Ok(expect) => {
                    rep.push_eq(format!("phi[{n}]"), &grid.phi_less[n], &expect, bit_budget)
                }
                Err(e) => rep.push(format!("phi[{n}]"), CheckStatus::Incomparable, e.to_string()),
            }
            if grid.f[n][0] == *grid.f[n - 1].last().unwrap() {
                rep.push(format!("seam[{n}]"), CheckStatus::Pass, String::new());
            } else {
                rep.push(
                    format!("seam[{n}]"),
                    CheckStatus::Fail,
                    "row does not start from the previous row's last f".into(),
                );
            }
        }
        match r_denom_from_phi(&grid.phi_less[n], n as u64, RMode::Quadratic, bit_budget) {
            Ok(expect) => rep.push_eq(
                format!("r-denom[{n}]"),
                &grid.r_denom[n],
                &expect.denom,
                bit_budget,
            ),
            Err(e) => rep.push(
                format!("r-denom[{n}]"),
                CheckStatus::Incomparable,
                e.to_string(),
            ),
        }
        let target = match target_from_recip(n as u64, &grid.r_denom[n]) {
            Ok(v) => Some(v),
            Err(e) => {
                rep.push(
                    format!("target[{n}]"),
                    CheckStatus::Incomparable,
                    e.to_string(),
                );
                None
            }
        };

        for l in 0..=n {
            let f_prev = &grid.f[n][l];
            let g_val = &grid.g[n][l];
            let f_val = &grid.f[n][l + 1];
            rep.push_cmp(
                format!("chain-left[{n}][{l}]"),
                g_val,
                f_prev,
                true,
                None,
                bit_budget,
            );
            rep.push_cmp(
                format!("chain-right[{n}][{l}]"),
                f_val,
                g_val,
                true,
                None,
                bit_budget,
            );
            match target
                .as_ref()
                .map(|tg| psi_node(n as u64, g_val, tg, &grid.schedule))
            {
                Some(Ok(req)) => rep.push_cmp(
                    format!("psi[{n}][{l}]"),
                    f_val,
                    &req,
                    false,
                    None,
                    bit_budget,
                ),
                Some(Err(e)) => rep.push(
                    format!("psi[{n}][{l}]"),
                    CheckStatus::Incomparable,
                    e.to_string(),
                ),
                None => rep.push(
                    format!("psi[{n}][{l}]"),
                    CheckStatus::Incomparable,
                    "no target".into(),
                ),
            }
            match ub_obstruction(&grid.phi_less[n], f_prev, n as u64, bit_budget) {
                Ok(term) => rep.push_cmp(
                    format!("floor[{n}][{l}]"),
                    g_val,
                    &term,
                    false,
                    None,
                    bit_budget,
                ),
                Err(e) => rep.push(
                    format!("floor[{n}][{l}]"),
                    CheckStatus::Incomparable,
                    e.to_string(),
                ),
            }
        }
    }
    rep
}
