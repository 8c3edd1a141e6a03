//! Finite combinatorial kernel: interval rank functions with greedy witnesses,
//! normed split creatures over binary strings, tabular creature systems,
//! homogenization of finite colorings, exact-or-symbolic tower arithmetic,
//! and a pure decision engine for finite forcing conditions.

#![forbid(unsafe_code)]

pub mod decision;
pub mod error;
pub mod extnat;
pub mod family;
pub mod fixtures;
pub mod homogenize;
pub mod norm;
pub mod rank;
pub mod schedule;
pub mod split;
pub mod tabular;
pub mod towers;
pub mod verify;

pub use decision::{
    and_value, basic_step, constant_on, decision_status, leq, leq_n, level_scale, pure_decide,
    DecideMode, DecisionStatus, Entry, FiniteCondition, NameTable, PureDecision, StepFlag,
    DEFAULT_SEARCH_BUDGET,
};
pub use error::{KernelError, Result};
pub use family::{AnyCreature, DecisiveParts};
pub use extnat::{ext_compare, ext_ge, ext_gt, ext_le, ext_lt, ExtNat, DEFAULT_BIT_BUDGET};
pub use homogenize::{
    avoid, boost, homogenize_product, multi_homogenize, HomogenizationInstance, HomogenizeOutcome,
};
pub use norm::NormValue;
pub use schedule::Flarge;
pub use split::{SplitCreature, SplitDecisive};
pub use tabular::{TabCreature, TabDecisive, TabularCreatureSystem};
pub use towers::{
    check_assumption, check_grid, exp_tower, gen_grid, gen_sequences, phi_less, phi_r, psi_upper,
    AssumptionReport, CheckItem, CheckStatus, GridTables, ParamTables, PsiMode, RMode, Reciprocal,
};
pub use verify::{verify, Property, VerifyMode, VerifyReport};
