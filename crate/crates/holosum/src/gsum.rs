//! The case-study family: a polynomial `G_s(x)` defined by a triple
//! binomial sum with parameters `b ≥ 2`, `m ≥ 1`, `s ≥ 0`,
//!
//! ```text
//! G_s(x) = Σ_{k=1}^{m+s-1} ( Σ_{r=1}^{s} C(s,r) C(k-1,r-1) (b-1)/(-b)^r
//!              Σ_{i=0}^{r-1-max(k-m,0)} (-b)^i C(r-1,i) ) (bx)^k .
//! ```
//!
//! This module owns everything specific to that family: literal oracle
//! evaluation in three equivalent forms (the definition above, a two-part
//! split that removes the max from the inner bound, and a single-summand
//! normalization with all quantifiers in front), hypergeometric summand
//! builders with optional gamma-ratio corrections that force natural
//! boundaries, the end-to-end recurrence-derivation pipelines, a
//! generating-function cross-check, and a small benchmark harness.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num::rational::BigRational;
use num::{One, Zero};
use thiserror::Error;

use crate::guessing::{guess_recurrence, guessed_is_right_factor, GuessOutcome, GuessProblem};
use crate::hyperterm::{binomial_int, Convention, EpsMode, HyperTerm};
use crate::linform::LinForm;
use crate::ore::{OreAlgebra, OrePoly};
use crate::ratfun::{AlgebraError, RatFun};
use crate::series::{BiSeries, PairMap};
use crate::telescoping::{multisum_ct, verify_ct, DegreeBudget, TelescopeError};
use crate::vars::{VarId, VarTable};

/// The fixed variable frame of the case study: parameters `b`, `m`, `s`,
/// the indeterminate `x`, the three summation indices `k`, `r`, `i`, and
/// the gamma-ratio perturbation symbol `eps`.
#[derive(Clone, Debug)]
pub struct GsVars {
    pub table: Arc<VarTable>,
    pub b: VarId,
    pub x: VarId,
    pub m: VarId,
    pub s: VarId,
    pub k: VarId,
    pub r: VarId,
    pub i: VarId,
    pub eps: VarId,
}

impl GsVars {
    pub fn new() -> GsVars {
        let table = VarTable::new(&["b", "x", "m", "s", "k", "r", "i", "eps"]);
        GsVars {
            b: table.id("b"),
            x: table.id("x"),
            m: table.id("m"),
            s: table.id("s"),
            k: table.id("k"),
            r: table.id("r"),
            i: table.id("i"),
            eps: table.id("eps"),
            table,
        }
    }

    /// The operator algebra acting through the shift in `s`.
    pub fn shift_algebra(&self) -> OreAlgebra {
        OreAlgebra::new(&self.table, &[self.s])
    }
}

impl Default for GsVars {
    fn default() -> GsVars {
        GsVars::new()
    }
}

/// One member of the family: integer `m ≥ 1` and `s ≥ 0`, with the base
/// `b ≥ 2` either a concrete integer or kept symbolic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GsInstance {
    pub b: Option<i64>,
    pub m: i64,
    pub s: i64,
}

impl GsInstance {
    pub fn new(b: i64, m: i64, s: i64) -> GsInstance {
        assert!(b >= 2, "base must be at least 2, got {b}");
        assert!(m >= 1, "m must be at least 1, got {m}");
        assert!(s >= 0, "s must be nonnegative, got {s}");
        GsInstance { b: Some(b), m, s }
    }

    pub fn symbolic_b(m: i64, s: i64) -> GsInstance {
        assert!(m >= 1, "m must be at least 1, got {m}");
        assert!(s >= 0, "s must be nonnegative, got {s}");
        GsInstance { b: None, m, s }
    }

    fn b_ratfun(&self, vars: &GsVars) -> RatFun {
        match self.b {
            Some(v) => RatFun::int(&vars.table, v),
            None => RatFun::var(&vars.table, vars.b),
        }
    }
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn binom(n: i64, k: i64) -> BigRational {
    BigRational::from_integer(binomial_int(n, k, Convention::Combinatorial))
}

/// Literal evaluation of the defining triple sum; the project-wide oracle.
/// The result is a polynomial in `x` whose coefficients are rational, or
/// rational functions of `b` when the instance keeps `b` symbolic.
pub fn eval_gs(vars: &GsVars, inst: &GsInstance) -> RatFun {
    assert!(inst.m + inst.s >= 1);
    let t = &vars.table;
    let b = inst.b_ratfun(vars);
    let bx = b.mul(&RatFun::var(t, vars.x));
    let b_minus_1 = b.sub(&RatFun::one(t));
    let neg_b = b.neg();
    let mut total = RatFun::zero(t);
    let mut bx_pow = RatFun::one(t);
    for k in 1..=(inst.m + inst.s - 1) {
        bx_pow = bx_pow.mul(&bx);
        let mut inner = RatFun::zero(t);
        for r in 1..=inst.s {
            let outer = binom(inst.s, r) * binom(k - 1, r - 1);
            if outer.is_zero() {
                continue;
            }
            let c_m = (k - inst.m).max(0);
            let mut i_sum = RatFun::zero(t);
            for i in 0..=(r - 1 - c_m) {
                let c = binom(r - 1, i);
                if !c.is_zero() {
                    i_sum = i_sum.add(&neg_b.pow(i as i32).scale(&c));
                }
            }
            if i_sum.is_zero() {
                continue;
            }
            let factor = b_minus_1.mul(&neg_b.pow(-(r as i32)));
            inner = inner.add(&factor.mul(&i_sum).scale(&outer));
        }
        total = total.add(&inner.mul(&bx_pow));
    }
    total
}

/// The two-part split of the sum that removes the max from the inner
/// bound; the parts are returned separately and add up to [`eval_gs`].
pub fn eval_gs_split(vars: &GsVars, inst: &GsInstance) -> (RatFun, RatFun) {
    let t = &vars.table;
    let b = inst.b_ratfun(vars);
    let bx = b.mul(&RatFun::var(t, vars.x));
    let b_minus_1 = b.sub(&RatFun::one(t));
    let neg_b = b.neg();
    let ratio = b_minus_1.div(&b);

    // First part: -Σ_{k=1}^{m+s-1} Σ_{r=1}^{s} C(s,r) C(k-1,r-1) ((b-1)/b)^r (bx)^k.
    let mut g1 = RatFun::zero(t);
    let mut bx_pow = RatFun::one(t);
    for k in 1..=(inst.m + inst.s - 1) {
        bx_pow = bx_pow.mul(&bx);
        let mut inner = RatFun::zero(t);
        for r in 1..=inst.s {
            let outer = binom(inst.s, r) * binom(k - 1, r - 1);
            if !outer.is_zero() {
                inner = inner.add(&ratio.pow(r as i32).scale(&outer));
            }
        }
        g1 = g1.sub(&inner.mul(&bx_pow));
    }

    // Second part: Σ_{k=m+1}^{m+s-1} Σ_{r=1}^{s} C(s,r) C(k-1,r-1)
    //   (1-b)/(-b)^r Σ_{i=r-(k-m)}^{r-1} (-b)^i C(r-1,i) (bx)^k.
    let one_minus_b = b_minus_1.neg();
    let mut g2 = RatFun::zero(t);
    for k in (inst.m + 1)..=(inst.m + inst.s - 1) {
        let mut inner = RatFun::zero(t);
        for r in 1..=inst.s {
            let outer = binom(inst.s, r) * binom(k - 1, r - 1);
            if outer.is_zero() {
                continue;
            }
            let mut i_sum = RatFun::zero(t);
            for i in (r - (k - inst.m))..=(r - 1) {
                let c = binom(r - 1, i);
                if !c.is_zero() {
                    i_sum = i_sum.add(&neg_b.pow(i as i32).scale(&c));
                }
            }
            if i_sum.is_zero() {
                continue;
            }
            let factor = one_minus_b.mul(&neg_b.pow(-(r as i32)));
            inner = inner.add(&factor.mul(&i_sum).scale(&outer));
        }
        g2 = g2.add(&inner.mul(&bx.pow(k as i32)));
    }
    (g1, g2)
}

/// The single-summand normalization: all three quantifiers in front, the
/// max dropped from the inner bound (the inner binomial vanishes on the
/// extra range), and the summand written as one product
/// `C(s,r) C(k-1,r-1) C(r-1,i) (b-1)/(-b)^(r-i) (bx)^k`.
pub fn eval_gs_normalized(vars: &GsVars, inst: &GsInstance) -> RatFun {
    let t = &vars.table;
    let b = inst.b_ratfun(vars);
    let bx = b.mul(&RatFun::var(t, vars.x));
    let b_minus_1 = b.sub(&RatFun::one(t));
    let neg_b = b.neg();
    let mut total = RatFun::zero(t);
    for k in 1..=(inst.m + inst.s - 1) {
        for r in 1..=inst.s {
            let outer = binom(inst.s, r) * binom(k - 1, r - 1);
            if outer.is_zero() {
                continue;
            }
            for i in 0..=(r - 1 - (k - inst.m)) {
                let c = binom(r - 1, i);
                if c.is_zero() {
                    continue;
                }
                let term = b_minus_1
                    .mul(&neg_b.pow((i - r) as i32))
                    .mul(&bx.pow(k as i32))
                    .scale(&(outer.clone() * c));
                total = total.add(&term);
            }
        }
    }
    total
}

/// Which gamma-ratio corrections to attach to the normalized summand.
///
/// The summand's support is cut out by its three binomial factors together
/// with the summation bounds; beyond those bounds some binomials stay
/// nonzero, which breaks the boundary collapse of telescoped sums.  A
/// factor `Γ(u+eps)/Γ(u)` vanishes for `u ≤ 0` and restores the original
/// value as `eps → 0`, so attaching it to the right argument forces a
/// natural boundary.  One correction (argument `r-i-k+m`, the slack of the
/// inner bound) is enough under the combinatorial convention; the second
/// (argument `k`) is only needed when binomials are read in the extended
/// sense, which keeps the summand alive at `k ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaMode {
    /// The bare summand.
    None,
    /// `Γ(r-i-k+m+eps)/Γ(r-i-k+m)` only.
    One,
    /// Both corrections, including `Γ(k+eps)/Γ(k)`.
    Two,
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GammaMode::None => "naive",
            GammaMode::One => "one-gamma",
            GammaMode::Two => "two-gamma",
        };
        f.write_str(s)
    }
}

/// The normalized summand as a hypergeometric term, with the requested
/// gamma corrections attached and `k`, `r`, `i` designated as summation
/// variables.
pub fn gs_summand(vars: &GsVars, mode: GammaMode) -> HyperTerm {
    let t = &vars.table;
    let lf = LinForm::var;
    let b = RatFun::var(t, vars.b);
    let one = RatFun::one(t);
    let mut term = HyperTerm::one(t)
        .binomial(lf(vars.s), lf(vars.r))
        .binomial(lf(vars.k).add_const(-1), lf(vars.r).add_const(-1))
        .binomial(lf(vars.r).add_const(-1), lf(vars.i))
        .rational(b.sub(&one))
        .power(b.neg(), lf(vars.i).sub(&lf(vars.r)))
        .power(b.mul(&RatFun::var(t, vars.x)), lf(vars.k));
    let inner_slack = lf(vars.r)
        .sub(&lf(vars.i))
        .sub(&lf(vars.k))
        .add(&lf(vars.m));
    match mode {
        GammaMode::None => {}
        GammaMode::One => term = term.gamma_ratio(inner_slack),
        GammaMode::Two => term = term.gamma_ratio(inner_slack).gamma_ratio(lf(vars.k)),
    }
    let mut term = term
        .with_sum_vars(&[vars.k, vars.r, vars.i])
        .with_param_vars(&[vars.b, vars.x, vars.m, vars.s]);
    if mode != GammaMode::None {
        term = term.with_eps(vars.eps);
    }
    term
}

/// The inner sum of the split's first part, as a term in `r` with `s` and
/// `k` as parameters: `C(s,r) C(k-1,r-1) ((b-1)/b)^r (bx)^k`.
pub fn g1_inner_summand(vars: &GsVars) -> HyperTerm {
    let t = &vars.table;
    let lf = LinForm::var;
    let b = RatFun::var(t, vars.b);
    let ratio = b.sub(&RatFun::one(t)).div(&b);
    HyperTerm::one(t)
        .binomial(lf(vars.s), lf(vars.r))
        .binomial(lf(vars.k).add_const(-1), lf(vars.r).add_const(-1))
        .power(ratio, lf(vars.r))
        .power(b.mul(&RatFun::var(t, vars.x)), lf(vars.k))
        .with_sum_vars(&[vars.r])
        .with_param_vars(&[vars.b, vars.x, vars.s, vars.k])
}

/// Sums `eval_term` of a summand over its literal ranges; the gamma
/// corrections are evaluated in the `eps → 0` limit.  Cross-checks the
/// term builders against the direct oracles.  A corrected summand is
/// summed over the full inner box `0 ≤ i ≤ r-1` (the corrections vanish on
/// the overhang); the bare summand must stop at the true inner bound.
pub fn sum_summand_over_ranges(
    vars: &GsVars,
    term: &HyperTerm,
    inst: &GsInstance,
) -> Result<RatFun, AlgebraError> {
    let b = inst.b.expect("summing a summand needs a concrete base");
    let mut total = RatFun::zero(&vars.table);
    for k in 1..=(inst.m + inst.s - 1) {
        for r in 1..=inst.s {
            let i_top = if term.has_gamma() {
                r - 1
            } else {
                r - 1 - (k - inst.m).max(0)
            };
            for i in 0..=i_top {
                let mut point = BTreeMap::new();
                point.insert(vars.b, big(b));
                point.insert(vars.m, big(inst.m));
                point.insert(vars.s, big(inst.s));
                point.insert(vars.k, big(k));
                point.insert(vars.r, big(r));
                point.insert(vars.i, big(i));
                let v = term.eval_term(&point, Convention::Combinatorial, EpsMode::LimitZero)?;
                total = total.add(&v);
            }
        }
    }
    Ok(total)
}
