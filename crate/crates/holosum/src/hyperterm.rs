//! Symbolic hypergeometric terms: products of binomial coefficients,
//! powers, rational factors, and ε-perturbed gamma ratios, with exact
//! shift quotients and evaluation under either binomial convention.
//!
//! Every factor argument is an integer-affine [`LinForm`], which makes all
//! shift quotients rational functions by construction.  Evaluation is
//! partial: variables left unbound (a symbolic `x`, or ε) stay symbolic in
//! the returned rational function, while binomial and gamma arguments must
//! evaluate to integers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

use crate::factored::Factored;
use crate::linform::{linform_eval_rational, LinForm};
use crate::mpoly::MPoly;
use crate::ore::{OreAlgebra, OrePoly};
use crate::parse::{err, Atoms, ExprParser, ParseError};
use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::{same_table, VarId, VarTable};

/// How binomial coefficients behave outside `0 ≤ k ≤ n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `C(n,k) = 0` unless `0 ≤ k ≤ n`.
    Combinatorial,
    /// The unique extension satisfying both first-order shift recurrences
    /// on all of Z², seeded by `C(-1,0) = C(-1,-1) = 1`.
    Extended,
}

/// How `Γ(u+ε)/Γ(u)` factors evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsMode {
    /// Keep ε symbolic: `Π_{j=1}^{u-1} (j+ε)/j` for `u ≥ 1`, exactly 0 for
    /// `u ≤ 0` (the reflected gamma has a zero there).
    Symbolic,
    /// The ε→0 limit: 1 for `u ≥ 1`, 0 for `u ≤ 0`.
    LimitZero,
}

/// One multiplicative factor of a hypergeometric term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermFactor {
    /// `C(top, bottom)`.
    Binomial(LinForm, LinForm),
    /// `base ^ exponent`; the base is rational, the exponent integer-affine.
    Power(RatFun, LinForm),
    /// A bare rational-function factor.
    RatFactor(RatFun),
    /// `Γ(arg+ε)/Γ(arg)`.
    GammaRatio(LinForm),
}

/// A product of [`TermFactor`]s with designated summation and parameter
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperTerm {
    table: Arc<VarTable>,
    factors: Vec<TermFactor>,
    sum_vars: Vec<VarId>,
    param_vars: Vec<VarId>,
    /// Variable standing for ε inside gamma-ratio factors.
    eps: Option<VarId>,
}

impl HyperTerm {
    pub fn one(table: &Arc<VarTable>) -> HyperTerm {
        HyperTerm {
            table: table.clone(),
            factors: Vec::new(),
            sum_vars: Vec::new(),
            param_vars: Vec::new(),
            eps: None,
        }
    }

    pub fn binomial(mut self, top: LinForm, bottom: LinForm) -> HyperTerm {
        self.factors.push(TermFactor::Binomial(top, bottom));
        self.canon()
    }

    pub fn power(mut self, base: RatFun, exponent: LinForm) -> HyperTerm {
        self.factors.push(TermFactor::Power(base, exponent));
        self.canon()
    }

    pub fn rational(mut self, f: RatFun) -> HyperTerm {
        self.factors.push(TermFactor::RatFactor(f));
        self.canon()
    }

    pub fn gamma_ratio(mut self, arg: LinForm) -> HyperTerm {
        self.factors.push(TermFactor::GammaRatio(arg));
        self.canon()
    }

    /// Canonical factor order: structural factors in insertion order, then
    /// at most one combined rational factor at the end.
    fn canon(mut self) -> HyperTerm {
        let mut rat = RatFun::one(&self.table);
        let mut any = false;
        self.factors.retain(|f| {
            if let TermFactor::RatFactor(r) = f {
                rat = rat.mul(r);
                any = true;
                false
            } else {
                true
            }
        });
        if any && !rat.is_one() {
            self.factors.push(TermFactor::RatFactor(rat));
        }
        self
    }

    pub fn with_sum_vars(mut self, vars: &[VarId]) -> HyperTerm {
        self.sum_vars = vars.to_vec();
        self
    }

    pub fn with_param_vars(mut self, vars: &[VarId]) -> HyperTerm {
        self.param_vars = vars.to_vec();
        self
    }

    pub fn with_eps(mut self, v: VarId) -> HyperTerm {
        self.eps = Some(v);
        self
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn factors(&self) -> &[TermFactor] {
        &self.factors
    }

    pub fn sum_vars(&self) -> &[VarId] {
        &self.sum_vars
    }

    pub fn param_vars(&self) -> &[VarId] {
        &self.param_vars
    }

    pub fn eps_var(&self) -> Option<VarId> {
        self.eps
    }

    pub fn has_gamma(&self) -> bool {
        self.factors
            .iter()
            .any(|f| matches!(f, TermFactor::GammaRatio(_)))
    }

    /// Product of two terms over the same table; designation metadata is
    /// taken from `self` (the other term's must agree or be unset).
    pub fn mul(&self, other: &HyperTerm) -> HyperTerm {
        assert!(same_table(&self.table, &other.table), "table mismatch");
        assert!(
            other.sum_vars.is_empty() || other.sum_vars == self.sum_vars,
            "conflicting summation-variable designations"
        );
        assert!(
            other.eps.is_none() || self.eps.is_none() || other.eps == self.eps,
            "conflicting epsilon designations"
        );
        let mut out = self.clone();
        if out.eps.is_none() {
            out.eps = other.eps;
        }
        out.factors.extend(other.factors.iter().cloned());
        out.canon()
    }

    /// When the term is a pure rational function (no binomial, power, or
    /// gamma factor), returns it.
    pub fn as_pure_rational(&self) -> Option<RatFun> {
        let mut acc = RatFun::one(&self.table);
        for f in &self.factors {
            match f {
                TermFactor::RatFactor(r) => acc = acc.mul(r),
                _ => return None,
            }
        }
        Some(acc)
    }

    /// Shifts one variable by an integer offset in every factor.
    pub fn shift_var(&self, v: VarId, offset: i64) -> HyperTerm {
        let mut out = self.clone();
        for f in out.factors.iter_mut() {
            *f = match f {
                TermFactor::Binomial(t, b) => {
                    TermFactor::Binomial(t.shift_var(v, offset), b.shift_var(v, offset))
                }
                TermFactor::Power(base, e) => {
                    TermFactor::Power(base.shift_var(v, offset), e.shift_var(v, offset))
                }
                TermFactor::RatFactor(r) => TermFactor::RatFactor(r.shift_var(v, offset)),
                TermFactor::GammaRatio(u) => TermFactor::GammaRatio(u.shift_var(v, offset)),
            };
        }
        out
    }

    /// Substitutes an integer-affine form for a variable in every factor.
    pub fn substitute_var(&self, v: VarId, rep: &LinForm) -> Result<HyperTerm, AlgebraError> {
        let rep_poly = rep.to_mpoly(&self.table);
        let mut out = self.clone();
        for f in out.factors.iter_mut() {
            *f = match f {
                TermFactor::Binomial(t, b) => {
                    TermFactor::Binomial(t.substitute(v, rep), b.substitute(v, rep))
                }
                TermFactor::Power(base, e) => {
                    TermFactor::Power(base.substitute(v, &rep_poly)?, e.substitute(v, rep))
                }
                TermFactor::RatFactor(r) => TermFactor::RatFactor(r.substitute(v, &rep_poly)?),
                TermFactor::GammaRatio(u) => TermFactor::GammaRatio(u.substitute(v, rep)),
            };
        }
        Ok(out)
    }

    /// Exact evaluation at a (possibly partial) point.  Binomial, power,
    /// and gamma arguments must evaluate to integers; everything else may
    /// stay symbolic in the result.
    pub fn eval_term(
        &self,
        point: &BTreeMap<VarId, BigRational>,
        convention: Convention,
        eps_mode: EpsMode,
    ) -> Result<RatFun, AlgebraError> {
        let mut acc = RatFun::one(&self.table);
        for f in &self.factors {
            let val = match f {
                TermFactor::Binomial(t, b) => {
                    let tv = self.eval_int_arg(t, point)?;
                    let bv = self.eval_int_arg(b, point)?;
                    RatFun::constant(
                        &self.table,
                        BigRational::from_integer(binomial_int(tv, bv, convention)),
                    )
                }
                TermFactor::Power(base, e) => {
                    let ev = self.eval_int_arg(e, point)?;
                    let bv = base.eval_partial(point)?;
                    if bv.is_zero() {
                        if ev < 0 {
                            return Err(AlgebraError::Pole {
                                den: base.to_string(),
                            });
                        }
                        if ev == 0 {
                            RatFun::one(&self.table)
                        } else {
                            RatFun::zero(&self.table)
                        }
                    } else {
                        let e32: i32 =
                            ev.try_into().map_err(|_| AlgebraError::NonIntegerArgument {
                                arg: format!("power exponent {ev} out of range"),
                            })?;
                        bv.pow(e32)
                    }
                }
                TermFactor::RatFactor(r) => r.eval_partial(point)?,
                TermFactor::GammaRatio(u) => {
                    let uv = self.eval_int_arg(u, point)?;
                    self.gamma_ratio_value(uv, eps_mode, point)?
                }
            };
            acc = acc.mul(&val);
        }
        Ok(acc)
    }

    fn eval_int_arg(
        &self,
        lf: &LinForm,
        point: &BTreeMap<VarId, BigRational>,
    ) -> Result<i64, AlgebraError> {
        let arg = || format!("{}", lf.display(&self.table));
        let v = linform_eval_rational(lf, point).ok_or_else(|| {
            AlgebraError::NonIntegerArgument { arg: arg() }
        })?;
        if !v.is_integer() {
            return Err(AlgebraError::NonIntegerArgument { arg: arg() });
        }
        v.to_integer()
            .try_into()
            .map_err(|_| AlgebraError::NonIntegerArgument { arg: arg() })
    }

    fn gamma_ratio_value(
        &self,
        u: i64,
        eps_mode: EpsMode,
        point: &BTreeMap<VarId, BigRational>,
    ) -> Result<RatFun, AlgebraError> {
        if u <= 0 {
            // 1/Γ(u) vanishes at nonpositive integers regardless of ε.
            return Ok(RatFun::zero(&self.table));
        }
        match eps_mode {
            EpsMode::LimitZero => Ok(RatFun::one(&self.table)),
            EpsMode::Symbolic => {
                let e = self.eps.ok_or(AlgebraError::MissingEpsilon)?;
                let eps_poly = MPoly::var(&self.table, e);
                let mut num = MPoly::one(&self.table);
                let mut den = BigRational::one();
                for j in 1..u {
                    num = num.mul(&eps_poly.add(&MPoly::int(&self.table, j)));
                    den *= BigRational::from_integer(j.into());
                }
                let r = RatFun::from_poly(num).scale(&den.recip());
                Ok(r.eval_partial(point)?)
            }
        }
    }

    /// `T(v→v+1) / T` as a product of explicit factors.
    pub fn shift_quotient_factored(&self, v: VarId) -> Result<Factored, AlgebraError> {
        let mut acc = Factored::one(&self.table);
        for f in &self.factors {
            let q = match f {
                TermFactor::Binomial(top, bot) => {
                    let a = top.coeff(v);
                    let b = bot.coeff(v);
                    let diff = top.sub(bot);
                    factorial_ratio(&self.table, top, a)
                        .mul(&factorial_ratio(&self.table, bot, b).recip())
                        .mul(&factorial_ratio(&self.table, &diff, a - b).recip())
                }
                TermFactor::Power(base, e) => {
                    let c = e.coeff(v);
                    let base_moves = base.num().depends_on(v) || base.den().depends_on(v);
                    if !base_moves {
                        let mut q = Factored::one(&self.table);
                        if c != 0 {
                            if base.is_zero() {
                                return Err(AlgebraError::NotHypergeometric {
                                    what: "zero base with moving exponent".into(),
                                });
                            }
                            q.push(base.num(), c);
                            q.push(base.den(), -c);
                        }
                        q
                    } else if e.is_constant() {
                        let k = e.constant;
                        let sb = base.shift_var(v, 1);
                        let mut q = Factored::one(&self.table);
                        q.push(sb.num(), k);
                        q.push(sb.den(), -k);
                        q.push(base.num(), -k);
                        q.push(base.den(), k);
                        q
                    } else {
                        return Err(AlgebraError::NotHypergeometric {
                            what: format!(
                                "base depends on {} while the exponent moves",
                                self.table.name(v)
                            ),
                        });
                    }
                }
                TermFactor::RatFactor(r) => {
                    if !r.num().depends_on(v) && !r.den().depends_on(v) {
                        Factored::one(&self.table)
                    } else {
                        if r.is_zero() {
                            return Err(AlgebraError::NotHypergeometric {
                                what: "zero rational factor".into(),
                            });
                        }
                        let sr = r.shift_var(v, 1);
                        let mut q = Factored::one(&self.table);
                        q.push(sr.num(), 1);
                        q.push(sr.den(), -1);
                        q.push(r.num(), -1);
                        q.push(r.den(), 1);
                        q
                    }
                }
                TermFactor::GammaRatio(u) => {
                    let c = u.coeff(v);
                    if c == 0 {
                        Factored::one(&self.table)
                    } else {
                        // Γ(w+c)/Γ(w) = w(w+1)···(w+c-1) = (w-1+c)!/(w-1)!
                        let e = self.eps.ok_or(AlgebraError::MissingEpsilon)?;
                        let w = u.add_const(-1);
                        let w_eps = w.add(&LinForm::var(e));
                        factorial_ratio(&self.table, &w_eps, c)
                            .mul(&factorial_ratio(&self.table, &w, c).recip())
                    }
                }
            };
            acc = acc.mul(&q);
        }
        Ok(acc)
    }

    /// `T(v→v+1) / T` as a reduced rational function.
    pub fn shift_quotient(&self, v: VarId) -> Result<RatFun, AlgebraError> {
        Ok(self.shift_quotient_factored(v)?.to_ratfun())
    }

    /// `(S^α T) / T` for a multi-variable shift `α` as a product of
    /// explicit factors; all shift amounts may be negative.
    pub fn shift_ratio_factored(
        &self,
        shifts: &BTreeMap<VarId, i64>,
    ) -> Result<Factored, AlgebraError> {
        let mut acc = Factored::one(&self.table);
        let mut cur = self.clone();
        for (&v, &amount) in shifts {
            if amount >= 0 {
                for _ in 0..amount {
                    acc = acc.mul(&cur.shift_quotient_factored(v)?);
                    cur = cur.shift_var(v, 1);
                }
            } else {
                for _ in 0..(-amount) {
                    cur = cur.shift_var(v, -1);
                    acc = acc.mul(&cur.shift_quotient_factored(v)?.recip());
                }
            }
        }
        Ok(acc)
    }

    /// Rewrites factors of constant "shape" in closed form: binomials with
    /// constant bottom or constant top−bottom become explicit polynomials,
    /// powers with constant exponent are expanded, gamma ratios with
    /// constant argument become their symbolic value.  The binomial
    /// rewrites use `C(w,c) = w(w-1)···(w-c+1)/c!`, valid on the region
    /// where the non-constant argument is nonnegative — the usual state of
    /// affairs for boundary evaluations, recorded by the caller's grid
    /// checks rather than re-proved here.
    pub fn reduce_closed(&self) -> Result<HyperTerm, AlgebraError> {
        let mut out = HyperTerm {
            factors: Vec::new(),
            ..self.clone()
        };
        for f in &self.factors {
            match f {
                TermFactor::Binomial(top, bot) => {
                    let diff = top.sub(bot);
                    let pick = if bot.is_constant() {
                        Some(bot.constant)
                    } else if diff.is_constant() {
                        Some(diff.constant)
                    } else {
                        None
                    };
                    match pick {
                        Some(c) if c >= 0 => {
                            let mut r = RatFun::one(&self.table);
                            for j in 0..c {
                                let lf = top.add_const(-j);
                                r = r.mul(&RatFun::from_poly(lf.to_mpoly(&self.table)));
                                r = r.scale(&qr_one_over(j + 1));
                            }
                            out = out.rational(r);
                        }
                        Some(_) => {
                            // negative constant argument: the binomial is
                            // identically zero
                            out = out.rational(RatFun::zero(&self.table));
                        }
                        None => {
                            out.factors.push(f.clone());
                            out = out.canon();
                        }
                    }
                }
                TermFactor::Power(base, e) if e.is_constant() => {
                    let c = e.constant;
                    if base.is_zero() {
                        if c < 0 {
                            return Err(AlgebraError::Pole {
                                den: base.to_string(),
                            });
                        }
                        out = out.rational(if c == 0 {
                            RatFun::one(&self.table)
                        } else {
                            RatFun::zero(&self.table)
                        });
                    } else {
                        let e32: i32 = c.try_into().map_err(|_| {
                            AlgebraError::NonIntegerArgument {
                                arg: format!("power exponent {c} out of range"),
                            }
                        })?;
                        out = out.rational(base.pow(e32));
                    }
                }
                TermFactor::GammaRatio(u) if u.is_constant() => {
                    let c = u.constant;
                    if c <= 0 {
                        out = out.rational(RatFun::zero(&self.table));
                    } else {
                        let e = self.eps.ok_or(AlgebraError::MissingEpsilon)?;
                        let eps_poly = MPoly::var(&self.table, e);
                        let mut r = RatFun::one(&self.table);
                        for j in 1..c {
                            let step = RatFun::from_poly(
                                eps_poly.add(&MPoly::int(&self.table, j)),
                            )
                            .scale(&qr_one_over(j));
                            r = r.mul(&step);
                        }
                        out = out.rational(r);
                    }
                }
                other => {
                    out.factors.push(other.clone());
                    out = out.canon();
                }
            }
        }
        Ok(out)
    }

    /// First-order annihilator from the shift quotient `q = num/den`:
    /// `den·S_v − num`, normalized.
    pub fn annihilator_of_term(
        &self,
        v: VarId,
        algebra: &OreAlgebra,
    ) -> Result<OrePoly, AlgebraError> {
        let sym = algebra
            .symbol_for_var(v)
            .expect("algebra lacks a shift symbol for the variable");
        let q = self.shift_quotient(v)?;
        let s = OrePoly::shift(algebra, sym);
        let op = s
            .scale(&RatFun::from_poly(q.den().clone()))
            .sub(&OrePoly::from_ratfun(
                algebra,
                RatFun::from_poly(q.num().clone()),
            ));
        Ok(op.normalize())
    }

    /// Inequalities (each `form ≥ 0`) cutting out the support of the term
    /// under the combinatorial convention and limit-zero gamma ratios.
    /// Exact for products of binomial and gamma-ratio factors.
    pub fn support_box(&self, params: &BTreeMap<VarId, i64>) -> SupportBox {
        let mut constraints = Vec::new();
        for f in &self.factors {
            match f {
                TermFactor::Binomial(top, bot) => {
                    constraints.push(bot.eval_partial(params));
                    constraints.push(top.sub(bot).eval_partial(params));
                }
                TermFactor::GammaRatio(u) => {
                    constraints.push(u.add_const(-1).eval_partial(params));
                }
                _ => {}
            }
        }
        SupportBox { constraints }
    }
}

/// Conjunction of affine inequalities `form ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportBox {
    pub constraints: Vec<LinForm>,
}

impl SupportBox {
    pub fn contains(&self, point: &BTreeMap<VarId, i64>) -> bool {
        self.constraints.iter().all(|c| c.eval(point) >= 0)
    }

    pub fn display<'a>(&'a self, table: &'a VarTable) -> SupportBoxDisplay<'a> {
        SupportBoxDisplay { b: self, table }
    }
}

pub struct SupportBoxDisplay<'a> {
    b: &'a SupportBox,
    table: &'a VarTable,
}

impl fmt::Display for SupportBoxDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.constraints.is_empty() {
            return write!(f, "all points");
        }
        for (i, c) in self.b.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} >= 0", c.display(self.table))?;
        }
        Ok(())
    }
}

/// `1/n` as an exact rational.
fn qr_one_over(n: i64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n))
}

/// `(w + c)! / w!` as a factored rational value over linear forms.
fn factorial_ratio(table: &Arc<VarTable>, w: &LinForm, c: i64) -> Factored {
    let mut acc = Factored::one(table);
    if c >= 0 {
        for j in 1..=c {
            acc = acc.mul(&Factored::from_linform(table, &w.add_const(j)));
        }
    } else {
        for j in 0..(-c) {
            acc = acc.mul(&Factored::from_linform(table, &w.add_const(-j)).recip());
        }
    }
    acc
}

/// Exact binomial coefficient under the chosen convention.
pub fn binomial_int(n: i64, k: i64, convention: Convention) -> BigInt {
    match convention {
        Convention::Combinatorial => binom_core(n, k),
        Convention::Extended => {
            if n >= 0 {
                binom_core(n, k)
            } else if k >= 0 {
                // C(n,k) = (-1)^k C(-n+k-1, k)
                let v = binom_core(-n + k - 1, k);
                if k % 2 == 0 {
                    v
                } else {
                    -v
                }
            } else if k <= n {
                // C(n,k) = (-1)^(n-k) C(-k-1, n-k)
                let v = binom_core(-k - 1, n - k);
                if (n - k) % 2 == 0 {
                    v
                } else {
                    -v
                }
            } else {
                BigInt::zero()
            }
        }
    }
}

/// `C(n,k)` for the region `0 ≤ k ≤ n`; zero elsewhere.
fn binom_core(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 1..=k {
        num *= BigInt::from(n - k + j);
        den *= BigInt::from(j);
    }
    num / den
}

impl HyperTerm {
    fn fmt_factor(&self, f: &mut fmt::Formatter<'_>, factor: &TermFactor) -> fmt::Result {
        match factor {
            TermFactor::Binomial(t, b) => write!(
                f,
                "Binomial({}, {})",
                t.display(&self.table),
                b.display(&self.table)
            ),
            TermFactor::Power(base, e) => {
                write!(f, "Pow({}, {})", base, e.display(&self.table))
            }
            TermFactor::RatFactor(r) => write!(f, "Rat({}, {})", r.num(), r.den()),
            TermFactor::GammaRatio(u) => write!(f, "GammaRatio({})", u.display(&self.table)),
        }
    }
}

impl fmt::Display for HyperTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factors.len() {
            0 => write!(f, "1"),
            1 => self.fmt_factor(f, &self.factors[0]),
            _ => {
                write!(f, "Mul(")?;
                for (i, factor) in self.factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    self.fmt_factor(f, factor)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parse node: rational values stay rational until a structural factor
/// forces a term.
enum HNode {
    Pure(RatFun),
    Term(HyperTerm),
}

struct SummandAtoms<'t> {
    table: &'t Arc<VarTable>,
}

impl SummandAtoms<'_> {
    fn to_term(&self, n: HNode) -> HyperTerm {
        match n {
            HNode::Pure(r) => HyperTerm::one(self.table).rational(r),
            HNode::Term(t) => t,
        }
    }

    fn pure_of(&self, n: HNode, pos: usize, what: &str) -> Result<RatFun, ParseError> {
        match n {
            HNode::Pure(r) => Ok(r),
            HNode::Term(t) => match t.as_pure_rational() {
                Some(r) => Ok(r),
                None => err(pos, format!("{what} must be a rational expression")),
            },
        }
    }

    fn linform_of(&self, n: HNode, pos: usize, what: &str) -> Result<LinForm, ParseError> {
        let r = self.pure_of(n, pos, what)?;
        if !r.is_polynomial() {
            return err(pos, format!("{what} must be an integer-linear form"));
        }
        LinForm::from_mpoly(r.num()).ok_or_else(|| ParseError {
            pos,
            msg: format!("{what} must be an integer-linear form"),
        })
    }
}

impl Atoms for SummandAtoms<'_> {
    type Node = HNode;

    fn number(&self, n: BigInt) -> HNode {
        HNode::Pure(RatFun::constant(self.table, BigRational::from_integer(n)))
    }

    fn name(&self, name: &str, pos: usize) -> Result<HNode, ParseError> {
        match self.table.lookup(name) {
            Some(v) => Ok(HNode::Pure(RatFun::var(self.table, v))),
            None => err(pos, format!("unknown variable {name:?}")),
        }
    }

    fn call(&self, name: &str, pos: usize, args: Vec<HNode>) -> Result<HNode, ParseError> {
        let argn = args.len();
        let mut args = args.into_iter();
        match name {
            "Binomial" => {
                if argn != 2 {
                    return err(pos, "Binomial takes exactly two arguments");
                }
                let t = self.linform_of(args.next().unwrap(), pos, "Binomial argument")?;
                let b = self.linform_of(args.next().unwrap(), pos, "Binomial argument")?;
                Ok(HNode::Term(HyperTerm::one(self.table).binomial(t, b)))
            }
            "Pow" => {
                if argn != 2 {
                    return err(pos, "Pow takes exactly two arguments");
                }
                let base = self.pure_of(args.next().unwrap(), pos, "Pow base")?;
                let e = self.linform_of(args.next().unwrap(), pos, "Pow exponent")?;
                Ok(HNode::Term(HyperTerm::one(self.table).power(base, e)))
            }
            "Rat" => match argn {
                1 => Ok(HNode::Pure(self.pure_of(
                    args.next().unwrap(),
                    pos,
                    "Rat argument",
                )?)),
                2 => {
                    let p = self.pure_of(args.next().unwrap(), pos, "Rat numerator")?;
                    let q = self.pure_of(args.next().unwrap(), pos, "Rat denominator")?;
                    if q.is_zero() {
                        return err(pos, "Rat denominator is zero");
                    }
                    Ok(HNode::Pure(p.div(&q)))
                }
                _ => err(pos, "Rat takes one or two arguments"),
            },
            "GammaRatio" => {
                if argn != 1 {
                    return err(pos, "GammaRatio takes exactly one argument");
                }
                let u = self.linform_of(args.next().unwrap(), pos, "GammaRatio argument")?;
                Ok(HNode::Term(HyperTerm::one(self.table).gamma_ratio(u)))
            }
            "Mul" => {
                let mut acc = HNode::Pure(RatFun::one(self.table));
                for a in args {
                    acc = self.mul(acc, a, pos)?;
                }
                Ok(acc)
            }
            other => err(pos, format!("unknown function {other:?}")),
        }
    }

    fn add(&self, a: HNode, b: HNode, pos: usize) -> Result<HNode, ParseError> {
        let a = self.pure_of(a, pos, "addition operand")?;
        let b = self.pure_of(b, pos, "addition operand")?;
        Ok(HNode::Pure(a.add(&b)))
    }

    fn sub(&self, a: HNode, b: HNode, pos: usize) -> Result<HNode, ParseError> {
        let a = self.pure_of(a, pos, "subtraction operand")?;
        let b = self.pure_of(b, pos, "subtraction operand")?;
        Ok(HNode::Pure(a.sub(&b)))
    }

    fn mul(&self, a: HNode, b: HNode, _pos: usize) -> Result<HNode, ParseError> {
        Ok(match (a, b) {
            (HNode::Pure(x), HNode::Pure(y)) => HNode::Pure(x.mul(&y)),
            (x, y) => {
                let xt = self.to_term(x);
                let yt = self.to_term(y);
                HNode::Term(xt.mul(&yt))
            }
        })
    }

    fn div(&self, a: HNode, b: HNode, pos: usize) -> Result<HNode, ParseError> {
        let d = self.pure_of(b, pos, "divisor")?;
        if d.is_zero() {
            return err(pos, "division by zero");
        }
        self.mul(a, HNode::Pure(d.recip()), pos)
    }

    fn pow(&self, a: HNode, e: i32, pos: usize) -> Result<HNode, ParseError> {
        match a {
            HNode::Pure(r) => {
                if e < 0 && r.is_zero() {
                    return err(pos, "negative power of zero");
                }
                Ok(HNode::Pure(r.pow(e)))
            }
            HNode::Term(t) => {
                if e < 0 {
                    return err(pos, "negative power of a structural factor");
                }
                let mut acc = HyperTerm::one(self.table);
                for _ in 0..e {
                    acc = acc.mul(&t);
                }
                Ok(HNode::Term(acc))
            }
        }
    }

    fn neg(&self, a: HNode) -> HNode {
        match a {
            HNode::Pure(r) => HNode::Pure(r.neg()),
            HNode::Term(t) => {
                let minus_one = RatFun::int(&t.table, -1);
                HNode::Term(t.rational(minus_one))
            }
        }
    }
}

/// Parses the summand language: `Binomial(a,b)`, `Pow(base,exp)`,
/// `Rat(p,q)`, `GammaRatio(a)`, `Mul(...)`, combined with ordinary
/// arithmetic over variables and integers.
pub fn parse_hyperterm(input: &str, table: &Arc<VarTable>) -> Result<HyperTerm, ParseError> {
    let atoms = SummandAtoms { table };
    let node = ExprParser::parse(input, &atoms)?;
    Ok(match node {
        HNode::Pure(r) => {
            if r.is_one() {
                HyperTerm::one(table)
            } else {
                HyperTerm::one(table).rational(r)
            }
        }
        HNode::Term(t) => t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::{q, qr};
    use crate::parse::parse_ratfun;

    fn nk_table() -> Arc<VarTable> {
        VarTable::new(&["n", "k"])
    }

    fn c_n_k(t: &Arc<VarTable>) -> HyperTerm {
        HyperTerm::one(t).binomial(LinForm::var(0), LinForm::var(1))
    }

    fn int_point(pairs: &[(VarId, i64)]) -> BTreeMap<VarId, BigRational> {
        pairs.iter().map(|&(v, x)| (v, q(x))).collect()
    }

    #[test]
    fn binomial_conventions_table() {
        // combinatorial: zero outside the triangle
        assert_eq!(binomial_int(5, 2, Convention::Combinatorial), 10.into());
        assert_eq!(binomial_int(-1, 0, Convention::Combinatorial), 0.into());
        assert_eq!(binomial_int(3, 5, Convention::Combinatorial), 0.into());
        assert_eq!(binomial_int(3, -1, Convention::Combinatorial), 0.into());
        // extended seeds
        assert_eq!(binomial_int(-1, 0, Convention::Extended), 1.into());
        assert_eq!(binomial_int(-1, -1, Convention::Extended), 1.into());
        // extended wings
        assert_eq!(binomial_int(-2, 1, Convention::Extended), (-2).into());
        assert_eq!(binomial_int(-3, -3, Convention::Extended), 1.into());
        assert_eq!(binomial_int(-2, -1, Convention::Extended), 0.into());
        // both agree on the classical triangle
        for n in 0..=10 {
            for k in 0..=n {
                assert_eq!(
                    binomial_int(n, k, Convention::Combinatorial),
                    binomial_int(n, k, Convention::Extended)
                );
            }
        }
    }

    #[test]
    fn extended_satisfies_both_recurrences_on_grid() {
        // (n-k+1)C(n+1,k) = (n+1)C(n,k)  and  (k+1)C(n,k+1) = (n-k)C(n,k)
        for n in -10..=10i64 {
            for k in -10..=10i64 {
                let c = binomial_int(n, k, Convention::Extended);
                let cn = binomial_int(n + 1, k, Convention::Extended);
                let ck = binomial_int(n, k + 1, Convention::Extended);
                assert_eq!(
                    BigInt::from(n - k + 1) * &cn,
                    BigInt::from(n + 1) * &c,
                    "n-recurrence fails at ({n},{k})"
                );
                assert_eq!(
                    BigInt::from(k + 1) * &ck,
                    BigInt::from(n - k) * &c,
                    "k-recurrence fails at ({n},{k})"
                );
            }
        }
    }

    #[test]
    fn shift_quotient_of_binomial() {
        let t = nk_table();
        let term = c_n_k(&t);
        let qn = term.shift_quotient(0).unwrap();
        assert_eq!(qn, parse_ratfun("(n + 1)/(n - k + 1)", &t).unwrap());
        let qk = term.shift_quotient(1).unwrap();
        assert_eq!(qk, parse_ratfun("(n - k)/(k + 1)", &t).unwrap());
    }

    #[test]
    fn shift_quotient_of_power() {
        let t = VarTable::new(&["b", "x", "k", "n"]);
        let bx = parse_ratfun("b*x", &t).unwrap();
        let term = HyperTerm::one(&t).power(bx.clone(), LinForm::var(2));
        assert_eq!(term.shift_quotient(2).unwrap(), bx);
        // variable absent from base and exponent: quotient 1
        assert!(term.shift_quotient(3).unwrap().is_one());
        // shifting the base while the exponent moves is not a rational
        // quotient: ((b+1)x)^k / (bx)^k
        assert!(matches!(
            term.shift_quotient(0),
            Err(AlgebraError::NotHypergeometric { .. })
        ));
        // moving base with fixed exponent: n^3 shifted in n
        let n3 = HyperTerm::one(&t).power(
            RatFun::var(&t, 3),
            LinForm::constant(3),
        );
        assert_eq!(
            n3.shift_quotient(3).unwrap(),
            parse_ratfun("(n + 1)^3/n^3", &t).unwrap()
        );
    }

    #[test]
    fn quotient_matches_evaluation_ratio() {
        let t = nk_table();
        let term = c_n_k(&t);
        for v in [0usize, 1usize] {
            let quot = term.shift_quotient(v).unwrap();
            for n in 1..=8i64 {
                for k in 1..k_max(n) {
                    let point = int_point(&[(0, n), (1, k)]);
                    let here = term
                        .eval_term(&point, Convention::Combinatorial, EpsMode::LimitZero)
                        .unwrap();
                    let mut shifted_pt = point.clone();
                    *shifted_pt.get_mut(&v).unwrap() += BigRational::one();
                    let there = term
                        .eval_term(&shifted_pt, Convention::Combinatorial, EpsMode::LimitZero)
                        .unwrap();
                    if here.is_zero() {
                        continue;
                    }
                    let expected = there.div(&here);
                    let got = quot.eval_partial(&point).unwrap();
                    assert_eq!(got, expected, "v={v} n={n} k={k}");
                }
            }
        }
    }

    fn k_max(n: i64) -> i64 {
        n
    }

    #[test]
    fn mixed_shifts_commute() {
        let t = VarTable::new(&["s", "r", "k"]);
        let term = HyperTerm::one(&t)
            .binomial(LinForm::var(0), LinForm::var(1))
            .binomial(
                LinForm::var(2).add_const(-1),
                LinForm::var(1).add_const(-1),
            );
        for (v, w) in [(0usize, 1usize), (1, 2), (0, 2)] {
            let qv = term.shift_quotient(v).unwrap();
            let qw = term.shift_quotient(w).unwrap();
            let lhs = qv.mul(&qw.shift_var(v, 1));
            let rhs = qw.mul(&qv.shift_var(w, 1));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn gamma_ratio_values() {
        let t = VarTable::new(&["u", "eps"]);
        let term = HyperTerm::one(&t)
            .gamma_ratio(LinForm::var(0))
            .with_eps(1);
        // limit-zero: step function
        for (u, want) in [(3i64, 1i64), (1, 1), (0, 0), (-2, 0)] {
            let v = term
                .eval_term(
                    &int_point(&[(0, u)]),
                    Convention::Combinatorial,
                    EpsMode::LimitZero,
                )
                .unwrap();
            assert_eq!(v, RatFun::int(&t, want));
        }
        // symbolic: Γ(3+eps)/Γ(3) = (1+eps)(2+eps)/2
        let v = term
            .eval_term(
                &int_point(&[(0, 3)]),
                Convention::Combinatorial,
                EpsMode::Symbolic,
            )
            .unwrap();
        let expected = parse_ratfun("(1 + eps)*(2 + eps)/2", &t).unwrap();
        assert_eq!(v, expected);
        // symbolic at u <= 0 is exactly zero
        let v = term
            .eval_term(
                &int_point(&[(0, 0)]),
                Convention::Combinatorial,
                EpsMode::Symbolic,
            )
            .unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn gamma_ratio_quotient_is_rational_in_eps() {
        let t = VarTable::new(&["r", "eps"]);
        let term = HyperTerm::one(&t)
            .gamma_ratio(LinForm::var(0))
            .with_eps(1);
        // GR(r+1)/GR(r) = (r+eps)/r
        let quot = term.shift_quotient(0).unwrap();
        assert_eq!(quot, parse_ratfun("(r + eps)/r", &t).unwrap());
        // consistency with symbolic evaluation at r=4
        let here = term
            .eval_term(
                &int_point(&[(0, 4)]),
                Convention::Combinatorial,
                EpsMode::Symbolic,
            )
            .unwrap();
        let there = term
            .eval_term(
                &int_point(&[(0, 5)]),
                Convention::Combinatorial,
                EpsMode::Symbolic,
            )
            .unwrap();
        let ratio = there.div(&here);
        let expected = quot.eval_partial(&int_point(&[(0, 4)])).unwrap();
        assert_eq!(ratio, expected);
    }

    #[test]
    fn annihilators_from_quotients() {
        let t = nk_table();
        let alg = OreAlgebra::new(&t, &[0, 1]);
        let term = c_n_k(&t);
        let ann = term.annihilator_of_term(0, &alg).unwrap();
        assert_eq!(
            ann,
            crate::ore::parse_ore_expr("(n - k + 1)*S_n - (n + 1)", &alg).unwrap()
        );
        // quartic polynomial factor
        let p = parse_ratfun("n^4 - 6*n^3 + 11*n^2 - 6*n", &t)
            .unwrap()
            .scale(&qr(1, 24));
        let poly_term = HyperTerm::one(&t).rational(p);
        let ann = poly_term.annihilator_of_term(0, &alg).unwrap();
        assert_eq!(
            ann,
            crate::ore::parse_ore_expr("(n - 3)*S_n - (n + 1)", &alg).unwrap()
        );
    }

    #[test]
    fn power_annihilator() {
        let t = VarTable::new(&["b", "x", "k"]);
        let alg = OreAlgebra::new(&t, &[2]);
        let bx = parse_ratfun("b*x", &t).unwrap();
        let term = HyperTerm::one(&t).power(bx, LinForm::var(2));
        let ann = term.annihilator_of_term(2, &alg).unwrap();
        assert_eq!(
            ann,
            crate::ore::parse_ore_expr("S_k - b*x", &alg).unwrap()
        );
    }

    #[test]
    fn support_boxes() {
        let t = VarTable::new(&["s", "r", "i"]);
        // C(s,r): 0 <= r <= s
        let term = HyperTerm::one(&t).binomial(LinForm::var(0), LinForm::var(1));
        let boxx = term.support_box(&BTreeMap::new());
        let inside = [(0usize, 5i64), (1, 3)].into_iter().collect();
        let outside = [(0usize, 5i64), (1, 6)].into_iter().collect();
        let negative = [(0usize, 5i64), (1, -1)].into_iter().collect();
        assert!(boxx.contains(&inside));
        assert!(!boxx.contains(&outside));
        assert!(!boxx.contains(&negative));
        // C(r-1,i): 0 <= i <= r-1
        let term2 = HyperTerm::one(&t).binomial(
            LinForm::var(1).add_const(-1),
            LinForm::var(2),
        );
        let boxx2 = term2.support_box(&BTreeMap::new());
        let edge = [(1usize, 4i64), (2, 3)].into_iter().collect();
        let past = [(1usize, 4i64), (2, 4)].into_iter().collect();
        assert!(boxx2.contains(&edge));
        assert!(!boxx2.contains(&past));
    }

    #[test]
    fn support_matches_evaluation() {
        let t = VarTable::new(&["s", "r"]);
        let term = HyperTerm::one(&t).binomial(LinForm::var(0), LinForm::var(1));
        let boxx = term.support_box(&BTreeMap::new());
        for s in -3..=6i64 {
            for r in -3..=8i64 {
                let val = term
                    .eval_term(
                        &int_point(&[(0, s), (1, r)]),
                        Convention::Combinatorial,
                        EpsMode::LimitZero,
                    )
                    .unwrap();
                let point = [(0usize, s), (1usize, r)].into_iter().collect();
                assert_eq!(boxx.contains(&point), !val.is_zero(), "s={s} r={r}");
            }
        }
    }

    #[test]
    fn substitution_and_shift() {
        let t = nk_table();
        let term = c_n_k(&t);
        // k -> n + 1 makes C(n, n+1): identically zero on integers
        let sub = term
            .substitute_var(1, &LinForm::var(0).add_const(1))
            .unwrap();
        for n in 0..6 {
            let v = sub
                .eval_term(
                    &int_point(&[(0, n)]),
                    Convention::Combinatorial,
                    EpsMode::LimitZero,
                )
                .unwrap();
            assert!(v.is_zero());
        }
        // shift n by 1: C(n+1, k)
        let shifted = term.shift_var(0, 1);
        let v = shifted
            .eval_term(
                &int_point(&[(0, 4), (1, 2)]),
                Convention::Combinatorial,
                EpsMode::LimitZero,
            )
            .unwrap();
        assert_eq!(v, RatFun::int(&t, 10));
    }

    #[test]
    fn composed_shift_ratios() {
        let t = nk_table();
        let term = c_n_k(&t);
        // C(n+1,k+1)/C(n,k) = (n+1)/(k+1)
        let shifts = [(0usize, 1i64), (1, 1)].into_iter().collect();
        let ratio = term.shift_ratio_factored(&shifts).unwrap().to_ratfun();
        assert_eq!(ratio, parse_ratfun("(n + 1)/(k + 1)", &t).unwrap());
        // C(n-1,k)/C(n,k) = (n-k)/n
        let down = [(0usize, -1i64)].into_iter().collect();
        let ratio = term.shift_ratio_factored(&down).unwrap().to_ratfun();
        assert_eq!(ratio, parse_ratfun("(n - k)/n", &t).unwrap());
        // consistency with single-step quotient
        let up = [(1usize, 1i64)].into_iter().collect();
        assert_eq!(
            term.shift_ratio_factored(&up).unwrap().to_ratfun(),
            term.shift_quotient(1).unwrap()
        );
    }

    #[test]
    fn closed_form_reduction() {
        let t = nk_table();
        // C(n,n) -> 1
        let diag = HyperTerm::one(&t).binomial(LinForm::var(0), LinForm::var(0));
        assert!(diag.reduce_closed().unwrap().as_pure_rational().unwrap().is_one());
        // C(n+1,n) -> n+1
        let sub = HyperTerm::one(&t).binomial(
            LinForm::var(0).add_const(1),
            LinForm::var(0),
        );
        assert_eq!(
            sub.reduce_closed().unwrap().as_pure_rational().unwrap(),
            parse_ratfun("n + 1", &t).unwrap()
        );
        // 5/(n-4) * C(n,5) -> n(n-1)(n-2)(n-3)/24
        let term = HyperTerm::one(&t)
            .binomial(LinForm::var(0), LinForm::constant(5))
            .rational(parse_ratfun("5/(n - 4)", &t).unwrap());
        assert_eq!(
            term.reduce_closed().unwrap().as_pure_rational().unwrap(),
            parse_ratfun("(n^4 - 6*n^3 + 11*n^2 - 6*n)/24", &t).unwrap()
        );
        // binomial with negative constant bottom is identically zero
        let z = HyperTerm::one(&t).binomial(LinForm::var(0), LinForm::constant(-2));
        assert!(z.reduce_closed().unwrap().as_pure_rational().unwrap().is_zero());
        // non-constant shapes survive
        let live = c_n_k(&t).reduce_closed().unwrap();
        assert!(live.as_pure_rational().is_none());
    }

    #[test]
    fn parser_round_trips() {
        let t = VarTable::new(&["b", "x", "m", "s", "k", "r", "i", "eps"]);
        let sources = [
            "Binomial(s, r)",
            "Mul(Binomial(s, r), Binomial(k - 1, r - 1), Pow(b*x, k))",
            "Mul(Binomial(s, r), Rat(b - 1, b), GammaRatio(r - i - k + m))",
            "1",
        ];
        for src in sources {
            let term = parse_hyperterm(src, &t).unwrap();
            let printed = term.to_string();
            let again = parse_hyperterm(&printed, &t).unwrap();
            assert_eq!(term, again, "round trip through {printed}");
        }
        // arithmetic forms normalize into factors
        let a = parse_hyperterm("Binomial(s, r) * (b - 1)/b", &t).unwrap();
        let b = parse_hyperterm("Mul(Binomial(s, r), Rat(b - 1, b))", &t).unwrap();
        assert_eq!(a, b);
        // structural factors cannot be added
        assert!(parse_hyperterm("Binomial(s, r) + 1", &t).is_err());
    }

    #[test]
    fn eval_rejects_symbolic_binomial_argument() {
        let t = nk_table();
        let term = c_n_k(&t);
        let v = term.eval_term(
            &int_point(&[(0, 4)]),
            Convention::Combinatorial,
            EpsMode::LimitZero,
        );
        assert!(matches!(
            v,
            Err(AlgebraError::NonIntegerArgument { .. })
        ));
    }

    #[test]
    fn symbolic_base_stays_symbolic() {
        let t = VarTable::new(&["x", "k"]);
        let xk = HyperTerm::one(&t).power(RatFun::var(&t, 0), LinForm::var(1));
        let v = xk
            .eval_term(
                &int_point(&[(1, 3)]),
                Convention::Combinatorial,
                EpsMode::LimitZero,
            )
            .unwrap();
        assert_eq!(v, parse_ratfun("x^3", &t).unwrap());
    }
}
