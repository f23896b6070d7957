//! Rational values kept as products of primitive polynomial factors.
//!
//! Shift quotients of hypergeometric terms are built from linear forms, so
//! keeping them as `coefficient · Π factorᵉ` instead of expanded
//! numerator/denominator pairs makes common denominators, zero tests, and
//! shifts cheap — no polynomial gcd is ever needed on this path.  Each
//! factor key is primitive (integer content 1) with a positive leading
//! coefficient; rational content lives in the scalar coefficient.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{One, Zero};

use crate::linform::LinForm;
use crate::mpoly::MPoly;
use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::{VarId, VarTable};

/// `coeff · Π factorᵉ`; zero iff `coeff == 0` (then no factors).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factored {
    table: Arc<VarTable>,
    coeff: BigRational,
    factors: BTreeMap<MPoly, i64>,
}

impl Factored {
    pub fn one(table: &Arc<VarTable>) -> Factored {
        Factored {
            table: table.clone(),
            coeff: BigRational::one(),
            factors: BTreeMap::new(),
        }
    }

    pub fn zero(table: &Arc<VarTable>) -> Factored {
        Factored {
            table: table.clone(),
            coeff: BigRational::zero(),
            factors: BTreeMap::new(),
        }
    }

    pub fn from_rational(table: &Arc<VarTable>, c: BigRational) -> Factored {
        Factored {
            table: table.clone(),
            coeff: c,
            factors: BTreeMap::new(),
        }
    }

    pub fn from_int(table: &Arc<VarTable>, n: i64) -> Factored {
        Factored::from_rational(table, BigRational::from_integer(n.into()))
    }

    /// A single polynomial factor (content split off automatically).
    pub fn from_poly(table: &Arc<VarTable>, p: &MPoly) -> Factored {
        let mut f = Factored::one(table);
        f.push(p, 1);
        f
    }

    pub fn from_linform(table: &Arc<VarTable>, lf: &LinForm) -> Factored {
        Factored::from_poly(table, &lf.to_mpoly(table))
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.coeff.is_one() && self.factors.is_empty()
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    /// Iterates `(factor, exponent)` pairs in canonical order.
    pub fn factors(&self) -> impl Iterator<Item = (&MPoly, i64)> {
        self.factors.iter().map(|(p, &e)| (p, e))
    }

    /// Multiplies `factorᵉ` in, normalizing the key to primitive positive
    /// leading form.  Panics on `0^e` with `e ≤ 0`.
    pub fn push(&mut self, factor: &MPoly, e: i64) {
        if self.is_zero() || e == 0 {
            return;
        }
        if factor.is_zero() {
            assert!(e > 0, "zero factor with nonpositive exponent");
            *self = Factored::zero(&self.table);
            return;
        }
        let content = factor.signed_content();
        self.coeff *= pow_rational(&content, e);
        let prim = factor
            .exact_div(&MPoly::constant(&self.table, content))
            .expect("content divides");
        if prim.is_one() {
            return;
        }
        let cur = self.factors.entry(prim.clone()).or_insert(0);
        *cur += e;
        if *cur == 0 {
            self.factors.remove(&prim);
        }
    }

    pub fn mul(&self, other: &Factored) -> Factored {
        if self.is_zero() || other.is_zero() {
            return Factored::zero(&self.table);
        }
        let mut out = self.clone();
        out.coeff *= other.coeff.clone();
        for (p, &e) in &other.factors {
            let cur = out.factors.entry(p.clone()).or_insert(0);
            *cur += e;
            if *cur == 0 {
                out.factors.remove(p);
            }
        }
        out
    }

    /// Raises to an integer power; panics for `0^e`, `e ≤ 0`.
    pub fn pow(&self, e: i64) -> Factored {
        if e == 0 {
            return Factored::one(&self.table);
        }
        if self.is_zero() {
            assert!(e > 0, "zero to a nonpositive power");
            return self.clone();
        }
        Factored {
            table: self.table.clone(),
            coeff: pow_rational(&self.coeff, e),
            factors: self
                .factors
                .iter()
                .map(|(p, &k)| (p.clone(), k * e))
                .collect(),
        }
    }

    pub fn recip(&self) -> Factored {
        self.pow(-1)
    }

    pub fn div(&self, other: &Factored) -> Factored {
        self.mul(&other.recip())
    }

    pub fn neg(&self) -> Factored {
        let mut out = self.clone();
        out.coeff = -out.coeff;
        out
    }

    /// Shifts a variable; factor keys stay primitive under integer shifts.
    pub fn shift_var(&self, v: VarId, offset: i64) -> Factored {
        if offset == 0 {
            return self.clone();
        }
        Factored {
            table: self.table.clone(),
            coeff: self.coeff.clone(),
            factors: self
                .factors
                .iter()
                .map(|(p, &e)| (p.shift_var(v, offset), e))
                .collect(),
        }
    }

    pub fn shift_vars(&self, shifts: &BTreeMap<VarId, i64>) -> Factored {
        let mut out = self.clone();
        for (&v, &o) in shifts {
            out = out.shift_var(v, o);
        }
        out
    }

    /// Substitutes an integer-affine form for a variable.  Errors when a
    /// factor with negative exponent collapses to zero (a pole).
    pub fn substitute_affine(
        &self,
        v: VarId,
        replacement: &LinForm,
    ) -> Result<Factored, AlgebraError> {
        let rep = replacement.to_mpoly(&self.table);
        let mut out = Factored::from_rational(&self.table, self.coeff.clone());
        for (p, &e) in &self.factors {
            let s = p.substitute(v, &rep);
            if s.is_zero() {
                if e < 0 {
                    return Err(AlgebraError::Pole { den: p.to_string() });
                }
                return Ok(Factored::zero(&self.table));
            }
            out.push(&s, e);
        }
        Ok(out)
    }

    /// Exact evaluation.  A vanishing negative-exponent factor is a pole
    /// even when another factor vanishes too (0/0 stays undefined).
    pub fn eval_all(
        &self,
        bindings: &BTreeMap<VarId, BigRational>,
    ) -> Result<BigRational, AlgebraError> {
        let mut acc = self.coeff.clone();
        let mut zero_seen = false;
        for (p, &e) in &self.factors {
            let val = p.eval_all(bindings);
            if val.is_zero() {
                if e < 0 {
                    return Err(AlgebraError::Pole { den: p.to_string() });
                }
                zero_seen = true;
            } else if !zero_seen {
                acc *= pow_rational(&val, e);
            }
        }
        Ok(if zero_seen { BigRational::zero() } else { acc })
    }

    /// Expands to a reduced rational function.
    pub fn to_ratfun(&self) -> RatFun {
        let mut num = MPoly::constant(&self.table, self.coeff.clone());
        let mut den = MPoly::one(&self.table);
        for (p, &e) in &self.factors {
            if e > 0 {
                num = num.mul(&p.pow(e as u32));
            } else {
                den = den.mul(&p.pow((-e) as u32));
            }
        }
        RatFun::new(num, den)
    }

    /// Expands the product directly; requires all exponents nonnegative.
    pub fn expand_poly(&self) -> MPoly {
        let mut out = MPoly::constant(&self.table, self.coeff.clone());
        for (p, &e) in &self.factors {
            assert!(e >= 0, "expand_poly on a factor with negative exponent");
            out = out.mul(&p.pow(e as u32));
        }
        out
    }

    /// The numerator (coefficient dropped) as a factored value.
    pub fn numerator_part(&self) -> Factored {
        Factored {
            table: self.table.clone(),
            coeff: BigRational::one(),
            factors: self
                .factors
                .iter()
                .filter(|(_, &e)| e > 0)
                .map(|(p, &e)| (p.clone(), e))
                .collect(),
        }
    }

    /// The denominator as a factored value with positive exponents.
    pub fn denominator_part(&self) -> Factored {
        Factored {
            table: self.table.clone(),
            coeff: BigRational::one(),
            factors: self
                .factors
                .iter()
                .filter(|(_, &e)| e < 0)
                .map(|(p, &e)| (p.clone(), -e))
                .collect(),
        }
    }
}

/// Factor-wise least common multiple of the denominators of several
/// factored values (exponent = max requirement per factor key).
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Factored>) -> Factored {
    let mut table = None;
    let mut factors: BTreeMap<MPoly, i64> = BTreeMap::new();
    for v in values {
        table.get_or_insert_with(|| v.table.clone());
        for (p, &e) in &v.factors {
            if e < 0 {
                let cur = factors.entry(p.clone()).or_insert(0);
                *cur = (*cur).max(-e);
            }
        }
    }
    let table = table.expect("at least one factored value");
    factors.retain(|_, e| *e != 0);
    Factored {
        table,
        coeff: BigRational::one(),
        factors,
    }
}

fn pow_rational(c: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num::pow::pow(c.clone(), e as usize)
    } else {
        num::pow::pow(c.clone(), (-e) as usize).recip()
    }
}

impl fmt::Display for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "{}", self.coeff);
        }
        if self.coeff.is_one() {
            let mut first = true;
            for (p, e) in self.factors() {
                if !first {
                    write!(f, " * ")?;
                }
                first = false;
                write_factor(f, p, e)?;
            }
            return Ok(());
        }
        write!(f, "{}", self.coeff)?;
        for (p, e) in self.factors() {
            write!(f, " * ")?;
            write_factor(f, p, e)?;
        }
        Ok(())
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, p: &MPoly, e: i64) -> fmt::Result {
    if e == 1 {
        write!(f, "({p})")
    } else {
        write!(f, "({p})^{e}")
    }
}
