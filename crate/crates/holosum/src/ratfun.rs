//! Reduced rational functions over `Q`.
//!
//! A [`RatFun`] keeps a numerator/denominator pair in canonical form:
//! the fraction is reduced (no common polynomial factor), the denominator
//! is an integer-coefficient polynomial with content 1 and positive leading
//! coefficient in graded-lexicographic order, and any rational scaling is
//! folded into the numerator.  Structural equality therefore decides
//! mathematical equality.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{One, Zero};
use thiserror::Error;

use crate::gcd::gcd;
use crate::mpoly::MPoly;
use crate::vars::{VarId, VarTable};

/// Errors raised by exact-algebra evaluation paths.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("evaluation hits a pole: denominator {den} vanishes")]
    Pole { den: String },
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("value is not constant after evaluation: {rest}")]
    NotConstant { rest: String },
    #[error("operator is not univariate in the requested shift symbol")]
    NotUnivariate,
    #[error("argument {arg} does not evaluate to an integer at the given point")]
    NonIntegerArgument { arg: String },
    #[error("gamma-ratio factor needs a designated epsilon variable")]
    MissingEpsilon,
    #[error("term is not hypergeometric in the requested variable: {what}")]
    NotHypergeometric { what: String },
}

/// A reduced rational function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFun {
    num: MPoly,
    den: MPoly,
}

impl RatFun {
    /// Builds and reduces `num/den`.  Panics when `den` is the zero
    /// polynomial (a programming error, not a data condition).
    pub fn new(num: MPoly, den: MPoly) -> RatFun {
        assert!(!den.is_zero(), "rational function with zero denominator");
        let mut r = RatFun { num, den };
        r.reduce();
        r
    }

    pub fn from_poly(p: MPoly) -> RatFun {
        let den = MPoly::one(&p.table);
        RatFun { num: p, den }
    }

    pub fn zero(table: &Arc<VarTable>) -> RatFun {
        RatFun::from_poly(MPoly::zero(table))
    }

    pub fn one(table: &Arc<VarTable>) -> RatFun {
        RatFun::from_poly(MPoly::one(table))
    }

    pub fn int(table: &Arc<VarTable>, n: i64) -> RatFun {
        RatFun::from_poly(MPoly::int(table, n))
    }

    pub fn constant(table: &Arc<VarTable>, c: BigRational) -> RatFun {
        RatFun::from_poly(MPoly::constant(table, c))
    }

    pub fn var(table: &Arc<VarTable>, v: VarId) -> RatFun {
        RatFun::from_poly(MPoly::var(table, v))
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.num.table
    }

    pub fn num(&self) -> &MPoly {
        &self.num
    }

    pub fn den(&self) -> &MPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The constant value when both parts are constants.
    pub fn constant_value(&self) -> Option<BigRational> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(n / d)
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = MPoly::one(&self.num.table);
            return;
        }
        if !self.den.is_constant() {
            let g = gcd(&self.num, &self.den);
            if !g.is_one() && !g.is_constant() {
                self.num = self.num.exact_div(&g).expect("gcd divides numerator");
                self.den = self.den.exact_div(&g).expect("gcd divides denominator");
            }
        }
        // Normalize the denominator to its primitive positive form, folding
        // the unit into the numerator.
        let c = self.den.signed_content();
        if !c.is_one() {
            self.den = self.den.scale(&c.clone().recip());
            self.num = self.num.scale(&c.recip());
        }
    }

    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        let num = self
            .num
            .mul(&other.den)
            .add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFun::new(num, den)
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn scale(&self, c: &BigRational) -> RatFun {
        RatFun {
            num: self.num.scale(c),
            den: if c.is_zero() {
                MPoly::one(&self.num.table)
            } else {
                self.den.clone()
            },
        }
    }

    /// Multiplicative inverse; panics on zero (programming error).
    pub fn recip(&self) -> RatFun {
        assert!(!self.is_zero(), "inverse of zero rational function");
        RatFun::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RatFun) -> RatFun {
        assert!(!other.is_zero(), "division by zero rational function");
        self.mul(&other.recip())
    }

    pub fn pow(&self, e: i32) -> RatFun {
        if e == 0 {
            return RatFun::one(&self.num.table);
        }
        let base = if e < 0 { self.recip() } else { self.clone() };
        let mut out = RatFun::one(&self.num.table);
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// Partial evaluation: substitutes rational values for some variables.
    /// Errors when the denominator vanishes under the binding.
    pub fn eval_partial(
        &self,
        bindings: &BTreeMap<VarId, BigRational>,
    ) -> Result<RatFun, AlgebraError> {
        let den = self.den.eval_partial(bindings);
        if den.is_zero() {
            return Err(AlgebraError::Pole {
                den: self.den.to_string(),
            });
        }
        let num = self.num.eval_partial(bindings);
        Ok(RatFun::new(num, den))
    }

    /// Full evaluation to a rational number.
    pub fn eval_all(
        &self,
        bindings: &BTreeMap<VarId, BigRational>,
    ) -> Result<BigRational, AlgebraError> {
        let r = self.eval_partial(bindings)?;
        r.constant_value().ok_or_else(|| AlgebraError::NotConstant {
            rest: r.to_string(),
        })
    }

    /// Substitutes a polynomial for one variable; errors when the
    /// denominator collapses to zero.
    pub fn substitute(&self, v: VarId, replacement: &MPoly) -> Result<RatFun, AlgebraError> {
        let den = self.den.substitute(v, replacement);
        if den.is_zero() {
            return Err(AlgebraError::Pole {
                den: self.den.to_string(),
            });
        }
        Ok(RatFun::new(self.num.substitute(v, replacement), den))
    }

    /// Shift `v -> v + offset`; total (denominators cannot collapse).
    pub fn shift_var(&self, v: VarId, offset: i64) -> RatFun {
        RatFun {
            num: self.num.shift_var(v, offset),
            den: self.den.shift_var(v, offset),
        }
    }

    /// Applies several integer shifts at once.
    pub fn shift_vars(&self, shifts: &BTreeMap<VarId, i64>) -> RatFun {
        let mut out = self.clone();
        for (&v, &o) in shifts {
            if o != 0 {
                out = out.shift_var(v, o);
            }
        }
        out
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::{q, qr};
    use crate::vars::VarTable;

    fn nk() -> Arc<VarTable> {
        VarTable::new(&["n", "k"])
    }

    fn n(t: &Arc<VarTable>) -> MPoly {
        MPoly::var(t, 0)
    }
    fn k(t: &Arc<VarTable>) -> MPoly {
        MPoly::var(t, 1)
    }

    #[test]
    fn reduces_on_construction() {
        let t = nk();
        let num = n(&t).mul(&n(&t)).sub(&MPoly::one(&t)); // n^2 - 1
        let den = n(&t).sub(&MPoly::one(&t)); // n - 1
        let r = RatFun::new(num, den);
        assert!(r.is_polynomial());
        assert_eq!(r.num(), &n(&t).add(&MPoly::one(&t)));
    }

    #[test]
    fn denominator_normalization() {
        let t = nk();
        // 1 / (-2n + 2)  ->  (-1/2) / (n - 1)
        let r = RatFun::new(MPoly::one(&t), n(&t).scale(&q(-2)).add(&MPoly::int(&t, 2)));
        assert_eq!(r.den(), &n(&t).sub(&MPoly::one(&t)));
        assert_eq!(r.num(), &MPoly::constant(&t, qr(-1, 2)));
    }

    #[test]
    fn canonical_equality() {
        let t = nk();
        let a = RatFun::new(n(&t).scale(&q(2)), MPoly::int(&t, 2));
        let b = RatFun::from_poly(n(&t));
        assert_eq!(a, b);
    }

    #[test]
    fn certificate_evaluation() {
        // k/(k - n - 1) at k=5, n=7 is -5/3
        let t = nk();
        let r = RatFun::new(
            k(&t),
            k(&t).sub(&n(&t)).sub(&MPoly::one(&t)),
        );
        let mut b = BTreeMap::new();
        b.insert(1usize, q(5));
        b.insert(0usize, q(7));
        assert_eq!(r.eval_all(&b).unwrap(), qr(-5, 3));
    }

    #[test]
    fn empty_binding_is_identity() {
        let t = nk();
        let r = RatFun::new(k(&t), n(&t).add(&MPoly::one(&t)));
        assert_eq!(r.eval_partial(&BTreeMap::new()).unwrap(), r);
    }

    #[test]
    fn pole_detection() {
        let t = nk();
        // 1/(k - n - 1) at k=8, n=7 hits the pole
        let r = RatFun::new(
            MPoly::one(&t),
            k(&t).sub(&n(&t)).sub(&MPoly::one(&t)),
        );
        let mut b = BTreeMap::new();
        b.insert(1usize, q(8));
        b.insert(0usize, q(7));
        assert!(matches!(r.eval_all(&b), Err(AlgebraError::Pole { .. })));
    }

    #[test]
    fn affine_substitution_pole() {
        let t = nk();
        let r = RatFun::new(
            MPoly::one(&t),
            k(&t).sub(&n(&t)).sub(&MPoly::one(&t)),
        );
        // k -> n + 1 collapses the denominator identically
        let repl = n(&t).add(&MPoly::one(&t));
        assert!(matches!(
            r.substitute(1, &repl),
            Err(AlgebraError::Pole { .. })
        ));
        // k -> n stays fine
        let ok = r.substitute(1, &n(&t)).unwrap();
        assert_eq!(ok, RatFun::int(&t, -1));
    }

    #[test]
    fn field_laws_spot_check() {
        let t = nk();
        let a = RatFun::new(n(&t).add(&MPoly::one(&t)), k(&t).add(&MPoly::int(&t, 2)));
        let b = RatFun::new(k(&t), n(&t).sub(&k(&t)).add(&MPoly::int(&t, 1)));
        let c = RatFun::new(MPoly::int(&t, 3), n(&t).add(&k(&t)).add(&MPoly::one(&t)));
        // distributivity
        let lhs = a.mul(&b.add(&c));
        let rhs = a.mul(&b).add(&a.mul(&c));
        assert_eq!(lhs, rhs);
        // inverse
        assert!(a.mul(&a.recip()).is_one());
        // shift round-trip
        assert_eq!(a.shift_var(0, 3).shift_var(0, -3), a);
    }
}
