//! Multivariate polynomials with exact rational coefficients.
//!
//! An [`MPoly`] is a map from dense exponent vectors to nonzero
//! `BigRational` coefficients over a shared [`VarTable`].  The monomial
//! order is graded lexicographic with ties broken by table order; the text
//! form printed by `Display` lists terms in descending order of that
//! ranking and is the canonical form parsed back by [`crate::parse`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::vars::{same_table, VarId, VarTable, MAX_VARS};

/// Shorthand for an integer-valued rational.
pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Shorthand for the rational `n/d`.
pub fn qr(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Dense exponent vector.  Entries beyond the table length stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Expo(pub [u16; MAX_VARS]);

impl Expo {
    pub fn zero() -> Expo {
        Expo([0; MAX_VARS])
    }

    pub fn of_var(v: VarId) -> Expo {
        let mut e = Expo::zero();
        e.0[v] = 1;
        e
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Component-wise sum; panics on overflow of a `u16` slot.
    pub fn add(&self, other: &Expo) -> Expo {
        let mut out = [0u16; MAX_VARS];
        for i in 0..MAX_VARS {
            out[i] = self.0[i]
                .checked_add(other.0[i])
                .expect("exponent overflow");
        }
        Expo(out)
    }

    /// Component-wise difference when `other` divides `self`.
    pub fn checked_sub(&self, other: &Expo) -> Option<Expo> {
        let mut out = [0u16; MAX_VARS];
        for i in 0..MAX_VARS {
            out[i] = self.0[i].checked_sub(other.0[i])?;
        }
        Some(Expo(out))
    }
}

impl Ord for Expo {
    /// Graded lexicographic: higher total degree ranks higher; ties compare
    /// exponents in table order, larger exponent on the earlier variable
    /// ranking higher.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total().cmp(&other.total()) {
            Ordering::Equal => self.0.cmp(&other.0),
            ord => ord,
        }
    }
}

impl PartialOrd for Expo {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A multivariate polynomial over `Q`.
#[derive(Clone, Debug)]
pub struct MPoly {
    pub table: Arc<VarTable>,
    /// Exponent vector -> nonzero coefficient.
    pub terms: BTreeMap<Expo, BigRational>,
}

impl PartialEq for MPoly {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.table, &other.table) && self.terms == other.terms
    }
}

impl Eq for MPoly {}

/// Term-map ordering (assumes a shared table); lets polynomials key
/// ordered maps, e.g. factor lists in factored rational products.
impl Ord for MPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert!(same_table(&self.table, &other.table));
        self.terms.cmp(&other.terms)
    }
}

impl PartialOrd for MPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MPoly {
    pub fn zero(table: &Arc<VarTable>) -> MPoly {
        MPoly {
            table: table.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(table: &Arc<VarTable>, c: BigRational) -> MPoly {
        let mut p = MPoly::zero(table);
        if !c.is_zero() {
            p.terms.insert(Expo::zero(), c);
        }
        p
    }

    pub fn one(table: &Arc<VarTable>) -> MPoly {
        MPoly::constant(table, BigRational::one())
    }

    pub fn int(table: &Arc<VarTable>, n: i64) -> MPoly {
        MPoly::constant(table, q(n))
    }

    pub fn var(table: &Arc<VarTable>, v: VarId) -> MPoly {
        assert!(v < table.len(), "variable id out of range");
        let mut p = MPoly::zero(table);
        p.terms.insert(Expo::of_var(v), BigRational::one());
        p
    }

    pub fn monomial(table: &Arc<VarTable>, e: Expo, c: BigRational) -> MPoly {
        let mut p = MPoly::zero(table);
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(|e| e.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && self.constant_value().map_or(false, |c| c.is_one())
    }

    /// The constant coefficient when the polynomial is constant.
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_constant() {
            Some(
                self.terms
                    .get(&Expo::zero())
                    .cloned()
                    .unwrap_or_else(BigRational::zero),
            )
        } else {
            None
        }
    }

    /// Total degree; zero polynomial reports 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.total()).max().unwrap_or(0)
    }

    /// Degree in one variable; zero polynomial reports 0.
    pub fn degree_in(&self, v: VarId) -> u16 {
        self.terms.keys().map(|e| e.0[v]).max().unwrap_or(0)
    }

    /// True when the variable occurs in some term.
    pub fn depends_on(&self, v: VarId) -> bool {
        self.terms.keys().any(|e| e.0[v] > 0)
    }

    /// Leading (grlex-greatest) term.
    pub fn leading(&self) -> Option<(&Expo, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Leading coefficient; zero for the zero polynomial.
    pub fn leading_coeff(&self) -> BigRational {
        self.leading()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    fn assert_same_table(&self, other: &MPoly) {
        assert!(
            same_table(&self.table, &other.table),
            "operands use different variable tables"
        );
    }

    fn insert_add(&mut self, e: Expo, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                let sum = slot.get() + c;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        self.assert_same_table(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(*e, c.clone());
        }
        out
    }

    pub fn neg(&self) -> MPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.assert_same_table(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(*e, -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        self.assert_same_table(other);
        let mut out = MPoly::zero(&self.table);
        if self.is_zero() || other.is_zero() {
            return out;
        }
        // Iterate the smaller operand outside for fewer passes.
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (e1, c1) in &small.terms {
            for (e2, c2) in &large.terms {
                out.insert_add(e1.add(e2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(&self.table);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn pow(&self, n: u32) -> MPoly {
        let mut out = MPoly::one(&self.table);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Exact division; `None` when `self` is not a polynomial multiple of
    /// `div`.
    pub fn exact_div(&self, div: &MPoly) -> Option<MPoly> {
        self.assert_same_table(div);
        assert!(!div.is_zero(), "division by zero polynomial");
        let mut rem = self.clone();
        let mut quo = MPoly::zero(&self.table);
        let (de, dc) = {
            let (e, c) = div.leading().unwrap();
            (*e, c.clone())
        };
        while let Some((re, rc)) = rem.leading().map(|(e, c)| (*e, c.clone())) {
            let qe = re.checked_sub(&de)?;
            let qc = rc / &dc;
            quo.insert_add(qe, qc.clone());
            // rem -= qc * x^qe * div
            for (e, c) in &div.terms {
                rem.insert_add(qe.add(e), -(&qc * c));
            }
        }
        Some(quo)
    }

    /// Substitutes a polynomial for a variable.
    pub fn substitute(&self, v: VarId, replacement: &MPoly) -> MPoly {
        self.assert_same_table(replacement);
        if !self.depends_on(v) {
            return self.clone();
        }
        // Group terms by the exponent of `v`, then use incremental powers.
        let mut by_deg: BTreeMap<u16, MPoly> = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e.0[v];
            let mut stripped = *e;
            stripped.0[v] = 0;
            by_deg
                .entry(d)
                .or_insert_with(|| MPoly::zero(&self.table))
                .insert_add(stripped, c.clone());
        }
        let mut out = MPoly::zero(&self.table);
        let mut power = MPoly::one(&self.table);
        let mut cur = 0u16;
        for (d, part) in by_deg {
            while cur < d {
                power = power.mul(replacement);
                cur += 1;
            }
            out = out.add(&part.mul(&power));
        }
        out
    }

    /// Substitutes `v -> v + offset` (integer shift of one variable).
    pub fn shift_var(&self, v: VarId, offset: i64) -> MPoly {
        if offset == 0 || !self.depends_on(v) {
            return self.clone();
        }
        let repl = MPoly::var(&self.table, v).add(&MPoly::int(&self.table, offset));
        self.substitute(v, &repl)
    }

    /// Substitutes rational values for a subset of the variables.
    pub fn eval_partial(&self, bindings: &BTreeMap<VarId, BigRational>) -> MPoly {
        if bindings.is_empty() {
            return self.clone();
        }
        let mut out = MPoly::zero(&self.table);
        for (e, c) in &self.terms {
            let mut coeff = c.clone();
            let mut stripped = *e;
            for (&v, val) in bindings {
                let d = e.0[v];
                if d > 0 {
                    let mut p = BigRational::one();
                    for _ in 0..d {
                        p *= val;
                    }
                    coeff *= p;
                    stripped.0[v] = 0;
                }
            }
            out.insert_add(stripped, coeff);
        }
        out
    }

    /// Evaluates fully to a rational; panics when a variable remains.
    pub fn eval_all(&self, bindings: &BTreeMap<VarId, BigRational>) -> BigRational {
        let r = self.eval_partial(bindings);
        r.constant_value().expect("unbound variable in evaluation")
    }

    /// Positive rational `g` with `self / g` integer-coefficient and
    /// content-free.  Zero polynomial reports 1.
    pub fn rational_content(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num::integer::gcd(num_gcd, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        BigRational::new(num_gcd, den_lcm)
    }

    /// Signed content: rational content carrying the sign of the leading
    /// coefficient, so the primitive part has a positive leading coefficient.
    pub fn signed_content(&self) -> BigRational {
        let c = self.rational_content();
        if self.leading_coeff().is_negative() {
            -c
        } else {
            c
        }
    }

    /// `self / signed_content()`: integer coefficients, content 1, positive
    /// leading coefficient.  Zero stays zero.
    pub fn primitive_part(&self) -> MPoly {
        if self.is_zero() {
            return self.clone();
        }
        let c = self.signed_content();
        self.scale(&c.recip())
    }

    /// Coefficients of `self` viewed as univariate in `v`, index = degree.
    pub fn coeffs_in_var(&self, v: VarId) -> Vec<MPoly> {
        let d = self.degree_in(v) as usize;
        let mut out = vec![MPoly::zero(&self.table); d + 1];
        for (e, c) in &self.terms {
            let mut stripped = *e;
            let dv = e.0[v] as usize;
            stripped.0[v] = 0;
            out[dv].insert_add(stripped, c.clone());
        }
        out
    }

    /// Rebuilds a polynomial from univariate-in-`v` coefficients.
    pub fn from_coeffs_in_var(table: &Arc<VarTable>, v: VarId, coeffs: &[MPoly]) -> MPoly {
        let mut out = MPoly::zero(table);
        for (d, c) in coeffs.iter().enumerate() {
            for (e, coef) in &c.terms {
                let mut e2 = *e;
                e2.0[v] = e2.0[v]
                    .checked_add(d as u16)
                    .expect("exponent overflow");
                out.insert_add(e2, coef.clone());
            }
        }
        out
    }

    /// Minimum exponent of `v` over all terms (0 for the zero polynomial).
    pub fn min_degree_in(&self, v: VarId) -> u16 {
        self.terms.keys().map(|e| e.0[v]).min().unwrap_or(0)
    }

    /// List of variables that occur in the polynomial.
    pub fn used_vars(&self) -> Vec<VarId> {
        (0..self.table.len())
            .filter(|&v| self.depends_on(v))
            .collect()
    }

    fn fmt_term(
        &self,
        f: &mut fmt::Formatter<'_>,
        e: &Expo,
        c: &BigRational,
        first: bool,
    ) -> fmt::Result {
        let neg = c.is_negative();
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else if neg {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        let mag = c.abs();
        let mut mono = String::new();
        for (v, name) in self.table.iter() {
            let d = e.0[v];
            if d == 1 {
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(name);
            } else if d > 1 {
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(&format!("{name}^{d}"));
            }
        }
        if mono.is_empty() {
            write!(f, "{mag}")
        } else if mag.is_one() {
            write!(f, "{mono}")
        } else {
            write!(f, "{mag}*{mono}")
        }
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            self.fmt_term(f, e, c, first)?;
            first = false;
        }
        Ok(())
    }
}
