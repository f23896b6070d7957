//! Noncommutative shift-operator algebra.
//!
//! An [`OreAlgebra`] binds shift symbols `S_v` to variables of a
//! [`VarTable`]; an [`OrePoly`] is a polynomial in those symbols with
//! rational-function coefficients, multiplied under the commutation law
//! `S_v · f(v) = f(v+1) · S_v`.  Operators encode recurrences: applying
//! `Σ c_α S^α` to a sequence evaluates `Σ c_α(pt) · f(pt + α)`.
//!
//! Division, least common left multiples, and the operator-application
//! closure are provided for operators univariate in one shift symbol; the
//! full multivariate product is supported everywhere.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{Signed, Zero};

use crate::gcd::{gcd, lcm};
use crate::linalg::solve_linear;
use crate::mpoly::{Expo, MPoly};
use crate::parse::{Atoms, ExprParser, ParseError};
use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::{same_table, VarId, VarTable};

/// A shift-operator algebra: each symbol shifts one table variable by +1.
#[derive(Clone, Debug)]
pub struct OreAlgebra {
    table: Arc<VarTable>,
    /// Symbol `i` shifts `shifts[i]`.
    shifts: Vec<VarId>,
}

impl PartialEq for OreAlgebra {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.table, &other.table) && self.shifts == other.shifts
    }
}

impl Eq for OreAlgebra {}

impl OreAlgebra {
    /// Creates an algebra with one shift symbol per listed variable.
    /// Symbol names are `S_<variable>`; they must not collide with
    /// variable names.
    pub fn new(table: &Arc<VarTable>, shift_vars: &[VarId]) -> OreAlgebra {
        assert!(!shift_vars.is_empty(), "need at least one shift symbol");
        for (i, &v) in shift_vars.iter().enumerate() {
            assert!(v < table.len(), "shift variable out of range");
            assert!(
                !shift_vars[..i].contains(&v),
                "duplicate shift variable {}",
                table.name(v)
            );
            let sym = format!("S_{}", table.name(v));
            assert!(
                table.lookup(&sym).is_none(),
                "shift symbol {sym} collides with a variable name"
            );
        }
        OreAlgebra {
            table: table.clone(),
            shifts: shift_vars.to_vec(),
        }
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn nsymbols(&self) -> usize {
        self.shifts.len()
    }

    /// The table variable moved by symbol `i`.
    pub fn shifted_var(&self, i: usize) -> VarId {
        self.shifts[i]
    }

    pub fn symbol_name(&self, i: usize) -> String {
        format!("S_{}", self.table.name(self.shifts[i]))
    }

    /// Index of the symbol with the given name (`S_<var>`), if any.
    pub fn find_symbol(&self, name: &str) -> Option<usize> {
        (0..self.nsymbols()).find(|&i| self.symbol_name(i) == name)
    }

    /// Index of the symbol shifting variable `v`, if any.
    pub fn symbol_for_var(&self, v: VarId) -> Option<usize> {
        self.shifts.iter().position(|&w| w == v)
    }

    fn same_as(&self, other: &OreAlgebra) -> bool {
        self == other
    }
}

/// An element of the algebra: shift-exponent vector -> nonzero coefficient.
#[derive(Clone, Debug)]
pub struct OrePoly {
    pub algebra: OreAlgebra,
    pub terms: BTreeMap<Expo, RatFun>,
}

impl PartialEq for OrePoly {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.terms == other.terms
    }
}

impl Eq for OrePoly {}

impl OrePoly {
    pub fn zero(algebra: &OreAlgebra) -> OrePoly {
        OrePoly {
            algebra: algebra.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(algebra: &OreAlgebra) -> OrePoly {
        OrePoly::from_ratfun(algebra, RatFun::one(&algebra.table))
    }

    pub fn from_ratfun(algebra: &OreAlgebra, c: RatFun) -> OrePoly {
        let mut p = OrePoly::zero(algebra);
        if !c.is_zero() {
            p.terms.insert(Expo::zero(), c);
        }
        p
    }

    /// The bare symbol `S_i`.
    pub fn shift(algebra: &OreAlgebra, i: usize) -> OrePoly {
        assert!(i < algebra.nsymbols());
        OrePoly::monomial(algebra, Expo::of_var(i), RatFun::one(&algebra.table))
    }

    pub fn monomial(algebra: &OreAlgebra, e: Expo, c: RatFun) -> OrePoly {
        let mut p = OrePoly::zero(algebra);
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the given shift monomial (zero if absent).
    pub fn coeff(&self, e: &Expo) -> RatFun {
        self.terms
            .get(e)
            .cloned()
            .unwrap_or_else(|| RatFun::zero(&self.algebra.table))
    }

    /// Maximum exponent of symbol `i` over the support.
    pub fn order_in(&self, i: usize) -> u16 {
        self.terms.keys().map(|e| e.0[i]).max().unwrap_or(0)
    }

    /// Maximum total shift degree.
    pub fn total_order(&self) -> u32 {
        self.terms.keys().map(|e| e.total()).max().unwrap_or(0)
    }

    /// True when every support monomial uses only symbol `i`.
    pub fn is_univariate_in(&self, i: usize) -> bool {
        self.terms
            .keys()
            .all(|e| (0..self.algebra.nsymbols()).all(|j| j == i || e.0[j] == 0))
    }

    /// The support as a sorted list of exponent vectors.
    pub fn support(&self) -> Vec<Expo> {
        self.terms.keys().cloned().collect()
    }

    fn insert_add(&mut self, e: Expo, c: RatFun) {
        if c.is_zero() {
            return;
        }
        match self.terms.get(&e) {
            None => {
                self.terms.insert(e, c);
            }
            Some(old) => {
                let s = old.add(&c);
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    self.terms.insert(e, s);
                }
            }
        }
    }

    pub fn add(&self, other: &OrePoly) -> OrePoly {
        assert!(self.algebra.same_as(&other.algebra), "algebra mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> OrePoly {
        OrePoly {
            algebra: self.algebra.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &OrePoly) -> OrePoly {
        self.add(&other.neg())
    }

    /// Left multiplication by a rational function (no commutation needed).
    pub fn scale(&self, f: &RatFun) -> OrePoly {
        if f.is_zero() {
            return OrePoly::zero(&self.algebra);
        }
        OrePoly {
            algebra: self.algebra.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), f.mul(c)))
                .collect(),
        }
    }

    /// Applies the shift monomial `S^e` to a coefficient: every bound
    /// variable moves forward by its exponent.
    fn sigma(&self, e: &Expo, f: &RatFun) -> RatFun {
        let mut shifts: BTreeMap<VarId, i64> = BTreeMap::new();
        for (i, &v) in self.algebra.shifts.iter().enumerate() {
            if e.0[i] > 0 {
                shifts.insert(v, e.0[i] as i64);
            }
        }
        f.shift_vars(&shifts)
    }

    /// Noncommutative product: `(a S^α)(b S^β) = a·σ^α(b) S^(α+β)`.
    pub fn mul(&self, other: &OrePoly) -> OrePoly {
        assert!(self.algebra.same_as(&other.algebra), "algebra mismatch");
        let mut out = OrePoly::zero(&self.algebra);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let c = ca.mul(&self.sigma(ea, cb));
                out.insert_add(ea.add(eb), c);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> OrePoly {
        let mut out = OrePoly::one(&self.algebra);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&RatFun) -> RatFun) -> OrePoly {
        let mut out = OrePoly::zero(&self.algebra);
        for (e, c) in &self.terms {
            out.insert_add(e.clone(), f(c));
        }
        out
    }

    /// Applies the operator to a rational function of the table variables.
    pub fn apply_ratfun(&self, f: &RatFun) -> RatFun {
        let mut acc = RatFun::zero(&self.algebra.table);
        for (e, c) in &self.terms {
            acc = acc.add(&c.mul(&self.sigma(e, f)));
        }
        acc
    }

    /// Applies the operator to a sequence at a point: coefficients are
    /// evaluated at `point`, the sequence at the shifted points.  `point`
    /// must bind every variable the coefficients use.
    pub fn apply_at(
        &self,
        point: &BTreeMap<VarId, BigRational>,
        f: &mut dyn FnMut(&BTreeMap<VarId, BigRational>) -> BigRational,
    ) -> Result<BigRational, AlgebraError> {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let cv = c.eval_all(point)?;
            if cv.is_zero() {
                continue;
            }
            let mut shifted = point.clone();
            for (i, &v) in self.algebra.shifts.iter().enumerate() {
                if e.0[i] > 0 {
                    let entry = shifted
                        .get_mut(&v)
                        .expect("shifted variable must be bound");
                    *entry += BigRational::from_integer(e.0[i].into());
                }
            }
            acc += cv * f(&shifted);
        }
        Ok(acc)
    }

    /// Clears denominators, removes polynomial and rational content, and
    /// fixes the sign so the grlex-leading shift monomial has a coefficient
    /// with positive leading rational.  Operators equal up to a left
    /// rational-function factor normalize identically.
    pub fn normalize(&self) -> OrePoly {
        if self.is_zero() {
            return self.clone();
        }
        let table = &self.algebra.table;
        let mut denlcm = MPoly::one(table);
        for c in self.terms.values() {
            denlcm = lcm(&denlcm, c.den());
        }
        let mut polys: Vec<(Expo, MPoly)> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let cof = denlcm.exact_div(c.den()).expect("lcm divisible");
                (e.clone(), c.num().mul(&cof))
            })
            .collect();
        let mut content = MPoly::zero(table);
        for (_, p) in &polys {
            content = gcd(&content, p);
            if content.is_one() {
                break;
            }
        }
        let leading_negative = polys
            .last()
            .map(|(_, p)| p.leading_coeff().is_negative())
            .unwrap_or(false);
        if leading_negative {
            content = content.neg();
        }
        if !content.is_one() {
            for (_, p) in polys.iter_mut() {
                *p = p.exact_div(&content).expect("content divides");
            }
        }
        OrePoly {
            algebra: self.algebra.clone(),
            terms: polys
                .into_iter()
                .map(|(e, p)| (e, RatFun::from_poly(p)))
                .collect(),
        }
    }

    /// Bit-exact machine form: `ore{S_a,S_b}[(2,0): c; ...]` with terms in
    /// descending graded-lex order.
    pub fn to_record(&self) -> String {
        let mut s = String::from("ore{");
        for i in 0..self.algebra.nsymbols() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&self.algebra.symbol_name(i));
        }
        s.push_str("}[");
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                s.push_str("; ");
            }
            s.push('(');
            for i in 0..self.algebra.nsymbols() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&e.0[i].to_string());
            }
            s.push_str("): ");
            s.push_str(&c.to_string());
        }
        s.push(']');
        s
    }
}

/// Parses the record form produced by [`OrePoly::to_record`].
pub fn parse_ore_record(s: &str, algebra: &OreAlgebra) -> Result<OrePoly, ParseError> {
    let err = |pos: usize, msg: &str| ParseError {
        pos,
        msg: msg.to_string(),
    };
    let body = s.trim();
    let rest = body
        .strip_prefix("ore{")
        .ok_or_else(|| err(0, "expected `ore{`"))?;
    let close = rest
        .find('}')
        .ok_or_else(|| err(body.len(), "missing `}`"))?;
    let syms: Vec<&str> = rest[..close].split(',').map(str::trim).collect();
    if syms.len() != algebra.nsymbols() {
        return Err(err(4, "shift symbol list does not match algebra"));
    }
    for (i, sym) in syms.iter().enumerate() {
        if algebra.symbol_name(i) != *sym {
            return Err(err(4, "shift symbol list does not match algebra"));
        }
    }
    let rest = rest[close + 1..]
        .strip_prefix('[')
        .ok_or_else(|| err(close, "expected `[`"))?;
    let rest = rest
        .strip_suffix(']')
        .ok_or_else(|| err(body.len(), "expected trailing `]`"))?;
    let mut out = OrePoly::zero(algebra);
    if rest.trim().is_empty() {
        return Ok(out);
    }
    for part in rest.split(';') {
        let part = part.trim();
        let inner = part
            .strip_prefix('(')
            .ok_or_else(|| err(0, "expected `(` starting a term"))?;
        let close = inner
            .find(')')
            .ok_or_else(|| err(0, "missing `)` in term"))?;
        let mut e = Expo::zero();
        for (i, d) in inner[..close].split(',').enumerate() {
            if i >= algebra.nsymbols() {
                return Err(err(0, "too many exponents in term"));
            }
            e.0[i] = d
                .trim()
                .parse::<u16>()
                .map_err(|_| err(0, "bad exponent"))?;
        }
        let coeff_text = inner[close + 1..]
            .trim_start()
            .strip_prefix(':')
            .ok_or_else(|| err(0, "expected `:` after exponents"))?;
        let c = crate::parse::parse_ratfun(coeff_text.trim(), &algebra.table)?;
        if c.is_zero() {
            return Err(err(0, "zero coefficient in record"));
        }
        if out.terms.insert(e, c).is_some() {
            return Err(err(0, "duplicate exponent vector in record"));
        }
    }
    Ok(out)
}

/// Operator semantics for the shared expression grammar: products are
/// evaluated with the noncommutative multiplication, so `S_n * n` parses
/// to `(n+1)*S_n`.  Division and negative powers are only defined by
/// order-zero operators.
struct OreAtoms<'a> {
    algebra: &'a OreAlgebra,
}

impl Atoms for OreAtoms<'_> {
    type Node = OrePoly;

    fn number(&self, n: num::bigint::BigInt) -> OrePoly {
        OrePoly::from_ratfun(
            self.algebra,
            RatFun::constant(&self.algebra.table, BigRational::from_integer(n)),
        )
    }

    fn name(&self, name: &str, pos: usize) -> Result<OrePoly, ParseError> {
        if let Some(i) = self.algebra.find_symbol(name) {
            Ok(OrePoly::shift(self.algebra, i))
        } else if let Some(v) = self.algebra.table.lookup(name) {
            Ok(OrePoly::from_ratfun(
                self.algebra,
                RatFun::var(&self.algebra.table, v),
            ))
        } else {
            Err(ParseError {
                pos,
                msg: format!("unknown name {name:?}"),
            })
        }
    }

    fn add(&self, a: OrePoly, b: OrePoly, _pos: usize) -> Result<OrePoly, ParseError> {
        Ok(a.add(&b))
    }

    fn sub(&self, a: OrePoly, b: OrePoly, _pos: usize) -> Result<OrePoly, ParseError> {
        Ok(a.sub(&b))
    }

    fn mul(&self, a: OrePoly, b: OrePoly, _pos: usize) -> Result<OrePoly, ParseError> {
        Ok(a.mul(&b))
    }

    fn div(&self, a: OrePoly, b: OrePoly, pos: usize) -> Result<OrePoly, ParseError> {
        if b.is_zero() {
            return Err(ParseError {
                pos,
                msg: "division by zero".into(),
            });
        }
        if b.total_order() > 0 {
            return Err(ParseError {
                pos,
                msg: "division by an operator of positive order".into(),
            });
        }
        let inv = b.coeff(&Expo::zero()).recip();
        Ok(a.mul(&OrePoly::from_ratfun(self.algebra, inv)))
    }

    fn pow(&self, a: OrePoly, e: i32, pos: usize) -> Result<OrePoly, ParseError> {
        if e >= 0 {
            Ok(a.pow(e as u32))
        } else {
            if a.is_zero() {
                return Err(ParseError {
                    pos,
                    msg: "negative power of zero".into(),
                });
            }
            if a.total_order() > 0 {
                return Err(ParseError {
                    pos,
                    msg: "negative power of a positive-order operator".into(),
                });
            }
            Ok(OrePoly::from_ratfun(
                self.algebra,
                a.coeff(&Expo::zero()).recip().pow(-e),
            ))
        }
    }

    fn neg(&self, a: OrePoly) -> OrePoly {
        a.neg()
    }
}

/// Parses a human-written operator expression such as `(n-3)*S_n^2 - 2`.
pub fn parse_ore_expr(s: &str, algebra: &OreAlgebra) -> Result<OrePoly, ParseError> {
    ExprParser::parse(s, &OreAtoms { algebra })
}

/// Right division of operators univariate in symbol `sym`:
/// `a = quotient · b + remainder` with `order(remainder) < order(b)`.
pub fn ore_right_divide(
    a: &OrePoly,
    b: &OrePoly,
    sym: usize,
) -> Result<(OrePoly, OrePoly), AlgebraError> {
    assert!(a.algebra.same_as(&b.algebra), "algebra mismatch");
    if !a.is_univariate_in(sym) || !b.is_univariate_in(sym) {
        return Err(AlgebraError::NotUnivariate);
    }
    if b.is_zero() {
        return Err(AlgebraError::ZeroDenominator);
    }
    let algebra = &a.algebra;
    let v = algebra.shifted_var(sym);
    let db = b.order_in(sym) as i64;
    let lb = b.coeff(&expo_pow(sym, db as u16));
    let mut q = OrePoly::zero(algebra);
    let mut r = a.clone();
    while !r.is_zero() && (r.order_in(sym) as i64) >= db {
        let dr = r.order_in(sym) as i64;
        let e = dr - db;
        let lr = r.coeff(&expo_pow(sym, dr as u16));
        // σ^e(lb) is the leading coefficient contributed by S^e · b.
        let c = lr.div(&lb.shift_var(v, e));
        let qterm = OrePoly::monomial(algebra, expo_pow(sym, e as u16), c);
        q = q.add(&qterm);
        r = r.sub(&qterm.mul(b));
    }
    Ok((q, r))
}

fn expo_pow(sym: usize, e: u16) -> Expo {
    let mut x = Expo::zero();
    x.0[sym] = e;
    x
}

/// Least common left multiple of two univariate operators: the minimal
/// order `L` with `L = u·a = w·b`.  Found by escalating the target order
/// and solving the linear system `u·a − w·b = 0` over the coefficient
/// field.
pub fn ore_lclm(a: &OrePoly, b: &OrePoly, sym: usize) -> Result<OrePoly, AlgebraError> {
    assert!(a.algebra.same_as(&b.algebra), "algebra mismatch");
    if !a.is_univariate_in(sym) || !b.is_univariate_in(sym) {
        return Err(AlgebraError::NotUnivariate);
    }
    assert!(!a.is_zero() && !b.is_zero(), "lclm of zero operator");
    let algebra = &a.algebra;
    let table = &algebra.table;
    let da = a.order_in(sym) as usize;
    let db = b.order_in(sym) as usize;
    for d in da.max(db)..=(da + db) {
        let nu = d - da + 1;
        let nw = d - db + 1;
        // Row per power of S, column per unknown u_i then w_j.
        let mut rows: Vec<Vec<RatFun>> = vec![vec![RatFun::zero(table); nu + nw]; d + 1];
        for i in 0..nu {
            let si = OrePoly::monomial(algebra, expo_pow(sym, i as u16), RatFun::one(table));
            let sia = si.mul(a);
            for (e, c) in &sia.terms {
                rows[e.0[sym] as usize][i] = c.clone();
            }
        }
        for j in 0..nw {
            let sj = OrePoly::monomial(algebra, expo_pow(sym, j as u16), RatFun::one(table));
            let sjb = sj.mul(b);
            for (e, c) in &sjb.terms {
                rows[e.0[sym] as usize][nu + j] = c.neg();
            }
        }
        let sol = solve_linear(&rows, None, table);
        // Pick a nullspace vector whose u-part has a nonzero top
        // coefficient, guaranteeing order exactly d.
        for vvec in &sol.nullspace {
            if vvec[nu - 1].is_zero() {
                continue;
            }
            let mut u = OrePoly::zero(algebra);
            for (i, c) in vvec[..nu].iter().enumerate() {
                if !c.is_zero() {
                    u = u.add(&OrePoly::monomial(algebra, expo_pow(sym, i as u16), c.clone()));
                }
            }
            return Ok(u.mul(a).normalize());
        }
    }
    unreachable!("order sum ansatz always admits a solution");
}

/// Given `ann` (order r, univariate in `sym`) annihilating a sequence `h`
/// and an operator `acting`, returns an operator of order ≤ r annihilating
/// `acting·h` for every such `h`: shifts of `acting` are reduced modulo
/// `ann` into the basis `h, S h, …, S^{r-1} h` and a linear dependence
/// among r+1 reductions is extracted.
pub fn ore_apply_closure(
    ann: &OrePoly,
    acting: &OrePoly,
    sym: usize,
) -> Result<OrePoly, AlgebraError> {
    assert!(ann.algebra.same_as(&acting.algebra), "algebra mismatch");
    if !ann.is_univariate_in(sym) || !acting.is_univariate_in(sym) {
        return Err(AlgebraError::NotUnivariate);
    }
    assert!(!acting.is_zero(), "acting operator is zero");
    let algebra = &ann.algebra;
    let table = &algebra.table;
    let r = ann.order_in(sym) as usize;
    assert!(r > 0, "annihilator must have positive order");
    let s1 = OrePoly::shift(algebra, sym);
    // rows[j] = coefficients of S^j·acting reduced mod ann, in basis
    // 1, S, ..., S^{r-1}.
    let mut reduced: Vec<Vec<RatFun>> = Vec::new();
    let mut current = acting.clone();
    for _ in 0..=r {
        let (_, rem) = ore_right_divide(&current, ann, sym)?;
        let mut row = vec![RatFun::zero(table); r];
        for (e, c) in &rem.terms {
            row[e.0[sym] as usize] = c.clone();
        }
        reduced.push(row);
        current = s1.mul(&current);
    }
    // Find the earliest j with a dependence among rows 0..=j: gives the
    // minimal-order result.
    for j in 0..=r {
        let cols = j + 1;
        // transpose: one equation per basis element
        let mut rows: Vec<Vec<RatFun>> = vec![vec![RatFun::zero(table); cols]; r];
        for (jj, red) in reduced.iter().take(cols).enumerate() {
            for (bi, c) in red.iter().enumerate() {
                rows[bi][jj] = c.clone();
            }
        }
        let sol = solve_linear(&rows, None, table);
        if let Some(vvec) = sol.nullspace.iter().find(|v| !v[cols - 1].is_zero()) {
            let mut out = OrePoly::zero(algebra);
            for (i, c) in vvec.iter().enumerate() {
                if !c.is_zero() {
                    out = out.add(&OrePoly::monomial(
                        algebra,
                        expo_pow(sym, i as u16),
                        c.clone(),
                    ));
                }
            }
            return Ok(out.normalize());
        }
    }
    unreachable!("r+1 vectors in an r-dimensional space are dependent");
}

impl fmt::Display for OrePoly {
    /// Human-readable form, terms in descending graded-lex order:
    /// `(n - 3)*S_n^2 + (-3*n + 5)*S_n + (2*n + 2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let mono: Vec<String> = (0..self.algebra.nsymbols())
                .filter(|&i| e.0[i] > 0)
                .map(|i| {
                    if e.0[i] == 1 {
                        self.algebra.symbol_name(i)
                    } else {
                        format!("{}^{}", self.algebra.symbol_name(i), e.0[i])
                    }
                })
                .collect();
            let coeff_txt = c.to_string();
            let needs_parens = coeff_txt.contains(' ') || coeff_txt.contains('/');
            if mono.is_empty() {
                if needs_parens {
                    write!(f, "({coeff_txt})")?;
                } else {
                    write!(f, "{coeff_txt}")?;
                }
            } else if c.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else if needs_parens {
                write!(f, "({})*{}", coeff_txt, mono.join("*"))?;
            } else {
                write!(f, "{}*{}", coeff_txt, mono.join("*"))?;
            }
        }
        Ok(())
    }
}
