//! Exact truncated power series in two formal variables with coefficients
//! in a rational-function field.
//!
//! The only producer is [`BiSeries::expand_quotient`], which expands a
//! quotient of two polynomials in the formal variables by the linear
//! recurrence the denominator imposes on the expansion coefficients: with
//! N = Σ n_{ab} y^a z^b and D = Σ d_{ab} y^a z^b, the series S = N/D obeys
//!
//! ```text
//! d_00 · s_ij  =  n_ij  −  Σ_{(a,b)≠(0,0)}  d_ab · s_{i-a, j-b},
//! ```
//!
//! so each coefficient costs one pass over the denominator's support.  The
//! formal variables are positional (they are not members of the coefficient
//! table), which keeps the coefficient field free to carry its own symbols.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::VarTable;

/// Sparse exponent-pair map for polynomials and series in the two formal
/// variables; missing entries are zero.
pub type PairMap = BTreeMap<(usize, usize), RatFun>;

/// A power series in two formal variables, truncated at the inclusive
/// orders `(order_a, order_b)`, with exact rational-function coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSeries {
    table: Arc<VarTable>,
    pub order_a: usize,
    pub order_b: usize,
    coeffs: PairMap,
}

impl BiSeries {
    /// The zero series at the given truncation orders.
    pub fn zero(table: &Arc<VarTable>, order_a: usize, order_b: usize) -> BiSeries {
        BiSeries {
            table: table.clone(),
            order_a,
            order_b,
            coeffs: PairMap::new(),
        }
    }

    /// A polynomial viewed as a series; exponents beyond the truncation
    /// orders are dropped.
    pub fn from_poly(
        p: &PairMap,
        table: &Arc<VarTable>,
        order_a: usize,
        order_b: usize,
    ) -> BiSeries {
        let mut s = BiSeries::zero(table, order_a, order_b);
        for (&(i, j), c) in p {
            if i <= order_a && j <= order_b && !c.is_zero() {
                s.coeffs.insert((i, j), c.clone());
            }
        }
        s
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    /// Coefficient of `y^i z^j`; panics beyond the truncation orders, since
    /// those coefficients were never computed.
    pub fn coeff(&self, i: usize, j: usize) -> RatFun {
        assert!(
            i <= self.order_a && j <= self.order_b,
            "coefficient ({i}, {j}) lies beyond the truncation orders ({}, {})",
            self.order_a,
            self.order_b
        );
        self.coeffs
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| RatFun::zero(&self.table))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Expands `num / den` as a series up to the given orders.  The
    /// denominator must have a nonzero constant coefficient (otherwise the
    /// quotient is not a power series at the origin).
    pub fn expand_quotient(
        num: &PairMap,
        den: &PairMap,
        table: &Arc<VarTable>,
        order_a: usize,
        order_b: usize,
    ) -> Result<BiSeries, AlgebraError> {
        let d00 = den
            .get(&(0, 0))
            .filter(|c| !c.is_zero())
            .ok_or_else(|| AlgebraError::Pole {
                den: "series denominator vanishes at the expansion point".to_string(),
            })?;
        let mut s = BiSeries::zero(table, order_a, order_b);
        for i in 0..=order_a {
            for j in 0..=order_b {
                let mut acc = num
                    .get(&(i, j))
                    .cloned()
                    .unwrap_or_else(|| RatFun::zero(table));
                for (&(a, b), d) in den {
                    if (a, b) == (0, 0) || a > i || b > j {
                        continue;
                    }
                    if let Some(prev) = s.coeffs.get(&(i - a, j - b)) {
                        acc = acc.sub(&d.mul(prev));
                    }
                }
                if !acc.is_zero() {
                    s.coeffs.insert((i, j), acc.div(d00));
                }
            }
        }
        Ok(s)
    }

    /// Product with a polynomial, truncated at the series' own orders.
    pub fn mul_poly(&self, p: &PairMap) -> BiSeries {
        let mut out = BiSeries::zero(&self.table, self.order_a, self.order_b);
        for (&(a, b), c) in p {
            if c.is_zero() {
                continue;
            }
            for (&(i, j), s) in &self.coeffs {
                let (ia, jb) = (i + a, j + b);
                if ia > self.order_a || jb > self.order_b {
                    continue;
                }
                let add = c.mul(s);
                match out.coeffs.get_mut(&(ia, jb)) {
                    Some(e) => {
                        let next = e.add(&add);
                        if next.is_zero() {
                            out.coeffs.remove(&(ia, jb));
                        } else {
                            *e = next;
                        }
                    }
                    None => {
                        out.coeffs.insert((ia, jb), add);
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &BiSeries) -> BiSeries {
        assert_eq!(
            (self.order_a, self.order_b),
            (other.order_a, other.order_b),
            "truncation order mismatch"
        );
        let mut out = self.clone();
        for (&(i, j), c) in &other.coeffs {
            let cur = out
                .coeffs
                .get(&(i, j))
                .cloned()
                .unwrap_or_else(|| RatFun::zero(&self.table));
            let next = cur.sub(c);
            if next.is_zero() {
                out.coeffs.remove(&(i, j));
            } else {
                out.coeffs.insert((i, j), next);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;

    use crate::hyperterm::{binomial_int, Convention};
    use crate::parse::parse_ratfun;

    fn table() -> Arc<VarTable> {
        VarTable::new(&["x"])
    }

    fn rf(s: &str, t: &Arc<VarTable>) -> RatFun {
        parse_ratfun(s, t).unwrap()
    }

    fn pm(entries: &[((usize, usize), &str)], t: &Arc<VarTable>) -> PairMap {
        entries
            .iter()
            .map(|&(e, s)| (e, rf(s, t)))
            .collect()
    }

    #[test]
    fn double_geometric_series_is_all_ones() {
        let t = table();
        let num = pm(&[((0, 0), "1")], &t);
        // (1 - y)(1 - z) = 1 - y - z + yz
        let den = pm(
            &[((0, 0), "1"), ((1, 0), "-1"), ((0, 1), "-1"), ((1, 1), "1")],
            &t,
        );
        let s = BiSeries::expand_quotient(&num, &den, &t, 5, 5).unwrap();
        for i in 0..=5 {
            for j in 0..=5 {
                assert!(s.coeff(i, j).is_one(), "coefficient ({i},{j})");
            }
        }
    }

    #[test]
    fn pascal_kernel_expands_to_binomials() {
        let t = table();
        let num = pm(&[((0, 0), "1")], &t);
        let den = pm(&[((0, 0), "1"), ((1, 0), "-1"), ((0, 1), "-1")], &t);
        let s = BiSeries::expand_quotient(&num, &den, &t, 7, 7).unwrap();
        for i in 0..=7usize {
            for j in 0..=7usize {
                let expect = binomial_int((i + j) as i64, i as i64, Convention::Combinatorial);
                assert_eq!(
                    s.coeff(i, j),
                    RatFun::constant(&t, BigRational::from_integer(expect)),
                    "coefficient ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn symbolic_coefficient_geometric_series() {
        let t = table();
        let num = pm(&[((0, 0), "1")], &t);
        let den = pm(&[((0, 0), "1"), ((1, 0), "-x")], &t);
        let s = BiSeries::expand_quotient(&num, &den, &t, 6, 2).unwrap();
        for i in 0..=6 {
            assert_eq!(s.coeff(i, 0), rf("x", &t).pow(i as i32), "power {i}");
            assert!(s.coeff(i, 1).is_zero());
            assert!(s.coeff(i, 2).is_zero());
        }
    }

    #[test]
    fn multiplying_back_by_the_denominator_recovers_the_numerator() {
        let t = table();
        let num = pm(&[((0, 0), "x"), ((1, 1), "3"), ((2, 0), "x^2 - 1")], &t);
        let den = pm(
            &[
                ((0, 0), "2"),
                ((1, 0), "x"),
                ((0, 1), "-1"),
                ((1, 1), "x + 5"),
            ],
            &t,
        );
        let s = BiSeries::expand_quotient(&num, &den, &t, 9, 9).unwrap();
        let back = s.mul_poly(&den);
        // The truncated product is exact wherever the convolution is
        // complete: degrees at most orders minus the denominator's degrees.
        for i in 0..=8 {
            for j in 0..=8 {
                let expect = num
                    .get(&(i, j))
                    .cloned()
                    .unwrap_or_else(|| RatFun::zero(&t));
                assert_eq!(back.coeff(i, j), expect, "coefficient ({i},{j})");
            }
        }
    }

    #[test]
    fn vanishing_constant_term_is_rejected() {
        let t = table();
        let num = pm(&[((0, 0), "1")], &t);
        let den = pm(&[((1, 0), "1")], &t);
        assert!(BiSeries::expand_quotient(&num, &den, &t, 3, 3).is_err());
    }
}
