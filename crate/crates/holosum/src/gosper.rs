//! Indefinite hypergeometric summation: from the shift quotient
//! ρ(v) = T(v+1)/T(v) of a term T, decide whether a rational function q
//! exists with Δ_v(q·T) = T, and produce it if so.  The quotient-splitting
//! and degree-bound machinery lives here and is shared with the creative
//! telescoping engines.
//!
//! The splitting step needs the set of integer shifts j ≥ 1 at which the
//! numerator and shifted denominator share a factor.  Candidates are read
//! off pairs of explicit factors (complete whenever the supplied factor
//! lists are granular enough — in particular for products of polynomials
//! linear in v, which covers every shift quotient built from binomial,
//! power, and gamma-ratio factors), topped up by a direct scan of small
//! shifts so that composite inputs with modest dispersion also work.  A
//! missed candidate can only cause a false "not summable", never a wrong
//! answer: every produced q is verified against the defining identity.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::factored::Factored;
use crate::gcd::gcd;
use crate::hyperterm::HyperTerm;
use crate::linalg::solve_linear;
use crate::mpoly::MPoly;
use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::{VarId, VarTable};

/// Largest shift probed by the brute-force candidate scan.
const SCAN_LIMIT: i64 = 16;

/// ρ = (a/b) · (c(v+1)/c(v)) with gcd(a(v), b(v+j)) = 1 for all j ≥ 0.
#[derive(Clone, Debug)]
pub struct QuotientSplit {
    pub a: MPoly,
    pub b: MPoly,
    pub c: MPoly,
}

/// Shift candidates j ≥ 1 read off factor pairs: p(v) divides the
/// numerator, q(v) the denominator, and q(v+j) ∝ p(v) forces
/// j = (sub(p)/lc(p) − sub(q)/lc(q)) / deg, which must be a constant
/// positive integer.
pub fn shift_candidates(
    num_factors: &[MPoly],
    den_factors: &[MPoly],
    v: VarId,
) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    for p in num_factors {
        let dp = p.degree_in(v);
        if dp == 0 {
            continue;
        }
        let pc = p.coeffs_in_var(v);
        for q in den_factors {
            if q.degree_in(v) != dp {
                continue;
            }
            let qc = q.coeffs_in_var(v);
            // j = (pc[d-1]/pc[d] - qc[d-1]/qc[d]) / d
            let d = dp as usize;
            let num = pc[d - 1].mul(&qc[d]).sub(&qc[d - 1].mul(&pc[d]));
            let den = pc[d].mul(&qc[d]).scale(&crate::mpoly::q(d as i64));
            let j = RatFun::new(num, den);
            if let Some(c) = j.constant_value() {
                if c.is_integer() {
                    if let Ok(jv) = i64::try_from(c.to_integer()) {
                        if jv >= 1 {
                            out.insert(jv);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Splits ρ = num/den (assumed reduced) against the given shift
/// candidates; any j ≥ 1 with gcd(num, den(v→v+j)) nonconstant that is
/// missing from `candidates` is found by the small-shift scan only.
pub fn split_quotient(
    num: &MPoly,
    den: &MPoly,
    v: VarId,
    candidates: &BTreeSet<i64>,
) -> QuotientSplit {
    let table = num.table.clone();
    let mut all: BTreeSet<i64> = candidates.clone();
    for j in 1..=SCAN_LIMIT {
        all.insert(j);
    }
    let mut a = num.clone();
    let mut b = den.clone();
    let mut c = MPoly::one(&table);
    for &j in &all {
        if a.total_degree() == 0 || b.total_degree() == 0 {
            break;
        }
        let g = gcd(&a, &b.shift_var(v, j));
        if g.total_degree() == 0 {
            continue;
        }
        a = a.exact_div(&g).expect("gcd divides");
        b = b
            .exact_div(&g.shift_var(v, -j))
            .expect("shifted gcd divides");
        for i in 1..=j {
            c = c.mul(&g.shift_var(v, -i));
        }
    }
    QuotientSplit { a, b, c }
}

/// Degree bound for polynomial solutions X of
/// a(v)·X(v+1) − b1(v)·X(v) = (right side of degree dc).
/// Returns None when no nonnegative bound exists.
pub fn gosper_degree_bound(a: &MPoly, b1: &MPoly, dc: i64, v: VarId) -> Option<usize> {
    let da = a.degree_in(v) as i64;
    let db = b1.degree_in(v) as i64;
    let ac = a.coeffs_in_var(v);
    let bc = b1.coeffs_in_var(v);
    let lead_a = &ac[da as usize];
    let lead_b = &bc[db as usize];
    let d = if da != db || lead_a != lead_b {
        dc - da.max(db)
    } else {
        // leading terms cancel
        let e = da;
        let table = a.table.clone();
        let zero = MPoly::zero(&table);
        let sub_a = if e >= 1 { &ac[(e - 1) as usize] } else { &zero };
        let sub_b = if e >= 1 { &bc[(e - 1) as usize] } else { &zero };
        let mut d = dc - e + 1;
        let s0 = RatFun::new(sub_b.sub(sub_a), lead_a.clone());
        if let Some(val) = s0.constant_value() {
            if val.is_integer() {
                if let Ok(s) = i64::try_from(val.to_integer()) {
                    if s > d {
                        d = s;
                    }
                }
            }
        }
        d
    };
    usize::try_from(d).ok()
}

/// The column polynomials a(v)·(v+1)^i − b1(v)·v^i for i = 0..=d; the
/// coefficient matrix of the Gosper ansatz in the powers of v.
pub(crate) fn gosper_columns(a: &MPoly, b1: &MPoly, d: usize, v: VarId) -> Vec<MPoly> {
    let table = a.table.clone();
    let vp = MPoly::var(&table, v);
    let vp1 = vp.add(&MPoly::one(&table));
    let mut pow_shift = MPoly::one(&table);
    let mut pow_plain = MPoly::one(&table);
    let mut cols = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        cols.push(a.mul(&pow_shift).sub(&b1.mul(&pow_plain)));
        pow_shift = pow_shift.mul(&vp1);
        pow_plain = pow_plain.mul(&vp);
    }
    cols
}

/// Core Gosper step on a reduced quotient num/den with the given shift
/// candidates: returns q with q(v+1)·ρ − q = 1, verified, or None.
fn gosper_core(
    num: &MPoly,
    den: &MPoly,
    v: VarId,
    candidates: &BTreeSet<i64>,
    table: &Arc<VarTable>,
) -> Option<RatFun> {
    let split = split_quotient(num, den, v, candidates);
    let b1 = split.b.shift_var(v, -1);
    let dc = split.c.degree_in(v) as i64;
    let d = gosper_degree_bound(&split.a, &b1, dc, v)?;

    let cols = gosper_columns(&split.a, &b1, d, v);
    let max_pow = cols
        .iter()
        .map(|m| m.degree_in(v) as usize)
        .chain(std::iter::once(split.c.degree_in(v) as usize))
        .max()
        .unwrap_or(0);
    let col_coeffs: Vec<Vec<MPoly>> = cols.iter().map(|m| m.coeffs_in_var(v)).collect();
    let rhs_coeffs = split.c.coeffs_in_var(v);
    let zero = MPoly::zero(table);
    let mut rows = Vec::with_capacity(max_pow + 1);
    let mut rhs = Vec::with_capacity(max_pow + 1);
    for p in 0..=max_pow {
        let row: Vec<RatFun> = col_coeffs
            .iter()
            .map(|cc| RatFun::from_poly(cc.get(p).unwrap_or(&zero).clone()))
            .collect();
        rows.push(row);
        rhs.push(RatFun::from_poly(
            rhs_coeffs.get(p).unwrap_or(&zero).clone(),
        ));
    }
    let sol = solve_linear(&rows, Some(&rhs), table);
    let x = sol.particular?;

    // X = sum x_i v^i; q = b1·X / c
    let vp = RatFun::var(table, v);
    let mut xpoly = RatFun::zero(table);
    for (i, xi) in x.iter().enumerate() {
        xpoly = xpoly.add(&xi.mul(&vp.pow(i as i32)));
    }
    let q = RatFun::from_poly(b1)
        .mul(&xpoly)
        .div(&RatFun::from_poly(split.c.clone()));

    // verify the defining identity before returning
    let rho = RatFun::new(num.clone(), den.clone());
    let check = q.shift_var(v, 1).mul(&rho).sub(&q);
    if check.is_one() {
        Some(q)
    } else {
        None
    }
}

/// Gosper's algorithm on a factored shift quotient.
pub fn gosper_from_factored(rho: &Factored, v: VarId) -> Option<RatFun> {
    if rho.is_zero() {
        return None;
    }
    let table = rho.table().clone();
    let num_factors: Vec<MPoly> = rho
        .factors()
        .filter(|&(_, e)| e > 0)
        .map(|(p, _)| p.clone())
        .collect();
    let den_factors: Vec<MPoly> = rho
        .factors()
        .filter(|&(_, e)| e < 0)
        .map(|(p, _)| p.clone())
        .collect();
    let candidates = shift_candidates(&num_factors, &den_factors, v);
    let r = rho.to_ratfun();
    gosper_core(r.num(), r.den(), v, &candidates, &table)
}

/// Gosper's algorithm on a plain rational shift quotient.
pub fn gosper_from_quotient(rho: &RatFun, v: VarId) -> Option<RatFun> {
    if rho.is_zero() {
        return None;
    }
    let table = rho.table().clone();
    let candidates = shift_candidates(
        std::slice::from_ref(rho.num()),
        std::slice::from_ref(rho.den()),
        v,
    );
    gosper_core(rho.num(), rho.den(), v, &candidates, &table)
}

/// Gosper's algorithm on a symbolic term: Some(q) with Δ_v(q·t) = t, or
/// None when t has no hypergeometric antidifference.
pub fn gosper_term(t: &HyperTerm, v: VarId) -> Result<Option<RatFun>, AlgebraError> {
    let rho = t.shift_quotient_factored(v)?;
    Ok(gosper_from_factored(&rho, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linform::LinForm;
    use crate::parse::parse_ratfun;
    use num::rational::BigRational;
    use num::{One, Zero};
    use std::collections::BTreeMap;

    #[test]
    fn splits_classic_quotient() {
        // rho = (v+2)/v  (term v(v+1)): a=b=1, c = v(v+1)
        let t = VarTable::new(&["v"]);
        let num = parse_ratfun("v + 2", &t).unwrap().num().clone();
        let den = parse_ratfun("v", &t).unwrap().num().clone();
        let cands = shift_candidates(
            std::slice::from_ref(&num),
            std::slice::from_ref(&den),
            0,
        );
        assert!(cands.contains(&2));
        let s = split_quotient(&num, &den, 0, &cands);
        assert_eq!(s.a, MPoly::one(&t));
        assert_eq!(s.b, MPoly::one(&t));
        assert_eq!(s.c, parse_ratfun("v^2 + v", &t).unwrap().num().clone());
    }

    #[test]
    fn split_respects_gcd_condition() {
        // random-ish composite: rho = (v+3)(v+5)/(v(v+1))
        let t = VarTable::new(&["v"]);
        let num = parse_ratfun("(v + 3)*(v + 5)", &t).unwrap().num().clone();
        let den = parse_ratfun("v*(v + 1)", &t).unwrap().num().clone();
        let s = split_quotient(&num, &den, 0, &BTreeSet::new());
        // gcd(a, b(v+j)) must be 1 for all j >= 0
        for j in 0..=12 {
            assert_eq!(gcd(&s.a, &s.b.shift_var(0, j)).total_degree(), 0, "j={j}");
        }
        // and the split multiplies back to rho
        let back = RatFun::from_poly(s.a.mul(&s.c.shift_var(0, 1)))
            .div(&RatFun::from_poly(s.b.mul(&s.c)));
        assert_eq!(back, RatFun::new(num, den));
    }

    #[test]
    fn k_times_factorial_is_summable() {
        // t = k*k!, rho = (k+1)^2/k, antidifference k! => q = 1/k
        let t = VarTable::new(&["k"]);
        let rho = parse_ratfun("(k + 1)^2/k", &t).unwrap();
        let q = gosper_from_quotient(&rho, 0).unwrap();
        assert_eq!(q, parse_ratfun("1/k", &t).unwrap());
    }

    #[test]
    fn factorial_is_not_summable() {
        let t = VarTable::new(&["k"]);
        let rho = parse_ratfun("k + 1", &t).unwrap();
        assert!(gosper_from_quotient(&rho, 0).is_none());
    }

    #[test]
    fn binomial_in_k_is_not_summable() {
        let t = VarTable::new(&["n", "k"]);
        let term = HyperTerm::one(&t).binomial(LinForm::var(0), LinForm::var(1));
        assert!(gosper_term(&term, 1).unwrap().is_none());
    }

    #[test]
    fn polynomial_times_geometric_is_summable() {
        // t = k*2^k: rho = 2(k+1)/k; q*t antidifference: (k-2)2^k... check identity only
        let t = VarTable::new(&["k"]);
        let rho = parse_ratfun("2*(k + 1)/k", &t).unwrap();
        let q = gosper_from_quotient(&rho, 0).unwrap();
        let check = q.shift_var(0, 1).mul(&rho).sub(&q);
        assert!(check.is_one());
    }

    #[test]
    fn constant_term_sums_to_v() {
        let t = VarTable::new(&["v"]);
        let rho = RatFun::one(&t);
        let q = gosper_from_quotient(&rho, 0).unwrap();
        // q(v+1) - q(v) = 1
        let check = q.shift_var(0, 1).sub(&q);
        assert!(check.is_one());
    }

    #[test]
    fn parametrized_quotient_with_parameters() {
        // t = 1/(C(n,k)) in k? use instead t = (n-k): rho = (n-k-1)/(n-k)
        // antidifference of (n-k) is -(n-k)(n-k+1)/2... verify identity
        let t = VarTable::new(&["n", "k"]);
        let rho = parse_ratfun("(n - k - 1)/(n - k)", &t).unwrap();
        let q = gosper_from_quotient(&rho, 1).unwrap();
        let check = q.shift_var(1, 1).mul(&rho).sub(&q);
        assert!(check.is_one());
    }

    /// Exact range summation from the quotient: t(lo)=1, t(v+1)=rho(v)t(v);
    /// checks sum_{v=lo}^{hi} t = (q t)(hi+1) - (q t)(lo).
    fn check_range_sum(rho: &RatFun, q: &RatFun, v: VarId, lo: i64, hi: i64) {
        let mut point: BTreeMap<VarId, BigRational> = BTreeMap::new();
        let mut t_val = BigRational::one();
        let mut sum = BigRational::zero();
        let mut t_at = BTreeMap::new();
        for i in lo..=hi + 1 {
            t_at.insert(i, t_val.clone());
            if i <= hi {
                sum += &t_val;
            }
            point.insert(v, BigRational::from_integer(i.into()));
            let r = rho.eval_all(&point).expect("pole-free range");
            t_val *= r;
        }
        let q_at = |i: i64| {
            let mut pt = BTreeMap::new();
            pt.insert(v, BigRational::from_integer(i.into()));
            q.eval_all(&pt).expect("certificate pole-free on range")
        };
        let lhs = sum;
        let rhs = q_at(hi + 1) * &t_at[&(hi + 1)] - q_at(lo) * &t_at[&lo];
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn range_summation_matches_certificates() {
        let t = VarTable::new(&["k"]);
        for (src, lo, hi) in [
            ("(k + 1)^2/k", 2i64, 9i64),
            ("2*(k + 1)/k", 1, 12),
            ("(k + 3)/k", 1, 10),
        ] {
            let rho = parse_ratfun(src, &t).unwrap();
            let q = gosper_from_quotient(&rho, 0).unwrap();
            check_range_sum(&rho, &q, 0, lo, hi);
        }
    }

    #[test]
    fn candidate_formula_handles_scaled_linear_factors() {
        // p = 2v + n, q = 2v + n - 6: j = 3
        let t = VarTable::new(&["n", "v"]);
        let p = parse_ratfun("2*v + n", &t).unwrap().num().clone();
        let qf = parse_ratfun("2*v + n - 6", &t).unwrap().num().clone();
        let c = shift_candidates(std::slice::from_ref(&p), std::slice::from_ref(&qf), 1);
        assert!(c.contains(&3));
    }
}
