//! Exact linear algebra over rational-function fields.
//!
//! [`solve_linear`] runs a fraction-free Gaussian elimination on
//! denominator-cleared rows, removing row contents as it goes to control
//! coefficient growth, then back-substitutes exactly.  It reports the rank,
//! one particular solution when a right-hand side is given and consistent,
//! and a normalized basis of the nullspace.  Pivoting is deterministic, so
//! results are reproducible run to run.

use std::sync::Arc;

use num::Signed;

use crate::gcd::{gcd_many, lcm};
use crate::mpoly::MPoly;
use crate::ratfun::RatFun;
use crate::vars::VarTable;

/// Result of an exact linear solve.
#[derive(Debug, Clone)]
pub struct LinSolution {
    pub rank: usize,
    /// `Some` iff the system (with the given right-hand side) is
    /// consistent; free variables are set to zero.
    pub particular: Option<Vec<RatFun>>,
    /// Normalized nullspace basis: polynomial entries, integer content 1,
    /// first nonzero entry with positive leading coefficient; one vector per
    /// free column in ascending column order.
    pub nullspace: Vec<Vec<RatFun>>,
}

/// Solves `matrix * x = rhs` (or the homogeneous system when `rhs` is
/// `None`) over the field of rational functions.
pub fn solve_linear(
    matrix: &[Vec<RatFun>],
    rhs: Option<&[RatFun]>,
    table: &Arc<VarTable>,
) -> LinSolution {
    let ncols = matrix.iter().map(|r| r.len()).max().unwrap_or(0);
    if let Some(r) = rhs {
        assert_eq!(r.len(), matrix.len(), "rhs length mismatch");
    }
    let mut rows: Vec<Vec<MPoly>> = Vec::with_capacity(matrix.len());
    for (i, row) in matrix.iter().enumerate() {
        let mut entries: Vec<RatFun> = row.clone();
        entries.resize(ncols, RatFun::zero(table));
        if let Some(r) = rhs {
            entries.push(r[i].clone());
        }
        rows.push(clear_row(&entries, table));
    }
    solve_cleared(rows, ncols, rhs.is_some(), table)
}

/// Multiplies a row of rational functions by the least common denominator
/// and removes the content, yielding primitive polynomial entries.
fn clear_row(entries: &[RatFun], table: &Arc<VarTable>) -> Vec<MPoly> {
    let mut denlcm = MPoly::one(table);
    for e in entries {
        if !e.is_zero() {
            denlcm = lcm(&denlcm, e.den());
        }
    }
    let row: Vec<MPoly> = entries
        .iter()
        .map(|e| {
            if e.is_zero() {
                MPoly::zero(table)
            } else {
                let cof = denlcm.exact_div(e.den()).expect("lcm divisible");
                e.num().mul(&cof)
            }
        })
        .collect();
    primitivize_row(row)
}

/// Divides a polynomial row by its overall content (rational and
/// polynomial) and fixes the sign so the first nonzero entry has a positive
/// leading coefficient.
fn primitivize_row(mut row: Vec<MPoly>) -> Vec<MPoly> {
    let nonzero: Vec<&MPoly> = row.iter().filter(|e| !e.is_zero()).collect();
    if nonzero.is_empty() {
        return row;
    }
    // Rational content first (cheap), polynomial content second.
    let mut content = gcd_many(nonzero.iter().copied()).expect("nonempty");
    if content.is_zero() {
        return row;
    }
    let first_sign_negative = row
        .iter()
        .find(|e| !e.is_zero())
        .map(|e| e.leading_coeff().is_negative())
        .unwrap_or(false);
    if first_sign_negative {
        content = content.neg();
    }
    if !content.is_one() {
        for e in row.iter_mut() {
            if !e.is_zero() {
                *e = e.exact_div(&content).expect("content divides");
            }
        }
    }
    row
}

/// Core elimination on denominator-cleared rows.  `ncols` counts unknown
/// columns; an extra augmented column is present when `augmented` is true.
///
/// The elimination is one-step fraction-free: at every pivot step each
/// active row is cross-multiplied with the pivot row and the result is
/// divided by the previous step's pivot entry.  That division is exact
/// (every entry is a minor of the input matrix bordered by the pivot rows
/// and columns, by Sylvester's determinant identity), so entry degrees grow
/// additively with the step count and the loop needs no gcd computations,
/// which dominate the cost of content-removal schemes in several variables.
pub(crate) fn solve_cleared(
    mut rows: Vec<Vec<MPoly>>,
    ncols: usize,
    augmented: bool,
    table: &Arc<VarTable>,
) -> LinSolution {
    let nrows = rows.len();
    let mut is_pivot_row = vec![false; nrows];
    // (column, row index) per pivot, ascending in column.
    let mut pivots: Vec<(usize, usize)> = Vec::new();

    let mut prev_pivot = MPoly::one(table);
    for col in 0..ncols {
        // Deterministic pivot choice: fewest terms in the pivot entry, then
        // fewest nonzero entries in the row, then lowest row index.
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, row) in rows.iter().enumerate() {
            if is_pivot_row[i] || row[col].is_zero() {
                continue;
            }
            let terms = row[col].terms.len();
            let sparsity = row.iter().filter(|e| !e.is_zero()).count();
            let key = (terms, sparsity, i);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let Some((_, _, prow)) = best else { continue };
        is_pivot_row[prow] = true;
        pivots.push((col, prow));
        let pivot_row = rows[prow].clone();
        let pivot_entry = pivot_row[col].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if is_pivot_row[i] {
                continue;
            }
            // Exactness of the division below needs every active row to be
            // combined with the pivot row at every step, including rows that
            // are already zero in the pivot column.
            let factor = std::mem::replace(&mut row[col], MPoly::zero(table));
            for (j, e) in row.iter_mut().enumerate() {
                if j == col || (e.is_zero() && factor.is_zero()) {
                    continue;
                }
                let mut num = e.mul(&pivot_entry);
                if !factor.is_zero() && !pivot_row[j].is_zero() {
                    num = num.sub(&pivot_row[j].mul(&factor));
                }
                *e = if num.is_zero() || prev_pivot.is_one() {
                    num
                } else {
                    num.exact_div(&prev_pivot)
                        .expect("one-step elimination divides exactly")
                };
            }
        }
        prev_pivot = pivot_entry;
    }

    let rank = pivots.len();

    // Consistency: a non-pivot row must be entirely zero (its unknown
    // columns already are); with an augmented column, that column must
    // vanish too.
    let mut consistent = true;
    if augmented {
        for (i, row) in rows.iter().enumerate() {
            if !is_pivot_row[i] && !row[ncols].is_zero() {
                consistent = false;
                break;
            }
        }
    }

    let pivot_col_set: Vec<usize> = pivots.iter().map(|&(c, _)| c).collect();
    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivot_col_set.contains(c)).collect();

    // Back-substitution helper: given fixed values for free columns (and an
    // optional augmented contribution), solve for pivot columns bottom-up.
    let back_substitute = |free_vals: &dyn Fn(usize) -> RatFun, use_aug: bool| -> Vec<RatFun> {
        let mut x: Vec<RatFun> = (0..ncols)
            .map(|c| {
                if free_cols.contains(&c) {
                    free_vals(c)
                } else {
                    RatFun::zero(table)
                }
            })
            .collect();
        for &(pc, pr) in pivots.iter().rev() {
            let row = &rows[pr];
            let mut acc = if use_aug {
                RatFun::from_poly(row[ncols].clone())
            } else {
                RatFun::zero(table)
            };
            for c in (pc + 1)..ncols {
                if !row[c].is_zero() && !x[c].is_zero() {
                    acc = acc.sub(&RatFun::from_poly(row[c].clone()).mul(&x[c]));
                }
            }
            x[pc] = acc.div(&RatFun::from_poly(row[pc].clone()));
        }
        x
    };

    let particular = if augmented {
        if consistent {
            Some(back_substitute(&|_| RatFun::zero(table), true))
        } else {
            None
        }
    } else {
        Some(vec![RatFun::zero(table); ncols])
    };

    let mut nullspace = Vec::new();
    for &f in &free_cols {
        let v = back_substitute(
            &|c| {
                if c == f {
                    RatFun::one(table)
                } else {
                    RatFun::zero(table)
                }
            },
            false,
        );
        nullspace.push(normalize_vector(&v, table));
    }

    LinSolution {
        rank,
        particular,
        nullspace,
    }
}

/// Scales a rational-function vector to primitive polynomial entries with
/// the first nonzero entry positive.
pub fn normalize_vector(v: &[RatFun], table: &Arc<VarTable>) -> Vec<RatFun> {
    let mut denlcm = MPoly::one(table);
    for e in v {
        if !e.is_zero() {
            denlcm = lcm(&denlcm, e.den());
        }
    }
    let polys: Vec<MPoly> = v
        .iter()
        .map(|e| {
            if e.is_zero() {
                MPoly::zero(table)
            } else {
                e.num()
                    .mul(&denlcm.exact_div(e.den()).expect("lcm divisible"))
            }
        })
        .collect();
    primitivize_row(polys)
        .into_iter()
        .map(RatFun::from_poly)
        .collect()
}

/// Residual check `matrix * x - rhs`; helper for tests and verification.
pub fn residual(
    matrix: &[Vec<RatFun>],
    x: &[RatFun],
    rhs: Option<&[RatFun]>,
    table: &Arc<VarTable>,
) -> Vec<RatFun> {
    matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut acc = RatFun::zero(table);
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() && !x[j].is_zero() {
                    acc = acc.add(&e.mul(&x[j]));
                }
            }
            if let Some(r) = rhs {
                acc = acc.sub(&r[i]);
            }
            acc
        })
        .collect()
}

/// Arithmetic modulo the Mersenne prime `2^61 - 1`, used to pre-select an
/// independent row subset before exact elimination.  Every decision made
/// with it is re-checked exactly, so an unlucky evaluation can cost time
/// but never correctness.
pub mod modp {
    use num::bigint::BigInt;
    use num::rational::BigRational;

    use crate::mpoly::MPoly;

    pub const P: u64 = (1u64 << 61) - 1;

    pub fn add(a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % P as u128) as u64
    }

    pub fn sub(a: u64, b: u64) -> u64 {
        add(a, P - b % P)
    }

    pub fn mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    pub fn pow(mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        a %= P;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        acc
    }

    pub fn inv(a: u64) -> Option<u64> {
        if a % P == 0 {
            None
        } else {
            Some(pow(a, P - 2))
        }
    }

    pub fn from_bigint(n: &BigInt) -> u64 {
        let p = BigInt::from(P);
        let mut r = n % &p;
        if r < BigInt::from(0) {
            r += &p;
        }
        let digits = r.to_u64_digits().1;
        digits.first().copied().unwrap_or(0)
    }

    pub fn from_rational(c: &BigRational) -> Option<u64> {
        let n = from_bigint(c.numer());
        let d = inv(from_bigint(c.denom()))?;
        Some(mul(n, d))
    }

    /// Evaluates a polynomial at the given variable images.
    pub fn eval_mpoly(p: &MPoly, images: &[u64]) -> Option<u64> {
        let mut acc = 0u64;
        for (e, c) in &p.terms {
            let mut t = from_rational(c)?;
            for (v, &img) in images.iter().enumerate() {
                let d = e.0[v];
                if d > 0 {
                    t = mul(t, pow(img, d as u64));
                }
            }
            acc = add(acc, t);
        }
        Some(acc)
    }

    /// Incremental row-basis selector over GF(P).
    pub struct Preselector {
        ncols: usize,
        /// Reduced rows paired with their pivot column.
        reduced: Vec<(usize, Vec<u64>)>,
        /// Indices (caller tags) of the rows kept as basis members.
        pub chosen: Vec<usize>,
    }

    impl Preselector {
        pub fn new(ncols: usize) -> Preselector {
            Preselector {
                ncols,
                reduced: Vec::new(),
                chosen: Vec::new(),
            }
        }

        pub fn rank(&self) -> usize {
            self.reduced.len()
        }

        /// Offers a row; returns true (and records `tag`) when it enlarges
        /// the span.
        pub fn offer(&mut self, row: &[u64], tag: usize) -> bool {
            let mut work = row.to_vec();
            work.resize(self.ncols, 0);
            for (pc, red) in &self.reduced {
                let f = work[*pc] % P;
                if f != 0 {
                    let scale = f; // red is normalized with pivot 1
                    for j in 0..self.ncols {
                        work[j] = sub(work[j], mul(scale, red[j]));
                    }
                }
            }
            if let Some(pc) = work.iter().position(|&x| x % P != 0) {
                let s = inv(work[pc]).expect("nonzero");
                for x in work.iter_mut() {
                    *x = mul(*x, s);
                }
                self.reduced.push((pc, work));
                self.chosen.push(tag);
                true
            } else {
                false
            }
        }

        /// Nullspace basis of the span of all offered rows, one vector per
        /// free column in ascending column order.
        pub fn nullspace(&self) -> Vec<Vec<u64>> {
            let mut rows: Vec<(usize, Vec<u64>)> = self.reduced.clone();
            rows.sort_by_key(|(pc, _)| *pc);
            // Backward pass to fully reduced row echelon form: each basis
            // row ends with zeros at every other pivot column.
            for t in (0..rows.len()).rev() {
                let (pc_t, row_t) = rows[t].clone();
                for s in rows.iter_mut().take(t) {
                    let f = s.1[pc_t];
                    if f != 0 {
                        for j in 0..self.ncols {
                            let d = mul(f, row_t[j]);
                            s.1[j] = sub(s.1[j], d);
                        }
                    }
                }
            }
            let pivot_cols: Vec<usize> = rows.iter().map(|&(pc, _)| pc).collect();
            let mut basis = Vec::new();
            for f in 0..self.ncols {
                if pivot_cols.contains(&f) {
                    continue;
                }
                let mut x = vec![0u64; self.ncols];
                x[f] = 1;
                for (pc, row) in &rows {
                    x[*pc] = sub(0, row[f]);
                }
                basis.push(x);
            }
            basis
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::q;
    use crate::parse::parse_ratfun;

    fn table() -> Arc<VarTable> {
        VarTable::new(&["n", "k"])
    }

    fn rf(s: &str, t: &Arc<VarTable>) -> RatFun {
        parse_ratfun(s, t).unwrap()
    }

    #[test]
    fn identity_system() {
        let t = table();
        let m = vec![
            vec![rf("1", &t), rf("0", &t)],
            vec![rf("0", &t), rf("1", &t)],
        ];
        let rhs = vec![rf("n + 1", &t), rf("k/(n - 1)", &t)];
        let sol = solve_linear(&m, Some(&rhs), &t);
        assert_eq!(sol.rank, 2);
        assert_eq!(sol.particular.as_ref().unwrap()[0], rhs[0]);
        assert_eq!(sol.particular.as_ref().unwrap()[1], rhs[1]);
        assert!(sol.nullspace.is_empty());
    }

    #[test]
    fn one_equation_nullspace_normalized() {
        let t = table();
        // c0 + c1 = 0  ->  basis {(1, -1)}
        let m = vec![vec![rf("1", &t), rf("1", &t)]];
        let sol = solve_linear(&m, None, &t);
        assert_eq!(sol.rank, 1);
        assert_eq!(sol.nullspace.len(), 1);
        assert_eq!(sol.nullspace[0][0], rf("1", &t));
        assert_eq!(sol.nullspace[0][1], rf("-1", &t));
    }

    #[test]
    fn inconsistent_detected() {
        let t = table();
        let m = vec![
            vec![rf("1", &t), rf("1", &t)],
            vec![rf("1", &t), rf("1", &t)],
        ];
        let rhs = vec![rf("1", &t), rf("2", &t)];
        let sol = solve_linear(&m, Some(&rhs), &t);
        assert_eq!(sol.rank, 1);
        assert!(sol.particular.is_none());
    }

    #[test]
    fn parametric_triangular() {
        let t = table();
        let m = vec![
            vec![rf("n", &t), rf("1", &t)],
            vec![rf("0", &t), rf("n", &t)],
        ];
        let rhs = vec![rf("n + 1", &t), rf("n^2", &t)];
        let sol = solve_linear(&m, Some(&rhs), &t);
        let x = sol.particular.unwrap();
        assert_eq!(x[1], rf("n", &t));
        assert_eq!(x[0], rf("1/n", &t));
        // verify by residual
        let res = residual(&m, &x, Some(&rhs), &t);
        assert!(res.iter().all(|r| r.is_zero()));
    }

    #[test]
    fn random_solve_multiply_back() {
        // A fixed pseudo-random 4x4 over Q(n): verify A * x_particular = rhs
        // and A * nullvectors = 0.
        let t = table();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) % 11) as i64 - 5
        };
        let mk = |v: i64, w: i64| {
            RatFun::from_poly(
                MPoly::var(&t, 0)
                    .scale(&q(v))
                    .add(&MPoly::int(&t, w)),
            )
        };
        let rows: Vec<Vec<RatFun>> = (0..4)
            .map(|_| (0..4).map(|_| mk(next(), next())).collect())
            .collect();
        let x_true: Vec<RatFun> = (0..4).map(|_| mk(next(), next())).collect();
        let rhs: Vec<RatFun> = rows
            .iter()
            .map(|row| {
                let mut acc = RatFun::zero(&t);
                for (j, e) in row.iter().enumerate() {
                    acc = acc.add(&e.mul(&x_true[j]));
                }
                acc
            })
            .collect();
        let sol = solve_linear(&rows, Some(&rhs), &t);
        let x = sol.particular.expect("consistent by construction");
        let res = residual(&rows, &x, Some(&rhs), &t);
        assert!(res.iter().all(|r| r.is_zero()));
        for v in &sol.nullspace {
            let res = residual(&rows, v, None, &t);
            assert!(res.iter().all(|r| r.is_zero()));
        }
    }

    #[test]
    fn modp_preselection_matches_rank() {
        let t = table();
        // rank-2 numeric system with a redundant row
        let rows = vec![
            vec![rf("1", &t), rf("2", &t), rf("3", &t)],
            vec![rf("2", &t), rf("4", &t), rf("6", &t)],
            vec![rf("0", &t), rf("1", &t), rf("1", &t)],
        ];
        let mut pre = modp::Preselector::new(3);
        for (i, row) in rows.iter().enumerate() {
            let img: Vec<u64> = row
                .iter()
                .map(|e| modp::from_rational(&e.constant_value().unwrap()).unwrap())
                .collect();
            pre.offer(&img, i);
        }
        assert_eq!(pre.rank(), 2);
        assert_eq!(pre.chosen, vec![0, 2]);
        let sol = solve_linear(&rows, None, &t);
        assert_eq!(sol.rank, 2);
        assert_eq!(sol.nullspace.len(), 1);
    }
}
