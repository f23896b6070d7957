//! Recurrence guessing from exact data.
//!
//! Given exact values of a sequence on an integer grid, finds a shift
//! operator with polynomial coefficients that annihilates them.  Part of
//! the grid is withheld from the fit and used only to validate the
//! candidate, so a spurious fit on the solving equations is reported as
//! such instead of being returned as an operator.
//!
//! Values may carry extra variables symbolically (a common case: each grid
//! point maps to a polynomial in an indeterminate `x`).  Such a value
//! contributes one scalar equation per monomial, and those symbolic
//! variables may also appear in the coefficient ansatz, so the fitted
//! operator comes out symbolic in them.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num::BigRational;
use num::Zero;

use crate::linalg::modp;
use crate::linalg::solve_linear;
use crate::mpoly::Expo;
use crate::mpoly::MPoly;
use crate::ore::ore_right_divide;
use crate::ratfun::AlgebraError;
use crate::ore::OreAlgebra;
use crate::ore::OrePoly;
use crate::ratfun::RatFun;
use crate::vars::VarId;

/// A guessing task: exact data on an integer grid plus the shape of the
/// operator to look for.
#[derive(Debug, Clone)]
pub struct GuessProblem {
    /// Variable advanced by the sought operator.
    pub shift_var: VarId,
    /// Variables bound by each data key, in key order.  Must contain
    /// `shift_var`; any variable of the values not listed here stays
    /// symbolic.
    pub point_vars: Vec<VarId>,
    /// Exact value at each grid point, keyed by the `point_vars` values.
    pub data: BTreeMap<Vec<i64>, RatFun>,
    /// Operator order bound.
    pub order: usize,
    /// Coefficient ansatz: per-variable degree caps, in a fixed order.
    /// Variables listed here may be grid-bound or symbolic.
    pub degree_bounds: Vec<(VarId, usize)>,
    /// Number of complete windows, taken from the tail of the grid in key
    /// order, withheld from the fit and used only for validation.  Must be
    /// at least one.
    pub validation_windows: usize,
}

/// Result of a guessing run.
#[derive(Debug, Clone, PartialEq)]
pub enum GuessOutcome {
    /// An operator that annihilates every complete window of the data.
    Operator(OrePoly),
    /// A candidate matched the solving equations but failed on withheld
    /// data — distinct from `NoCandidate` so callers can tell "ansatz too
    /// small" from "fit did not generalize".
    ValidationFailed { candidate: OrePoly },
    /// The equations force the zero operator.
    NoCandidate,
}

impl GuessProblem {
    /// Base points whose full shift window (order + 1 consecutive values
    /// of `shift_var`) is present in the data, in key order.
    pub fn windows(&self) -> Vec<Vec<i64>> {
        let pos = self
            .point_vars
            .iter()
            .position(|&v| v == self.shift_var)
            .expect("shift variable must be one of the point variables");
        let mut out = Vec::new();
        for key in self.data.keys() {
            let complete = (1..=self.order as i64).all(|j| {
                let mut shifted = key.clone();
                shifted[pos] += j;
                self.data.contains_key(&shifted)
            });
            if complete {
                out.push(key.clone());
            }
        }
        out
    }
}

/// Monomial exponent choices for the coefficient ansatz, in a fixed
/// deterministic order (last listed variable varies fastest).
fn ansatz_monomials(bounds: &[(VarId, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &(_, cap) in bounds {
        let mut next = Vec::with_capacity(out.len() * (cap + 1));
        for stem in &out {
            for e in 0..=cap {
                let mut m = stem.clone();
                m.push(e);
                next.push(m);
            }
        }
        out = next;
    }
    out
}

fn sym_pow(sym: usize, e: u16) -> Expo {
    let mut x = Expo::zero();
    x.0[sym] = e;
    x
}

/// Outcome of one fitting attempt, or `None` when the data cannot
/// over-determine the ansatz (fewer scalar equations than unknowns plus
/// one, or no window left for validation).
fn fit_once(problem: &GuessProblem, algebra: &OreAlgebra) -> Option<GuessOutcome> {
    let table = algebra.table().clone();
    let sym = algebra
        .symbol_for_var(problem.shift_var)
        .expect("algebra lacks a shift symbol for the recurrence variable");
    let pos = problem
        .point_vars
        .iter()
        .position(|&v| v == problem.shift_var)
        .expect("shift variable must be one of the point variables");

    let windows = problem.windows();
    if problem.validation_windows == 0 || windows.len() <= problem.validation_windows {
        return None;
    }
    let split = windows.len() - problem.validation_windows;
    let fitting = &windows[..split];

    let monomials = ansatz_monomials(&problem.degree_bounds);
    let monos: Vec<MPoly> = monomials
        .iter()
        .map(|exps| {
            let mut m = MPoly::int(&table, 1);
            for (&(v, _), &e) in problem.degree_bounds.iter().zip(exps) {
                for _ in 0..e {
                    m = m.mul(&MPoly::var(&table, v));
                }
            }
            m
        })
        .collect();
    // Columns ordered by shift power, then by monomial index.
    let ncols = (problem.order + 1) * monos.len();

    // One block of scalar equations per fitting window: the identity
    // sum_j sum_m c_{j,m} m(point) F(point + j) = 0 is cleared of
    // denominators and split by the monomials of the surviving symbolic
    // variables.
    let mut scalar_rows: Vec<Vec<BigRational>> = Vec::new();
    for base in fitting {
        let bindings: BTreeMap<VarId, BigRational> = problem
            .point_vars
            .iter()
            .zip(base)
            .map(|(&v, &n)| (v, BigRational::from_integer(n.into())))
            .collect();
        let mut entries = Vec::with_capacity(ncols);
        for j in 0..=problem.order {
            let mut key = base.clone();
            key[pos] += j as i64;
            let value = &problem.data[&key];
            for m in &monos {
                let scaled = value.mul(&RatFun::from_poly(m.eval_partial(&bindings)));
                entries.push(scaled);
            }
        }
        let mut den = MPoly::int(&table, 1);
        for e in &entries {
            den = crate::gcd::lcm(&den, e.den());
        }
        let cleared: Vec<MPoly> = entries
            .iter()
            .map(|e| {
                let extra = den.exact_div(e.den()).expect("denominator divides the lcm");
                e.num().mul(&extra)
            })
            .collect();
        let mut expos: BTreeSet<Expo> = BTreeSet::new();
        for c in &cleared {
            expos.extend(c.terms.keys().copied());
        }
        for expo in expos {
            let row: Vec<BigRational> = cleared
                .iter()
                .map(|c| c.terms.get(&expo).cloned().unwrap_or_else(BigRational::zero))
                .collect();
            scalar_rows.push(row);
        }
    }
    if scalar_rows.len() <= ncols {
        return None;
    }

    // A modular rank probe keeps the solve small; candidates are then
    // re-verified exactly against every equation, and any failing row is
    // folded back into the solve.
    let mut selected: BTreeSet<usize> = preselect_scalar_rows(&scalar_rows, ncols).into_iter().collect();
    let nullspace = loop {
        let rows_rf: Vec<Vec<RatFun>> = selected
            .iter()
            .map(|&i| {
                scalar_rows[i]
                    .iter()
                    .map(|c| RatFun::constant(&table, c.clone()))
                    .collect()
            })
            .collect();
        let sol = solve_linear(&rows_rf, None, &table);
        if sol.nullspace.is_empty() {
            break Vec::new();
        }
        let vectors: Vec<Vec<BigRational>> = sol
            .nullspace
            .iter()
            .map(|vec| {
                vec.iter()
                    .map(|c| c.constant_value().expect("constant solve"))
                    .collect()
            })
            .collect();
        let mut bad_row = None;
        'vectors: for vec in &vectors {
            for (i, row) in scalar_rows.iter().enumerate() {
                if selected.contains(&i) {
                    continue;
                }
                let mut acc = BigRational::zero();
                for (c, r) in vec.iter().zip(row) {
                    if !c.is_zero() && !r.is_zero() {
                        acc += c * r;
                    }
                }
                if !acc.is_zero() {
                    bad_row = Some(i);
                    break 'vectors;
                }
            }
        }
        match bad_row {
            Some(i) => {
                selected.insert(i);
            }
            None => break sol.nullspace,
        }
    };

    if nullspace.is_empty() {
        return Some(GuessOutcome::NoCandidate);
    }
    // The basis vector with the earliest free column is the deterministic
    // pick.
    let chosen = &nullspace[0];
    let mut candidate = OrePoly::zero(algebra);
    for j in 0..=problem.order {
        let mut coeff = MPoly::zero(&table);
        for (mi, m) in monos.iter().enumerate() {
            let c = &chosen[j * monos.len() + mi];
            if let Some(cv) = c.constant_value() {
                if !cv.is_zero() {
                    coeff = coeff.add(&m.scale(&cv));
                }
            }
        }
        if !coeff.is_zero() {
            candidate = candidate.add(&OrePoly::monomial(
                algebra,
                sym_pow(sym, j as u16),
                RatFun::from_poly(coeff),
            ));
        }
    }
    if candidate.is_zero() {
        return Some(GuessOutcome::NoCandidate);
    }
    let candidate = candidate.normalize();

    // Soundness: the returned operator must annihilate every complete
    // window, the withheld ones included.
    for base in &windows {
        let bindings: BTreeMap<VarId, BigRational> = problem
            .point_vars
            .iter()
            .zip(base)
            .map(|(&v, &n)| (v, BigRational::from_integer(n.into())))
            .collect();
        let mut acc = RatFun::zero(&table);
        for (e, c) in &candidate.terms {
            let j = e.0[sym] as i64;
            let mut key = base.clone();
            key[pos] += j;
            let value = &problem.data[&key];
            let cv = c
                .eval_partial(&bindings)
                .expect("normalized coefficients are polynomial");
            acc = acc.add(&cv.mul(value));
        }
        if !acc.is_zero() {
            return Some(GuessOutcome::ValidationFailed { candidate });
        }
    }
    Some(GuessOutcome::Operator(candidate))
}

/// Mirrors the data rows into GF(p) and keeps a spanning subset, so the
/// exact solve works on roughly `ncols` rows instead of all of them.
/// Returns all row indices when the probe cannot certify a basis.
fn preselect_scalar_rows(rows: &[Vec<BigRational>], ncols: usize) -> Vec<usize> {
    if rows.len() <= ncols.max(8) {
        return (0..rows.len()).collect();
    }
    let mut pre = modp::Preselector::new(ncols);
    for (i, row) in rows.iter().enumerate() {
        let mut img = Vec::with_capacity(ncols);
        let mut ok = true;
        for c in row {
            match modp::from_rational(c) {
                Some(v) => img.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            // A denominator hit the modulus: fall back to the full set.
            return (0..rows.len()).collect();
        }
        pre.offer(&img, i);
        if pre.rank() == ncols {
            break;
        }
    }
    pre.chosen
}

/// Fits an operator to the problem's data.
///
/// Returns [`GuessOutcome::Operator`] only when the candidate annihilates
/// every complete window of the data; a fit that breaks on a withheld
/// window comes back as [`GuessOutcome::ValidationFailed`], and an empty
/// solution space as [`GuessOutcome::NoCandidate`].  Panics when the data
/// cannot over-determine the ansatz (the solving equations must strictly
/// outnumber the unknowns, and at least one window must be withheld).
pub fn guess_recurrence(problem: &GuessProblem, algebra: &OreAlgebra) -> GuessOutcome {
    fit_once(problem, algebra)
        .expect("data must over-determine the ansatz and leave a validation window")
}

/// Escalating variant: tries orders `1..=problem.order` and, inside each
/// order, uniform degree levels `0..=max cap` (each variable capped by its
/// own bound).  Returns the first validated operator, so the result has
/// minimal order within the caps.  Levels the data cannot over-determine
/// are skipped.  When nothing validates, a remembered spurious fit is
/// reported in preference to a bare `NoCandidate`.
pub fn guess_recurrence_auto(problem: &GuessProblem, algebra: &OreAlgebra) -> GuessOutcome {
    let max_cap = problem
        .degree_bounds
        .iter()
        .map(|&(_, c)| c)
        .max()
        .unwrap_or(0);
    let mut spurious = None;
    for order in 1..=problem.order {
        for level in 0..=max_cap {
            let sub = GuessProblem {
                order,
                degree_bounds: problem
                    .degree_bounds
                    .iter()
                    .map(|&(v, c)| (v, c.min(level)))
                    .collect(),
                ..problem.clone()
            };
            match fit_once(&sub, algebra) {
                Some(GuessOutcome::Operator(op)) => return GuessOutcome::Operator(op),
                Some(GuessOutcome::ValidationFailed { candidate }) => {
                    spurious.get_or_insert(candidate);
                }
                Some(GuessOutcome::NoCandidate) | None => {}
            }
        }
    }
    match spurious {
        Some(candidate) => GuessOutcome::ValidationFailed { candidate },
        None => GuessOutcome::NoCandidate,
    }
}

/// Whether `guessed` right-divides `big` in the shift algebra: true when
/// the right division leaves a zero remainder, i.e. `big = q · guessed`.
pub fn guessed_is_right_factor(
    big: &OrePoly,
    guessed: &OrePoly,
    sym: usize,
) -> Result<bool, AlgebraError> {
    let (_, rem) = ore_right_divide(big, guessed, sym)?;
    Ok(rem.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::VarTable;
    use num::BigInt;
    use std::sync::Arc;

    fn geometric_problem(table: &Arc<VarTable>, n: VarId, upto: i64) -> GuessProblem {
        let mut data = BTreeMap::new();
        let mut val = BigRational::from_integer(1.into());
        for i in 0..=upto {
            data.insert(vec![i], RatFun::constant(table, val.clone()));
            val *= BigRational::from_integer(2.into());
        }
        GuessProblem {
            shift_var: n,
            point_vars: vec![n],
            data,
            order: 1,
            degree_bounds: vec![(n, 0)],
            validation_windows: 2,
        }
    }

    #[test]
    fn doubling_sequence_yields_first_order_operator() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let problem = geometric_problem(&table, 0, 10);
        let got = guess_recurrence(&problem, &algebra);
        match got {
            GuessOutcome::Operator(ref op) => {
                assert_eq!(op.to_record(), "ore{S_n}[(1): 1; (0): -2]");
            }
            ref other => panic!("expected an operator, got {other:?}"),
        }
        // Determinism: a second run reproduces the same operator.
        let again = guess_recurrence(&problem, &algebra);
        assert_eq!(got, again);
    }

    #[test]
    fn order_bound_slack_still_returns_minimal_operator() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let mut problem = geometric_problem(&table, 0, 10);
        problem.order = 2;
        match guess_recurrence(&problem, &algebra) {
            GuessOutcome::Operator(op) => {
                assert_eq!(op.to_record(), "ore{S_n}[(1): 1; (0): -2]");
            }
            other => panic!("expected an operator, got {other:?}"),
        }
    }

    fn factorial_data(table: &Arc<VarTable>, upto: i64) -> BTreeMap<Vec<i64>, RatFun> {
        let mut data = BTreeMap::new();
        let mut val = BigRational::from_integer(1.into());
        for i in 0..=upto {
            data.insert(vec![i], RatFun::constant(table, val.clone()));
            val *= BigRational::from_integer(BigInt::from(i + 1));
        }
        data
    }

    #[test]
    fn factorials_need_degree_one_coefficients() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let constant_only = GuessProblem {
            shift_var: 0,
            point_vars: vec![0],
            data: factorial_data(&table, 12),
            order: 1,
            degree_bounds: vec![(0, 0)],
            validation_windows: 2,
        };
        assert_eq!(
            guess_recurrence(&constant_only, &algebra),
            GuessOutcome::NoCandidate
        );
        let linear = GuessProblem {
            degree_bounds: vec![(0, 1)],
            ..constant_only
        };
        match guess_recurrence(&linear, &algebra) {
            GuessOutcome::Operator(op) => {
                assert_eq!(op.to_record(), "ore{S_n}[(1): 1; (0): -n - 1]");
            }
            other => panic!("expected an operator, got {other:?}"),
        }
    }

    #[test]
    fn symbolic_parameter_survives_in_the_coefficients() {
        // f(n) = x^n + 1 satisfies (S^2 - (x+1) S + x) f = 0 with x symbolic.
        let table = VarTable::new(&["x", "n"]);
        let algebra = OreAlgebra::new(&table, &[1]);
        let x = RatFun::var(&table, 0);
        let mut data = BTreeMap::new();
        let mut val = RatFun::one(&table);
        for i in 0..=10i64 {
            data.insert(vec![i], val.add(&RatFun::one(&table)));
            val = val.mul(&x);
        }
        let problem = GuessProblem {
            shift_var: 1,
            point_vars: vec![1],
            data,
            order: 2,
            degree_bounds: vec![(0, 1)],
            validation_windows: 2,
        };
        match guess_recurrence(&problem, &algebra) {
            GuessOutcome::Operator(op) => {
                assert_eq!(op.to_record(), "ore{S_n}[(2): 1; (1): -x - 1; (0): x]");
            }
            other => panic!("expected an operator, got {other:?}"),
        }
    }

    #[test]
    fn scrambled_values_admit_no_small_recurrence() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut data = BTreeMap::new();
        for i in 0..=24i64 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = (state >> 40) as i64;
            data.insert(vec![i], RatFun::int(&table, v));
        }
        let problem = GuessProblem {
            shift_var: 0,
            point_vars: vec![0],
            data,
            order: 2,
            degree_bounds: vec![(0, 2)],
            validation_windows: 3,
        };
        assert_eq!(guess_recurrence(&problem, &algebra), GuessOutcome::NoCandidate);
    }

    #[test]
    fn spurious_fit_is_reported_as_validation_failure() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let mut problem = geometric_problem(&table, 0, 11);
        // Corrupt the last value: the fit on the early windows still finds
        // the doubling operator, but a withheld window now refutes it.
        problem
            .data
            .insert(vec![11], RatFun::int(&table, 999));
        match guess_recurrence(&problem, &algebra) {
            GuessOutcome::ValidationFailed { candidate } => {
                assert_eq!(candidate.to_record(), "ore{S_n}[(1): 1; (0): -2]");
            }
            other => panic!("expected a validation failure, got {other:?}"),
        }
    }

    #[test]
    fn auto_escalation_finds_the_smallest_shape() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let problem = GuessProblem {
            shift_var: 0,
            point_vars: vec![0],
            data: factorial_data(&table, 14),
            order: 3,
            degree_bounds: vec![(0, 2)],
            validation_windows: 2,
        };
        match guess_recurrence_auto(&problem, &algebra) {
            GuessOutcome::Operator(op) => {
                assert_eq!(op.to_record(), "ore{S_n}[(1): 1; (0): -n - 1]");
            }
            other => panic!("expected an operator, got {other:?}"),
        }
    }

    #[test]
    fn right_factor_detection_respects_noncommutativity() {
        let table = VarTable::new(&["n"]);
        let algebra = OreAlgebra::new(&table, &[0]);
        let s = OrePoly::shift(&algebra, 0);
        let minus_n = OrePoly::monomial(&algebra, Expo::zero(), RatFun::var(&table, 0).neg());
        let minus_two = OrePoly::monomial(&algebra, Expo::zero(), RatFun::int(&table, -2));
        let left = s.add(&minus_n); // S - n
        let right = s.add(&minus_two); // S - 2
        let big = left.mul(&right);
        assert!(guessed_is_right_factor(&big, &right, 0).unwrap());
        // The left factor of a noncommutative product is not a right factor.
        assert!(!guessed_is_right_factor(&big, &left, 0).unwrap());
    }
}
