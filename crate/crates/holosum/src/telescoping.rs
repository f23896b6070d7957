//! Creative telescoping: given a term t in some summation variables, find
//! an operator P built from shifts of the remaining (parameter) variables
//! together with rational certificates q_v, one per summation variable,
//! such that
//!
//! ```text
//! P·t  =  sum_v  Delta_v ( q_v · t )
//! ```
//!
//! holds as an identity between rational multiples of t (Delta_v is the
//! forward difference in v).  Summing over the v-ranges then collapses the
//! right side to boundary values and turns P into a recurrence for the
//! definite sum.  Every result produced here carries its certificates and
//! has had its defining identity re-verified exactly before being returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;
use num::{Signed, Zero};
use thiserror::Error;

use crate::boundary::SumSpec;
use crate::factored::lcm_denominators;
use crate::gcd::gcd;
use crate::gosper::{gosper_columns, gosper_degree_bound, shift_candidates, split_quotient};
use crate::hyperterm::HyperTerm;
use crate::linalg::{modp, solve_linear};
use crate::mpoly::{Expo, MPoly};
use crate::ore::{parse_ore_record, OreAlgebra, OrePoly};
use crate::parse::{parse_ratfun, ParseError};
use crate::ratfun::{AlgebraError, RatFun};
use crate::vars::VarId;

/// A telescoping identity P·t = sum_v Delta_v(q_v·t), stored with the
/// residual of its defining identity (always zero for results produced by
/// the search routines; kept so that consumers can re-check cheaply).
#[derive(Clone, Debug, PartialEq)]
pub struct CTResult {
    /// Operator in the parameter shifts; coefficients free of the
    /// summation variables.
    pub telescoper: OrePoly,
    /// Certificate q_v per summation variable.
    pub certificates: BTreeMap<VarId, RatFun>,
    /// Value of `telescoper/certificates` plugged into the defining
    /// identity, divided by t; zero exactly when the identity holds.
    pub residual: RatFun,
}

impl CTResult {
    /// Bit-exact machine form:
    /// `ct{telescoper: <operator record>; certificate <var>: <value>; ...; residual: <value>}`.
    pub fn to_record(&self) -> String {
        let table = self.telescoper.algebra.table();
        let mut out = String::from("ct{telescoper: ");
        out.push_str(&self.telescoper.to_record());
        for (&v, q) in &self.certificates {
            out.push_str(&format!("; certificate {}: {}", table.name(v), q));
        }
        out.push_str(&format!("; residual: {}", self.residual));
        out.push('}');
        out
    }

    /// Parses the output of [`CTResult::to_record`].
    pub fn parse(s: &str, algebra: &OreAlgebra) -> Result<CTResult, ParseError> {
        let table = algebra.table();
        let fail = |msg: &str| ParseError {
            pos: 0,
            msg: msg.to_string(),
        };
        let inner = s
            .strip_prefix("ct{")
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| fail("expected ct{...}"))?;
        let (head, residual_src) = inner
            .rsplit_once("; residual: ")
            .ok_or_else(|| fail("missing residual field"))?;
        let tele_src = head
            .strip_prefix("telescoper: ")
            .ok_or_else(|| fail("missing telescoper field"))?;
        let mut parts = tele_src.split("; certificate ");
        let op_src = parts.next().ok_or_else(|| fail("empty telescoper"))?;
        let telescoper = parse_ore_record(op_src, algebra)?;
        let mut certificates = BTreeMap::new();
        for part in parts {
            let (name, value) = part
                .split_once(": ")
                .ok_or_else(|| fail("malformed certificate field"))?;
            let v = table
                .lookup(name)
                .ok_or_else(|| fail(&format!("unknown certificate variable {name}")))?;
            certificates.insert(v, parse_ratfun(value, table)?);
        }
        let residual = parse_ratfun(residual_src, table)?;
        Ok(CTResult {
            telescoper,
            certificates,
            residual,
        })
    }
}

impl fmt::Display for CTResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

#[derive(Debug, Error)]
pub enum TelescopeError {
    #[error("no telescoper found within the search limits (operator order {max_order})")]
    NotFound { max_order: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Residual of the defining identity, divided by t:
/// `sum_alpha lambda_alpha (S^alpha t)/t  -  sum_v [ sigma_v(q_v) rho_v - q_v ]`.
/// Zero iff the pair (telescoper, certificates) actually telescopes t.
pub fn ct_residual(
    t: &HyperTerm,
    telescoper: &OrePoly,
    certificates: &BTreeMap<VarId, RatFun>,
) -> Result<RatFun, AlgebraError> {
    let table = t.table();
    let algebra = &telescoper.algebra;
    let mut res = RatFun::zero(table);
    for (e, lam) in &telescoper.terms {
        let mut map = BTreeMap::new();
        for i in 0..algebra.nsymbols() {
            if e.0[i] > 0 {
                map.insert(algebra.shifted_var(i), e.0[i] as i64);
            }
        }
        let r = t.shift_ratio_factored(&map)?.to_ratfun();
        res = res.add(&lam.mul(&r));
    }
    for (&v, q) in certificates {
        let rho = t.shift_quotient(v)?;
        let delta = q.shift_var(v, 1).mul(&rho).sub(q);
        res = res.sub(&delta);
    }
    Ok(res)
}

/// Re-checks a stored result against its term; returns the exact residual.
pub fn verify_ct(t: &HyperTerm, result: &CTResult) -> Result<RatFun, AlgebraError> {
    ct_residual(t, &result.telescoper, &result.certificates)
}

/// All exponent vectors over the first `nsym` slots with total degree at
/// most `max_total`, in ascending graded order.
fn graded_support(nsym: usize, max_total: u16) -> Vec<Expo> {
    let mut out: BTreeSet<Expo> = BTreeSet::new();
    let mut stack = vec![(Expo::zero(), 0usize, 0u16)];
    while let Some((e, slot, used)) = stack.pop() {
        if slot == nsym {
            out.insert(e);
            continue;
        }
        for d in 0..=(max_total - used) {
            let mut next = e.clone();
            next.0[slot] = d;
            stack.push((next, slot + 1, used + d));
        }
    }
    out.into_iter().collect()
}

/// Scaling factor that carries certificates along when an operator is
/// replaced by its normalized form: both describe the same identity up to
/// a left rational factor u with `normalized = u * original`.
fn normalization_factor(original: &OrePoly, normalized: &OrePoly) -> RatFun {
    let e0 = original
        .terms
        .keys()
        .next()
        .expect("nonzero operator")
        .clone();
    normalized.coeff(&e0).div(&original.coeff(&e0))
}

/// Single-sum creative telescoping by the parameterized indefinite-summation
/// ansatz: for escalating operator order, write the unknown combination
/// `sum_alpha lambda_alpha S^alpha t` over the common denominator D of the
/// shift ratios, pull D into the unknown certificate, and solve the
/// resulting indefinite-summation equation with the lambda's joined to the
/// polynomial unknowns in one homogeneous linear system.  The first order
/// whose system has a solution with nonzero operator part wins, so the
/// returned operator order is minimal for the searched shift set.
pub fn zeilberger(
    t: &HyperTerm,
    sumvar: VarId,
    telescoper_vars: &[VarId],
    max_order: usize,
) -> Result<CTResult, TelescopeError> {
    assert!(
        !telescoper_vars.contains(&sumvar),
        "summation variable cannot also be shifted by the telescoper"
    );
    let table = t.table().clone();
    let algebra = OreAlgebra::new(&table, telescoper_vars);
    let rho = t.shift_quotient_factored(sumvar)?;

    for order in 0..=max_order {
        let support = graded_support(algebra.nsymbols(), order as u16);
        let mut ratios = Vec::with_capacity(support.len());
        for e in &support {
            let mut map = BTreeMap::new();
            for i in 0..algebra.nsymbols() {
                if e.0[i] > 0 {
                    map.insert(algebra.shifted_var(i), e.0[i] as i64);
                }
            }
            ratios.push(t.shift_ratio_factored(&map)?);
        }
        let dfac = lcm_denominators(&ratios);
        let d_poly = dfac.expand_poly();
        let numerators: Vec<MPoly> = ratios
            .iter()
            .map(|r| r.mul(&dfac).expand_poly())
            .collect();

        // Effective quotient rho·D/sigma(D): the certificate is searched as
        // z/D where z telescopes the numerator combination against it.
        let eff = rho
            .mul(&dfac)
            .mul(&dfac.shift_var(sumvar, 1).recip());
        let eff_rf = eff.to_ratfun();
        let num_factors: Vec<MPoly> = eff
            .factors()
            .filter(|&(_, e)| e > 0)
            .map(|(p, _)| p.clone())
            .collect();
        let den_factors: Vec<MPoly> = eff
            .factors()
            .filter(|&(_, e)| e < 0)
            .map(|(p, _)| p.clone())
            .collect();
        let candidates = shift_candidates(&num_factors, &den_factors, sumvar);
        let split = split_quotient(eff_rf.num(), eff_rf.den(), sumvar, &candidates);
        let b1 = split.b.shift_var(sumvar, -1);

        let max_num_deg = numerators
            .iter()
            .map(|p| p.degree_in(sumvar) as i64)
            .max()
            .unwrap_or(0);
        let dc = split.c.degree_in(sumvar) as i64 + max_num_deg;
        let Some(deg) = gosper_degree_bound(&split.a, &b1, dc, sumvar) else {
            continue;
        };

        // Homogeneous system in (x_0..x_deg, lambda_alpha): coefficients of
        // each power of the summation variable in
        //   a·X(v+1) - b1·X(v) - c·(sum lambda_alpha n_alpha) = 0.
        let x_cols = gosper_columns(&split.a, &b1, deg, sumvar);
        let lam_cols: Vec<MPoly> = numerators.iter().map(|n| split.c.mul(n)).collect();
        let col_coeffs: Vec<Vec<MPoly>> = x_cols
            .iter()
            .map(|m| m.coeffs_in_var(sumvar))
            .chain(lam_cols.iter().map(|m| m.neg().coeffs_in_var(sumvar)))
            .collect();
        let max_pow = col_coeffs.iter().map(|cc| cc.len()).max().unwrap_or(1);
        let zero = MPoly::zero(&table);
        let rows: Vec<Vec<RatFun>> = (0..max_pow)
            .map(|p| {
                col_coeffs
                    .iter()
                    .map(|cc| RatFun::from_poly(cc.get(p).unwrap_or(&zero).clone()))
                    .collect()
            })
            .collect();
        let sol = solve_linear(&rows, None, &table);

        let nx = deg + 1;
        let mut best: Option<CTResult> = None;
        for vec in &sol.nullspace {
            let lam = &vec[nx..];
            if lam.iter().all(|c| c.is_zero()) {
                continue;
            }
            let mut op = OrePoly::zero(&algebra);
            for (i, e) in support.iter().enumerate() {
                if !lam[i].is_zero() {
                    op = op.add(&OrePoly::monomial(&algebra, e.clone(), lam[i].clone()));
                }
            }
            let v_rf = RatFun::var(&table, sumvar);
            let mut xpoly = RatFun::zero(&table);
            for (i, xi) in vec[..nx].iter().enumerate() {
                xpoly = xpoly.add(&xi.mul(&v_rf.pow(i as i32)));
            }
            // q = b1·X / (c·D)
            let q = xpoly.mul(&RatFun::new(b1.clone(), split.c.mul(&d_poly)));
            let normalized = op.normalize();
            let u = normalization_factor(&op, &normalized);
            let mut certificates = BTreeMap::new();
            certificates.insert(sumvar, q.mul(&u));
            let residual = ct_residual(t, &normalized, &certificates)?;
            if !residual.is_zero() {
                continue;
            }
            let cand = CTResult {
                telescoper: normalized,
                certificates,
                residual,
            };
            best = pick_smaller(best, cand);
        }
        if let Some(found) = best {
            return Ok(found);
        }
    }
    Err(TelescopeError::NotFound { max_order })
}

/// Keeps the candidate whose operator has smaller total order (ties: fewer
/// terms, then the earlier one).
fn pick_smaller(best: Option<CTResult>, cand: CTResult) -> Option<CTResult> {
    match best {
        None => Some(cand),
        Some(b) => {
            let kb = (b.telescoper.total_order(), b.telescoper.terms.len());
            let kc = (cand.telescoper.total_order(), cand.telescoper.terms.len());
            if kc < kb {
                Some(cand)
            } else {
                Some(b)
            }
        }
    }
}

/// Caps for the multi-sum search: the operator part is escalated up to the
/// caller's `max_order`, the summation-shift depth of the certificate cells
/// up to `max_sum_order`, and the total degree (in the summation variables)
/// of the polynomial numerators attached to each cell up to
/// `max_coeff_degree`.
#[derive(Clone, Copy, Debug)]
pub struct DegreeBudget {
    pub max_sum_order: usize,
    pub max_coeff_degree: usize,
}

impl Default for DegreeBudget {
    fn default() -> DegreeBudget {
        DegreeBudget {
            max_sum_order: 3,
            max_coeff_degree: 4,
        }
    }
}

/// Multi-sum creative telescoping.  Searches directly for the telescoping
/// identity P·t = sum_v Delta_v(q_v·t): the unknowns are the coefficients
/// p_delta of the operator P (free of the summation variables) together
/// with each certificate q_v written as an unknown numerator polynomial in
/// the summation variables over a predicted denominator.  The prediction
/// takes q_v as a combination of shift quotients (S^delta S^gamma t)/t of
/// bounded depth — so its denominator divides the least common denominator
/// of those cells — with a polynomial coefficient of bounded degree per
/// cell.  Clearing that denominator and equating coefficients of the
/// summation-variable monomials gives one homogeneous linear system over
/// the parameter field per level; levels escalate in the total of the three
/// depths (operator order, cell shift depth, numerator degree), cheaper
/// levels first, so small telescopers are found before large ones.
pub fn multisum_ct(
    t: &HyperTerm,
    sumvars: &[VarId],
    telescoper_vars: &[VarId],
    max_order: usize,
    budget: &DegreeBudget,
) -> Result<CTResult, TelescopeError> {
    assert!(!sumvars.is_empty(), "need at least one summation variable");
    for v in sumvars {
        assert!(
            !telescoper_vars.contains(v),
            "summation variable cannot also be shifted by the telescoper"
        );
    }
    let table = t.table().clone();
    let algebra = OreAlgebra::new(&table, telescoper_vars);
    assert!(max_order >= 1 && budget.max_sum_order >= 1);
    let cap = max_order + budget.max_sum_order + budget.max_coeff_degree;
    for total in 2..=cap {
        for d_sum in 1..=budget.max_sum_order.min(total - 1) {
            for d_tele in 1..=max_order.min(total - d_sum) {
                let d_coeff = total - d_sum - d_tele;
                if d_coeff > budget.max_coeff_degree {
                    continue;
                }
                if let Some(found) =
                    multisum_level(t, sumvars, &algebra, d_tele, d_sum, d_coeff)?
                {
                    return Ok(found);
                }
            }
        }
    }
    Err(TelescopeError::NotFound { max_order })
}

/// One unknown of a level's linear system.
enum LevelUnknown {
    /// Telescoper coefficient at the given parameter-shift exponent.
    Operator(Expo),
    /// Coefficient of `mono` (a monomial in the summation variables) in the
    /// numerator of the certificate for `sumvars[slot]`.
    Certificate { slot: usize, mono: Expo },
}

fn multisum_level(
    t: &HyperTerm,
    sumvars: &[VarId],
    algebra: &OreAlgebra,
    d_tele: usize,
    d_sum: usize,
    d_coeff: usize,
) -> Result<Option<CTResult>, TelescopeError> {
    let trace = std::env::var_os("HOLOSUM_TRACE").is_some();
    let t0 = std::time::Instant::now();
    let table = t.table().clone();
    let vcount = sumvars.len();

    let shift_map = |delta: &Expo, gamma: &Expo| -> BTreeMap<VarId, i64> {
        let mut map = BTreeMap::new();
        for (j, &v) in sumvars.iter().enumerate() {
            if gamma.0[j] > 0 {
                map.insert(v, gamma.0[j] as i64);
            }
        }
        for i in 0..algebra.nsymbols() {
            if delta.0[i] > 0 {
                map.insert(algebra.shifted_var(i), delta.0[i] as i64);
            }
        }
        map
    };
    let sum_degree = |p: &MPoly| -> i64 {
        p.terms
            .keys()
            .map(|ex| sumvars.iter().map(|&v| ex.0[v] as i64).sum::<i64>())
            .max()
            .unwrap_or(0)
    };

    // Denominator prediction.  The certificate for v is searched as
    // q_v = Y_v / D_v with Y_v an unknown polynomial in the summation
    // variables: D_v is the least common denominator of the shift quotients
    // (S^delta S^gamma t)/t over parameter shifts delta up to d_tele and
    // summation shifts gamma of depth below d_sum touching only v and later
    // summation variables (the triangular restriction removes gauge
    // freedom between certificates), and deg Y_v covers any combination of
    // those quotients with polynomial weights of degree up to d_coeff.
    let tele_cells = graded_support(algebra.nsymbols(), d_tele as u16);
    let gammas = graded_support(vcount, (d_sum - 1) as u16);
    let mut op_ratios = Vec::with_capacity(tele_cells.len());
    for delta in &tele_cells {
        op_ratios.push(t.shift_ratio_factored(&shift_map(delta, &Expo::zero()))?);
    }
    let mut cert_den: Vec<crate::factored::Factored> = Vec::with_capacity(vcount);
    let mut cert_deg: Vec<i64> = Vec::with_capacity(vcount);
    for slot in 0..vcount {
        let mut cell_ratios = Vec::new();
        for gamma in &gammas {
            if gamma.0[..slot].iter().any(|&g| g > 0) {
                continue;
            }
            for delta in &tele_cells {
                cell_ratios.push(t.shift_ratio_factored(&shift_map(delta, gamma))?);
            }
        }
        let dv = lcm_denominators(&cell_ratios);
        let dv_deg: i64 = dv.factors().map(|(p, e)| e.max(0) * sum_degree(p)).sum();
        cert_deg.push(dv_deg + d_coeff as i64);
        cert_den.push(dv);
    }

    let mut unknowns: Vec<LevelUnknown> = Vec::new();
    for delta in &tele_cells {
        unknowns.push(LevelUnknown::Operator(*delta));
    }
    for slot in 0..vcount {
        for mono in graded_support(vcount, cert_deg[slot].max(0) as u16) {
            unknowns.push(LevelUnknown::Certificate { slot, mono });
        }
    }
    let ncols = unknowns.len();
    if ncols > 6000 {
        // A one-level ansatz this wide is past what exact elimination can
        // settle in reasonable time; treat the level as exhausted and let
        // the caller escalate along a cheaper axis.
        if trace {
            eprintln!("[level {d_tele},{d_sum},{d_coeff}] skipped: ncols={ncols}");
        }
        return Ok(None);
    }

    // Everything whose denominator the cleared identity must absorb: the
    // operator shift quotients, each predicted denominator, and its forward
    // shift combined with the one-step quotient of its own variable.
    let mut to_clear = op_ratios.clone();
    let mut rho = Vec::with_capacity(vcount);
    for (slot, &v) in sumvars.iter().enumerate() {
        let r = t.shift_quotient_factored(v)?;
        to_clear.push(cert_den[slot].recip());
        to_clear.push(cert_den[slot].shift_var(v, 1).recip().mul(&r));
        rho.push(r);
    }
    let dfac = lcm_denominators(&to_clear);

    // Per-variable column building blocks:
    //   plus_v  = num(rho_v) · dfac / (sigma_v(D_v) · den(rho_v))
    //   minus_v = dfac / D_v
    // so the column of a numerator monomial y is
    //   sigma_v(y)·plus_v − y·minus_v,
    // the cleared form of sigma_v(y/D_v)·rho_v − y/D_v.
    let mut plus = Vec::with_capacity(vcount);
    let mut minus = Vec::with_capacity(vcount);
    for (slot, &v) in sumvars.iter().enumerate() {
        let p = rho[slot]
            .mul(&cert_den[slot].shift_var(v, 1).recip())
            .mul(&dfac)
            .expand_poly();
        let m = cert_den[slot].recip().mul(&dfac).expand_poly();
        plus.push(p);
        minus.push(m);
    }

    let mono_poly = |mono: &Expo| -> MPoly {
        let mut e = Expo::zero();
        for (j, &v) in sumvars.iter().enumerate() {
            e.0[v] = mono.0[j];
        }
        MPoly::monomial(&table, e, BigRational::from_integer(1.into()))
    };

    let columns: Vec<MPoly> = unknowns
        .iter()
        .enumerate()
        .map(|(i, u)| match u {
            LevelUnknown::Operator(_) => {
                op_ratios[i].mul(&dfac).expand_poly()
            }
            LevelUnknown::Certificate { slot, mono } => {
                let v = sumvars[*slot];
                let m = mono_poly(mono);
                let v_succ = MPoly::var(&table, v).add(&MPoly::int(&table, 1));
                let m_shift = m.substitute(v, &v_succ);
                m_shift.mul(&plus[*slot]).sub(&m.mul(&minus[*slot]))
            }
        })
        .collect();
    if trace {
        let nt: usize = columns.iter().map(|p| p.terms.len()).sum();
        eprintln!(
            "[level {d_tele},{d_sum},{d_coeff}] ncols={ncols} deg={cert_deg:?} column terms={nt} ({:?})",
            t0.elapsed()
        );
    }

    // One equation per monomial in the summation variables, with polynomial
    // coefficients in the remaining variables.
    let mut rows_map: BTreeMap<Expo, Vec<MPoly>> = BTreeMap::new();
    for (col, np) in columns.iter().enumerate() {
        for (e, c) in &np.terms {
            let mut sv = Expo::zero();
            let mut pv = *e;
            for &v in sumvars {
                sv.0[v] = e.0[v];
                pv.0[v] = 0;
            }
            let entry = rows_map
                .entry(sv)
                .or_insert_with(|| vec![MPoly::zero(&table); ncols]);
            let mono = MPoly {
                table: table.clone(),
                terms: BTreeMap::from([(pv, c.clone())]),
            };
            entry[col] = entry[col].add(&mono);
        }
    }
    let all_rows: Vec<Vec<MPoly>> = rows_map.into_values().collect();

    // Most monomial equations are redundant; a modular rank probe picks a
    // spanning subset, and every candidate solution is then re-verified
    // exactly against all rows (failures re-enter the exact solve).
    let pre = preselect_rows(&all_rows, ncols, &table);
    if trace {
        eprintln!(
            "[level {d_tele},{d_sum},{d_coeff}] rows={} picked={} full_rank={} support={:?} ({:?})",
            all_rows.len(),
            pre.rows.len(),
            pre.full_rank,
            pre.support.as_ref().map(|s| s.len()),
            t0.elapsed()
        );
    }
    if pre.full_rank {
        // Rank can only drop under reduction mod p, so full modular rank
        // certifies that the exact nullspace is empty: skip this level
        // without running the exact elimination.
        return Ok(None);
    }

    // Gauge analysis.  Solutions with a vanishing operator part are
    // coboundaries: certificate families whose joint differences cancel on
    // their own.  They carry no telescoper and inflate the exact solve, so
    // a level whose probed nullspace projects to zero on the operator
    // coordinates is skipped outright, and otherwise one certificate
    // coordinate per coboundary direction is pinned to zero, cutting the
    // coboundary subspace out of the system before the exact elimination.
    let n_ops = tele_cells.len();
    let mut pinned: BTreeSet<usize> = BTreeSet::new();
    let mut solution_support: Option<Vec<usize>> = pre.support.clone();
    if !pre.null_basis.is_empty() {
        let expand = |combo: &[u64]| -> Vec<u64> {
            let mut v = vec![0u64; ncols];
            for (i, &ci) in combo.iter().enumerate() {
                if ci == 0 {
                    continue;
                }
                for (j, &x) in pre.null_basis[i].iter().enumerate() {
                    v[j] = modp::add(v[j], modp::mul(ci, x));
                }
            }
            v
        };
        let mut proj = modp::Preselector::new(pre.null_basis.len());
        for o in 0..n_ops {
            let row: Vec<u64> = pre.null_basis.iter().map(|v| v[o]).collect();
            proj.offer(&row, o);
        }
        if proj.rank() == 0 {
            if trace {
                eprintln!(
                    "[level {d_tele},{d_sum},{d_coeff}] modular solutions are all coboundaries ({:?})",
                    t0.elapsed()
                );
            }
            return Ok(None);
        }
        // Coefficient combinations of the modular basis with zero operator
        // part, expanded back to full-width coboundary vectors.
        let mut gauge: Vec<Vec<u64>> = proj.nullspace().iter().map(|c| expand(c)).collect();
        for k in 0..gauge.len() {
            let Some(col) = (n_ops..ncols).find(|&c| gauge[k][c] != 0) else {
                continue;
            };
            pinned.insert(col);
            let inv = modp::inv(gauge[k][col]).expect("pivot is nonzero");
            let pivot_row: Vec<u64> = gauge[k].iter().map(|&x| modp::mul(x, inv)).collect();
            for (idx, r) in gauge.iter_mut().enumerate() {
                if idx == k || r[col] == 0 {
                    continue;
                }
                let f = r[col];
                for (j, e) in r.iter_mut().enumerate() {
                    *e = modp::sub(*e, modp::mul(f, pivot_row[j]));
                }
            }
            gauge[k] = pivot_row;
        }
        // With the coboundary directions pinned to zero, the combinations
        // that survive span the operator-bearing solutions; their joint
        // support is where the exact solve has to look.
        let mut sel = modp::Preselector::new(pre.null_basis.len());
        for &z in &pinned {
            let row: Vec<u64> = pre.null_basis.iter().map(|v| v[z]).collect();
            sel.offer(&row, z);
        }
        let mut support: BTreeSet<usize> = BTreeSet::new();
        for combo in sel.nullspace() {
            for (j, &x) in expand(&combo).iter().enumerate() {
                if x != 0 {
                    support.insert(j);
                }
            }
        }
        solution_support = Some(support.into_iter().collect());
        if trace {
            eprintln!(
                "[level {d_tele},{d_sum},{d_coeff}] pinned {} coboundary coordinates, solution support {} ({:?})",
                pinned.len(),
                solution_support.as_ref().map_or(0, |s| s.len()),
                t0.elapsed()
            );
        }
    }

    // The exact elimination runs on the columns the modular probe marked as
    // carrying the operator-bearing solutions (all of them when no probe
    // succeeded), minus the pinned ones.  A missed column could only hide a
    // solution whose coordinate vanished at the random probe point; nothing
    // unverified is ever returned, so the worst case is escalating to the
    // next level, not a wrong answer.
    let active: Vec<usize> = solution_support
        .unwrap_or_else(|| (0..ncols).collect())
        .into_iter()
        .filter(|c| !pinned.contains(c))
        .collect();
    if active.is_empty() {
        return Ok(None);
    }
    // The restriction leaves most equations redundant; a second probe on
    // the restricted system picks a near-minimal spanning subset of rows
    // for the exact elimination.
    let restricted: Vec<Vec<MPoly>> = all_rows
        .iter()
        .map(|row| active.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let pre2 = preselect_rows(&restricted, active.len(), &table);
    if pre2.full_rank {
        return Ok(None);
    }
    let mut selected: BTreeSet<usize> = pre2.rows.into_iter().collect();
    let nullspace = loop {
        let rows_rf: Vec<Vec<RatFun>> = selected
            .iter()
            .map(|&i| {
                restricted[i]
                    .iter()
                    .map(|m| RatFun::from_poly(m.clone()))
                    .collect::<Vec<RatFun>>()
            })
            .filter(|r| r.iter().any(|e| !e.is_zero()))
            .collect();
        let sol = solve_linear(&rows_rf, None, &table);
        if trace {
            eprintln!(
                "[level {d_tele},{d_sum},{d_coeff}] exact solve on {} rows x {} cols: nullity={} ({:?})",
                selected.len(),
                active.len(),
                sol.nullspace.len(),
                t0.elapsed()
            );
        }
        if sol.nullspace.is_empty() {
            return Ok(None);
        }
        let mut bad_row = None;
        'vectors: for vec in &sol.nullspace {
            for (i, row) in restricted.iter().enumerate() {
                if selected.contains(&i) {
                    continue;
                }
                let mut acc = RatFun::zero(&table);
                for (col, m) in row.iter().enumerate() {
                    if !m.is_zero() && !vec[col].is_zero() {
                        acc = acc.add(&vec[col].mul(&RatFun::from_poly(m.clone())));
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
                if trace {
                    eprintln!(
                        "[level {d_tele},{d_sum},{d_coeff}] candidate failed on row {i}; re-solving ({:?})",
                        t0.elapsed()
                    );
                }
                selected.insert(i);
            }
            None => {
                // Embed the restricted vectors back into the full column
                // space for extraction.
                break sol
                    .nullspace
                    .iter()
                    .map(|v| {
                        let mut full = vec![RatFun::zero(&table); ncols];
                        for (slot, &c) in active.iter().enumerate() {
                            full[c] = v[slot].clone();
                        }
                        full
                    })
                    .collect::<Vec<Vec<RatFun>>>();
            }
        }
    };

    // Denominators as rational functions, needed only once a solution
    // exists.
    let den_rf: Vec<RatFun> = cert_den
        .iter()
        .map(|d| RatFun::from_poly(d.expand_poly()))
        .collect();
    let mut best: Option<CTResult> = None;
    for vec in &nullspace {
        let mut op = OrePoly::zero(algebra);
        for (col, u) in unknowns.iter().enumerate() {
            if let LevelUnknown::Operator(delta) = u {
                if !vec[col].is_zero() {
                    op = op.add(&OrePoly::monomial(algebra, *delta, vec[col].clone()));
                }
            }
        }
        if op.is_zero() {
            continue;
        }
        let mut numerators: Vec<RatFun> = vec![RatFun::zero(&table); vcount];
        for (col, u) in unknowns.iter().enumerate() {
            if let LevelUnknown::Certificate { slot, mono } = u {
                if vec[col].is_zero() {
                    continue;
                }
                let w = vec[col].mul(&RatFun::from_poly(mono_poly(mono)));
                numerators[*slot] = numerators[*slot].add(&w);
            }
        }
        let certificates: BTreeMap<VarId, RatFun> = sumvars
            .iter()
            .enumerate()
            .map(|(slot, &v)| (v, numerators[slot].div(&den_rf[slot]).neg()))
            .collect();
        let normalized = op.normalize();
        let u = normalization_factor(&op, &normalized);
        let certificates: BTreeMap<VarId, RatFun> = certificates
            .into_iter()
            .map(|(v, q)| (v, q.mul(&u)))
            .collect();
        if trace {
            eprintln!(
                "[level {d_tele},{d_sum},{d_coeff}] verifying a candidate operator ({:?})",
                t0.elapsed()
            );
        }
        let residual = ct_residual(t, &normalized, &certificates)?;
        if !residual.is_zero() {
            continue;
        }
        let cand = CTResult {
            telescoper: normalized,
            certificates,
            residual,
        };
        best = pick_smaller(best, cand);
    }
    Ok(best)
}

/// Deterministic xorshift-style stream for the modular probe points.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Indices of a row subset that spans the full row space modulo a large
/// prime at random variable images (so, with overwhelming probability,
/// exactly as well).  The second component is true when the probed rank
/// reached the column count; since rank can only drop under modular
/// reduction, that certifies an exactly trivial nullspace.  Nothing else is
/// assumed by the caller: solutions of the subset system are verified
/// against all rows.
/// Outcome of the modular probe over the candidate equations.
struct Preselection {
    /// Indices of a row subset spanning the probed row space.
    rows: Vec<usize>,
    /// The probed rank reached the column count, certifying an exactly
    /// trivial nullspace (rank can only drop under modular reduction).
    full_rank: bool,
    /// Union of the supports of the modular nullspace basis, when the probe
    /// saw a deficiency.  With overwhelming probability the exact nullspace
    /// lives on these columns, so the exact solve may restrict to them;
    /// every candidate is re-verified against all rows regardless.
    support: Option<Vec<usize>>,
    /// The modular nullspace basis itself, for gauge analysis.
    null_basis: Vec<Vec<u64>>,
}

fn preselect_rows(
    rows: &[Vec<MPoly>],
    ncols: usize,
    table: &Arc<crate::vars::VarTable>,
) -> Preselection {
    'trial: for trial in 0u64..8 {
        let mut rng = SplitMix64(0x5DEE_CE66_D015_73AB ^ trial);
        let images: Vec<u64> = (0..table.len())
            .map(|_| {
                let x = rng.next() % modp::P;
                if x == 0 {
                    1
                } else {
                    x
                }
            })
            .collect();
        let mut pre = modp::Preselector::new(ncols);
        let mut img_row = Vec::with_capacity(ncols);
        for (i, row) in rows.iter().enumerate() {
            img_row.clear();
            for m in row {
                match modp::eval_mpoly(m, &images) {
                    Some(x) => img_row.push(x),
                    None => continue 'trial,
                }
            }
            pre.offer(&img_row, i);
            if pre.rank() == ncols {
                return Preselection {
                    rows: pre.chosen,
                    full_rank: true,
                    support: None,
                    null_basis: Vec::new(),
                };
            }
        }
        let null_basis = pre.nullspace();
        let mut support: Vec<usize> = Vec::new();
        for v in &null_basis {
            for (c, &x) in v.iter().enumerate() {
                if x != 0 && !support.contains(&c) {
                    support.push(c);
                }
            }
        }
        support.sort_unstable();
        let chosen = if rows.len() <= ncols.max(8) {
            (0..rows.len()).collect()
        } else {
            pre.chosen
        };
        return Preselection {
            rows: chosen,
            full_rank: false,
            support: Some(support),
            null_basis,
        };
    }
    Preselection {
        rows: (0..rows.len()).collect(),
        full_rank: false,
        support: None,
        null_basis: Vec::new(),
    }
}

/// Where a certificate denominator vanishes, relative to a summation range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PoleLocation {
    /// Exactly at the lower evaluation point (the range's lower bound).
    LowerBoundary,
    /// Exactly at the upper evaluation point (one past the upper bound).
    UpperBoundary,
    Inside,
    Outside,
    /// Nonlinear factor, or a locus whose position depends on parameter
    /// values in conflicting ways.
    Unresolved,
}

impl fmt::Display for PoleLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PoleLocation::LowerBoundary => "lower boundary",
            PoleLocation::UpperBoundary => "upper boundary",
            PoleLocation::Inside => "inside",
            PoleLocation::Outside => "outside",
            PoleLocation::Unresolved => "unresolved",
        };
        f.write_str(s)
    }
}

/// One denominator factor of one certificate, located relative to a range.
#[derive(Clone, Debug)]
pub struct SingularityEntry {
    /// The certificate variable whose q contained the factor.
    pub certificate_var: VarId,
    pub factor: MPoly,
    /// Value of the scanned variable at the pole, when the factor is
    /// linear in it.
    pub locus: Option<RatFun>,
    pub location: PoleLocation,
}

#[derive(Clone, Debug, Default)]
pub struct SingularityReport {
    pub entries: Vec<SingularityEntry>,
}

impl SingularityReport {
    /// True when no pole interferes with summing over the range: nothing
    /// inside and nothing unresolved.
    pub fn is_clean(&self) -> bool {
        self.entries.iter().all(|e| {
            e.location != PoleLocation::Inside && e.location != PoleLocation::Unresolved
        })
    }

    pub fn display(&self, table: &crate::vars::VarTable) -> String {
        if self.entries.is_empty() {
            return "no certificate poles involve the summation variable".to_string();
        }
        let mut out = String::new();
        for e in &self.entries {
            let locus = match &e.locus {
                Some(l) => format!(" at {l}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "certificate for {}: factor {} ({}{})\n",
                table.name(e.certificate_var),
                e.factor,
                e.location,
                locus
            ));
        }
        out
    }
}

/// Splits a polynomial into factors that can be separated by taking gcds
/// with single-variable shifts of itself.  Factors whose variable support
/// or shift structure differ come apart exactly; whatever stays lumped is
/// returned whole.  Every returned piece is primitive and divides the
/// input.
fn split_shiftwise(p: &MPoly) -> Vec<MPoly> {
    let prim = p.primitive_part();
    if prim.total_degree() == 0 {
        return Vec::new();
    }
    for w in 0..p.table.len() {
        if !prim.depends_on(w) {
            continue;
        }
        for j in 1..=8 {
            let g = gcd(&prim, &prim.shift_var(w, j));
            if g.total_degree() > 0 && g.total_degree() < prim.total_degree() {
                let rest = prim.exact_div(&g).expect("gcd divides");
                let mut out = split_shiftwise(&g);
                out.extend(split_shiftwise(&rest));
                return out;
            }
        }
    }
    vec![prim]
}

/// If `p` (of degree d >= 2 in v) is a constant multiple of the d-th power
/// of a polynomial linear in v, returns that linear polynomial.
fn linear_power_root(p: &MPoly, v: VarId) -> Option<MPoly> {
    let d = p.degree_in(v) as usize;
    let cc = p.coeffs_in_var(v);
    // (A·v + B)^d has leading coefficients A^d and d·A^(d-1)·B, so the
    // candidate root satisfies B/A = c_(d-1) / (d·c_d).
    let ratio = RatFun::new(cc[d - 1].clone(), cc[d].scale(&crate::mpoly::q(d as i64)));
    let lin = MPoly::var(&p.table, v)
        .mul(ratio.den())
        .add(ratio.num())
        .primitive_part();
    let mut rest = p.clone();
    for _ in 0..d {
        rest = rest.exact_div(&lin)?;
    }
    (rest.total_degree() == 0).then_some(lin)
}

/// Locates every certificate-denominator factor that involves the range
/// variable of `spec` relative to the two evaluation points `lower` and
/// `upper + 1`.  Exact (identity-level) coincidence decides the boundary
/// cases; constant offsets decide inside/outside; parameter-dependent
/// positions are probed on a small sample grid and reported as unresolved
/// when the samples disagree.
pub fn scan_singularities(result: &CTResult, spec: &SumSpec) -> SingularityReport {
    let table = result.telescoper.algebra.table().clone();
    let v = spec.var;
    let lower = RatFun::from_poly(spec.lower.to_mpoly(&table));
    let upper_plus = RatFun::from_poly(spec.upper.to_mpoly(&table))
        .add(&RatFun::one(&table));
    let mut report = SingularityReport::default();
    for (&cvar, q) in &result.certificates {
        let mut seen = BTreeSet::new();
        for factor in split_shiftwise(q.den()) {
            if !factor.depends_on(v) || !seen.insert(factor.clone()) {
                continue;
            }
            let linear = if factor.degree_in(v) == 1 {
                Some(factor.clone())
            } else {
                linear_power_root(&factor, v)
            };
            let Some(lin) = linear else {
                report.entries.push(SingularityEntry {
                    certificate_var: cvar,
                    factor,
                    locus: None,
                    location: PoleLocation::Unresolved,
                });
                continue;
            };
            let coeffs = lin.coeffs_in_var(v);
            let locus =
                RatFun::from_poly(coeffs[0].neg()).div(&RatFun::from_poly(coeffs[1].clone()));
            let d_lo = locus.sub(&lower);
            let d_hi = locus.sub(&upper_plus);
            let location = classify_locus(&d_lo, &d_hi, &table);
            report.entries.push(SingularityEntry {
                certificate_var: cvar,
                factor,
                locus: Some(locus),
                location,
            });
        }
    }
    report
}

fn classify_locus(
    d_lo: &RatFun,
    d_hi: &RatFun,
    table: &Arc<crate::vars::VarTable>,
) -> PoleLocation {
    if d_hi.is_zero() {
        return PoleLocation::UpperBoundary;
    }
    if d_lo.is_zero() {
        return PoleLocation::LowerBoundary;
    }
    let c_lo = d_lo.constant_value();
    let c_hi = d_hi.constant_value();
    if let (Some(lo), Some(hi)) = (&c_lo, &c_hi) {
        return exact_interval_location(lo, hi);
    }
    // Parameter-dependent position: probe integer assignments that order
    // the variables differently (so differences between parameters change
    // sign across probes) and accept only a unanimous verdict.
    let n = table.len();
    let assignments: [Box<dyn Fn(usize) -> i64>; 4] = [
        Box::new(|i| 5 + 4 * i as i64),
        Box::new(move |i| 5 + 4 * (n - 1 - i) as i64),
        Box::new(|i| if i % 2 == 0 { 6 + 3 * i as i64 } else { 40 + 5 * i as i64 }),
        Box::new(|i| if i % 2 == 1 { 7 + 3 * i as i64 } else { 43 + 5 * i as i64 }),
    ];
    let mut verdict: Option<PoleLocation> = None;
    for assign in &assignments {
        let mut point = BTreeMap::new();
        for var in 0..n {
            point.insert(var, BigRational::from_integer(assign(var).into()));
        }
        let (Ok(lo), Ok(hi)) = (d_lo.eval_all(&point), d_hi.eval_all(&point)) else {
            continue;
        };
        if lo.is_zero() || hi.is_zero() {
            return PoleLocation::Unresolved;
        }
        let here = exact_interval_location(&lo, &hi);
        match &verdict {
            None => verdict = Some(here),
            Some(prev) if *prev != here => return PoleLocation::Unresolved,
            Some(_) => {}
        }
    }
    verdict.unwrap_or(PoleLocation::Unresolved)
}

fn exact_interval_location(lo: &BigRational, hi: &BigRational) -> PoleLocation {
    if lo.is_negative() || hi.is_positive() {
        PoleLocation::Outside
    } else {
        PoleLocation::Inside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperterm::{binomial_int, Convention};
    use crate::linform::LinForm;
    use crate::vars::VarTable;
    use num::One;

    fn pascal_table() -> Arc<VarTable> {
        VarTable::new(&["n", "k"])
    }

    fn choose_nk(table: &Arc<VarTable>) -> HyperTerm {
        HyperTerm::one(table)
            .binomial(LinForm::var(0), LinForm::var(1))
            .with_sum_vars(&[1])
            .with_param_vars(&[0])
    }

    #[test]
    fn first_order_pair_for_binomial() {
        let table = pascal_table();
        let t = choose_nk(&table);
        let res = zeilberger(&t, 1, &[0], 3).unwrap();
        assert_eq!(res.telescoper.to_record(), "ore{S_n}[(1): 1; (0): -2]");
        let q = &res.certificates[&1];
        assert_eq!(*q, parse_ratfun("k/(k - n - 1)", &table).unwrap());
        assert!(res.residual.is_zero());
        assert!(verify_ct(&t, &res).unwrap().is_zero());
    }

    #[test]
    fn squared_binomial_needs_order_one() {
        // central binomial sums: the operator (n+1)S_n - (4n+2) with some
        // certificate; checked against independently computed sums.
        let table = pascal_table();
        let t = choose_nk(&table).mul(&choose_nk(&table));
        let res = zeilberger(&t, 1, &[0], 3).unwrap();
        assert_eq!(
            res.telescoper.to_record(),
            "ore{S_n}[(1): n + 1; (0): -4*n - 2]"
        );
        // sum_k C(n,k)^2 satisfies the operator
        let f = |n: i64| -> BigRational {
            let mut acc = BigRational::zero();
            for k in 0..=n {
                let b = binomial_int(n, k, Convention::Combinatorial);
                acc += BigRational::from_integer(b.clone() * b);
            }
            acc
        };
        for n0 in 0..=8i64 {
            let mut point = BTreeMap::new();
            point.insert(0, BigRational::from_integer(n0.into()));
            point.insert(1, BigRational::zero());
            let mut acc = BigRational::zero();
            for (e, c) in &res.telescoper.terms {
                acc += c.eval_all(&point).unwrap() * f(n0 + e.0[0] as i64);
            }
            assert!(acc.is_zero(), "operator fails at n = {n0}");
        }
    }

    #[test]
    fn operator_order_zero_when_term_telescopes_directly() {
        // t = k depends on no parameter: P = 1, q the antidifference ratio.
        let table = pascal_table();
        let t = HyperTerm::one(&table)
            .rational(RatFun::var(&table, 1))
            .with_sum_vars(&[1])
            .with_param_vars(&[0]);
        let res = zeilberger(&t, 1, &[0], 2).unwrap();
        assert_eq!(res.telescoper.to_record(), "ore{S_n}[(0): 1]");
        let q = &res.certificates[&1];
        assert_eq!(*q, parse_ratfun("(k - 1)/2", &table).unwrap());
    }

    #[test]
    fn multisum_on_one_variable_matches_single_sum_search() {
        let table = pascal_table();
        let t = choose_nk(&table);
        let single = zeilberger(&t, 1, &[0], 3).unwrap();
        let multi = multisum_ct(&t, &[1], &[0], 3, &DegreeBudget::default()).unwrap();
        assert_eq!(multi.telescoper, single.telescoper);
        assert_eq!(multi.certificates[&1], single.certificates[&1]);
        assert!(multi.residual.is_zero());
    }

    #[test]
    fn two_fold_sum_annihilates_powers_of_three() {
        // t = C(n,k)·C(k,j): sum over j then k gives 3^n.
        let table = VarTable::new(&["n", "k", "j"]);
        let t = HyperTerm::one(&table)
            .binomial(LinForm::var(0), LinForm::var(1))
            .binomial(LinForm::var(1), LinForm::var(2))
            .with_sum_vars(&[1, 2])
            .with_param_vars(&[0]);
        let res = multisum_ct(&t, &[2, 1], &[0], 4, &DegreeBudget::default()).unwrap();
        assert!(res.residual.is_zero());
        assert!(verify_ct(&t, &res).unwrap().is_zero());
        for c in res.telescoper.terms.values() {
            assert!(!c.num().depends_on(1) && !c.num().depends_on(2));
            assert!(!c.den().depends_on(1) && !c.den().depends_on(2));
        }
        let f = |n: i64| -> BigRational {
            let mut acc = BigRational::zero();
            for k in 0..=n {
                for j in 0..=k {
                    let b = binomial_int(n, k, Convention::Combinatorial)
                        * binomial_int(k, j, Convention::Combinatorial);
                    acc += BigRational::from_integer(b);
                }
            }
            acc
        };
        for n0 in 3..=9i64 {
            let mut point = BTreeMap::new();
            point.insert(0, BigRational::from_integer(n0.into()));
            point.insert(1, BigRational::one());
            point.insert(2, BigRational::one());
            let mut acc = BigRational::zero();
            for (e, c) in &res.telescoper.terms {
                acc += c.eval_all(&point).unwrap() * f(n0 + e.0[0] as i64);
            }
            assert!(acc.is_zero(), "operator fails at n = {n0}");
        }
    }

    #[test]
    fn perturbed_certificate_fails_verification() {
        let table = pascal_table();
        let t = choose_nk(&table);
        let mut res = zeilberger(&t, 1, &[0], 3).unwrap();
        let broken = res.certificates[&1].add(&RatFun::one(&table));
        res.certificates.insert(1, broken);
        assert!(!verify_ct(&t, &res).unwrap().is_zero());
    }

    #[test]
    fn result_record_round_trips() {
        let table = pascal_table();
        let t = choose_nk(&table);
        let res = zeilberger(&t, 1, &[0], 3).unwrap();
        let record = res.to_record();
        assert!(record.starts_with("ct{telescoper: ore{S_n}"));
        assert!(record.ends_with("; residual: 0}"));
        let back = CTResult::parse(&record, &res.telescoper.algebra).unwrap();
        assert_eq!(back, res);
        assert_eq!(back.to_record(), record);
    }

    #[test]
    fn scan_reports_pole_at_upper_evaluation_point() {
        let table = pascal_table();
        let t = choose_nk(&table);
        let res = zeilberger(&t, 1, &[0], 3).unwrap();
        // sum over k from 5 to n: the certificate pole k = n + 1 sits at
        // the upper evaluation point.
        let spec = SumSpec::new(1, LinForm::constant(5), LinForm::var(0), t.clone());
        let report = scan_singularities(&res, &spec);
        assert_eq!(report.entries.len(), 1);
        let entry = &report.entries[0];
        assert_eq!(entry.location, PoleLocation::UpperBoundary);
        assert_eq!(
            entry.locus.clone().unwrap(),
            parse_ratfun("n + 1", &table).unwrap()
        );
        assert!(report.is_clean());
    }

    #[test]
    fn scan_separates_resolved_and_unresolved_poles() {
        // certificate with denominator (k - r + 1)(r - s - 1), summing over
        // r from 1 to s: the pole r = s + 1 is exactly the upper evaluation
        // point, while r = k + 1 may fall inside or outside depending on k.
        let table = VarTable::new(&["b", "x", "s", "k", "r"]);
        let algebra = OreAlgebra::new(&table, &[2]);
        let q = parse_ratfun(
            "-(b*x*r*(r - 1)*(k - s))/((k - r + 1)*(r - s - 1))",
            &table,
        )
        .unwrap();
        let mut certificates = BTreeMap::new();
        certificates.insert(4, q);
        let res = CTResult {
            telescoper: OrePoly::one(&algebra),
            certificates,
            residual: RatFun::zero(&table),
        };
        let spec = SumSpec::new(
            4,
            LinForm::constant(1),
            LinForm::var(2),
            HyperTerm::one(&table),
        );
        let report = scan_singularities(&res, &spec);
        assert_eq!(report.entries.len(), 2);
        let upper: Vec<_> = report
            .entries
            .iter()
            .filter(|e| e.location == PoleLocation::UpperBoundary)
            .collect();
        assert_eq!(upper.len(), 1);
        assert_eq!(
            upper[0].locus.clone().unwrap(),
            parse_ratfun("s + 1", &table).unwrap()
        );
        let unresolved: Vec<_> = report
            .entries
            .iter()
            .filter(|e| e.location == PoleLocation::Unresolved)
            .collect();
        assert_eq!(unresolved.len(), 1);
        assert_eq!(
            unresolved[0].locus.clone().unwrap(),
            parse_ratfun("k + 1", &table).unwrap()
        );
        assert!(!report.is_clean());
    }

    #[test]
    fn scan_ignores_certificates_free_of_the_range_variable() {
        let table = pascal_table();
        let algebra = OreAlgebra::new(&table, &[0]);
        let mut certificates = BTreeMap::new();
        certificates.insert(1, RatFun::one(&table));
        let res = CTResult {
            telescoper: OrePoly::one(&algebra),
            certificates,
            residual: RatFun::zero(&table),
        };
        let spec = SumSpec::new(
            1,
            LinForm::constant(0),
            LinForm::var(0),
            HyperTerm::one(&table),
        );
        let report = scan_singularities(&res, &spec);
        assert!(report.entries.is_empty());
        assert!(report.is_clean());
    }
}
