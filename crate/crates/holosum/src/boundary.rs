//! Definite sums over integer ranges: the data describing one summation
//! layer and the machinery that turns a telescoping identity for the
//! summand into an operator relation for the sum itself.
//!
//! Summing the pointwise identity `P·t = Δ_v(q·t)` over a range produces
//! three kinds of correction terms:
//!
//! - *delta parts*: `q·t` evaluated at the two fenceposts of the
//!   (possibly shrunken) telescoping range;
//! - *compensated terms*: `−P·t` at points removed from the range so that
//!   no certificate evaluation hits a pole;
//! - *comp S-shift terms*: summand values peeled off because a shift of
//!   the operator moves a parameter-dependent bound, so the shifted sum
//!   over- or under-covers the fixed telescoping range.
//!
//! The assembled [`InhomRelation`] stores every piece with the sign that
//! puts it on the operator side: `P·(sum) + Σ pieces = 0` holds exactly at
//! every integer point of the validity region.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::BigRational;
use thiserror::Error;

use crate::guessing::{guess_recurrence_auto, GuessOutcome, GuessProblem};
use crate::hyperterm::{Convention, EpsMode, HyperTerm, TermFactor};
use crate::linform::LinForm;
use crate::ore::{ore_lclm, OreAlgebra, OrePoly};
use crate::ratfun::{AlgebraError, RatFun};
use crate::telescoping::{scan_singularities, CTResult, PoleLocation};
use crate::vars::{VarId, VarTable};

/// One summation layer: `sum over var from lower to upper of summand`.
/// Both bounds are inclusive affine expressions in the remaining
/// variables; the summand may still contain further (inner) summation
/// variables of its own.
#[derive(Clone, Debug)]
pub struct SumSpec {
    pub var: VarId,
    pub lower: LinForm,
    pub upper: LinForm,
    pub summand: HyperTerm,
}

impl SumSpec {
    pub fn new(var: VarId, lower: LinForm, upper: LinForm, summand: HyperTerm) -> SumSpec {
        SumSpec {
            var,
            lower,
            upper,
            summand,
        }
    }

    pub fn table(&self) -> &Arc<VarTable> {
        self.summand.table()
    }

    /// Human-readable `sum_{var = lower}^{upper} summand`.
    pub fn display(&self) -> String {
        let table = self.summand.table();
        format!(
            "sum_{{{} = {}}}^{{{}}} {}",
            table.name(self.var),
            self.lower.display(table),
            self.upper.display(table),
            self.summand
        )
    }

    /// Exact value at an integer point binding at least the bound
    /// variables; variables absent from `point` stay symbolic in the
    /// result.  An empty range (upper < lower) sums to zero.
    pub fn eval(
        &self,
        point: &BTreeMap<VarId, i64>,
        convention: Convention,
        eps_mode: EpsMode,
    ) -> Result<RatFun, AlgebraError> {
        let table = self.table();
        let lo = self.lower.eval(point);
        let hi = self.upper.eval(point);
        let mut bindings: BTreeMap<VarId, BigRational> = point
            .iter()
            .map(|(&w, &n)| (w, BigRational::from_integer(n.into())))
            .collect();
        let mut acc = RatFun::zero(table);
        for u in lo..=hi {
            bindings.insert(self.var, BigRational::from_integer(u.into()));
            acc = acc.add(&self.summand.eval_term(&bindings, convention, eps_mode)?);
        }
        Ok(acc)
    }
}

impl fmt::Display for SumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display())
    }
}

/// Classification of one inhomogeneous piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    /// `q·t` at a fencepost of the telescoping range.
    Delta,
    /// `−P·t` at a point removed by shrinking and re-inserted here.
    Compensated,
    /// Summand values peeled off a shifted parameter-dependent bound.
    CompShift,
}

impl fmt::Display for PieceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PieceKind::Delta => "delta part",
            PieceKind::Compensated => "compensated term",
            PieceKind::CompShift => "comp S-shift",
        };
        write!(f, "{s}")
    }
}

/// One inhomogeneous piece: `coeff · term`, already evaluated at a
/// specific summation-variable point and signed so that the full relation
/// reads `P·(sum) + Σ pieces = 0`.
#[derive(Clone, Debug)]
pub struct TaggedTerm {
    pub kind: PieceKind,
    /// Rational cofactor (certificate or operator coefficient with its
    /// bookkeeping sign), free of the summation variable.
    pub coeff: RatFun,
    /// The (possibly parameter-shifted) summand at the boundary point.
    pub term: HyperTerm,
    /// Where the summation variable was evaluated, for reports.
    pub point: LinForm,
}

impl TaggedTerm {
    /// The piece folded into a single term.
    pub fn folded(&self) -> HyperTerm {
        self.term.clone().rational(self.coeff.clone())
    }

    /// Exact rational value when the piece reduces to one (no surviving
    /// combinatorial factors).
    pub fn closed_value(&self) -> Option<RatFun> {
        self.folded().reduce_closed().ok()?.as_pure_rational()
    }
}

/// An operator relation for a definite sum with explicit inhomogeneous
/// pieces: `operator · (sum) + Σ pieces = 0` at every integer point where
/// all `validity` forms are nonnegative.
#[derive(Clone, Debug)]
pub struct InhomRelation {
    pub operator: OrePoly,
    pub spec: SumSpec,
    pub pieces: Vec<TaggedTerm>,
    /// Pieces reduced to closed terms with cofactors folded in; kept only
    /// when every piece reduces.
    pub closed_pieces: Option<Vec<HyperTerm>>,
    /// Affine forms, each required ≥ 0: bookkeeping identities between
    /// ordinary and fencepost-oriented sums need the involved ranges to be
    /// at worst adjacent-empty.
    pub validity: Vec<LinForm>,
    /// Human-readable derivation log, one event per line.
    pub log: Vec<String>,
}

/// Why a relation could not be assembled or transformed.
#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("certificate pole at {locus} lies strictly inside the summation range")]
    InteriorPole { locus: String },
    #[error("range shrinking exceeded {budget} steps without clearing the boundary poles")]
    ShrinkBudgetExhausted { budget: usize },
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Renders a rational function with the numerator's rational content
/// cleared into the denominator — `(n^4 - 6*n^3)/(24)` instead of
/// `1/24*n^4 - 1/4*n^3` — for readable report lines.
fn display_cleared(r: &RatFun) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let c = r.num().rational_content();
    let num = r
        .num()
        .scale(&c.recip())
        .scale(&BigRational::from_integer(c.numer().clone()));
    let den = r
        .den()
        .scale(&BigRational::from_integer(c.denom().clone()));
    match den.constant_value() {
        Some(one) if one == BigRational::from_integer(1.into()) => format!("{num}"),
        _ => format!("({num})/({den})"),
    }
}

/// Offsets covering the signed range from `from` to `to` inclusive: the
/// plain slots when `to ≥ from`, nothing when `to = from − 1`, and the
/// slots of the reversed gap with sign −1 otherwise.  This realizes the
/// fencepost-oriented sum `Φ(to) − Φ(from−1)` for partial sums `Φ`.
fn signed_slots(from: i64, to: i64) -> Vec<(i64, i64)> {
    if to >= from {
        (from..=to).map(|e| (e, 1)).collect()
    } else {
        ((to + 1)..from).map(|e| (e, -1)).collect()
    }
}

/// Sums the pointwise identity `P·t = Δ_v(q·t)` over the range of `spec`,
/// producing a relation with the operator outside the sum.
///
/// The range is first shrunk, one endpoint step at a time, until neither
/// fencepost evaluation of `q·t` hits a certificate pole; removed points
/// re-enter as compensated terms.  Then, for every operator term whose
/// shift moves a bound, the over- or under-covered slots are peeled off as
/// comp S-shift terms.  Poles strictly inside the range are an error:
/// endpoint shrinking cannot remove them.
pub fn assemble_relation(spec: &SumSpec, ct: &CTResult) -> Result<InhomRelation, BoundaryError> {
    let table = spec.table().clone();
    let algebra = &ct.telescoper.algebra;
    let v = spec.var;

    for i in 0..algebra.nsymbols() {
        if algebra.shifted_var(i) == v {
            return Err(BoundaryError::UnsupportedShape(format!(
                "telescoper shifts the summation variable {}",
                table.name(v)
            )));
        }
    }
    for c in ct.telescoper.terms.values() {
        if c.num().depends_on(v) || c.den().depends_on(v) {
            return Err(BoundaryError::UnsupportedShape(format!(
                "telescoper coefficient depends on the summation variable {}",
                table.name(v)
            )));
        }
    }
    if spec.lower.depends_on(v) || spec.upper.depends_on(v) {
        return Err(BoundaryError::UnsupportedShape(
            "summation bounds involve the summation variable".into(),
        ));
    }
    let q = ct
        .certificates
        .get(&v)
        .ok_or_else(|| {
            BoundaryError::UnsupportedShape(format!(
                "no certificate for the summation variable {}",
                table.name(v)
            ))
        })?
        .clone();
    for (&w, other) in &ct.certificates {
        if w != v && !other.is_zero() {
            return Err(BoundaryError::UnsupportedShape(format!(
                "certificate left over in another summation variable {}",
                table.name(w)
            )));
        }
    }

    let mut log = Vec::new();
    log.push(format!("sum: {}", spec.display()));
    log.push(format!("telescoper: {}", ct.telescoper.to_record()));
    log.push(format!("certificate {}: {}", table.name(v), q));

    // Shrink until no fencepost evaluation hits a certificate pole.
    let budget = 16usize;
    let mut work = spec.clone();
    let mut lower_steps: i64 = 0;
    let mut upper_steps: i64 = 0;
    loop {
        let report = scan_singularities(ct, &work);
        let mut shrunk = false;
        let mut interior: Option<String> = None;
        for entry in &report.entries {
            match entry.location {
                PoleLocation::UpperBoundary => {
                    let old = work.upper.clone();
                    work.upper = work.upper.add_const(-1);
                    upper_steps += 1;
                    log.push(format!(
                        "certificate pole at the upper fencepost: upper bound {} -> {}",
                        old.display(&table),
                        work.upper.display(&table)
                    ));
                    shrunk = true;
                    break;
                }
                PoleLocation::LowerBoundary => {
                    let old = work.lower.clone();
                    work.lower = work.lower.add_const(1);
                    lower_steps += 1;
                    log.push(format!(
                        "certificate pole at the lower endpoint: lower bound {} -> {}",
                        old.display(&table),
                        work.lower.display(&table)
                    ));
                    shrunk = true;
                    break;
                }
                PoleLocation::Inside => {
                    if interior.is_none() {
                        interior = Some(match &entry.locus {
                            Some(l) => format!("{} = {}", table.name(v), l),
                            None => format!("factor {}", entry.factor),
                        });
                    }
                }
                PoleLocation::Outside => {}
                PoleLocation::Unresolved => {}
            }
        }
        if shrunk {
            if (lower_steps + upper_steps) as usize > budget {
                return Err(BoundaryError::ShrinkBudgetExhausted { budget });
            }
            continue;
        }
        if let Some(locus) = interior {
            return Err(BoundaryError::InteriorPole { locus });
        }
        for entry in &report.entries {
            if entry.location == PoleLocation::Unresolved {
                log.push(format!(
                    "warning: denominator factor {} not classified; the validity region \
                     must keep its zeros outside the range",
                    entry.factor
                ));
            }
        }
        break;
    }

    let mut pieces: Vec<TaggedTerm> = Vec::new();

    // Delta parts: fencepost values of q·t over the shrunken range.
    let upper_post = work.upper.add_const(1);
    let lower_post = work.lower.clone();
    for (point, sign) in [(upper_post, -1i64), (lower_post, 1i64)] {
        let qp = q.substitute(v, &point.to_mpoly(&table))?;
        if qp.is_zero() {
            continue;
        }
        let coeff = if sign < 0 { qp.neg() } else { qp };
        let term = spec.summand.substitute_var(v, &point)?;
        pieces.push(TaggedTerm {
            kind: PieceKind::Delta,
            coeff,
            term,
            point,
        });
    }

    // Removed and peeled slots, one batch per operator term.
    let mut validity: Vec<LinForm> = Vec::new();
    let middle = work.upper.sub(&work.lower).add_const(1);
    validity.push(middle);
    for (expo, p_coeff) in &ct.telescoper.terms {
        let mut shift_map: BTreeMap<VarId, i64> = BTreeMap::new();
        for i in 0..algebra.nsymbols() {
            if expo.0[i] > 0 {
                shift_map.insert(algebra.shifted_var(i), expo.0[i] as i64);
            }
        }
        let up_diff: i64 = shift_map
            .iter()
            .map(|(&w, &j)| spec.upper.coeff(w) * j)
            .sum();
        let lo_diff: i64 = shift_map
            .iter()
            .map(|(&w, &j)| spec.lower.coeff(w) * j)
            .sum();
        let shifted_span = spec
            .upper
            .sub(&spec.lower)
            .add_const(1 + up_diff - lo_diff);
        if !validity.contains(&shifted_span) {
            validity.push(shifted_span);
        }
        let mut shifted_summand = spec.summand.clone();
        for (&w, &j) in &shift_map {
            shifted_summand = shifted_summand.shift_var(w, j);
        }
        // Upper side: offsets relative to the original upper bound cover
        // [shrunken upper + 1, shifted upper]; the shrink-repair slots
        // (offset ≤ 0) are compensated terms, the rest peeled shifts.
        let upper_slots = signed_slots(1 - upper_steps, up_diff);
        // Lower side: offsets relative to the original lower bound cover
        // [shifted lower, shrunken lower − 1].
        let lower_slots = signed_slots(lo_diff, lower_steps - 1);
        for (bound, slots, comp_range) in [
            (&spec.upper, upper_slots, (1 - upper_steps, 0)),
            (&spec.lower, lower_slots, (0, lower_steps - 1)),
        ] {
            for (e, sign) in slots {
                let kind = if e >= comp_range.0 && e <= comp_range.1 {
                    PieceKind::Compensated
                } else {
                    PieceKind::CompShift
                };
                let point = bound.add_const(e);
                let coeff = if sign > 0 {
                    p_coeff.neg()
                } else {
                    p_coeff.clone()
                };
                let term = shifted_summand.substitute_var(v, &point)?;
                pieces.push(TaggedTerm {
                    kind,
                    coeff,
                    term,
                    point,
                });
            }
        }
    }

    // Per-piece log lines and, when everything reduces, the combined view.
    let mut closed: Vec<HyperTerm> = Vec::new();
    let mut all_closed = true;
    let mut delta_total = RatFun::zero(&table);
    let mut other_total = RatFun::zero(&table);
    let mut totals_ok = true;
    for piece in &pieces {
        let value = piece.closed_value();
        let shown = match &value {
            Some(r) => display_cleared(r),
            None => format!("{} * {}", piece.coeff, piece.term),
        };
        log.push(format!(
            "{} at {} = {}: {}",
            piece.kind,
            table.name(v),
            piece.point.display(&table),
            shown
        ));
        match piece.folded().reduce_closed() {
            Ok(red) => closed.push(red),
            Err(_) => all_closed = false,
        }
        match (&value, piece.kind) {
            (Some(r), PieceKind::Delta) => delta_total = delta_total.add(r),
            (Some(r), _) => other_total = other_total.add(r),
            (None, _) => totals_ok = false,
        }
    }
    if totals_ok {
        log.push(format!(
            "delta part total (value of the telescoped sum): {}",
            display_cleared(&delta_total.neg())
        ));
        log.push(format!(
            "compensated and comp-S-shift total (operator side): {}",
            display_cleared(&other_total)
        ));
        log.push(format!(
            "relation: telescoper applied to the sum equals {}",
            display_cleared(&delta_total.add(&other_total).neg())
        ));
    }

    Ok(InhomRelation {
        operator: ct.telescoper.clone(),
        spec: spec.clone(),
        pieces,
        closed_pieces: all_closed.then_some(closed),
        validity,
        log,
    })
}

/// Exact residual report from [`check_relation`].
#[derive(Clone, Debug)]
pub struct RelationCheck {
    /// Points actually evaluated.
    pub checked: usize,
    /// Points skipped because a validity form went negative.
    pub skipped: usize,
    /// Nonzero residuals, with the point that produced each.
    pub failures: Vec<(BTreeMap<VarId, i64>, RatFun)>,
}

impl RelationCheck {
    pub fn all_zero(&self) -> bool {
        self.checked > 0 && self.failures.is_empty()
    }
}

/// The default verification grid: every variable appearing in the bounds
/// or validity forms ranges over 5..=20.
pub fn default_grid(rel: &InhomRelation) -> BTreeMap<VarId, (i64, i64)> {
    let table = rel.spec.table();
    let mut out = BTreeMap::new();
    for w in 0..table.len() {
        let used = rel.spec.lower.depends_on(w)
            || rel.spec.upper.depends_on(w)
            || rel.validity.iter().any(|f| f.depends_on(w));
        if used {
            out.insert(w, (5, 20));
        }
    }
    out
}

fn for_each_point(
    ranges: &[(VarId, (i64, i64))],
    current: &mut BTreeMap<VarId, i64>,
    f: &mut dyn FnMut(&BTreeMap<VarId, i64>) -> Result<(), BoundaryError>,
) -> Result<(), BoundaryError> {
    match ranges.split_first() {
        None => f(current),
        Some((&(w, (lo, hi)), rest)) => {
            for n in lo..=hi {
                current.insert(w, n);
                for_each_point(rest, current, f)?;
            }
            current.remove(&w);
            Ok(())
        }
    }
}

/// Evaluates the full relation `operator·(sum) + Σ pieces` exactly at each
/// grid point.  Variables outside the grid stay symbolic, so each residual
/// is a rational function in them (identically zero when the relation
/// holds).  Grid points violating a validity form are skipped.
pub fn check_relation(
    rel: &InhomRelation,
    ranges: &BTreeMap<VarId, (i64, i64)>,
    convention: Convention,
    eps_mode: EpsMode,
) -> Result<RelationCheck, BoundaryError> {
    let table = rel.spec.table().clone();
    let algebra = &rel.operator.algebra;
    let ordered: Vec<(VarId, (i64, i64))> = ranges.iter().map(|(&w, &r)| (w, r)).collect();
    let mut report = RelationCheck {
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    let mut current = BTreeMap::new();
    for_each_point(&ordered, &mut current, &mut |point| {
        if rel.validity.iter().any(|f| f.eval(point) < 0) {
            report.skipped += 1;
            return Ok(());
        }
        let rationals: BTreeMap<VarId, BigRational> = point
            .iter()
            .map(|(&w, &n)| (w, BigRational::from_integer(n.into())))
            .collect();
        let mut residual = RatFun::zero(&table);
        for (expo, coeff) in &rel.operator.terms {
            let mut shifted = point.clone();
            for i in 0..algebra.nsymbols() {
                if expo.0[i] > 0 {
                    let w = algebra.shifted_var(i);
                    *shifted.entry(w).or_insert(0) += expo.0[i] as i64;
                }
            }
            let fval = rel.spec.eval(&shifted, convention, eps_mode)?;
            let cval = coeff.eval_partial(&rationals)?;
            residual = residual.add(&cval.mul(&fval));
        }
        for piece in &rel.pieces {
            let cval = piece.coeff.eval_partial(&rationals)?;
            let tval = piece.term.eval_term(&rationals, convention, eps_mode)?;
            residual = residual.add(&cval.mul(&tval));
        }
        report.checked += 1;
        if !residual.is_zero() {
            report.failures.push((point.clone(), residual));
        }
        Ok(())
    })?;
    Ok(report)
}

/// A homogenized relation: `operator = left_factor · (original operator)`
/// annihilates the sum itself.
#[derive(Clone, Debug)]
pub struct Homogenized {
    pub operator: OrePoly,
    pub left_factor: OrePoly,
    /// True when the left factor was guessed from values and verified on a
    /// disjoint grid rather than derived symbolically.
    pub semi_rigorous: bool,
    pub log: Vec<String>,
}

/// Splits a reduced term into its rational cofactor and the remaining
/// combinatorial kernel.
fn split_rational(term: &HyperTerm) -> (RatFun, HyperTerm) {
    let table = term.table();
    let mut coeff = RatFun::one(table);
    let mut kernel = HyperTerm::one(table)
        .with_sum_vars(term.sum_vars())
        .with_param_vars(term.param_vars());
    if let Some(e) = term.eps_var() {
        kernel = kernel.with_eps(e);
    }
    for f in term.factors() {
        match f {
            TermFactor::RatFactor(r) => coeff = coeff.mul(r),
            TermFactor::Binomial(t, b) => kernel = kernel.binomial(t.clone(), b.clone()),
            TermFactor::Power(b, e) => kernel = kernel.power(b.clone(), e.clone()),
            TermFactor::GammaRatio(u) => kernel = kernel.gamma_ratio(u.clone()),
        }
    }
    (coeff, kernel)
}

/// Left-multiplies the relation's operator by an annihilator `R` of its
/// inhomogeneous part, so `R·P` annihilates the sum outright.
///
/// The pieces are first reduced to closed terms and grouped by their
/// combinatorial kernel; each group contributes its first-order shift
/// annihilator and `R` is the least common left multiple.  When that
/// symbolic route fails and `fallback` supplies an evaluation convention,
/// the total inhomogeneous value is tabulated on a grid of the operator's
/// shift variable, an annihilator is guessed, and the guess is re-verified
/// on a disjoint grid — the result is then flagged semi-rigorous.
pub fn homogenize(
    rel: &InhomRelation,
    fallback: Option<(Convention, EpsMode)>,
) -> Result<Homogenized, BoundaryError> {
    let p = &rel.operator;
    let algebra = &p.algebra;
    let table = rel.spec.table().clone();
    let mut used: Vec<usize> = Vec::new();
    for expo in p.terms.keys() {
        for i in 0..algebra.nsymbols() {
            if expo.0[i] > 0 && !used.contains(&i) {
                used.push(i);
            }
        }
    }
    if used.len() > 1 {
        return Err(BoundaryError::UnsupportedShape(
            "homogenization needs an operator in a single shift symbol".into(),
        ));
    }
    let sym = used.first().copied().unwrap_or(0);
    let w = algebra.shifted_var(sym);
    let mut log = Vec::new();

    if rel.pieces.is_empty() {
        log.push("no inhomogeneous part: operator returned unchanged".into());
        return Ok(Homogenized {
            operator: p.clone(),
            left_factor: OrePoly::one(algebra),
            semi_rigorous: false,
            log,
        });
    }

    // Closed route: reduce each piece, merge by combinatorial kernel.
    let closed: Result<Vec<HyperTerm>, AlgebraError> = rel
        .pieces
        .iter()
        .map(|piece| piece.folded().reduce_closed())
        .collect();
    if let Ok(closed) = closed {
        let mut rational_total = RatFun::zero(&table);
        let mut groups: BTreeMap<String, (HyperTerm, RatFun)> = BTreeMap::new();
        for red in &closed {
            match red.as_pure_rational() {
                Some(r) => rational_total = rational_total.add(&r),
                None => {
                    let (coeff, kernel) = split_rational(red);
                    let entry = groups
                        .entry(kernel.to_string())
                        .or_insert_with(|| (kernel, RatFun::zero(&table)));
                    entry.1 = entry.1.add(&coeff);
                }
            }
        }
        let mut annihilators: Vec<OrePoly> = Vec::new();
        let mut closed_ok = true;
        if !rational_total.is_zero() {
            let t = HyperTerm::one(&table).rational(rational_total.clone());
            match t.annihilator_of_term(w, algebra) {
                Ok(ann) => {
                    log.push(format!(
                        "rational part {} annihilated by {}",
                        rational_total,
                        ann.to_record()
                    ));
                    annihilators.push(ann);
                }
                Err(_) => closed_ok = false,
            }
        }
        for (kernel, coeff) in groups.values() {
            if coeff.is_zero() {
                continue;
            }
            let t = kernel.clone().rational(coeff.clone());
            match t.annihilator_of_term(w, algebra) {
                Ok(ann) => {
                    log.push(format!(
                        "term {} annihilated by {}",
                        t,
                        ann.to_record()
                    ));
                    annihilators.push(ann);
                }
                Err(_) => {
                    closed_ok = false;
                    break;
                }
            }
        }
        if closed_ok {
            if annihilators.is_empty() {
                log.push("inhomogeneous part cancels to zero: operator returned unchanged".into());
                return Ok(Homogenized {
                    operator: p.clone(),
                    left_factor: OrePoly::one(algebra),
                    semi_rigorous: false,
                    log,
                });
            }
            let mut r = annihilators[0].clone();
            for ann in &annihilators[1..] {
                r = ore_lclm(&r, ann, sym)?;
            }
            log.push(format!("left factor: {}", r.to_record()));
            let operator = r.mul(p).normalize();
            return Ok(Homogenized {
                operator,
                left_factor: r,
                semi_rigorous: false,
                log,
            });
        }
    }

    let Some((convention, eps_mode)) = fallback else {
        return Err(BoundaryError::UnsupportedShape(
            "inhomogeneous part does not reduce to closed terms and guessing is disabled".into(),
        ));
    };

    // Numeric fallback: tabulate the total inhomogeneous value along the
    // shift variable, guess an annihilator, verify it on fresh points.
    let value_at = |n: i64| -> Result<RatFun, BoundaryError> {
        let bindings = BTreeMap::from([(w, BigRational::from_integer(n.into()))]);
        let mut acc = RatFun::zero(&table);
        for piece in &rel.pieces {
            let c = piece.coeff.eval_partial(&bindings)?;
            let t = piece.term.eval_term(&bindings, convention, eps_mode)?;
            acc = acc.add(&c.mul(&t));
        }
        Ok(acc)
    };
    let base = 5i64;
    let fit_len = 28i64;
    let verify_len = 8i64;
    let max_order = 4usize;
    let mut data = BTreeMap::new();
    for n in base..base + fit_len {
        data.insert(vec![n], value_at(n)?);
    }
    let problem = GuessProblem {
        shift_var: w,
        point_vars: vec![w],
        data,
        order: max_order,
        degree_bounds: vec![(w, 4)],
        validation_windows: 3,
    };
    let r = match guess_recurrence_auto(&problem, algebra) {
        GuessOutcome::Operator(r) => r,
        _ => {
            return Err(BoundaryError::UnsupportedShape(
                "no annihilator found for the tabulated inhomogeneous part".into(),
            ))
        }
    };
    // Disjoint verification grid beyond the fitting range.
    for n in base + fit_len..base + fit_len + verify_len {
        let bindings = BTreeMap::from([(w, BigRational::from_integer(n.into()))]);
        let mut acc = RatFun::zero(&table);
        for (expo, coeff) in &r.terms {
            let j = expo.0[sym] as i64;
            let c = coeff.eval_partial(&bindings)?;
            acc = acc.add(&c.mul(&value_at(n + j)?));
        }
        if !acc.is_zero() {
            return Err(BoundaryError::UnsupportedShape(
                "guessed annihilator failed on the disjoint verification grid".into(),
            ));
        }
    }
    log.push(format!(
        "left factor guessed from {fit_len} tabulated values and verified on {verify_len} \
         fresh points (semi-rigorous): {}",
        r.to_record()
    ));
    let operator = r.mul(p).normalize();
    Ok(Homogenized {
        operator,
        left_factor: r,
        semi_rigorous: true,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessing::guessed_is_right_factor;
    use crate::ore::OrePoly;
    use crate::telescoping::zeilberger;

    /// `sum_{k=5}^{n} C(n,k)` with its first-order telescoping pair.
    fn classic_setup() -> (SumSpec, CTResult) {
        let table = VarTable::new(&["n", "k"]);
        let t = HyperTerm::one(&table)
            .binomial(LinForm::var(0), LinForm::var(1))
            .with_sum_vars(&[1])
            .with_param_vars(&[0]);
        let ct = zeilberger(&t, 1, &[0], 2).expect("telescoping pair exists");
        let spec = SumSpec::new(1, LinForm::constant(5), LinForm::var(0), t);
        (spec, ct)
    }

    #[test]
    fn classic_sum_assembles_shrink_and_boundary_terms() {
        let (spec, ct) = classic_setup();
        let rel = assemble_relation(&spec, &ct).expect("assembly succeeds");
        assert_eq!(rel.operator.to_record(), "ore{S_n}[(1): 1; (0): -2]");
        let joined = rel.log.join("\n");
        assert!(
            joined.contains("upper bound n -> n - 1"),
            "shrink step missing from log:\n{joined}"
        );
        assert!(joined.contains("-n"), "log lacks the moved boundary total:\n{joined}");
        assert!(
            joined.contains("n^4 - 6*n^3 + 11*n^2 - 30*n"),
            "log lacks the telescoped sum value:\n{joined}"
        );
        assert!(
            joined.contains("n^4 - 6*n^3 + 11*n^2 - 6*n"),
            "log lacks the combined relation value:\n{joined}"
        );
        let deltas = rel
            .pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Delta)
            .count();
        let comps = rel
            .pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Compensated)
            .count();
        let shifts = rel
            .pieces
            .iter()
            .filter(|p| p.kind == PieceKind::CompShift)
            .count();
        assert_eq!((deltas, comps, shifts), (2, 2, 1));
        let check = check_relation(
            &rel,
            &default_grid(&rel),
            Convention::Combinatorial,
            EpsMode::LimitZero,
        )
        .expect("grid evaluation");
        assert!(check.all_zero(), "failures: {:?}", check.failures);
    }

    #[test]
    fn shrinking_is_minimal_for_the_classic_sum() {
        let (spec, ct) = classic_setup();
        // The shrunken range is pole-free at both fenceposts, while the
        // original (one step wider) range hits the certificate pole.
        let shrunk = SumSpec {
            upper: spec.upper.add_const(-1),
            ..spec.clone()
        };
        let report = scan_singularities(&ct, &shrunk);
        assert!(report
            .entries
            .iter()
            .all(|e| matches!(e.location, PoleLocation::Outside)));
        let report = scan_singularities(&ct, &spec);
        assert!(report
            .entries
            .iter()
            .any(|e| e.location == PoleLocation::UpperBoundary));
    }

    #[test]
    fn classic_sum_homogenizes_to_the_second_order_operator() {
        let (spec, ct) = classic_setup();
        let rel = assemble_relation(&spec, &ct).expect("assembly succeeds");
        let hom = homogenize(&rel, None).expect("closed-form homogenization");
        assert!(!hom.semi_rigorous);
        assert_eq!(
            hom.operator.to_record(),
            "ore{S_n}[(2): n - 3; (1): -3*n + 5; (0): 2*n + 2]"
        );
        assert!(guessed_is_right_factor(&hom.operator, &rel.operator, 0).unwrap());
        // The homogeneous operator annihilates the actual sum values.
        let sum_at = |n: i64| {
            rel.spec
                .eval(
                    &BTreeMap::from([(0, n)]),
                    Convention::Combinatorial,
                    EpsMode::LimitZero,
                )
                .unwrap()
                .constant_value()
                .unwrap()
        };
        for n in 5..25i64 {
            let mut acc = BigRational::from_integer(0.into());
            for (expo, coeff) in &hom.operator.terms {
                let j = expo.0[0] as i64;
                let c = coeff
                    .eval_partial(&BTreeMap::from([(0, BigRational::from_integer(n.into()))]))
                    .unwrap()
                    .constant_value()
                    .unwrap();
                acc += c * sum_at(n + j);
            }
            assert_eq!(acc, BigRational::from_integer(0.into()), "at n = {n}");
        }
    }

    #[test]
    fn empty_adjacent_range_leaves_pure_boundary_terms() {
        // sum_{k=n+1}^{n} k is identically empty; the polynomial summand
        // telescopes with an order-zero operator and no poles, so the
        // relation is carried entirely by the two cancelling fenceposts.
        let table = VarTable::new(&["n", "k"]);
        let t = HyperTerm::one(&table)
            .rational(RatFun::var(&table, 1))
            .with_sum_vars(&[1])
            .with_param_vars(&[0]);
        let ct = zeilberger(&t, 1, &[0], 1).expect("telescoping pair exists");
        let spec = SumSpec::new(
            1,
            LinForm::var(0).add_const(1),
            LinForm::var(0),
            t,
        );
        let rel = assemble_relation(&spec, &ct).expect("assembly succeeds");
        assert!(rel
            .pieces
            .iter()
            .all(|p| p.kind == PieceKind::Delta || p.coeff.is_zero()));
        let check = check_relation(
            &rel,
            &BTreeMap::from([(0, (5, 15))]),
            Convention::Combinatorial,
            EpsMode::LimitZero,
        )
        .expect("grid evaluation");
        assert!(check.all_zero(), "failures: {:?}", check.failures);
    }

    #[test]
    fn operator_in_two_symbols_peels_each_shifted_bound() {
        // t = C(n+m, k) satisfies (S_n - S_m)·t = 0, a telescoping pair
        // with zero certificate; over k in [0, n+m] each shift overshoots
        // the upper bound by one slot and the two peels cancel.
        let table = VarTable::new(&["n", "m", "k"]);
        let t = HyperTerm::one(&table)
            .binomial(LinForm::var(0).add(&LinForm::var(1)), LinForm::var(2))
            .with_sum_vars(&[2])
            .with_param_vars(&[0, 1]);
        let algebra = OreAlgebra::new(&table, &[0, 1]);
        let sn = OrePoly::shift(&algebra, 0);
        let sm = OrePoly::shift(&algebra, 1);
        let ct = CTResult {
            telescoper: sn.sub(&sm),
            certificates: BTreeMap::from([(2, RatFun::zero(&table))]),
            residual: RatFun::zero(&table),
        };
        let spec = SumSpec::new(
            2,
            LinForm::constant(0),
            LinForm::var(0).add(&LinForm::var(1)),
            t.clone(),
        );
        // The pair really telescopes: residual of the defining identity.
        assert!(crate::telescoping::ct_residual(&t, &ct.telescoper, &ct.certificates)
            .unwrap()
            .is_zero());
        let rel = assemble_relation(&spec, &ct).expect("assembly succeeds");
        assert_eq!(
            rel.pieces
                .iter()
                .filter(|p| p.kind == PieceKind::CompShift)
                .count(),
            2
        );
        let check = check_relation(
            &rel,
            &BTreeMap::from([(0, (5, 10)), (1, (5, 10))]),
            Convention::Combinatorial,
            EpsMode::LimitZero,
        )
        .expect("grid evaluation");
        assert!(check.all_zero(), "failures: {:?}", check.failures);
    }

    #[test]
    fn interior_pole_aborts_assembly() {
        use crate::mpoly::MPoly;
        let table = VarTable::new(&["n", "k"]);
        let t = HyperTerm::one(&table)
            .binomial(LinForm::var(0), LinForm::var(1))
            .with_sum_vars(&[1])
            .with_param_vars(&[0]);
        let spec = SumSpec::new(1, LinForm::constant(1), LinForm::var(0), t);
        let algebra = OreAlgebra::new(&table, &[0]);
        let den = MPoly::var(&table, 1).add(&MPoly::int(&table, -3));
        let fake = CTResult {
            telescoper: OrePoly::one(&algebra),
            certificates: BTreeMap::from([(1, RatFun::new(MPoly::int(&table, 1), den))]),
            residual: RatFun::zero(&table),
        };
        match assemble_relation(&spec, &fake) {
            Err(BoundaryError::InteriorPole { locus }) => {
                assert!(locus.contains("k = 3"), "unexpected locus: {locus}");
            }
            other => panic!("expected an interior-pole error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_relation_fails_everywhere() {
        let (spec, ct) = classic_setup();
        let mut rel = assemble_relation(&spec, &ct).expect("assembly succeeds");
        let table = spec.table().clone();
        rel.pieces.push(TaggedTerm {
            kind: PieceKind::Compensated,
            coeff: RatFun::one(&table),
            term: HyperTerm::one(&table),
            point: LinForm::zero(),
        });
        let check = check_relation(
            &rel,
            &BTreeMap::from([(0, (5, 15))]),
            Convention::Combinatorial,
            EpsMode::LimitZero,
        )
        .expect("grid evaluation");
        assert_eq!(check.failures.len(), check.checked);
    }

    #[test]
    fn homogenize_returns_operator_unchanged_without_pieces() {
        let (spec, ct) = classic_setup();
        let rel = InhomRelation {
            operator: ct.telescoper.clone(),
            spec,
            pieces: Vec::new(),
            closed_pieces: Some(Vec::new()),
            validity: Vec::new(),
            log: Vec::new(),
        };
        let hom = homogenize(&rel, None).expect("trivial homogenization");
        assert_eq!(hom.operator.to_record(), ct.telescoper.to_record());
        assert_eq!(hom.left_factor.to_record(), "ore{S_n}[(0): 1]");
    }

    #[test]
    fn homogenize_combines_annihilators_of_distinct_kernels() {
        // Pieces 2^n and 1 force the left factor lclm(S-2, S-1), raising
        // the order by two.
        let (spec, ct) = classic_setup();
        let table = spec.table().clone();
        let two_pow = HyperTerm::one(&table)
            .power(RatFun::int(&table, 2), LinForm::var(0))
            .with_param_vars(&[0]);
        let rel = InhomRelation {
            operator: ct.telescoper.clone(),
            spec,
            pieces: vec![
                TaggedTerm {
                    kind: PieceKind::Compensated,
                    coeff: RatFun::one(&table),
                    term: two_pow,
                    point: LinForm::zero(),
                },
                TaggedTerm {
                    kind: PieceKind::Compensated,
                    coeff: RatFun::one(&table),
                    term: HyperTerm::one(&table),
                    point: LinForm::zero(),
                },
            ],
            closed_pieces: None,
            validity: Vec::new(),
            log: Vec::new(),
        };
        let hom = homogenize(&rel, None).expect("closed-form homogenization");
        assert_eq!(hom.operator.order_in(0) as usize, 1 + 2);
        assert!(guessed_is_right_factor(&hom.operator, &rel.operator, 0).unwrap());
        // Sequence oracle: u(0)=0, u(n+1) = 2u(n) - (2^n + 1) satisfies
        // P·u + (2^n + 1) = 0, so the composed operator must kill u.
        let mut u = vec![BigRational::from_integer(0.into())];
        let mut pow = BigRational::from_integer(1.into());
        for _ in 0..16 {
            let last = u.last().unwrap().clone();
            let two = BigRational::from_integer(2.into());
            u.push(&last * &two - (&pow + BigRational::from_integer(1.into())));
            pow *= two;
        }
        for n in 0..10usize {
            let mut acc = BigRational::from_integer(0.into());
            for (expo, coeff) in &hom.operator.terms {
                let j = expo.0[0] as usize;
                let c = coeff
                    .eval_partial(&BTreeMap::from([(
                        0,
                        BigRational::from_integer((n as i64).into()),
                    )]))
                    .unwrap()
                    .constant_value()
                    .unwrap();
                acc += c * &u[n + j];
            }
            assert_eq!(acc, BigRational::from_integer(0.into()), "at n = {n}");
        }
    }

    #[test]
    fn homogenize_falls_back_to_guessing_when_requested() {
        // A gamma-ratio factor without a designated epsilon variable has
        // no symbolic shift annihilator here, but under the limit-zero
        // convention it tabulates to constants whose annihilator the
        // guesser finds and verifies on fresh points.
        let (spec, ct) = classic_setup();
        let table = spec.table().clone();
        let gamma = HyperTerm::one(&table)
            .gamma_ratio(LinForm::var(0))
            .with_param_vars(&[0]);
        let rel = InhomRelation {
            operator: ct.telescoper.clone(),
            spec,
            pieces: vec![TaggedTerm {
                kind: PieceKind::Compensated,
                coeff: RatFun::one(&table),
                term: gamma,
                point: LinForm::zero(),
            }],
            closed_pieces: None,
            validity: Vec::new(),
            log: Vec::new(),
        };
        assert!(matches!(
            homogenize(&rel, None),
            Err(BoundaryError::UnsupportedShape(_))
        ));
        let hom = homogenize(
            &rel,
            Some((Convention::Combinatorial, EpsMode::LimitZero)),
        )
        .expect("guessed homogenization");
        assert!(hom.semi_rigorous);
        assert!(guessed_is_right_factor(&hom.operator, &rel.operator, 0).unwrap());
        assert_eq!(hom.left_factor.to_record(), "ore{S_n}[(1): 1; (0): -1]");
    }
}
