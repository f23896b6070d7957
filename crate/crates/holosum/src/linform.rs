//! Integer-affine linear forms, the argument language of binomial and
//! gamma-ratio factors (for example `k - 1`, `r - i - k + m`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::rational::BigRational;

use crate::mpoly::{q, MPoly};
use crate::vars::{VarId, VarTable};

/// `sum(coeff_v * v) + constant` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinForm {
    pub coeffs: BTreeMap<VarId, i64>,
    pub constant: i64,
}

impl LinForm {
    pub fn zero() -> LinForm {
        LinForm {
            coeffs: BTreeMap::new(),
            constant: 0,
        }
    }

    pub fn constant(c: i64) -> LinForm {
        LinForm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> LinForm {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1);
        LinForm { coeffs, constant: 0 }
    }

    pub fn coeff(&self, v: VarId) -> i64 {
        self.coeffs.get(&v).copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.coeff(v) != 0
    }

    pub fn add(&self, other: &LinForm) -> LinForm {
        let mut out = self.clone();
        for (&v, &c) in &other.coeffs {
            let e = out.coeffs.entry(v).or_insert(0);
            *e = e.checked_add(c).expect("linear form overflow");
            if *e == 0 {
                out.coeffs.remove(&v);
            }
        }
        out.constant = out
            .constant
            .checked_add(other.constant)
            .expect("linear form overflow");
        out
    }

    pub fn sub(&self, other: &LinForm) -> LinForm {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, c: i64) -> LinForm {
        if c == 0 {
            return LinForm::zero();
        }
        LinForm {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&v, &a)| (v, a.checked_mul(c).expect("linear form overflow")))
                .collect(),
            constant: self.constant.checked_mul(c).expect("linear form overflow"),
        }
    }

    pub fn add_const(&self, c: i64) -> LinForm {
        let mut out = self.clone();
        out.constant = out.constant.checked_add(c).expect("linear form overflow");
        out
    }

    /// Effect of the shift `v -> v + offset`.
    pub fn shift_var(&self, v: VarId, offset: i64) -> LinForm {
        self.add_const(
            self.coeff(v)
                .checked_mul(offset)
                .expect("linear form overflow"),
        )
    }

    /// Applies several integer shifts at once.
    pub fn shift_vars(&self, shifts: &BTreeMap<VarId, i64>) -> LinForm {
        let mut out = self.clone();
        for (&v, &o) in shifts {
            out = out.shift_var(v, o);
        }
        out
    }

    /// Substitutes another linear form for a variable.
    pub fn substitute(&self, v: VarId, replacement: &LinForm) -> LinForm {
        let c = self.coeff(v);
        if c == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs.remove(&v);
        out.add(&replacement.scale(c))
    }

    /// Integer evaluation; all variables with nonzero coefficient must be
    /// bound.
    pub fn eval(&self, bindings: &BTreeMap<VarId, i64>) -> i64 {
        let mut acc = self.constant;
        for (&v, &c) in &self.coeffs {
            let val = bindings
                .get(&v)
                .copied()
                .unwrap_or_else(|| panic!("unbound variable in linear form"));
            acc = acc
                .checked_add(c.checked_mul(val).expect("linear form overflow"))
                .expect("linear form overflow");
        }
        acc
    }

    /// Partial integer substitution; unbound variables stay symbolic.
    pub fn eval_partial(&self, bindings: &BTreeMap<VarId, i64>) -> LinForm {
        let mut out = LinForm::constant(self.constant);
        for (&v, &c) in &self.coeffs {
            match bindings.get(&v) {
                Some(&val) => {
                    out.constant = out
                        .constant
                        .checked_add(c.checked_mul(val).expect("overflow"))
                        .expect("overflow");
                }
                None => {
                    out.coeffs.insert(v, c);
                }
            }
        }
        out
    }

    pub fn to_mpoly(&self, table: &Arc<VarTable>) -> MPoly {
        let mut p = MPoly::int(table, self.constant);
        for (&v, &c) in &self.coeffs {
            p = p.add(&MPoly::var(table, v).scale(&q(c)));
        }
        p
    }

    /// Renders with the table's variable names.
    pub fn display<'a>(&'a self, table: &'a VarTable) -> LinFormDisplay<'a> {
        LinFormDisplay { form: self, table }
    }

    /// Extracts a linear form from a polynomial with integer-linear terms.
    pub fn from_mpoly(p: &MPoly) -> Option<LinForm> {
        let mut out = LinForm::zero();
        for (e, c) in &p.terms {
            if !c.is_integer() {
                return None;
            }
            let ci: i64 = c.numer().try_into().ok()?;
            if e.is_zero() {
                out.constant = out.constant.checked_add(ci)?;
            } else if e.total() == 1 {
                let v = (0..crate::vars::MAX_VARS).find(|&v| e.0[v] == 1)?;
                let slot = out.coeffs.entry(v).or_insert(0);
                *slot = slot.checked_add(ci)?;
                if *slot == 0 {
                    out.coeffs.remove(&v);
                }
            } else {
                return None;
            }
        }
        Some(out)
    }
}

pub struct LinFormDisplay<'a> {
    form: &'a LinForm,
    table: &'a VarTable,
}

impl fmt::Display for LinFormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&v, &c) in &self.form.coeffs {
            if first {
                if c == -1 {
                    write!(f, "-")?;
                } else if c != 1 {
                    write!(f, "{c}*")?;
                }
                write!(f, "{}", self.table.name(v))?;
                first = false;
            } else {
                if c < 0 {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                let a = c.unsigned_abs();
                if a != 1 {
                    write!(f, "{a}*")?;
                }
                write!(f, "{}", self.table.name(v))?;
            }
        }
        let c = self.form.constant;
        if first {
            write!(f, "{c}")?;
        } else if c > 0 {
            write!(f, " + {c}")?;
        } else if c < 0 {
            write!(f, " - {}", c.unsigned_abs())?;
        }
        Ok(())
    }
}

/// Evaluates a linear form to a rational under rational bindings (used when
/// grid parameters are rational).
pub fn linform_eval_rational(
    form: &LinForm,
    bindings: &BTreeMap<VarId, BigRational>,
) -> Option<BigRational> {
    let mut acc = q(form.constant);
    for (&v, &c) in &form.coeffs {
        acc += q(c) * bindings.get(&v)?;
    }
    Some(acc)
}

/// Parses a linear form over the table (integer coefficients required).
pub fn parse_linform(
    input: &str,
    table: &Arc<VarTable>,
) -> Result<LinForm, crate::parse::ParseError> {
    let p = crate::parse::parse_mpoly(input, table)?;
    LinForm::from_mpoly(&p).ok_or(crate::parse::ParseError {
        pos: 0,
        msg: format!("expression is not an integer-linear form: {p}"),
    })
}
