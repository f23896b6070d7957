//! Multivariate polynomial gcd over `Q` via contents and a primitive
//! polynomial remainder sequence.
//!
//! Results are normalized: integer coefficients with content 1 and a
//! positive leading coefficient in the graded-lexicographic order, so the
//! gcd is a canonical representative of its unit class.  `gcd(0, 0) = 0`.

use crate::mpoly::MPoly;
use crate::vars::VarId;

/// Normalized greatest common divisor.
pub fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() {
        return b.primitive_part();
    }
    if b.is_zero() {
        return a.primitive_part();
    }
    let mut a = a.primitive_part();
    let mut b = b.primitive_part();

    // Common monomial factor.
    let table = a.table.clone();
    let mut mono = crate::mpoly::Expo::zero();
    for v in 0..table.len() {
        let m = a.min_degree_in(v).min(b.min_degree_in(v));
        if m > 0 {
            mono.0[v] = m;
        }
    }
    if !mono.is_zero() {
        let shift = MPoly::monomial(&table, mono, num::BigRational::from_integer(1.into()));
        a = a.exact_div(&shift).unwrap();
        b = b.exact_div(&shift).unwrap();
        let inner = gcd(&a, &b);
        return inner.mul(&shift);
    }

    if a.is_constant() || b.is_constant() {
        return MPoly::one(&table);
    }

    // Cheap shortcut: divisibility either way.
    if let Some(_) = a.exact_div(&b) {
        return b;
    }
    if let Some(_) = b.exact_div(&a) {
        return a;
    }

    // Main variable: present in both, smallest min-degree to keep the PRS
    // short.
    let mut main: Option<(VarId, u16)> = None;
    for v in 0..table.len() {
        let da = a.degree_in(v);
        let db = b.degree_in(v);
        if da > 0 && db > 0 {
            let key = da.min(db);
            if main.map_or(true, |(_, best)| key < best) {
                main = Some((v, key));
            }
        }
    }
    let v = match main {
        Some((v, _)) => v,
        // No shared variable: gcd of contents only, which is 1 after
        // primitivization.
        None => return MPoly::one(&table),
    };

    let cont_a = content_in(&a, v);
    let cont_b = content_in(&b, v);
    let pp_a = a.exact_div(&cont_a).expect("content divides");
    let pp_b = b.exact_div(&cont_b).expect("content divides");
    let cont = gcd(&cont_a, &cont_b);
    let g = prs_gcd(pp_a, pp_b, v);
    cont.mul(&g).primitive_part()
}

/// gcd of several polynomials.
pub fn gcd_many<'a>(polys: impl IntoIterator<Item = &'a MPoly>) -> Option<MPoly> {
    let mut acc: Option<MPoly> = None;
    for p in polys {
        acc = Some(match acc {
            None => p.primitive_part(),
            Some(g) => {
                if g.is_one() {
                    return Some(g);
                }
                gcd(&g, p)
            }
        });
    }
    acc
}

/// Least common multiple, normalized like [`gcd`]; `lcm(0, x) = 0`.
pub fn lcm(a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() || b.is_zero() {
        return MPoly::zero(&a.table);
    }
    let g = gcd(a, b);
    a.exact_div(&g)
        .expect("gcd divides")
        .mul(b)
        .primitive_part()
}

/// Content of `p` viewed as univariate in `v`: gcd of its coefficients.
pub fn content_in(p: &MPoly, v: VarId) -> MPoly {
    let coeffs = p.coeffs_in_var(v);
    gcd_many(coeffs.iter().filter(|c| !c.is_zero())).unwrap_or_else(|| MPoly::zero(&p.table))
}

/// Primitive PRS gcd of two polynomials that are primitive with respect to
/// `v` and have positive degree in `v`.
fn prs_gcd(mut f: MPoly, mut g: MPoly, v: VarId) -> MPoly {
    if f.degree_in(v) < g.degree_in(v) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        if g.is_zero() {
            return f.primitive_part();
        }
        if g.degree_in(v) == 0 {
            return MPoly::one(&f.table);
        }
        let r = pseudo_rem(&f, &g, v);
        if r.is_zero() {
            // Make the result primitive in v (and overall).
            let cont = content_in(&g, v);
            return g.exact_div(&cont).expect("content divides").primitive_part();
        }
        let cont = content_in(&r, v);
        let r = r.exact_div(&cont).expect("content divides");
        f = g;
        g = r;
    }
}

/// Pseudo-remainder of `f` by `g` with respect to `v`: returns `r` with
/// `deg_v r < deg_v g` such that `c * f = q * g + r` for some polynomial
/// `c` free of... built from leading coefficients of `g`.
pub fn pseudo_rem(f: &MPoly, g: &MPoly, v: VarId) -> MPoly {
    let dg = g.degree_in(v);
    assert!(dg > 0 || !g.is_zero(), "pseudo-division by zero");
    let g_coeffs = g.coeffs_in_var(v);
    let lc_g = g_coeffs[dg as usize].clone();
    let mut r = f.clone();
    while !r.is_zero() && r.degree_in(v) >= dg {
        let dr = r.degree_in(v);
        let r_coeffs = r.coeffs_in_var(v);
        let lc_r = r_coeffs[dr as usize].clone();
        // r <- lc_g * r - lc_r * v^(dr-dg) * g
        let mut shift_e = crate::mpoly::Expo::zero();
        shift_e.0[v] = dr - dg;
        let shift = MPoly::monomial(
            &f.table,
            shift_e,
            num::BigRational::from_integer(1.into()),
        );
        r = r.mul(&lc_g).sub(&g.mul(&lc_r).mul(&shift));
    }
    r
}
