//! Binomial expansions with the fixed conventions
//!
//! ```text
//! (x +- xi)^a = sum_{j>=0} binom(a,j) (+-xi)^j x^{a-j}   in x^a C[[x^-1]],
//! (xi +- x)^a = sum_{j>=0} binom(a,j) xi^{a-j} (+-x)^j   in C[[x]].
//! ```
//!
//! The first form is upper finite in `x`, the second lower finite; which
//! expansion a formula means is part of its statement, never inferred.

use std::sync::Arc;

use num_traits::Zero;
use twistrep_exact::{binomial_exp, power_of, Cyc, PowBase, RingSpec};

use crate::series::{Bound, CosetSet, Mono};
use crate::{Exp, Series, SeriesError, VarMeta, Window};

/// Which binomial convention to expand with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomForm {
    /// `(x + sign*xi)^alpha`: upper finite in `x`.
    VarFirst { sign: i8 },
    /// `(xi + sign*x)^alpha`: lower finite in `x`.
    ScalarFirst { sign: i8 },
}

/// Expand `(x +- xi)^alpha` or `(xi +- x)^alpha` in one variable, exact on
/// the requested window.
pub fn expand_binomial(
    ring: &Arc<RingSpec>,
    var: &str,
    step: Exp,
    xi: &PowBase,
    form: BinomForm,
    alpha: Exp,
    win: Window,
) -> Result<Series<Cyc>, SeriesError> {
    match form {
        BinomForm::VarFirst { sign } => {
            // exponents alpha - j, j >= 0
            let jmax = floor_diff(alpha, win.lo);
            // the next omitted term sits strictly below win.lo, so the
            // window edge itself is known
            let known_lo = if jmax >= 0 {
                Bound::Fin(win.lo.min(alpha - Exp::from_integer(jmax)))
            } else {
                Bound::Fin(win.lo)
            };
            let vars = vec![VarMeta {
                name: var.to_string(),
                cosets: CosetSet::new(step, [alpha]),
                sem: (Bound::NegInf, Bound::Fin(alpha)),
                known: (known_lo, Bound::PosInf),
            }];
            let mut out = Series::zero(vars);
            for j in 0..=jmax {
                let j = j as u64;
                let mut c = Cyc::from_rat(binomial_exp(alpha, j));
                if j > 0 {
                    let xij = power_of(ring, xi, Exp::from_integer(j as i64))?;
                    c = c.mul(&xij);
                    if sign < 0 && j % 2 == 1 {
                        c = c.neg();
                    }
                }
                if !c.is_zero() {
                    let mut m = Mono::new();
                    m.push(alpha - Exp::from_integer(j as i64));
                    out.insert(&m, c);
                }
            }
            Ok(out)
        }
        BinomForm::ScalarFirst { sign } => {
            // exponents j >= 0
            let jmax = floor_diff(win.hi, Exp::zero());
            let vars = vec![VarMeta {
                name: var.to_string(),
                cosets: CosetSet::new(step, [Exp::zero()]),
                sem: (Bound::fin(0), Bound::PosInf),
                known: (Bound::NegInf, Bound::Fin(win.hi)),
            }];
            let mut out = Series::zero(vars);
            for j in 0..=jmax {
                let j = j as u64;
                let mut c = Cyc::from_rat(binomial_exp(alpha, j));
                let xip = power_of(ring, xi, alpha - Exp::from_integer(j as i64))?;
                c = c.mul(&xip);
                if sign < 0 && j % 2 == 1 {
                    c = c.neg();
                }
                if !c.is_zero() {
                    let mut m = Mono::new();
                    m.push(Exp::from_integer(j as i64));
                    out.insert(&m, c);
                }
            }
            Ok(out)
        }
    }
}

/// Expand `(xa + sign*xb)^alpha` in two formal variables: upper finite in
/// `xa`, nonnegative integer powers of `xb`.
pub fn expand_binomial_vars(
    var_a: &str,
    step_a: Exp,
    var_b: &str,
    sign: i8,
    alpha: Exp,
    win_a: Window,
    win_b: Window,
) -> Series<Cyc> {
    let ja = floor_diff(alpha, win_a.lo);
    let jb = floor_diff(win_b.hi, Exp::zero());
    let jmax = ja.min(jb);
    // The two window cuts are independent: a term omitted for j > ja lies
    // below win_a.lo in var_a, one omitted for j > jb lies above win_b.hi in
    // var_b, so each variable's known region reflects only its own cut.
    let known_a = if ja >= 0 {
        Bound::Fin(win_a.lo.min(alpha - Exp::from_integer(ja)))
    } else {
        Bound::Fin(win_a.lo)
    };
    let known_b = if jb < ja {
        Bound::Fin(win_b.hi)
    } else {
        Bound::PosInf
    };
    let vars = vec![
        VarMeta {
            name: var_a.to_string(),
            cosets: CosetSet::new(step_a, [alpha]),
            sem: (Bound::NegInf, Bound::Fin(alpha)),
            known: (known_a, Bound::PosInf),
        },
        VarMeta {
            name: var_b.to_string(),
            cosets: CosetSet::integers(),
            sem: (Bound::fin(0), Bound::PosInf),
            known: (Bound::NegInf, known_b),
        },
    ];
    let mut out = Series::zero(vars);
    for j in 0..=jmax {
        let j = j as u64;
        let mut c = Cyc::from_rat(binomial_exp(alpha, j));
        if sign < 0 && j % 2 == 1 {
            c = c.neg();
        }
        if !c.is_zero() {
            out.insert(
                &[
                    alpha - Exp::from_integer(j as i64),
                    Exp::from_integer(j as i64),
                ],
                c,
            );
        }
    }
    out
}

/// `floor(a - b)` as an integer (may be negative: no admissible `j`).
fn floor_diff(a: Exp, b: Exp) -> i64 {
    (a - b).floor().to_integer()
}
