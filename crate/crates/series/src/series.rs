//! The sparse series container and its support-mode algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use smallvec::SmallVec;
use thiserror::Error;
use twistrep_exact::{Cyc, ScalarError};

use crate::{Coeff, Exp, Window};

pub type Mono = SmallVec<[Exp; 3]>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("ill-defined-product in variable {var}: support modes admit an infinite coefficient sum")]
    IllDefinedProduct { var: String },
    #[error("leading coefficient is not invertible: {0}")]
    NonInvertibleLeading(String),
    #[error("operation needs coefficients outside the known window: {0}")]
    TruncationExceeded(String),
    #[error("variable sets do not match")]
    VarMismatch,
    #[error("illegal-delta-substitution: {0}")]
    IllegalDeltaSubstitution(String),
    #[error("exponent {e} of variable {var} lies in no declared coset")]
    CosetViolation { var: String, e: Exp },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// One endpoint of a support interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    NegInf,
    Fin(Exp),
    PosInf,
}

impl Bound {
    pub fn fin(e: i64) -> Bound {
        Bound::Fin(Exp::from_integer(e))
    }

    fn add(self, other: Bound) -> Bound {
        use Bound::*;
        match (self, other) {
            (NegInf, PosInf) | (PosInf, NegInf) => {
                panic!("adding opposite infinities in support arithmetic")
            }
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Fin(a), Fin(b)) => Fin(a + b),
        }
    }

    pub fn as_exp(self) -> Option<Exp> {
        match self {
            Bound::Fin(e) => Some(e),
            _ => None,
        }
    }
}

/// Spec-facing classification of a variable's semantic support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportMode {
    /// Finite support in both directions.
    Polynomial,
    /// Finitely many negative exponents.
    LowerFinite,
    /// Finitely many positive exponents.
    UpperFinite,
    /// Known only on a window; `truncated` records whether coefficients
    /// outside the window may be missing.
    Window { lo: Exp, hi: Exp, truncated: bool },
}

/// Finitely many exponent cosets `offset + step*Z` for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSet {
    step: Exp,
    offsets: BTreeSet<Exp>,
}

fn rem_euclid_exp(e: Exp, step: Exp) -> Exp {
    let q = e / step;
    let f = q.floor();
    e - f * step
}

fn gcd_exp(a: Exp, b: Exp) -> Exp {
    // gcd(p/q, r/s) = gcd(p*s, r*q)/(q*s)
    let (p, q) = (*a.numer(), *a.denom());
    let (r, s) = (*b.numer(), *b.denom());
    let num = num_integer::gcd(p * s, r * q);
    Exp::new(num, q * s)
}

impl CosetSet {
    pub fn new(step: Exp, offsets: impl IntoIterator<Item = Exp>) -> CosetSet {
        assert!(step.is_positive());
        let offsets = offsets
            .into_iter()
            .map(|o| rem_euclid_exp(o, step))
            .collect();
        CosetSet { step, offsets }
    }

    pub fn integers() -> CosetSet {
        CosetSet::new(Exp::from_integer(1), [Exp::zero()])
    }

    pub fn step(&self) -> Exp {
        self.step
    }

    pub fn contains(&self, e: Exp) -> bool {
        self.offsets.contains(&rem_euclid_exp(e, self.step))
    }

    /// Union, refining to the common lattice.
    pub fn union(&self, other: &CosetSet) -> CosetSet {
        let step = gcd_exp(self.step, other.step);
        let mut offsets = BTreeSet::new();
        for o in &self.offsets {
            offsets.insert(rem_euclid_exp(*o, step));
        }
        for o in &other.offsets {
            offsets.insert(rem_euclid_exp(*o, step));
        }
        CosetSet { step, offsets }
    }

    /// Minkowski sum (for products).
    pub fn sum(&self, other: &CosetSet) -> CosetSet {
        let step = gcd_exp(self.step, other.step);
        let mut offsets = BTreeSet::new();
        for a in &self.offsets {
            for b in &other.offsets {
                offsets.insert(rem_euclid_exp(*a + *b, step));
            }
        }
        CosetSet { step, offsets }
    }

    pub fn shifted(&self, d: Exp) -> CosetSet {
        CosetSet::new(self.step, self.offsets.iter().map(|o| *o + d))
    }

    pub fn negated(&self) -> CosetSet {
        CosetSet::new(self.step, self.offsets.iter().map(|o| -*o))
    }
}

/// Per-variable metadata: name, exponent cosets, semantic support `sem`
/// (where the abstract object may be nonzero) and known window `known`
/// (where stored coefficients are guaranteed correct).
#[derive(Debug, Clone, PartialEq)]
pub struct VarMeta {
    pub name: String,
    pub cosets: CosetSet,
    pub sem: (Bound, Bound),
    pub known: (Bound, Bound),
}

impl VarMeta {
    /// A variable the series does not involve: exponent identically zero.
    pub fn absent(name: &str) -> VarMeta {
        VarMeta {
            name: name.into(),
            cosets: CosetSet::integers(),
            sem: (Bound::fin(0), Bound::fin(0)),
            known: (Bound::NegInf, Bound::PosInf),
        }
    }

    pub fn mode(&self) -> SupportMode {
        match (self.sem.0, self.sem.1) {
            (Bound::Fin(_), Bound::Fin(_)) => {
                // fully known finite object?
                if self.known.0 <= self.sem.0 && self.known.1 >= self.sem.1 {
                    SupportMode::Polynomial
                } else {
                    let lo = match self.known.0 {
                        Bound::Fin(e) => e,
                        _ => Exp::zero(),
                    };
                    let hi = match self.known.1 {
                        Bound::Fin(e) => e,
                        _ => Exp::zero(),
                    };
                    SupportMode::Window {
                        lo,
                        hi,
                        truncated: true,
                    }
                }
            }
            (Bound::Fin(_), Bound::PosInf) => SupportMode::LowerFinite,
            (Bound::NegInf, Bound::Fin(_)) => SupportMode::UpperFinite,
            _ => {
                let lo = self.known.0.as_exp().unwrap_or(Exp::zero());
                let hi = self.known.1.as_exp().unwrap_or(Exp::zero());
                SupportMode::Window {
                    lo,
                    hi,
                    truncated: true,
                }
            }
        }
    }

    /// Whether coefficients outside the known window may be missing.
    pub fn truncated(&self) -> bool {
        self.known.0 > self.sem.0 || self.known.1 < self.sem.1
    }
}

/// A sparse formal series with exact coefficients.
#[derive(Clone, PartialEq)]
pub struct Series<C: Coeff> {
    vars: Vec<VarMeta>,
    terms: BTreeMap<Mono, C>,
}

impl<C: Coeff> fmt::Debug for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|c| format!("{:?}", c)))
    }
}

impl<C: Coeff> Series<C> {
    pub fn zero(vars: Vec<VarMeta>) -> Series<C> {
        Series {
            vars,
            terms: BTreeMap::new(),
        }
    }

    /// A single-term series with exactly-known finite support.
    pub fn monomial(vars: Vec<VarMeta>, mono: &[Exp], c: C) -> Series<C> {
        let mut s = Series::zero(vars);
        for (i, e) in mono.iter().enumerate() {
            s.vars[i].cosets = s.vars[i].cosets.union(&CosetSet::new(
                s.vars[i].cosets.step(),
                [*e],
            ));
            s.vars[i].sem = (Bound::Fin(*e), Bound::Fin(*e));
            s.vars[i].known = (Bound::NegInf, Bound::PosInf);
        }
        if !c.is_czero() {
            s.insert(mono, c);
        }
        s
    }

    pub fn rename_variable(&self, old: &str, new: &str) -> Series<C> {
        let idx = self.var_index(old);
        let mut out = self.clone();
        out.vars[idx].name = new.to_string();
        out
    }

    pub fn vars(&self) -> &[VarMeta] {
        &self.vars
    }

    pub fn vars_mut(&mut self) -> &mut Vec<VarMeta> {
        &mut self.vars
    }

    pub fn var_index(&self, name: &str) -> usize {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .unwrap_or_else(|| panic!("no variable {name}"))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero_series(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, mono: &[Exp]) -> C {
        self.terms
            .get(&Mono::from_slice(mono))
            .cloned()
            .unwrap_or_else(C::czero)
    }

    /// Insert (accumulate) one term; enforces the coset invariant.
    pub fn insert(&mut self, mono: &[Exp], c: C) {
        assert_eq!(mono.len(), self.vars.len());
        if c.is_czero() {
            return;
        }
        for (i, e) in mono.iter().enumerate() {
            if !self.vars[i].cosets.contains(*e) {
                panic!(
                    "exponent {} of variable {} lies in no declared coset",
                    e, self.vars[i].name
                );
            }
        }
        let key = Mono::from_slice(mono);
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().cadd(&c);
                if s.is_czero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Embed into a larger variable universe (missing variables absent).
    pub fn embedded(&self, universe: &[VarMeta]) -> Series<C> {
        let map: Vec<Option<usize>> = universe
            .iter()
            .map(|u| self.vars.iter().position(|v| v.name == u.name))
            .collect();
        // All of self's variables must appear in the universe.
        for v in &self.vars {
            assert!(
                universe.iter().any(|u| u.name == v.name),
                "variable {} missing from universe",
                v.name
            );
        }
        let vars: Vec<VarMeta> = universe
            .iter()
            .zip(&map)
            .map(|(u, m)| match m {
                Some(i) => self.vars[*i].clone(),
                None => VarMeta::absent(&u.name),
            })
            .collect();
        let mut out = Series::zero(vars);
        for (mono, c) in &self.terms {
            let new_mono: Vec<Exp> = map
                .iter()
                .map(|m| match m {
                    Some(i) => mono[*i],
                    None => Exp::zero(),
                })
                .collect();
            out.insert(&new_mono, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Series<C> {
        Series {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.cneg())).collect(),
        }
    }

    pub fn scale(&self, s: &Cyc) -> Series<C> {
        if s.is_zero() {
            return Series::zero(self.vars.clone());
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let sc = c.cscale(s);
            if !sc.is_czero() {
                terms.insert(m.clone(), sc);
            }
        }
        Series {
            vars: self.vars.clone(),
            terms,
        }
    }

    pub fn add(&self, other: &Series<C>) -> Series<C> {
        assert_eq!(self.vars.len(), other.vars.len(), "var mismatch");
        let vars: Vec<VarMeta> = self
            .vars
            .iter()
            .zip(&other.vars)
            .map(|(a, b)| {
                assert_eq!(a.name, b.name, "var mismatch");
                VarMeta {
                    name: a.name.clone(),
                    cosets: a.cosets.union(&b.cosets),
                    sem: (a.sem.0.min(b.sem.0), a.sem.1.max(b.sem.1)),
                    known: (a.known.0.max(b.known.0), a.known.1.min(b.known.1)),
                }
            })
            .collect();
        let mut out = Series::zero(vars);
        for (m, c) in &self.terms {
            if out.in_known(m) {
                out.insert(m, c.clone());
            }
        }
        for (m, c) in &other.terms {
            if out.in_known(m) {
                out.insert(m, c.clone());
            }
        }
        out
    }

    pub fn sub(&self, other: &Series<C>) -> Series<C> {
        self.add(&other.neg())
    }

    fn in_known(&self, mono: &Mono) -> bool {
        mono.iter().enumerate().all(|(i, e)| {
            self.vars[i].known.0 <= Bound::Fin(*e) && Bound::Fin(*e) <= self.vars[i].known.1
        })
    }

    /// Truncate the known window of one variable (coefficients outside are
    /// dropped; semantics unchanged).
    pub fn restrict(&self, var: &str, w: Window) -> Series<C> {
        let idx = self.var_index(var);
        let mut vars = self.vars.clone();
        vars[idx].known = (
            vars[idx].known.0.max(Bound::Fin(w.lo)),
            vars[idx].known.1.min(Bound::Fin(w.hi)),
        );
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| w.contains(m[idx]))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Series { vars, terms }
    }

    /// Declare the stored support exact: semantic support is clamped to the
    /// actual stored extent in every variable (for objects built fully).
    pub fn mark_exact(&mut self) {
        for i in 0..self.vars.len() {
            let mut lo = Bound::PosInf;
            let mut hi = Bound::NegInf;
            for m in self.terms.keys() {
                lo = lo.min(Bound::Fin(m[i]));
                hi = hi.max(Bound::Fin(m[i]));
            }
            if self.terms.is_empty() {
                lo = Bound::fin(0);
                hi = Bound::fin(0);
            }
            self.vars[i].sem = (lo, hi);
            self.vars[i].known = (Bound::NegInf, Bound::PosInf);
        }
    }

    /// Multiply by `x^d` in one variable.
    pub fn shift_exponent(&self, var: &str, d: Exp) -> Series<C> {
        let idx = self.var_index(var);
        let mut vars = self.vars.clone();
        let sh = |b: Bound| match b {
            Bound::Fin(e) => Bound::Fin(e + d),
            x => x,
        };
        vars[idx].sem = (sh(vars[idx].sem.0), sh(vars[idx].sem.1));
        vars[idx].known = (sh(vars[idx].known.0), sh(vars[idx].known.1));
        vars[idx].cosets = vars[idx].cosets.shifted(d);
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut m2 = m.clone();
                m2[idx] += d;
                (m2, c.clone())
            })
            .collect();
        Series { vars, terms }
    }

    /// Substitute `x -> x^{-1}` in one variable.
    pub fn invert_variable(&self, var: &str) -> Series<C> {
        let idx = self.var_index(var);
        let mut vars = self.vars.clone();
        let neg = |b: Bound| match b {
            Bound::Fin(e) => Bound::Fin(-e),
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
        };
        vars[idx].sem = (neg(vars[idx].sem.1), neg(vars[idx].sem.0));
        vars[idx].known = (neg(vars[idx].known.1), neg(vars[idx].known.0));
        vars[idx].cosets = vars[idx].cosets.negated();
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut m2 = m.clone();
                m2[idx] = -m2[idx];
                (m2, c.clone())
            })
            .collect();
        Series { vars, terms }
    }

    /// Multiply each term by `f(e)` where `e` is its exponent in `var`.
    pub fn reweight<F>(&self, var: &str, mut f: F) -> Result<Series<C>, SeriesError>
    where
        F: FnMut(Exp) -> Result<Cyc, ScalarError>,
    {
        let idx = self.var_index(var);
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let s = f(m[idx])?;
            let sc = c.cscale(&s);
            if !sc.is_czero() {
                out.terms.insert(m.clone(), sc);
            }
        }
        Ok(out)
    }

    /// Formal derivative in one variable.
    pub fn derivative(&self, var: &str) -> Series<C> {
        let idx = self.var_index(var);
        let mut vars = self.vars.clone();
        let sh = |b: Bound| match b {
            Bound::Fin(e) => Bound::Fin(e - 1),
            x => x,
        };
        vars[idx].sem = (sh(vars[idx].sem.0), sh(vars[idx].sem.1));
        vars[idx].known = (sh(vars[idx].known.0), sh(vars[idx].known.1));
        vars[idx].cosets = vars[idx].cosets.shifted(-Exp::from_integer(1));
        let mut out = Series::zero(vars);
        for (m, c) in &self.terms {
            let e = m[idx];
            if e.is_zero() {
                continue;
            }
            let mut m2 = m.clone();
            m2[idx] = e - 1;
            let sc = c.cscale(&Cyc::from_exp(e));
            if !sc.is_czero() {
                out.insert(&m2, sc);
            }
        }
        out
    }

    /// Extract the coefficient of `var^e` as a series in the remaining
    /// variables.  Errors if `e` is outside the known window.
    pub fn coeff_of(&self, var: &str, e: Exp) -> Result<Series<C>, SeriesError> {
        let idx = self.var_index(var);
        let vm = &self.vars[idx];
        if vm.known.0 > Bound::Fin(e) || vm.known.1 < Bound::Fin(e) {
            return Err(SeriesError::TruncationExceeded(format!(
                "coefficient of {}^{} is not in the known window",
                var, e
            )));
        }
        let vars: Vec<VarMeta> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, v)| v.clone())
            .collect();
        let mut out = Series::zero(vars);
        for (m, c) in &self.terms {
            if m[idx] == e {
                let m2: Vec<Exp> = m
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, x)| *x)
                    .collect();
                out.insert(&m2, c.clone());
            }
        }
        Ok(out)
    }

    /// `Res_var`: the coefficient of `var^{-1}`.
    pub fn residue(&self, var: &str) -> Result<Series<C>, SeriesError> {
        self.coeff_of(var, Exp::from_integer(-1))
    }

    /// All exponents of `var` carrying a nonzero term.
    pub fn support(&self, var: &str) -> BTreeSet<Exp> {
        let idx = self.var_index(var);
        self.terms.keys().map(|m| m[idx]).collect()
    }

    pub fn render(&self, mut fmt_coeff: impl FnMut(&C) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut s = format!("({})", fmt_coeff(c));
            for (i, e) in m.iter().enumerate() {
                if !e.is_zero() {
                    s.push_str(&format!("*{}^({})", self.vars[i].name, e));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Series<Cyc> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|c| format!("{}", c)))
    }
}

/// Multiply a scalar series into a `C`-coefficient series.
///
/// Legality is decided per variable from semantic supports: the product is
/// ill-defined when one factor is unbounded below and the other unbounded
/// above in the same variable.  Known windows are propagated so the result
/// records exactly where it is trustworthy.
pub fn mul<C: Coeff>(a: &Series<Cyc>, b: &Series<C>) -> Result<Series<C>, SeriesError> {
    assert_eq!(a.vars.len(), b.vars.len(), "var mismatch");
    let mut vars = Vec::with_capacity(a.vars.len());
    for (va, vb) in a.vars.iter().zip(&b.vars) {
        assert_eq!(va.name, vb.name, "var mismatch");
        let (sa_lo, sa_hi) = va.sem;
        let (sb_lo, sb_hi) = vb.sem;
        let unbounded_pair = (sa_lo == Bound::NegInf && sb_hi == Bound::PosInf)
            || (sa_hi == Bound::PosInf && sb_lo == Bound::NegInf);
        if unbounded_pair {
            return Err(SeriesError::IllDefinedProduct {
                var: va.name.clone(),
            });
        }
        let sem = (sa_lo.add(sb_lo), sa_hi.add(sb_hi));
        let mut k_hi = Bound::PosInf;
        if va.known.1 < sa_hi {
            k_hi = k_hi.min(va.known.1.add(sb_lo));
        }
        if vb.known.1 < sb_hi {
            k_hi = k_hi.min(vb.known.1.add(sa_lo));
        }
        let mut k_lo = Bound::NegInf;
        if va.known.0 > sa_lo {
            k_lo = k_lo.max(va.known.0.add(sb_hi));
        }
        if vb.known.0 > sb_lo {
            k_lo = k_lo.max(vb.known.0.add(sa_hi));
        }
        vars.push(VarMeta {
            name: va.name.clone(),
            cosets: va.cosets.sum(&vb.cosets),
            sem,
            known: (k_lo, k_hi),
        });
    }
    let mut out = Series::zero(vars);
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let mono: Vec<Exp> = ma.iter().zip(mb.iter()).map(|(x, y)| *x + *y).collect();
            let inside = mono.iter().enumerate().all(|(i, e)| {
                out.vars[i].known.0 <= Bound::Fin(*e) && Bound::Fin(*e) <= out.vars[i].known.1
            });
            if !inside {
                continue;
            }
            let c = cb.cscale(ca);
            if !c.is_czero() {
                out.insert(&mono, c);
            }
        }
    }
    Ok(out)
}

/// Invert a one-variable lower-finite series with invertible leading
/// coefficient; the result is correct up to `hi_req`.
pub fn invert_lower(a: &Series<Cyc>, hi_req: Exp) -> Result<Series<Cyc>, SeriesError> {
    let active: Vec<usize> = (0..a.vars.len())
        .filter(|&i| !(a.vars[i].sem == (Bound::fin(0), Bound::fin(0))))
        .collect();
    if active.is_empty() {
        // plain scalar
        let zero_mono = Mono::from_slice(&vec![Exp::zero(); a.vars.len()]);
        let c = a.terms.get(&zero_mono).ok_or_else(|| {
            SeriesError::NonInvertibleLeading("series is zero".into())
        })?;
        let inv = c
            .inv()
            .map_err(|e| SeriesError::NonInvertibleLeading(e.to_string()))?;
        let mut out = Series::zero(a.vars.clone());
        out.terms.insert(zero_mono, inv);
        return Ok(out);
    }
    if active.len() != 1 {
        return Err(SeriesError::TruncationExceeded(
            "invert_lower needs a single-variable series".into(),
        ));
    }
    let idx = active[0];
    let name = a.vars[idx].name.clone();
    let e0 = match a.vars[idx].sem.0 {
        Bound::Fin(e) => e,
        _ => {
            return Err(SeriesError::IllDefinedProduct { var: name });
        }
    };
    let lead = a.terms.iter().find(|(m, _)| m[idx] == e0);
    let (_, c0) = lead.ok_or_else(|| {
        SeriesError::NonInvertibleLeading("series has zero leading coefficient".into())
    })?;
    let c0_inv = c0
        .inv()
        .map_err(|e| SeriesError::NonInvertibleLeading(e.to_string()))?;
    let step = a.vars[idx].cosets.step();
    // levels above the leading exponent, in lattice steps
    let top_level = hi_req + e0;
    if top_level < Exp::zero() {
        // requested window entirely below the support of the inverse
        let mut vars = a.vars.clone();
        vars[idx].sem = (Bound::Fin(-e0), Bound::PosInf);
        vars[idx].known = (Bound::NegInf, Bound::Fin(hi_req));
        vars[idx].cosets = CosetSet::new(step, [-e0]);
        return Ok(Series::zero(vars));
    }
    // a must be known through e0 + top_level
    if a.vars[idx].known.1 < Bound::Fin(e0 + top_level) || a.vars[idx].known.0 > Bound::Fin(e0) {
        return Err(SeriesError::TruncationExceeded(format!(
            "invert_lower needs coefficients of {} up to {}",
            name,
            e0 + top_level
        )));
    }
    let levels = (top_level / step).floor().to_integer();
    let mut acoef: Vec<Cyc> = Vec::with_capacity(levels as usize + 1);
    for k in 0..=levels {
        let e = e0 + step * Exp::from_integer(k);
        acoef.push(a.terms.get(&mono1(a, idx, e)).cloned().unwrap_or_else(Cyc::zero));
    }
    let mut b: Vec<Cyc> = Vec::with_capacity(levels as usize + 1);
    b.push(c0_inv.clone());
    for g in 1..=(levels as usize) {
        let mut s = Cyc::zero();
        for f in 1..=g {
            if !acoef[f].is_zero() && !b[g - f].is_zero() {
                s = s.add(&acoef[f].mul(&b[g - f]));
            }
        }
        b.push(s.neg().mul(&c0_inv));
    }
    let mut vars = a.vars.clone();
    vars[idx].sem = (Bound::Fin(-e0), Bound::PosInf);
    vars[idx].known = (Bound::NegInf, Bound::Fin(hi_req));
    vars[idx].cosets = CosetSet::new(step, [-e0]);
    let mut out = Series::zero(vars);
    for (g, c) in b.into_iter().enumerate() {
        if !c.is_zero() {
            let e = -e0 + step * Exp::from_integer(g as i64);
            let mut m = Mono::new();
            for i in 0..a.vars.len() {
                m.push(if i == idx { e } else { Exp::zero() });
            }
            out.terms.insert(m, c);
        }
    }
    Ok(out)
}

fn mono1<C: Coeff>(a: &Series<C>, idx: usize, e: Exp) -> Mono {
    let mut m = Mono::new();
    for i in 0..a.vars.len() {
        m.push(if i == idx { e } else { Exp::zero() });
    }
    m
}

/// Substitute `var -> var + z` for a scalar `z`, valid for series upper
/// finite in `var`; exact down to `lo_req`.
pub fn shift_variable<C: Coeff>(
    a: &Series<C>,
    var: &str,
    z: &Cyc,
    lo_req: Exp,
) -> Result<Series<C>, SeriesError> {
    let idx = a.var_index(var);
    let hi = match a.vars[idx].sem.1 {
        Bound::Fin(e) => e,
        Bound::NegInf => return Ok(Series::zero(a.vars.clone())),
        Bound::PosInf => {
            return Err(SeriesError::IllDefinedProduct {
                var: var.to_string(),
            })
        }
    };
    // need all coefficients from lo_req up to the semantic top
    let lo_need = match a.vars[idx].sem.0 {
        Bound::Fin(e) => e.max(lo_req),
        _ => lo_req,
    };
    if a.vars[idx].known.1 < Bound::Fin(hi) || a.vars[idx].known.0 > Bound::Fin(lo_need) {
        return Err(SeriesError::TruncationExceeded(format!(
            "shift_variable needs {} known on [{}, {}]",
            var, lo_need, hi
        )));
    }
    let mut vars = a.vars.clone();
    vars[idx].sem = (Bound::NegInf, Bound::Fin(hi));
    vars[idx].known = (Bound::Fin(lo_req), Bound::PosInf);
    let mut out = Series::zero(vars);
    let mut zpows: Vec<Cyc> = vec![Cyc::one()];
    for (m, c) in &a.terms {
        let mu = m[idx];
        let mut j: u64 = 0;
        loop {
            let e = mu - Exp::from_integer(j as i64);
            if e < lo_req {
                break;
            }
            while zpows.len() <= j as usize {
                let last = zpows.last().unwrap().clone();
                zpows.push(last.mul(z));
            }
            let coef = twistrep_exact::binomial_exp(mu, j);
            let s = Cyc::from_rat(coef).mul(&zpows[j as usize]);
            let sc = c.cscale(&s);
            if !sc.is_czero() {
                let mut m2 = m.clone();
                m2[idx] = e;
                out.insert(&m2, sc);
            }
            j += 1;
        }
    }
    Ok(out)
}

/// Substitute `var_from -> var_from + var_to` (nonnegative integer powers of
/// `var_to`), for series with integer exponents in `var_from`, cutting the
/// expansion at `var_to` exponent `hi_to`.
pub fn shift_variable_by_variable<C: Coeff>(
    a: &Series<C>,
    var_from: &str,
    var_to: &str,
    lo_from: Exp,
    hi_to: Exp,
) -> Result<Series<C>, SeriesError> {
    let i_from = a.var_index(var_from);
    let i_to = a.var_index(var_to);
    let hi = match a.vars[i_from].sem.1 {
        Bound::Fin(e) => e,
        Bound::NegInf => return Ok(Series::zero(a.vars.clone())),
        Bound::PosInf => {
            return Err(SeriesError::IllDefinedProduct {
                var: var_from.to_string(),
            })
        }
    };
    let lo_need = match a.vars[i_from].sem.0 {
        Bound::Fin(e) => e.max(lo_from),
        _ => lo_from,
    };
    if a.vars[i_from].known.1 < Bound::Fin(hi) || a.vars[i_from].known.0 > Bound::Fin(lo_need) {
        return Err(SeriesError::TruncationExceeded(format!(
            "shift needs {} known on [{}, {}]",
            var_from, lo_need, hi
        )));
    }
    if a.vars[i_to].truncated() {
        return Err(SeriesError::TruncationExceeded(format!(
            "shift target {} must be fully known",
            var_to
        )));
    }
    let mut vars = a.vars.clone();
    vars[i_from].sem = (Bound::NegInf, Bound::Fin(hi));
    vars[i_from].known = (Bound::Fin(lo_from), Bound::PosInf);
    // var_to picks up nonnegative integer powers; widen its metadata.
    vars[i_to].sem = (vars[i_to].sem.0, Bound::PosInf);
    vars[i_to].known = (Bound::NegInf, Bound::Fin(hi_to));
    vars[i_to].cosets = vars[i_to].cosets.union(&CosetSet::integers());
    let mut out = Series::zero(vars);
    for (m, c) in &a.terms {
        let mu = m[i_from];
        let mut j: i64 = 0;
        loop {
            let e = mu - Exp::from_integer(j);
            if e < lo_from {
                break;
            }
            let to_exp = m[i_to] + Exp::from_integer(j);
            if to_exp <= hi_to {
                let coef = twistrep_exact::binomial_exp(mu, j as u64);
                let sc = c.cscale(&Cyc::from_rat(coef));
                if !sc.is_czero() {
                    let mut m2 = m.clone();
                    m2[i_from] = e;
                    m2[i_to] = to_exp;
                    out.insert(&m2, sc);
                }
            }
            j += 1;
        }
    }
    Ok(out)
}

/// A reported coefficient mismatch.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub mono: Vec<(String, Exp)>,
    pub lhs: String,
    pub rhs: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc: Vec<String> = self
            .mono
            .iter()
            .map(|(v, e)| format!("{}^({})", v, e))
            .collect();
        write!(
            f,
            "at {}: lhs = {}, rhs = {}",
            loc.join(" "),
            self.lhs,
            self.rhs
        )
    }
}

/// Compare two series on a per-variable window.  The window must lie inside
/// both known regions; returns the first mismatch in term order.
pub fn compare_on_window<C: Coeff + fmt::Debug>(
    a: &Series<C>,
    b: &Series<C>,
    windows: &[(&str, Window)],
) -> Result<Option<Mismatch>, SeriesError> {
    assert_eq!(a.vars.len(), b.vars.len());
    for (name, w) in windows {
        for s in [a, b] {
            let idx = s.var_index(name);
            let vm = &s.vars[idx];
            if vm.known.0 > Bound::Fin(w.lo) || vm.known.1 < Bound::Fin(w.hi) {
                return Err(SeriesError::TruncationExceeded(format!(
                    "window [{}, {}] of {} exceeds known region",
                    w.lo, w.hi, name
                )));
            }
        }
    }
    let inside = |s: &Series<C>, m: &Mono| -> bool {
        windows.iter().all(|(name, w)| {
            let idx = s.var_index(name);
            w.contains(m[idx])
        })
    };
    let mut monos: BTreeSet<Mono> = BTreeSet::new();
    for (m, _) in a.terms() {
        if inside(a, m) {
            monos.insert(m.clone());
        }
    }
    for (m, _) in b.terms() {
        if inside(b, m) {
            monos.insert(m.clone());
        }
    }
    for m in monos {
        let ca = a.get(&m);
        let cb = b.get(&m);
        if ca != cb {
            return Ok(Some(Mismatch {
                mono: a
                    .vars
                    .iter()
                    .zip(m.iter())
                    .map(|(v, e)| (v.name.clone(), *e))
                    .collect(),
                lhs: format!("{:?}", ca),
                rhs: format!("{:?}", cb),
            }));
        }
    }
    Ok(None)
}
