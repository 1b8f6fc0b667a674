//! Formal delta-function kernels and the products/substitutions built on
//! them.
//!
//! Every identity in the calculus has terms of the shape
//!
//! ```text
//! outer^{-1} delta(num / (+-outer)) * (num / outer)^mu * F
//! ```
//!
//! where `num` is `a +- b` with each part a formal variable or the fixed
//! scalar `z`, and `F` is an arbitrary coefficient series.  Expanding the
//! delta as `sum_n num^{n+mu} outer^{-n-1-mu}` pins, for every output
//! exponent box, a finite range of `n`; each `n`-term is then an honest
//! product that the generic support-mode machinery can validate.  The outer
//! range is derived, never guessed: if no finite range covers the request,
//! the expansion fails rather than truncating silently.

use std::sync::Arc;

use num_traits::Zero;
use twistrep_exact::{z_pow, Cyc, RingSpec};

use crate::binomial::{expand_binomial, expand_binomial_vars, BinomForm};
use crate::series::{mul, Bound, CosetSet, Mismatch, Series, SeriesError, VarMeta};
use crate::{compare_on_window, Coeff, Exp, Window};

/// A variable or the instance scalar `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Var(String),
    Z,
}

impl Atom {
    pub fn var(name: &str) -> Atom {
        Atom::Var(name.to_string())
    }
    fn as_var(&self) -> Option<&str> {
        match self {
            Atom::Var(v) => Some(v),
            Atom::Z => None,
        }
    }
}

/// Numerator of a delta argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeltaNum {
    /// `a + sign*b`, expanded in nonnegative powers of `b`.
    Pair { a: Atom, sign: i8, b: Atom },
    /// A bare variable.
    Single(Atom),
}

/// `outer^{-1} delta(num / (+-outer)) * (num/outer)^mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaKernel {
    pub outer: Atom,
    pub outer_negated: bool,
    pub num: DeltaNum,
    pub mu: Exp,
}

impl DeltaKernel {
    pub fn new(num: DeltaNum, outer: Atom, outer_negated: bool, mu: Exp) -> DeltaKernel {
        DeltaKernel {
            outer,
            outer_negated,
            num,
            mu,
        }
    }
}

/// A delta kernel times a coefficient series.
#[derive(Debug, Clone)]
pub struct DeltaProduct<C: Coeff> {
    pub kernel: DeltaKernel,
    pub factor: Series<C>,
}

fn sem_of<C: Coeff>(s: &Series<C>, var: &str) -> (Bound, Bound) {
    match s.vars().iter().find(|v| v.name == var) {
        Some(v) => v.sem,
        None => (Bound::fin(0), Bound::fin(0)),
    }
}

fn win_of(windows: &[(&str, Window)], var: &str) -> Window {
    windows
        .iter()
        .find(|(n, _)| *n == var)
        .map(|(_, w)| *w)
        .unwrap_or_else(|| panic!("no window for variable {var}"))
}

impl<C: Coeff> DeltaProduct<C> {
    pub fn new(kernel: DeltaKernel, factor: Series<C>) -> DeltaProduct<C> {
        DeltaProduct { kernel, factor }
    }

    /// Expand on the requested box of windows.
    ///
    /// The expansion enumerates, per stored factor term, every kernel index
    /// pair `(n, j)` whose product lands in the box — these ranges are pinned
    /// by the box itself, so the enumeration is finite and complete.  A
    /// separate reach check confirms that no *unknown* region of the factor
    /// (outside its known window but inside its semantic support) could have
    /// contributed; if one could, the expansion fails loudly instead of
    /// returning silently wrong coefficients.  The result is exact on the
    /// box.
    pub fn expand(
        &self,
        ring: &Arc<RingSpec>,
        windows: &[(&str, Window)],
    ) -> Result<Series<C>, SeriesError> {
        let k = &self.kernel;
        let mu = k.mu;

        // Variable universe in windows order; each variable's coset set is
        // the factor's, shifted by what the kernel contributes there.
        let factor = self.factor.embedded(
            &windows
                .iter()
                .map(|(n, _)| VarMeta::absent(n))
                .collect::<Vec<_>>(),
        );
        let universe: Vec<VarMeta> = windows
            .iter()
            .enumerate()
            .map(|(i, (name, w))| {
                let mut cosets = factor.vars()[i].cosets.clone();
                if k.outer.as_var() == Some(*name) {
                    cosets = cosets.sum(&CosetSet::new(Exp::from_integer(1), [-mu - 1]));
                }
                match &k.num {
                    DeltaNum::Pair { a, b, .. } => {
                        if a.as_var() == Some(*name) {
                            cosets = cosets.sum(&CosetSet::new(Exp::from_integer(1), [mu]));
                        }
                        if b.as_var() == Some(*name) {
                            cosets = cosets.sum(&CosetSet::integers());
                        }
                    }
                    DeltaNum::Single(a) => {
                        if a.as_var() == Some(*name) {
                            cosets = cosets.sum(&CosetSet::new(Exp::from_integer(1), [mu]));
                        }
                    }
                }
                VarMeta {
                    name: name.to_string(),
                    cosets,
                    sem: (Bound::fin(0), Bound::fin(0)),
                    known: (Bound::Fin(w.lo), Bound::Fin(w.hi)),
                }
            })
            .collect();

        self.reach_check(&factor, windows)?;

        let (outer_var, a_atom, sign, b_atom) = kernel_shape(k);
        let io = outer_var.map(|v| index_in(windows, v));
        let (ia, a_is_var) = match &a_atom {
            Some(Atom::Var(v)) => (Some(index_in(windows, v)), true),
            Some(Atom::Z) => (None, false),
            None => (None, false),
        };
        let (ib, b_is_var) = match &b_atom {
            Some(Atom::Var(v)) => (Some(index_in(windows, v)), true),
            Some(Atom::Z) => (None, false),
            None => (None, false),
        };

        let wins: Vec<Window> = windows.iter().map(|(_, w)| *w).collect();
        let mut out: Series<C> = Series::zero(universe);

        for (fm, fc) in factor.terms() {
            // n-range for this factor term
            let (n_lo, n_hi) = term_n_range(k, fm, &wins, io, ia, ib)?;
            for n in n_lo..=n_hi {
                let alpha = mu + Exp::from_integer(n);
                let mut phase = Cyc::one();
                if k.outer_negated && n.rem_euclid(2) == 1 {
                    phase = phase.neg();
                }
                // outer exponent / scalar
                let mut base = phase;
                let mut mono: Vec<Exp> = fm.to_vec();
                match (&k.outer, io) {
                    (Atom::Var(_), Some(i)) => {
                        mono[i] += -alpha - 1;
                        if !wins[i].contains(mono[i]) {
                            continue;
                        }
                    }
                    (Atom::Z, _) => {
                        base = base.mul(&z_pow(ring, -alpha - 1)?);
                    }
                    _ => unreachable!(),
                }
                // j-range; a bare numerator has no binomial sum
                let (j_lo, j_hi) = if b_atom.is_none() {
                    (0, 0)
                } else {
                    term_j_range(alpha, &mono, &wins, ia, ib, a_is_var, b_is_var)
                };
                for j in j_lo..=j_hi {
                    let mut c = base.mul(&Cyc::from_rat(twistrep_exact::binomial_exp(
                        alpha, j as u64,
                    )));
                    if c.is_zero() {
                        continue;
                    }
                    if sign < 0 && j % 2 == 1 {
                        c = c.neg();
                    }
                    let mut m2 = mono.clone();
                    let mut ok = true;
                    match (a_is_var, ia) {
                        (true, Some(i)) => {
                            m2[i] += alpha - Exp::from_integer(j);
                            ok &= wins[i].contains(m2[i]);
                        }
                        _ => {
                            // A = Z: scalar z^{alpha - j}
                            c = c.mul(&z_pow(ring, alpha - Exp::from_integer(j))?);
                        }
                    }
                    if b_atom.is_some() {
                        match (b_is_var, ib) {
                            (true, Some(i)) => {
                                m2[i] += Exp::from_integer(j);
                                ok &= wins[i].contains(m2[i]);
                            }
                            _ => {
                                c = c.mul(&z_pow(ring, Exp::from_integer(j))?);
                            }
                        }
                    }
                    if !ok || c.is_zero() {
                        continue;
                    }
                    let cc = fc.cscale(&c);
                    if !cc.is_czero() {
                        out.insert(&m2, cc);
                    }
                }
            }
        }

        // semantic supports of the full kernel product
        let fsem: Vec<(Bound, Bound)> = windows
            .iter()
            .map(|(n, _)| sem_of(&factor, n))
            .collect();
        for (i, vm) in out.vars_mut().iter_mut().enumerate() {
            let name = vm.name.clone();
            let mut sem = fsem[i];
            if k.outer.as_var() == Some(name.as_str()) {
                sem = (Bound::NegInf, Bound::PosInf);
            }
            match &k.num {
                DeltaNum::Pair { a, b, .. } => {
                    if a.as_var() == Some(name.as_str()) {
                        sem = (Bound::NegInf, Bound::PosInf);
                    }
                    if b.as_var() == Some(name.as_str()) {
                        sem = (sem.0, Bound::PosInf);
                    }
                }
                DeltaNum::Single(a) => {
                    if a.as_var() == Some(name.as_str()) {
                        sem = (Bound::NegInf, Bound::PosInf);
                    }
                }
            }
            vm.sem = sem;
        }
        Ok(out)
    }

    /// Fail if some factor coefficient outside the factor's known region
    /// could contribute to the requested box.
    fn reach_check(
        &self,
        factor: &Series<C>,
        windows: &[(&str, Window)],
    ) -> Result<(), SeriesError> {
        for (vi, vm) in factor.vars().iter().enumerate() {
            let quantum = Bound::Fin(vm.cosets.step());
            for side in [0usize, 1usize] {
                // unknown region on this side, intersected with the support
                let region = if side == 0 {
                    if vm.known.0 <= vm.sem.0 {
                        continue;
                    }
                    (vm.sem.0, vm.known.0.sub_b(quantum))
                } else {
                    if vm.known.1 >= vm.sem.1 {
                        continue;
                    }
                    (vm.known.1.add_b(quantum), vm.sem.1)
                };
                // intervals of factor exponents per variable: unknown region
                // in vi, semantic support elsewhere
                let f_iv: Vec<(Bound, Bound)> = factor
                    .vars()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if i == vi { region } else { v.sem })
                    .collect();
                if self.feasible(&f_iv, windows) {
                    return Err(SeriesError::TruncationExceeded(format!(
                        "factor is truncated in {} where the delta product still reaches the requested box",
                        vm.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Could a factor term with exponents in `f_iv` contribute to the box?
    fn feasible(&self, f_iv: &[(Bound, Bound)], windows: &[(&str, Window)]) -> bool {
        let k = &self.kernel;
        let mu = k.mu;
        let (outer_var, a_atom, _, b_atom) = kernel_shape(k);
        let iv = |name: &str| -> (Bound, Bound) {
            f_iv[index_in(windows, name)]
        };
        let wiv = |name: &str| -> (Bound, Bound) {
            let w = win_of(windows, name);
            (Bound::Fin(w.lo), Bound::Fin(w.hi))
        };
        // n-interval from the outer equation e_o = -n-1-mu+f_o
        let mut n_iv: (Bound, Bound) = (Bound::NegInf, Bound::PosInf);
        if let Some(vo) = outer_var {
            let (w_lo, w_hi) = wiv(vo);
            let (f_lo, f_hi) = iv(vo);
            n_iv = intersect(
                n_iv,
                (
                    f_lo.sub_b(w_hi).add_b(Bound::Fin(-mu - 1)),
                    f_hi.sub_b(w_lo).add_b(Bound::Fin(-mu - 1)),
                ),
            );
        }
        // j-interval
        let mut j_iv: (Bound, Bound) = (Bound::fin(0), Bound::PosInf);
        if let Some(Atom::Var(vb)) = &b_atom {
            let (w_lo, w_hi) = wiv(vb);
            let (f_lo, f_hi) = iv(vb);
            j_iv = intersect(j_iv, (w_lo.sub_b(f_hi), w_hi.sub_b(f_lo)));
        }
        if empty(j_iv) || empty(n_iv) {
            return false;
        }
        // a-equation: e_a = n + mu - j + f_a must meet the a-window
        if let Some(Atom::Var(va)) = &a_atom {
            let (w_lo, w_hi) = wiv(va);
            let (f_lo, f_hi) = iv(va);
            // n + mu - j in [w_lo - f_hi, w_hi - f_lo]
            let target = (w_lo.sub_b(f_hi), w_hi.sub_b(f_lo));
            let reach = (
                n_iv.0.add_b(Bound::Fin(mu)).sub_b(j_iv.1),
                n_iv.1.add_b(Bound::Fin(mu)).sub_b(j_iv.0),
            );
            if empty(intersect(target, reach)) {
                return false;
            }
        }
        // vars untouched by the kernel must land in their own window
        for (i, (name, w)) in windows.iter().enumerate() {
            let touched = outer_var == Some(*name)
                || matches!(&a_atom, Some(Atom::Var(v)) if v == name)
                || matches!(&b_atom, Some(Atom::Var(v)) if v == name);
            if !touched {
                let f = f_iv[i];
                if empty(intersect(f, (Bound::Fin(w.lo), Bound::Fin(w.hi)))) {
                    return false;
                }
            }
        }
        true
    }
}

fn kernel_shape(k: &DeltaKernel) -> (Option<&str>, Option<Atom>, i8, Option<Atom>) {
    let outer_var = k.outer.as_var();
    match &k.num {
        DeltaNum::Pair { a, sign, b } => (outer_var, Some(a.clone()), *sign, Some(b.clone())),
        DeltaNum::Single(a) => (outer_var, Some(a.clone()), 1, None),
    }
}

fn index_in(windows: &[(&str, Window)], name: &str) -> usize {
    windows
        .iter()
        .position(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no window for variable {name}"))
}

fn intersect(a: (Bound, Bound), b: (Bound, Bound)) -> (Bound, Bound) {
    (a.0.max(b.0), a.1.min(b.1))
}

fn empty(iv: (Bound, Bound)) -> bool {
    iv.0 > iv.1
}

fn gcd_step(a: Exp, b: Exp) -> Exp {
    let (p, q) = (*a.numer(), *a.denom());
    let (r, s) = (*b.numer(), *b.denom());
    Exp::new(num_integer::gcd(p * s, r * q), q * s)
}

/// Finite `n`-range for one stored factor term.
fn term_n_range(
    k: &DeltaKernel,
    fm: &crate::series::Mono,
    wins: &[Window],
    io: Option<usize>,
    ia: Option<usize>,
    ib: Option<usize>,
) -> Result<(i64, i64), SeriesError> {
    let mu = k.mu;
    match (&k.outer, io) {
        (Atom::Var(_), Some(i)) => {
            // e_o = -n - 1 - mu + f_o in window
            let f = fm[i];
            let lo = f - wins[i].hi - 1 - mu;
            let hi = f - wins[i].lo - 1 - mu;
            Ok((lo.ceil().to_integer(), hi.floor().to_integer()))
        }
        (Atom::Z, _) => {
            // n + mu = (e_a - f_a) + j; j >= 0 bounded by the b-window
            let ia = ia.ok_or_else(|| {
                SeriesError::TruncationExceeded(
                    "delta kernel over z needs a variable numerator".into(),
                )
            })?;
            let fa = fm[ia];
            let j_hi = match ib {
                Some(i) => (wins[i].hi - fm[i]).floor().to_integer().max(0),
                None => {
                    return Err(SeriesError::TruncationExceeded(
                        "delta kernel over z needs two variable atoms".into(),
                    ))
                }
            };
            let lo = wins[ia].lo - fa - mu;
            let hi = wins[ia].hi - fa - mu + Exp::from_integer(j_hi);
            Ok((lo.ceil().to_integer(), hi.floor().to_integer()))
        }
        _ => unreachable!(),
    }
}

/// Finite `j`-range for one `(factor term, n)` pair; `mono` already carries
/// the outer shift.
fn term_j_range(
    alpha: Exp,
    mono: &[Exp],
    wins: &[Window],
    ia: Option<usize>,
    ib: Option<usize>,
    a_is_var: bool,
    b_is_var: bool,
) -> (i64, i64) {
    let mut lo: i64 = 0;
    let mut hi: i64 = i64::MAX;
    if b_is_var {
        if let Some(i) = ib {
            // e_b = j + f_b in window
            lo = lo.max((wins[i].lo - mono[i]).ceil().to_integer());
            hi = hi.min((wins[i].hi - mono[i]).floor().to_integer());
        }
    }
    if a_is_var {
        if let Some(i) = ia {
            // e_a = alpha - j + f_a in window
            lo = lo.max((alpha + mono[i] - wins[i].hi).ceil().to_integer());
            hi = hi.min((alpha + mono[i] - wins[i].lo).floor().to_integer());
        }
    }
    if hi == i64::MAX {
        // neither side bounded the range: nothing to enumerate safely
        hi = -1;
    }
    (lo, hi)
}

impl Bound {
    fn add_b(self, other: Bound) -> Bound {
        use Bound::*;
        match (self, other) {
            (NegInf, PosInf) | (PosInf, NegInf) => PosInf, // unconstraining
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Fin(a), Fin(b)) => Fin(a + b),
        }
    }
    fn sub_b(self, other: Bound) -> Bound {
        use Bound::*;
        let neg = match other {
            NegInf => PosInf,
            PosInf => NegInf,
            Fin(e) => Fin(-e),
        };
        self.add_b(neg)
    }
}

/// Verify the three-term delta identity
///
/// ```text
/// x^{-1} delta((z+x0)/x) = x0^{-1} delta((x-z)/x0) - x0^{-1} delta((z-x)/(-x0))
/// ```
///
/// coefficientwise on the given `(x0, x)` windows.
pub fn delta_three_term(
    ring: &Arc<RingSpec>,
    win_x0: Window,
    win_x: Window,
) -> Result<Option<Mismatch>, SeriesError> {
    let (a, b, c) = three_term_kernels();
    let windows: &[(&str, Window)] = &[("x0", win_x0), ("x", win_x)];
    let one = |k: DeltaKernel| {
        let f: Series<Cyc> = Series::monomial(
            vec![VarMeta::absent("x0"), VarMeta::absent("x")],
            &[Exp::zero(), Exp::zero()],
            Cyc::one(),
        );
        DeltaProduct::new(k, f).expand(ring, windows)
    };
    let lhs = one(a)?;
    let rhs = one(b)?.sub(&one(c)?);
    compare_on_window(&lhs, &rhs, windows)
}

/// The three kernels of the identity, exposed so negative controls can
/// perturb them.
pub fn three_term_kernels() -> (DeltaKernel, DeltaKernel, DeltaKernel) {
    let zero = Exp::zero();
    (
        // x^{-1} delta((z + x0)/x)
        DeltaKernel::new(
            DeltaNum::Pair {
                a: Atom::Z,
                sign: 1,
                b: Atom::var("x0"),
            },
            Atom::var("x"),
            false,
            zero,
        ),
        // x0^{-1} delta((x - z)/x0)
        DeltaKernel::new(
            DeltaNum::Pair {
                a: Atom::var("x"),
                sign: -1,
                b: Atom::Z,
            },
            Atom::var("x0"),
            false,
            zero,
        ),
        // x0^{-1} delta((z - x)/(-x0))
        DeltaKernel::new(
            DeltaNum::Pair {
                a: Atom::Z,
                sign: -1,
                b: Atom::var("x"),
            },
            Atom::var("x0"),
            true,
            zero,
        ),
    )
}

/// Substitution laws for factors paired with a delta kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSubstRule {
    /// Replace powers of the (single-variable) numerator by the outer
    /// variable: `delta(x1/x2) f(x1) = delta(x1/x2) f(x2)`.
    SubstituteNum,
    /// Replace integer powers of the outer variable by the numerator:
    /// `x0^{-1} delta((z-x)/x0) f(x0) = x0^{-1} delta((z-x)/x0) f(z-x)`.
    SubstituteOuter,
    /// Coset transfer: `delta((x1-x0)/x2) (x2-z)^a =
    /// delta((x1-x0)/x2) ((x1-x0)/x2)^{-a} (x1-x0-z)^a`.
    PowerTransfer { alpha: Exp },
}

/// Apply a delta-supported substitution to a kernel-factor pair.
///
/// `windows` bound the materialization of any expansion the rule needs.
pub fn delta_substitute(
    p: &DeltaProduct<Cyc>,
    rule: &DeltaSubstRule,
    ring: &Arc<RingSpec>,
    windows: &[(&str, Window)],
) -> Result<DeltaProduct<Cyc>, SeriesError> {
    match rule {
        DeltaSubstRule::SubstituteNum => {
            let va = match &p.kernel.num {
                DeltaNum::Single(Atom::Var(v)) => v.clone(),
                _ => {
                    return Err(SeriesError::IllegalDeltaSubstitution(
                        "numerator substitution needs a single-variable numerator".into(),
                    ))
                }
            };
            let vo = p.kernel.outer.as_var().ok_or_else(|| {
                SeriesError::IllegalDeltaSubstitution("outer must be a variable".into())
            })?;
            // move every power of va onto vo
            let ia = p.factor.var_index(&va);
            let io = p.factor.var_index(vo);
            for (m, _) in p.factor.terms() {
                if !m[ia].is_integer() {
                    return Err(SeriesError::IllegalDeltaSubstitution(format!(
                        "factor has fractional power {} of {}",
                        m[ia], va
                    )));
                }
            }
            let mut out = Series::zero(
                p.factor
                    .vars()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if i == ia {
                            VarMeta::absent(&v.name)
                        } else if i == io {
                            let mut v2 = v.clone();
                            v2.sem = (Bound::NegInf, Bound::PosInf);
                            v2.known = (Bound::NegInf, Bound::PosInf);
                            v2.cosets = v2.cosets.union(&p.factor.vars()[ia].cosets);
                            v2
                        } else {
                            v.clone()
                        }
                    })
                    .collect(),
            );
            for (m, c) in p.factor.terms() {
                let mut m2: Vec<Exp> = m.to_vec();
                let ea = m2[ia];
                m2[io] += ea;
                m2[ia] = Exp::zero();
                out.insert(&m2, c.clone());
            }
            Ok(DeltaProduct::new(p.kernel.clone(), out))
        }
        DeltaSubstRule::SubstituteOuter => {
            let vo = p
                .kernel
                .outer
                .as_var()
                .ok_or_else(|| {
                    SeriesError::IllegalDeltaSubstitution("outer must be a variable".into())
                })?
                .to_string();
            let io = p.factor.var_index(&vo);
            for (m, _) in p.factor.terms() {
                if !m[io].is_integer() {
                    return Err(SeriesError::IllegalDeltaSubstitution(format!(
                        "factor has fractional power {} of {}",
                        m[io], vo
                    )));
                }
            }
            // factor' = sum over terms: coeff * num^{e_o} * rest
            let universe: Vec<VarMeta> = p
                .factor
                .vars()
                .iter()
                .map(|v| {
                    if v.name == vo {
                        VarMeta::absent(&v.name)
                    } else {
                        let mut v2 = v.clone();
                        v2.sem = (Bound::NegInf, Bound::PosInf);
                        v2.known = (Bound::NegInf, Bound::PosInf);
                        v2
                    }
                })
                .collect();
            let mut out: Option<Series<Cyc>> = None;
            for (m, c) in p.factor.terms() {
                let e = m[io];
                let mut rest_mono: Vec<Exp> = m.to_vec();
                rest_mono[io] = Exp::zero();
                let pow = num_to_power(ring, &p.kernel.num, e, windows)?.embedded(&universe);
                let rest = Series::monomial(universe.clone(), &rest_mono, c.clone());
                let term = mul(&pow, &rest)?;
                out = Some(match out {
                    None => term,
                    Some(s) => s.add(&term),
                });
            }
            let out = out.unwrap_or_else(|| Series::zero(universe));
            Ok(DeltaProduct::new(p.kernel.clone(), out))
        }
        DeltaSubstRule::PowerTransfer { alpha } => {
            let vo = p
                .kernel
                .outer
                .as_var()
                .ok_or_else(|| {
                    SeriesError::IllegalDeltaSubstitution("outer must be a variable".into())
                })?
                .to_string();
            // The factor must be the upper-finite expansion of (outer - z)^alpha.
            let step = Exp::new(1, *alpha.denom());
            let wo = win_of(windows, &vo);
            // check on the part of the request the factor actually knows
            let fk = p.factor.vars()[p.factor.var_index(&vo)].known;
            let wcheck = Window::new(
                match fk.0 {
                    Bound::Fin(e) => e.max(wo.lo),
                    _ => wo.lo,
                },
                match fk.1 {
                    Bound::Fin(e) => e.min(wo.hi),
                    _ => wo.hi,
                },
            );
            let reference = expand_binomial(
                ring,
                &vo,
                step,
                &twistrep_exact::PowBase::Z,
                BinomForm::VarFirst { sign: -1 },
                *alpha,
                wcheck,
            )?
            .embedded(p.factor.vars());
            if compare_on_window(&p.factor, &reference, &[(&vo, wcheck)])?.is_some() {
                return Err(SeriesError::IllegalDeltaSubstitution(format!(
                    "factor is not (({})-z)^({}) on the window",
                    vo, alpha
                )));
            }
            let mut kernel = p.kernel.clone();
            kernel.mu = kernel.mu - *alpha;
            let universe: Vec<VarMeta> = p
                .factor
                .vars()
                .iter()
                .map(|v| {
                    if v.name == vo {
                        VarMeta::absent(&v.name)
                    } else {
                        let mut v2 = v.clone();
                        v2.sem = (Bound::NegInf, Bound::PosInf);
                        v2.known = (Bound::NegInf, Bound::PosInf);
                        v2
                    }
                })
                .collect();
            let factor = num_minus_z_power(ring, &kernel.num, *alpha, windows)?.embedded(&universe);
            Ok(DeltaProduct::new(kernel, factor))
        }
    }
}

/// `num^e` for integer `e`, materialized on the windows.
fn num_to_power(
    ring: &Arc<RingSpec>,
    num: &DeltaNum,
    e: Exp,
    windows: &[(&str, Window)],
) -> Result<Series<Cyc>, SeriesError> {
    assert!(e.is_integer());
    let step = Exp::from_integer(1);
    match num {
        DeltaNum::Single(Atom::Var(v)) => {
            let vm = VarMeta {
                name: v.clone(),
                cosets: CosetSet::new(step, [e]),
                sem: (Bound::Fin(e), Bound::Fin(e)),
                known: (Bound::NegInf, Bound::PosInf),
            };
            Ok(Series::monomial(vec![vm], &[e], Cyc::one()))
        }
        DeltaNum::Single(Atom::Z) => {
            let vm = VarMeta::absent("_");
            Ok(Series::monomial(vec![vm], &[Exp::zero()], z_pow(ring, e)?))
        }
        DeltaNum::Pair { a, sign, b } => match (a, b) {
            (Atom::Var(va), Atom::Var(vb)) => Ok(expand_binomial_vars(
                va,
                step,
                vb,
                *sign,
                e,
                win_of(windows, va),
                win_of(windows, vb),
            )),
            (Atom::Z, Atom::Var(vb)) => Ok(expand_binomial(
                ring,
                vb,
                step,
                &twistrep_exact::PowBase::Z,
                BinomForm::ScalarFirst { sign: *sign },
                e,
                win_of(windows, vb),
            )?),
            (Atom::Var(va), Atom::Z) => Ok(expand_binomial(
                ring,
                va,
                step,
                &twistrep_exact::PowBase::Z,
                BinomForm::VarFirst { sign: *sign },
                e,
                win_of(windows, va),
            )?),
            (Atom::Z, Atom::Z) => unreachable!(),
        },
    }
}

/// `(num - z)^alpha` for a two-variable numerator `a - b`: expand
/// `(y - z)^alpha` upper-finitely and substitute `y -> (a - b)`.
fn num_minus_z_power(
    ring: &Arc<RingSpec>,
    num: &DeltaNum,
    alpha: Exp,
    windows: &[(&str, Window)],
) -> Result<Series<Cyc>, SeriesError> {
    let (va, sign, vb) = match num {
        DeltaNum::Pair {
            a: Atom::Var(va),
            sign,
            b: Atom::Var(vb),
        } => (va, *sign, vb),
        _ => {
            return Err(SeriesError::IllegalDeltaSubstitution(
                "coset transfer needs a two-variable numerator".into(),
            ))
        }
    };
    let step = Exp::new(1, *alpha.denom());
    let wa = win_of(windows, va);
    let wb = win_of(windows, vb);
    // (y - z)^alpha = sum_j binom(alpha,j)(-z)^j y^{alpha-j}
    let jmax = (alpha - wa.lo).floor().to_integer();
    let mut out: Option<Series<Cyc>> = None;
    for j in 0..=jmax {
        let mut c = Cyc::from_rat(twistrep_exact::binomial_exp(alpha, j as u64));
        // (-z)^j for integer j is (-1)^j z^j
        c = c.mul(&z_pow(ring, Exp::from_integer(j))?);
        if j % 2 == 1 {
            c = c.neg();
        }
        let y_pow = expand_binomial_vars(va, step, vb, sign, alpha - Exp::from_integer(j), wa, wb);
        let term = y_pow.scale(&c);
        out = Some(match out {
            None => term,
            Some(s) => s.add(&term),
        });
    }
    let mut out = out.expect("nonempty expansion");
    // semantic support of the closed form
    for vm in out.vars_mut() {
        if vm.name == *va {
            vm.sem = (Bound::NegInf, Bound::Fin(alpha));
        }
        if vm.name == *vb {
            vm.sem = (Bound::fin(0), Bound::PosInf);
        }
    }
    Ok(out)
}
