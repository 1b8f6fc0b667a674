//! The scalar ring `Q(zeta_N)[rho]/(rho^D - z)` and the branch bookkeeping
//! for powers of nonzero rationals.
//!
//! An instance fixes
//!
//! * the nonzero rational `z` (so `arg z` is `0` or `pi`),
//! * the automorphism order `T` and a common exponent denominator `D`
//!   (every scalar power `z^a` must have `D*a` integral),
//! * the conductor `N = lcm(4, 2*T*D)`, which hosts every phase
//!   `e^{a pi i}` with `D*a` integral as a power of `zeta_N`.
//!
//! When `z` is `1` or `-1`, `e^{(log z)/D}` is itself a root of unity and no
//! radical is adjoined.  Otherwise `rho` satisfies `rho^D = z`; if that
//! polynomial is reducible over `Q(zeta_N)` the ring has zero divisors, which
//! can only surface during inversion of a non-monomial element and is then
//! reported as [`ScalarError::ReducibleRadical`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::cyclotomic::cyclotomic_polynomial;
use crate::{Exp, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("unsupported-scalar-base: {0}")]
    UnsupportedScalarBase(String),
    #[error("reducible-radical: rho^{deg} - {z} has a zero divisor; pick a different z")]
    ReducibleRadical { deg: u32, z: String },
    #[error("exponent denominator of {alpha} does not divide D = {d}")]
    ExponentDenominator { alpha: Exp, d: u32 },
    #[error("z must be a nonzero rational")]
    ZeroZ,
    #[error("division by zero scalar")]
    DivisionByZero,
    #[error("operands belong to different scalar rings")]
    RingMismatch,
}

/// Branch data for the fixed logarithm on the rational axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    /// `arg z` is `pi` (i.e. `z < 0`); otherwise `arg z = 0`.
    pub arg_is_pi: bool,
    /// `eps_z`: `0` when `arg z < pi`, `-1` when `arg z >= pi`.
    pub epsz: i32,
}

/// Immutable description of one scalar ring instance.
pub struct RingSpec {
    conductor: u32,
    phi: u32,
    /// Allowed exponent denominator: `z^a` requires `D*a` integral.
    exp_den: u32,
    /// Degree of the adjoined radical (`1` when `z` is `1` or `-1`).
    rad_deg: u32,
    z: Rat,
    branch: Branch,
    /// `zeta_N^k` expanded over the power basis, for `0 <= k < N`.
    zeta_rows: Vec<Vec<Rat>>,
}

impl fmt::Debug for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RingSpec(N={}, D={}, rad_deg={}, z={})",
            self.conductor, self.exp_den, self.rad_deg, self.z
        )
    }
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    (a as u64).lcm(&(b as u64)) as u32
}

impl RingSpec {
    /// Build the ring for a nonzero rational `z`, automorphism order
    /// `t_order`, and any further exponent denominators the instance needs
    /// (weight cosets, intertwiner mode cosets, ...).
    pub fn new(z: Rat, t_order: u32, extra_denoms: &[u32]) -> Result<Arc<RingSpec>, ScalarError> {
        if z.is_zero() {
            return Err(ScalarError::ZeroZ);
        }
        assert!(t_order >= 1);
        let mut d = t_order.max(1);
        for &q in extra_denoms {
            d = lcm_u32(d, q.max(1));
        }
        let n = lcm_u32(4, 2 * t_order * d);
        let phi_poly = cyclotomic_polynomial(n);
        let phi = (phi_poly.len() - 1) as u32;

        // zeta^k mod Phi_N for 0 <= k < N, by repeated multiplication by x.
        let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(n as usize);
        let mut cur = vec![Rat::zero(); phi as usize];
        cur[0] = Rat::one();
        rows.push(cur.clone());
        for _ in 1..n {
            // multiply by x
            let top = cur[phi as usize - 1].clone();
            for i in (1..phi as usize).rev() {
                cur[i] = cur[i - 1].clone();
            }
            cur[0] = Rat::zero();
            if !top.is_zero() {
                // x^phi = -(Phi_N - x^phi) since Phi_N is monic
                for (i, c) in phi_poly.iter().take(phi as usize).enumerate() {
                    cur[i] -= Rat::from_integer(c.clone()) * &top;
                }
            }
            rows.push(cur.clone());
        }

        let one = Rat::one();
        let arg_is_pi = z.is_negative();
        let rad_deg = if z == one || z == -one.clone() { 1 } else { d };
        Ok(Arc::new(RingSpec {
            conductor: n,
            phi,
            exp_den: d,
            rad_deg,
            z,
            branch: Branch {
                arg_is_pi,
                epsz: if arg_is_pi { -1 } else { 0 },
            },
            zeta_rows: rows,
        }))
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }
    pub fn exp_den(&self) -> u32 {
        self.exp_den
    }
    pub fn z(&self) -> &Rat {
        &self.z
    }
    pub fn branch(&self) -> Branch {
        self.branch
    }

    fn compatible(&self, other: &RingSpec) -> bool {
        self.conductor == other.conductor && self.exp_den == other.exp_den && self.z == other.z
    }
}

/// One exact scalar: a sparse vector over the basis `zeta^i * rho^j`.
///
/// Plain rationals carry no ring handle and embed into any instance, so that
/// `Cyc::from(3)` can be combined with ring-backed values freely.
#[derive(Clone)]
pub struct Cyc {
    ring: Option<Arc<RingSpec>>,
    terms: BTreeMap<(u32, u32), Rat>,
}

impl fmt::Debug for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PartialEq for Cyc {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}
impl Eq for Cyc {}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.ring.as_ref().map(|r| r.conductor).unwrap_or(0);
        let mut first = true;
        for ((i, j), c) in &self.terms {
            let mut buf = String::new();
            if *i == 0 && *j == 0 {
                buf.push_str(&format!("{}", c));
            } else {
                if c != &Rat::one() {
                    buf.push_str(&format!("{}*", c));
                }
                if *i > 0 {
                    buf.push_str(&format!("E({})^{}", n, i));
                    if *j > 0 {
                        buf.push('*');
                    }
                }
                if *j > 0 {
                    buf.push_str(&format!("rho^{}", j));
                }
            }
            if first {
                write!(f, "{}", buf)?;
                first = false;
            } else {
                write!(f, " + {}", buf)?;
            }
        }
        Ok(())
    }
}

impl From<i64> for Cyc {
    fn from(v: i64) -> Self {
        Cyc::from_rat(Rat::from_integer(v.into()))
    }
}

impl Cyc {
    pub fn zero() -> Cyc {
        Cyc {
            ring: None,
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Cyc {
        Cyc::from(1)
    }

    pub fn from_rat(r: Rat) -> Cyc {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert((0, 0), r);
        }
        Cyc { ring: None, terms }
    }

    pub fn from_exp(e: Exp) -> Cyc {
        Cyc::from_rat(crate::exp_to_rat(e))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rat().map(|r| r.is_one()).unwrap_or(false)
    }

    /// The value as a rational, when it is one.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&(0, 0)) {
                return Some(c.clone());
            }
        }
        None
    }

    fn merged_ring(&self, other: &Cyc) -> Result<Option<Arc<RingSpec>>, ScalarError> {
        match (&self.ring, &other.ring) {
            (None, None) => Ok(None),
            (Some(r), None) => Ok(Some(r.clone())),
            (None, Some(r)) => Ok(Some(r.clone())),
            (Some(a), Some(b)) => {
                if Arc::ptr_eq(a, b) || a.compatible(b) {
                    Ok(Some(a.clone()))
                } else {
                    Err(ScalarError::RingMismatch)
                }
            }
        }
    }

    fn normalized(mut self) -> Cyc {
        self.terms.retain(|_, c| !c.is_zero());
        if self.terms.is_empty() {
            self.ring = None;
        }
        self
    }

    pub fn add(&self, other: &Cyc) -> Cyc {
        let ring = self.merged_ring(other).expect("scalar ring mismatch");
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let e = terms.entry(*k).or_insert_with(Rat::zero);
            *e += c;
        }
        Cyc { ring, terms }.normalized()
    }

    pub fn sub(&self, other: &Cyc) -> Cyc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Cyc {
        Cyc {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (*k, -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> Cyc {
        if r.is_zero() {
            return Cyc::zero();
        }
        Cyc {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect(),
        }
    }

    pub fn mul(&self, other: &Cyc) -> Cyc {
        let ring = self.merged_ring(other).expect("scalar ring mismatch");
        let mut acc: BTreeMap<(u32, u32), Rat> = BTreeMap::new();
        for ((i1, j1), c1) in &self.terms {
            for ((i2, j2), c2) in &other.terms {
                let c = c1 * c2;
                accumulate_monomial(&ring, &mut acc, i1 + i2, j1 + j2, c);
            }
        }
        Cyc { ring, terms: acc }.normalized()
    }

    pub fn pow(&self, n: u32) -> Cyc {
        let mut out = Cyc::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Multiplicative inverse.  Monomials invert directly; otherwise a linear
    /// solve over the full power basis is used.
    pub fn inv(&self) -> Result<Cyc, ScalarError> {
        if self.terms.is_empty() {
            return Err(ScalarError::DivisionByZero);
        }
        if let Some(r) = self.as_rat() {
            return Ok(Cyc::from_rat(Rat::one() / r));
        }
        let ring = self.ring.clone().expect("non-rational scalar without ring");
        if self.terms.len() == 1 {
            let ((i, j), c) = self.terms.iter().next().unwrap();
            // zeta^-i = zeta^(N-i); rho^-j = rho^(D-j) / z for j > 0.
            let mut out = Cyc::from_rat(Rat::one() / c);
            let n = ring.conductor;
            if *i > 0 {
                out = out.mul(&zeta_pow(&ring, (n - i) as i64));
            }
            if *j > 0 {
                let rho = rho_pow(&ring, (ring.rad_deg - j) as i64);
                out = out.mul(&rho).scale(&(Rat::one() / &ring.z));
            }
            return Ok(out);
        }
        self.inv_general(&ring)
    }

    fn inv_general(&self, ring: &Arc<RingSpec>) -> Result<Cyc, ScalarError> {
        let phi = ring.phi as usize;
        let d = ring.rad_deg as usize;
        let dim = phi * d;
        let idx = |i: usize, j: usize| j * phi + i;
        // Column for basis element zeta^i rho^j: coordinates of self * zeta^i rho^j.
        let mut mat = vec![vec![Rat::zero(); dim]; dim];
        for j in 0..d {
            for i in 0..phi {
                let mut acc: BTreeMap<(u32, u32), Rat> = BTreeMap::new();
                for ((si, sj), sc) in &self.terms {
                    accumulate_monomial(
                        &Some(ring.clone()),
                        &mut acc,
                        si + i as u32,
                        sj + j as u32,
                        sc.clone(),
                    );
                }
                for ((ri, rj), rc) in acc {
                    mat[idx(ri as usize, rj as usize)][idx(i, j)] = rc;
                }
            }
        }
        let mut rhs = vec![Rat::zero(); dim];
        rhs[idx(0, 0)] = Rat::one();
        let sol = solve_linear(mat, rhs).ok_or_else(|| ScalarError::ReducibleRadical {
            deg: ring.rad_deg,
            z: ring.z.to_string(),
        })?;
        let mut terms = BTreeMap::new();
        for j in 0..d {
            for i in 0..phi {
                let c = sol[idx(i, j)].clone();
                if !c.is_zero() {
                    terms.insert((i as u32, j as u32), c);
                }
            }
        }
        Ok(Cyc {
            ring: Some(ring.clone()),
            terms,
        }
        .normalized())
    }

    /// Numeric embedding: `zeta_N -> e^{2 pi i / N}`, `rho -> |z|^{1/D} e^{i arg(z)/D}`.
    pub fn to_complex(&self) -> Complex64 {
        let mut out = Complex64::new(0.0, 0.0);
        for ((i, j), c) in &self.terms {
            let mut v = Complex64::new(rat_to_f64(c), 0.0);
            if *i > 0 || *j > 0 {
                let ring = self.ring.as_ref().expect("ring");
                if *i > 0 {
                    let theta = 2.0 * std::f64::consts::PI * (*i as f64) / (ring.conductor as f64);
                    v *= Complex64::from_polar(1.0, theta);
                }
                if *j > 0 {
                    let zabs = rat_to_f64(&ring.z).abs();
                    let arg = if ring.branch.arg_is_pi {
                        std::f64::consts::PI
                    } else {
                        0.0
                    };
                    let rho = Complex64::from_polar(
                        zabs.powf(1.0 / ring.rad_deg as f64),
                        arg / ring.rad_deg as f64,
                    );
                    v *= rho.powi(*j as i32);
                }
            }
            out += v;
        }
        out
    }
}

fn rat_to_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Push `c * zeta^i rho^j` (with possibly out-of-range `i`, `j`) onto `acc`
/// in canonical form.
fn accumulate_monomial(
    ring: &Option<Arc<RingSpec>>,
    acc: &mut BTreeMap<(u32, u32), Rat>,
    i: u32,
    j: u32,
    mut c: Rat,
) {
    if c.is_zero() {
        return;
    }
    match ring {
        None => {
            debug_assert!(i == 0 && j == 0);
            let e = acc.entry((0, 0)).or_insert_with(Rat::zero);
            *e += c;
        }
        Some(r) => {
            let mut j = j;
            while j >= r.rad_deg {
                j -= r.rad_deg;
                c *= &r.z;
            }
            let i = i % r.conductor;
            if i < r.phi {
                let e = acc.entry((i, j)).or_insert_with(Rat::zero);
                *e += c;
            } else {
                let row = &r.zeta_rows[i as usize];
                for (k, rc) in row.iter().enumerate() {
                    if !rc.is_zero() {
                        let e = acc.entry((k as u32, j)).or_insert_with(Rat::zero);
                        *e += rc * &c;
                    }
                }
            }
        }
    }
}

/// `zeta_N^k` (any integer `k`).
pub fn zeta_pow(ring: &Arc<RingSpec>, k: i64) -> Cyc {
    let n = ring.conductor as i64;
    let k = k.rem_euclid(n) as u32;
    let mut acc = BTreeMap::new();
    accumulate_monomial(&Some(ring.clone()), &mut acc, k, 0, Rat::one());
    Cyc {
        ring: Some(ring.clone()),
        terms: acc,
    }
    .normalized()
}

/// `rho^m` for any integer `m`, folding `rho^D = z`.
fn rho_pow(ring: &Arc<RingSpec>, m: i64) -> Cyc {
    if ring.rad_deg == 1 {
        // No radical adjoined: rho is the exact value e^{(log z)/1} = z itself
        // only when D = 1; for z = +-1 the rho powers are handled by z_pow.
        let mut out = Cyc::from_rat(Rat::one());
        let k = m;
        if k >= 0 {
            for _ in 0..k {
                out = out.scale(&ring.z);
            }
        } else {
            for _ in 0..(-k) {
                out = out.scale(&(Rat::one() / &ring.z));
            }
        }
        return out;
    }
    let d = ring.rad_deg as i64;
    let r = m.rem_euclid(d);
    let q = (m - r) / d;
    let mut zq = Rat::one();
    if q >= 0 {
        for _ in 0..q {
            zq *= &ring.z;
        }
    } else {
        for _ in 0..(-q) {
            zq /= &ring.z;
        }
    }
    let mut terms = BTreeMap::new();
    terms.insert((0u32, r as u32), zq);
    Cyc {
        ring: Some(ring.clone()),
        terms,
    }
    .normalized()
}

/// Base argument of [`power_of`].
#[derive(Debug, Clone, PartialEq)]
pub enum PowBase {
    /// A nonzero rational number.
    Rational(Rat),
    /// The instance's symbolic `z`.
    Z,
    /// `-z`.
    MinusZ,
}

/// `e^{a pi i}` as an exact root of unity; requires `a * N/2` integral.
pub fn phase(ring: &Arc<RingSpec>, alpha: Exp) -> Result<Cyc, ScalarError> {
    let half_n = Exp::new(ring.conductor as i64 / 2, 1);
    let k = alpha * half_n;
    if !k.is_integer() {
        return Err(ScalarError::ExponentDenominator {
            alpha,
            d: ring.exp_den,
        });
    }
    Ok(zeta_pow(ring, k.to_integer()))
}

/// `z^a` for the instance's `z`, via the fixed branch: `z^a = e^{a log z}`.
pub fn z_pow(ring: &Arc<RingSpec>, alpha: Exp) -> Result<Cyc, ScalarError> {
    let da = alpha * Exp::new(ring.exp_den as i64, 1);
    if !da.is_integer() {
        return Err(ScalarError::ExponentDenominator {
            alpha,
            d: ring.exp_den,
        });
    }
    let one = Rat::one();
    if ring.z == one {
        return Ok(Cyc::one());
    }
    if ring.z == -one {
        // log(-1) = i pi
        return phase(ring, alpha);
    }
    // rho = e^{(log z)/D}, so z^a = rho^(D a).  Here rad_deg == exp_den.
    Ok(rho_pow(ring, da.to_integer()))
}

/// `|z|^a` expressed in the ring (used for general rational bases).
fn abs_z_pow(ring: &Arc<RingSpec>, alpha: Exp) -> Result<Cyc, ScalarError> {
    if !ring.branch.arg_is_pi {
        return z_pow(ring, alpha);
    }
    // |z|^{1/D} = rho * e^{-i pi / D}, hence |z|^a = rho^{D a} e^{-a pi i}.
    let p = z_pow(ring, alpha)?;
    let corr = phase(ring, -alpha)?;
    Ok(p.mul(&corr))
}

/// `xi^a = e^{a log xi}` for a supported base.
///
/// Integer exponents work for every nonzero rational base.  Fractional
/// exponents require `|xi|` to be an integer power of `|z|` (or `1`), so that
/// the magnitude lives in the radical part of the ring; otherwise the call
/// fails with `unsupported-scalar-base`.
pub fn power_of(ring: &Arc<RingSpec>, base: &PowBase, alpha: Exp) -> Result<Cyc, ScalarError> {
    match base {
        PowBase::Z => z_pow(ring, alpha),
        PowBase::MinusZ => minus_z_power(ring, alpha),
        PowBase::Rational(xi) => {
            if xi.is_zero() {
                return Err(ScalarError::UnsupportedScalarBase("base is zero".into()));
            }
            let da = alpha * Exp::new(ring.exp_den as i64, 1);
            if !da.is_integer() {
                return Err(ScalarError::ExponentDenominator {
                    alpha,
                    d: ring.exp_den,
                });
            }
            if alpha.is_integer() {
                let mut r = Rat::one();
                let k = alpha.to_integer();
                for _ in 0..k.abs() {
                    r *= xi;
                }
                if k < 0 {
                    r = Rat::one() / r;
                }
                return Ok(Cyc::from_rat(r));
            }
            let absxi = xi.abs();
            let magnitude = if absxi.is_one() {
                Cyc::one()
            } else {
                let m = match_power_of_abs_z(ring, &absxi).ok_or_else(|| {
                    ScalarError::UnsupportedScalarBase(format!(
                        "|{}| is not an integer power of |z| = |{}|",
                        xi, ring.z
                    ))
                })?;
                abs_z_pow(ring, alpha * Exp::new(m, 1))?
            };
            if xi.is_negative() {
                Ok(magnitude.mul(&phase(ring, alpha)?))
            } else {
                Ok(magnitude)
            }
        }
    }
}

/// Find integer `m` with `|z|^m = a` (small search; exact comparisons).
fn match_power_of_abs_z(ring: &Arc<RingSpec>, a: &Rat) -> Option<i64> {
    let absz = ring.z.abs();
    if absz.is_one() {
        return None;
    }
    for m in 1..=64i64 {
        let mut p = Rat::one();
        for _ in 0..m {
            p *= &absz;
        }
        if &p == a {
            return Some(m);
        }
        if (Rat::one() / &p) == *a {
            return Some(-m);
        }
    }
    None
}

/// `(-z)^b` computed by the branch identity
/// `(-z)^b = e^{b pi i} z^b e^{eps_z b 2 pi i}`.
pub fn minus_z_power(ring: &Arc<RingSpec>, beta: Exp) -> Result<Cyc, ScalarError> {
    let p1 = phase(ring, beta)?;
    let p2 = z_pow(ring, beta)?;
    let p3 = phase(ring, Exp::new(2 * ring.branch.epsz as i64, 1) * beta)?;
    Ok(p1.mul(&p2).mul(&p3))
}

/// Solve `M x = b` over the rationals; `None` when singular.
fn solve_linear(mut m: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rat::one() / m[col][col].clone();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c2 in col..n {
                    let t = &m[col][c2] * &f;
                    m[r][c2] -= t;
                }
                let t = &b[col] * &f;
                b[r] -= t;
            }
        }
    }
    Some(b)
}
