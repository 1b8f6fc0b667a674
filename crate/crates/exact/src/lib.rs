//! Exact scalar arithmetic for the coefficient field used throughout the
//! workspace: the cyclotomic field `Q(zeta_N)`, optionally extended by a real
//! radical `rho` standing for `e^{(log z)/D}`, together with the fixed branch
//! of the logarithm
//!
//! ```text
//! log xi = ln|xi| + i*arg(xi),   0 <= arg(xi) < 2*pi,
//! xi^a   = e^{a log xi}.
//! ```
//!
//! With `z` restricted to nonzero rationals, `arg z` is `0` or `pi`, so every
//! branch phase `e^{a pi i}` that can occur is a root of unity and all scalar
//! arithmetic stays exact.  Values are immutable and cheap to clone; binary
//! operations reduce to canonical form so that equality is coefficient
//! equality.

mod cyclotomic;
mod ring;

pub use cyclotomic::cyclotomic_polynomial;
pub use ring::{
    minus_z_power, phase, power_of, z_pow, zeta_pow, Branch, Cyc, PowBase, RingSpec, ScalarError,
};

pub type Rat = num_rational::BigRational;
/// Exponents of formal variables and of `z`-powers: small exact rationals.
pub type Exp = num_rational::Rational64;

use num_traits::{One, Zero};

/// `p/q` as a [`Rat`].
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}

/// `p/q` as an [`Exp`].
pub fn exp(p: i64, q: i64) -> Exp {
    Exp::new(p, q)
}

/// Exact binomial coefficient `binom(a, k)` for rational `a` and `k >= 0`.
pub fn binomial(a: &Rat, k: u64) -> Rat {
    let mut num = Rat::one();
    let mut j = Rat::zero();
    for _ in 0..k {
        num *= a - &j;
        j += Rat::one();
    }
    let mut fact = Rat::one();
    for i in 1..=k {
        fact *= Rat::from_integer(i.into());
    }
    num / fact
}

/// Binomial coefficient with an [`Exp`] top argument.
pub fn binomial_exp(a: Exp, k: u64) -> Rat {
    binomial(&Rat::new((*a.numer()).into(), (*a.denom()).into()), k)
}

/// Widen an [`Exp`] to a [`Rat`].
pub fn exp_to_rat(e: Exp) -> Rat {
    Rat::new((*e.numer()).into(), (*e.denom()).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(&rat(4, 1), 2), rat(6, 1));
        assert_eq!(binomial(&rat(1, 2), 0), rat(1, 1));
        assert_eq!(binomial(&rat(1, 2), 1), rat(1, 2));
        assert_eq!(binomial(&rat(1, 2), 2), rat(-1, 8));
        assert_eq!(binomial(&rat(-1, 1), 3), rat(-1, 1));
    }
}
