//! Sparse multivariate formal series whose exponents live in finitely many
//! rational cosets `c + (1/T)Z` per variable.
//!
//! A full formal distribution has infinitely many terms, so a stored series
//! carries, per variable,
//!
//! * a *semantic* support interval: where the abstract object can be nonzero
//!   (this is the support-mode data: `Polynomial`, `LowerFinite`,
//!   `UpperFinite`, bilateral), and
//! * a *known* interval: where the stored coefficients are guaranteed
//!   correct (the window).
//!
//! Every operation propagates both intervals, so "exact on the window" is a
//! checkable property rather than a convention: multiplying two series whose
//! support modes would force an infinite coefficient sum is an error, and
//! shrinking known-windows records truncation.
//!
//! Coefficients are generic over [`Coeff`]: the same kernel runs with exact
//! scalars, graded-space vectors, and evaluation functionals.

mod binomial;
mod coeff;
mod delta;
mod series;

pub use binomial::{expand_binomial, expand_binomial_vars, BinomForm};
pub use coeff::Coeff;
pub use delta::{
    delta_substitute, delta_three_term, three_term_kernels, Atom, DeltaKernel, DeltaNum,
    DeltaProduct, DeltaSubstRule,
};
pub use series::{
    compare_on_window, invert_lower, mul, shift_variable, shift_variable_by_variable, Bound,
    CosetSet, Mismatch, Series, SeriesError, SupportMode, VarMeta,
};

pub type Exp = twistrep_exact::Exp;

/// Closed rational interval request, one per variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: Exp,
    pub hi: Exp,
}

impl Window {
    pub fn new(lo: Exp, hi: Exp) -> Window {
        assert!(lo <= hi);
        Window { lo, hi }
    }

    /// Symmetric window `[-w, w]`.
    pub fn sym(w: i64) -> Window {
        Window::new(Exp::from_integer(-w), Exp::from_integer(w))
    }

    pub fn contains(&self, e: Exp) -> bool {
        self.lo <= e && e <= self.hi
    }
}
