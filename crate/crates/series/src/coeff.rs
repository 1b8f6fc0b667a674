use twistrep_exact::Cyc;

/// Coefficient objects a series can carry: a module over the scalar ring.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn czero() -> Self;
    fn is_czero(&self) -> bool;
    fn cadd(&self, other: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cscale(&self, s: &Cyc) -> Self;
}

impl Coeff for Cyc {
    fn czero() -> Self {
        Cyc::zero()
    }
    fn is_czero(&self) -> bool {
        self.is_zero()
    }
    fn cadd(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn cneg(&self) -> Self {
        self.neg()
    }
    fn cscale(&self, s: &Cyc) -> Self {
        self.mul(s)
    }
}
