//! Randomized algebra laws for the scalar ring: field axioms, branch
//! multiplicativity in the exponent, and the numeric-embedding homomorphism.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use twistrep_exact::{exp, power_of, rat, z_pow, zeta_pow, Cyc, PowBase, Rat, RingSpec};

fn sample(ring: &Arc<RingSpec>, rng: &mut ChaCha8Rng) -> Cyc {
    // Sparse element with a few monomials.
    let mut v = Cyc::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let num = rng.gen_range(-6i64..=6);
        let den = rng.gen_range(1i64..=4);
        let zp = rng.gen_range(0i64..8);
        let rp = rng.gen_range(0i64..(ring.exp_den() as i64));
        let m = zeta_pow(ring, zp)
            .mul(&z_pow(ring, exp(rp, ring.exp_den() as i64)).unwrap())
            .scale(&rat(num, den));
        v = v.add(&m);
    }
    v
}

#[test]
fn field_axioms_hold_on_random_samples() {
    // rho^2 = 5 over Q(i): an honest degree-4 field, so every nonzero
    // element is invertible.
    let ring = RingSpec::new(rat(5, 1), 1, &[2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..1000 {
        let a = sample(&ring, &mut rng);
        let b = sample(&ring, &mut rng);
        let c = sample(&ring, &mut rng);
        // distributivity
        assert_eq!(
            a.add(&b).mul(&c),
            a.mul(&c).add(&b.mul(&c)),
            "distributivity failed at case {case}"
        );
        // commutativity / associativity
        assert_eq!(a.mul(&b), b.mul(&a));
        assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        // inverses
        if !a.is_zero() {
            let ai = a.inv().expect("nonzero element in a field must invert");
            assert!(a.mul(&ai).is_one(), "a * a^-1 != 1 at case {case}");
        }
    }
}

#[test]
fn branch_multiplicativity_same_base() {
    // power_of(xi, a) * power_of(xi, b) == power_of(xi, a + b)
    let ring = RingSpec::new(rat(2, 1), 2, &[6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bases = [
        PowBase::Rational(rat(-1, 1)),
        PowBase::Rational(rat(2, 1)),
        PowBase::Rational(rat(-2, 1)),
        PowBase::Rational(rat(4, 1)),
        PowBase::Rational(rat(1, 2)),
        PowBase::Z,
        PowBase::MinusZ,
    ];
    for _ in 0..200 {
        let xi = &bases[rng.gen_range(0..bases.len())];
        let d = ring.exp_den() as i64;
        let a = exp(rng.gen_range(-12i64..=12), d);
        let b = exp(rng.gen_range(-12i64..=12), d);
        let lhs = power_of(&ring, xi, a)
            .unwrap()
            .mul(&power_of(&ring, xi, b).unwrap());
        let rhs = power_of(&ring, xi, a + b).unwrap();
        assert_eq!(lhs, rhs, "xi={xi:?} a={a} b={b}");
    }
}

#[test]
fn numeric_embedding_is_a_ring_homomorphism() {
    let ring = RingSpec::new(rat(-2, 1), 2, &[4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let a = sample(&ring, &mut rng);
        let b = sample(&ring, &mut rng);
        let sum = a.add(&b).to_complex();
        let prod = a.mul(&b).to_complex();
        let (ca, cb) = (a.to_complex(), b.to_complex());
        assert!((sum - (ca + cb)).norm() < 1e-12);
        let scale = prod.norm().max(1.0);
        assert!(
            (prod - ca * cb).norm() / scale < 1e-12,
            "embedding broke multiplicativity"
        );
    }
}

#[test]
fn exponent_denominator_is_enforced() {
    let ring = RingSpec::new(rat(2, 1), 1, &[2]).unwrap();
    assert!(z_pow(&ring, exp(1, 3)).is_err());
    assert!(power_of(&ring, &PowBase::Rational(rat(3, 1)), exp(1, 2)).is_err());
    assert!(power_of(&ring, &PowBase::Rational(Rat::one()), exp(1, 2)).is_ok());
}
