//! Randomized invariants of the series kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twistrep_exact::{exp, rat, Cyc, PowBase, RingSpec};
use twistrep_series::{
    compare_on_window, expand_binomial, mul, BinomForm, Bound, CosetSet, Exp, Series, VarMeta,
    Window,
};

fn random_exp(rng: &mut ChaCha8Rng, den: i64) -> Exp {
    exp(rng.gen_range(-4 * den..=4 * den), den)
}

#[test]
fn exponent_law_randomized() {
    // expand(b, a) * expand(b, b') == expand(b, a+b') on the window,
    // 100 cases per base form.
    let ring = RingSpec::new(rat(2, 1), 2, &[4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let forms = [
        BinomForm::VarFirst { sign: 1 },
        BinomForm::VarFirst { sign: -1 },
        BinomForm::ScalarFirst { sign: 1 },
        BinomForm::ScalarFirst { sign: -1 },
    ];
    for form in forms {
        for _ in 0..100 {
            let a = random_exp(&mut rng, 4);
            let b = random_exp(&mut rng, 4);
            let (build, check) = match form {
                BinomForm::VarFirst { .. } => {
                    (Window::new(exp(-40, 4), exp(20, 4)), Window::new(exp(-16, 4), exp(-8, 4)))
                }
                BinomForm::ScalarFirst { .. } => {
                    (Window::new(exp(0, 4), exp(60, 4)), Window::new(exp(0, 4), exp(8, 4)))
                }
            };
            let sa = expand_binomial(&ring, "x", exp(1, 4), &PowBase::Z, form, a, build).unwrap();
            let sb = expand_binomial(&ring, "x", exp(1, 4), &PowBase::Z, form, b, build).unwrap();
            let sab =
                expand_binomial(&ring, "x", exp(1, 4), &PowBase::Z, form, a + b, build).unwrap();
            let prod = mul(&sa, &sb).unwrap();
            assert!(
                compare_on_window(&prod, &sab, &[("x", check)]).unwrap().is_none(),
                "form {form:?}, a = {a}, b = {b}"
            );
        }
    }
}

fn random_lower_finite(rng: &mut ChaCha8Rng, hi: i64) -> Series<Cyc> {
    let lo = rng.gen_range(-3..=0);
    let vm = VarMeta {
        name: "x".into(),
        cosets: CosetSet::new(exp(1, 2), [exp(0, 1), exp(1, 2)]),
        sem: (Bound::Fin(exp(lo, 1)), Bound::PosInf),
        known: (Bound::NegInf, Bound::Fin(exp(hi, 1))),
    };
    let mut s = Series::zero(vec![vm]);
    for _ in 0..rng.gen_range(1..=6) {
        let e = exp(rng.gen_range(2 * lo..=2 * hi), 2);
        let c = Cyc::from_rat(rat(rng.gen_range(-5i64..=5), rng.gen_range(1i64..=3)));
        if !c.is_zero() {
            s.insert(&[e], c);
        }
    }
    s
}

#[test]
fn multiply_is_commutative_and_associative_on_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let a = random_lower_finite(&mut rng, 12);
        let b = random_lower_finite(&mut rng, 12);
        let c = random_lower_finite(&mut rng, 12);
        let ab = mul(&a, &b).unwrap();
        let ba = mul(&b, &a).unwrap();
        let w = Window::new(exp(-3, 1), exp(6, 1));
        assert!(compare_on_window(&ab, &ba, &[("x", w)]).unwrap().is_none());
        let abc1 = mul(&ab, &c).unwrap();
        let abc2 = mul(&a, &mul(&b, &c).unwrap()).unwrap();
        let w2 = Window::new(exp(-3, 1), exp(4, 1));
        assert!(compare_on_window(&abc1, &abc2, &[("x", w2)]).unwrap().is_none());
    }
}

#[test]
fn truncation_monotonicity() {
    // recomputing with a larger window agrees with the smaller one on the
    // overlap
    let ring = RingSpec::new(rat(-2, 1), 2, &[6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let alpha = random_exp(&mut rng, 6);
        let small = Window::new(exp(-4, 1), alpha.ceil());
        let large = Window::new(exp(-9, 1), alpha.ceil());
        let s1 = expand_binomial(
            &ring,
            "x",
            exp(1, 6),
            &PowBase::Z,
            BinomForm::VarFirst { sign: -1 },
            alpha,
            small,
        )
        .unwrap();
        let s2 = expand_binomial(
            &ring,
            "x",
            exp(1, 6),
            &PowBase::Z,
            BinomForm::VarFirst { sign: -1 },
            alpha,
            large,
        )
        .unwrap();
        assert!(compare_on_window(&s1, &s2, &[("x", small)]).unwrap().is_none());

        // products inherit the property (their valid region is narrower:
        // the factor known down to -4 only supports the product down to
        // alpha - 4)
        let t1 = mul(&s1, &s1).unwrap();
        let t2 = mul(&s2, &s2).unwrap();
        let lo = alpha - exp(3, 1);
        let hi = alpha + alpha;
        if lo <= hi {
            let overlap = Window::new(lo, hi);
            assert!(compare_on_window(&t1, &t2, &[("x", overlap)]).unwrap().is_none());
        }
    }
}
