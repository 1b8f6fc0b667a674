//! Operation-level checks: binomial conventions, products and their
//! legality table, inversion, residues, delta identities, substitutions.

use twistrep_exact::{exp, rat, Cyc, PowBase, RingSpec};
use twistrep_series::{
    compare_on_window, delta_substitute, delta_three_term, expand_binomial, expand_binomial_vars,
    invert_lower, mul, three_term_kernels, Atom, BinomForm, DeltaKernel, DeltaNum, DeltaProduct,
    DeltaSubstRule, Exp, Series, SeriesError, VarMeta, Window,
};

fn ring_z(p: i64, q: i64) -> std::sync::Arc<RingSpec> {
    RingSpec::new(rat(p, q), 2, &[2]).unwrap()
}

#[test]
fn binomial_x_minus_z_half() {
    // (x - z)^(1/2) = x^(1/2) - (1/2) z x^(-1/2) - (1/8) z^2 x^(-3/2) - ...
    let ring = ring_z(2, 1);
    let s = expand_binomial(
        &ring,
        "x",
        exp(1, 2),
        &PowBase::Z,
        BinomForm::VarFirst { sign: -1 },
        exp(1, 2),
        Window::new(exp(-3, 2), exp(1, 2)),
    )
    .unwrap();
    assert_eq!(s.num_terms(), 3);
    assert_eq!(s.get(&[exp(1, 2)]), Cyc::one());
    // -(1/2) * z = -1
    assert_eq!(s.get(&[exp(-1, 2)]), Cyc::from(-1));
    // -(1/8) * z^2 = -1/2
    assert_eq!(s.get(&[exp(-3, 2)]), Cyc::from_rat(rat(-1, 2)));
}

#[test]
fn binomial_integer_power_is_polynomial() {
    let ring = ring_z(2, 1);
    let s = expand_binomial(
        &ring,
        "x",
        exp(1, 1),
        &PowBase::Z,
        BinomForm::VarFirst { sign: -1 },
        exp(1, 1),
        Window::new(exp(-4, 1), exp(1, 1)),
    )
    .unwrap();
    // exactly x - z, the lower terms vanish
    assert_eq!(s.num_terms(), 2);
    assert_eq!(s.get(&[exp(1, 1)]), Cyc::one());
    assert_eq!(s.get(&[exp(0, 1)]), Cyc::from(-2));
}

#[test]
fn exponent_law_within_window() {
    let ring = ring_z(-1, 1);
    let w = Window::new(exp(0, 1), exp(8, 1));
    for (a, b) in [(exp(1, 2), exp(1, 2)), (exp(-1, 2), exp(3, 2)), (exp(1, 2), exp(-5, 2))] {
        let sa = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::ScalarFirst { sign: 1 }, a, w).unwrap();
        let sb = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::ScalarFirst { sign: 1 }, b, w).unwrap();
        let sab = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::ScalarFirst { sign: 1 }, a + b, w).unwrap();
        let prod = mul(&sa, &sb).unwrap();
        assert!(
            compare_on_window(&prod, &sab, &[("x", Window::new(exp(0, 1), exp(6, 1)))])
                .unwrap()
                .is_none(),
            "(z+x)^a (z+x)^b != (z+x)^(a+b) for a={a} b={b}"
        );
    }
}

#[test]
fn product_of_opposite_halves_is_one() {
    // (x-z)^(1/2) * (x-z)^(-1/2) = 1 on any window
    let ring = ring_z(2, 1);
    let w = Window::new(exp(-6, 1), exp(1, 1));
    let a = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::VarFirst { sign: -1 }, exp(1, 2), w).unwrap();
    let b = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::VarFirst { sign: -1 }, exp(-1, 2), w).unwrap();
    let prod = mul(&a, &b).unwrap();
    let one = Series::monomial(
        vec![VarMeta::absent("x")],
        &[Exp::from_integer(0)],
        Cyc::one(),
    );
    assert!(compare_on_window(&prod, &one, &[("x", Window::new(exp(-3, 1), exp(0, 1)))])
        .unwrap()
        .is_none());
}

#[test]
fn ill_defined_product_is_rejected() {
    // (x-z)^(1/2) is upper finite; sum_{n in Z} x^n is neither: multiplying
    // a lower-finite object with an upper-finite one must fail.
    let ring = ring_z(2, 1);
    let w = Window::new(exp(-6, 1), exp(6, 1));
    let uf = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::VarFirst { sign: -1 }, exp(1, 2), w).unwrap();
    let lf = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::ScalarFirst { sign: -1 }, exp(-1, 1), w).unwrap();
    match mul(&uf, &lf) {
        Err(SeriesError::IllDefinedProduct { var }) => assert_eq!(var, "x"),
        other => panic!("expected ill-defined product, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn invert_lower_geometric() {
    // (z - x)^1 with z = -1: (-1 - x)^(-1) = -1 + x - x^2 + ...
    let ring = ring_z(-1, 1);
    let w = Window::new(exp(0, 1), exp(8, 1));
    let a = expand_binomial(&ring, "x", exp(1, 1), &PowBase::Z, BinomForm::ScalarFirst { sign: -1 }, exp(1, 1), w).unwrap();
    let inv = invert_lower(&a, exp(5, 1)).unwrap();
    for k in 0..=5i64 {
        let expect = if k % 2 == 0 { Cyc::from(-1) } else { Cyc::one() };
        assert_eq!(inv.get(&[exp(k, 1)]), expect, "coefficient of x^{k}");
    }
    let prod = mul(&a, &inv).unwrap();
    let one = Series::monomial(vec![VarMeta::absent("x")], &[Exp::from_integer(0)], Cyc::one());
    assert!(compare_on_window(&prod, &one, &[("x", Window::new(exp(0, 1), exp(4, 1)))])
        .unwrap()
        .is_none());
}

#[test]
fn invert_lower_constant_and_error_cases() {
    let c = Series::monomial(vec![VarMeta::absent("x")], &[Exp::from_integer(0)], Cyc::from(4));
    let inv = invert_lower(&c, exp(3, 1)).unwrap();
    assert_eq!(inv.get(&[exp(0, 1)]), Cyc::from_rat(rat(1, 4)));

    let zero: Series<Cyc> = Series::zero(vec![VarMeta::absent("x")]);
    assert!(matches!(
        invert_lower(&zero, exp(2, 1)),
        Err(SeriesError::NonInvertibleLeading(_)) | Err(SeriesError::TruncationExceeded(_))
    ));
}

#[test]
fn residues() {
    let ring = ring_z(2, 1);
    // Res_x x^{-1} = 1
    let vm = VarMeta {
        name: "x".into(),
        cosets: twistrep_series::CosetSet::new(exp(1, 2), [exp(-1, 1)]),
        sem: (twistrep_series::Bound::Fin(exp(-1, 1)), twistrep_series::Bound::Fin(exp(-1, 1))),
        known: (twistrep_series::Bound::NegInf, twistrep_series::Bound::PosInf),
    };
    let s = Series::monomial(vec![vm], &[exp(-1, 1)], Cyc::one());
    assert_eq!(s.residue("x").unwrap().get(&[]), Cyc::one());

    // Res_x x^{1/2} = 0
    let hf = expand_binomial(&ring, "x", exp(1, 2), &PowBase::Z, BinomForm::VarFirst { sign: -1 }, exp(1, 2), Window::new(exp(-5, 2), exp(1, 2))).unwrap();
    assert!(hf.residue("x").unwrap().is_zero_series());
}

#[test]
fn residue_of_delta_kernel_times_power() {
    // Res_{x0} x0^m x0^{-1} delta((x1-x2)/x0) = (x1-x2)^m for m >= 0.
    let ring = ring_z(2, 1);
    let windows: &[(&str, Window)] = &[("x0", Window::sym(8)), ("x1", Window::sym(6)), ("x2", Window::sym(6))];
    for m in 0..=3i64 {
        let kernel = DeltaKernel::new(
            DeltaNum::Pair { a: Atom::var("x1"), sign: -1, b: Atom::var("x2") },
            Atom::var("x0"),
            false,
            Exp::from_integer(0),
        );
        let one = Series::monomial(
            vec![VarMeta::absent("x0"), VarMeta::absent("x1"), VarMeta::absent("x2")],
            &[exp(0, 1), exp(0, 1), exp(0, 1)],
            Cyc::one(),
        );
        let expanded = DeltaProduct::new(kernel, one).expand(&ring, windows).unwrap();
        let shifted = expanded.shift_exponent("x0", Exp::from_integer(m));
        let res = shifted.residue("x0").unwrap();
        let expect = expand_binomial_vars("x1", exp(1, 1), "x2", -1, Exp::from_integer(m), Window::sym(6), Window::sym(6));
        assert!(
            compare_on_window(&res, &expect, &[("x1", Window::sym(4)), ("x2", Window::sym(4))])
                .unwrap()
                .is_none(),
            "m = {m}"
        );
    }
}

#[test]
fn three_term_delta_identity_for_various_z() {
    for (p, q) in [(-1i64, 1i64), (2, 1), (-2, 1), (1, 2)] {
        let ring = RingSpec::new(rat(p, q), 2, &[2]).unwrap();
        let r = delta_three_term(&ring, Window::sym(6), Window::sym(6)).unwrap();
        assert!(r.is_none(), "three-term delta identity failed for z = {p}/{q}: {:?}", r);
    }
}

#[test]
fn three_term_delta_negative_control() {
    // flipping the sign of the subtracted kernel must produce a mismatch
    let ring = ring_z(-1, 1);
    let (a, b, c) = three_term_kernels();
    let windows: &[(&str, Window)] = &[("x0", Window::sym(6)), ("x", Window::sym(6))];
    let one = || {
        Series::monomial(
            vec![VarMeta::absent("x0"), VarMeta::absent("x")],
            &[exp(0, 1), exp(0, 1)],
            Cyc::one(),
        )
    };
    let lhs = DeltaProduct::new(a, one()).expand(&ring, windows).unwrap();
    let rhs = DeltaProduct::new(b, one())
        .expand(&ring, windows)
        .unwrap()
        .add(&DeltaProduct::new(c, one()).expand(&ring, windows).unwrap());
    let miss = compare_on_window(&lhs, &rhs, windows).unwrap();
    assert!(miss.is_some(), "perturbed identity unexpectedly passed");
}

#[test]
fn delta_substitution_degree_one() {
    // x2^{-1} delta(x1/x2) * x1 = x2^{-1} delta(x1/x2) * x2
    let ring = ring_z(2, 1);
    let kernel = DeltaKernel::new(DeltaNum::Single(Atom::var("x1")), Atom::var("x2"), false, Exp::from_integer(0));
    let x1 = {
        let vm1 = VarMeta {
            name: "x1".into(),
            cosets: twistrep_series::CosetSet::integers(),
            sem: (twistrep_series::Bound::fin(1), twistrep_series::Bound::fin(1)),
            known: (twistrep_series::Bound::NegInf, twistrep_series::Bound::PosInf),
        };
        Series::monomial(vec![vm1, VarMeta::absent("x2")], &[exp(1, 1), exp(0, 1)], Cyc::one())
    };
    let p = DeltaProduct::new(kernel, x1);
    let windows: &[(&str, Window)] = &[("x1", Window::sym(6)), ("x2", Window::sym(6))];
    let q = delta_substitute(&p, &DeltaSubstRule::SubstituteNum, &ring, windows).unwrap();
    // factor is now x2
    assert_eq!(q.factor.get(&[exp(0, 1), exp(1, 1)]), Cyc::one());
    let lhs = p.expand(&ring, windows).unwrap();
    let rhs = q.expand(&ring, windows).unwrap();
    assert!(compare_on_window(&lhs, &rhs, &[("x1", Window::sym(4)), ("x2", Window::sym(4))])
        .unwrap()
        .is_none());
}

#[test]
fn delta_substitution_power_transfer() {
    // x2^{-1} delta((x1-x0)/x2) (x2-z)^(1/2)
    //   = x2^{-1} delta((x1-x0)/x2) ((x1-x0)/x2)^(-1/2) (x1-x0-z)^(1/2)
    let ring = ring_z(2, 1);
    let windows: &[(&str, Window)] = &[("x0", Window::sym(5)), ("x1", Window::sym(5)), ("x2", Window::sym(5))];
    let kernel = DeltaKernel::new(
        DeltaNum::Pair { a: Atom::var("x1"), sign: -1, b: Atom::var("x0") },
        Atom::var("x2"),
        false,
        Exp::from_integer(0),
    );
    let factor = expand_binomial(
        &ring,
        "x2",
        exp(1, 2),
        &PowBase::Z,
        BinomForm::VarFirst { sign: -1 },
        exp(1, 2),
        Window::new(exp(-21, 2), exp(1, 2)),
    )
    .unwrap()
    .embedded(&[VarMeta::absent("x0"), VarMeta::absent("x1"), VarMeta::absent("x2")]);
    let p = DeltaProduct::new(kernel, factor);
    // materialize the substituted factor wide enough for the final compare
    let wide: &[(&str, Window)] = &[("x0", Window::sym(12)), ("x1", Window::sym(12)), ("x2", Window::sym(12))];
    let q = delta_substitute(&p, &DeltaSubstRule::PowerTransfer { alpha: exp(1, 2) }, &ring, wide).unwrap();
    assert_eq!(q.kernel.mu, exp(-1, 2));
    let small: &[(&str, Window)] = &[("x0", Window::sym(2)), ("x1", Window::sym(2)), ("x2", Window::sym(2))];
    let lhs = p.expand(&ring, windows).unwrap();
    let rhs = q.expand(&ring, windows).unwrap();
    assert!(
        compare_on_window(&lhs, &rhs, small).unwrap().is_none(),
        "coset transfer changed the distribution"
    );
}

#[test]
fn delta_substitution_requires_a_delta_pairing() {
    // fractional powers of the substituted combination are illegal without
    // the coset rule
    let ring = ring_z(2, 1);
    let kernel = DeltaKernel::new(DeltaNum::Single(Atom::var("x1")), Atom::var("x2"), false, Exp::from_integer(0));
    let vm1 = VarMeta {
        name: "x1".into(),
        cosets: twistrep_series::CosetSet::new(exp(1, 2), [exp(1, 2)]),
        sem: (twistrep_series::Bound::Fin(exp(1, 2)), twistrep_series::Bound::Fin(exp(1, 2))),
        known: (twistrep_series::Bound::NegInf, twistrep_series::Bound::PosInf),
    };
    let frac = Series::monomial(vec![vm1, VarMeta::absent("x2")], &[exp(1, 2), exp(0, 1)], Cyc::one());
    let p = DeltaProduct::new(kernel, frac);
    let windows: &[(&str, Window)] = &[("x1", Window::sym(4)), ("x2", Window::sym(4))];
    assert!(matches!(
        delta_substitute(&p, &DeltaSubstRule::SubstituteNum, &ring, windows),
        Err(SeriesError::IllegalDeltaSubstitution(_))
    ));
}
