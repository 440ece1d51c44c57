mod common;

use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;

use singular_forge::braid::{
    closure_permutation, extract_word, extract_word_from, lemniscate, square_parametrisation, BraidParam,
    Stretched,
};
use singular_forge::certify::arg_crit_scan;
use singular_forge::construct::{choose_k, construct, derive_scaling, expand_g, homogenize, PolyParams};

fn valid_lemniscate() -> impl Strategy<Value = (usize, u32, u32)> {
    (1usize..=5, 1u32..=5, 1u32..=3).prop_filter("strands must stay disjoint", |&(s, ell, r)| {
        let b = lemniscate(s, ell, r);
        b.strand_count() == 1 || b.min_separation(4096).0 > 1e-6
    })
}

fn word_permutation_matches(b: &BraidParam) {
    let ex = extract_word(b, 2048).unwrap();
    let perm = closure_permutation(b).unwrap();
    let positions = ex.word.position_permutation();
    let pos_of = |label: usize| ex.start_order.iter().position(|&l| l == label).unwrap();
    for (p, &label) in ex.start_order.iter().enumerate() {
        assert_eq!(positions[p], pos_of(perm[label]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extracted_word_induces_closure_permutation((s, ell, r) in valid_lemniscate(), squared in any::<bool>()) {
        let b = lemniscate(s, ell, r);
        let b = if squared { square_parametrisation(&b) } else { b };
        word_permutation_matches(&b);
    }

    #[test]
    fn word_invariant_under_axis_stretching(
        (s, ell, r) in valid_lemniscate(),
        sx in 0.01f64..100.0,
        sy in 0.01f64..100.0,
    ) {
        let b = lemniscate(s, ell, r);
        let base = extract_word(&b, 2048).unwrap();
        let stretched = Stretched { inner: &b, x_scale: sx, y_scale: sy };
        let w = extract_word_from(&stretched, 2048, base.origin).unwrap();
        prop_assert_eq!(w.word, base.word);
    }

    #[test]
    fn lemniscate_letter_count((s, ell, r) in valid_lemniscate()) {
        let w = extract_word(&lemniscate(s, ell, r), 2048).unwrap().word;
        prop_assert_eq!(w.len(), r as usize * (s - 1));
    }

    #[test]
    fn extractor_agrees_with_brute_force((s, ell, r) in valid_lemniscate()) {
        let b = lemniscate(s, ell, r);
        let ex = extract_word(&b, 2048).unwrap();
        let brute = common::brute_force_word(
            |t| common::lemniscate_strands(s, ell, r, false, t),
            s,
            1 << 15,
            ex.origin,
        );
        // The oracle labels strands j = 1..=s; compare normal forms, which do
        // not depend on labels.
        let brute = singular_forge::braid::BraidWord::from_signed(s, &brute).unwrap().foata_normal_form();
        prop_assert_eq!(ex.word, brute);
    }

    #[test]
    fn scaling_identity_on_lemniscates(
        (s, ell, r) in valid_lemniscate(),
        a in 0.1f64..2.0,
        bb in 0.1f64..2.0,
        squared in any::<bool>(),
        u in (-1.0f64..1.0, -1.0f64..1.0),
        rad in 0.05f64..1.0,
        t in 0.0f64..std::f64::consts::TAU,
    ) {
        let b = lemniscate(s, ell, r);
        let b = if squared { square_parametrisation(&b) } else { b };
        // Some unsquared inputs have no admissible radial exponents.
        let res = construct(&b, a, bb, None, None);
        prop_assume!(res.is_ok());
        let p = res.unwrap();
        let pp = *p.params().unwrap();
        let u = Complex64::new(u.0, u.1);
        let k = f64::from(pp.k);
        let lhs = p.eval_polar(u, rad, t);
        let rhs = common::product(
            &common::lemniscate_strands(s, ell, r, squared, t),
            rad.powf(pp.q1_f64()) * a,
            rad.powf(pp.q2_f64()) * bb,
            u / rad.powf(2.0 * k),
        ) * rad.powf(2.0 * s as f64 * k);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm(), "{lhs} vs {rhs}");
    }

    #[test]
    fn roots_follow_explicit_formula(
        (s, ell, r) in valid_lemniscate(),
        rad in 0.05f64..1.0,
        t in 0.0f64..std::f64::consts::TAU,
    ) {
        let b = square_parametrisation(&lemniscate(s, ell, r));
        let p = construct(&b, 1.0, 0.5, None, None).unwrap();
        let pp = *p.params().unwrap();
        let (fx, fy) = pp.radial_factors(rad);
        let explicit: Vec<Complex64> = common::lemniscate_strands(s, ell, r, true, t)
            .iter()
            .map(|z| Complex64::new(fx * z.re, fy * 0.5 * z.im))
            .collect();
        let roots = p.u_poly(Complex64::from_polar(rad, t)).unwrap().all_roots().unwrap();
        prop_assert!(common::multiset_distance_exact(&roots, &explicit) < 1e-8);
    }

    #[test]
    fn even_frequencies_never_give_odd_exponents((s, ell, r) in valid_lemniscate(), extra_k in 0u32..3) {
        let b = square_parametrisation(&lemniscate(s, ell, r));
        let g = expand_g(&b);
        prop_assert!(g.terms().keys().all(|t| t.m % 2 == 0));
        let zero = Rational64::from_integer(0);
        let p = homogenize(&g, PolyParams::new(0.7, 0.3, choose_k(&g) + extra_k, zero, zero)).unwrap();
        prop_assert_eq!(p.degree_u() as usize, b.strand_count());
        prop_assert_eq!(p.coeff(s as u32, 0, 0), Complex64::new(1.0, 0.0));
        let u = Complex64::new(0.3, -0.2);
        prop_assert!((p.eval(u, Complex64::new(0.0, 0.0)) - u.powu(s as u32)).norm() < 1e-14);
    }

    #[test]
    fn derived_scaling_homogenizes_when_residues_are_self_conjugate((s, ell, r) in valid_lemniscate()) {
        // Conjugate frequencies −f sit in the class of −x; the exponents are
        // guaranteed even only when x ≡ −x (and y ≡ −y) mod 2^{m+1}.
        let b = lemniscate(s, ell, r);
        if let Ok(sc) = derive_scaling(&b) {
            let modulus = 1i64 << (sc.m + 1);
            prop_assume!((2 * sc.x) % modulus == 0 && (2 * sc.y) % modulus == 0);
            let g = expand_g(&b);
            prop_assert!(homogenize(&g, PolyParams::new(1.0, 1.0, choose_k(&g), sc.q1, sc.q2)).is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn arg_crit_verdict_is_scale_invariant((s, ell, r) in valid_lemniscate(), bb in 0.1f64..1.0) {
        prop_assume!(s >= 2);
        let b = lemniscate(s, ell, r);
        let base = arg_crit_scan(&b, 1.0, bb, 512);
        for lambda in [0.5, 0.25] {
            let scaled = arg_crit_scan(&b, lambda, lambda * bb, 512);
            match (&base, &scaled) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.pass, y.pass);
                    prop_assert_eq!(x.worst_point.t, y.worst_point.t);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "verdicts differ in kind"),
            }
        }
    }
}
