//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;

use singular_forge::braid::{
    extract_word, extract_word_from, lemniscate, square_parametrisation, BraidParam, BraidWord, Component,
};
use singular_forge::certify::{
    arg_crit_scan, d_regularity_check, isolation_check, radial_identity_check, sphere_link_check, tune_lambda,
    SphereCurves, TuneConfig,
};
use singular_forge::construct::{
    choose_k, construct, derive_scaling, expand_g, homogenize, ConstructError, Jacobian, MixedPoly, PolyParams,
};
use singular_forge::numerics::fd_jacobian;
use singular_forge::trigpoly::TrigPoly;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn q0() -> Rational64 {
    Rational64::from_integer(0)
}

fn l6a1() -> BraidParam {
    square_parametrisation(&lemniscate(4, 3, 1))
}

fn hopf() -> BraidParam {
    square_parametrisation(&lemniscate(2, 1, 1))
}

fn l6a1_poly() -> MixedPoly {
    construct(&l6a1(), 1.0, 0.5, None, None).expect("L6a1 construction")
}

fn hopf_poly() -> MixedPoly {
    construct(&hopf(), 1.0, 1.0, None, None).expect("Hopf construction")
}

fn ms(d: Duration) -> String {
    format!("{:.0} ms", d.as_secs_f64() * 1e3)
}

/// The printed expansion of the L6a1 braid polynomial, graded as
/// `(u-degree, a-degree, b-degree, frequency)`.
fn printed_g_l6a1() -> BTreeMap<(u32, u32, u32, i64), f64> {
    let mut m = BTreeMap::new();
    let mut put = |key, value| {
        *m.entry(key).or_insert(0.0) += value;
    };
    put((4, 0, 0, 0), 1.0);
    put((2, 0, 2, 0), 1.0);
    put((2, 2, 0, 0), -1.0);
    // −2iab sin 2t
    put((2, 1, 1, 2), -1.0);
    put((2, 1, 1, -2), 1.0);
    // (1/8)(a⁴ − 2a²b² + b⁴ …)
    put((0, 4, 0, 0), 1.0 / 8.0);
    put((0, 2, 2, 0), -2.0 / 8.0);
    put((0, 0, 4, 0), 1.0 / 8.0);
    for f in [2, -2] {
        // −a²(a² + 6b²) cos 2t
        put((0, 4, 0, f), -1.0 / 16.0);
        put((0, 2, 2, f), -6.0 / 16.0);
    }
    for f in [4, -4] {
        put((0, 2, 2, f), 2.0 / 16.0);
    }
    for f in [6, -6] {
        put((0, 0, 4, f), -1.0 / 16.0);
    }
    // 4ia³b sin 2t and −4iab³(sin 2t + sin 4t)
    put((0, 3, 1, 2), 0.25);
    put((0, 3, 1, -2), -0.25);
    put((0, 1, 3, 2), -0.25);
    put((0, 1, 3, -2), 0.25);
    put((0, 1, 3, 4), -0.25);
    put((0, 1, 3, -4), 0.25);
    m
}

/// The printed homogenized L6a1 polynomial (k = 1, q₁ = q₂ = 0) at numeric
/// `a`, `b`, keyed by `(i, α, β)`.
fn printed_p_l6a1(a: f64, b: f64) -> BTreeMap<(u32, u32, u32), f64> {
    let mut m = BTreeMap::new();
    let mut put = |key, value: f64| {
        *m.entry(key).or_insert(0.0) += value;
    };
    let (a2, b2) = (a * a, b * b);
    put((4, 0, 0), 1.0);
    put((2, 2, 2), b2 - a2);
    put((2, 3, 1), -a * b);
    put((2, 1, 3), a * b);
    put((0, 4, 4), (2.0 * a2 * a2 - 4.0 * a2 * b2 + 2.0 * b2 * b2) / 16.0);
    put((0, 5, 3), (-a2 * a2 - 6.0 * a2 * b2) / 16.0);
    put((0, 3, 5), (-a2 * a2 - 6.0 * a2 * b2) / 16.0);
    put((0, 6, 2), 2.0 * a2 * b2 / 16.0);
    put((0, 2, 6), 2.0 * a2 * b2 / 16.0);
    put((0, 7, 1), -b2 * b2 / 16.0);
    put((0, 1, 7), -b2 * b2 / 16.0);
    put((0, 5, 3), 4.0 * a2 * a * b / 16.0);
    put((0, 3, 5), -4.0 * a2 * a * b / 16.0);
    put((0, 5, 3), -4.0 * a * b2 * b / 16.0);
    put((0, 3, 5), 4.0 * a * b2 * b / 16.0);
    put((0, 6, 2), -4.0 * a * b2 * b / 16.0);
    put((0, 2, 6), 4.0 * a * b2 * b / 16.0);
    m.retain(|_, v| *v != 0.0);
    m
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = expand_g(&l6a1());
    let elapsed = start.elapsed();
    let printed = printed_g_l6a1();
    let mut keys: Vec<_> = printed.keys().copied().collect();
    keys.extend(g.terms().keys().map(|t| (t.i, t.j, t.n, t.m)));
    keys.sort();
    keys.dedup();
    let mut mismatches = Vec::new();
    for (i, j, n, m) in keys {
        let want = Complex64::new(printed.get(&(i, j, n, m)).copied().unwrap_or(0.0), 0.0);
        let got = g.coeff(i, j, n, m);
        if got != want {
            mismatches.push(format!("u^{i} a^{j} b^{n} e^({m}it): printed {} computed {}", want.re, got));
        }
    }
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(1);
    let detail = if mismatches.is_empty() {
        format!("{} terms exact, {}", printed.len(), ms(elapsed))
    } else {
        format!("{} mismatch(es): {}; {}", mismatches.len(), mismatches.join("; "), ms(elapsed))
    };
    outcome(ok, detail)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = expand_g(&l6a1());
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (a, b) in [(1.0, 1.0), (1.5, 0.75), (0.5, 2.0)] {
        let p = homogenize(&g, PolyParams::new(a, b, 1, q0(), q0())).expect("homogenize");
        let printed = printed_p_l6a1(a, b);
        let mut keys: Vec<_> = printed.keys().copied().collect();
        keys.extend(p.terms().keys().map(|e| (e.i, e.alpha, e.beta)));
        keys.sort();
        keys.dedup();
        for (i, al, be) in keys {
            compared += 1;
            let want = Complex64::new(printed.get(&(i, al, be)).copied().unwrap_or(0.0), 0.0);
            let got = p.coeff(i, al, be);
            if got != want {
                mismatches.push(format!("(a,b)=({a},{b}) u^{i} v^{al} vbar^{be}: printed {} computed {}", want.re, got));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(1);
    let detail = if mismatches.is_empty() {
        format!("{compared} coefficients exact, {}", ms(elapsed))
    } else {
        format!("{} mismatch(es): {}; {}", mismatches.len(), mismatches.join("; "), ms(elapsed))
    };
    outcome(ok, detail)
}

fn criterion_3() -> Outcome {
    let b = lemniscate(5, 3, 1);
    let start = Instant::now();
    let c1 = arg_crit_scan(&b, 1.0, 0.25, 2048).expect("scan 2048");
    let c2 = arg_crit_scan(&b, 1.0, 0.25, 4096).expect("scan 4096");
    let elapsed = start.elapsed();
    let cell = 2.0 * std::f64::consts::PI / 2048.0;
    let (t1, t2) = (c1.worst_point.t.unwrap(), c2.worst_point.t.unwrap());
    // Minimizers are compared on the circle.
    let dt = (t1 - t2).rem_euclid(2.0 * std::f64::consts::PI);
    let dt = dt.min(2.0 * std::f64::consts::PI - dt);
    let ok = c1.pass && c2.pass && c1.margin > 0.0 && dt <= cell && elapsed < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "margin {:.6} (2048) / {:.6} (4096), minimizer shift {:.2e} (cell {:.2e}), {}",
            c1.margin,
            c2.margin,
            dt,
            cell,
            ms(elapsed)
        ),
    )
}

fn scaling_identity_error(p: &MixedPoly, strands: impl Fn(f64) -> Vec<Complex64>, seed: u64) -> f64 {
    let pp = p.params().unwrap();
    let s = p.strands() as i32;
    let (a, b) = pp.effective_ab();
    let k = f64::from(pp.k);
    let mut rng = common::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let u = common::random_disk(&mut rng, 1.0);
        let r: f64 = 1.0 - rng.random::<f64>();
        let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let lhs = p.eval_polar(u, r, t);
        let rhs = common::product(&strands(t), r.powf(pp.q1_f64()) * a, r.powf(pp.q2_f64()) * b, u / r.powf(2.0 * k))
            * r.powi(2 * s * pp.k as i32);
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    worst
}

fn criterion_4() -> Outcome {
    let e1 = scaling_identity_error(&l6a1_poly(), |t| common::lemniscate_strands(4, 3, 1, true, t), 4);
    let e2 = scaling_identity_error(&hopf_poly(), |t| common::lemniscate_strands(2, 1, 1, true, t), 5);
    outcome(e1 < 1e-9 && e2 < 1e-9, format!("max rel error L6a1 {e1:.2e}, Hopf {e2:.2e}"))
}

fn criterion_5() -> Outcome {
    let cert = radial_identity_check(&hopf_poly(), 16, 256, 1e-5).expect("radial identity");
    let err = cert.details["max_relative_error"];
    let n = cert.details["critical_points"];
    outcome(cert.pass && n > 0.0, format!("max rel error {err:.2e} over {n} critical points"))
}

fn criterion_6() -> Outcome {
    let b = l6a1();
    let radii = [0.25, 0.5, 1.0];
    let start = Instant::now();
    let cfg = TuneConfig { radii: radii.to_vec(), t_samples: 2048, r_samples: 16, max_halvings: 20 };
    let params = PolyParams::new(1.0, 0.5, choose_k(&expand_g(&b)), q0(), q0());
    let tuned = match tune_lambda(&b, params, 0.5, &cfg) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("tuning failed: {e}")),
    };
    let raw = extract_word(&b, 2048).expect("raw word");
    let oracle = BraidWord::from_signed(
        4,
        &common::brute_force_word(|t| common::lemniscate_strands(4, 3, 1, true, t), 4, 1 << 16, raw.origin),
    )
    .unwrap()
    .foata_normal_form();
    let pp = *tuned.poly.params().unwrap();
    let mut same = raw.word == oracle;
    for rho in radii {
        let w = extract_word_from(&SphereCurves::new(&b, pp, rho), 2048, raw.origin).expect("sphere word");
        same &= w.word == raw.word;
    }
    let cert = sphere_link_check(&tuned.poly, &b, &radii, 2048).expect("sphere link");
    let elapsed = start.elapsed();
    outcome(
        same && cert.pass && elapsed < Duration::from_secs(30),
        format!("lambda {}, word {} at all radii, transversality {:.3e}, {}", tuned.lambda, raw.word, cert.margin, ms(elapsed)),
    )
}

fn criterion_7() -> Outcome {
    let b = hopf();
    let cfg = TuneConfig { radii: vec![0.25, 0.5, 1.0], t_samples: 1024, r_samples: 16, max_halvings: 20 };
    let params = PolyParams::new(1.0, 1.0, choose_k(&expand_g(&b)), q0(), q0());
    match tune_lambda(&b, params, 1.0, &cfg) {
        Ok(t) => {
            let cert = isolation_check(&t.poly, 32, 512).expect("isolation");
            outcome(cert.pass, format!("lambda {}, isolation margin {:.3e}", t.lambda, cert.margin))
        }
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn criterion_8() -> Outcome {
    let cert = d_regularity_check(&hopf_poly(), &[0.5, 1.0], 64, 10_000).expect("d-regularity");
    let n = cert.details["sample_points"];
    outcome(
        cert.pass && cert.margin > 1e-6 && n >= 1e4,
        format!("margin {:.3e} over {n} points", cert.margin),
    )
}

fn criterion_9() -> Outcome {
    let mut verdicts = Vec::new();

    let b = lemniscate(3, 2, 1);
    let g = expand_g(&b);
    let k = choose_k(&g);
    let stated = homogenize(&g, PolyParams::new(1.0, 1.0, k, 1.into(), 2.into()));
    let derived = derive_scaling(&b).and_then(|sc| homogenize(&g, PolyParams::new(1.0, 1.0, k, sc.q1, sc.q2)));
    verdicts.push(("lemniscate(3,2,1) with q=(1,2) and derived q", stated.is_ok() && derived.is_ok()));

    let squares = [
        square_parametrisation(&lemniscate(5, 3, 1)),
        square_parametrisation(&lemniscate(3, 2, 1)),
        l6a1(),
        hopf(),
    ];
    let squares_ok = squares.iter().all(|b| {
        let g = expand_g(b);
        homogenize(&g, PolyParams::new(1.0, 1.0, choose_k(&g), q0(), q0())).is_ok()
    });
    verdicts.push(("squared inputs with q=0", squares_ok));

    let bad = BraidParam::new(vec![Component::new(3, &TrigPoly::cos(1) + &TrigPoly::cos(2), TrigPoly::sin(1))])
        .expect("valid component");
    let g = expand_g(&bad);
    let k = choose_k(&g);
    let odd = [(0, 0), (1, 1), (0, 1), (1, 0)].iter().all(|&(x, y)| {
        matches!(
            homogenize(&g, PolyParams::new(1.0, 1.0, k, x.into(), y.into())),
            Err(ConstructError::OddExponent { .. })
        )
    });
    verdicts.push(("F = cos t + cos 2t raises OddExponent", odd));

    let passed = verdicts.iter().filter(|v| v.1).count();
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    outcome(passed == 3, format!("{passed}/3 verdicts{}", if failed.is_empty() { String::new() } else { format!("; wrong: {}", failed.join(", ")) }))
}

type StrandOracle = Box<dyn Fn(f64) -> Vec<Complex64>>;

fn criterion_10() -> Outcome {
    let cases: Vec<(&str, MixedPoly, StrandOracle)> = vec![
        ("L6a1", l6a1_poly(), Box::new(|t| common::lemniscate_strands(4, 3, 1, true, t))),
        ("Hopf", hopf_poly(), Box::new(|t| common::lemniscate_strands(2, 1, 1, true, t))),
        (
            "lemniscate(5,3,1)",
            construct(&lemniscate(5, 3, 1), 1.0, 0.25, None, None).expect("construct"),
            Box::new(|t| common::lemniscate_strands(5, 3, 1, false, t)),
        ),
    ];
    let mut rng = common::rng(10);
    let mut jac_worst: f64 = 0.0;
    let mut root_worst: f64 = 0.0;
    for (_, p, strands) in &cases {
        let jac = Jacobian::new(p);
        for _ in 0..20 {
            let u = common::random_disk(&mut rng, 1.0);
            let v = common::random_disk(&mut rng, 1.0);
            let analytic = jac.real_at(u, v);
            let fd = fd_jacobian(
                |x| {
                    let w = p.eval(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]));
                    [w.re, w.im]
                },
                [u.re, u.im, v.re, v.im],
                1e-6,
            );
            let scale = analytic.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            let diff = (0..2)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| (analytic[i][j] - fd[i][j]).abs())
                .fold(0.0, f64::max);
            jac_worst = jac_worst.max(diff / scale);
        }
        let pp = p.params().unwrap();
        let (a, b) = pp.effective_ab();
        for _ in 0..50 {
            let r: f64 = 1.0 - rng.random::<f64>();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let (fx, fy) = pp.radial_factors(r);
            let explicit: Vec<Complex64> =
                strands(t).iter().map(|z| Complex64::new(fx * a * z.re, fy * b * z.im)).collect();
            let roots = p.u_poly(Complex64::from_polar(r, t)).unwrap().all_roots().expect("roots");
            root_worst = root_worst.max(common::multiset_distance_exact(&roots, &explicit));
        }
    }
    outcome(
        jac_worst < 1e-5 && root_worst < 1e-8,
        format!("Jacobian rel error {jac_worst:.2e}, root distance {root_worst:.2e}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("exact expansion of the L6a1 braid polynomial", criterion_1),
        ("homogenization of the L6a1 polynomial", criterion_2),
        ("lemniscate (5,3,1) with b = 1/4 has no argument-critical points", criterion_3),
        ("structural scaling identity", criterion_4),
        ("radial derivative identity at critical points", criterion_5),
        ("link type invariant across radii", criterion_6),
        ("isolation certificate for the Hopf square", criterion_7),
        ("d-regularity evidence for the Hopf polynomial", criterion_8),
        ("parity law for the radial exponents", criterion_9),
        ("oracle cross-checks for Jacobians and roots", criterion_10),
    ];
    let mut failures = 0;
    for (n, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
        if !result.ok {
            failures += 1;
        }
        println!(
            "criterion {:>2}: {} - {} [{}; total {}]",
            n + 1,
            if result.ok { "PASS" } else { "FAIL" },
            title,
            result.detail,
            ms(start.elapsed())
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
