//! Independent oracles: strand positions and braid polynomials written out
//! from the closed-form parametrisations, without going through the library's
//! Fourier machinery.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Strands of the `(s, ℓ, r)`-lemniscate braid, optionally squared
/// (`t ↦ 2t`), listed for `j = 1..=s`.
pub fn lemniscate_strands(s: usize, ell: u32, r: u32, squared: bool, t: f64) -> Vec<Complex64> {
    let speed = if squared { 2.0 * f64::from(r) } else { f64::from(r) };
    (1..=s)
        .map(|j| {
            let tau = (speed * t + 2.0 * PI * j as f64) / s as f64;
            Complex64::new(tau.cos(), (f64::from(ell) * tau).sin())
        })
        .collect()
}

/// `∏ (u − a X_j − i b Y_j)`.
pub fn product(strands: &[Complex64], a: f64, b: f64, u: Complex64) -> Complex64 {
    strands
        .iter()
        .map(|z| u - Complex64::new(a * z.re, b * z.im))
        .product()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_disk(rng: &mut StdRng, radius: f64) -> Complex64 {
    let rho = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(rho, 2.0 * PI * rng.random::<f64>())
}

/// Multiset distance by trying every matching; fine for `n ≤ 8`.
pub fn multiset_distance_exact(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    fn go(a: &[Complex64], b: &[Complex64], used: &mut Vec<bool>, worst: f64) -> f64 {
        let Some((&x, rest)) = a.split_first() else { return worst };
        let mut best = f64::INFINITY;
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(go(rest, b, used, worst.max((x - b[j]).norm())));
                used[j] = false;
            }
        }
        best
    }
    go(a, b, &mut vec![false; b.len()], 0.0)
}

/// Crossing oracle independent of the library extractor: a fine uniform
/// grid, letters for every adjacent swap, no bisection. Crossings inside one
/// grid cell are ordered by linear interpolation of the x-gap.
pub fn brute_force_word<F>(positions: F, strands: usize, samples: usize, origin: f64) -> Vec<i64>
where
    F: Fn(f64) -> Vec<Complex64>,
{
    let order_of = |pos: &[Complex64]| {
        let mut o: Vec<usize> = (0..pos.len()).collect();
        o.sort_by(|&i, &j| pos[i].re.total_cmp(&pos[j].re));
        o
    };
    let mut prev = positions(origin);
    let mut order = order_of(&prev);
    let mut word = Vec::new();
    for k in 1..=samples {
        let t0 = origin + 2.0 * PI * (k - 1) as f64 / samples as f64;
        let t1 = origin + 2.0 * PI * k as f64 / samples as f64;
        let cur = positions(t1);
        let mut events = Vec::new();
        for a in 0..strands {
            for b in (a + 1)..strands {
                let g0 = prev[a].re - prev[b].re;
                let g1 = cur[a].re - cur[b].re;
                if g0.signum() != g1.signum() {
                    let frac = g0 / (g0 - g1);
                    let tc = t0 + frac * (t1 - t0);
                    let ya = prev[a].im + frac * (cur[a].im - prev[a].im);
                    let yb = prev[b].im + frac * (cur[b].im - prev[b].im);
                    events.push((tc, a, b, ya, yb));
                }
            }
        }
        events.sort_by(|p, q| p.0.total_cmp(&q.0));
        for (_, a, b, ya, yb) in events {
            let pa = order.iter().position(|&s| s == a).unwrap();
            let pb = order.iter().position(|&s| s == b).unwrap();
            let left = pa.min(pb);
            let (left_strand_y, right_strand_y) = if pa < pb { (ya, yb) } else { (yb, ya) };
            let sign = if left_strand_y > right_strand_y { 1 } else { -1 };
            order.swap(left, left + 1);
            word.push(sign * (left as i64 + 1));
        }
        prev = cur;
    }
    word
}
