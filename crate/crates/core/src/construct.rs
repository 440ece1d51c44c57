//! From a braid parametrisation to the semiholomorphic polynomial
//! `p(u, v, v̄)`.
//!
//! The braid polynomial `g_{a,b}(u,t) = ∏_j (u − a·X_j(t) − i·b·Y_j(t))` is
//! expanded with `a` and `b` kept symbolic, graded by `(u-degree, a-degree,
//! b-degree, frequency)`. Each monomial `u^i a^j b^n e^{imt}` is then replaced
//! by `u^i a^j b^n v^m (v v̄)^{e/2}` (or `v̄^{-m}` for `m < 0`) with
//! `e = 2(s−i)k + q₁j + q₂n − |m|`, so that on `v = r e^{it}`
//!
//! ```text
//! p(u, r e^{it}) = r^{2sk} · g_{r^{q₁}a, r^{q₂}b}(u / r^{2k}, t).
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::BraidParam;
use crate::numerics::ComplexPoly;

/// Relative threshold below which expanded coefficients count as
/// cancellation noise.
const NOISE_RTOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error(
        "{coordinate}-frequencies fall into two residue classes mod {modulus}: \
         {first} (frequency {first_freq}) and {second} (frequency {second_freq})"
    )]
    MixedResidues {
        coordinate: char,
        modulus: i64,
        first: i64,
        first_freq: i64,
        second: i64,
        second_freq: i64,
    },
    #[error("components have different strand counts: {0:?}")]
    UnequalComponents(Vec<usize>),
    #[error("exponent e = {e} of term {term} is odd or not an integer")]
    OddExponent { e: Rational64, term: GradedTerm },
    #[error("exponent e = {e} of term {term} is negative; k is too small")]
    NegativeExponent { e: Rational64, term: GradedTerm },
    #[error("q exponents must be nonnegative, got q1 = {q1}, q2 = {q2}")]
    NegativeScaling { q1: Rational64, q2: Rational64 },
}

/// Grading of a braid-polynomial monomial `u^i a^j b^n e^{imt}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GradedTerm {
    pub i: u32,
    pub j: u32,
    pub n: u32,
    pub m: i64,
}

impl fmt::Display for GradedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u^{} a^{} b^{} e^{{{}it}}", self.i, self.j, self.n, self.m)
    }
}

/// `g_{a,b}` as a sum of graded monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedBraidPoly {
    strands: usize,
    terms: BTreeMap<GradedTerm, Complex64>,
}

impl GradedBraidPoly {
    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn terms(&self) -> &BTreeMap<GradedTerm, Complex64> {
        &self.terms
    }

    pub fn coeff(&self, i: u32, j: u32, n: u32, m: i64) -> Complex64 {
        self.terms
            .get(&GradedTerm { i, j, n, m })
            .copied()
            .unwrap_or_default()
    }

    /// `g_{a,b}(u, t)`.
    pub fn eval(&self, a: f64, b: f64, u: Complex64, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(g, &c)| {
                c * u.powu(g.i)
                    * a.powi(g.j as i32)
                    * b.powi(g.n as i32)
                    * Complex64::from_polar(1.0, g.m as f64 * t)
            })
            .sum()
    }

    /// Largest `i + |m|`: the total degree of `g` after `e^{±it} ↦ v, v̄`.
    pub fn total_degree(&self) -> u64 {
        self.terms
            .keys()
            .map(|g| u64::from(g.i) + g.m.unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

type Expansion = BTreeMap<(u32, u32, u32, i64), Complex64>;

fn multiply(p: &Expansion, q: &Expansion) -> Expansion {
    let mut out = Expansion::new();
    for (&(i1, j1, n1, m1), &c1) in p {
        for (&(i2, j2, n2, m2), &c2) in q {
            *out.entry((i1 + i2, j1 + j2, n1 + n2, m1 + m2)).or_default() += c1 * c2;
        }
    }
    out
}

fn drop_noise(p: &mut Expansion) {
    let max = p.values().map(|c| c.norm()).fold(0.0, f64::max);
    p.retain(|_, c| c.norm() > NOISE_RTOL * max);
}

/// `e^{2πik/n}`, exact when it is a quarter turn.
fn root_of_unity(k: i64, n: usize) -> Complex64 {
    let n = n as i64;
    let k = k.rem_euclid(n);
    if (4 * k) % n == 0 {
        match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
    }
}

/// Expands `∏_j (u − a X_j(t) − i b Y_j(t))` with `a`, `b` symbolic.
///
/// Within a component the strands are `z ↦ z·ω^j` rotations of one curve in
/// `z = e^{iτ}`, so only powers of `z` divisible by `s_C` survive the
/// product; those are the integer frequencies in `t`.
pub fn expand_g(b: &BraidParam) -> GradedBraidPoly {
    let mut total = Expansion::from([((0, 0, 0, 0), Complex64::new(1.0, 0.0))]);
    for comp in b.components() {
        let sc = comp.strands();
        let mut prod = Expansion::from([((0, 0, 0, 0), Complex64::new(1.0, 0.0))]);
        for j in 1..=sc {
            let mut factor = Expansion::from([((1, 0, 0, 0), Complex64::new(1.0, 0.0))]);
            for (freq, c) in comp.x().iter() {
                let w = root_of_unity(freq * j as i64, sc);
                *factor.entry((0, 1, 0, freq)).or_default() -= c * w;
            }
            for (freq, c) in comp.y().iter() {
                let w = root_of_unity(freq * j as i64, sc);
                *factor.entry((0, 0, 1, freq)).or_default() -= Complex64::i() * c * w;
            }
            prod = multiply(&prod, &factor);
        }
        drop_noise(&mut prod);
        let sc = sc as i64;
        let speed = i64::from(comp.speed());
        let in_t: Expansion = prod
            .into_iter()
            .filter(|((_, _, _, z), _)| z % sc == 0)
            .map(|((i, j, n, z), c)| ((i, j, n, z / sc * speed), c))
            .collect();
        total = multiply(&total, &in_t);
    }
    drop_noise(&mut total);
    let terms = total
        .into_iter()
        .map(|((i, j, n, m), c)| (GradedTerm { i, j, n, m }, c))
        .collect();
    GradedBraidPoly { strands: b.strand_count(), terms }
}

/// `g_{a,b}(u, t)` straight from the strand positions.
pub fn braid_poly_direct(b: &BraidParam, a: f64, bb: f64, u: Complex64, t: f64) -> Complex64 {
    b.positions(t)
        .into_iter()
        .map(|z| u - Complex64::new(a * z.re, bb * z.im))
        .product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// Residue classes of the effective frequencies mod `2^{m+1}`.
    Residue,
    /// Every component runs at even speed (a squared braid), so `q₁ = q₂ = 0`.
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingExponents {
    /// `2^m` is the largest power of two dividing `s_C`.
    pub m: u32,
    pub x: i64,
    pub y: i64,
    pub q1: Rational64,
    pub q2: Rational64,
    pub rule: ScalingRule,
}

/// Radial exponents `q₁ = x/2^m`, `q₂ = y/2^m` from the residue classes of the
/// x- and y-frequencies mod `2^{m+1}`.
///
/// A component of speed `c` contributes the effective frequencies `c·n` of its
/// coordinate polynomials. Only nonnegative frequencies are inspected (the
/// negative ones are their conjugates); a constant term counts as frequency
/// 0. Representatives are the smallest nonnegative ones.
pub fn derive_scaling(b: &BraidParam) -> Result<ScalingExponents, ConstructError> {
    let counts: Vec<usize> = b.components().iter().map(|c| c.strands()).collect();
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(ConstructError::UnequalComponents(counts));
    }
    let sc = counts[0];
    let m = sc.trailing_zeros();
    let modulus = 1i64 << (m + 1);
    let zero = Rational64::from_integer(0);

    if b.components().iter().all(|c| c.speed() % 2 == 0) {
        return Ok(ScalingExponents { m, x: 0, y: 0, q1: zero, q2: zero, rule: ScalingRule::Squared });
    }

    let residue = |coordinate: char| -> Result<i64, ConstructError> {
        let mut seen: Option<(i64, i64)> = None;
        for comp in b.components() {
            let poly = if coordinate == 'x' { comp.x() } else { comp.y() };
            for freq in poly.nonnegative_support() {
                let eff = freq * i64::from(comp.speed());
                let class = eff.rem_euclid(modulus);
                match seen {
                    None => seen = Some((class, eff)),
                    Some((first, first_freq)) if first != class => {
                        return Err(ConstructError::MixedResidues {
                            coordinate,
                            modulus,
                            first,
                            first_freq,
                            second: class,
                            second_freq: eff,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(seen.map_or(0, |(class, _)| class))
    };
    let x = residue('x')?;
    let y = residue('y')?;
    let den = 1i64 << m;
    Ok(ScalingExponents {
        m,
        x,
        y,
        q1: Rational64::new(x, den),
        q2: Rational64::new(y, den),
        rule: ScalingRule::Residue,
    })
}

/// Smallest `k ≥ 1` with `2sk ≥ deg f`.
pub fn choose_k(g: &GradedBraidPoly) -> u32 {
    let deg = g.total_degree();
    let two_s = 2 * g.strands as u64;
    deg.div_ceil(two_s).max(1) as u32
}

/// Numerical and radial parameters of a constructed polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyParams {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub k: u32,
    pub q1: Rational64,
    pub q2: Rational64,
}

impl PolyParams {
    pub fn new(a: f64, b: f64, k: u32, q1: Rational64, q2: Rational64) -> Self {
        Self { a, b, lambda: 1.0, k, q1, q2 }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// The stretch factors `λa`, `λb` that enter the coefficients.
    pub fn effective_ab(&self) -> (f64, f64) {
        (self.lambda * self.a, self.lambda * self.b)
    }

    pub fn q1_f64(&self) -> f64 {
        *self.q1.numer() as f64 / *self.q1.denom() as f64
    }

    pub fn q2_f64(&self) -> f64 {
        *self.q2.numer() as f64 / *self.q2.denom() as f64
    }

    /// `r^{2k+q₁}` and `r^{2k+q₂}`: the radial factors of the explicit roots.
    pub fn radial_factors(&self, r: f64) -> (f64, f64) {
        let two_k = 2.0 * f64::from(self.k);
        (r.powf(two_k + self.q1_f64()), r.powf(two_k + self.q2_f64()))
    }
}

/// Exponent triple `(i, α, β)` of a monomial `u^i v^α v̄^β`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MixedExp {
    pub i: u32,
    pub alpha: u32,
    pub beta: u32,
}

/// A polynomial in `u, v, v̄` with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedPoly {
    strands: usize,
    terms: BTreeMap<MixedExp, Complex64>,
    params: Option<PolyParams>,
}

/// The homogenized polynomial `p_{λa,λb,k}` with radial exponents `q₁, q₂`.
pub fn homogenize(g: &GradedBraidPoly, params: PolyParams) -> Result<MixedPoly, ConstructError> {
    let zero = Rational64::from_integer(0);
    if params.q1 < zero || params.q2 < zero {
        return Err(ConstructError::NegativeScaling { q1: params.q1, q2: params.q2 });
    }
    let (a, b) = params.effective_ab();
    let s = g.strands as i64;
    let k = i64::from(params.k);
    let mut terms = BTreeMap::new();
    for (&term, &c) in &g.terms {
        let e = Rational64::from_integer(2 * (s - i64::from(term.i)) * k)
            + params.q1 * i64::from(term.j)
            + params.q2 * i64::from(term.n)
            - Rational64::from_integer(term.m.abs());
        if !e.is_integer() || e.to_integer() % 2 != 0 {
            return Err(ConstructError::OddExponent { e, term });
        }
        if e < zero {
            return Err(ConstructError::NegativeExponent { e, term });
        }
        let half = (e.to_integer() / 2) as u32;
        let exp = MixedExp {
            i: term.i,
            alpha: term.m.max(0) as u32 + half,
            beta: (-term.m).max(0) as u32 + half,
        };
        let coeff = c * a.powi(term.j as i32) * b.powi(term.n as i32);
        *terms.entry(exp).or_default() += coeff;
    }
    terms.retain(|_, c: &mut Complex64| *c != Complex64::new(0.0, 0.0));
    Ok(MixedPoly { strands: g.strands, terms, params: Some(params) })
}

/// Derived radial exponents (or the explicit ones), `k` from [`choose_k`]
/// unless given, then [`homogenize`].
pub fn construct(
    b: &BraidParam,
    a: f64,
    bb: f64,
    k: Option<u32>,
    q: Option<(Rational64, Rational64)>,
) -> Result<MixedPoly, ConstructError> {
    let g = expand_g(b);
    let (q1, q2) = match q {
        Some(q) => q,
        None => {
            let sc = derive_scaling(b)?;
            (sc.q1, sc.q2)
        }
    };
    let k = k.unwrap_or_else(|| choose_k(&g));
    homogenize(&g, PolyParams::new(a, bb, k, q1, q2))
}

impl MixedPoly {
    pub fn from_terms<I>(strands: usize, terms: I, params: Option<PolyParams>) -> Self
    where
        I: IntoIterator<Item = (MixedExp, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c: &mut Complex64| *c != Complex64::new(0.0, 0.0));
        Self { strands, terms: map, params }
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn terms(&self) -> &BTreeMap<MixedExp, Complex64> {
        &self.terms
    }

    pub fn params(&self) -> Option<&PolyParams> {
        self.params.as_ref()
    }

    pub fn coeff(&self, i: u32, alpha: u32, beta: u32) -> Complex64 {
        self.terms
            .get(&MixedExp { i, alpha, beta })
            .copied()
            .unwrap_or_default()
    }

    pub fn degree_u(&self) -> u32 {
        self.terms.keys().map(|e| e.i).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        let vb = v.conj();
        self.terms
            .iter()
            .map(|(e, &c)| c * u.powu(e.i) * v.powu(e.alpha) * vb.powu(e.beta))
            .sum()
    }

    /// `p` at `v = r e^{it}`.
    pub fn eval_polar(&self, u: Complex64, r: f64, t: f64) -> Complex64 {
        self.eval(u, Complex64::from_polar(r, t))
    }

    /// Coefficients of `u ↦ p(u, v)`, constant term first.
    pub fn u_coefficients(&self, v: Complex64) -> Vec<Complex64> {
        let vb = v.conj();
        let mut out = vec![Complex64::new(0.0, 0.0); self.degree_u() as usize + 1];
        for (e, &c) in &self.terms {
            out[e.i as usize] += c * v.powu(e.alpha) * vb.powu(e.beta);
        }
        out
    }

    /// `u ↦ p(u, v)` as a dense polynomial; `None` if it vanishes identically.
    pub fn u_poly(&self, v: Complex64) -> Option<ComplexPoly> {
        ComplexPoly::new(self.u_coefficients(v)).ok()
    }

    fn map_terms<F>(&self, f: F) -> MixedPoly
    where
        F: Fn(MixedExp) -> Option<(MixedExp, f64)>,
    {
        let terms = self
            .terms
            .iter()
            .filter_map(|(&e, &c)| f(e).map(|(e2, w)| (e2, c * w)));
        MixedPoly::from_terms(self.strands, terms, self.params)
    }

    /// Formal partial derivatives `(∂/∂u, ∂/∂v, ∂/∂v̄)`.
    pub fn wirtinger(&self) -> (MixedPoly, MixedPoly, MixedPoly) {
        let du = self.map_terms(|e| (e.i > 0).then(|| (MixedExp { i: e.i - 1, ..e }, f64::from(e.i))));
        let dv = self.map_terms(|e| {
            (e.alpha > 0).then(|| (MixedExp { alpha: e.alpha - 1, ..e }, f64::from(e.alpha)))
        });
        let dvb = self.map_terms(|e| {
            (e.beta > 0).then(|| (MixedExp { beta: e.beta - 1, ..e }, f64::from(e.beta)))
        });
        (du, dv, dvb)
    }

    /// Adds `c·u^i v^α v̄^β`.
    pub fn plus_term(&self, exp: MixedExp, c: Complex64) -> MixedPoly {
        let terms = self.terms.iter().map(|(&e, &c)| (e, c)).chain([(exp, c)]);
        MixedPoly::from_terms(self.strands, terms, self.params)
    }
}

/// Cached partial derivatives of a [`MixedPoly`] for repeated Jacobian
/// evaluations.
#[derive(Clone, Debug)]
pub struct Jacobian {
    du: MixedPoly,
    dv: MixedPoly,
    dvb: MixedPoly,
}

impl Jacobian {
    pub fn new(p: &MixedPoly) -> Self {
        let (du, dv, dvb) = p.wirtinger();
        Self { du, dv, dvb }
    }

    /// `(p_u, p_v, p_v̄)` at a point.
    pub fn wirtinger_at(&self, u: Complex64, v: Complex64) -> (Complex64, Complex64, Complex64) {
        (self.du.eval(u, v), self.dv.eval(u, v), self.dvb.eval(u, v))
    }

    /// Real 2×4 Jacobian of `(Re p, Im p)` in the coordinates
    /// `(Re u, Im u, Re v, Im v)`; `p` is holomorphic in `u`.
    pub fn real_at(&self, u: Complex64, v: Complex64) -> [[f64; 4]; 2] {
        let (pu, pv, pvb) = self.wirtinger_at(u, v);
        let cols = [pu, Complex64::i() * pu, pv + pvb, Complex64::i() * (pv - pvb)];
        [cols.map(|c| c.re), cols.map(|c| c.im)]
    }
}
