//! Finite Laurent series in `e^{it}` with complex coefficients.
//!
//! A [`TrigPoly`] stores only its nonzero coefficients, keyed by integer
//! frequency. Products are always reduced to a single frequency per term, so
//! `e^{it} e^{-it}` never survives as a pair.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Coefficients below this fraction of the largest modulus are dropped after
/// arithmetic.
pub const SPARSITY_RTOL: f64 = 1e-14;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::monomial(0, c)
    }

    /// `c · e^{i·freq·t}`.
    pub fn monomial(freq: i64, c: impl Into<Complex64>) -> Self {
        Self::from_coeffs([(freq, c.into())])
    }

    /// `cos(n t)` as `(e^{int} + e^{-int}) / 2`.
    pub fn cos(n: i64) -> Self {
        if n == 0 {
            return Self::constant(1.0);
        }
        Self::from_coeffs([(n, Complex64::new(0.5, 0.0)), (-n, Complex64::new(0.5, 0.0))])
    }

    /// `sin(n t)` as `(e^{int} - e^{-int}) / 2i`.
    pub fn sin(n: i64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        Self::from_coeffs([(n, Complex64::new(0.0, -0.5)), (-n, Complex64::new(0.0, 0.5))])
    }

    /// Builds a polynomial from `(frequency, coefficient)` pairs. Repeated
    /// frequencies are summed; exact zeros are not stored.
    pub fn from_coeffs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (freq, c) in pairs {
            *coeffs.entry(freq).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    /// Real trigonometric polynomial with the given nonnegative-frequency
    /// coefficients; negative frequencies are filled in by conjugation so
    /// that the result is real-valued. The frequency-0 coefficient must be
    /// real.
    pub fn real_from_nonnegative<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut all = Vec::new();
        for (freq, c) in pairs {
            assert!(freq >= 0, "frequency {freq} must be nonnegative");
            if freq == 0 {
                all.push((0, Complex64::new(c.re, 0.0)));
            } else {
                all.push((freq, c));
                all.push((-freq, c.conj()));
            }
        }
        Self::from_coeffs(all)
    }

    pub fn coeff(&self, freq: i64) -> Complex64 {
        self.coeffs.get(&freq).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&f, &c)| (f, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|j|` with a stored coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> u64 {
        self.coeffs.keys().map(|f| f.unsigned_abs()).max().unwrap_or(0)
    }

    /// Nonnegative frequencies with a nonzero coefficient, ascending.
    pub fn nonnegative_support(&self) -> Vec<i64> {
        self.coeffs.keys().copied().filter(|&f| f >= 0).collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    fn max_modulus(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when `c_{-j} = conj(c_j)` for every `j`, up to a relative
    /// tolerance against the coefficient scale.
    pub fn is_real_valued(&self) -> bool {
        let tol = 1e-14 * self.max_modulus().max(f64::MIN_POSITIVE);
        self.coeffs
            .iter()
            .all(|(&f, &c)| (self.coeff(-f).conj() - c).norm() <= tol)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&f, &c)| c * Complex64::from_polar(1.0, f as f64 * t))
            .sum()
    }

    /// Term-wise derivative in `t`: `c_j ↦ i·j·c_j`.
    pub fn d_dt(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .map(|(&f, &c)| (f, c * Complex64::new(0.0, f as f64))),
        )
    }

    /// Substitutes `t ↦ c·t`, i.e. maps frequency `j` to `c·j`.
    pub fn dilate(&self, c: u32) -> Self {
        assert!(c >= 1, "dilation factor must be positive");
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&f, &v)| (f * i64::from(c), v))
                .collect(),
        }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Self::from_coeffs(self.coeffs.iter().map(|(&f, &c)| (f, c * s)))
    }

    fn sparsify(mut coeffs: BTreeMap<i64, Complex64>, reference: f64) -> Self {
        let cut = SPARSITY_RTOL * reference;
        coeffs.retain(|_, c| c.norm() > cut && *c != Complex64::new(0.0, 0.0));
        Self { coeffs }
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;

    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let reference = self.max_modulus().max(rhs.max_modulus());
        let mut coeffs = self.coeffs.clone();
        for (&f, &c) in &rhs.coeffs {
            *coeffs.entry(f).or_default() += c;
        }
        TrigPoly::sparsify(coeffs, reference)
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;

    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        self + &(-rhs)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;

    fn neg(self) -> TrigPoly {
        TrigPoly {
            coeffs: self.coeffs.iter().map(|(&f, &c)| (f, -c)).collect(),
        }
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;

    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        let mut coeffs: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (&f, &c) in &self.coeffs {
            for (&g, &d) in &rhs.coeffs {
                *coeffs.entry(f + g).or_default() += c * d;
            }
        }
        let reference = coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        TrigPoly::sparsify(coeffs, reference)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for TrigPoly {
            type Output = TrigPoly;
            fn $method(self, rhs: TrigPoly) -> TrigPoly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(freq, c)| format!("({} + {}i)e^({}it)", c.re, c.im, freq))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
