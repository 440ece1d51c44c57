//! Shared numerical kernels: simultaneous polynomial root finding, scalar
//! bisection, finite-difference Jacobians and deterministic sample grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,
    #[error("root finding needs degree >= 1")]
    ConstantPolynomial,
    #[error("Aberth iteration did not converge; worst residual ratio {worst_ratio:e}")]
    NoConvergence { residuals: Vec<f64>, worst_ratio: f64 },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

const MAX_ABERTH_ITERATIONS: usize = 500;
const RESIDUAL_RTOL: f64 = 1e-9;

/// Dense univariate complex polynomial `c_0 + c_1 z + … + c_d z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    /// Trailing coefficients that are negligible against the largest one
    /// (`|c| <= 1e-30 · max|c_i|`) are trimmed so the leading coefficient is
    /// always significant.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self, NumericsError> {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Err(NumericsError::ZeroPolynomial);
        }
        while coeffs.last().is_some_and(|c| c.norm() <= 1e-30 * max) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// Monic polynomial `∏ (z - r_i)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Result<Self, NumericsError> {
        if self.coeffs.len() < 2 {
            return Err(NumericsError::ZeroPolynomial);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        Self::new(coeffs)
    }

    /// Residual bound used to accept a root: `1e-9 · Σ|c_i| · max(1,|z|)^d`.
    fn residual_bound(&self, z: Complex64) -> f64 {
        let l1: f64 = self.coeffs.iter().map(|c| c.norm()).sum();
        RESIDUAL_RTOL * l1 * z.norm().max(1.0).powi(self.degree() as i32)
    }

    /// All `d` roots with multiplicity, by Aberth–Ehrlich iteration from a
    /// fixed circle of starting points followed by one Newton polish step.
    ///
    /// The output order depends only on the input coefficients.
    pub fn all_roots(&self) -> Result<Vec<Complex64>, NumericsError> {
        let d = self.degree();
        if d == 0 {
            return Err(NumericsError::ConstantPolynomial);
        }
        let lead = self.coeffs[d];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|&c| c / lead).collect();
        let monic = ComplexPoly { coeffs: monic };
        if d == 1 {
            return Ok(vec![-monic.coeffs[0]]);
        }

        // Fujiwara bound on root moduli sets the radius of the start circle.
        let radius = (1..=d)
            .map(|k| {
                let c = monic.coeffs[d - k].norm();
                if k == d {
                    (c / 2.0).powf(1.0 / k as f64)
                } else {
                    c.powf(1.0 / k as f64)
                }
            })
            .fold(0.0, f64::max)
            * 2.0;
        let radius = if radius > 0.0 { radius } else { 1.0 };
        let mut roots: Vec<Complex64> = (0..d)
            .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / d as f64 + 0.4))
            .collect();

        let mut converged = vec![false; d];
        for _ in 0..MAX_ABERTH_ITERATIONS {
            let mut all_done = true;
            for k in 0..d {
                if converged[k] {
                    continue;
                }
                let z = roots[k];
                let (p, dp) = monic.eval_with_derivative(z);
                if p == Complex64::new(0.0, 0.0) {
                    converged[k] = true;
                    continue;
                }
                let repulsion: Complex64 = roots
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &w)| (z - w).inv())
                    .sum();
                let step = (dp / p - repulsion).inv();
                if !step.re.is_finite() || !step.im.is_finite() {
                    continue;
                }
                roots[k] = z - step;
                if step.norm() <= 4.0 * f64::EPSILON * roots[k].norm().max(radius * 1e-3) {
                    converged[k] = true;
                } else {
                    all_done = false;
                }
            }
            if all_done {
                break;
            }
        }

        for z in roots.iter_mut() {
            let (p, dp) = monic.eval_with_derivative(*z);
            if dp != Complex64::new(0.0, 0.0) {
                let candidate = *z - p / dp;
                if monic.eval(candidate).norm() < p.norm() {
                    *z = candidate;
                }
            }
        }

        let residuals: Vec<f64> = roots.iter().map(|&z| self.eval(z).norm()).collect();
        let worst_ratio = roots
            .iter()
            .zip(&residuals)
            .map(|(&z, &r)| r / self.residual_bound(z))
            .fold(0.0, f64::max);
        if worst_ratio < 1.0 {
            Ok(roots)
        } else {
            Err(NumericsError::NoConvergence { residuals, worst_ratio })
        }
    }
}

/// Bisection on `[lo, hi]` to absolute tolerance `1e-12`, at most 200 steps.
pub fn bisect<F>(f: F, lo: f64, hi: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Central-difference Jacobian of a map `ℝ⁴ → ℝ²`.
pub fn fd_jacobian<F>(f: F, x: [f64; 4], h: f64) -> [[f64; 4]; 2]
where
    F: Fn([f64; 4]) -> [f64; 2],
{
    assert!((1e-8..=1e-4).contains(&h), "step {h} outside [1e-8, 1e-4]");
    let mut jac = [[0.0; 4]; 2];
    for k in 0..4 {
        let mut plus = x;
        let mut minus = x;
        plus[k] += h;
        minus[k] -= h;
        let (fp, fm) = (f(plus), f(minus));
        for row in 0..2 {
            jac[row][k] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    jac
}

/// `n` equally spaced angles `2πk/n`, `k = 0..n`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// `n` radii `k/n`, `k = 1..=n`; the origin itself is excluded.
pub fn radius_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / n as f64).collect()
}

/// Radical inverse of `index` in `base`: the van der Corput / Halton
/// coordinate in `[0, 1)`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Deterministic quasi-uniform point on the three-sphere of radius `rho`,
/// returned as `(u, v) ∈ ℂ²`.
pub fn sphere_point(index: u64, rho: f64) -> (Complex64, Complex64) {
    let w1 = halton(index + 1, 2);
    let w2 = halton(index + 1, 3);
    let w3 = halton(index + 1, 5);
    // sin²η uniform on [0,1] gives the uniform measure in Hopf coordinates.
    let (sin_eta, cos_eta) = (w1.sqrt(), (1.0 - w1).sqrt());
    (
        Complex64::from_polar(rho * cos_eta, 2.0 * PI * w2),
        Complex64::from_polar(rho * sin_eta, 2.0 * PI * w3),
    )
}

/// Smallest singular value of a real 2×4 matrix, via the Cauchy–Binet form
/// of `det(J Jᵀ)`.
pub fn smallest_singular_value(j: &[[f64; 4]; 2]) -> f64 {
    let a: f64 = j[0].iter().map(|x| x * x).sum();
    let c: f64 = j[1].iter().map(|x| x * x).sum();
    let mut det = 0.0;
    for k in 0..4 {
        for l in (k + 1)..4 {
            let minor = j[0][k] * j[1][l] - j[0][l] * j[1][k];
            det += minor * minor;
        }
    }
    let b: f64 = (0..4).map(|k| j[0][k] * j[1][k]).sum();
    let half_trace = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let largest = half_trace + disc;
    if largest == 0.0 {
        0.0
    } else {
        (det / largest).max(0.0).sqrt()
    }
}

/// Multiset distance: the largest distance under a greedy nearest matching.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lengths match");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_simple_polynomials() {
        let p = ComplexPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let roots = p.all_roots().unwrap();
        assert!(multiset_distance(&roots, &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-12);

        let p = ComplexPoly::new(vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let roots = p.all_roots().unwrap();
        let expected: Vec<Complex64> =
            (0..3).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)).collect();
        assert!(multiset_distance(&roots, &expected) < 1e-12);
    }

    #[test]
    fn repeated_root_meets_residual_bound() {
        let p = ComplexPoly::from_roots(&[c(0.0, 0.0); 4]);
        let roots = p.all_roots().unwrap();
        assert!(roots.iter().all(|z| z.norm() < 1e-3));
    }

    #[test]
    fn constant_polynomial_rejected() {
        let p = ComplexPoly::new(vec![c(2.0, 0.0)]).unwrap();
        assert_eq!(p.all_roots(), Err(NumericsError::ConstantPolynomial));
        assert_eq!(ComplexPoly::new(vec![c(0.0, 0.0)]), Err(NumericsError::ZeroPolynomial));
    }

    #[test]
    fn deterministic_output() {
        let p = ComplexPoly::from_roots(&[c(0.3, 0.1), c(-0.7, 0.2), c(0.1, -0.9), c(1.2, 0.4)]);
        assert_eq!(p.all_roots().unwrap(), p.all_roots().unwrap());
    }

    #[test]
    fn bisect_examples() {
        let r = bisect(|x| x * x - 0.5, 0.0, 1.0).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
        let r = bisect(|x| x - 1.0, 0.0, 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0), Err(NumericsError::NoSignChange { .. })));
    }

    #[test]
    fn fd_jacobian_examples() {
        let j = fd_jacobian(|x| [x[0], x[1]], [0.3, -0.2, 0.5, 0.9], 1e-6);
        let expected = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        for r in 0..2 {
            for k in 0..4 {
                assert!((j[r][k] - expected[r][k]).abs() < 1e-9);
            }
        }
        let j = fd_jacobian(|_| [2.0, -1.0], [0.0; 4], 1e-5);
        assert_eq!(j, [[0.0; 4]; 2]);
    }

    #[test]
    fn singular_values() {
        let j = [[3.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]];
        assert!((smallest_singular_value(&j) - 2.0).abs() < 1e-12);
        let j = [[1.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0]];
        assert!(smallest_singular_value(&j) < 1e-12);
    }

    #[test]
    fn sphere_points_lie_on_sphere() {
        for i in 0..100 {
            let (u, v) = sphere_point(i, 0.7);
            assert!(((u.norm_sqr() + v.norm_sqr()).sqrt() - 0.7).abs() < 1e-14);
        }
    }

    fn separated_roots() -> impl Strategy<Value = Vec<Complex64>> {
        (1usize..=12, proptest::collection::vec((0.0f64..1.0, -0.3f64..0.3, -0.1f64..0.1), 12))
            .prop_map(|(d, jitter)| {
                // Points on jittered rings keep pairwise gaps bounded below.
                (0..d)
                    .map(|k| {
                        let (rad, ang, _) = jitter[k];
                        let ring = 0.5 + (k % 3) as f64 * 0.6 + 0.1 * rad;
                        Complex64::from_polar(ring, 2.0 * PI * k as f64 / d as f64 + ang / d as f64)
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn recovers_separated_roots(roots in separated_roots()) {
            let p = ComplexPoly::from_roots(&roots);
            let found = p.all_roots().unwrap();
            prop_assert!(multiset_distance(&found, &roots) < 1e-8);
        }
    }
}
