//! Grid-based numerical certificates for constructed polynomials.
//!
//! Every check here evaluates a quantity on a finite grid, refines once
//! around the minimizer and reports the smallest value found. A passing
//! certificate is numerical evidence at grid resolution, not a proof.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{extract_word, extract_word_from, BraidError, BraidParam, StrandCurves};
use crate::construct::{homogenize, expand_g, ConstructError, Jacobian, MixedPoly, PolyParams};
use crate::numerics::{
    angle_grid, bisect, radius_grid, smallest_singular_value, sphere_point, ComplexPoly, NumericsError,
};

pub const ARG_CRIT_THRESHOLD: f64 = 1e-6;
pub const ISOLATION_THRESHOLD: f64 = 1e-8;
pub const SPHERE_LINK_THRESHOLD: f64 = 1e-6;
pub const D_REGULAR_THRESHOLD: f64 = 1e-6;
pub const NOTE: &str = "numerical evidence at grid resolution, not a proof";

/// Refinement factor applied once around a grid minimizer.
const REFINE: usize = 4;
const TRANSVERSALITY_SAMPLES: usize = 512;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("a critical point of g(., t) lies on the zero set at t = {t} (distance {distance:e})")]
    ZeroAtCritical { t: f64, distance: f64 },
    #[error("polynomial carries no construction parameters")]
    MissingParams,
    #[error("polynomial strand count {poly} does not match the braid ({braid})")]
    StrandMismatch { poly: usize, braid: usize },
    #[error("radius {0} outside (0, 1]")]
    BadRadius(f64),
    #[error("the radial identity needs q1 = q2 = 0")]
    NotApplicable,
    #[error("could not draw a sample point away from the zero set on the sphere of radius {rho}")]
    TooCloseToZeroSet { rho: f64 },
    #[error("lambda0 must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("no lambda passed after {attempts} attempts")]
    Exhausted { attempts: usize, last: Box<Option<(Certificate, Certificate)>> },
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    ArgCritFree,
    Isolation,
    SphereLink,
    DRegular,
    RadialIdentity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_samples: usize,
    pub r_samples: usize,
    pub refine_depth: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<u32>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub lambda: Option<f64>,
    pub radii: Vec<f64>,
}

impl CertParams {
    fn from_poly(p: &PolyParams, radii: &[f64]) -> Self {
        Self {
            a: Some(p.a),
            b: Some(p.b),
            k: Some(p.k),
            q1: Some(p.q1_f64()),
            q2: Some(p.q2_f64()),
            lambda: Some(p.lambda),
            radii: radii.to_vec(),
        }
    }
}

/// Where the margin was attained: a parameter value `t`, a point `(u, v)`
/// of `ℂ²`, or both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v: Option<[f64; 2]>,
}

impl WorstPoint {
    fn at_t(t: f64) -> Self {
        Self { t: Some(t), ..Self::default() }
    }

    fn at_uv(u: Complex64, v: Complex64) -> Self {
        Self { t: None, u: Some([u.re, u.im]), v: Some([v.re, v.im]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub pass: bool,
    #[serde(with = "extended_float")]
    pub margin: f64,
    pub threshold: f64,
    pub grid: GridSpec,
    pub params: CertParams,
    pub worst_point: WorstPoint,
    pub note: String,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
}

impl Certificate {
    fn new(kind: CertificateKind, margin: f64, threshold: f64, grid: GridSpec, params: CertParams) -> Self {
        Self {
            kind,
            pass: margin > threshold,
            margin,
            threshold,
            grid,
            params,
            worst_point: WorstPoint::default(),
            note: NOTE.to_string(),
            details: BTreeMap::new(),
            messages: Vec::new(),
        }
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}

/// `±inf` and `NaN` are written as strings so JSON output stays valid.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("SF_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("thread pool")
    })
}

/// Ordered parallel map; results come back in input order.
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    pool().install(|| items.par_iter().map(f).collect())
}

/// Index of the first minimum, so ties resolve the same way every run.
fn argmin<I: IntoIterator<Item = f64>>(values: I) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best
}

fn check_radii(radii: &[f64]) -> Result<(), CertifyError> {
    match radii.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        Some(&r) => Err(CertifyError::BadRadius(r)),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Argument-critical points of g.

#[derive(Clone, Debug)]
struct ArgSample {
    t: f64,
    crit: Vec<Complex64>,
    values: Vec<f64>,
}

/// Critical points of `g_{a,bb}(·, t)` and `Im(∂_t g / g)` at each of them.
fn arg_sample(b: &BraidParam, a: f64, bb: f64, t: f64) -> Result<ArgSample, CertifyError> {
    let stretch = |z: Complex64| Complex64::new(a * z.re, bb * z.im);
    let z: Vec<Complex64> = b.positions(t).into_iter().map(stretch).collect();
    let dz: Vec<Complex64> = b.velocities(t).into_iter().map(stretch).collect();
    let crit = ComplexPoly::from_roots(&z).derivative()?.all_roots()?;
    let scale = z.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let mut values = Vec::with_capacity(crit.len());
    for &c in &crit {
        let distance = z.iter().map(|&w| (c - w).norm()).fold(f64::INFINITY, f64::min);
        if distance < 1e-10 * scale || distance == 0.0 {
            return Err(CertifyError::ZeroAtCritical { t, distance });
        }
        // ∂_t g / g = Σ_j −z_j' / (u − z_j)
        let ratio: Complex64 = z.iter().zip(&dz).map(|(&w, &dw)| -dw / (c - w)).sum();
        values.push(ratio.im);
    }
    Ok(ArgSample { t, crit, values })
}

/// Nearest-neighbour pairing of critical points between two nearby
/// parameters; `None` if some point has no partner within half the minimal
/// gap, otherwise whether any paired value changes sign.
fn paired_sign_change(p: &ArgSample, q: &ArgSample) -> Option<bool> {
    let n = p.crit.len();
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.min((p.crit[i] - p.crit[j]).norm());
        }
    }
    let threshold = 0.5 * gap;
    let mut flipped = false;
    for (i, &c) in p.crit.iter().enumerate() {
        let (j, d) = q
            .crit
            .iter()
            .enumerate()
            .map(|(j, &w)| (j, (c - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if d > threshold {
            return None;
        }
        if p.values[i].signum() != q.values[j].signum() {
            flipped = true;
        }
    }
    Some(flipped)
}

fn min_abs(sample: &ArgSample) -> f64 {
    sample.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
}

/// Checks that `g_{a,bb}` has no argument-critical points: at the critical
/// points `u_k(t)` of `g(·, t)` the derivative `∂_t arg g = Im(∂_t g / g)`
/// must stay away from zero.
///
/// Between consecutive grid points the critical points are paired by nearest
/// neighbour; a sign change of the derivative along a pair means a zero in
/// between and sets the margin to 0. Pairing failures trigger one ×4
/// subdivision of that interval.
pub fn arg_crit_scan(b: &BraidParam, a: f64, bb: f64, t_samples: usize) -> Result<Certificate, CertifyError> {
    let params = CertParams { a: Some(a), b: Some(bb), ..CertParams::default() };
    let grid = GridSpec { t_samples, r_samples: 0, refine_depth: 1 };
    if b.strand_count() == 1 {
        let mut cert = Certificate::new(CertificateKind::ArgCritFree, f64::INFINITY, ARG_CRIT_THRESHOLD, grid, params);
        cert.messages.push("one strand: g(., t) has no critical points".into());
        return Ok(cert);
    }
    let ts = angle_grid(t_samples);
    let samples: Vec<ArgSample> = par_map(&ts, |&t| arg_sample(b, a, bb, t))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let (idx, mut margin) = argmin(samples.iter().map(min_abs)).expect("nonempty grid");
    let mut worst_t = samples[idx].t;
    let cell = 2.0 * PI / t_samples as f64;

    let mut sign_changes = 0usize;
    let mut pairing_failures = 0usize;
    for i in 0..samples.len() {
        let p = &samples[i];
        let q_owned;
        let q = if i + 1 < samples.len() {
            &samples[i + 1]
        } else {
            q_owned = arg_sample(b, a, bb, 2.0 * PI)?;
            &q_owned
        };
        let verdict = match paired_sign_change(p, q) {
            Some(v) => Some(v),
            None => {
                let sub: Vec<ArgSample> = (0..=REFINE)
                    .map(|j| arg_sample(b, a, bb, p.t + cell * j as f64 / REFINE as f64))
                    .collect::<Result<_, _>>()?;
                sub.windows(2)
                    .map(|w| paired_sign_change(&w[0], &w[1]))
                    .try_fold(false, |acc, v| v.map(|f| acc || f))
            }
        };
        match verdict {
            Some(true) => {
                sign_changes += 1;
                if margin > 0.0 {
                    margin = 0.0;
                    worst_t = p.t + 0.5 * cell;
                }
            }
            Some(false) => {}
            None => pairing_failures += 1,
        }
    }

    if margin > 0.0 {
        let centre = samples[idx].t;
        let fine: Vec<f64> = (-(REFINE as i64)..=REFINE as i64)
            .map(|j| centre + cell * j as f64 / REFINE as f64)
            .collect();
        let refined: Vec<ArgSample> = par_map(&fine, |&t| arg_sample(b, a, bb, t))
            .into_iter()
            .collect::<Result<_, _>>()?;
        let (j, m) = argmin(refined.iter().map(min_abs)).expect("nonempty");
        if m < margin {
            margin = m;
            worst_t = refined[j].t;
        }
    }

    let mut cert = Certificate::new(CertificateKind::ArgCritFree, margin, ARG_CRIT_THRESHOLD, grid, params)
        .detail("sign_changes", sign_changes as f64)
        .detail("pairing_failures", pairing_failures as f64);
    cert.worst_point = WorstPoint::at_t(worst_t);
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Isolation.

#[derive(Clone, Copy, Debug)]
struct IsoPoint {
    u: Complex64,
    v: Complex64,
    sigma_ratio: f64,
    polar_ratio: f64,
}

/// `σ_min(J) / max|J_ij|` and the normalized 2×2 polar determinant at every
/// root of `∂p/∂u(·, v)`.
fn iso_points(p: &MixedPoly, jac: &Jacobian, du: &MixedPoly, r: f64, t: f64) -> Result<Vec<IsoPoint>, CertifyError> {
    let v = Complex64::from_polar(r, t);
    let Some(pu) = du.u_poly(v) else {
        // ∂p/∂u ≡ 0 in u at this v: every u is critical; u = 0 stands in.
        return Ok(vec![iso_point(p, jac, Complex64::new(0.0, 0.0), v)]);
    };
    if pu.degree() == 0 {
        return Ok(Vec::new());
    }
    Ok(pu.all_roots()?.into_iter().map(|u| iso_point(p, jac, u, v)).collect())
}

fn iso_point(_p: &MixedPoly, jac: &Jacobian, u: Complex64, v: Complex64) -> IsoPoint {
    let j = jac.real_at(u, v);
    let largest = j.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    let sigma_ratio = if largest > 0.0 { smallest_singular_value(&j) / largest } else { 0.0 };

    let (_, pv, pvb) = jac.wirtinger_at(u, v);
    let e = if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) };
    let d_r = pv * e + pvb * e.conj();
    let d_theta = Complex64::i() * v.norm() * (pv * e - pvb * e.conj());
    let (alpha, beta, gamma, delta) = (d_r.re, d_theta.re, d_r.im, d_theta.im);
    let norm = d_r.norm() * d_theta.norm();
    let polar_ratio = if norm > 0.0 { (alpha * delta - beta * gamma).abs() / norm } else { 0.0 };
    IsoPoint { u, v, sigma_ratio, polar_ratio }
}

/// At every critical point of `p(·, v)` over the grid `v = r e^{it}`,
/// `r ∈ (0, 1]`, the real 2×4 Jacobian of `p` must have rank 2. The margin
/// is the smallest `σ_min / max|J_ij|`; the closed-form rank test on the
/// `(∂_r, ∂_θ)` block must also clear the threshold.
pub fn isolation_check(p: &MixedPoly, r_samples: usize, t_samples: usize) -> Result<Certificate, CertifyError> {
    let params = p.params().map(|q| CertParams::from_poly(q, &[])).unwrap_or_default();
    let grid = GridSpec { t_samples, r_samples, refine_depth: 1 };
    let jac = Jacobian::new(p);
    let (du, _, _) = p.wirtinger();

    let nodes: Vec<(f64, f64)> = radius_grid(r_samples)
        .into_iter()
        .flat_map(|r| angle_grid(t_samples).into_iter().map(move |t| (r, t)))
        .collect();
    let scan = |nodes: &[(f64, f64)]| -> Result<Vec<(f64, f64, Vec<IsoPoint>)>, CertifyError> {
        par_map(nodes, |&(r, t)| iso_points(p, &jac, &du, r, t).map(|pts| (r, t, pts)))
            .into_iter()
            .collect()
    };
    let coarse = scan(&nodes)?;
    let mut points: Vec<(f64, f64, IsoPoint)> = coarse
        .iter()
        .flat_map(|(r, t, pts)| pts.iter().map(move |&q| (*r, *t, q)))
        .collect();

    if points.is_empty() {
        let mut cert = Certificate::new(CertificateKind::Isolation, f64::INFINITY, ISOLATION_THRESHOLD, grid, params);
        cert.messages.push("p(., v) has no critical points on the grid".into());
        return Ok(cert);
    }

    let (w, _) = argmin(points.iter().map(|x| x.2.sigma_ratio)).expect("nonempty");
    let (r0, t0) = (points[w].0, points[w].1);
    let dr = 1.0 / r_samples as f64;
    let dt = 2.0 * PI / t_samples as f64;
    let steps = REFINE as i64;
    let fine: Vec<(f64, f64)> = (-steps..=steps)
        .flat_map(|i| (-steps..=steps).map(move |j| (i, j)))
        .map(|(i, j)| (r0 + dr * i as f64 / REFINE as f64, t0 + dt * j as f64 / REFINE as f64))
        .filter(|&(r, _)| r > 0.0 && r <= 1.0)
        .collect();
    for (r, t, pts) in scan(&fine)? {
        points.extend(pts.into_iter().map(|q| (r, t, q)));
    }

    let (w, margin) = argmin(points.iter().map(|x| x.2.sigma_ratio)).expect("nonempty");
    let (pw, polar_min) = argmin(points.iter().map(|x| x.2.polar_ratio)).expect("nonempty");
    let mut cert = Certificate::new(CertificateKind::Isolation, margin, ISOLATION_THRESHOLD, grid, params)
        .detail("polar_determinant_min", polar_min)
        .detail("critical_points", points.len() as f64);
    cert.worst_point = WorstPoint::at_uv(points[w].2.u, points[w].2.v);
    if polar_min <= ISOLATION_THRESHOLD {
        cert.pass = false;
        let q = points[pw].2;
        cert.messages.push(format!(
            "(d_r p, d_theta p) degenerate at u = {}, v = {}",
            q.u, q.v
        ));
    }
    Ok(cert)
}

/// Spot check of `∂p/∂r = 2sk·p/r` at the critical points of `p(·, re^{it})`
/// (valid when `q₁ = q₂ = 0`), with `∂p/∂r` from central differences at
/// fixed `u`. The margin is `tol − (largest relative error)`.
pub fn radial_identity_check(
    p: &MixedPoly,
    r_samples: usize,
    t_samples: usize,
    tol: f64,
) -> Result<Certificate, CertifyError> {
    let pp = p.params().ok_or(CertifyError::MissingParams)?;
    let zero = Rational64::from_integer(0);
    if pp.q1 != zero || pp.q2 != zero {
        return Err(CertifyError::NotApplicable);
    }
    let grid = GridSpec { t_samples, r_samples, refine_depth: 0 };
    let factor = 2.0 * p.strands() as f64 * f64::from(pp.k);
    let (du, _, _) = p.wirtinger();
    let nodes: Vec<(f64, f64)> = radius_grid(r_samples)
        .into_iter()
        .flat_map(|r| angle_grid(t_samples).into_iter().map(move |t| (r, t)))
        .collect();
    let errs: Vec<Vec<(f64, Complex64, Complex64)>> = par_map(&nodes, |&(r, t)| {
        let v = Complex64::from_polar(r, t);
        let Some(pu) = du.u_poly(v) else { return Ok(Vec::new()) };
        if pu.degree() == 0 {
            return Ok(Vec::new());
        }
        let roots = pu.all_roots()?;
        Ok(roots
            .into_iter()
            .map(|u| {
                let d_r = (p.eval_polar(u, r + FD_STEP, t) - p.eval_polar(u, r - FD_STEP, t)) / (2.0 * FD_STEP);
                let expected = p.eval_polar(u, r, t) * (factor / r);
                ((d_r - expected).norm() / (expected.norm() + 1e-30), u, v)
            })
            .collect())
    })
    .into_iter()
    .collect::<Result<_, CertifyError>>()?;
    let flat: Vec<(f64, Complex64, Complex64)> = errs.into_iter().flatten().collect();
    let params = CertParams::from_poly(pp, &[]);
    let Some((w, worst)) = argmin(flat.iter().map(|x| -x.0)) else {
        let mut cert = Certificate::new(CertificateKind::RadialIdentity, tol, 0.0, grid, params);
        cert.messages.push("no critical points on the grid".into());
        return Ok(cert);
    };
    let max_err = -worst;
    let mut cert = Certificate::new(CertificateKind::RadialIdentity, tol - max_err, 0.0, grid, params)
        .detail("max_relative_error", max_err)
        .detail("tolerance", tol)
        .detail("critical_points", flat.len() as f64);
    cert.worst_point = WorstPoint::at_uv(flat[w].1, flat[w].2);
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Link type on spheres.

/// The zero set of `p` on the sphere of radius `ρ`, one curve per strand:
/// strand `j` sits at `u_j(r, t) = r^{2k+q₁}λa·X_j(t) + i·r^{2k+q₂}λb·Y_j(t)`
/// with `r = r_j(t)` solving `|u_j|² + r² = ρ²`.
#[derive(Clone, Debug)]
pub struct SphereCurves<'a> {
    braid: &'a BraidParam,
    params: PolyParams,
    rho: f64,
}

/// A point of the zero set on a sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub strand: usize,
    pub t: f64,
    pub u: Complex64,
    pub r: f64,
}

impl<'a> SphereCurves<'a> {
    pub fn new(braid: &'a BraidParam, params: PolyParams, rho: f64) -> Self {
        Self { braid, params, rho }
    }

    fn root_at(&self, z: Complex64, r: f64) -> Complex64 {
        let (a, b) = self.params.effective_ab();
        let (fx, fy) = self.params.radial_factors(r);
        Complex64::new(fx * a * z.re, fy * b * z.im)
    }

    fn root_dr(&self, z: Complex64, r: f64) -> Complex64 {
        let (a, b) = self.params.effective_ab();
        let two_k = 2.0 * f64::from(self.params.k);
        let (e1, e2) = (two_k + self.params.q1_f64(), two_k + self.params.q2_f64());
        Complex64::new(e1 * r.powf(e1 - 1.0) * a * z.re, e2 * r.powf(e2 - 1.0) * b * z.im)
    }

    fn solve_r(&self, z: Complex64) -> f64 {
        let rho = self.rho;
        let f = |r: f64| self.root_at(z, r).norm_sqr() + r * r - rho * rho;
        // f(0) = −ρ² < 0 ≤ f(ρ); f is increasing in r.
        bisect(f, 0.0, rho).unwrap_or(rho)
    }

    /// All strands at parameter `t`.
    pub fn points(&self, t: f64) -> Vec<SpherePoint> {
        self.braid
            .positions(t)
            .into_iter()
            .enumerate()
            .map(|(strand, z)| {
                let r = self.solve_r(z);
                SpherePoint { strand, t, u: self.root_at(z, r), r }
            })
            .collect()
    }

    /// `|T·n| / |T|` for the tangent `T = (∂u_j/∂r, e^{it})` of the zero set
    /// and the outward sphere normal `n` at each strand point.
    fn transversality(&self, t: f64) -> Vec<(f64, SpherePoint)> {
        let e = Complex64::from_polar(1.0, t);
        self.braid
            .positions(t)
            .into_iter()
            .zip(self.points(t))
            .map(|(z, pt)| {
                let du = self.root_dr(z, pt.r);
                let v = e * pt.r;
                let dot = (du * pt.u.conj()).re + (e * v.conj()).re;
                let tangent = (du.norm_sqr() + 1.0).sqrt();
                (dot.abs() / (tangent * self.rho), pt)
            })
            .collect()
    }
}

impl StrandCurves for SphereCurves<'_> {
    fn strand_count(&self) -> usize {
        self.braid.strand_count()
    }

    fn positions(&self, t: f64) -> Vec<Complex64> {
        self.points(t).into_iter().map(|p| p.u).collect()
    }
}

/// `samples` points per strand of the zero set on the sphere of radius `rho`.
pub fn sample_sphere_curves(p: &MixedPoly, b: &BraidParam, rho: f64, samples: usize) -> Result<Vec<SpherePoint>, CertifyError> {
    let pp = *p.params().ok_or(CertifyError::MissingParams)?;
    check_radii(&[rho])?;
    let curves = SphereCurves::new(b, pp, rho);
    let ts = angle_grid(samples);
    let rows: Vec<Vec<SpherePoint>> = par_map(&ts, |&t| curves.points(t));
    let mut out: Vec<SpherePoint> = rows.into_iter().flatten().collect();
    out.sort_by_key(|pt| pt.strand);
    Ok(out)
}

/// Compares the braid word read off the zero set on each sphere with the
/// word of the raw parametrisation and checks that the zero set meets the
/// sphere transversally.
pub fn sphere_link_check(
    p: &MixedPoly,
    b: &BraidParam,
    radii: &[f64],
    t_samples: usize,
) -> Result<Certificate, CertifyError> {
    let pp = *p.params().ok_or(CertifyError::MissingParams)?;
    if p.strands() != b.strand_count() {
        return Err(CertifyError::StrandMismatch { poly: p.strands(), braid: b.strand_count() });
    }
    check_radii(radii)?;
    let grid = GridSpec { t_samples, r_samples: radii.len(), refine_depth: 0 };
    let params = CertParams::from_poly(&pp, radii);

    let raw = extract_word(b, t_samples)?;
    let mut margin = f64::INFINITY;
    let mut worst = WorstPoint::default();
    let mut residual_max: f64 = 0.0;
    let mut messages = Vec::new();
    let mut mismatches = 0usize;
    let mut details = BTreeMap::new();
    details.insert("raw_word_length".to_string(), raw.word.len() as f64);

    for &rho in radii {
        let curves = SphereCurves::new(b, pp, rho);
        let word = extract_word_from(&curves, t_samples, raw.origin)?;
        if word.word != raw.word {
            mismatches += 1;
            messages.push(format!("rho = {rho}: word {} differs from {}", word.word, raw.word));
        }
        let ts: Vec<f64> = (0..TRANSVERSALITY_SAMPLES)
            .map(|i| raw.origin + 2.0 * PI * i as f64 / TRANSVERSALITY_SAMPLES as f64)
            .collect();
        let rows = par_map(&ts, |&t| curves.transversality(t));
        for (value, pt) in rows.into_iter().flatten() {
            let v = Complex64::from_polar(pt.r, pt.t);
            let scale: f64 = p
                .u_coefficients(v)
                .iter()
                .enumerate()
                .map(|(i, c)| c.norm() * pt.u.norm().powi(i as i32))
                .sum();
            let res = p.eval(pt.u, v).norm() / scale.max(f64::MIN_POSITIVE);
            residual_max = residual_max.max(res);
            if value < margin {
                margin = value;
                worst = WorstPoint { t: Some(pt.t), ..WorstPoint::at_uv(pt.u, v) };
            }
        }
    }
    if mismatches > 0 {
        margin = 0.0;
    }
    details.insert("word_mismatches".to_string(), mismatches as f64);
    details.insert("max_relative_residual".to_string(), residual_max);
    let mut cert = Certificate::new(CertificateKind::SphereLink, margin, SPHERE_LINK_THRESHOLD, grid, params);
    cert.details.extend(details);
    cert.messages = messages;
    cert.messages.push(format!("word: {}", raw.word));
    cert.worst_point = worst;
    if residual_max > 1e-8 {
        cert.pass = false;
        cert.messages.push(format!("zero-set residual {residual_max:e} exceeds 1e-8"));
    }
    Ok(cert)
}

// ---------------------------------------------------------------------------
// d-regularity.

fn real4(u: Complex64, v: Complex64) -> [f64; 4] {
    [u.re, u.im, v.re, v.im]
}

fn dot4(x: &[f64; 4], y: &[f64; 4]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm4(x: &[f64; 4]) -> f64 {
    dot4(x, x).sqrt()
}

/// `∇ arg p` in `ℝ⁴`: `∂ arg p / ∂x_k = Im(∂p/∂x_k / p)`.
fn grad_arg(jac: &Jacobian, p: Complex64, u: Complex64, v: Complex64) -> [f64; 4] {
    let j = jac.real_at(u, v);
    let mut g = [0.0; 4];
    for k in 0..4 {
        g[k] = (Complex64::new(j[0][k], j[1][k]) / p).im;
    }
    g
}

fn local_scale(p: &MixedPoly, u: Complex64, v: Complex64) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    p.terms()
        .iter()
        .map(|(e, c)| c.norm() * nu.powi(e.i as i32) * nv.powi((e.alpha + e.beta) as i32))
        .sum()
}

struct CaseCheck {
    /// `|d arg p(w)| / (|∇ arg p|·|w|)`: zero when `w` is tangent to `X_ℓ`.
    pencil_residual: f64,
    /// `|w·n| / |w|`: how far `w` is from the sphere's tangent space.
    sphere_angle: f64,
}

fn case_check(p: &MixedPoly, jac: &Jacobian, u: Complex64, v: Complex64, w: [f64; 4]) -> Option<CaseCheck> {
    let value = p.eval(u, v);
    if value.norm() <= 1e-10 * local_scale(p, u, v) {
        return None;
    }
    let g = grad_arg(jac, value, u, v);
    let x = real4(u, v);
    let (gn, wn, xn) = (norm4(&g), norm4(&w), norm4(&x));
    Some(CaseCheck {
        pencil_residual: dot4(&g, &w).abs() / (gn * wn).max(f64::MIN_POSITIVE),
        sphere_angle: dot4(&w, &x).abs() / (wn * xn),
    })
}

/// The sphere of radius `ρ` must meet every member `X_ℓ = {arg p ≡ ℓ mod π}`
/// of the canonical pencil transversally away from `p = 0`.
///
/// At `point_samples` quasi-uniform points per sphere the margin is the
/// tangential share `|∇_S arg p| / |∇ arg p|`. The values of `arg p mod π`
/// are binned into `pencil_samples` bins, which must all be hit. The explicit
/// vectors tangent to `X_ℓ` (radial in `v` at `u = 0`, radial in `u` at
/// `v = 0`, and the weighted scaling direction elsewhere when `q₁ = q₂`)
/// must be tangent to the pencil and transverse to the sphere.
pub fn d_regularity_check(
    p: &MixedPoly,
    radii: &[f64],
    pencil_samples: usize,
    point_samples: usize,
) -> Result<Certificate, CertifyError> {
    check_radii(radii)?;
    let pp = p.params().copied();
    let params = pp.map(|q| CertParams::from_poly(&q, radii)).unwrap_or_else(|| CertParams {
        radii: radii.to_vec(),
        ..CertParams::default()
    });
    let grid = GridSpec { t_samples: point_samples, r_samples: radii.len(), refine_depth: 0 };
    let jac = Jacobian::new(p);
    let weight = pp.and_then(|q| {
        (q.q1 == q.q2).then(|| 2.0 * f64::from(q.k) + q.q1_f64())
    });

    let mut margin = f64::INFINITY;
    let mut worst = WorstPoint::default();
    let mut redraws = 0usize;
    let mut uncovered = 0usize;
    let mut case_residual: f64 = 0.0;
    let mut case_angle = f64::INFINITY;
    let mut general_case_points = 0usize;

    for &rho in radii {
        let idx: Vec<u64> = (0..point_samples as u64).collect();
        let drawn = par_map(&idx, |&i| {
            // Points too close to the zero set are replaced by later Halton
            // points from a disjoint index range.
            for attempt in 0..64u64 {
                let index = i + attempt * point_samples as u64;
                let (u, v) = sphere_point(index, rho);
                let value = p.eval(u, v);
                if value.norm() >= 1e-10 * local_scale(p, u, v) {
                    return Some((u, v, value, attempt));
                }
            }
            None
        });
        let mut bins = vec![false; pencil_samples.max(1)];
        for d in drawn {
            let (u, v, value, attempt) = d.ok_or(CertifyError::TooCloseToZeroSet { rho })?;
            redraws += attempt as usize;
            let g = grad_arg(&jac, value, u, v);
            let x = real4(u, v);
            let gn = norm4(&g);
            let radial = dot4(&g, &x) / rho;
            let tangential = (gn * gn - radial * radial).max(0.0).sqrt();
            let m = if gn > 0.0 { tangential / gn } else { 0.0 };
            if m < margin {
                margin = m;
                worst = WorstPoint::at_uv(u, v);
            }
            let phase = value.arg().rem_euclid(PI);
            let bin = ((phase / PI * bins.len() as f64) as usize).min(bins.len() - 1);
            bins[bin] = true;

            if let Some(w8) = weight {
                let r = v.norm();
                if r > 0.0 && u.norm() > 0.0 {
                    let dir = u * (w8 / r);
                    let e = v / r;
                    if let Some(c) = case_check(p, &jac, u, v, [dir.re, dir.im, e.re, e.im]) {
                        general_case_points += 1;
                        case_residual = case_residual.max(c.pencil_residual);
                        case_angle = case_angle.min(c.sphere_angle);
                    }
                }
            }
        }
        uncovered += bins.iter().filter(|&&b| !b).count();

        for t in angle_grid(pencil_samples.max(1)) {
            let e = Complex64::from_polar(1.0, t);
            let zero = Complex64::new(0.0, 0.0);
            let cases = [
                (zero, e * rho, [0.0, 0.0, e.re, e.im]),
                (e * rho, zero, [e.re, e.im, 0.0, 0.0]),
            ];
            for (u, v, w) in cases {
                if let Some(c) = case_check(p, &jac, u, v, w) {
                    case_residual = case_residual.max(c.pencil_residual);
                    case_angle = case_angle.min(c.sphere_angle);
                }
            }
        }
    }

    let mut cert = Certificate::new(CertificateKind::DRegular, margin, D_REGULAR_THRESHOLD, grid, params)
        .detail("pencil_bins", pencil_samples as f64)
        .detail("pencil_bins_uncovered", uncovered as f64)
        .detail("redraws", redraws as f64)
        .detail("case_vector_pencil_residual_max", case_residual)
        .detail("case_vector_sphere_angle_min", case_angle)
        .detail("general_case_points", general_case_points as f64)
        .detail("sample_points", (point_samples * radii.len()) as f64);
    cert.worst_point = worst;
    if uncovered > 0 {
        cert.pass = false;
        cert.messages.push(format!("{uncovered} pencil bins were not sampled"));
    }
    if case_residual > D_REGULAR_THRESHOLD || case_angle <= D_REGULAR_THRESHOLD {
        cert.pass = false;
        cert.messages.push("a case-split tangent vector failed its check".into());
    }
    if weight.is_none() {
        cert.messages.push("q1 != q2: the scaling-direction case was skipped".into());
    }
    Ok(cert)
}

// ---------------------------------------------------------------------------
// λ tuning.

#[derive(Clone, Debug, PartialEq)]
pub struct TuneConfig {
    pub radii: Vec<f64>,
    pub t_samples: usize,
    pub r_samples: usize,
    pub max_halvings: u32,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self { radii: vec![0.25, 0.5, 1.0], t_samples: 2048, r_samples: 16, max_halvings: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct TuneOutcome {
    pub lambda: f64,
    pub poly: MixedPoly,
    pub sphere_link: Certificate,
    pub isolation: Certificate,
    pub attempts: usize,
}

/// Halves `λ` from `λ₀` until both the sphere-link and the isolation
/// certificates pass for `p_{λa,λb,k}`.
pub fn tune_lambda(
    b: &BraidParam,
    params: PolyParams,
    lambda0: f64,
    cfg: &TuneConfig,
) -> Result<TuneOutcome, CertifyError> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(CertifyError::BadLambda(lambda0));
    }
    let g = expand_g(b);
    let mut last = None;
    let mut attempts = 0;
    for i in 0..=cfg.max_halvings {
        attempts += 1;
        let lambda = lambda0 / 2f64.powi(i as i32);
        let attempt = homogenize(&g, params.with_lambda(lambda)).map_err(CertifyError::from).and_then(|poly| {
            let sphere = sphere_link_check(&poly, b, &cfg.radii, cfg.t_samples)?;
            let iso = isolation_check(&poly, cfg.r_samples, cfg.t_samples.min(512))?;
            Ok((poly, sphere, iso))
        });
        match attempt {
            Ok((poly, sphere_link, isolation)) if sphere_link.pass && isolation.pass => {
                return Ok(TuneOutcome { lambda, poly, sphere_link, isolation, attempts });
            }
            Ok((_, s, iso)) => last = Some((s, iso)),
            Err(CertifyError::Construct(e)) => return Err(e.into()),
            Err(_) => {}
        }
    }
    Err(CertifyError::Exhausted { attempts, last: Box::new(last) })
}
