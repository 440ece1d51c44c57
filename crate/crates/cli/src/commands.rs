use std::path::Path;

use singular_forge::braid::{extract_word, is_strictly_homogeneous, word_symmetry, BraidParam, BraidWord};
use singular_forge::certify::{
    arg_crit_scan, d_regularity_check, isolation_check, radial_identity_check, sample_sphere_curves,
    sphere_link_check, tune_lambda, CertParams, Certificate, CertificateKind, CertifyError, GridSpec, TuneConfig,
    WorstPoint, ARG_CRIT_THRESHOLD, D_REGULAR_THRESHOLD, ISOLATION_THRESHOLD, NOTE, SPHERE_LINK_THRESHOLD,
};
use singular_forge::construct::{choose_k, derive_scaling, expand_g, homogenize, MixedPoly, PolyParams};

use crate::config::{Job, ScanRange};
use crate::error::CliError;
use crate::output::{fmt_f64, poly_txt, read_poly, write_certificates, OutDir, PolyFile};

const RADIAL_TOL: f64 = 1e-5;
const DEFAULT_T_SAMPLES: usize = 2048;
const ISOLATION_T_SAMPLES: usize = 512;
const CURVE_SAMPLES: usize = 1024;

fn params_for(job: &Job, b: &BraidParam) -> Result<PolyParams, CliError> {
    let g = expand_g(b);
    let (q1, q2) = match job.q {
        Some(q) => q,
        None => {
            let sc = derive_scaling(b)?;
            (sc.q1, sc.q2)
        }
    };
    let k = job.k.unwrap_or_else(|| choose_k(&g));
    Ok(PolyParams::new(job.a, job.b, k, q1, q2).with_lambda(job.lambda))
}

fn build_poly(job: &Job, b: &BraidParam) -> Result<MixedPoly, CliError> {
    Ok(homogenize(&expand_g(b), params_for(job, b)?)?)
}

pub fn construct(job: &Job, out: &Path) -> Result<(), CliError> {
    let b = job.braid()?;
    let p = build_poly(job, &b)?;
    let out = OutDir::create(out)?;
    if job.wants_output("poly.json") {
        let path = out.write_json("poly.json", &PolyFile::from_poly(&p)?)?;
        println!("wrote {}", path.display());
    }
    if job.wants_output("poly.txt") {
        let path = out.write("poly.txt", &poly_txt(&p))?;
        println!("wrote {}", path.display());
    }
    let pp = p.params().expect("constructed polynomials carry parameters");
    println!(
        "p: {} terms, degree {} in u, k = {}, q1 = {}, q2 = {}, lambda = {}",
        p.terms().len(),
        p.degree_u(),
        pp.k,
        pp.q1,
        pp.q2,
        pp.lambda
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    ArgCrit,
    Isolation,
    SphereLink,
    DRegular,
    RadialIdentity,
}

impl Check {
    fn parse(s: &str) -> Result<Vec<Check>, CliError> {
        Ok(match s {
            "arg-crit" => vec![Check::ArgCrit],
            "isolation" => vec![Check::Isolation],
            "sphere-link" => vec![Check::SphereLink],
            "d-regular" => vec![Check::DRegular],
            "radial-identity" => vec![Check::RadialIdentity],
            "all" => vec![Check::ArgCrit, Check::Isolation, Check::SphereLink, Check::DRegular, Check::RadialIdentity],
            other => return Err(CliError::Invalid(format!("unknown check {other:?}"))),
        })
    }

    fn kind(self) -> CertificateKind {
        match self {
            Check::ArgCrit => CertificateKind::ArgCritFree,
            Check::Isolation => CertificateKind::Isolation,
            Check::SphereLink => CertificateKind::SphereLink,
            Check::DRegular => CertificateKind::DRegular,
            Check::RadialIdentity => CertificateKind::RadialIdentity,
        }
    }

    fn threshold(self) -> f64 {
        match self {
            Check::ArgCrit => ARG_CRIT_THRESHOLD,
            Check::Isolation => ISOLATION_THRESHOLD,
            Check::SphereLink => SPHERE_LINK_THRESHOLD,
            Check::DRegular => D_REGULAR_THRESHOLD,
            Check::RadialIdentity => 0.0,
        }
    }
}

/// A failed record for a check that could not produce a margin, such as an
/// argument-critical point sitting on the zero set.
fn failed_record(check: Check, err: &CertifyError, grid: GridSpec, radii: &[f64]) -> Certificate {
    let worst_point = match err {
        CertifyError::ZeroAtCritical { t, .. } => WorstPoint { t: Some(*t), ..WorstPoint::default() },
        _ => WorstPoint::default(),
    };
    Certificate {
        kind: check.kind(),
        pass: false,
        margin: 0.0,
        threshold: check.threshold(),
        grid,
        params: CertParams { radii: radii.to_vec(), ..CertParams::default() },
        worst_point,
        note: NOTE.to_string(),
        details: Default::default(),
        messages: vec![err.to_string()],
    }
}

/// Errors that mean "not certified" rather than "bad request".
fn is_verdict(err: &CertifyError) -> bool {
    matches!(
        err,
        CertifyError::ZeroAtCritical { .. }
            | CertifyError::TooCloseToZeroSet { .. }
            | CertifyError::Braid(_)
            | CertifyError::Numerics(_)
    )
}

fn usage_error(err: CertifyError) -> CliError {
    match err {
        CertifyError::Construct(e) => CliError::Construct(e),
        CertifyError::Braid(e) => CliError::Braid(e),
        CertifyError::Numerics(e) => CliError::Numerics(e),
        other => CliError::Invalid(other.to_string()),
    }
}

fn record(
    check: Check,
    res: Result<Certificate, CertifyError>,
    grid: GridSpec,
    radii: &[f64],
) -> Result<Certificate, CliError> {
    match res {
        Ok(c) => Ok(c),
        Err(e) if is_verdict(&e) => Ok(failed_record(check, &e, grid, radii)),
        Err(e) => Err(usage_error(e)),
    }
}

pub fn certify(job: &Job, poly_path: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let braid = match job.input {
        Some(_) => Some(job.braid()?),
        None => None,
    };
    if braid.is_none() && poly_path.is_none() {
        return Err(CliError::Invalid("certify needs an input braid or --poly".into()));
    }

    let explicit = !job.checks.is_empty();
    let mut checks = Vec::new();
    for name in &job.checks {
        for c in Check::parse(name)? {
            if !checks.contains(&c) {
                checks.push(c);
            }
        }
    }
    if !explicit {
        checks = vec![Check::ArgCrit, Check::Isolation, Check::SphereLink, Check::DRegular, Check::RadialIdentity];
    }
    let needs_braid = |c: &Check| matches!(c, Check::ArgCrit | Check::SphereLink);
    if braid.is_none() {
        if explicit {
            if let Some(c) = checks.iter().find(|c| needs_braid(c)) {
                return Err(CliError::Invalid(format!("{:?} needs an input braid", c.kind())));
            }
        }
        checks.retain(|c| !needs_braid(c));
    }

    let t_samples = job.t_samples.unwrap_or(DEFAULT_T_SAMPLES);
    let mut certs: Vec<Certificate> = Vec::new();
    let needs_poly = checks.iter().any(|c| *c != Check::ArgCrit) || job.lambda0.is_some();

    let mut poly = match poly_path {
        Some(path) => Some(read_poly(path)?),
        None => None,
    };
    if let (Some(l0), Some(b), None) = (job.lambda0, &braid, &poly) {
        let cfg = TuneConfig { radii: job.radii.clone(), t_samples, r_samples: job.r_samples, max_halvings: 20 };
        match tune_lambda(b, params_for(job, b)?, l0, &cfg) {
            Ok(outcome) => {
                println!("lambda tuned to {} after {} attempts", outcome.lambda, outcome.attempts);
                certs.push(outcome.sphere_link);
                certs.push(outcome.isolation);
                checks.retain(|c| !matches!(c, Check::SphereLink | Check::Isolation));
                poly = Some(outcome.poly);
            }
            Err(CertifyError::Exhausted { attempts, last }) => {
                println!("no lambda passed after {attempts} attempts");
                if let Some((sphere, iso)) = *last {
                    certs.push(sphere);
                    certs.push(iso);
                }
                checks.retain(|c| !matches!(c, Check::SphereLink | Check::Isolation));
            }
            Err(e) => return Err(usage_error(e)),
        }
    }
    if poly.is_none() && needs_poly {
        if let Some(b) = &braid {
            poly = Some(build_poly(job, b)?);
        }
    }

    let q_zero = poly
        .as_ref()
        .and_then(|p| p.params())
        .is_some_and(|pp| pp.q1 == 0.into() && pp.q2 == 0.into());
    if !explicit && !q_zero {
        checks.retain(|c| *c != Check::RadialIdentity);
    }

    for check in checks {
        let cert = match (check, &poly) {
            (Check::ArgCrit, _) => {
                let b = braid.as_ref().expect("filtered above");
                let grid = GridSpec { t_samples, r_samples: 0, refine_depth: 0 };
                record(check, arg_crit_scan(b, job.a, job.b, t_samples), grid, &[])?
            }
            (_, None) => continue,
            (Check::Isolation, Some(p)) => {
                let t = job.t_samples.unwrap_or(ISOLATION_T_SAMPLES);
                let grid = GridSpec { t_samples: t, r_samples: job.r_samples, refine_depth: 0 };
                record(check, isolation_check(p, job.r_samples, t), grid, &[])?
            }
            (Check::SphereLink, Some(p)) => {
                let b = braid.as_ref().expect("filtered above");
                let grid = GridSpec { t_samples, r_samples: job.radii.len(), refine_depth: 0 };
                record(check, sphere_link_check(p, b, &job.radii, t_samples), grid, &job.radii)?
            }
            (Check::DRegular, Some(p)) => {
                let grid = GridSpec { t_samples: job.point_samples, r_samples: job.radii.len(), refine_depth: 0 };
                let res = d_regularity_check(p, &job.radii, job.pencil_samples, job.point_samples);
                record(check, res, grid, &job.radii)?
            }
            (Check::RadialIdentity, Some(p)) => {
                let t = job.t_samples.unwrap_or(ISOLATION_T_SAMPLES);
                let grid = GridSpec { t_samples: t, r_samples: job.r_samples, refine_depth: 0 };
                record(check, radial_identity_check(p, job.r_samples, t, RADIAL_TOL), grid, &[])?
            }
        };
        certs.push(cert);
    }

    let out = OutDir::create(out)?;
    let path = write_certificates(&out, &certs)?;
    for c in &certs {
        println!(
            "{:?}: {} margin={} threshold={}",
            c.kind,
            if c.pass { "PASS" } else { "FAIL" },
            fmt_f64(c.margin),
            c.threshold
        );
        for m in &c.messages {
            println!("  {m}");
        }
    }
    println!("wrote {}", path.display());
    let failed = certs.iter().filter(|c| !c.pass).count();
    if failed > 0 || certs.is_empty() {
        return Err(CliError::NotCertified(format!("{failed} of {} certificates failed", certs.len())));
    }
    Ok(())
}

/// `steps` values of `b` spaced evenly in `log₂ b`. Endpoints and any value
/// with an integral exponent come out exact.
pub fn b_grid(b_min: f64, b_max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![b_min];
    }
    let (lo, hi) = (b_min.log2(), b_max.log2());
    (0..steps)
        .map(|i| {
            if i == 0 {
                b_min
            } else if i == steps - 1 {
                b_max
            } else {
                (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp2()
            }
        })
        .collect()
}

pub fn scan_b(job: &Job, out: &Path) -> Result<(), CliError> {
    let b = job.braid()?;
    let range = job.scan.unwrap_or(ScanRange { b_min: 1.0 / 64.0, b_max: 1.0, steps: 7 });
    let t_samples = job.t_samples.unwrap_or(DEFAULT_T_SAMPLES);
    let grid = GridSpec { t_samples, r_samples: 0, refine_depth: 0 };
    let mut rows = Vec::new();
    let mut best: Option<f64> = None;
    for bb in b_grid(range.b_min, range.b_max, range.steps) {
        let cert = record(Check::ArgCrit, arg_crit_scan(&b, job.a, bb, t_samples), grid, &[])?;
        if cert.pass {
            best = Some(best.map_or(bb, |x: f64| x.max(bb)));
        }
        rows.push(vec![fmt_f64(bb), fmt_f64(cert.margin), cert.pass.to_string()]);
    }
    let out = OutDir::create(out)?;
    let path = out.write_csv("scan.csv", &["b", "margin", "pass"], &rows)?;
    println!("wrote {}", path.display());
    match best {
        Some(bb) => println!("largest passing b: {bb}"),
        None => println!("no passing b"),
    }
    Ok(())
}

pub fn sample_curve(job: &Job, poly_path: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let b = job.braid()?;
    let p = match poly_path {
        Some(path) => read_poly(path)?,
        None => build_poly(job, &b)?,
    };
    let samples = job.t_samples.unwrap_or(CURVE_SAMPLES);
    let mut rows = Vec::new();
    for &rho in &job.radii {
        let pts = sample_sphere_curves(&p, &b, rho, samples).map_err(|e| match e {
            e if is_verdict(&e) => CliError::NotCertified(format!("sphere of radius {rho}: {e}")),
            e => usage_error(e),
        })?;
        for pt in pts {
            rows.push(vec![
                fmt_f64(rho),
                (pt.strand + 1).to_string(),
                fmt_f64(pt.t),
                fmt_f64(pt.u.re),
                fmt_f64(pt.u.im),
                fmt_f64(pt.r),
            ]);
        }
    }
    let out = OutDir::create(out)?;
    let path = out.write_csv("curves.csv", &["rho", "strand", "t", "re_u", "im_u", "r"], &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

pub fn word(job: &Job) -> Result<(), CliError> {
    let w: BraidWord = match job.word()? {
        Some(w) => w,
        None => {
            let b = job.braid()?;
            extract_word(&b, job.t_samples.unwrap_or(DEFAULT_T_SAMPLES).max(1024))?.word
        }
    };
    let letters: Vec<String> = w.signed().iter().map(i64::to_string).collect();
    println!("strands: {}", w.strands());
    println!("word: {w}");
    println!("letters: {}", letters.join(","));
    println!("length: {}", w.len());
    println!("strictly_homogeneous: {}", is_strictly_homogeneous(&w));
    println!("symmetry: {}", word_symmetry(&w));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_grid_hits_powers_of_two_exactly() {
        let g = b_grid(1.0 / 64.0, 1.0, 7);
        assert_eq!(g, [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 0.125, 0.25, 0.5, 1.0]);
        assert_eq!(b_grid(0.3, 0.3, 1), [0.3]);
        let g = b_grid(0.1, 10.0, 9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!((g[0], g[8]), (0.1, 10.0));
    }
}
