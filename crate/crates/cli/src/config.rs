//! Job configuration: a JSON or TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use num_rational::Rational64;
use serde::Deserialize;

use singular_forge::braid::{lemniscate, square_parametrisation, BraidParam, BraidWord, Component};
use singular_forge::trigpoly::TrigPoly;

use crate::error::CliError;

const MIN_STRETCH: f64 = 1e-12;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub input: Option<InputSpec>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda0: Option<f64>,
    pub k: Option<u32>,
    #[serde(default)]
    pub q: QMode,
    #[serde(default)]
    pub square: bool,
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    pub scan: Option<ScanRange>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    Lemniscate { s: usize, ell: u32, r: u32 },
    Fourier { components: Vec<FourierComponent> },
    Word { strands: usize, letters: Vec<i64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierComponent {
    pub strands: usize,
    #[serde(default = "one")]
    pub speed: u32,
    pub x_coeffs: Vec<Coeff>,
    pub y_coeffs: Vec<Coeff>,
}

fn one() -> u32 {
    1
}

/// One Fourier coefficient. Only one of `c_f`, `c_{-f}` needs to be given;
/// the other follows from real-valuedness.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coeff {
    pub freq: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    #[default]
    Auto,
    Explicit { q1: QValue, q2: QValue },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl QValue {
    pub fn to_rational(&self) -> Result<Rational64, CliError> {
        match self {
            QValue::Int(n) => Ok(Rational64::from_integer(*n)),
            QValue::Float(x) => float_to_rational(*x),
            QValue::Text(s) => parse_rational(s),
        }
    }
}

pub fn float_to_rational(x: f64) -> Result<Rational64, CliError> {
    Rational64::approximate_float(x)
        .filter(|q| (*q.numer() as f64 / *q.denom() as f64 - x).abs() <= 1e-12 * x.abs().max(1.0))
        .ok_or_else(|| CliError::Invalid(format!("cannot represent {x} as a rational exponent")))
}

/// `"3/4"`, `"2"` or `"0.75"`.
pub fn parse_rational(s: &str) -> Result<Rational64, CliError> {
    let bad = || CliError::Invalid(format!("bad rational {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Ok(n) = s.parse::<i64>() {
        return Ok(Rational64::from_integer(n));
    }
    float_to_rational(s.parse::<f64>().map_err(|_| bad())?)
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub t_samples: Option<usize>,
    pub r_samples: Option<usize>,
    pub pencil_samples: Option<usize>,
    pub point_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub b_min: f64,
    pub b_max: f64,
    pub steps: usize,
}

pub fn load(path: &Path) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }
}

/// Flag values that override the configuration file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub s: Option<usize>,
    pub ell: Option<u32>,
    pub r: Option<u32>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<u32>,
    pub q1: Option<String>,
    pub q2: Option<String>,
    pub lambda: Option<f64>,
    pub lambda0: Option<f64>,
    pub square: bool,
    pub radii: Option<Vec<f64>>,
    pub t_samples: Option<usize>,
    pub r_samples: Option<usize>,
    pub word: Option<Vec<i64>>,
    pub strands: Option<usize>,
    pub checks: Vec<String>,
    pub scan: (Option<f64>, Option<f64>, Option<usize>),
}

/// A fully resolved and validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub input: Option<InputSpec>,
    pub square: bool,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub lambda0: Option<f64>,
    pub k: Option<u32>,
    pub q: Option<(Rational64, Rational64)>,
    pub radii: Vec<f64>,
    pub t_samples: Option<usize>,
    pub r_samples: usize,
    pub pencil_samples: usize,
    pub point_samples: usize,
    pub checks: Vec<String>,
    pub outputs: Vec<String>,
    pub scan: Option<ScanRange>,
}

impl Job {
    pub fn resolve(config: JobConfig, o: Overrides) -> Result<Self, CliError> {
        let input = if let Some(letters) = &o.word {
            if o.s.is_some() || o.ell.is_some() || o.r.is_some() {
                return Err(CliError::Invalid("give either a lemniscate (--s/--ell/--r) or a --word, not both".into()));
            }
            let strands = o
                .strands
                .or_else(|| letters.iter().map(|l| l.unsigned_abs() as usize + 1).max())
                .unwrap_or(1);
            Some(InputSpec::Word { strands, letters: letters.clone() })
        } else {
            match (o.s, config.input) {
                (Some(s), None | Some(InputSpec::Lemniscate { .. })) => {
                    Some(InputSpec::Lemniscate { s, ell: o.ell.unwrap_or(1), r: o.r.unwrap_or(1) })
                }
                (None, Some(InputSpec::Lemniscate { s, ell, r })) => {
                    Some(InputSpec::Lemniscate { s, ell: o.ell.unwrap_or(ell), r: o.r.unwrap_or(r) })
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::Invalid("--s conflicts with the non-lemniscate input in the config file".into()))
                }
                (None, _) if o.ell.is_some() || o.r.is_some() => {
                    return Err(CliError::Invalid("--ell/--r need --s or a lemniscate input".into()));
                }
                (None, c) => c,
            }
        };

        let q = match (o.q1, o.q2) {
            (Some(q1), Some(q2)) => Some((parse_rational(&q1)?, parse_rational(&q2)?)),
            (None, None) => match config.q {
                QMode::Auto => None,
                QMode::Explicit { q1, q2 } => Some((q1.to_rational()?, q2.to_rational()?)),
            },
            _ => return Err(CliError::Invalid("--q1 and --q2 go together".into())),
        };

        let scan = match (o.scan, config.scan) {
            ((None, None, None), c) => c,
            ((lo, hi, n), c) => {
                let base = c.unwrap_or(ScanRange { b_min: 1.0 / 64.0, b_max: 1.0, steps: 7 });
                Some(ScanRange {
                    b_min: lo.unwrap_or(base.b_min),
                    b_max: hi.unwrap_or(base.b_max),
                    steps: n.unwrap_or(base.steps),
                })
            }
        };

        let job = Job {
            input,
            square: o.square || config.square,
            a: o.a.or(config.a).unwrap_or(1.0),
            b: o.b.or(config.b).unwrap_or(1.0),
            lambda: o.lambda.or(config.lambda).unwrap_or(1.0),
            lambda0: o.lambda0.or(config.lambda0),
            k: o.k.or(config.k),
            q,
            radii: o.radii.or(config.radii).unwrap_or_else(|| vec![0.25, 0.5, 1.0]),
            t_samples: o.t_samples.or(config.grids.t_samples),
            r_samples: o.r_samples.or(config.grids.r_samples).unwrap_or(16),
            pencil_samples: config.grids.pencil_samples.unwrap_or(64),
            point_samples: config.grids.point_samples.unwrap_or(10_000),
            checks: if o.checks.is_empty() { config.checks } else { o.checks },
            outputs: config.outputs,
            scan,
        };
        job.validate()?;
        Ok(job)
    }

    fn validate(&self) -> Result<(), CliError> {
        let stretch_ok = |x: f64| x.is_finite() && x > MIN_STRETCH;
        if !stretch_ok(self.a) || !stretch_ok(self.b) {
            return Err(CliError::Invalid("a,b must exceed 1e-12".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(CliError::Invalid("lambda must be positive".into()));
        }
        if let Some(l0) = self.lambda0 {
            if !(l0.is_finite() && l0 > 0.0) {
                return Err(CliError::Invalid("lambda0 must be positive".into()));
            }
        }
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(CliError::Invalid("radii must lie in (0, 1]".into()));
        }
        if let Some(q) = self.q {
            if q.0 < Rational64::from_integer(0) || q.1 < Rational64::from_integer(0) {
                return Err(CliError::Invalid("q1, q2 must be nonnegative".into()));
            }
        }
        if let Some(n) = self.t_samples {
            if n < 16 {
                return Err(CliError::Invalid("t-samples must be at least 16".into()));
            }
        }
        if self.r_samples == 0 {
            return Err(CliError::Invalid("r-samples must be positive".into()));
        }
        if let Some(scan) = &self.scan {
            if !(scan.b_min > 0.0 && scan.b_min <= scan.b_max && scan.b_max <= 10.0) || scan.steps == 0 {
                return Err(CliError::Invalid("b range must satisfy 0 < b-min <= b-max <= 10 with at least one step".into()));
            }
        }
        match &self.input {
            Some(InputSpec::Lemniscate { s, ell, r }) if *s == 0 || *ell == 0 || *r == 0 => {
                Err(CliError::Invalid("lemniscate parameters must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// The braid described by the input, squared if requested. Word inputs
    /// have no parametrisation.
    pub fn braid(&self) -> Result<BraidParam, CliError> {
        let braid = match &self.input {
            None => return Err(CliError::Invalid("no input given (use --config or --s/--ell/--r)".into())),
            Some(InputSpec::Word { .. }) => {
                return Err(CliError::Invalid("word inputs are accepted only by the word command".into()))
            }
            Some(InputSpec::Lemniscate { s, ell, r }) => lemniscate(*s, *ell, *r),
            Some(InputSpec::Fourier { components }) => {
                let comps = components
                    .iter()
                    .map(|c| Component::with_speed(c.strands, c.speed, real_poly(&c.x_coeffs), real_poly(&c.y_coeffs)))
                    .collect();
                BraidParam::validated(comps)?
            }
        };
        Ok(if self.square { square_parametrisation(&braid) } else { braid })
    }

    pub fn word(&self) -> Result<Option<BraidWord>, CliError> {
        match &self.input {
            Some(InputSpec::Word { strands, letters }) => Ok(Some(BraidWord::from_signed(*strands, letters)?)),
            _ => Ok(None),
        }
    }

    pub fn wants_output(&self, name: &str) -> bool {
        self.outputs.is_empty() || self.outputs.iter().any(|o| o == name)
    }
}

/// Real trigonometric polynomial from listed coefficients; an entry at a
/// negative frequency `-f` is mirrored to `+f` by conjugation.
fn real_poly(coeffs: &[Coeff]) -> TrigPoly {
    TrigPoly::real_from_nonnegative(coeffs.iter().map(|c| {
        let z = Complex64::new(c.re, c.im);
        if c.freq < 0 {
            (-c.freq, z.conj())
        } else {
            (c.freq, z)
        }
    }))
}

pub fn config_path(p: &Option<PathBuf>) -> Result<JobConfig, CliError> {
    match p {
        Some(path) => load(path),
        None => Ok(JobConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("3/4").unwrap(), Rational64::new(3, 4));
        assert_eq!(parse_rational("2").unwrap(), Rational64::from_integer(2));
        assert_eq!(parse_rational("0.125").unwrap(), Rational64::new(1, 8));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg: JobConfig = toml::from_str("a = 2.0\nb = 3.0\n[input.lemniscate]\ns = 5\nell = 3\nr = 1\n").unwrap();
        let job = Job::resolve(cfg, Overrides { b: Some(0.25), ell: Some(2), ..Overrides::default() }).unwrap();
        assert_eq!((job.a, job.b), (2.0, 0.25));
        assert!(matches!(job.input, Some(InputSpec::Lemniscate { s: 5, ell: 2, r: 1 })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<JobConfig>(r#"{"bee": 1}"#).is_err());
    }

    #[test]
    fn negative_frequencies_are_mirrored() {
        let p = real_poly(&[Coeff { freq: -2, re: 0.5, im: 0.25 }]);
        assert_eq!(p.coeff(2), Complex64::new(0.5, -0.25));
        assert_eq!(p.coeff(-2), Complex64::new(0.5, 0.25));
    }
}
