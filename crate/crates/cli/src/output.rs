//! Artifact formats: poly.json, poly.txt, certificates.json and the CSV grids.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use singular_forge::certify::Certificate;
use singular_forge::construct::{MixedExp, MixedPoly, PolyParams};

use crate::config::float_to_rational;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyFile {
    pub metadata: PolyMetadata,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyMetadata {
    pub s: usize,
    pub a: f64,
    pub b: f64,
    pub k: u32,
    pub q1: f64,
    pub q2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TermRecord {
    pub i: u32,
    pub alpha: u32,
    pub beta: u32,
    pub re: f64,
    pub im: f64,
}

/// Terms sorted by `(i, α, β)` descending.
fn sorted_terms(p: &MixedPoly) -> Vec<(MixedExp, Complex64)> {
    let mut terms: Vec<_> = p.terms().iter().map(|(e, c)| (*e, *c)).collect();
    terms.sort_by_key(|(e, _)| std::cmp::Reverse((e.i, e.alpha, e.beta)));
    terms
}

impl PolyFile {
    pub fn from_poly(p: &MixedPoly) -> Result<Self, CliError> {
        let pp = p
            .params()
            .ok_or_else(|| CliError::Invalid("polynomial has no construction parameters".into()))?;
        Ok(Self {
            metadata: PolyMetadata {
                s: p.strands(),
                a: pp.a,
                b: pp.b,
                k: pp.k,
                q1: pp.q1_f64(),
                q2: pp.q2_f64(),
                lambda: pp.lambda,
            },
            terms: sorted_terms(p)
                .into_iter()
                .map(|(e, c)| TermRecord { i: e.i, alpha: e.alpha, beta: e.beta, re: c.re, im: c.im })
                .collect(),
        })
    }

    pub fn to_poly(&self) -> Result<MixedPoly, CliError> {
        let m = &self.metadata;
        let (q1, q2): (Rational64, Rational64) = (float_to_rational(m.q1)?, float_to_rational(m.q2)?);
        let params = PolyParams::new(m.a, m.b, m.k, q1, q2).with_lambda(m.lambda);
        let terms = self
            .terms
            .iter()
            .map(|t| (MixedExp { i: t.i, alpha: t.alpha, beta: t.beta }, Complex64::new(t.re, t.im)));
        Ok(MixedPoly::from_terms(m.s, terms, Some(params)))
    }
}

pub fn read_poly(path: &Path) -> Result<MixedPoly, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: PolyFile =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    file.to_poly()
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn poly_txt(p: &MixedPoly) -> String {
    let mut out = String::new();
    if let Some(pp) = p.params() {
        out.push_str(&format!(
            "# s = {}, a = {}, b = {}, k = {}, q1 = {}, q2 = {}, lambda = {}\n",
            p.strands(),
            pp.a,
            pp.b,
            pp.k,
            pp.q1,
            pp.q2,
            pp.lambda
        ));
    }
    out.push_str("# coefficient  u^i v^alpha vbar^beta\n");
    for (e, c) in sorted_terms(p) {
        out.push_str(&format!(
            "({} {}i)  u^{} v^{} vbar^{}\n",
            signed(c.re),
            signed(c.im),
            e.i,
            e.alpha,
            e.beta
        ));
    }
    out
}

fn signed(x: f64) -> String {
    let s = fmt_f64(x);
    if s.starts_with('-') { s } else { format!("+{s}") }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).expect("artifact types serialize");
        self.write(name, &(text + "\n"))
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::io(&path, e),
            other => CliError::Invalid(format!("{}: {other:?}", path.display())),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn write_certificates(out: &OutDir, certs: &[Certificate]) -> Result<PathBuf, CliError> {
    out.write_json("certificates.json", certs)
}
