//! Braid parametrisations, crossing extraction and braid-word predicates.
//!
//! A braid is described component by component. Component `C` with `s_C`
//! strands, speed `c` and real trigonometric polynomials `F_C`, `G_C` has the
//! strands
//!
//! ```text
//! t ↦ ( F_C((c·t + 2πj)/s_C), G_C((c·t + 2πj)/s_C), t ),   j = 1..=s_C.
//! ```
//!
//! Speed 1 is the ordinary Fourier form; speed 2 is what squaring a braid
//! produces.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trigpoly::TrigPoly;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BraidError {
    #[error("component {component}: {reason}")]
    InvalidComponent { component: usize, reason: String },
    #[error("a braid needs at least one component")]
    Empty,
    #[error("strands {first} and {second} meet near t = {t} (separation {separation:e})")]
    StrandsTouch { first: usize, second: usize, t: f64, separation: f64 },
    #[error("two start points lie within tolerance of the endpoint of strand {strand}")]
    AmbiguousMatch { strand: usize },
    #[error("the endpoint of strand {strand} matches no start point")]
    NoMatch { strand: usize },
    #[error("degenerate crossing near t = {t}: {reason}")]
    DegenerateCrossing { t: f64, reason: String },
    #[error("generator index {index} out of range for {strands} strands")]
    GeneratorOutOfRange { index: usize, strands: usize },
    #[error("word extraction needs at least 1024 samples, got {0}")]
    TooFewSamples(usize),
    #[error("no grid origin without coincident x-coordinates was found")]
    NoOrigin,
}

/// One link component of a Fourier parametrisation.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    strands: usize,
    speed: u32,
    x: TrigPoly,
    y: TrigPoly,
}

impl Component {
    pub fn new(strands: usize, x: TrigPoly, y: TrigPoly) -> Self {
        Self::with_speed(strands, 1, x, y)
    }

    pub fn with_speed(strands: usize, speed: u32, x: TrigPoly, y: TrigPoly) -> Self {
        Self { strands, speed, x, y }
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn speed(&self) -> u32 {
        self.speed
    }

    pub fn x(&self) -> &TrigPoly {
        &self.x
    }

    pub fn y(&self) -> &TrigPoly {
        &self.y
    }

    fn phase(&self, t: f64, j: usize) -> f64 {
        (f64::from(self.speed) * t + 2.0 * PI * j as f64) / self.strands as f64
    }
}

/// A Fourier braid parametrisation: a list of components, strands ordered by
/// component and then by offset `j = 1..=s_C`.
#[derive(Clone, Debug, PartialEq)]
pub struct BraidParam {
    components: Vec<Component>,
    x_deriv: Vec<TrigPoly>,
    y_deriv: Vec<TrigPoly>,
}

impl BraidParam {
    /// Checks the structural invariants (positive strand counts and speeds,
    /// real-valued coordinate functions). Strand disjointness is a separate,
    /// sampled check: [`BraidParam::min_separation`].
    pub fn new(components: Vec<Component>) -> Result<Self, BraidError> {
        if components.is_empty() {
            return Err(BraidError::Empty);
        }
        for (idx, c) in components.iter().enumerate() {
            let reason = if c.strands == 0 {
                Some("strand count must be at least 1")
            } else if c.speed == 0 {
                Some("speed must be at least 1")
            } else if !c.x.is_real_valued() || !c.y.is_real_valued() {
                Some("coordinate polynomials must be real-valued (c_{-j} = conj c_j)")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(BraidError::InvalidComponent { component: idx, reason: reason.into() });
            }
        }
        let x_deriv = components.iter().map(|c| c.x.d_dt()).collect();
        let y_deriv = components.iter().map(|c| c.y.d_dt()).collect();
        Ok(Self { components, x_deriv, y_deriv })
    }

    /// Like [`BraidParam::new`] but also rejects parametrisations whose
    /// strands come within `1e-9` of each other on a 4096-point grid.
    pub fn validated(components: Vec<Component>) -> Result<Self, BraidError> {
        let b = Self::new(components)?;
        let (sep, first, second, t) = b.min_separation(4096);
        if b.strand_count() > 1 && sep <= 1e-9 {
            return Err(BraidError::StrandsTouch { first, second, t, separation: sep });
        }
        Ok(b)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn strand_count(&self) -> usize {
        self.components.iter().map(|c| c.strands).sum()
    }

    /// Strand positions `X_j(t) + i·Y_j(t)`.
    pub fn positions(&self, t: f64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.strand_count());
        for c in &self.components {
            for j in 1..=c.strands {
                let tau = c.phase(t, j);
                out.push(Complex64::new(c.x.eval(tau).re, c.y.eval(tau).re));
            }
        }
        out
    }

    /// Strand velocities `X_j'(t) + i·Y_j'(t)`.
    pub fn velocities(&self, t: f64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.strand_count());
        for (k, c) in self.components.iter().enumerate() {
            let rate = f64::from(c.speed) / c.strands as f64;
            for j in 1..=c.strands {
                let tau = c.phase(t, j);
                out.push(Complex64::new(
                    rate * self.x_deriv[k].eval(tau).re,
                    rate * self.y_deriv[k].eval(tau).re,
                ));
            }
        }
        out
    }

    /// Smallest pairwise strand distance on an `n`-point grid, with the pair
    /// and parameter where it occurs.
    pub fn min_separation(&self, n: usize) -> (f64, usize, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0, 0.0);
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            let pos = self.positions(t);
            for i in 0..pos.len() {
                for j in (i + 1)..pos.len() {
                    let d = (pos[i] - pos[j]).norm();
                    if d < best.0 {
                        best = (d, i, j, t);
                    }
                }
            }
        }
        best
    }
}

/// The `(s, ℓ, r)`-lemniscate braid: strands at
/// `(cos((rt + 2πj)/s), sin(ℓ(rt + 2πj)/s))`, grouped into the
/// `gcd(s, r)` orbits of `j ↦ j + r mod s`.
pub fn lemniscate(s: usize, ell: u32, r: u32) -> BraidParam {
    assert!(s >= 1 && ell >= 1 && r >= 1, "lemniscate parameters must be positive");
    let d = gcd(s as u64, u64::from(r)) as usize;
    let strands = s / d;
    let speed = r / d as u32;
    let components = (0..d)
        .map(|j0| {
            // Component j0 carries the strands j ≡ j0 mod d; the phase shift
            // 2π·j0/s moves its offsets onto the common (speed·t + 2πm)/s_C grid.
            let shift = Complex64::from_polar(1.0, 2.0 * PI * j0 as f64 / s as f64);
            let shift_ell =
                Complex64::from_polar(1.0, 2.0 * PI * j0 as f64 * f64::from(ell) / s as f64);
            let x = TrigPoly::from_coeffs([(1, shift * 0.5), (-1, shift.conj() * 0.5)]);
            let y = TrigPoly::from_coeffs([
                (i64::from(ell), shift_ell * Complex64::new(0.0, -0.5)),
                (-i64::from(ell), shift_ell.conj() * Complex64::new(0.0, 0.5)),
            ]);
            // j0 = 0 keeps the exact dyadic coefficients of cos and sin.
            let (x, y) = if j0 == 0 {
                (TrigPoly::cos(1), TrigPoly::sin(i64::from(ell)))
            } else {
                (x, y)
            };
            Component::with_speed(strands, speed, x, y)
        })
        .collect();
    BraidParam::new(components).expect("lemniscate components are valid")
}

/// Parametrisation of `B²` from one of `B`: every phase `(c·t + 2πj)/s_C`
/// becomes `(2c·t + 2πj)/s_C`.
pub fn square_parametrisation(b: &BraidParam) -> BraidParam {
    let components = b
        .components
        .iter()
        .map(|c| Component::with_speed(c.strands, 2 * c.speed, c.x.clone(), c.y.clone()))
        .collect();
    BraidParam::new(components).expect("squaring preserves validity")
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `π_B` as a map from strand index to strand index: the endpoint of strand
/// `j` at `t = 2π` is the start point of strand `π_B(j)` at `t = 0`.
pub fn closure_permutation(b: &BraidParam) -> Result<Vec<usize>, BraidError> {
    const TOL: f64 = 1e-8;
    let start = b.positions(0.0);
    let end = b.positions(2.0 * PI);
    let mut perm = Vec::with_capacity(start.len());
    let mut taken = vec![false; start.len()];
    for (j, e) in end.iter().enumerate() {
        let hits: Vec<usize> = start
            .iter()
            .enumerate()
            .filter(|(_, s)| (*s - e).norm() <= TOL)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => return Err(BraidError::NoMatch { strand: j }),
            [i] if !taken[*i] => {
                taken[*i] = true;
                perm.push(*i);
            }
            _ => return Err(BraidError::AmbiguousMatch { strand: j }),
        }
    }
    Ok(perm)
}

/// Number of cycles of a permutation given as an index map.
pub fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
        }
    }
    cycles
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flipped(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// Artin generator `σ_index^{±1}`, `index` 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub index: usize,
    pub sign: Sign,
}

impl Letter {
    pub fn new(index: usize, sign: Sign) -> Self {
        Self { index, sign }
    }

    /// `+i` for `σ_i`, `-i` for `σ_i^{-1}`.
    pub fn signed(self) -> i64 {
        i64::from(self.sign.as_i32()) * self.index as i64
    }

    fn commutes_with(self, other: Letter) -> bool {
        self.index.abs_diff(other.index) >= 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<Letter>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<Letter>) -> Result<Self, BraidError> {
        for l in &letters {
            if l.index == 0 || l.index >= strands {
                return Err(BraidError::GeneratorOutOfRange { index: l.index, strands });
            }
        }
        Ok(Self { strands, letters })
    }

    /// From signed generator indices: `[1, -2]` is `σ₁σ₂⁻¹`.
    pub fn from_signed(strands: usize, signed: &[i64]) -> Result<Self, BraidError> {
        let letters = signed
            .iter()
            .map(|&k| {
                let sign = if k < 0 { Sign::Negative } else { Sign::Positive };
                Letter::new(k.unsigned_abs() as usize, sign)
            })
            .collect();
        Self::new(strands, letters)
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn signed(&self) -> Vec<i64> {
        self.letters.iter().map(|l| l.signed()).collect()
    }

    /// Permutation of positions induced by the word: position `p` (0-based,
    /// left to right) ends at `perm[p]`.
    pub fn position_permutation(&self) -> Vec<usize> {
        let mut at: Vec<usize> = (0..self.strands).collect();
        for l in &self.letters {
            at.swap(l.index - 1, l.index);
        }
        // at[q] is the starting position of the strand that ends at q.
        let mut perm = vec![0; self.strands];
        for (end, &start) in at.iter().enumerate() {
            perm[start] = end;
        }
        perm
    }

    /// Foata normal form with respect to far commutativity
    /// `σ_iσ_j = σ_jσ_i` for `|i - j| ≥ 2`: the word is cut into layers of
    /// pairwise commuting letters, each as early as possible, each sorted by
    /// generator index. Simultaneous crossings therefore get one canonical
    /// order.
    pub fn foata_normal_form(&self) -> BraidWord {
        let mut rest = self.letters.clone();
        let mut out = Vec::with_capacity(rest.len());
        while !rest.is_empty() {
            let mut layer = Vec::new();
            let mut keep = Vec::new();
            for (k, &l) in rest.iter().enumerate() {
                let blocked = rest[..k].iter().any(|&e| !e.commutes_with(l));
                if blocked {
                    keep.push(l);
                } else {
                    layer.push(l);
                }
            }
            layer.sort();
            out.extend(layer);
            rest = keep;
        }
        BraidWord { strands: self.strands, letters: out }
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "(empty)");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| match l.sign {
                Sign::Positive => format!("s{}", l.index),
                Sign::Negative => format!("s{}^-1", l.index),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Every generator `σ_1 … σ_{s-1}` occurs, and all occurrences of a
/// generator carry the same sign.
pub fn is_strictly_homogeneous(w: &BraidWord) -> bool {
    (1..w.strands).all(|i| {
        let mut signs = w.letters.iter().filter(|l| l.index == i).map(|l| l.sign);
        match signs.next() {
            None => false,
            Some(first) => signs.all(|s| s == first),
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordSymmetry {
    /// Second half repeats the first half verbatim.
    Square,
    /// Second half is the first half with every index `i` replaced by `s - i`.
    Mirrored,
    /// Second half is the first half with every sign switched.
    SignFlipped,
    None,
}

impl fmt::Display for WordSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WordSymmetry::Square => "square",
            WordSymmetry::Mirrored => "mirrored",
            WordSymmetry::SignFlipped => "sign_flipped",
            WordSymmetry::None => "none",
        };
        f.write_str(s)
    }
}

/// Literal half-word symmetry test; checked in the order square, mirrored,
/// sign-flipped.
pub fn word_symmetry(w: &BraidWord) -> WordSymmetry {
    let n = w.letters.len();
    if n % 2 == 1 {
        return WordSymmetry::None;
    }
    let (first, second) = w.letters.split_at(n / 2);
    if first == second {
        WordSymmetry::Square
    } else if first
        .iter()
        .zip(second)
        .all(|(a, b)| b.index == w.strands - a.index && b.sign == a.sign)
    {
        WordSymmetry::Mirrored
    } else if first
        .iter()
        .zip(second)
        .all(|(a, b)| b.index == a.index && b.sign == a.sign.flipped())
    {
        WordSymmetry::SignFlipped
    } else {
        WordSymmetry::None
    }
}

/// A family of closed strand curves in the plane, continuous in `t` and
/// listed in a fixed strand order.
pub trait StrandCurves: Sync {
    fn strand_count(&self) -> usize;
    fn positions(&self, t: f64) -> Vec<Complex64>;
}

impl StrandCurves for BraidParam {
    fn strand_count(&self) -> usize {
        BraidParam::strand_count(self)
    }

    fn positions(&self, t: f64) -> Vec<Complex64> {
        BraidParam::positions(self, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub letter: Letter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedWord {
    /// Word in far-commutation normal form.
    pub word: BraidWord,
    /// Crossings in order of crossing time, before normalization.
    pub crossings: Vec<Crossing>,
    /// Grid origin; the word reads the braid on `[origin, origin + 2π]`.
    pub origin: f64,
    /// Strand labels in left-to-right order at the origin.
    pub start_order: Vec<usize>,
}

const CROSSING_DT: f64 = 1e-6;
const MIN_SAMPLES: usize = 1024;

fn x_order(pos: &[Complex64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pos.len()).collect();
    order.sort_by(|&a, &b| pos[a].re.total_cmp(&pos[b].re));
    order
}

fn x_scale(pos: &[Complex64]) -> f64 {
    pos.iter().map(|p| p.re.abs()).fold(0.0, f64::max)
}

fn min_x_gap(pos: &[Complex64]) -> f64 {
    let mut xs: Vec<f64> = pos.iter().map(|p| p.re).collect();
    xs.sort_by(f64::total_cmp);
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Picks the grid origin: `t = 0` unless two strands share an x-coordinate
/// there (relative gap below `1e-6`), in which case the origin is shifted by
/// fractions of a grid cell.
pub fn choose_origin<C: StrandCurves + ?Sized>(curves: &C, samples: usize) -> Result<f64, BraidError> {
    let cell = 2.0 * PI / samples as f64;
    for k in 0..64 {
        let t0 = k as f64 * 0.381_966_011_250_105 * cell;
        let pos = curves.positions(t0);
        if pos.len() < 2 {
            return Ok(t0);
        }
        let scale = x_scale(&pos);
        if scale > 0.0 && min_x_gap(&pos) > 1e-6 * scale {
            return Ok(t0);
        }
    }
    Err(BraidError::NoOrigin)
}

/// Reads off a braid word from strand curves sampled on `samples` grid
/// points over one period, with an automatically chosen origin.
pub fn extract_word<C: StrandCurves + ?Sized>(curves: &C, samples: usize) -> Result<ExtractedWord, BraidError> {
    if samples < MIN_SAMPLES {
        return Err(BraidError::TooFewSamples(samples));
    }
    let origin = choose_origin(curves, samples)?;
    extract_word_from(curves, samples, origin)
}

/// Word extraction on the grid `origin + 2πk/samples`.
///
/// A letter is recorded whenever two strands exchange x-order between grid
/// points. The crossing time is located by bisection to `Δt < 1e-6`; the
/// generator index is the 1-based position of the left strand before the
/// swap, and the sign is `+1` when the strand moving left-to-right has the
/// larger y-coordinate at the crossing.
pub fn extract_word_from<C: StrandCurves + ?Sized>(
    curves: &C,
    samples: usize,
    origin: f64,
) -> Result<ExtractedWord, BraidError> {
    if samples < MIN_SAMPLES {
        return Err(BraidError::TooFewSamples(samples));
    }
    let n = curves.strand_count();
    let cell = 2.0 * PI / samples as f64;
    let start = curves.positions(origin);
    let start_order = x_order(&start);
    let mut order = start_order.clone();
    let mut crossings = Vec::new();

    let mut prev_t = origin;
    let mut prev = start;
    for k in 1..=samples {
        let t = origin + k as f64 * cell;
        let cur = curves.positions(t);
        let mut events = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let before = prev[a].re - prev[b].re;
                let after = cur[a].re - cur[b].re;
                if before.signum() != after.signum() && before != 0.0 {
                    let gap = |s: f64| {
                        let p = curves.positions(s);
                        p[a].re - p[b].re
                    };
                    let tc = refine_crossing(&gap, prev_t, t, before);
                    events.push((tc, a, b));
                }
            }
        }
        events.sort_by(|p, q| p.0.total_cmp(&q.0));
        for (tc, a, b) in events {
            let pos = curves.positions(tc);
            let scale = x_scale(&pos).max(f64::MIN_POSITIVE);
            let xc = 0.5 * (pos[a].re + pos[b].re);
            if let Some(third) = (0..n).find(|&c| c != a && c != b && (pos[c].re - xc).abs() <= 1e-10 * scale) {
                return Err(BraidError::DegenerateCrossing {
                    t: tc,
                    reason: format!("strands {a}, {b} and {third} share an x-coordinate"),
                });
            }
            let pa = order.iter().position(|&s| s == a).expect("label present");
            let pb = order.iter().position(|&s| s == b).expect("label present");
            if pa.abs_diff(pb) != 1 {
                return Err(BraidError::DegenerateCrossing {
                    t: tc,
                    reason: format!("strands {a} and {b} are not x-adjacent when they cross"),
                });
            }
            let (left_pos, left, right) = if pa < pb { (pa, a, b) } else { (pb, b, a) };
            let sign = if pos[left].im > pos[right].im { Sign::Positive } else { Sign::Negative };
            order.swap(left_pos, left_pos + 1);
            crossings.push(Crossing { t: tc, letter: Letter::new(left_pos + 1, sign) });
        }
        prev_t = t;
        prev = cur;
    }

    let letters = crossings.iter().map(|c| c.letter).collect();
    let word = BraidWord::new(n, letters)?.foata_normal_form();
    Ok(ExtractedWord { word, crossings, origin, start_order })
}

fn refine_crossing<F: Fn(f64) -> f64>(gap: &F, lo: f64, hi: f64, gap_lo: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo >= CROSSING_DT {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g == 0.0 {
            return mid;
        }
        if g.signum() == gap_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Curves obtained by rescaling the x- and y-coordinates of every strand.
pub struct Stretched<'a, C: StrandCurves + ?Sized> {
    pub inner: &'a C,
    pub x_scale: f64,
    pub y_scale: f64,
}

impl<C: StrandCurves + ?Sized> StrandCurves for Stretched<'_, C> {
    fn strand_count(&self) -> usize {
        self.inner.strand_count()
    }

    fn positions(&self, t: f64) -> Vec<Complex64> {
        self.inner
            .positions(t)
            .into_iter()
            .map(|p| Complex64::new(self.x_scale * p.re, self.y_scale * p.im))
            .collect()
    }
}
