//! Nice and ℝ-nice polynomial families, PET reduction by repeated van der
//! Corput steps, and a numeric van der Corput check.
//!
//! Pivot rule: among the equivalence classes of minimal degree, take the
//! one whose leading transformation is most frequent in the family (ties go
//! to the lower index), and within it the first entry in canonical order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fixed::FixedReal;
use crate::poly::{RealPolynomial, Window};
use crate::reduce;

/// `grid[i][j] = p_{i,j}`: row `i` is `𝒫_i`, column `j` is the `j`-th `ℓ`-tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFamily {
    pub grid: Vec<Vec<RealPolynomial>>,
}

impl PolyFamily {
    pub fn new(grid: Vec<Vec<RealPolynomial>>) -> Result<Self> {
        let m = grid.first().map(|r| r.len()).unwrap_or(0);
        if grid.is_empty() || m == 0 {
            return Err(LabError::InvalidInput("family needs at least one row and column".into()));
        }
        if grid.iter().any(|r| r.len() != m) {
            return Err(LabError::Mismatch("rows of a family must have equal length".into()));
        }
        Ok(PolyFamily { grid })
    }

    /// Parses a grid of coefficient lists, lowest degree first.
    pub fn parse(grid: &[Vec<Vec<&str>>]) -> Result<Self> {
        let g = grid
            .iter()
            .map(|row| row.iter().map(|c| RealPolynomial::parse(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        PolyFamily::new(g)
    }

    pub fn ell(&self) -> usize {
        self.grid.len()
    }

    pub fn m(&self) -> usize {
        self.grid[0].len()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.grid.iter().flatten().filter_map(|p| p.degree()).max()
    }
}

/// Each entry `p = a_r t^r + … + a_0` becomes `(p^r, …, p^0)` with
/// `p^i = t^i` when `a_i ≠ 0` and `0` otherwise, padded with zeros on the
/// right to `d + 1` coordinates. Row `(i, c)` sits at index `i(d+1) + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorizedFamily {
    pub d: usize,
    pub family: PolyFamily,
}

pub fn vectorize(fam: &PolyFamily) -> Result<VectorizedFamily> {
    let d = fam.max_degree().unwrap_or(0);
    let mut rows = vec![vec![RealPolynomial::zero(); fam.m()]; fam.ell() * (d + 1)];
    for (i, row) in fam.grid.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let Some(r) = p.degree() else { continue };
            for (c, power) in (0..=r).rev().enumerate() {
                if p.coeff(power) != FixedReal::ZERO {
                    rows[i * (d + 1) + c][j] = RealPolynomial::monomial(FixedReal::ONE, power)?;
                }
            }
        }
    }
    Ok(VectorizedFamily { d, family: PolyFamily::new(rows)? })
}

/// Which clause of the definition fails (indices are 0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum NiceFailure {
    /// `deg p_{1,1} ≥ deg p_{1,j}` fails.
    LeadingRow { j: usize },
    /// `deg p_{1,1} > deg p_{i,j}` fails.
    LowerRow { i: usize, j: usize },
    /// `deg(p_{1,1} − p_{1,j}) > deg(p_{i,1} − p_{i,j})` fails.
    Difference { i: usize, j: usize },
    /// Maximum degree 1 with more than one nonzero entry.
    DegreeOne { nonzero: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiceReport {
    pub nice: bool,
    pub failure: Option<NiceFailure>,
}

fn deg(p: &RealPolynomial) -> Option<usize> {
    p.degree()
}

/// Checks the three degree conditions and the maximum-degree-1 clause.
pub fn is_nice(fam: &PolyFamily) -> Result<NiceReport> {
    if let Some(p) = fam.grid.iter().flatten().find(|p| !p.has_integer_coeffs()) {
        return Err(LabError::InvalidInput(format!("nice families need integer coefficients, got {:?}", p)));
    }
    let g = &fam.grid;
    let fail = |f| Ok(NiceReport { nice: false, failure: Some(f) });
    let d11 = deg(&g[0][0]);
    for j in 0..fam.m() {
        if d11 < deg(&g[0][j]) {
            return fail(NiceFailure::LeadingRow { j });
        }
    }
    for i in 1..fam.ell() {
        for j in 0..fam.m() {
            if d11 <= deg(&g[i][j]) {
                return fail(NiceFailure::LowerRow { i, j });
            }
        }
    }
    for i in 1..fam.ell() {
        for j in 1..fam.m() {
            if deg(&g[0][0].sub(&g[0][j])?) <= deg(&g[i][0].sub(&g[i][j])?) {
                return fail(NiceFailure::Difference { i, j });
            }
        }
    }
    if fam.max_degree() == Some(1) {
        let nonzero = g.iter().flatten().filter(|p| !p.is_zero()).count();
        if nonzero > 1 {
            return fail(NiceFailure::DegreeOne { nonzero });
        }
    }
    Ok(NiceReport { nice: true, failure: None })
}

/// Vectorizes and applies [`is_nice`].
pub fn is_r_nice(fam: &PolyFamily) -> Result<NiceReport> {
    is_nice(&vectorize(fam)?.family)
}

/// Polynomial in `n, h₁, h₂, …` with rational coefficients. Exponent vectors
/// carry no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MPoly {
    terms: BTreeMap<Vec<u32>, BigRational>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

impl MPoly {
    pub fn from_real(p: &RealPolynomial) -> Self {
        let mut q = MPoly::default();
        for (i, c) in p.coeffs().iter().enumerate() {
            q.add_term(trim(vec![i as u32]), c.to_rational());
        }
        q
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, o: &MPoly) -> MPoly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), -c.clone());
        }
        r
    }

    /// Degree in `n`, `None` for the zero polynomial.
    pub fn deg_n(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.first().copied().unwrap_or(0)).max()
    }

    /// Coefficient of `n^d`, a polynomial in the `h` variables.
    pub fn lead_at(&self, d: u32) -> MPoly {
        let mut r = MPoly::default();
        for (e, c) in &self.terms {
            if e.first().copied().unwrap_or(0) == d {
                let mut ne = e.clone();
                if !ne.is_empty() {
                    ne[0] = 0;
                }
                r.add_term(trim(ne), c.clone());
            }
        }
        r
    }

    /// Substitutes `n ↦ n + h_v`.
    pub fn shift_n(&self, v: usize) -> MPoly {
        let mut r = MPoly::default();
        for (e, c) in &self.terms {
            let a = e.first().copied().unwrap_or(0);
            for k in 0..=a {
                let mut ne = e.clone();
                if ne.len() <= v {
                    ne.resize(v + 1, 0);
                }
                ne[0] = a - k;
                ne[v] += k;
                r.add_term(trim(ne), c * BigRational::from_integer(binomial(a, k)));
            }
        }
        r
    }
}

fn fmt_coeff(c: &BigRational) -> String {
    if c.denom().bits() <= 20 {
        if c.is_integer() {
            c.numer().to_string()
        } else {
            format!("{}/{}", c.numer(), c.denom())
        }
    } else {
        format!("{:.6}", c.to_f64().unwrap_or(f64::NAN))
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            if !first {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            } else if neg {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(v, &p)| {
                    let name = if v == 0 { "n".to_string() } else { format!("h{}", v) };
                    if p == 1 {
                        name
                    } else {
                        format!("{}^{}", name, p)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", fmt_coeff(&a))?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_coeff(&a), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// One `ℓ`-tuple of symbolic polynomials.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Entry(Vec<MPoly>);

impl Entry {
    fn deg(&self) -> Option<u32> {
        self.0.iter().filter_map(|p| p.deg_n()).max()
    }

    fn is_constant(&self) -> bool {
        self.deg().unwrap_or(0) == 0
    }

    fn sub(&self, o: &Entry) -> Entry {
        Entry(self.0.iter().zip(&o.0).map(|(a, b)| a.sub(b)).collect())
    }

    fn shift_n(&self, v: usize) -> Entry {
        Entry(self.0.iter().map(|p| p.shift_n(v)).collect())
    }

    /// First transformation whose component attains the degree.
    fn leader(&self) -> usize {
        let d = self.deg();
        self.0.iter().position(|p| p.deg_n() == d).unwrap_or(0)
    }

    fn render(&self) -> String {
        format!("({})", self.0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))
    }
}

/// Groups entries into equivalence classes; returns class index per entry.
/// Two entries are equivalent exactly when they share the degree and the
/// coefficient of `n^deg` in every component.
fn classes(entries: &[Entry]) -> Vec<usize> {
    let mut keys: std::collections::HashMap<(Option<u32>, Vec<MPoly>), usize> = std::collections::HashMap::new();
    entries
        .iter()
        .map(|e| {
            let d = e.deg();
            let key = (d, e.0.iter().map(|p| p.lead_at(d.unwrap_or(0))).collect());
            let next = keys.len();
            *keys.entry(key).or_insert(next)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightItem {
    pub degree: u32,
    pub transformation: usize,
    pub classes: usize,
}

/// Class counts keyed by `(degree, leading transformation)`, highest degree first.
fn weight(entries: &[Entry], cls: &[usize]) -> Vec<WeightItem> {
    let mut seen = BTreeSet::new();
    let mut counts: BTreeMap<(std::cmp::Reverse<u32>, usize), usize> = BTreeMap::new();
    for (e, &c) in entries.iter().zip(cls) {
        if seen.insert(c) {
            *counts.entry((std::cmp::Reverse(e.deg().unwrap_or(0)), e.leader())).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((d, t), c)| WeightItem { degree: d.0, transformation: t, classes: c })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetStep {
    pub family: Vec<String>,
    pub weight: Vec<WeightItem>,
    pub pivot: String,
    pub pivot_degree: u32,
    pub pivot_transformation: usize,
    pub result: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetTrace {
    pub steps: Vec<PetStep>,
    pub depth: usize,
    pub k_estimate: usize,
    /// False when the depth or size guard stopped the reduction.
    pub completed: bool,
    pub final_family: Vec<String>,
}

impl PetTrace {
    pub fn into_result(self) -> Result<PetTrace> {
        if self.completed {
            Ok(self)
        } else {
            Err(LabError::DepthGuard(self.depth))
        }
    }
}

/// Default bound on reduction steps.
pub const DEFAULT_MAX_DEPTH: usize = 64;
/// Bound on family size during the reduction.
pub const MAX_FAMILY: usize = 1 << 10;

/// Repeated van der Corput substitution until only constants remain.
pub fn pet_reduce(fam: &PolyFamily, max_depth: usize) -> Result<PetTrace> {
    let mut entries: Vec<Entry> = (0..fam.m())
        .map(|j| Entry(fam.grid.iter().map(|row| MPoly::from_real(&row[j])).collect()))
        .filter(|e| !e.is_constant())
        .collect();
    entries.sort();
    entries.dedup();
    if entries.is_empty() {
        return Err(LabError::InvalidInput("family needs a nonconstant entry".into()));
    }
    let mut steps = Vec::new();
    let mut var = 0;
    while !entries.is_empty() {
        if steps.len() >= max_depth || entries.len() > MAX_FAMILY {
            let depth = steps.len();
            return Ok(PetTrace {
                steps,
                depth,
                k_estimate: depth + 1,
                completed: false,
                final_family: entries.iter().map(Entry::render).collect(),
            });
        }
        let cls = classes(&entries);
        let w = weight(&entries, &cls);
        let dmin = entries.iter().filter_map(|e| e.deg()).min().unwrap_or(0);
        let mut freq = vec![0usize; fam.ell()];
        for e in &entries {
            freq[e.leader()] += 1;
        }
        let pivot = entries
            .iter()
            .filter(|e| e.deg() == Some(dmin))
            .max_by(|a, b| freq[a.leader()].cmp(&freq[b.leader()]).then(b.leader().cmp(&a.leader())).then(b.cmp(a)))
            .cloned()
            .unwrap();
        var += 1;
        let mut next: Vec<Entry> = entries
            .iter()
            .flat_map(|e| [e.shift_n(var).sub(&pivot), e.sub(&pivot)])
            .filter(|e| !e.is_constant())
            .collect();
        next.sort();
        next.dedup();
        steps.push(PetStep {
            family: entries.iter().map(Entry::render).collect(),
            weight: w,
            pivot: pivot.render(),
            pivot_degree: dmin,
            pivot_transformation: pivot.leader(),
            result: next.iter().map(Entry::render).collect(),
        });
        entries = next;
    }
    let depth = steps.len();
    Ok(PetTrace { steps, depth, k_estimate: depth + 1, completed: true, final_family: Vec::new() })
}

/// A sequence of vectors `v_n ∈ ℂ^D`, `n = start, start+1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorSequence {
    pub start: i64,
    pub dim: usize,
    /// Row-major, `dim` values per `n`.
    pub data: Vec<Complex64>,
}

impl VectorSequence {
    pub fn from_fn(start: i64, len: usize, dim: usize, f: impl Fn(i64, &mut [Complex64])) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); len * dim];
        for (k, chunk) in data.chunks_mut(dim).enumerate() {
            f(start + k as i64, chunk);
        }
        VectorSequence { start, dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn end(&self) -> i64 {
        self.start + self.len() as i64
    }

    fn at(&self, n: i64) -> &[Complex64] {
        let k = (n - self.start) as usize * self.dim;
        &self.data[k..k + self.dim]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    pub window: Window,
    pub h: usize,
    /// Max over the two window scales of `‖avg v_n‖²`.
    pub lhs: f64,
    /// `4 (1/H) Σ_{h=1}^{H} max_scales |avg ⟨v_{n+h}, v_n⟩|`.
    pub rhs: f64,
    pub margin: f64,
}

/// Truncated van der Corput inequality; the limsup over windows becomes a
/// max over the window and its first half.
pub fn vdc_numeric_check(v: &VectorSequence, window: Window, h: usize) -> Result<VdcReport> {
    if h == 0 || window.len() < 2 * h {
        return Err(LabError::InsufficientWindow(format!("window of {} is too short for H = {}", window.len(), h)));
    }
    if window.start < v.start || window.end + h as i64 > v.end() {
        return Err(LabError::InsufficientWindow(format!(
            "samples on [{}, {}) are needed, have [{}, {})",
            window.start,
            window.end + h as i64,
            v.start,
            v.end()
        )));
    }
    let scales = [Window { start: window.start, end: window.start + window.len() as i64 / 2 }, window];
    let lhs = scales
        .iter()
        .map(|w| {
            let s = reduce::sum_real_vec(w.len(), 2 * v.dim, |i, acc| {
                for (d, x) in v.at(w.start + i as i64).iter().enumerate() {
                    acc[2 * d] += x.re;
                    acc[2 * d + 1] += x.im;
                }
            });
            let l = w.len() as f64;
            s.iter().map(|c| (c / l) * (c / l)).sum::<f64>()
        })
        .fold(0.0, f64::max);
    let per_h: Vec<f64> = (1..=h)
        .into_par_iter()
        .map(|hh| {
            scales
                .iter()
                .map(|w| {
                    let s = reduce::sum_complex(w.len(), |i| {
                        let n = w.start + i as i64;
                        v.at(n + hh as i64).iter().zip(v.at(n)).map(|(a, b)| a * b.conj()).sum::<Complex64>()
                    });
                    (s / w.len() as f64).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let rhs = 4.0 * reduce::sum_real(h, |i| per_h[i]) / h as f64;
    Ok(VdcReport { window, h, lhs, rhs, margin: rhs - lhs })
}
