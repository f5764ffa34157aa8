//! Integer-part polynomial correlation sequences
//! `a(n) = ∫ f₀ · ∏_j (∏_i T_i^{[p_{i,j}(n)]}) f_j dμ`
//! and their uniform Cesàro averages.
//!
//! Averages are represented by an [`AverageOperator`]: the distinct tuples of
//! composite maps `S_j(n) = ∏_i T_i^{[p_{i,j}(n)]}` met along a window,
//! with integer multiplicities. Differences of averages over two windows are
//! formed from the exact integer weights `c₁W₂ − c₂W₁`, so periodic systems
//! give exactly zero differences past whole periods.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::poly::{RealPolynomial, Window};
use crate::reduce;
use crate::systems::{CommutingSystem, Observable, Route, SampledFunction, Sampler, Spectrum, StatePoint, Transformation};

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSpec {
    pub system: CommutingSystem,
    /// `iterates[i][j] = p_{i,j}`, an `ℓ × m` grid.
    pub iterates: Vec<Vec<RealPolynomial>>,
    /// `f₀, …, f_m`.
    pub observables: Vec<Observable>,
}

impl CorrelationSpec {
    pub fn new(system: CommutingSystem, iterates: Vec<Vec<RealPolynomial>>, observables: Vec<Observable>) -> Result<Self> {
        let ell = system.ell();
        if iterates.len() != ell {
            return Err(LabError::Mismatch(format!("{} iterate rows for {} transformations", iterates.len(), ell)));
        }
        let m = observables.len().checked_sub(1).ok_or_else(|| LabError::InvalidInput("need f₀".into()))?;
        if iterates.iter().any(|r| r.len() != m) {
            return Err(LabError::Mismatch(format!("every iterate row needs {} entries", m)));
        }
        let observables: Vec<Observable> = observables.into_iter().map(Observable::normalized).collect();
        for f in &observables {
            f.check(&system.space)?;
        }
        Ok(CorrelationSpec { system, iterates, observables })
    }

    pub fn ell(&self) -> usize {
        self.iterates.len()
    }

    pub fn m(&self) -> usize {
        self.observables.len() - 1
    }

    /// `[p_{i,j}(n)]` for all `i, j`.
    pub fn exponents(&self, n: i64) -> Result<Vec<Vec<i128>>> {
        self.iterates
            .iter()
            .map(|row| row.iter().map(|p| p.eval_floor(n as i128)).collect())
            .collect()
    }

    /// `S_j(n) = ∏_i T_i^{[p_{i,j}(n)]}` for `j = 1..m`.
    pub fn maps_at(&self, n: i64) -> Result<Vec<Transformation>> {
        let ex = self.exponents(n)?;
        let space = &self.system.space;
        (0..self.m())
            .map(|j| {
                let mut acc = Transformation::identity(space);
                for (i, t) in self.system.transformations.iter().enumerate() {
                    if ex[i][j] != 0 {
                        acc = acc.compose(&t.power(ex[i][j])?);
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// Same spec with every iterate replaced by `p(t + h)`.
    pub fn shifted(&self, h: i64) -> Result<Self> {
        let iterates = self
            .iterates
            .iter()
            .map(|r| r.iter().map(|p| p.shift(h)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationSpec { iterates, ..self.clone() })
    }

    pub(crate) fn check_window(&self, w: &Window) -> Result<()> {
        let max_n = w.start.unsigned_abs().max(w.end.unsigned_abs()) as u128;
        for p in self.iterates.iter().flatten() {
            p.check_headroom(max_n)?;
        }
        Ok(())
    }

    fn spectra(&self, skip_f0: bool) -> Option<Vec<Spectrum>> {
        let start = skip_f0 as usize;
        self.observables[start..].iter().map(|f| f.spectrum(&self.system.space)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSample {
    pub window: Window,
    pub values: Vec<Complex64>,
    pub route: Route,
}

impl SequenceSample {
    pub fn from_fn(window: Window, f: impl Fn(i64) -> Complex64) -> Self {
        SequenceSample { window, values: (window.start..window.end).map(f).collect(), route: Route::Enumerated }
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        if n < self.window.start || n >= self.window.end {
            return None;
        }
        Some(self.values[(n - self.window.start) as usize])
    }

    /// Values for a sub-window.
    pub fn slice(&self, w: &Window) -> Result<&[Complex64]> {
        if w.start < self.window.start || w.end > self.window.end {
            return Err(LabError::InsufficientWindow(format!(
                "[{}, {}) is not inside the sample [{}, {})",
                w.start, w.end, self.window.start, self.window.end
            )));
        }
        let lo = (w.start - self.window.start) as usize;
        Ok(&self.values[lo..lo + w.len()])
    }

    pub fn mean(&self) -> Complex64 {
        reduce::sum_complex(self.values.len(), |i| self.values[i]) / self.values.len().max(1) as f64
    }

    /// CSV with columns `n, re, im`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| LabError::Io(e.to_string()))?;
        w.write_record(["n", "re", "im"]).map_err(|e| LabError::Io(e.to_string()))?;
        for (i, v) in self.values.iter().enumerate() {
            let n = self.window.start + i as i64;
            w.write_record([n.to_string(), v.re.to_string(), v.im.to_string()])
                .map_err(|e| LabError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample_points(system: &CommutingSystem) -> Result<Vec<StatePoint>> {
    if system.space.is_finite() {
        Sampler::Enumerate.points(&system.space)
    } else {
        system.points()
    }
}

/// Evaluates the correlation integral for arbitrary integer exponents.
pub struct CorrEvaluator<'a> {
    spec: &'a CorrelationSpec,
    spectra: Option<Vec<Spectrum>>,
    points: Vec<StatePoint>,
    moduli: Vec<crate::systems::Modulus>,
}

impl<'a> CorrEvaluator<'a> {
    pub fn new(spec: &'a CorrelationSpec) -> Result<Self> {
        let spectra = spec.spectra(false);
        let points = if spectra.is_some() { Vec::new() } else { sample_points(&spec.system)? };
        Ok(CorrEvaluator { spec, spectra, points, moduli: spec.system.space.moduli() })
    }

    pub fn route(&self) -> Route {
        if self.spectra.is_some() {
            Route::Spectral
        } else if self.spec.system.space.is_finite() {
            Route::Enumerated
        } else {
            Route::Sampled
        }
    }

    /// `S_j = ∏_i T_i^{ex[i][j]}`.
    pub fn maps(&self, ex: &[Vec<i128>]) -> Result<Vec<Transformation>> {
        let space = &self.spec.system.space;
        (0..self.spec.m())
            .map(|j| {
                let mut acc = Transformation::identity(space);
                for (i, t) in self.spec.system.transformations.iter().enumerate() {
                    if ex[i][j] != 0 {
                        acc = acc.compose(&t.power(ex[i][j])?);
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// `∫ f₀ · ∏_j f_j ∘ S_j dμ`.
    pub fn value_for_maps(&self, maps: &[Transformation]) -> Complex64 {
        let moduli = &self.moduli;
        if let Some(spectra) = &self.spectra {
            let mut acc = spectra[0].clone();
            for (s, t) in spectra[1..].iter().zip(maps) {
                acc = acc.mul(&s.push(t, moduli), moduli);
            }
            return acc.mean();
        }
        let space = &self.spec.system.space;
        let mut y = vec![0u64; space.dim()];
        let mut s = Complex64::new(0.0, 0.0);
        for x in &self.points {
            let mut v = self.spec.observables[0].eval_with(space, moduli, &x.0);
            for (f, t) in self.spec.observables[1..].iter().zip(maps) {
                t.apply_into(&x.0, &mut y);
                v *= f.eval_with(space, moduli, &y);
            }
            s += v;
        }
        s / self.points.len() as f64
    }

    pub fn value(&self, ex: &[Vec<i128>]) -> Result<Complex64> {
        Ok(self.value_for_maps(&self.maps(ex)?))
    }
}

/// Evaluates `a(n)` on the window.
pub fn corr_seq(spec: &CorrelationSpec, window: Window) -> Result<SequenceSample> {
    spec.check_window(&window)?;
    let ev = CorrEvaluator::new(spec)?;
    let values = (window.start..window.end)
        .into_par_iter()
        .map(|n| ev.value(&spec.exponents(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceSample { window, values, route: ev.route() })
}

/// `(1/W) Σ_n ∏_j f_j ∘ S_j(n)` as a weighted list of distinct map tuples.
#[derive(Clone, Debug)]
pub struct AverageOperator {
    pub window: Window,
    pub tuples: Vec<Vec<Transformation>>,
    pub counts: Vec<u64>,
}

impl AverageOperator {
    pub fn new(spec: &CorrelationSpec, window: Window) -> Result<Self> {
        spec.check_window(&window)?;
        let maps: Vec<Vec<Transformation>> =
            (window.start..window.end).into_par_iter().map(|n| spec.maps_at(n)).collect::<Result<_>>()?;
        let mut index: HashMap<Vec<Transformation>, usize> = HashMap::new();
        let mut tuples = Vec::new();
        let mut counts = Vec::new();
        for m in maps {
            match index.get(&m) {
                Some(&i) => counts[i] += 1,
                None => {
                    index.insert(m.clone(), tuples.len());
                    tuples.push(m);
                    counts.push(1);
                }
            }
        }
        Ok(AverageOperator { window, tuples, counts })
    }

    pub fn total(&self) -> u64 {
        self.window.len() as u64
    }
}

/// Weighted tuples representing `A_W − A_V` (or `A_W` alone).
struct WeightedTuples<'a> {
    items: Vec<(&'a [Transformation], f64)>,
}

impl<'a> WeightedTuples<'a> {
    fn single(op: &'a AverageOperator) -> Self {
        let w = op.total() as f64;
        WeightedTuples { items: op.tuples.iter().zip(&op.counts).map(|(t, &c)| (t.as_slice(), c as f64 / w)).collect() }
    }

    fn difference(a: &'a AverageOperator, b: &'a AverageOperator) -> Self {
        let (wa, wb) = (a.total() as i128, b.total() as i128);
        let den = (wa * wb) as f64;
        let mut merged: Vec<(&'a [Transformation], i128)> = Vec::new();
        let mut index: HashMap<&'a [Transformation], usize> = HashMap::new();
        for (t, &c) in a.tuples.iter().zip(&a.counts) {
            index.insert(t.as_slice(), merged.len());
            merged.push((t.as_slice(), c as i128 * wb));
        }
        for (t, &c) in b.tuples.iter().zip(&b.counts) {
            match index.get(t.as_slice()) {
                Some(&i) => merged[i].1 -= c as i128 * wa,
                None => {
                    index.insert(t.as_slice(), merged.len());
                    merged.push((t.as_slice(), -(c as i128) * wa));
                }
            }
        }
        WeightedTuples { items: merged.into_iter().filter(|(_, w)| *w != 0).map(|(t, w)| (t, w as f64 / den)).collect() }
    }

    fn spectrum(&self, spectra: &[Spectrum], moduli: &[crate::systems::Modulus], dim: usize) -> Spectrum {
        let mut acc = Spectrum::default();
        for (maps, w) in &self.items {
            let mut prod = Spectrum::constant(dim, Complex64::new(*w, 0.0));
            for (s, t) in spectra.iter().zip(maps.iter()) {
                prod = prod.mul(&s.push(t, moduli), moduli);
            }
            acc.add(&prod);
        }
        acc
    }

    fn evaluate(&self, spec: &CorrelationSpec, points: &[StatePoint]) -> Vec<Complex64> {
        let space = &spec.system.space;
        let moduli = space.moduli();
        points
            .par_iter()
            .map(|x| {
                let mut y = vec![0u64; space.dim()];
                let mut acc = Complex64::new(0.0, 0.0);
                for (maps, w) in &self.items {
                    let mut v = Complex64::new(*w, 0.0);
                    for (f, t) in spec.observables[1..].iter().zip(maps.iter()) {
                        t.apply_into(&x.0, &mut y);
                        v *= f.eval_with(space, &moduli, &y);
                    }
                    acc += v;
                }
                acc
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Estimate {
    /// Best available value: the Fourier norm when the observables have a
    /// finite expansion, the exact norm on finite spaces, the sample norm otherwise.
    pub value: f64,
    pub std_error: f64,
    /// Norm over the sampler's points.
    pub sampled: f64,
    /// Parseval norm of the averaged Fourier expansion.
    pub fourier: Option<f64>,
    pub samples: usize,
    pub seed: Option<u64>,
}

fn l2_of(spec: &CorrelationSpec, wt: &WeightedTuples) -> Result<(SampledFunction, L2Estimate)> {
    let space = &spec.system.space;
    let moduli = space.moduli();
    let fourier = spec.spectra(true).map(|sp| wt.spectrum(&sp, &moduli, space.dim()).l2_norm());
    let points = spec.system.points()?;
    let values = wt.evaluate(spec, &points);
    let f = SampledFunction { points, values };
    let n = f.values.len();
    let sampled = f.l2_norm();
    let m4 = reduce::sum_real(n, |i| f.values[i].norm_sqr().powi(2)) / n.max(1) as f64;
    let var = (m4 - sampled.powi(4)).max(0.0);
    // delta method for the square root of a mean
    let se = if sampled > 0.0 && n > 1 { (var / (n - 1) as f64).sqrt() / (2.0 * sampled) } else { 0.0 };
    let exact_points = matches!(spec.system.sampler, Sampler::Enumerate);
    let (value, std_error) = match fourier {
        Some(v) => (v, 0.0),
        None if exact_points => (sampled, 0.0),
        None => (sampled, se),
    };
    let est = L2Estimate { value, std_error, sampled, fourier, samples: n, seed: spec.system.sampler.seed() };
    Ok((f, est))
}

/// The averaged function `(1/(N−M)) Σ_n ∏_{j≥1} f_j ∘ S_j(n)` and its L² norm.
pub fn multi_average(spec: &CorrelationSpec, window: Window) -> Result<(SampledFunction, L2Estimate)> {
    let op = AverageOperator::new(spec, window)?;
    l2_of(spec, &WeightedTuples::single(&op))
}

/// `‖A_W − A_V‖_{L²}` from two precomputed operators.
pub fn average_difference(spec: &CorrelationSpec, a: &AverageOperator, b: &AverageOperator) -> Result<L2Estimate> {
    l2_of(spec, &WeightedTuples::difference(a, b)).map(|r| r.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFamily {
    pub windows: Vec<Window>,
}

impl WindowFamily {
    pub fn new(windows: Vec<Window>) -> Result<Self> {
        if windows.len() < 3 {
            return Err(LabError::InvalidInput("window family needs at least 3 windows".into()));
        }
        if windows.windows(2).any(|p| p[1].len() <= p[0].len()) {
            return Err(LabError::InvalidInput("window lengths must strictly increase".into()));
        }
        Ok(WindowFamily { windows })
    }

    /// `[start, start + base·2^k)` for `k < count`.
    pub fn doubling(start: i64, base: i64, count: usize) -> Result<Self> {
        WindowFamily::new((0..count).map(|k| Window { start, end: start + (base << k) }).collect())
    }

    pub fn largest(&self) -> Window {
        *self.windows.last().expect("nonempty family")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSeminorm {
    /// Estimate of `limsup (1/(N−M)) Σ |a(n)|²`.
    pub norm_sq: f64,
    pub norm: f64,
    /// Shift-maximized mean of `|a|²` for each of the two largest windows.
    pub per_window: Vec<(Window, f64)>,
}

/// Default shifts of a window of length `W`: `0, W/2, W, 2W`.
pub fn default_shifts(len: i64) -> Vec<i64> {
    vec![0, len / 2, len, 2 * len]
}

/// Uniform-density seminorm `‖a‖₂` from the two largest windows of a family,
/// each maximized over the default shifts of its start.
pub fn uniform_seminorm(a: &(dyn Fn(i64) -> Complex64 + Sync), family: &WindowFamily) -> UniformSeminorm {
    let k = family.windows.len();
    let per_window: Vec<(Window, f64)> = family.windows[k - 2..]
        .iter()
        .map(|w| {
            let best = default_shifts(w.len() as i64)
                .into_iter()
                .map(|s| {
                    let ws = w.shifted(s);
                    reduce::sum_real(ws.len(), |i| a(ws.start + i as i64).norm_sqr()) / ws.len() as f64
                })
                .fold(0.0, f64::max);
            (*w, best)
        })
        .collect();
    let norm_sq = per_window.iter().map(|p| p.1).fold(0.0, f64::max);
    UniformSeminorm { norm_sq, norm: norm_sq.sqrt(), per_window }
}

/// [`uniform_seminorm`] for a stored sample; every shifted window must lie
/// inside it.
pub fn uniform_seminorm_sample(a: &SequenceSample, family: &WindowFamily) -> Result<UniformSeminorm> {
    let k = family.windows.len();
    for w in &family.windows[k - 2..] {
        let far = w.shifted(2 * w.len() as i64);
        a.slice(&Window { start: w.start, end: far.end })?;
    }
    Ok(uniform_seminorm(&|n| a.get(n).expect("checked above"), family))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub from: Window,
    pub to: Window,
    pub diff_l2: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
    pub tolerance: f64,
    /// The last two differences are below tolerance.
    pub converged: bool,
    /// Differences never increase along the ladder (up to the sampling error).
    pub monotone: bool,
}

/// `‖A_{W_{k+1}} − A_{W_k}‖_{L²}` along a ladder of at least four windows.
pub fn cauchy_report(spec: &CorrelationSpec, ladder: &WindowFamily, tolerance: f64) -> Result<CauchyReport> {
    if ladder.windows.len() < 4 {
        return Err(LabError::InvalidInput("Cauchy ladder needs at least 4 windows".into()));
    }
    let ops: Vec<AverageOperator> =
        ladder.windows.iter().map(|w| AverageOperator::new(spec, *w)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for k in 0..ops.len() - 1 {
        let est = average_difference(spec, &ops[k + 1], &ops[k])?;
        rows.push(CauchyRow { from: ops[k].window, to: ops[k + 1].window, diff_l2: est.value, std_error: est.std_error });
    }
    let tail = &rows[rows.len() - 2..];
    let converged = tail.iter().all(|r| r.diff_l2 <= tolerance);
    let monotone = rows.windows(2).all(|p| p[1].diff_l2 <= p[0].diff_l2 + 3.0 * (p[0].std_error + p[1].std_error) + 1e-12);
    Ok(CauchyReport { rows, tolerance, converged, monotone })
}

/// Writes a serializable value as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let s = serde_json::to_string_pretty(value).map_err(|e| LabError::Io(e.to_string()))?;
    f.write_all(s.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
