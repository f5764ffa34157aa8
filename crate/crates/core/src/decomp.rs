//! Nil + nul decomposition by least squares against explicit nilsequence
//! bases, with the time-averaged inner product
//! `⟨f, g⟩ = (1/W) Σ_n f(n) ḡ(n)` on a window.
//!
//! Certification is for the given basis ladder only: "residual ≤ ε for this
//! basis", not the existential statement.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::SequenceSample;
use crate::error::{LabError, Result};
use crate::nil::{NilBasis, Nilsequence};
use crate::poly::Window;
use crate::reduce::CHUNK;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

enum Member<'a> {
    Pure(u64),
    Table(Vec<Complex64>),
    Direct(&'a Nilsequence),
}

impl Member<'_> {
    fn at(&self, i: usize, n: i64) -> Complex64 {
        match self {
            Member::Pure(t) => phase_e(t.wrapping_mul(n as u64)),
            Member::Table(v) => v[i],
            Member::Direct(s) => s.eval(n).unwrap_or(ZERO),
        }
    }
}

fn phase_e(bits: u64) -> Complex64 {
    let x = bits as f64 * std::f64::consts::TAU / 18446744073709551616.0;
    Complex64::new(x.cos(), x.sin())
}

fn prepare(basis: &NilBasis, window: Window) -> Result<Vec<Member<'_>>> {
    basis
        .members
        .iter()
        .map(|m| {
            if let Some(t) = m.pure_frequency() {
                return Ok(Member::Pure(t));
            }
            match m {
                Nilsequence::Correlation { .. } => Ok(Member::Table(m.sample(window)?)),
                Nilsequence::Heisenberg { g, .. } => {
                    // surface pow/headroom failures now rather than per point
                    g.pow(window.end as i128)?;
                    g.pow(window.start as i128)?;
                    Ok(Member::Direct(m))
                }
                _ => Ok(Member::Direct(m)),
            }
        })
        .collect()
}

/// `(1/W) Σ_{n ∈ window} e(nφ)` in closed form.
pub fn geometric_mean(phi: u64, window: Window) -> Complex64 {
    if phi == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let w = window.len() as i128;
    let fs = phi as i64 as i128;
    // phase φ(2s + W − 1)/2 and sin(πWφ)/sin(πφ)
    let num = fs * (2 * window.start as i128 + w - 1);
    let ph = num.rem_euclid(1i128 << 65) as f64 / 2f64.powi(65);
    // W·φ mod 2, taken in [−1, 1) so small arguments keep their precision
    let mut r = (w * fs).rem_euclid(1i128 << 65);
    if r >= 1i128 << 64 {
        r -= 1i128 << 65;
    }
    let wx = r as f64 / 2f64.powi(64);
    let f = fs as f64 / 2f64.powi(64);
    let pi = std::f64::consts::PI;
    let ratio = (pi * wx).sin() / (w as f64 * (pi * f).sin());
    Complex64::from_polar(ratio, std::f64::consts::TAU * ph)
}

/// Streams `Σ_n v(n) ψ_j(n)^*` and, when asked, `Σ_n ψ_j ψ_k^*`, chunk by chunk.
fn stream(
    members: &[Member],
    window: Window,
    v: Option<&[Complex64]>,
    with_gram: bool,
) -> (Vec<Complex64>, Option<DMatrix<Complex64>>) {
    let size = members.len();
    let w = window.len();
    let chunks = w.div_ceil(CHUNK);
    let parts: Vec<(Vec<Complex64>, Option<DMatrix<Complex64>>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(w);
            let mut vals = DMatrix::<Complex64>::zeros(size, hi - lo);
            for i in lo..hi {
                let n = window.start + i as i64;
                for (j, m) in members.iter().enumerate() {
                    vals[(j, i - lo)] = m.at(i, n);
                }
            }
            let mut b = vec![ZERO; size];
            if let Some(v) = v {
                for (j, bj) in b.iter_mut().enumerate() {
                    *bj = (lo..hi).map(|i| v[i] * vals[(j, i - lo)].conj()).sum();
                }
            }
            // normal matrix entry (j, k) is ⟨ψ_k, ψ_j⟩
            let g = with_gram.then(|| vals.conjugate() * vals.transpose());
            (b, g)
        })
        .collect();
    // pairwise tree over chunk partials
    let mut level = parts;
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|p| {
                if p.len() == 1 {
                    return p[0].clone();
                }
                let b = p[0].0.iter().zip(&p[1].0).map(|(x, y)| x + y).collect();
                let g = match (&p[0].1, &p[1].1) {
                    (Some(a), Some(c)) => Some(a + c),
                    _ => None,
                };
                (b, g)
            })
            .collect();
    }
    let (mut b, g) = level.pop().unwrap_or((vec![ZERO; size], with_gram.then(|| DMatrix::zeros(size, size))));
    let wf = w as f64;
    b.iter_mut().for_each(|x| *x /= wf);
    (b, g.map(|g| g / Complex64::new(wf, 0.0)))
}

fn synthesize(members: &[Member], coeffs: &[Complex64], window: Window) -> Vec<Complex64> {
    (0..window.len())
        .into_par_iter()
        .map(|i| {
            let n = window.start + i as i64;
            members.iter().zip(coeffs).map(|(m, c)| c * m.at(i, n)).sum()
        })
        .collect()
}

fn mean_sq(v: &[Complex64]) -> f64 {
    crate::reduce::sum_real(v.len(), |i| v[i].norm_sqr()) / v.len().max(1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramProjection {
    pub window: Window,
    pub labels: Vec<String>,
    /// Row-major Hermitian normal matrix, entry `(j, k) = ⟨ψ_k, ψ_j⟩`.
    pub gram: Vec<Vec<Complex64>>,
    pub closed_form_gram: bool,
    pub rhs: Vec<Complex64>,
    pub coefficients: Vec<Complex64>,
    /// Ridge added after a failed Cholesky factorisation.
    pub ridge: Option<f64>,
    /// Max coefficient change of the ridge solution against the SVD solution.
    pub ridge_shift: f64,
    /// Set when the ridge moved a coefficient by more than `1e-6`.
    pub ridge_flagged: bool,
    #[serde(skip)]
    pub values: Vec<Complex64>,
    #[serde(skip)]
    pub nil_part: Vec<Complex64>,
    #[serde(skip)]
    pub residual: Vec<Complex64>,
    /// `sqrt((1/W) Σ |e(n)|²)`.
    pub residual_norm: f64,
    pub residual_mean_sq: f64,
    /// `|⟨e, ψ_j⟩|` computed directly from `e`.
    pub margins: Vec<f64>,
}

fn to_rows(g: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect()).collect()
}

/// Least-squares projection of `a` onto the span of `basis` on the window.
pub fn gram_project(a: &SequenceSample, basis: &NilBasis, window: Window) -> Result<GramProjection> {
    let values = a.slice(&window)?.to_vec();
    let size = basis.len();
    if window.len() < 10 * size.max(1) {
        return Err(LabError::InsufficientWindow(format!(
            "window of {} is shorter than 10 × basis size {}",
            window.len(),
            size
        )));
    }
    let members = prepare(basis, window)?;
    let pure: Option<Vec<u64>> = members
        .iter()
        .map(|m| match m {
            Member::Pure(t) => Some(*t),
            _ => None,
        })
        .collect();
    let (rhs, g_streamed) = stream(&members, window, Some(&values), pure.is_none());
    let gram = match &pure {
        Some(th) => DMatrix::from_fn(size, size, |j, k| geometric_mean(th[k].wrapping_sub(th[j]), window)),
        None => g_streamed.unwrap(),
    };
    let b = DVector::from_vec(rhs.clone());
    let (coefficients, ridge, ridge_shift) = if size == 0 {
        (Vec::new(), None, 0.0)
    } else if let Some(ch) = gram.clone().cholesky() {
        (ch.solve(&b).iter().copied().collect(), None, 0.0)
    } else {
        let trace: f64 = (0..size).map(|i| gram[(i, i)].re).sum();
        let lambda = 1e-8 * (trace / size as f64).max(f64::EPSILON);
        let reg = &gram + DMatrix::<Complex64>::identity(size, size) * Complex64::new(lambda, 0.0);
        let c = reg
            .cholesky()
            .ok_or_else(|| LabError::InvalidInput("Gram matrix is not positive semidefinite".into()))?
            .solve(&b);
        let svd = gram.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let cs = svd.solve(&b, eps).map_err(|e| LabError::InvalidInput(e.to_string()))?;
        let shift = c.iter().zip(cs.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        (c.iter().copied().collect(), Some(lambda), shift)
    };
    let nil_part = synthesize(&members, &coefficients, window);
    let residual: Vec<Complex64> = values.iter().zip(&nil_part).map(|(x, y)| x - y).collect();
    let (dots, _) = stream(&members, window, Some(&residual), false);
    let residual_mean_sq = mean_sq(&residual);
    Ok(GramProjection {
        window,
        labels: basis.labels.clone(),
        gram: to_rows(&gram),
        closed_form_gram: pure.is_some(),
        rhs,
        coefficients,
        ridge,
        ridge_shift,
        ridge_flagged: ridge_shift > 1e-6,
        values,
        nil_part,
        residual,
        residual_norm: residual_mean_sq.sqrt(),
        residual_mean_sq,
        margins: dots.iter().map(|d| d.norm()).collect(),
    })
}

/// `|⟨e, ψ_j⟩|` for every basis member.
pub fn residual_orthogonality(proj: &GramProjection) -> Vec<f64> {
    proj.margins.clone()
}

/// Normal-equation residual `|(G c − b)_j|`, the algebraic counterpart of the margins.
pub fn normal_equation_residual(proj: &GramProjection) -> Vec<f64> {
    proj.gram
        .iter()
        .zip(&proj.rhs)
        .map(|(row, b)| (row.iter().zip(&proj.coefficients).map(|(g, c)| g * c).sum::<Complex64>() - b).norm())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub index: usize,
    pub size: usize,
    pub residual_norm: f64,
    pub residual_mean_sq: f64,
    pub max_margin: f64,
    pub regularized: bool,
    pub ridge_flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub epsilon: f64,
    pub window: Window,
    pub rungs: Vec<LadderRung>,
    pub certified: bool,
    /// Smallest rung with `‖e‖₂ ≤ ε`.
    pub index: Option<usize>,
    /// Residual of the chosen rung (or the last one) before clamping.
    pub residual_norm: f64,
    /// Residual nonincreasing along the ladder, up to `1e-12`.
    pub monotone: bool,
    pub coefficients: Vec<Complex64>,
    pub labels: Vec<String>,
    pub margins: Vec<f64>,
    /// `max_n |𝒩(n)|` on the window before clamping.
    pub nil_sup_before: f64,
    /// Points where `𝒩(n)` was projected radially onto the unit disc.
    pub clamped_points: usize,
    /// `‖e‖₂` after clamping; never larger than `residual_norm` when `|a| ≤ 1`.
    pub clamped_residual_norm: f64,
    #[serde(skip)]
    pub nil_part: Vec<Complex64>,
    #[serde(skip)]
    pub residual: Vec<Complex64>,
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

impl DecompositionReport {
    /// CSV with columns `n, a_re, a_im, nil_re, nil_im, e_re, e_im`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| LabError::Io(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["n", "a_re", "a_im", "nil_re", "nil_im", "e_re", "e_im"]).map_err(io)?;
        for i in 0..self.values.len() {
            let (a, s, e) = (self.values[i], self.nil_part[i], self.residual[i]);
            let n = self.window.start + i as i64;
            w.write_record([n, 0, 0, 0, 0, 0, 0].iter().enumerate().map(|(k, _)| match k {
                0 => n.to_string(),
                1 => a.re.to_string(),
                2 => a.im.to_string(),
                3 => s.re.to_string(),
                4 => s.im.to_string(),
                5 => e.re.to_string(),
                _ => e.im.to_string(),
            }))
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Projects onto each basis of the ladder and certifies the first rung
/// with `‖e‖₂ ≤ ε`.
pub fn decompose(a: &SequenceSample, ladder: &[NilBasis], epsilon: f64, window: Window) -> Result<DecompositionReport> {
    if ladder.is_empty() {
        return Err(LabError::InvalidInput("ladder needs at least one basis".into()));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    let mut chosen: Option<GramProjection> = None;
    let mut last = None;
    for (index, basis) in ladder.iter().enumerate() {
        let p = gram_project(a, basis, window)?;
        rungs.push(LadderRung {
            index,
            size: basis.len(),
            residual_norm: p.residual_norm,
            residual_mean_sq: p.residual_mean_sq,
            max_margin: p.margins.iter().copied().fold(0.0, f64::max),
            regularized: p.ridge.is_some(),
            ridge_flagged: p.ridge_flagged,
        });
        if chosen.is_none() && p.residual_norm <= epsilon {
            chosen = Some(p);
        } else {
            last = Some(p);
        }
    }
    let monotone = rungs.windows(2).all(|w| w[1].residual_norm <= w[0].residual_norm + 1e-12);
    let certified = chosen.is_some();
    let index = chosen.as_ref().map(|_| rungs.iter().position(|r| r.residual_norm <= epsilon).unwrap());
    let p = chosen.or(last).unwrap();
    let nil_sup_before = p.nil_part.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut clamped_points = 0;
    let nil_part: Vec<Complex64> = p
        .nil_part
        .iter()
        .map(|&z| {
            let r = z.norm();
            if r > 1.0 {
                clamped_points += 1;
                z / r
            } else {
                z
            }
        })
        .collect();
    let residual: Vec<Complex64> = p.values.iter().zip(&nil_part).map(|(x, y)| x - y).collect();
    Ok(DecompositionReport {
        epsilon,
        window,
        rungs,
        certified,
        index,
        residual_norm: p.residual_norm,
        monotone,
        coefficients: p.coefficients.clone(),
        labels: p.labels.clone(),
        margins: p.margins.clone(),
        nil_sup_before,
        clamped_points,
        clamped_residual_norm: mean_sq(&residual).sqrt(),
        nil_part,
        residual,
        values: p.values,
    })
}
