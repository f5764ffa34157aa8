//! Uniformity seminorms of sequences and Host–Kra seminorms of functions.
//!
//! Both use the inductive form
//! `P_k(g) = lim_h P_{k−1}(g · conj(σ_h g))` with `‖g‖_k = P_k(g)^{1/2^k}`.
//! For sequences the base level is `|mean(g)|²`; for functions it is
//! `∫ |E(g | ℐ)|² dμ`, which on a finite space is computed from orbit means,
//! so every level is a sum of squares and exact zeros stay tiny.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::SequenceSample;
use crate::error::{LabError, Result};
use crate::poly::Window;
use crate::reduce;
use crate::systems::{
    permutation_period, CommutingSystem, Factor, Modulus, Observable, Sampler, Spectrum, StateSpace, Transformation,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqSeminormConfig {
    pub k: u32,
    /// Shifts `h = 1..=H` per level.
    pub h: usize,
    /// Window for the innermost means.
    pub window: Window,
}

impl SeqSeminormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(LabError::InvalidInput(format!("k must be in 1..=4, got {}", self.k)));
        }
        if self.h < 8 {
            return Err(LabError::InvalidInput(format!("H must be ≥ 8, got {}", self.h)));
        }
        Ok(())
    }
}

fn seq_level(b: &[Complex64], k: u32, h: usize, w: usize) -> f64 {
    if k == 1 {
        let m = reduce::sum_complex(w, |i| b[i]) / w as f64;
        return m.norm_sqr();
    }
    let inner = |s: usize| -> f64 {
        let len = b.len() - s;
        let d: Vec<Complex64> = (0..len).map(|n| b[n + s] * b[n].conj()).collect();
        seq_level(&d, k - 1, h, w)
    };
    if k == 2 {
        reduce::sum_real(h, |i| inner(i + 1)) / h as f64
    } else {
        let parts: Vec<f64> = (1..=h).into_par_iter().map(inner).collect();
        reduce::sum_real(parts.len(), |i| parts[i]) / h as f64
    }
}

/// Truncated `‖a‖_{I,k}` with `H` shifts per level.
pub fn seq_seminorm(a: &SequenceSample, cfg: &SeqSeminormConfig) -> Result<f64> {
    cfg.validate()?;
    let reach = (cfg.k as i64 - 1) * cfg.h as i64;
    let need = Window { start: cfg.window.start, end: cfg.window.end + reach };
    let b = a.slice(&need).map_err(|_| {
        LabError::InsufficientWindow(format!(
            "k = {}, H = {} needs samples on [{}, {})",
            cfg.k, cfg.h, need.start, need.end
        ))
    })?;
    let p = seq_level(b, cfg.k, cfg.h, cfg.window.len());
    Ok(p.max(0.0).powf(1.0 / (1u64 << cfg.k) as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HKSeminormConfig {
    pub k: u32,
    /// Truncation `N` for the sampled mode: each shift runs over `1..=N`.
    pub n: u64,
    /// Full-period sums on a finite space.
    pub exact: bool,
    /// Maximal number of elementary operations.
    pub budget: u128,
}

impl Default for HKSeminormConfig {
    fn default() -> Self {
        HKSeminormConfig { k: 2, n: 256, exact: true, budget: 2_000_000_000 }
    }
}

/// Exact `|||g|||_k` for a permutation system given by a table of values.
pub fn hk_exact_from_permutation(values: &[Complex64], perm: &[usize], k: u32, budget: u128) -> Result<f64> {
    if k == 0 {
        return Err(LabError::InvalidInput("k must be ≥ 1".into()));
    }
    let n = values.len();
    if perm.len() != n {
        return Err(LabError::Mismatch("permutation and table sizes differ".into()));
    }
    let period = permutation_period(perm)?;
    let needed = period.saturating_pow(k - 1).saturating_mul(n as u128).saturating_mul(1u128 << k);
    if needed > budget {
        return Err(LabError::Budget { what: format!("exact seminorm, k = {}", k), needed, budget });
    }
    let period = period as usize;
    // orbit labels
    let mut orbit = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if orbit[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut i = s;
        let mut len = 0;
        while orbit[i] == usize::MAX {
            orbit[i] = id;
            i = perm[i];
            len += 1;
        }
        sizes.push(len);
    }
    // pows[t][x] = T^t x
    let mut pows: Vec<Vec<usize>> = Vec::with_capacity(period);
    pows.push((0..n).collect());
    for t in 1..period {
        let prev = &pows[t - 1];
        pows.push(prev.iter().map(|&x| perm[x]).collect());
    }
    let ctx = ExactCtx { orbit: &orbit, sizes: &sizes, pows: &pows, n };
    let p = ctx.level(values, k);
    Ok(p.max(0.0).powf(1.0 / (1u64 << k) as f64))
}

struct ExactCtx<'a> {
    orbit: &'a [usize],
    sizes: &'a [usize],
    pows: &'a [Vec<usize>],
    n: usize,
}

impl ExactCtx<'_> {
    fn level(&self, g: &[Complex64], k: u32) -> f64 {
        if k == 1 {
            let mut sums = vec![Complex64::new(0.0, 0.0); self.sizes.len()];
            for (x, v) in g.iter().enumerate() {
                sums[self.orbit[x]] += v;
            }
            let tot: f64 = sums.iter().zip(self.sizes).map(|(s, &len)| s.norm_sqr() / len as f64).sum();
            return tot / self.n as f64;
        }
        let l = self.pows.len();
        let term = |t: usize| -> f64 {
            let p = &self.pows[t];
            let d: Vec<Complex64> = (0..self.n).map(|x| g[x] * g[p[x]].conj()).collect();
            self.level(&d, k - 1)
        };
        let parts: Vec<f64> = if k >= 3 { (0..l).into_par_iter().map(term).collect() } else { (0..l).map(term).collect() };
        parts.iter().sum::<f64>() / l as f64
    }
}

fn table_of(f: &Observable, space: &StateSpace) -> Result<Vec<Complex64>> {
    let n = space.size().ok_or_else(|| LabError::Mismatch("exact mode needs a finite space".into()))?;
    if n > (1 << 22) {
        return Err(LabError::Budget { what: "value table".into(), needed: n, budget: 1 << 22 });
    }
    f.check(space)?;
    let moduli = space.moduli();
    Ok((0..n).map(|i| f.eval_with(space, &moduli, &space.point(i).0)).collect())
}

fn spectral_level(g: &Spectrum, t: &Transformation, moduli: &[Modulus], k: u32, n: u64) -> f64 {
    // shifts n = 1..=N, maps T^n built incrementally
    let mut maps = Vec::with_capacity(n as usize);
    let mut cur = t.clone();
    for _ in 0..n {
        maps.push(cur.clone());
        cur = cur.compose(t);
    }
    fn rec(g: &Spectrum, maps: &[Transformation], moduli: &[Modulus], k: u32) -> f64 {
        let conj = |s: &Spectrum| Spectrum {
            terms: s
                .terms
                .iter()
                .map(|(kk, c)| (kk.iter().zip(moduli).map(|(v, m)| m.neg(*v)).collect(), c.conj()))
                .collect(),
        };
        let term = |tn: &Transformation| -> f64 {
            let d = g.mul(&conj(&g.push(tn, moduli)), moduli);
            if k == 1 {
                d.mean().re
            } else {
                rec(&d, maps, moduli, k - 1)
            }
        };
        let parts: Vec<f64> = if k >= 2 { maps.par_iter().map(term).collect() } else { maps.iter().map(term).collect() };
        reduce::sum_real(parts.len(), |i| parts[i]) / maps.len() as f64
    }
    rec(g, &maps, moduli, k)
}

fn sampled_level(f: &Observable, t: &Transformation, system: &CommutingSystem, k: u32, n: u64) -> Result<f64> {
    let space = &system.space;
    let moduli = space.moduli();
    let pts = system.points()?;
    let np = pts.len();
    let mut maps = Vec::with_capacity(n as usize);
    let mut cur = t.clone();
    for _ in 0..n {
        maps.push(cur.clone());
        cur = cur.compose(t);
    }
    fn cube_value(
        f: &Observable,
        space: &StateSpace,
        moduli: &[Modulus],
        maps: &[Transformation],
        x: &[u64],
        k: u32,
    ) -> Complex64 {
        // average over n ∈ [1,N]^k of ∏_ε C^{|ε|} f(T^{ε·n} x) with the
        // recursion g ↦ g · conj(g ∘ T^n)
        fn rec(g: &dyn Fn(&[u64]) -> Complex64, maps: &[Transformation], x: &[u64], k: u32) -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for tn in maps {
                let h = |y: &[u64]| {
                    let mut z = vec![0u64; y.len()];
                    tn.apply_into(y, &mut z);
                    g(y) * g(&z).conj()
                };
                acc += if k == 1 { h(x) } else { rec(&h, maps, x, k - 1) };
            }
            acc / maps.len() as f64
        }
        rec(&|y: &[u64]| f.eval_with(space, moduli, y), maps, x, k)
    }
    let s = reduce::sum_complex(np, |i| cube_value(f, space, &moduli, &maps, &pts[i].0, k));
    Ok((s / np as f64).re)
}

/// `|||f|||_{k,μ,T}`: exact on finite spaces, truncated nested averages otherwise.
pub fn hk_seminorm(f: &Observable, t: &Transformation, system: &CommutingSystem, cfg: &HKSeminormConfig) -> Result<f64> {
    if cfg.k == 0 {
        return Err(LabError::InvalidInput("k must be ≥ 1".into()));
    }
    let space = &system.space;
    if cfg.exact {
        let values = table_of(f, space)?;
        let perm = t.permutation(space)?;
        return hk_exact_from_permutation(&values, &perm, cfg.k, cfg.budget);
    }
    if cfg.k > 3 {
        return Err(LabError::InvalidInput("truncated mode supports k ≤ 3".into()));
    }
    let needed = (cfg.n as u128).saturating_pow(cfg.k) * (1u128 << cfg.k);
    if needed > cfg.budget {
        return Err(LabError::Budget { what: "truncated seminorm".into(), needed, budget: cfg.budget });
    }
    let p = match f.spectrum(space) {
        Some(s) => spectral_level(&s, t, &space.moduli(), cfg.k, cfg.n),
        None => sampled_level(f, t, system, cfg.k, cfg.n)?,
    };
    Ok(p.max(0.0).powf(1.0 / (1u64 << cfg.k) as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` for inequalities, `−|rhs − lhs|` for equalities.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseDirectionReport {
    pub k: u32,
    pub checks: Vec<RelationCheck>,
}

impl InverseDirectionReport {
    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// The three standard relations on a finite system, evaluated exactly:
/// `|||f⊗f̄|||_{k,T×T} ≤ |||f|||²_{k+1}`, `|||f|||_k ≤ |||f|||_{k+1}` and
/// `|||f|||_{k,T} = |||f|||_{k,T⁻¹}`.
pub fn hk_inverse_direction_checks(
    f: &Observable,
    t: &Transformation,
    space: &StateSpace,
    k: u32,
    budget: u128,
) -> Result<InverseDirectionReport> {
    let values = table_of(f, space)?;
    let perm = t.permutation(space)?;
    let inv = t.inverse()?.permutation(space)?;
    let fk = hk_exact_from_permutation(&values, &perm, k, budget)?;
    let fk1 = hk_exact_from_permutation(&values, &perm, k + 1, budget)?;
    let finv = hk_exact_from_permutation(&values, &inv, k, budget)?;
    let n = values.len();
    let mut tensor = Vec::with_capacity(n * n);
    let mut pp = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            tensor.push(values[x] * values[y].conj());
            pp.push(perm[x] * n + perm[y]);
        }
    }
    let tk = hk_exact_from_permutation(&tensor, &pp, k, budget)?;
    Ok(InverseDirectionReport {
        k,
        checks: vec![
            RelationCheck { relation: "tensor_square".into(), lhs: tk, rhs: fk1 * fk1, margin: fk1 * fk1 - tk },
            RelationCheck { relation: "monotone".into(), lhs: fk, rhs: fk1, margin: fk1 - fk },
            RelationCheck { relation: "inverse_symmetry".into(), lhs: fk, rhs: finv, margin: -(fk - finv).abs() },
        ],
    })
}

/// Finite cyclic system `ℤ_q` with the shift by `r`, enumerated.
pub fn cyclic_shift_system(q: u64, r: i64) -> Result<CommutingSystem> {
    let space = StateSpace::new(vec![Factor::Cyclic { modulus: q, dim: 1 }])?;
    CommutingSystem::new(space, vec![Transformation::shift(q, r)], Sampler::Enumerate)
}
