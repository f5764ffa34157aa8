//! Suspension flows under the constant ceiling 1 over a commuting system,
//! with the transference bounds that move estimates between integer and
//! real iterates.
//!
//! The flow acts on `Y = X × [0,1)^{ℓm}`. Direction `(i, j)` moves height
//! `b_{i,j}` and applies `T_i^{[s + b_{i,j}]}` to the base.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{CorrEvaluator, CorrelationSpec, SequenceSample};
use crate::error::{LabError, Result};
use crate::fixed::FixedReal;
use crate::poly::Window;
use crate::reduce;
use crate::seminorms::{hk_exact_from_permutation, seq_seminorm, SeqSeminormConfig};
use crate::systems::{CommutingSystem, Observable, StatePoint, StateSpace, Transformation};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuspensionPoint {
    pub base: StatePoint,
    /// `heights[i][j] = b_{i,j}`, each in `[0, 1)`.
    pub heights: Vec<Vec<FixedReal>>,
}

impl SuspensionPoint {
    pub fn new(base: StatePoint, heights: Vec<Vec<FixedReal>>) -> Result<Self> {
        if heights.iter().flatten().any(|b| *b < FixedReal::ZERO || *b >= FixedReal::ONE) {
            return Err(LabError::InvalidInput("heights must lie in [0, 1)".into()));
        }
        Ok(SuspensionPoint { base, heights })
    }

    /// Base point with all heights zero.
    pub fn at_floor(base: StatePoint, ell: usize, m: usize) -> Self {
        SuspensionPoint { base, heights: vec![vec![FixedReal::ZERO; m]; ell] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionFlow {
    pub system: CommutingSystem,
    /// Directions per transformation; direction `(i, j)` has index `i·m + j`.
    pub m: usize,
}

impl SuspensionFlow {
    pub fn new(system: CommutingSystem, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(LabError::InvalidInput("need at least one direction per transformation".into()));
        }
        Ok(SuspensionFlow { system, m })
    }

    pub fn ell(&self) -> usize {
        self.system.ell()
    }

    pub fn direction(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    fn check_grid(&self, g: &[Vec<FixedReal>], what: &str) -> Result<()> {
        if g.len() != self.ell() || g.iter().any(|r| r.len() != self.m) {
            return Err(LabError::Mismatch(format!("{} must be a {}×{} grid", what, self.ell(), self.m)));
        }
        Ok(())
    }
}

/// Time-`s` map of the flow.
pub fn flow_apply(flow: &SuspensionFlow, s: &[Vec<FixedReal>], pt: &SuspensionPoint) -> Result<SuspensionPoint> {
    flow.check_grid(s, "time")?;
    flow.check_grid(&pt.heights, "heights")?;
    let mut heights = pt.heights.clone();
    let mut base = pt.base.clone();
    for (i, t) in flow.system.transformations.iter().enumerate() {
        let mut e: i128 = 0;
        for j in 0..flow.m {
            let v = s[i][j]
                .checked_add(pt.heights[i][j])
                .ok_or_else(|| LabError::Headroom(format!("s + b overflows in direction ({}, {})", i, j)))?;
            e = e
                .checked_add(v.floor())
                .ok_or_else(|| LabError::Headroom("exponent sum overflows".into()))?;
            heights[i][j] = v.frac();
        }
        if e != 0 {
            base = t.power(e)?.apply(&base);
        }
    }
    Ok(SuspensionPoint { base, heights })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerIdentityReport {
    pub s: FixedReal,
    pub n_max: u64,
    pub points: usize,
    pub checks: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<u64>,
    /// Mismatches of `Sⁿf̂(x,0) = f(T^{[ns]}x)`.
    pub observable_mismatches: u64,
}

/// Iterates the time-`s` map and compares with `Sⁿ(x,b) = (T^{[ns+b]}x, {ns+b})`.
pub fn flow_power_identity_check(
    flow: &SuspensionFlow,
    s: FixedReal,
    n_max: u64,
    points: &[SuspensionPoint],
    f: &Observable,
) -> Result<PowerIdentityReport> {
    if flow.ell() != 1 || flow.m != 1 {
        return Err(LabError::InvalidInput("the power identity is checked on a single direction".into()));
    }
    let t = &flow.system.transformations[0];
    let space = &flow.system.space;
    let grid = vec![vec![s]];
    let per_point: Vec<(u64, Option<u64>, u64)> = points
        .par_iter()
        .map(|p0| -> Result<(u64, Option<u64>, u64)> {
            let b = p0.heights[0][0];
            let mut cur = p0.clone();
            let mut bad = 0;
            let mut first = None;
            let mut obs_bad = 0;
            for n in 1..=n_max {
                cur = flow_apply(flow, &grid, &cur)?;
                let ns = s
                    .checked_mul_int(n as i128)
                    .and_then(|v| v.checked_add(b))
                    .ok_or_else(|| LabError::Headroom(format!("n·s + b overflows at n = {}", n)))?;
                let base = t.power(ns.floor())?.apply(&p0.base);
                if cur.base != base || cur.heights[0][0] != ns.frac() {
                    bad += 1;
                    first.get_or_insert(n);
                }
                if b == FixedReal::ZERO && f.eval(space, &cur.base) != f.eval(space, &base) {
                    obs_bad += 1;
                }
            }
            Ok((bad, first, obs_bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerIdentityReport {
        s,
        n_max,
        points: points.len(),
        checks: n_max * points.len() as u64,
        mismatches: per_point.iter().map(|r| r.0).sum(),
        first_mismatch: per_point.iter().filter_map(|r| r.1).min(),
        observable_mismatches: per_point.iter().map(|r| r.2).sum(),
    })
}

/// Heights and observables on the suspension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtendedObservable {
    /// `f̂(x, b) = f(x)`.
    Plain { f: Observable },
    /// `f(x) · 1_{[0,δ]^{ℓm}}(b)`.
    DeltaBox { f: Observable, delta: FixedReal },
}

impl ExtendedObservable {
    pub fn eval(&self, space: &StateSpace, pt: &SuspensionPoint) -> Complex64 {
        match self {
            ExtendedObservable::Plain { f } => f.eval(space, &pt.base),
            ExtendedObservable::DeltaBox { f, delta } => {
                if pt.heights.iter().flatten().all(|b| b <= delta) {
                    f.eval(space, &pt.base)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

/// `⌊1/s⌋` for `s > 0`.
fn floor_recip(s: FixedReal) -> Result<u128> {
    if s <= FixedReal::ZERO {
        return Err(LabError::InvalidInput(format!("s must be positive, got {}", s)));
    }
    Ok((1u128 << 64) / s.raw() as u128)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F5Report {
    pub k: usize,
    pub s: FixedReal,
    pub window: Window,
    /// Average of `a([n₁s], …, [n_k s])` over the window box.
    pub lhs: f64,
    /// `s^k(⌊1/s⌋+1)^k` times the average of `a` over the image box.
    pub rhs: f64,
    /// `(⌊1/s⌋+1)^k (W'/W)^k` times the same average; an exact bound on each window.
    pub rhs_finite: f64,
    pub image: Window,
    pub margin: f64,
    pub asymptotic_margin: f64,
}

fn image_window(s: FixedReal, window: &Window) -> Result<(Vec<i64>, Window)> {
    let floors = (window.start..window.end)
        .map(|n| {
            s.checked_mul_int(n as i128)
                .map(|v| v.floor() as i64)
                .ok_or_else(|| LabError::Headroom(format!("n·s overflows at n = {}", n)))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = *floors.first().unwrap();
    let hi = *floors.last().unwrap();
    Ok((floors, Window { start: lo.min(hi), end: lo.max(hi) + 1 }))
}

fn box_index(mut i: usize, w: usize, k: usize, out: &mut [usize]) {
    for slot in out.iter_mut().take(k) {
        *slot = i % w;
        i /= w;
    }
}

/// Compares averages of `a` along `([n₁s], …, [n_k s])` with averages of `a`.
pub fn lemma_f5_check(a: &(dyn Fn(&[i64]) -> f64 + Sync), s: FixedReal, k: usize, window: Window) -> Result<F5Report> {
    if !(1..=3).contains(&k) {
        return Err(LabError::InvalidInput(format!("k must be in 1..=3, got {}", k)));
    }
    if window.is_empty() {
        return Err(LabError::InvalidInput("window must be nonempty".into()));
    }
    let mult = floor_recip(s)? + 1;
    let (floors, image) = image_window(s, &window)?;
    let w = window.len();
    let wi = image.len();
    let total = w.checked_pow(k as u32).ok_or_else(|| LabError::Headroom("window box too large".into()))?;
    let total_i = wi.checked_pow(k as u32).ok_or_else(|| LabError::Headroom("image box too large".into()))?;
    let lhs = reduce::sum_real(total, |i| {
        let mut idx = [0usize; 3];
        box_index(i, w, k, &mut idx);
        let pt: Vec<i64> = idx[..k].iter().map(|&j| floors[j]).collect();
        a(&pt)
    }) / total as f64;
    let image_avg = reduce::sum_real(total_i, |i| {
        let mut idx = [0usize; 3];
        box_index(i, wi, k, &mut idx);
        let pt: Vec<i64> = idx[..k].iter().map(|&j| image.start + j as i64).collect();
        a(&pt)
    }) / total_i as f64;
    let kk = k as i32;
    let rhs = (s.to_f64() * mult as f64).powi(kk) * image_avg;
    let rhs_finite = (mult as f64 * wi as f64 / w as f64).powi(kk) * image_avg;
    Ok(F5Report { k, s, window, lhs, rhs, rhs_finite, image, margin: rhs_finite - lhs, asymptotic_margin: rhs - lhs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F5ExactReport {
    /// `Σ_n a([n s])` over the window box.
    pub lhs_sum: u128,
    /// `(⌊1/s⌋+1)^k Σ_m a(m)` over the image box.
    pub rhs_sum: u128,
    pub window_size: u128,
    pub image_size: u128,
    pub holds: bool,
}

/// Integer-valued variant with exact sums.
pub fn lemma_f5_check_exact(
    a: &(dyn Fn(&[i64]) -> u64 + Sync),
    s: FixedReal,
    k: usize,
    window: Window,
) -> Result<F5ExactReport> {
    if !(1..=3).contains(&k) {
        return Err(LabError::InvalidInput(format!("k must be in 1..=3, got {}", k)));
    }
    if window.is_empty() {
        return Err(LabError::InvalidInput("window must be nonempty".into()));
    }
    let mult = floor_recip(s)? + 1;
    let (floors, image) = image_window(s, &window)?;
    let (w, wi) = (window.len(), image.len());
    let total = w.pow(k as u32);
    let total_i = wi.pow(k as u32);
    let sum = |n: usize, f: &(dyn Fn(usize) -> u128 + Sync)| -> u128 { (0..n).into_par_iter().map(f).sum() };
    let lhs_sum = sum(total, &|i| {
        let mut idx = [0usize; 3];
        box_index(i, w, k, &mut idx);
        let pt: Vec<i64> = idx[..k].iter().map(|&j| floors[j]).collect();
        a(&pt) as u128
    });
    let img = sum(total_i, &|i| {
        let mut idx = [0usize; 3];
        box_index(i, wi, k, &mut idx);
        let pt: Vec<i64> = idx[..k].iter().map(|&j| image.start + j as i64).collect();
        a(&pt) as u128
    });
    let rhs_sum = mult
        .checked_pow(k as u32)
        .and_then(|c| c.checked_mul(img))
        .ok_or_else(|| LabError::Headroom("exact F5 sum overflows".into()))?;
    Ok(F5ExactReport { lhs_sum, rhs_sum, window_size: total as u128, image_size: total_i as u128, holds: lhs_sum <= rhs_sum })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F6Constants {
    pub k: u32,
    pub s: FixedReal,
    /// `(k+1)^{2^k}` in decimal.
    pub c_k: String,
    /// `c_k · s^k (⌊1/s⌋+1)^k` as an exact fraction.
    pub c_ks: String,
    pub c_k_f64: f64,
    pub c_ks_f64: f64,
}

/// `c_k = (k+1)^{2^k}` and `c_{k,s} = c_k s^k (⌊1/s⌋+1)^k`.
pub fn lemma_f6_constants(k: u32, s: FixedReal) -> Result<F6Constants> {
    if k == 0 || k > 6 {
        return Err(LabError::InvalidInput(format!("k must be in 1..=6, got {}", k)));
    }
    let mult = floor_recip(s)? + 1;
    let c_k = BigUint::from(k + 1).pow(1u32 << k);
    let factor = (s.to_rational() * BigRational::from_integer(mult.into())).pow(k as i32);
    let c_ks = BigRational::from_integer(c_k.clone().into()) * factor;
    Ok(F6Constants {
        k,
        s,
        c_k: c_k.to_string(),
        c_ks: c_ks.to_string(),
        c_k_f64: c_k.to_f64().unwrap_or(f64::INFINITY),
        c_ks_f64: c_ks.to_f64().unwrap_or(f64::INFINITY),
    })
}

/// The time-`s` map on `X × {j/2^g}` for a finite base, as a permutation of
/// indices `x·2^g + j`. Needs `s·2^g ∈ ℤ`.
pub fn suspension_permutation(t: &Transformation, space: &StateSpace, s: FixedReal, g: u32) -> Result<Vec<usize>> {
    if g == 0 || g > 20 {
        return Err(LabError::InvalidInput(format!("grid bits must be in 1..=20, got {}", g)));
    }
    let unit = 1i128 << (64 - g);
    if s.raw() % unit != 0 {
        return Err(LabError::InvalidInput(format!("s = {} is not a multiple of 2^-{}", s, g)));
    }
    let su = s.raw() / unit;
    let gl = 1i128 << g;
    let size = space.size().ok_or_else(|| LabError::InvalidInput("suspension grid needs a finite base".into()))?;
    let base_perm = |e: i128| -> Result<Vec<usize>> { t.power(e)?.permutation(space) };
    let e0 = su.div_euclid(gl);
    let (p0, p1) = (base_perm(e0)?, base_perm(e0 + 1)?);
    let g_usize = gl as usize;
    let total = size as usize * g_usize;
    Ok((0..total)
        .map(|idx| {
            let (x, j) = (idx / g_usize, (idx % g_usize) as i128);
            let v = su + j;
            let e = v.div_euclid(gl);
            let j2 = v.rem_euclid(gl) as usize;
            let bx = if e == e0 { p0[x] } else { p1[x] };
            bx * g_usize + j2
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F6Report {
    pub k: u32,
    pub s: FixedReal,
    pub grid_bits: u32,
    /// `|||f̂|||_{k}` for the suspension on the height grid.
    pub lhs: f64,
    /// Same on the grid refined once.
    pub lhs_refined: f64,
    pub refinement_gap: f64,
    /// `|||f|||_{k+1}` for the base.
    pub rhs_seminorm: f64,
    pub constants: F6Constants,
    pub bound: f64,
    pub tolerance: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Exact check of `|||f̂|||_{k,S} ≤ c_{k,s} |||f|||_{k+1,T}` on a finite base.
pub fn lemma_f6_numeric_check(
    f: &Observable,
    t: &Transformation,
    space: &StateSpace,
    s: FixedReal,
    k: u32,
    grid_bits: u32,
    budget: u128,
) -> Result<F6Report> {
    let constants = lemma_f6_constants(k, s)?;
    let needed = 64 - s.raw().trailing_zeros().min(64);
    let g = grid_bits.max(needed).max(1);
    if g > 12 {
        return Err(LabError::InvalidInput(format!("s = {} needs a 2^-{} height grid", s, g)));
    }
    let base_perm = t.permutation(space)?;
    let base_vals: Vec<Complex64> = (0..base_perm.len()).map(|i| f.eval(space, &space.point(i as u128))).collect();
    let rhs_seminorm = hk_exact_from_permutation(&base_vals, &base_perm, k + 1, budget)?;
    let susp = |g: u32| -> Result<f64> {
        let perm = suspension_permutation(t, space, s, g)?;
        let gl = 1usize << g;
        let vals: Vec<Complex64> = (0..perm.len()).map(|i| base_vals[i / gl]).collect();
        hk_exact_from_permutation(&vals, &perm, k, budget)
    };
    let lhs = susp(g)?;
    let lhs_refined = susp(g + 1)?;
    let tolerance = 1e-9;
    let bound = constants.c_ks_f64 * rhs_seminorm;
    let margin = bound + tolerance - lhs.max(lhs_refined);
    Ok(F6Report {
        k,
        s,
        grid_bits: g,
        lhs,
        lhs_refined,
        refinement_gap: (lhs - lhs_refined).abs(),
        rhs_seminorm,
        constants,
        bound,
        tolerance,
        margin,
        holds: margin >= 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakAntiUniformBound {
    pub delta: FixedReal,
    pub window: Window,
    pub directions: usize,
    /// `δ^{ℓm}`.
    pub delta_pow: f64,
    /// `|avg a(n) b(n)|`.
    pub lhs: f64,
    /// `|avg ã(n) b(n)|`.
    pub tilde_corr: f64,
    /// `|avg ã b| / δ^{ℓm} + c_δ`.
    pub rhs: f64,
    /// `2 × sup|b| bound × density of ∪ E_δ^{i,j}`; an upper estimate on the window.
    pub c_delta: f64,
    pub bad_density: f64,
    /// Density of each `E_δ^{i,j}` on the window.
    pub pair_densities: Vec<Vec<f64>>,
    pub sup_b: f64,
    pub margin: f64,
    /// `‖b‖_{U_k}` on the window, when the sample reaches far enough.
    pub u_k_norm: Option<f64>,
    /// `|avg ã b| / ‖b‖_{U_k}`.
    pub c_emp: Option<f64>,
    /// `C_δ = c_emp / δ^{ℓm}`.
    pub big_c_delta: Option<f64>,
}

/// Heights weights for `[p + b] = [p] + ε`, `b ∈ [0, δ]`: returns `(w₀, w₁)`.
fn carry_weights(frac: u64, delta_raw: u128) -> (f64, f64) {
    let room = (1u128 << 64) - frac as u128;
    let w0 = delta_raw.min(room);
    let w1 = delta_raw.saturating_sub(room);
    let scale = 2f64.powi(-64);
    (w0 as f64 * scale, w1 as f64 * scale)
}

/// `ã(n) = ∫ f̂₀·1_{[0,δ]^{ℓm}} ∏_j ∏_i T_{i,p_{i,j}(n)} f̂_j dν`, integrating the
/// heights exactly: each `b_{i,j}` only matters through whether it carries.
pub fn tilde_correlation(ev: &CorrEvaluator, spec: &CorrelationSpec, n: i64, delta: FixedReal) -> Result<Complex64> {
    let (ell, m) = (spec.ell(), spec.m());
    let mut base = vec![vec![0i128; m]; ell];
    let mut weights = Vec::with_capacity(ell * m);
    for i in 0..ell {
        for j in 0..m {
            let (fl, fr) = spec.iterates[i][j].eval_split(n as i128)?;
            base[i][j] = fl;
            weights.push(carry_weights(fr, delta.raw() as u128));
        }
    }
    let carry: Vec<usize> = (0..ell * m).filter(|&d| weights[d].1 > 0.0).collect();
    let fixed: f64 = (0..ell * m).filter(|d| !carry.contains(d)).map(|d| weights[d].0).product();
    let mut acc = Complex64::new(0.0, 0.0);
    for mask in 0u32..(1 << carry.len()) {
        let mut ex = base.clone();
        let mut w = fixed;
        for (bit, &d) in carry.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                ex[d / m][d % m] += 1;
                w *= weights[d].1;
            } else {
                w *= weights[d].0;
            }
        }
        if w != 0.0 {
            acc += ev.value(&ex)? * w;
        }
    }
    Ok(acc)
}

/// Verifies `|avg a b| ≤ δ^{−ℓm}|avg ã b| + c_δ` on a window.
pub fn weak_anti_uniform_bound(
    spec: &CorrelationSpec,
    b: &SequenceSample,
    delta: FixedReal,
    window: Window,
    seminorm: Option<SeqSeminormConfig>,
) -> Result<WeakAntiUniformBound> {
    if delta <= FixedReal::ZERO || delta >= FixedReal::ONE {
        return Err(LabError::InvalidInput(format!("delta must lie in (0,1), got {}", delta)));
    }
    let (ell, m) = (spec.ell(), spec.m());
    if ell * m > 12 {
        return Err(LabError::InvalidInput("at most 12 suspension directions".into()));
    }
    spec.check_window(&window)?;
    let bs = b.slice(&window)?;
    let sup_b = bs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if sup_b > 1.0 + 1e-12 {
        return Err(LabError::InvalidInput(format!("b must be bounded by 1, sup = {}", sup_b)));
    }
    let ev = CorrEvaluator::new(spec)?;
    let threshold = (1u128 << 64) - delta.raw() as u128;
    let rows = (window.start..window.end)
        .into_par_iter()
        .map(|n| -> Result<(Complex64, Complex64, Vec<bool>)> {
            let a = ev.value(&spec.exponents(n)?)?;
            let at = tilde_correlation(&ev, spec, n, delta)?;
            let mut bad = Vec::with_capacity(ell * m);
            for row in &spec.iterates {
                for p in row {
                    bad.push(p.eval_split(n as i128)?.1 as u128 >= threshold);
                }
            }
            Ok((a, at, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = window.len();
    let wf = w as f64;
    let ab = reduce::sum_complex(w, |i| rows[i].0 * bs[i]) / wf;
    let atb = reduce::sum_complex(w, |i| rows[i].1 * bs[i]) / wf;
    let union = rows.iter().filter(|r| r.2.iter().any(|&x| x)).count();
    let pair_densities = (0..ell)
        .map(|i| (0..m).map(|j| rows.iter().filter(|r| r.2[i * m + j]).count() as f64 / wf).collect())
        .collect();
    let delta_pow = delta.to_f64().powi((ell * m) as i32);
    let bad_density = union as f64 / wf;
    let c_delta = 2.0 * bad_density;
    let lhs = ab.norm();
    let tilde_corr = atb.norm();
    let rhs = tilde_corr / delta_pow + c_delta;
    let u_k_norm = match seminorm {
        Some(cfg) => Some(seq_seminorm(b, &cfg)?),
        None => None,
    };
    let c_emp = u_k_norm.filter(|u| *u > 0.0).map(|u| tilde_corr / u);
    Ok(WeakAntiUniformBound {
        delta,
        window,
        directions: ell * m,
        delta_pow,
        lhs,
        tilde_corr,
        rhs,
        c_delta,
        bad_density,
        pair_densities,
        sup_b,
        margin: rhs - lhs,
        u_k_norm,
        c_emp,
        big_c_delta: c_emp.map(|c| c / delta_pow),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaComparison {
    pub checks: u64,
    pub violations: u64,
}

/// Checks `[p + b] = [p]` whenever `{p} < 1 − δ` and `b ∈ [0, δ]`, for `b` on a
/// `2^g` grid of `[0, δ]`.
pub fn delta_comparison_check(spec: &CorrelationSpec, delta: FixedReal, window: Window, g: u32) -> Result<DeltaComparison> {
    let heights: Vec<FixedReal> = (0..=(1u128 << g))
        .map(|t| FixedReal::from_raw(((delta.raw() as u128 * t) >> g) as i128))
        .collect();
    let threshold = (1u128 << 64) - delta.raw() as u128;
    let res = (window.start..window.end)
        .into_par_iter()
        .map(|n| -> Result<(u64, u64)> {
            let (mut checks, mut bad) = (0, 0);
            for p in spec.iterates.iter().flatten() {
                let (fl, fr) = p.eval_split(n as i128)?;
                if fr as u128 >= threshold {
                    continue;
                }
                let v = FixedReal::from_raw(fr as i128);
                for b in &heights {
                    checks += 1;
                    if fl + (v + *b).floor() != fl {
                        bad += 1;
                    }
                }
            }
            Ok((checks, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaComparison { checks: res.iter().map(|r| r.0).sum(), violations: res.iter().map(|r| r.1).sum() })
}

/// Exact rational `c_{k,s}`, for callers that compare without rounding.
pub fn c_ks_exact(k: u32, s: FixedReal) -> Result<BigRational> {
    let mult = floor_recip(s)? + 1;
    let c_k = BigUint::from(k + 1).pow(1u32 << k);
    let mut r = BigRational::from_integer(c_k.into());
    let step = s.to_rational() * BigRational::from_integer(mult.into());
    for _ in 0..k {
        r *= step.clone();
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::RealPolynomial;
    use crate::seminorms::cyclic_shift_system;
    use crate::systems::Sampler;

    fn fx(s: &str) -> FixedReal {
        FixedReal::parse(s).unwrap()
    }

    fn rotation_flow(alpha: &str) -> SuspensionFlow {
        let space = StateSpace::torus(1);
        let sys = CommutingSystem::new(space, vec![Transformation::rotation(&[fx(alpha)])], Sampler::Random { seed: 1, count: 64 })
            .unwrap();
        SuspensionFlow::new(sys, 1).unwrap()
    }

    #[test]
    fn flow_examples() {
        let flow = rotation_flow("sqrt2");
        let x = StatePoint::from_fixed(&flow.system.space, &[fx("0.25")]).unwrap();
        let p = SuspensionPoint::at_floor(x.clone(), 1, 1);
        assert_eq!(flow_apply(&flow, &[vec![FixedReal::ZERO]], &p).unwrap(), p);
        let q = flow_apply(&flow, &[vec![fx("1.5")]], &p).unwrap();
        assert_eq!(q.base, flow.system.transformations[0].apply(&x));
        assert_eq!(q.heights[0][0], fx("0.5"));
    }

    #[test]
    fn power_identity_small_step() {
        let flow = rotation_flow("sqrt2");
        let x = StatePoint::from_fixed(&flow.system.space, &[fx("0.1")]).unwrap();
        let p = SuspensionPoint::new(x, vec![vec![fx("0.999")]]).unwrap();
        let r = flow_power_identity_check(&flow, fx("0.002"), 2000, &[p], &Observable::character(vec![1])).unwrap();
        assert_eq!(r.mismatches, 0);
        // {0.999 + 0.002 n} first carries at n = 1
        let q = flow_apply(&flow, &[vec![fx("0.002")]], &SuspensionPoint::new(StatePoint(vec![0]), vec![vec![fx("0.999")]]).unwrap())
            .unwrap();
        assert_eq!(q.base, flow.system.transformations[0].apply(&StatePoint(vec![0])));
    }

    #[test]
    fn f5_trivial_cases() {
        let one = |_: &[i64]| 1.0;
        let r = lemma_f5_check(&one, fx("sqrt2"), 2, Window::new(0, 50).unwrap()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert!((r.rhs - 2.0).abs() < 1e-12);
        let a = |n: &[i64]| ((n[0] * 7919) % 13) as f64;
        let r = lemma_f5_check(&a, FixedReal::ONE, 1, Window::new(0, 1000).unwrap()).unwrap();
        assert!((r.rhs - 2.0 * r.lhs).abs() < 1e-9);
        let e = lemma_f5_check_exact(&|n: &[i64]| (n[0] % 3) as u64, fx("0.3"), 1, Window::new(5, 400).unwrap()).unwrap();
        assert!(e.holds);
    }

    #[test]
    fn f6_constants() {
        let c1 = lemma_f6_constants(1, fx("0.7")).unwrap();
        assert_eq!(c1.c_k, "4");
        assert_eq!(lemma_f6_constants(2, fx("0.7")).unwrap().c_k, "81");
        let c11 = lemma_f6_constants(1, FixedReal::ONE).unwrap();
        assert_eq!(c11.c_ks, "8");
        assert_eq!(c_ks_exact(1, FixedReal::ONE).unwrap(), BigRational::from_integer(8.into()));
    }

    #[test]
    fn suspension_grid_is_bijective() {
        let sys = cyclic_shift_system(12, 5).unwrap();
        let perm = suspension_permutation(&sys.transformations[0], &sys.space, fx("0.375"), 6).unwrap();
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
    }

    #[test]
    fn f6_on_cyclic_character() {
        let sys = cyclic_shift_system(12, 1).unwrap();
        let f = Observable::character(vec![1]);
        let r = lemma_f6_numeric_check(&f, &sys.transformations[0], &sys.space, FixedReal::ONE, 1, 3, 1 << 30).unwrap();
        assert!(r.holds, "{:?}", r);
        assert!(r.lhs < 1e-9);
        let c = Observable::Constant { value: Complex64::new(0.5, 0.0) };
        let r = lemma_f6_numeric_check(&c, &sys.transformations[0], &sys.space, fx("0.5"), 2, 3, 1 << 30).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn tilde_matches_height_grid() {
        let space = StateSpace::torus(1);
        let sys = CommutingSystem::new(space, vec![Transformation::rotation(&[fx("sqrt3")])], Sampler::Random { seed: 3, count: 64 })
            .unwrap();
        let p = RealPolynomial::parse(&["0", "sqrt2"]).unwrap();
        let spec =
            CorrelationSpec::new(sys, vec![vec![p]], vec![Observable::character(vec![-1]), Observable::character(vec![1])]).unwrap();
        let ev = CorrEvaluator::new(&spec).unwrap();
        let delta = fx("0.25");
        let g = 12u32;
        for n in 1..40 {
            let exact = tilde_correlation(&ev, &spec, n, delta).unwrap();
            // midpoint rule over heights in [0, δ]
            let (fl, fr) = spec.iterates[0][0].eval_split(n as i128).unwrap();
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..(1u64 << g) {
                let b = (t as f64 + 0.5) / (1u64 << g) as f64 * 0.25;
                let carry = (fr as f64 * 2f64.powi(-64) + b >= 1.0) as i128;
                acc += ev.value(&[vec![fl + carry]]).unwrap();
            }
            acc *= 0.25 / (1u64 << g) as f64;
            assert!((acc - exact).norm() < 1e-3, "n = {}", n);
        }
    }

    #[test]
    fn weak_anti_uniform_decreasing() {
        let space = StateSpace::torus(1);
        let sys = CommutingSystem::new(space, vec![Transformation::rotation(&[fx("sqrt3")])], Sampler::Random { seed: 3, count: 64 })
            .unwrap();
        let p = RealPolynomial::parse(&["0", "sqrt2"]).unwrap();
        let spec =
            CorrelationSpec::new(sys, vec![vec![p]], vec![Observable::character(vec![-1]), Observable::character(vec![1])]).unwrap();
        let w = Window::new(1, 20_000).unwrap();
        let a = crate::correlate::corr_seq(&spec, w).unwrap();
        let b = SequenceSample { window: w, values: a.values.iter().map(|v| v.conj()).collect(), route: a.route };
        let mut last = f64::INFINITY;
        for d in ["0.2", "0.1", "0.05"] {
            let r = weak_anti_uniform_bound(&spec, &b, fx(d), w, None).unwrap();
            assert!(r.margin >= 0.0);
            assert!(r.c_delta < last);
            assert!((r.c_delta - 2.0 * fx(d).to_f64()).abs() < 0.01);
            last = r.c_delta;
        }
        let zero = SequenceSample::from_fn(w, |_| Complex64::new(0.0, 0.0));
        let r = weak_anti_uniform_bound(&spec, &zero, fx("0.1"), w, None).unwrap();
        assert_eq!((r.lhs, r.tilde_corr), (0.0, 0.0));
        assert_eq!(delta_comparison_check(&spec, fx("0.1"), Window::new(1, 2000).unwrap(), 4).unwrap().violations, 0);
    }
}
