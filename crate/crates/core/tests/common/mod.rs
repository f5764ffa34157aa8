//! Brute-force oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use ergolab::correlate::CorrelationSpec;
use ergolab::systems::{Observable, StateSpace, Transformation};
use num_complex::Complex64;

/// Point-index permutation of `t`, built by applying it to every point.
pub fn perm_of(t: &Transformation, space: &StateSpace) -> Vec<usize> {
    let n = space.size().unwrap() as usize;
    (0..n).map(|i| space.index_of(&t.apply(&space.point(i as u128))).unwrap() as usize).collect()
}

/// Smallest `P ≥ 1` with `σ^P = id`, found by stepping.
pub fn period_of(perm: &[usize]) -> usize {
    let mut cur: Vec<usize> = perm.to_vec();
    let mut p = 1;
    while cur.iter().enumerate().any(|(i, &c)| i != c) {
        cur = cur.iter().map(|&c| perm[c]).collect();
        p += 1;
    }
    p
}

/// `σ^e(i)` by `e mod P` single steps.
pub fn step_pow(perm: &[usize], period: usize, e: i128, mut i: usize) -> usize {
    for _ in 0..e.rem_euclid(period as i128) {
        i = perm[i];
    }
    i
}

pub fn table(f: &Observable, space: &StateSpace) -> Vec<Complex64> {
    let n = space.size().unwrap() as usize;
    (0..n).map(|i| f.eval(space, &space.point(i as u128))).collect()
}

/// `a(n)` as a plain loop over points, factors and single steps.
pub fn corr_oracle(spec: &CorrelationSpec, n: i64) -> Complex64 {
    let space = &spec.system.space;
    let perms: Vec<Vec<usize>> = spec.system.transformations.iter().map(|t| perm_of(t, space)).collect();
    let periods: Vec<usize> = perms.iter().map(|p| period_of(p)).collect();
    let tabs: Vec<Vec<Complex64>> = spec.observables.iter().map(|f| table(f, space)).collect();
    let size = tabs[0].len();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..size {
        let mut prod = tabs[0][x];
        for j in 0..spec.m() {
            let mut y = x;
            for i in 0..spec.ell() {
                let e = spec.iterates[i][j].eval_floor(n as i128).unwrap();
                y = step_pow(&perms[i], periods[i], e, y);
            }
            prod *= tabs[j + 1][y];
        }
        acc += prod;
    }
    acc / size as f64
}

/// Mean of `g` over the cycle through each point.
pub fn cycle_means(g: &[Complex64], perm: &[usize]) -> Vec<Complex64> {
    (0..g.len())
        .map(|x| {
            let (mut y, mut s, mut len) = (x, Complex64::new(0.0, 0.0), 0);
            loop {
                s += g[y];
                len += 1;
                y = perm[y];
                if y == x {
                    break;
                }
            }
            s / len as f64
        })
        .collect()
}

/// `|||g|||_k^{2^k}` from the recursive definition with exact period averages.
pub fn hk_oracle_pow(g: &[Complex64], perm: &[usize], k: u32) -> f64 {
    if k == 1 {
        let m = cycle_means(g, perm);
        return m.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.len() as f64;
    }
    let p = period_of(perm);
    let mut total = 0.0;
    for h in 0..p {
        let d: Vec<Complex64> = (0..g.len()).map(|x| g[x] * g[step_pow(perm, p, h as i128, x)].conj()).collect();
        total += hk_oracle_pow(&d, perm, k - 1);
    }
    total / p as f64
}

pub fn hk_oracle(g: &[Complex64], perm: &[usize], k: u32) -> f64 {
    hk_oracle_pow(g, perm, k).max(0.0).powf(1.0 / (1u64 << k) as f64)
}

/// Uniform value in `[0, 1)` attached to an integer tuple.
pub fn hashed(seed: u64, idx: &[i64]) -> f64 {
    ergolab::runner::hashed_uniform(seed, idx)
}
