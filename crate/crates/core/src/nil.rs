//! Step-1 (torus) and step-2 (Heisenberg) nilsequences, and the basis
//! families used by the decomposition experiments.
//!
//! Heisenberg elements are kept in Mal'cev coordinates `(x, y, z)` with the
//! product `(x,y,z)·(x',y',z') = (x+x', y+y', z+z'+xy')`. `x` and `y` are
//! [`FixedReal`]; `z` carries 128 fractional bits so that `xy'` is exact and
//! every group-law identity holds bit for bit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{corr_seq, CorrelationSpec};
use crate::error::{LabError, Result};
use crate::fixed::{FixedReal, WideFixed};
use crate::poly::{RealPolynomial, Window};
use crate::systems::{e, CommutingSystem, Observable, TrigTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HeisenbergElement {
    pub x: FixedReal,
    pub y: FixedReal,
    pub z: WideFixed,
}

fn ovf() -> LabError {
    LabError::Headroom("Heisenberg coordinate overflow".into())
}

impl HeisenbergElement {
    pub fn identity() -> Self {
        HeisenbergElement { x: FixedReal::ZERO, y: FixedReal::ZERO, z: WideFixed::zero() }
    }

    pub fn new(x: FixedReal, y: FixedReal, z: FixedReal) -> Self {
        HeisenbergElement { x, y, z: WideFixed::from_fixed(z) }
    }

    pub fn mul(&self, o: &HeisenbergElement) -> Result<HeisenbergElement> {
        let z = self
            .z
            .checked_add(o.z)
            .and_then(|z| z.checked_add(WideFixed::product(self.x, o.y)))
            .ok_or_else(ovf)?;
        Ok(HeisenbergElement {
            x: self.x.checked_add(o.x).ok_or_else(ovf)?,
            y: self.y.checked_add(o.y).ok_or_else(ovf)?,
            z,
        })
    }

    /// `gⁿ = (nx, ny, nz + C(n,2)·xy)`.
    pub fn pow(&self, n: i128) -> Result<HeisenbergElement> {
        let c2 = n.checked_mul(n - 1).ok_or_else(ovf)? / 2;
        let z = self
            .z
            .checked_mul_int(n)
            .and_then(|z| z.checked_add(WideFixed::product(self.x, self.y).checked_mul_int(c2)?))
            .ok_or_else(ovf)?;
        Ok(HeisenbergElement {
            x: self.x.checked_mul_int(n).ok_or_else(ovf)?,
            y: self.y.checked_mul_int(n).ok_or_else(ovf)?,
            z,
        })
    }

    /// Element of the integer lattice `Γ`.
    pub fn lattice(a: i64, b: i64, c: i64) -> Self {
        HeisenbergElement { x: FixedReal::from_int(a), y: FixedReal::from_int(b), z: WideFixed::from_int(c as i128) }
    }
}

/// `g = γ·h` with `γ ∈ Γ` and `h ∈ [0,1)³`, reducing `x`, then `y`, then `z`.
pub fn malcev_reduce(g: &HeisenbergElement) -> Result<(HeisenbergElement, HeisenbergElement)> {
    let a = g.x.floor();
    let b = g.y.floor();
    let hx = g.x.frac();
    let hy = g.y.frac();
    // γ·h has z-coordinate c + hz + a·hy
    let zr = g.z.checked_sub(WideFixed::from_fixed(hy).checked_mul_int(a).ok_or_else(ovf)?).ok_or_else(ovf)?;
    let c = zr.floor().ok_or_else(ovf)?;
    let hz = WideFixed(ethnum::I256::from(zr.frac_bits()));
    let to_fixed = |v: i128| -> Result<FixedReal> {
        v.checked_mul(1i128 << 64).map(FixedReal::from_raw).ok_or_else(ovf)
    };
    let gamma = HeisenbergElement { x: to_fixed(a)?, y: to_fixed(b)?, z: WideFixed::from_int(c) };
    Ok((gamma, HeisenbergElement { x: hx, y: hy, z: hz }))
}

/// One term `c·e(a·x + b·y + m·z)` of a function on reduced coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergTerm {
    pub coef: Complex64,
    pub a: i64,
    pub b: i64,
    pub m: i64,
}

fn heisenberg_f(terms: &[HeisenbergTerm], h: &HeisenbergElement) -> Complex64 {
    let (hx, hy) = (h.x.frac_bits() as u128, h.y.frac_bits() as u128);
    let hz = h.z.frac_bits();
    terms
        .iter()
        .map(|t| {
            let ph = (t.a as u128)
                .wrapping_mul(hx << 64)
                .wrapping_add((t.b as u128).wrapping_mul(hy << 64))
                .wrapping_add((t.m as u128).wrapping_mul(hz));
            t.coef * e(ph as f64 / 2f64.powi(128))
        })
        .sum()
}

fn torus_f(terms: &[TrigTerm], u: &[u64]) -> Complex64 {
    terms
        .iter()
        .map(|t| {
            let ph = t.freq.iter().zip(u).fold(0u64, |acc, (&k, &x)| acc.wrapping_add((k as u64).wrapping_mul(x)));
            t.coef * e(ph as f64 / 18446744073709551616.0)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Nilsequence {
    /// Step 0.
    Constant(Complex64),
    /// `F({nγ + β})` with `F` a trigonometric polynomial on the torus.
    Torus { gamma: Vec<FixedReal>, beta: Vec<FixedReal>, f: Vec<TrigTerm> },
    /// `F(gⁿΓ)` on the Heisenberg nilmanifold.
    Heisenberg { g: HeisenbergElement, f: Vec<HeisenbergTerm> },
    /// A correlation sequence of a single transformation, standing in for
    /// higher-step nilsequences.
    Correlation { spec: Box<CorrelationSpec>, step: u32 },
}

impl Nilsequence {
    pub fn character(gamma: FixedReal) -> Self {
        Nilsequence::Torus {
            gamma: vec![gamma],
            beta: vec![FixedReal::ZERO],
            f: vec![TrigTerm { coef: Complex64::new(1.0, 0.0), freq: vec![1] }],
        }
    }

    pub fn step(&self) -> u32 {
        match self {
            Nilsequence::Constant(_) => 0,
            Nilsequence::Torus { .. } => 1,
            Nilsequence::Heisenberg { .. } => 2,
            Nilsequence::Correlation { step, .. } => *step,
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            Nilsequence::Constant(c) => c.norm(),
            Nilsequence::Torus { f, .. } => f.iter().map(|t| t.coef.norm()).sum(),
            Nilsequence::Heisenberg { f, .. } => f.iter().map(|t| t.coef.norm()).sum(),
            Nilsequence::Correlation { spec, .. } => {
                spec.observables.iter().map(Observable::sup_bound).product()
            }
        }
    }

    /// Rescales the outer function so that `sup_bound ≤ 1`.
    pub fn normalized(self) -> Self {
        let s = self.sup_bound();
        if s <= 1.0 {
            return self;
        }
        match self {
            Nilsequence::Constant(c) => Nilsequence::Constant(c / s),
            Nilsequence::Torus { gamma, beta, f } => Nilsequence::Torus {
                gamma,
                beta,
                f: f.into_iter().map(|t| TrigTerm { coef: t.coef / s, freq: t.freq }).collect(),
            },
            Nilsequence::Heisenberg { g, f } => Nilsequence::Heisenberg {
                g,
                f: f.into_iter().map(|t| HeisenbergTerm { coef: t.coef / s, ..t }).collect(),
            },
            c @ Nilsequence::Correlation { .. } => c,
        }
    }

    pub fn eval(&self, n: i64) -> Result<Complex64> {
        match self {
            Nilsequence::Constant(c) => Ok(*c),
            Nilsequence::Torus { gamma, beta, f } => {
                let u: Vec<u64> = gamma
                    .iter()
                    .zip(beta)
                    .map(|(g, b)| g.frac_bits().wrapping_mul(n as u64).wrapping_add(b.frac_bits()))
                    .collect();
                Ok(torus_f(f, &u))
            }
            Nilsequence::Heisenberg { g, f } => {
                let (_, h) = malcev_reduce(&g.pow(n as i128)?)?;
                Ok(heisenberg_f(f, &h))
            }
            Nilsequence::Correlation { spec, .. } => Ok(corr_seq(spec, Window::new(n, n + 1)?)?.values[0]),
        }
    }

    /// Values on a window.
    pub fn sample(&self, w: Window) -> Result<Vec<Complex64>> {
        match self {
            Nilsequence::Correlation { spec, .. } => Ok(corr_seq(spec, w)?.values),
            _ => (w.start..w.end).into_par_iter().map(|n| self.eval(n)).collect(),
        }
    }

    /// For a pure torus character `e(n·θ)`, the phase `θ` as 64 fractional bits.
    pub fn pure_frequency(&self) -> Option<u64> {
        match self {
            Nilsequence::Torus { gamma, beta, f } if f.len() == 1 && beta.iter().all(|b| *b == FixedReal::ZERO) => {
                let t = &f[0];
                if t.coef != Complex64::new(1.0, 0.0) {
                    return None;
                }
                Some(t.freq.iter().zip(gamma).fold(0u64, |acc, (&k, g)| acc.wrapping_add((k as u64).wrapping_mul(g.frac_bits()))))
            }
            Nilsequence::Constant(c) if *c == Complex64::new(1.0, 0.0) => Some(0),
            _ => None,
        }
    }
}

/// `ψ(n)` for `n` in the window.
pub fn nilseq_eval(psi: &Nilsequence, n: i64) -> Result<Complex64> {
    psi.eval(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Torus characters over a box of multi-indices.
    Torus,
    /// Torus characters plus Fejér means of the sawtooth `u ↦ {u}`.
    Fejer,
    /// Heisenberg nilsequences on reduced coordinates.
    Heisenberg,
    /// Correlation sequences with exponents `k!/i`.
    Nilkey,
    /// Correlation sequences with exponents `(k+1)!/i − (k+1)!/(k+1)`.
    Bk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NilBasis {
    pub members: Vec<Nilsequence>,
    pub labels: Vec<String>,
    pub provenance: BasisKind,
}

impl NilBasis {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn empty() -> Self {
        NilBasis { members: Vec::new(), labels: Vec::new(), provenance: BasisKind::Torus }
    }
}

/// `ℓ_i = k!/i` for `i = 1..k`.
pub fn nilkey_exponents(k: u32) -> Vec<u64> {
    let f: u64 = (1..=k as u64).product();
    (1..=k as u64).map(|i| f / i).collect()
}

/// `ℓ_i = (k+1)!/i` for `i = 1..k+1` and the iterate exponents `ℓ_i − ℓ_{k+1}`
/// for `i = 1..k`.
pub fn bk_exponents(k: u32) -> (Vec<u64>, Vec<u64>) {
    let l = nilkey_exponents(k + 1);
    let last = *l.last().expect("k + 1 ≥ 1");
    let ex = l[..k as usize].iter().map(|v| v - last).collect();
    (l, ex)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    #[serde(default)]
    pub k: u32,
    pub frequencies: Vec<FixedReal>,
    /// Truncation order per frequency (characters `|j_i| ≤ orders[i]`).
    pub orders: Vec<u32>,
}

fn index_box(orders: &[u32]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &k in orders {
        let k = k as i64;
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-k..=k).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

/// Maximal basis size accepted by [`make_basis`].
pub const MAX_BASIS: usize = 4096;

/// Builds torus, Fejér or Heisenberg bases.
pub fn make_basis(spec: &BasisSpec) -> Result<NilBasis> {
    let d = spec.frequencies.len();
    if spec.orders.len() != d {
        return Err(LabError::Mismatch("one order per frequency".into()));
    }
    let size: u128 = spec.orders.iter().map(|&k| 2 * k as u128 + 1).product();
    if size > MAX_BASIS as u128 {
        return Err(LabError::Budget { what: "basis size".into(), needed: size, budget: MAX_BASIS as u128 });
    }
    let mut members = Vec::new();
    let mut labels = Vec::new();
    match spec.kind {
        BasisKind::Torus | BasisKind::Fejer => {
            for j in index_box(&spec.orders) {
                labels.push(format!("e(n·{:?}·γ)", j));
                members.push(Nilsequence::Torus {
                    gamma: spec.frequencies.clone(),
                    beta: vec![FixedReal::ZERO; d],
                    f: vec![TrigTerm { coef: Complex64::new(1.0, 0.0), freq: j }],
                });
            }
            if spec.kind == BasisKind::Fejer {
                for (i, &k) in spec.orders.iter().enumerate() {
                    let mut f = vec![TrigTerm { coef: Complex64::new(0.5, 0.0), freq: vec![0] }];
                    for j in 1..=k as i64 {
                        let w = 1.0 - j as f64 / (k as f64 + 1.0);
                        let c = Complex64::new(0.0, w / (std::f64::consts::TAU * j as f64));
                        f.push(TrigTerm { coef: c, freq: vec![j] });
                        f.push(TrigTerm { coef: c.conj(), freq: vec![-j] });
                    }
                    labels.push(format!("fejer_{}({{n·γ_{}}})", k, i));
                    members.push(
                        Nilsequence::Torus { gamma: vec![spec.frequencies[i]], beta: vec![FixedReal::ZERO], f }.normalized(),
                    );
                }
            }
        }
        BasisKind::Heisenberg => {
            if !(2..=3).contains(&d) {
                return Err(LabError::InvalidInput("Heisenberg basis takes frequencies (x, y) or (x, y, z)".into()));
            }
            let g = HeisenbergElement::new(
                spec.frequencies[0],
                spec.frequencies[1],
                spec.frequencies.get(2).copied().unwrap_or(FixedReal::ZERO),
            );
            let (kx, km) = (spec.orders[0] as i64, spec.orders[1] as i64);
            for m in -km..=km {
                for a in -kx..=kx {
                    for b in -kx..=kx {
                        labels.push(format!("e({}x+{}y+{}z)", a, b, m));
                        members.push(Nilsequence::Heisenberg {
                            g,
                            f: vec![HeisenbergTerm { coef: Complex64::new(1.0, 0.0), a, b, m }],
                        });
                    }
                }
            }
        }
        BasisKind::Nilkey | BasisKind::Bk => {
            return Err(LabError::InvalidInput("correlation bases are built with make_correlation_basis".into()))
        }
    }
    Ok(NilBasis { members, labels, provenance: spec.kind })
}

/// Correlation-sequence basis over a single-transformation system: every
/// tuple of observables drawn from `pool` (with `f₀ = 1` for `Nilkey`),
/// truncated to `max_size` members.
pub fn make_correlation_basis(
    kind: BasisKind,
    k: u32,
    system: &CommutingSystem,
    pool: &[Observable],
    max_size: usize,
) -> Result<NilBasis> {
    if system.ell() != 1 {
        return Err(LabError::InvalidInput("correlation bases use one transformation".into()));
    }
    if k == 0 || pool.is_empty() {
        return Err(LabError::InvalidInput("need k ≥ 1 and a nonempty observable pool".into()));
    }
    let (exps, slots, step) = match kind {
        BasisKind::Nilkey => (nilkey_exponents(k), k as usize, k - 1),
        BasisKind::Bk => (bk_exponents(k).1, k as usize + 1, k),
        _ => return Err(LabError::InvalidInput("kind must be nilkey or bk".into())),
    };
    let iterates = vec![exps
        .iter()
        .map(|&l| RealPolynomial::new(vec![FixedReal::ZERO, FixedReal::from_int(l as i64)]))
        .collect::<Result<Vec<_>>>()?];
    let mut members = Vec::new();
    let mut labels = Vec::new();
    let mut idx = vec![0usize; slots];
    'outer: loop {
        if members.len() >= max_size {
            break;
        }
        let chosen: Vec<Observable> = idx.iter().map(|&i| pool[i].clone()).collect();
        let observables = match kind {
            BasisKind::Nilkey => std::iter::once(Observable::one()).chain(chosen).collect(),
            // f₀ is the last slot
            _ => {
                let mut v = vec![chosen[slots - 1].clone()];
                v.extend(chosen[..slots - 1].iter().cloned());
                v
            }
        };
        let spec = CorrelationSpec::new(system.clone(), iterates.clone(), observables)?;
        labels.push(format!("{:?}{:?}", kind, idx));
        members.push(Nilsequence::Correlation { spec: Box::new(spec), step });
        for s in (0..slots).rev() {
            idx[s] += 1;
            if idx[s] < pool.len() {
                continue 'outer;
            }
            idx[s] = 0;
        }
        break;
    }
    Ok(NilBasis { members, labels, provenance: kind })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> FixedReal {
        FixedReal::parse(s).unwrap()
    }

    #[test]
    fn pow_examples() {
        let g = HeisenbergElement::new(fx("0.3"), fx("sqrt2"), fx("-1.25"));
        assert_eq!(g.pow(0).unwrap(), HeisenbergElement::identity());
        assert_eq!(g.pow(2).unwrap(), g.mul(&g).unwrap());
        let mut acc = HeisenbergElement::identity();
        for _ in 0..100 {
            acc = acc.mul(&g).unwrap();
        }
        assert_eq!(g.pow(100).unwrap(), acc);
        assert_eq!(g.pow(-3).unwrap().mul(&g.pow(3).unwrap()).unwrap(), HeisenbergElement::identity());
    }

    #[test]
    fn reduce_examples() {
        let g = HeisenbergElement::new(fx("0.3"), fx("0.7"), fx("0.2"));
        let (gamma, h) = malcev_reduce(&g).unwrap();
        assert_eq!(gamma, HeisenbergElement::identity());
        assert_eq!(h, g);
        let (gamma, h) = malcev_reduce(&HeisenbergElement::new(fx("1.3"), FixedReal::ZERO, FixedReal::ZERO)).unwrap();
        assert_eq!(gamma, HeisenbergElement::lattice(1, 0, 0));
        assert_eq!(h.x, fx("1.3").frac());
        let g = HeisenbergElement::new(fx("1.5"), fx("2.5"), fx("0.25"));
        let (gamma, h) = malcev_reduce(&g).unwrap();
        assert_eq!(gamma.mul(&h).unwrap(), g);
    }

    #[test]
    fn sequence_examples() {
        let s2 = fx("sqrt2");
        let psi = Nilsequence::character(s2);
        for n in [1i64, 7, 1000] {
            let want = e(s2.frac_bits().wrapping_mul(n as u64) as f64 / 18446744073709551616.0);
            assert!((psi.eval(n).unwrap() - want).norm() < 1e-15);
        }
        let one = Nilsequence::Heisenberg {
            g: HeisenbergElement::new(s2, fx("sqrt3"), FixedReal::ZERO),
            f: vec![HeisenbergTerm { coef: Complex64::new(1.0, 0.0), a: 0, b: 0, m: 0 }],
        };
        assert_eq!(one.eval(17).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(Nilsequence::Constant(Complex64::new(1.0, 0.0)).step(), 0);
    }

    #[test]
    fn exponents() {
        assert_eq!(nilkey_exponents(3), vec![6, 3, 2]);
        assert_eq!(bk_exponents(2), (vec![6, 3, 2], vec![4, 1]));
    }

    #[test]
    fn torus_basis_single_frequency() {
        let b = make_basis(&BasisSpec { kind: BasisKind::Torus, k: 1, frequencies: vec![fx("sqrt2")], orders: vec![1] }).unwrap();
        assert_eq!(b.len(), 3);
        let freqs: Vec<u64> = b.members.iter().map(|m| m.pure_frequency().unwrap()).collect();
        let g = fx("sqrt2").frac_bits();
        assert_eq!(freqs, vec![g.wrapping_neg(), 0, g]);
    }
}
