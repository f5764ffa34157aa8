//! Invertible commuting measure-preserving systems on tori, finite cyclic
//! groups and their products.
//!
//! A state space is a list of factors. Torus coordinates are stored as the 64
//! fractional bits of a point of `[0,1)`, cyclic coordinates as residues. Every
//! supported transformation acts on each factor as an affine map
//! `x ↦ Mx + c`, with arithmetic mod `2^64` on torus factors (an integer
//! matrix acting on the `2^-64` grid) and mod `q` on `ℤ_q` factors. Powers,
//! inverses, composition and equality of such maps are therefore exact.
//!
//! Observables with a finite Fourier expansion are pushed forward through
//! affine maps symbolically: `e(k·(Mx+c)) = e(k·c)·e((Mᵀk)·x)`. Their
//! integrals are read off as the zero-frequency coefficient.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fixed::FixedReal;
use crate::reduce;

const TAU: f64 = std::f64::consts::TAU;
const TWO64: f64 = 18446744073709551616.0;

/// Coordinate ring: `ℤ/2^64` for torus coordinates, `ℤ/q` for cyclic ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulus {
    Torus,
    Cyclic(u64),
}

impl Modulus {
    pub fn reduce(self, v: i128) -> u64 {
        match self {
            Modulus::Torus => v as u64,
            Modulus::Cyclic(q) => v.rem_euclid(q as i128) as u64,
        }
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        match self {
            Modulus::Torus => a.wrapping_add(b),
            Modulus::Cyclic(q) => ((a as u128 + b as u128) % q as u128) as u64,
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        match self {
            Modulus::Torus => a.wrapping_mul(b),
            Modulus::Cyclic(q) => ((a as u128 * b as u128) % q as u128) as u64,
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        match self {
            Modulus::Torus => a.wrapping_neg(),
            Modulus::Cyclic(q) => {
                if a == 0 {
                    0
                } else {
                    q - a
                }
            }
        }
    }

    /// Multiplicative inverse when it exists.
    pub fn inv(self, a: u64) -> Option<u64> {
        match self {
            Modulus::Torus => {
                if a & 1 == 0 {
                    return None;
                }
                // Newton iteration doubles correct low bits each step
                let mut x: u64 = a;
                for _ in 0..6 {
                    x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
                }
                Some(x)
            }
            Modulus::Cyclic(q) => {
                let (mut r0, mut r1) = (q as i128, a as i128);
                let (mut s0, mut s1) = (0i128, 1i128);
                while r1 != 0 {
                    let t = r0 / r1;
                    (r0, r1) = (r1, r0 - t * r1);
                    (s0, s1) = (s1, s0 - t * s1);
                }
                if r0 != 1 {
                    return None;
                }
                Some(s0.rem_euclid(q as i128) as u64)
            }
        }
    }

    /// The residue as a fraction of the modulus, in `[0,1)`.
    #[inline]
    pub fn fraction(self, a: u64) -> f64 {
        match self {
            Modulus::Torus => a as f64 / TWO64,
            Modulus::Cyclic(q) => a as f64 / q as f64,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, Modulus::Torus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    Torus { dim: usize },
    Cyclic { modulus: u64, dim: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Torus { dim } | Factor::Cyclic { dim, .. } => dim,
        }
    }

    pub fn modulus(&self) -> Modulus {
        match *self {
            Factor::Torus { .. } => Modulus::Torus,
            Factor::Cyclic { modulus, .. } => Modulus::Cyclic(modulus),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSpace {
    pub factors: Vec<Factor>,
}

impl StateSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(LabError::InvalidInput("state space needs at least one factor".into()));
        }
        for f in &factors {
            if f.dim() == 0 {
                return Err(LabError::InvalidInput("factor dimension must be positive".into()));
            }
            if let Factor::Cyclic { modulus, .. } = f {
                if *modulus < 1 {
                    return Err(LabError::InvalidInput("cyclic modulus must be ≥ 1".into()));
                }
            }
        }
        Ok(StateSpace { factors })
    }

    pub fn torus(dim: usize) -> Self {
        StateSpace { factors: vec![Factor::Torus { dim }] }
    }

    pub fn cyclic(modulus: u64) -> Self {
        StateSpace { factors: vec![Factor::Cyclic { modulus, dim: 1 }] }
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).sum()
    }

    /// Modulus of every flat coordinate.
    pub fn moduli(&self) -> Vec<Modulus> {
        self.factors.iter().flat_map(|f| std::iter::repeat_n(f.modulus(), f.dim())).collect()
    }

    /// Number of points, or `None` when a torus factor is present.
    pub fn size(&self) -> Option<u128> {
        let mut n: u128 = 1;
        for f in &self.factors {
            match f {
                Factor::Torus { .. } => return None,
                Factor::Cyclic { modulus, dim } => {
                    for _ in 0..*dim {
                        n = n.checked_mul(*modulus as u128)?;
                    }
                }
            }
        }
        Some(n)
    }

    pub fn is_finite(&self) -> bool {
        self.size().is_some()
    }

    /// Mixed-radix point with index `i` (first coordinate least significant).
    pub fn point(&self, mut i: u128) -> StatePoint {
        let mut coords = Vec::with_capacity(self.dim());
        for m in self.moduli() {
            match m {
                Modulus::Cyclic(q) => {
                    coords.push((i % q as u128) as u64);
                    i /= q as u128;
                }
                Modulus::Torus => coords.push(0),
            }
        }
        StatePoint(coords)
    }

    pub fn index_of(&self, x: &StatePoint) -> Result<u128> {
        let mut idx: u128 = 0;
        let mut scale: u128 = 1;
        for (m, &c) in self.moduli().iter().zip(&x.0) {
            match m {
                Modulus::Cyclic(q) => {
                    idx += c as u128 * scale;
                    scale *= *q as u128;
                }
                Modulus::Torus => return Err(LabError::Mismatch("torus points are not indexed".into())),
            }
        }
        Ok(idx)
    }

    pub fn contains(&self, x: &StatePoint) -> bool {
        x.0.len() == self.dim()
            && self.moduli().iter().zip(&x.0).all(|(m, &c)| match m {
                Modulus::Torus => true,
                Modulus::Cyclic(q) => c < *q,
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatePoint(pub Vec<u64>);

impl StatePoint {
    /// Builds a point from real coordinates on torus factors and residues on
    /// cyclic ones, all given as fixed-point values.
    pub fn from_fixed(space: &StateSpace, coords: &[FixedReal]) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(LabError::Mismatch("point dimension".into()));
        }
        Ok(StatePoint(
            space
                .moduli()
                .iter()
                .zip(coords)
                .map(|(m, c)| match m {
                    Modulus::Torus => c.frac_bits(),
                    Modulus::Cyclic(_) => m.reduce(c.floor()),
                })
                .collect(),
        ))
    }

    pub fn to_f64(&self, space: &StateSpace) -> Vec<f64> {
        space
            .moduli()
            .iter()
            .zip(&self.0)
            .map(|(m, &c)| match m {
                Modulus::Torus => c as f64 / TWO64,
                Modulus::Cyclic(_) => c as f64,
            })
            .collect()
    }
}

/// `x ↦ Mx + c` on one factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineBlock {
    pub modulus: Modulus,
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub m: Vec<u64>,
    pub c: Vec<u64>,
}

impl AffineBlock {
    pub fn identity(modulus: Modulus, dim: usize) -> Self {
        let mut m = vec![0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1;
        }
        AffineBlock { modulus, dim, m, c: vec![0; dim] }
    }

    pub fn translation(modulus: Modulus, c: Vec<u64>) -> Self {
        let mut b = AffineBlock::identity(modulus, c.len());
        b.c = c;
        b
    }

    pub fn is_translation(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.m[i * self.dim + j] == (i == j) as u64))
    }

    #[inline]
    pub fn apply(&self, x: &[u64], out: &mut [u64]) {
        let md = self.modulus;
        for i in 0..self.dim {
            let mut acc = self.c[i];
            for j in 0..self.dim {
                acc = md.add(acc, md.mul(self.m[i * self.dim + j], x[j]));
            }
            out[i] = acc;
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineBlock) -> AffineBlock {
        let (d, md) = (self.dim, self.modulus);
        let mut m = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0;
                for k in 0..d {
                    acc = md.add(acc, md.mul(self.m[i * d + k], other.m[k * d + j]));
                }
                m[i * d + j] = acc;
            }
        }
        let mut c = vec![0; d];
        self.apply(&other.c, &mut c);
        AffineBlock { modulus: md, dim: d, m, c }
    }

    fn det_and_adjugate(&self) -> (u64, Vec<u64>) {
        let (d, md) = (self.dim, self.modulus);
        let minor = |skip_r: usize, skip_c: usize| -> Vec<u64> {
            let mut v = Vec::with_capacity((d - 1) * (d - 1));
            for i in (0..d).filter(|&i| i != skip_r) {
                for j in (0..d).filter(|&j| j != skip_c) {
                    v.push(self.m[i * d + j]);
                }
            }
            v
        };
        let det = det_mod(md, d, &self.m);
        let mut adj = vec![0; d * d];
        if d == 1 {
            adj[0] = 1;
            return (det, adj);
        }
        for i in 0..d {
            for j in 0..d {
                let cof = det_mod(md, d - 1, &minor(i, j));
                let cof = if (i + j) % 2 == 1 { md.neg(cof) } else { cof };
                adj[j * d + i] = cof;
            }
        }
        (det, adj)
    }

    pub fn inverse(&self) -> Result<AffineBlock> {
        if self.is_translation() {
            let md = self.modulus;
            return Ok(AffineBlock::translation(md, self.c.iter().map(|&c| md.neg(c)).collect()));
        }
        let (det, adj) = self.det_and_adjugate();
        let md = self.modulus;
        let di = md.inv(det).ok_or_else(|| LabError::InvalidInput("affine block is not invertible".into()))?;
        let m: Vec<u64> = adj.iter().map(|&a| md.mul(a, di)).collect();
        let lin = AffineBlock { modulus: md, dim: self.dim, m, c: vec![0; self.dim] };
        let mut c = vec![0; self.dim];
        lin.apply(&self.c, &mut c);
        Ok(AffineBlock { c: c.into_iter().map(|v| md.neg(v)).collect(), ..lin })
    }

    /// `self^n` by squaring (translations in closed form).
    pub fn pow(&self, n: i128) -> Result<AffineBlock> {
        let md = self.modulus;
        if self.is_translation() {
            let k = md.reduce(n);
            return Ok(AffineBlock::translation(md, self.c.iter().map(|&c| md.mul(c, k)).collect()));
        }
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = AffineBlock::identity(md, self.dim);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.compose(&sq);
            }
        }
        Ok(acc)
    }

    /// `Mᵀk` reduced mod the modulus.
    pub fn transpose_apply(&self, k: &[u64], out: &mut [u64]) {
        let (d, md) = (self.dim, self.modulus);
        for j in 0..d {
            let mut acc = 0;
            for i in 0..d {
                acc = md.add(acc, md.mul(self.m[i * d + j], k[i]));
            }
            out[j] = acc;
        }
    }
}

fn det_mod(md: Modulus, d: usize, m: &[u64]) -> u64 {
    match d {
        0 => 1,
        1 => m[0],
        2 => md.sub(md.mul(m[0], m[3]), md.mul(m[1], m[2])),
        _ => {
            let mut acc = 0;
            for j in 0..d {
                let mut sub = Vec::with_capacity((d - 1) * (d - 1));
                for i in 1..d {
                    for jj in (0..d).filter(|&jj| jj != j) {
                        sub.push(m[i * d + jj]);
                    }
                }
                let term = md.mul(m[j], det_mod(md, d - 1, &sub));
                acc = if j % 2 == 0 { md.add(acc, term) } else { md.sub(acc, term) };
            }
            acc
        }
    }
}

fn det_i128(d: usize, m: &[i128]) -> Option<i128> {
    match d {
        0 => Some(1),
        1 => Some(m[0]),
        _ => {
            let mut acc: i128 = 0;
            for j in 0..d {
                let mut sub = Vec::with_capacity((d - 1) * (d - 1));
                for i in 1..d {
                    for jj in (0..d).filter(|&jj| jj != j) {
                        sub.push(m[i * d + jj]);
                    }
                }
                let term = m[j].checked_mul(det_i128(d - 1, &sub)?)?;
                acc = if j % 2 == 0 { acc.checked_add(term)? } else { acc.checked_sub(term)? };
            }
            Some(acc)
        }
    }
}

/// Declarative action of a transformation on one factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorMap {
    Identity,
    /// Torus rotation `x ↦ x + α`.
    Rotation { alpha: Vec<FixedReal> },
    /// Cyclic shift `x ↦ x + r mod q`.
    Shift { by: Vec<i64> },
    /// Automorphism `x ↦ Ax` with `|det A| = 1` (torus) or `det A` a unit mod `q`.
    Automorphism { matrix: Vec<Vec<i64>> },
}

impl FactorMap {
    fn compile(&self, factor: &Factor) -> Result<AffineBlock> {
        let (md, d) = (factor.modulus(), factor.dim());
        match self {
            FactorMap::Identity => Ok(AffineBlock::identity(md, d)),
            FactorMap::Rotation { alpha } => {
                if !md.is_torus() {
                    return Err(LabError::InvalidInput("rotations act on torus factors".into()));
                }
                if alpha.len() != d {
                    return Err(LabError::Mismatch(format!("rotation vector has length {}, factor dim {}", alpha.len(), d)));
                }
                Ok(AffineBlock::translation(md, alpha.iter().map(|a| a.frac_bits()).collect()))
            }
            FactorMap::Shift { by } => {
                if md.is_torus() {
                    return Err(LabError::InvalidInput("shifts act on cyclic factors".into()));
                }
                if by.len() != d {
                    return Err(LabError::Mismatch(format!("shift vector has length {}, factor dim {}", by.len(), d)));
                }
                Ok(AffineBlock::translation(md, by.iter().map(|&r| md.reduce(r as i128)).collect()))
            }
            FactorMap::Automorphism { matrix } => {
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(LabError::Mismatch(format!("matrix must be {}×{}", d, d)));
                }
                let flat: Vec<i128> = matrix.iter().flatten().map(|&v| v as i128).collect();
                let det = det_i128(d, &flat).ok_or_else(|| LabError::Headroom("determinant overflow".into()))?;
                match md {
                    Modulus::Torus if det.abs() != 1 => {
                        return Err(LabError::InvalidInput(format!("torus automorphism needs |det| = 1, got {}", det)))
                    }
                    Modulus::Cyclic(_) if md.inv(md.reduce(det)).is_none() => {
                        return Err(LabError::InvalidInput(format!("det {} is not a unit mod the modulus", det)))
                    }
                    _ => {}
                }
                Ok(AffineBlock { modulus: md, dim: d, m: flat.iter().map(|&v| md.reduce(v)).collect(), c: vec![0; d] })
            }
        }
    }
}

/// Product transformation acting blockwise on the factors of a state space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transformation {
    pub blocks: Vec<AffineBlock>,
}

impl Transformation {
    pub fn new(space: &StateSpace, maps: &[FactorMap]) -> Result<Self> {
        if maps.len() != space.factors.len() {
            return Err(LabError::Mismatch(format!(
                "{} factor maps for {} factors",
                maps.len(),
                space.factors.len()
            )));
        }
        let blocks = maps.iter().zip(&space.factors).map(|(m, f)| m.compile(f)).collect::<Result<_>>()?;
        Ok(Transformation { blocks })
    }

    pub fn identity(space: &StateSpace) -> Self {
        Transformation { blocks: space.factors.iter().map(|f| AffineBlock::identity(f.modulus(), f.dim())).collect() }
    }

    pub fn rotation(alpha: &[FixedReal]) -> Self {
        Transformation {
            blocks: vec![AffineBlock::translation(Modulus::Torus, alpha.iter().map(|a| a.frac_bits()).collect())],
        }
    }

    pub fn shift(q: u64, r: i64) -> Self {
        let md = Modulus::Cyclic(q);
        Transformation { blocks: vec![AffineBlock::translation(md, vec![md.reduce(r as i128)])] }
    }

    pub fn torus_automorphism(matrix: &[Vec<i64>]) -> Result<Self> {
        let space = StateSpace::torus(matrix.len());
        Transformation::new(&space, &[FactorMap::Automorphism { matrix: matrix.to_vec() }])
    }

    pub fn cyclic_automorphism(q: u64, matrix: &[Vec<i64>]) -> Result<Self> {
        let space = StateSpace::new(vec![Factor::Cyclic { modulus: q, dim: matrix.len() }])?;
        Transformation::new(&space, &[FactorMap::Automorphism { matrix: matrix.to_vec() }])
    }

    /// Direct product: `self` on the leading factors, `other` on the rest.
    pub fn product(&self, other: &Transformation) -> Transformation {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Transformation { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn fits(&self, space: &StateSpace) -> bool {
        self.blocks.len() == space.factors.len()
            && self.blocks.iter().zip(&space.factors).all(|(b, f)| b.dim == f.dim() && b.modulus == f.modulus())
    }

    pub fn apply(&self, x: &StatePoint) -> StatePoint {
        let mut out = vec![0u64; x.0.len()];
        self.apply_into(&x.0, &mut out);
        StatePoint(out)
    }

    pub fn apply_into(&self, x: &[u64], out: &mut [u64]) {
        let mut off = 0;
        for b in &self.blocks {
            b.apply(&x[off..off + b.dim], &mut out[off..off + b.dim]);
            off += b.dim;
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Transformation) -> Transformation {
        Transformation { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.compose(b)).collect() }
    }

    pub fn inverse(&self) -> Result<Transformation> {
        Ok(Transformation { blocks: self.blocks.iter().map(AffineBlock::inverse).collect::<Result<_>>()? })
    }

    pub fn power(&self, n: i128) -> Result<Transformation> {
        Ok(Transformation { blocks: self.blocks.iter().map(|b| b.pow(n)).collect::<Result<_>>()? })
    }

    pub fn commutes_with(&self, other: &Transformation) -> bool {
        self.compose(other) == other.compose(self)
    }

    /// Image indices of all points of a finite space.
    pub fn permutation(&self, space: &StateSpace) -> Result<Vec<usize>> {
        let n = space.size().ok_or_else(|| LabError::Mismatch("permutation needs a finite space".into()))?;
        if n > (1 << 26) {
            return Err(LabError::Budget { what: "permutation table".into(), needed: n, budget: 1 << 26 });
        }
        let perm: Vec<usize> = (0..n)
            .map(|i| space.index_of(&self.apply(&space.point(i))).map(|j| j as usize))
            .collect::<Result<_>>()?;
        Ok(perm)
    }

    /// Order of the transformation on a finite space (lcm of cycle lengths).
    pub fn period(&self, space: &StateSpace) -> Result<u128> {
        permutation_period(&self.permutation(space)?)
    }
}

pub fn permutation_period(perm: &[usize]) -> Result<u128> {
    let mut seen = vec![false; perm.len()];
    let mut l: u128 = 1;
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len: u128 = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        l = num_integer::lcm(l, len);
        if l > (1u128 << 100) {
            return Err(LabError::Headroom("permutation period overflow".into()));
        }
    }
    Ok(l)
}

/// `T^m x`.
pub fn power_apply(t: &Transformation, m: i128, x: &StatePoint) -> Result<StatePoint> {
    Ok(t.power(m)?.apply(x))
}

/// How integrals are approximated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Every point of a finite space.
    Enumerate,
    /// Uniform pseudorandom points from a seeded ChaCha8 stream.
    Random { seed: u64, count: usize },
    /// `per_dim` equally spaced values per torus coordinate, all residues per
    /// cyclic coordinate.
    Lattice { per_dim: u64 },
}

impl Sampler {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Sampler::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn points(&self, space: &StateSpace) -> Result<Vec<StatePoint>> {
        match self {
            Sampler::Enumerate => {
                let n = space
                    .size()
                    .ok_or_else(|| LabError::InvalidInput("enumeration needs a finite space".into()))?;
                if n > (1 << 24) {
                    return Err(LabError::Budget { what: "enumerated points".into(), needed: n, budget: 1 << 24 });
                }
                Ok((0..n).map(|i| space.point(i)).collect())
            }
            Sampler::Random { seed, count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let moduli = space.moduli();
                Ok((0..*count)
                    .map(|_| {
                        StatePoint(
                            moduli
                                .iter()
                                .map(|m| match m {
                                    Modulus::Torus => rng.gen::<u64>(),
                                    Modulus::Cyclic(q) => rng.gen_range(0..*q),
                                })
                                .collect(),
                        )
                    })
                    .collect())
            }
            Sampler::Lattice { per_dim } => {
                if *per_dim == 0 {
                    return Err(LabError::InvalidInput("lattice needs per_dim ≥ 1".into()));
                }
                let moduli = space.moduli();
                let radices: Vec<u64> = moduli
                    .iter()
                    .map(|m| match m {
                        Modulus::Torus => *per_dim,
                        Modulus::Cyclic(q) => *q,
                    })
                    .collect();
                let total: u128 = radices.iter().map(|&r| r as u128).product();
                if total > (1 << 24) {
                    return Err(LabError::Budget { what: "lattice points".into(), needed: total, budget: 1 << 24 });
                }
                Ok((0..total)
                    .map(|mut i| {
                        StatePoint(
                            moduli
                                .iter()
                                .zip(&radices)
                                .map(|(m, &r)| {
                                    let j = (i % r as u128) as u64;
                                    i /= r as u128;
                                    match m {
                                        Modulus::Torus => (((j as u128) << 64) / r as u128) as u64,
                                        Modulus::Cyclic(_) => j,
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect())
            }
        }
    }
}

/// `e(φ) = exp(2πiφ)`.
#[inline]
pub fn e(phase: f64) -> Complex64 {
    let p = phase - phase.floor();
    Complex64::from_polar(1.0, TAU * p)
}

/// Finite Fourier expansion with frequencies reduced per coordinate.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Spectrum {
    pub terms: BTreeMap<Vec<u64>, Complex64>,
}

/// `e(k·x)` for frequency and point given in the coordinate rings.
#[inline]
pub fn character_value(moduli: &[Modulus], k: &[u64], x: &[u64]) -> Complex64 {
    let mut torus: u64 = 0;
    let mut rest = 0.0;
    for ((m, &ki), &xi) in moduli.iter().zip(k).zip(x) {
        match m {
            Modulus::Torus => torus = torus.wrapping_add(ki.wrapping_mul(xi)),
            Modulus::Cyclic(_) => rest += m.fraction(m.mul(ki, xi)),
        }
    }
    e(torus as f64 / TWO64 + rest)
}

impl Spectrum {
    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(vec![0; dim], c);
        }
        Spectrum { terms }
    }

    pub fn add_term(&mut self, k: Vec<u64>, c: Complex64) {
        let entry = self.terms.entry(k).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in self.terms.values_mut() {
            *v *= s;
        }
    }

    pub fn add(&mut self, o: &Spectrum) {
        for (k, c) in &o.terms {
            self.add_term(k.clone(), *c);
        }
    }

    pub fn mul(&self, o: &Spectrum, moduli: &[Modulus]) -> Spectrum {
        let mut out = Spectrum::default();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                let k: Vec<u64> = moduli.iter().zip(k1.iter().zip(k2)).map(|(m, (a, b))| m.add(*a, *b)).collect();
                out.add_term(k, c1 * c2);
            }
        }
        out
    }

    /// Spectrum of `f ∘ T`.
    pub fn push(&self, t: &Transformation, moduli: &[Modulus]) -> Spectrum {
        let mut out = Spectrum::default();
        for (k, c) in &self.terms {
            let mut nk = vec![0u64; k.len()];
            let mut off = 0;
            for b in &t.blocks {
                b.transpose_apply(&k[off..off + b.dim], &mut nk[off..off + b.dim]);
                off += b.dim;
            }
            let shift: Vec<u64> = t.blocks.iter().flat_map(|b| b.c.iter().copied()).collect();
            out.add_term(nk, c * character_value(moduli, k, &shift));
        }
        out
    }

    /// Zero-frequency coefficient.
    pub fn mean(&self) -> Complex64 {
        self.terms
            .iter()
            .find(|(k, _)| k.iter().all(|&v| v == 0))
            .map(|(_, c)| *c)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `(Σ |c_k|²)^{1/2}`, the L² norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eval(&self, moduli: &[Modulus], x: &[u64]) -> Complex64 {
        self.terms.iter().map(|(k, c)| c * character_value(moduli, k, x)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coef: Complex64,
    pub freq: Vec<i64>,
}

/// Bounded functions on a state space. Tensor products are products of
/// observables that depend on disjoint coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Constant { value: Complex64 },
    /// `e(k·x)`; on a cyclic coordinate `x/q` replaces `x`.
    Character { freq: Vec<i64> },
    /// `Σ c_j e(k_j·x)`.
    Trig { terms: Vec<TrigTerm> },
    /// Values on the points of a finite space, by point index.
    Table { values: Vec<Complex64> },
    Product { factors: Vec<Observable> },
}

impl Observable {
    pub fn one() -> Self {
        Observable::Constant { value: Complex64::new(1.0, 0.0) }
    }

    pub fn character(freq: Vec<i64>) -> Self {
        Observable::Character { freq }
    }

    /// `cos(2π k·x)`.
    pub fn cos(freq: Vec<i64>) -> Self {
        let neg = freq.iter().map(|v| -v).collect();
        Observable::Trig {
            terms: vec![TrigTerm { coef: Complex64::new(0.5, 0.0), freq }, TrigTerm { coef: Complex64::new(0.5, 0.0), freq: neg }],
        }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        match self {
            Observable::Constant { value } => Observable::Constant { value: value.conj() },
            Observable::Character { freq } => Observable::Character { freq: freq.iter().map(|v| -v).collect() },
            Observable::Trig { terms } => Observable::Trig {
                terms: terms
                    .iter()
                    .map(|t| TrigTerm { coef: t.coef.conj(), freq: t.freq.iter().map(|v| -v).collect() })
                    .collect(),
            },
            Observable::Table { values } => Observable::Table { values: values.iter().map(|v| v.conj()).collect() },
            Observable::Product { factors } => Observable::Product { factors: factors.iter().map(Observable::conj).collect() },
        }
    }

    /// Upper bound on `‖f‖∞`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Observable::Constant { value } => value.norm(),
            Observable::Character { .. } => 1.0,
            Observable::Trig { terms } => terms.iter().map(|t| t.coef.norm()).sum(),
            Observable::Table { values } => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Observable::Product { factors } => factors.iter().map(Observable::sup_bound).product(),
        }
    }

    /// Rescales so that `sup_bound ≤ 1`.
    pub fn normalized(self) -> Self {
        let s = self.sup_bound();
        if s <= 1.0 {
            return self;
        }
        match self {
            Observable::Constant { value } => Observable::Constant { value: value / s },
            Observable::Trig { terms } => Observable::Trig {
                terms: terms.into_iter().map(|t| TrigTerm { coef: t.coef / s, freq: t.freq }).collect(),
            },
            Observable::Table { values } => Observable::Table { values: values.into_iter().map(|v| v / s).collect() },
            Observable::Product { factors } => {
                Observable::Product { factors: factors.into_iter().map(Observable::normalized).collect() }
            }
            c @ Observable::Character { .. } => c,
        }
    }

    pub fn check(&self, space: &StateSpace) -> Result<()> {
        let d = space.dim();
        match self {
            Observable::Constant { .. } => Ok(()),
            Observable::Character { freq } => {
                if freq.len() != d {
                    return Err(LabError::Mismatch(format!("frequency length {} on a {}-dim space", freq.len(), d)));
                }
                Ok(())
            }
            Observable::Trig { terms } => {
                terms.iter().try_for_each(|t| Observable::Character { freq: t.freq.clone() }.check(space))
            }
            Observable::Table { values } => match space.size() {
                Some(n) if n == values.len() as u128 => Ok(()),
                _ => Err(LabError::Mismatch("table length must equal the number of points".into())),
            },
            Observable::Product { factors } => factors.iter().try_for_each(|f| f.check(space)),
        }
    }

    pub fn is_spectral(&self) -> bool {
        match self {
            Observable::Table { .. } => false,
            Observable::Product { factors } => factors.iter().all(Observable::is_spectral),
            _ => true,
        }
    }

    pub fn spectrum(&self, space: &StateSpace) -> Option<Spectrum> {
        let moduli = space.moduli();
        let red = |freq: &[i64]| -> Vec<u64> { moduli.iter().zip(freq).map(|(m, &k)| m.reduce(k as i128)).collect() };
        match self {
            Observable::Constant { value } => Some(Spectrum::constant(moduli.len(), *value)),
            Observable::Character { freq } => {
                let mut s = Spectrum::default();
                s.add_term(red(freq), Complex64::new(1.0, 0.0));
                Some(s)
            }
            Observable::Trig { terms } => {
                let mut s = Spectrum::default();
                for t in terms {
                    s.add_term(red(&t.freq), t.coef);
                }
                Some(s)
            }
            Observable::Table { .. } => None,
            Observable::Product { factors } => {
                let mut acc = Spectrum::constant(moduli.len(), Complex64::new(1.0, 0.0));
                for f in factors {
                    acc = acc.mul(&f.spectrum(space)?, &moduli);
                }
                Some(acc)
            }
        }
    }

    pub fn eval(&self, space: &StateSpace, x: &StatePoint) -> Complex64 {
        let moduli = space.moduli();
        self.eval_with(space, &moduli, &x.0)
    }

    pub fn eval_with(&self, space: &StateSpace, moduli: &[Modulus], x: &[u64]) -> Complex64 {
        let red = |freq: &[i64]| -> Vec<u64> { moduli.iter().zip(freq).map(|(m, &k)| m.reduce(k as i128)).collect() };
        match self {
            Observable::Constant { value } => *value,
            Observable::Character { freq } => character_value(moduli, &red(freq), x),
            Observable::Trig { terms } => terms.iter().map(|t| t.coef * character_value(moduli, &red(&t.freq), x)).sum(),
            Observable::Table { values } => {
                let idx = space.index_of(&StatePoint(x.to_vec())).expect("table observable on a finite space");
                values[idx as usize]
            }
            Observable::Product { factors } => factors.iter().map(|f| f.eval_with(space, moduli, x)).product(),
        }
    }
}

/// Finitely many transformations on one state space, checked to commute.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutingSystem {
    pub space: StateSpace,
    pub transformations: Vec<Transformation>,
    pub sampler: Sampler,
}

impl CommutingSystem {
    pub fn new(space: StateSpace, transformations: Vec<Transformation>, sampler: Sampler) -> Result<Self> {
        for (i, t) in transformations.iter().enumerate() {
            if !t.fits(&space) {
                return Err(LabError::Mismatch(format!("transformation {} does not act on the declared space", i)));
            }
        }
        for i in 0..transformations.len() {
            for j in i + 1..transformations.len() {
                if !transformations[i].commutes_with(&transformations[j]) {
                    return Err(LabError::NonCommuting(format!("T{} and T{}", i + 1, j + 1)));
                }
            }
        }
        if matches!(sampler, Sampler::Enumerate) && !space.is_finite() {
            return Err(LabError::InvalidInput("enumeration sampler on an infinite space".into()));
        }
        let sys = CommutingSystem { space, transformations, sampler };
        let bad = sys.sampled_commutation_failures(64, 0x5eed)?;
        if let Some((i, j)) = bad.first() {
            return Err(LabError::NonCommuting(format!("T{} and T{} on sampled points", i + 1, j + 1)));
        }
        Ok(sys)
    }

    pub fn ell(&self) -> usize {
        self.transformations.len()
    }

    /// Pairs `(i, j)` for which `T_iT_jx ≠ T_jT_ix` at some sampled `x`.
    pub fn sampled_commutation_failures(&self, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        let pts = Sampler::Random { seed, count }.points(&self.space)?;
        let mut bad = Vec::new();
        for i in 0..self.ell() {
            for j in i + 1..self.ell() {
                let (a, b) = (&self.transformations[i], &self.transformations[j]);
                if pts.iter().any(|x| a.apply(&b.apply(x)) != b.apply(&a.apply(x))) {
                    bad.push((i, j));
                }
            }
        }
        Ok(bad)
    }

    pub fn points(&self) -> Result<Vec<StatePoint>> {
        self.sampler.points(&self.space)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Zero-frequency coefficient of the Fourier expansion.
    Spectral,
    /// Exact sum over a finite space.
    Enumerated,
    /// Sample mean.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: Complex64,
    pub std_error: f64,
    pub samples: u128,
    pub route: Route,
    pub seed: Option<u64>,
}

/// `∫ f dμ` for the Haar measure.
pub fn integrate(f: &Observable, system: &CommutingSystem) -> Result<Integral> {
    f.check(&system.space)?;
    if let Some(s) = f.spectrum(&system.space) {
        return Ok(Integral { value: s.mean(), std_error: 0.0, samples: 0, route: Route::Spectral, seed: None });
    }
    if system.space.is_finite() {
        return integrate_over(f, &system.space, &Sampler::Enumerate);
    }
    integrate_over(f, &system.space, &system.sampler)
}

/// Integral over the points of a given sampler.
pub fn integrate_over(f: &Observable, space: &StateSpace, sampler: &Sampler) -> Result<Integral> {
    let pts = sampler.points(space)?;
    let moduli = space.moduli();
    let n = pts.len();
    if n == 0 {
        return Err(LabError::InvalidInput("sampler produced no points".into()));
    }
    let sums = reduce::sum_real_vec(n, 3, |i, o| {
        let v = f.eval_with(space, &moduli, &pts[i].0);
        o[0] = v.re;
        o[1] = v.im;
        o[2] = v.norm_sqr();
    });
    let mean = Complex64::new(sums[0], sums[1]) / n as f64;
    let exact = matches!(sampler, Sampler::Enumerate);
    let var = if n > 1 { ((sums[2] / n as f64) - mean.norm_sqr()).max(0.0) * n as f64 / (n - 1) as f64 } else { 0.0 };
    Ok(Integral {
        value: mean,
        std_error: if exact { 0.0 } else { (var / n as f64).sqrt() },
        samples: n as u128,
        route: if exact { Route::Enumerated } else { Route::Sampled },
        seed: sampler.seed(),
    })
}

/// `∫ f · (g ∘ T) dμ`.
pub fn correlation(f: &Observable, g: &Observable, t: &Transformation, system: &CommutingSystem) -> Result<Complex64> {
    let space = &system.space;
    if let (Some(sf), Some(sg)) = (f.spectrum(space), g.spectrum(space)) {
        let moduli = space.moduli();
        return Ok(sf.mul(&sg.push(t, &moduli), &moduli).mean());
    }
    let pts = if space.is_finite() { Sampler::Enumerate.points(space)? } else { system.points()? };
    let moduli = space.moduli();
    let s = reduce::sum_complex(pts.len(), |i| {
        let x = &pts[i].0;
        let mut y = vec![0; x.len()];
        t.apply_into(x, &mut y);
        f.eval_with(space, &moduli, x) * g.eval_with(space, &moduli, &y)
    });
    Ok(s / pts.len() as f64)
}

/// `(1/N) Σ_{n=1}^{N} |⟨f, Tⁿg⟩ − ⟨f, 1⟩⟨1, g⟩|` with `⟨u, v⟩ = ∫ u·v̄`.
pub fn weak_mixing_defect(
    t: &Transformation,
    f: &Observable,
    g: &Observable,
    n_max: u64,
    system: &CommutingSystem,
) -> Result<f64> {
    if n_max == 0 {
        return Err(LabError::InvalidInput("N must be ≥ 1".into()));
    }
    let gc = g.conj();
    let prod = integrate(f, system)?.value * integrate(&gc, system)?.value;
    let mut acc = 0.0;
    let mut tn = t.clone();
    for _ in 1..=n_max {
        acc += (correlation(f, &gc, &tn, system)? - prod).norm();
        tn = tn.compose(t);
    }
    Ok(acc / n_max as f64)
}

/// Values of a function at the sampler's points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub points: Vec<StatePoint>,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    /// `(mean |F|²)^{1/2}` over the points.
    pub fn l2_norm(&self) -> f64 {
        let n = self.values.len().max(1);
        (reduce::sum_real(self.values.len(), |i| self.values[i].norm_sqr()) / n as f64).sqrt()
    }
}

/// Birkhoff averages `(1/N) Σ_{n=0}^{N−1} f(Tⁿx)` at the sampler's points.
pub fn ergodic_projection(
    f: &Observable,
    t: &Transformation,
    n_max: u64,
    system: &CommutingSystem,
) -> Result<SampledFunction> {
    if n_max == 0 {
        return Err(LabError::InvalidInput("N must be ≥ 1".into()));
    }
    let space = &system.space;
    let moduli = space.moduli();
    let points = system.points()?;
    let values = points
        .iter()
        .map(|x| {
            let mut cur = x.0.clone();
            let mut nxt = vec![0; cur.len()];
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..n_max {
                acc += f.eval_with(space, &moduli, &cur);
                t.apply_into(&cur, &mut nxt);
                std::mem::swap(&mut cur, &mut nxt);
            }
            acc / n_max as f64
        })
        .collect();
    Ok(SampledFunction { points, values })
}

/// Compares character sums of the sample cloud before and after applying
/// `t`; returns the largest deviation over the given frequencies.
pub fn pushforward_character_gap(
    t: &Transformation,
    space: &StateSpace,
    sampler: &Sampler,
    freqs: &[Vec<i64>],
) -> Result<f64> {
    let pts = sampler.points(space)?;
    let moduli = space.moduli();
    let mut worst: f64 = 0.0;
    for k in freqs {
        let chi = Observable::character(k.clone());
        let a = reduce::sum_complex(pts.len(), |i| chi.eval_with(space, &moduli, &pts[i].0));
        let b = reduce::sum_complex(pts.len(), |i| chi.eval_with(space, &moduli, &t.apply(&pts[i]).0));
        worst = worst.max((a - b).norm() / pts.len() as f64);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> FixedReal {
        FixedReal::parse(s).unwrap()
    }

    fn cat() -> Transformation {
        Transformation::torus_automorphism(&[vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn rotation_power_is_scalar_multiple() {
        let a = fx("sqrt2");
        let t = Transformation::rotation(&[a]);
        let x = StatePoint(vec![0]);
        let y = power_apply(&t, 5, &x).unwrap();
        assert_eq!(y.0[0], a.frac_bits().wrapping_mul(5));
    }

    #[test]
    fn cat_map_cube() {
        let t = cat();
        let x = StatePoint(vec![1 << 63, 1 << 62]);
        assert_eq!(power_apply(&t, 0, &x).unwrap(), x);
        let y = power_apply(&t, 3, &x).unwrap();
        assert_eq!(y, t.apply(&t.apply(&t.apply(&x))));
        // A³ = [[13,8],[8,5]] fixes (1/2, 1/4)
        assert_eq!(y, x);
        assert_eq!(t.power(3).unwrap().blocks[0].m, vec![13, 8, 8, 5]);
    }

    #[test]
    fn negative_powers_invert() {
        let t = cat();
        let x = StatePoint(vec![0x1234_5678_9abc_def0, 0x0fed_cba9_8765_4321]);
        for m in [-7i128, -1, 1, 13, 1000] {
            let y = power_apply(&t, m, &x).unwrap();
            assert_eq!(power_apply(&t, -m, &y).unwrap(), x);
        }
    }

    #[test]
    fn cyclic_inverse_matrix() {
        let t = Transformation::cyclic_automorphism(7, &[vec![2, 1], vec![1, 1]]).unwrap();
        let inv = t.inverse().unwrap();
        assert_eq!(t.compose(&inv), Transformation::identity(&StateSpace::new(vec![Factor::Cyclic { modulus: 7, dim: 2 }]).unwrap()));
        assert!(Transformation::cyclic_automorphism(6, &[vec![2, 0], vec![0, 1]]).is_err());
        assert!(Transformation::torus_automorphism(&[vec![2, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn integrals() {
        let sys = CommutingSystem::new(StateSpace::torus(1), vec![], Sampler::Random { seed: 1, count: 20000 }).unwrap();
        assert_eq!(integrate(&Observable::character(vec![1]), &sys).unwrap().value, Complex64::new(0.0, 0.0));
        assert_eq!(integrate(&Observable::one(), &sys).unwrap().value, Complex64::new(1.0, 0.0));
        // cos²(2πx) = 1/2 + cos(4πx)/2
        let cos = Observable::cos(vec![1]);
        let c2 = Observable::Product { factors: vec![cos.clone(), cos] };
        let exact = integrate(&c2, &sys).unwrap();
        assert!((exact.value.re - 0.5).abs() < 1e-15);
        let sampled = integrate_over(&c2, &sys.space, &sys.sampler).unwrap();
        assert!((sampled.value.re - 0.5).abs() < 1e-2);
        assert_eq!(sampled.route, Route::Sampled);
        assert_eq!(sampled.seed, Some(1));
    }

    #[test]
    fn cyclic_character_integrates_to_zero() {
        let space = StateSpace::cyclic(12);
        let sys = CommutingSystem::new(space.clone(), vec![Transformation::shift(12, 1)], Sampler::Enumerate).unwrap();
        let chi = Observable::character(vec![1]);
        let spectral = integrate(&chi, &sys).unwrap().value;
        let enumerated = integrate_over(&chi, &space, &Sampler::Enumerate).unwrap().value;
        assert_eq!(spectral, Complex64::new(0.0, 0.0));
        assert!(enumerated.norm() < 1e-14);
    }

    #[test]
    fn weak_mixing_examples() {
        let sys = CommutingSystem::new(StateSpace::torus(2), vec![cat()], Sampler::Random { seed: 2, count: 16 }).unwrap();
        let f = Observable::character(vec![1, 1]);
        assert_eq!(weak_mixing_defect(&cat(), &f, &f, 1000, &sys).unwrap(), 0.0);
        let rot = Transformation::rotation(&[fx("sqrt2")]);
        let sys1 = CommutingSystem::new(StateSpace::torus(1), vec![rot.clone()], Sampler::Lattice { per_dim: 64 }).unwrap();
        let g = Observable::character(vec![1]);
        assert!((weak_mixing_defect(&rot, &g, &g, 1000, &sys1).unwrap() - 1.0).abs() < 1e-12);
        let id = Transformation::identity(&StateSpace::torus(1));
        let h = Observable::cos(vec![1]);
        assert!((weak_mixing_defect(&id, &h, &h, 10, &sys1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ergodic_projection_orbits() {
        let space = StateSpace::cyclic(6);
        let t = Transformation::shift(6, 2);
        let sys = CommutingSystem::new(space, vec![t.clone()], Sampler::Enumerate).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); 6];
        vals[0] = Complex64::new(1.0, 0.0);
        let f = Observable::Table { values: vals };
        let p = ergodic_projection(&f, &t, 3, &sys).unwrap();
        for (i, v) in p.values.iter().enumerate() {
            let want = if i % 2 == 0 { 1.0 / 3.0 } else { 0.0 };
            assert!((v.re - want).abs() < 1e-15 && v.im == 0.0);
        }
        let erg = Transformation::shift(6, 1);
        let p = ergodic_projection(&f, &erg, 6, &sys).unwrap();
        assert!(p.values.iter().all(|v| (v.re - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn non_commuting_rejected() {
        let a = cat();
        let b = Transformation::torus_automorphism(&[vec![1, 1], vec![0, 1]]).unwrap();
        let r = CommutingSystem::new(StateSpace::torus(2), vec![a, b], Sampler::Lattice { per_dim: 4 });
        assert!(matches!(r, Err(LabError::NonCommuting(_))));
    }

    #[test]
    fn period_and_permutation() {
        let t = Transformation::shift(12, 5);
        let space = StateSpace::cyclic(12);
        assert_eq!(t.period(&space).unwrap(), 12);
        assert_eq!(Transformation::shift(8, 2).period(&StateSpace::cyclic(8)).unwrap(), 4);
    }
}
