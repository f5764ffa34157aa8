//! Deterministic parallel reductions.
//!
//! Inputs are cut into fixed 1024-element chunks, each chunk is summed
//! sequentially on whichever thread picks it up, and the chunk totals are
//! combined by a pairwise tree whose shape depends only on the input length.
//! The result is therefore bit-identical for every thread count.

use num_complex::Complex64;
use rayon::prelude::*;

pub const CHUNK: usize = 1024;

fn pairwise<T: Copy + std::ops::Add<Output = T>>(v: &[T], zero: T) -> T {
    match v.len() {
        0 => zero,
        1 => v[0],
        n => {
            let mid = n / 2;
            pairwise(&v[..mid], zero) + pairwise(&v[mid..], zero)
        }
    }
}

/// `Σ_{i<len} f(i)` over complex values.
pub fn sum_complex<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let zero = Complex64::new(0.0, 0.0);
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = zero;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    pairwise(&partial, zero)
}

/// `Σ_{i<len} f(i)` over reals.
pub fn sum_real<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    pairwise(&partial, 0.0)
}

/// Several real sums at once; `f` writes into a scratch slice of width `w`.
pub fn sum_real_vec<F>(len: usize, w: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = vec![0.0; w];
            let mut tmp = vec![0.0; w];
            for i in lo..hi {
                tmp.iter_mut().for_each(|t| *t = 0.0);
                f(i, &mut tmp);
                for (a, t) in acc.iter_mut().zip(&tmp) {
                    *a += *t;
                }
            }
            acc
        })
        .collect();
    fn tree(v: &[Vec<f64>], w: usize) -> Vec<f64> {
        match v.len() {
            0 => vec![0.0; w],
            1 => v[0].clone(),
            n => {
                let (a, b) = (tree(&v[..n / 2], w), tree(&v[n / 2..], w));
                a.iter().zip(&b).map(|(x, y)| x + y).collect()
            }
        }
    }
    tree(&partial, w)
}

/// Complex analogue of [`sum_real_vec`].
pub fn sum_complex_vec<F>(len: usize, w: usize, f: F) -> Vec<Complex64>
where
    F: Fn(usize, &mut [Complex64]) + Sync,
{
    let packed = sum_real_vec(len, 2 * w, |i, out| {
        let mut tmp = vec![Complex64::new(0.0, 0.0); w];
        f(i, &mut tmp);
        for (j, z) in tmp.iter().enumerate() {
            out[2 * j] = z.re;
            out[2 * j + 1] = z.im;
        }
    });
    (0..w).map(|j| Complex64::new(packed[2 * j], packed[2 * j + 1])).collect()
}

/// Maximum over `0..len`, NaN-free inputs assumed.
pub fn max_real<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..len).into_par_iter().map(&f).reduce(|| f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_of_thread_count() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let a = sum_real(100_000, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sum_real(100_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn vec_sums_match_scalar() {
        let v = sum_real_vec(5000, 2, |i, o| {
            o[0] = i as f64;
            o[1] = 1.0;
        });
        assert_eq!(v, vec![4999.0 * 5000.0 / 2.0, 5000.0]);
        assert_eq!(sum_real(0, |_| 1.0), 0.0);
    }
}
