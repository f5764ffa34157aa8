//! L² norms of averages along n and n² for two commuting cat maps, and a Cauchy ladder on ℤ₁₂.

use ergolab::correlate::{cauchy_report, multi_average, CorrelationSpec, WindowFamily};
use ergolab::poly::{RealPolynomial, Window};
use ergolab::systems::{CommutingSystem, Observable, Sampler, StateSpace, Transformation};

fn spec(sys: CommutingSystem, f1: Observable, f2: Observable) -> ergolab::error::Result<CorrelationSpec> {
    let lin = RealPolynomial::parse(&["0", "1"])?;
    let sq = RealPolynomial::parse(&["0", "0", "1"])?;
    let z = RealPolynomial::zero();
    CorrelationSpec::new(sys, vec![vec![lin, z.clone()], vec![z, sq]], vec![Observable::one(), f1, f2])
}

fn main() -> ergolab::error::Result<()> {
    let a = Transformation::torus_automorphism(&[vec![2, 1], vec![1, 1]])?;
    let b = Transformation::torus_automorphism(&[vec![3, 2], vec![2, 1]])?;
    let cats = CommutingSystem::new(StateSpace::torus(2), vec![a, b], Sampler::Random { seed: 3, count: 256 })?;
    let s = spec(cats, Observable::character(vec![1, 0]), Observable::character(vec![0, 1]))?;
    for w in [1000i64, 2000, 4000] {
        let (_, est) = multi_average(&s, Window::new(0, w)?)?;
        println!("W = {:5}: ‖A_W‖ = {:.5}", w, est.value);
    }

    let z12 = CommutingSystem::new(
        StateSpace::cyclic(12),
        vec![Transformation::shift(12, 1), Transformation::shift(12, 5)],
        Sampler::Enumerate,
    )?;
    let s = spec(z12, Observable::character(vec![1]), Observable::character(vec![2]))?;
    let rep = cauchy_report(&s, &WindowFamily::doubling(0, 12, 5)?, 1e-12)?;
    for r in &rep.rows {
        println!("[{}, {}) → [{}, {}): {:e}", r.from.start, r.from.end, r.to.start, r.to.end, r.diff_l2);
    }
    Ok(())
}
