//! Commuting transformations on tori and cyclic groups.

use ergolab::fixed::FixedReal;
use ergolab::systems::{
    ergodic_projection, integrate, power_apply, CommutingSystem, Observable, Sampler, StatePoint, StateSpace,
    Transformation,
};

fn main() -> ergolab::error::Result<()> {
    let cat = Transformation::torus_automorphism(&[vec![2, 1], vec![1, 1]])?;
    let space = StateSpace::torus(2);
    let x = StatePoint::from_fixed(&space, &[FixedReal::parse("sqrt2")?, FixedReal::parse("0.25")?])?;
    for m in [0i128, 3, -3, 1_000_000_007] {
        println!("A^{} x = {:?}", m, power_apply(&cat, m, &x)?.to_f64(&space));
    }

    let sys = CommutingSystem::new(space, vec![cat], Sampler::Random { seed: 1, count: 10_000 })?;
    let f = Observable::cos(vec![1, 0]);
    let i = integrate(&Observable::Product { factors: vec![f.clone(), f] }, &sys)?;
    println!("∫cos² = {:.6} via {:?}", i.value.re, i.route);

    let z6 = CommutingSystem::new(StateSpace::cyclic(6), vec![Transformation::shift(6, 2)], Sampler::Enumerate)?;
    let ind = Observable::Table { values: (0..6).map(|k| num_complex::Complex64::new((k == 0) as u8 as f64, 0.0)).collect() };
    let proj = ergodic_projection(&ind, &z6.transformations[0], 3, &z6)?;
    println!("E(1_0 | I) on ℤ₆ under +2: {:?}", proj.values.iter().map(|v| v.re).collect::<Vec<_>>());
    Ok(())
}
