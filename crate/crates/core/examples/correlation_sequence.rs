//! a(n) = ∫ f₀ · T^[√2 n] f₁ for a rotation by √3, written to CSV.

use ergolab::correlate::{corr_seq, CorrelationSpec};
use ergolab::fixed::FixedReal;
use ergolab::poly::{RealPolynomial, Window};
use ergolab::systems::{CommutingSystem, Observable, Sampler, StateSpace, Transformation};

fn main() -> ergolab::error::Result<()> {
    let sys = CommutingSystem::new(
        StateSpace::torus(1),
        vec![Transformation::rotation(&[FixedReal::parse("sqrt3")?])],
        Sampler::Lattice { per_dim: 64 },
    )?;
    let spec = CorrelationSpec::new(
        sys,
        vec![vec![RealPolynomial::parse(&["0", "sqrt2"])?]],
        vec![Observable::character(vec![-1]), Observable::character(vec![1])],
    )?;
    let a = corr_seq(&spec, Window::new(0, 1000)?)?;
    println!("route {:?}, mean {:.5}", a.route, a.mean());
    for n in 0..5 {
        println!("a({}) = {:.6}", n, a.get(n).unwrap());
    }
    let path = std::env::temp_dir().join("ergolab_correlation.csv");
    a.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
