//! Nice families, PET reduction traces and the van der Corput inequality.

use ergolab::pet::{is_nice, is_r_nice, pet_reduce, vdc_numeric_check, PolyFamily, VectorSequence, DEFAULT_MAX_DEPTH};
use ergolab::poly::Window;
use ergolab::systems::e;

fn main() -> ergolab::error::Result<()> {
    let fam = PolyFamily::parse(&[vec![vec!["0", "0", "1"], vec!["0", "1"]], vec![vec!["0", "1"], vec!["0"]]])?;
    println!("nice: {:?}", is_nice(&fam)?);
    let diag = PolyFamily::parse(&[vec![vec!["0", "0", "sqrt2"], vec!["0"]], vec![vec!["0"], vec!["0", "sqrt3"]]])?;
    println!("R-nice: {:?}", is_r_nice(&diag)?.nice);

    let quad = PolyFamily::parse(&[vec![vec!["0", "0", "1"], vec!["0", "1"]]])?;
    let trace = pet_reduce(&quad, DEFAULT_MAX_DEPTH)?;
    for (i, s) in trace.steps.iter().enumerate() {
        println!("step {}: {:?} pivot {} → {:?}", i + 1, s.family, s.pivot, s.result);
    }
    println!("d = {}, k = {}", trace.depth, trace.k_estimate);

    let v = VectorSequence::from_fn(0, 10_100, 1, |n, out| out[0] = e(n as f64 * std::f64::consts::SQRT_2));
    let r = vdc_numeric_check(&v, Window::new(0, 10_000)?, 32)?;
    println!("van der Corput: lhs {:.2e} ≤ rhs {:.4}", r.lhs, r.rhs);
    Ok(())
}
