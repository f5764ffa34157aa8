//! Splits a(n) = e([√2 n]√3) into a torus nilsequence and a small remainder.

use ergolab::decomp::decompose;
use ergolab::correlate::SequenceSample;
use ergolab::fixed::FixedReal;
use ergolab::nil::{make_basis, BasisKind, BasisSpec};
use ergolab::poly::Window;
use ergolab::systems::e;

fn main() -> ergolab::error::Result<()> {
    let f = |s: &str| FixedReal::parse(s).unwrap();
    let w = Window::new(1, 20_001)?;
    let (r2, r3) = (f("sqrt2"), f("sqrt3").to_f64());
    let a = SequenceSample::from_fn(w, |n| e(r2.checked_mul_int(n as i128).unwrap().floor() as f64 * r3));
    let ladder = [1u32, 4, 16, 32]
        .iter()
        .map(|&k| make_basis(&BasisSpec { kind: BasisKind::Torus, k: 1, frequencies: vec![r2, f("sqrt6")], orders: vec![k, 1] }))
        .collect::<ergolab::error::Result<Vec<_>>>()?;
    let rep = decompose(&a, &ladder, 0.1, w)?;
    for r in &rep.rungs {
        println!("rung {} ({} members): ‖e‖₂ = {:.4}", r.index, r.size, r.residual_norm);
    }
    println!("certified: {} at {:?}", rep.certified, rep.index);
    Ok(())
}
