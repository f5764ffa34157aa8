//! Suspension flows over ℤ₁₂ and the transference inequalities.

use ergolab::correlate::{CorrelationSpec, SequenceSample};
use ergolab::fixed::FixedReal;
use ergolab::poly::{RealPolynomial, Window};
use ergolab::suspension::{
    flow_apply, lemma_f5_check, lemma_f6_constants, lemma_f6_numeric_check, weak_anti_uniform_bound, SuspensionFlow,
    SuspensionPoint,
};
use ergolab::systems::{e, Observable, StatePoint};

fn main() -> ergolab::error::Result<()> {
    let f = |s: &str| FixedReal::parse(s).unwrap();
    let sys = ergolab::seminorms::cyclic_shift_system(12, 1)?;
    let flow = SuspensionFlow::new(sys.clone(), 1)?;
    let p = SuspensionPoint::new(StatePoint(vec![3]), vec![vec![f("0.75")]])?;
    let q = flow_apply(&flow, &[vec![f("1.5")]], &p)?;
    println!("(3, 0.75) flowed by 1.5 → ({}, {})", q.base.0[0], q.heights[0][0]);

    let rep = lemma_f5_check(&|x: &[i64]| ((x[0] * 7919) % 13) as f64 / 13.0, f("sqrt2"), 1, Window::new(0, 10_000)?)?;
    println!("lattice averaging: lhs {:.5} ≤ {:.5}", rep.lhs, rep.rhs_finite);

    let c = lemma_f6_constants(2, f("1"))?;
    println!("c_2 = {}, c_(2,1) = {}", c.c_k, c.c_ks);
    let rep = lemma_f6_numeric_check(&Observable::character(vec![1]), &sys.transformations[0], &sys.space, f("0.5"), 1, 4, 1 << 30)?;
    println!("seminorm transfer: {:.6} ≤ {:.6}", rep.lhs, rep.bound);

    let spec = CorrelationSpec::new(
        sys,
        vec![vec![RealPolynomial::parse(&["0", "sqrt2"])?]],
        vec![Observable::character(vec![-1]), Observable::character(vec![1])],
    )?;
    let w = Window::new(0, 10_000)?;
    let b = SequenceSample::from_fn(w, |n| e(-(n as f64) * 0.1));
    for d in ["0.2", "0.1", "0.05"] {
        let r = weak_anti_uniform_bound(&spec, &b, f(d), w, None)?;
        println!("δ = {}: |avg ab| = {:.4} ≤ {:.4}, c_δ = {:.4}", d, r.lhs, r.rhs, r.c_delta);
    }
    Ok(())
}
