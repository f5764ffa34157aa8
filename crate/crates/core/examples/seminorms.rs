//! Host-Kra seminorms on ℤ₁₂ and uniformity seminorms of sequences.

use ergolab::correlate::SequenceSample;
use ergolab::poly::Window;
use ergolab::seminorms::{
    cyclic_shift_system, hk_inverse_direction_checks, hk_seminorm, seq_seminorm, HKSeminormConfig, SeqSeminormConfig,
};
use ergolab::systems::{e, Observable};

fn main() -> ergolab::error::Result<()> {
    let sys = cyclic_shift_system(12, 1)?;
    let t = &sys.transformations[0];
    let chi = Observable::character(vec![1]);
    for k in 1..=4 {
        let v = hk_seminorm(&chi, t, &sys, &HKSeminormConfig { k, ..Default::default() })?;
        println!("|||χ₁|||_{} = {:.12}", k, v);
    }
    let rep = hk_inverse_direction_checks(&chi, t, &sys.space, 2, 1 << 30)?;
    for c in &rep.checks {
        println!("{:>16}: lhs {:.6} rhs {:.6} margin {:.2e}", c.relation, c.lhs, c.rhs, c.margin);
    }

    let w = Window::new(0, 20_064)?;
    let lin = SequenceSample::from_fn(w, |n| e(n as f64 * std::f64::consts::SQRT_2));
    let quad = SequenceSample::from_fn(w, |n| e(((n * n) as f64 * std::f64::consts::SQRT_2).fract()));
    let cfg = SeqSeminormConfig { k: 2, h: 64, window: Window::new(0, 20_000)? };
    println!("‖e(n√2)‖_2 = {:.4}, ‖e(n²√2)‖_2 = {:.4}", seq_seminorm(&lin, &cfg)?, seq_seminorm(&quad, &cfg)?);
    Ok(())
}
