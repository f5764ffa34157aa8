//! How often {p(n)} lands in [1−δ, 1).

use ergolab::fixed::FixedReal;
use ergolab::poly::{frac_density, RealPolynomial, Window};

fn main() -> ergolab::error::Result<()> {
    let w = Window::new(1, 100_001)?;
    for coeffs in [vec!["0", "sqrt2"], vec!["0", "0", "sqrt2"], vec!["0", "0.5"], vec!["0", "0.75"]] {
        let p = RealPolynomial::parse(&coeffs)?;
        for d in ["0.2", "0.05"] {
            let r = frac_density(&p, FixedReal::parse(d)?, w)?;
            println!("{:?} δ = {}: {:.5} (periodic {}, period {:?})", coeffs, d, r.density, r.periodic_flag, r.period);
        }
    }
    Ok(())
}
