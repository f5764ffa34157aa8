//! Fixed-point reals and integer parts of real polynomials.

use ergolab::fixed::FixedReal;
use ergolab::poly::{floor_split, GeneralizedPolynomial, RealPolynomial};

fn main() -> ergolab::error::Result<()> {
    let r2 = FixedReal::parse("sqrt2")?;
    println!("sqrt2 = {} (raw {:#x})", r2, r2.raw());

    let p = RealPolynomial::parse(&["0", "sqrt2", "0.5"])?;
    for n in [1i128, 10, 1000, -7] {
        println!("[p({})] = {}   {{p({})}} = {}", n, p.eval_floor(n)?, n, p.eval_frac(n)?);
    }

    let x = FixedReal::parse("-3.75")?;
    let y = FixedReal::parse("2.5")?;
    println!("[x+{{y}}]+[y] = {}, [x+y] = {}", floor_split(x, y), (x + y).floor());

    let g = GeneralizedPolynomial::floor_of(&p);
    println!("generalized [p(n)] at n = 12: {}", g.eval(12)?);
    Ok(())
}
