//! Heisenberg elements, Mal'cev reduction and nilsequence bases.

use ergolab::fixed::FixedReal;
use ergolab::nil::{bk_exponents, make_basis, malcev_reduce, nilkey_exponents, BasisKind, BasisSpec, HeisenbergElement, Nilsequence};

fn main() -> ergolab::error::Result<()> {
    let f = |s: &str| FixedReal::parse(s).unwrap();
    let g = HeisenbergElement::new(f("1.5"), f("2.5"), f("0.25"));
    let (gamma, h) = malcev_reduce(&g)?;
    println!("g = γ·h with γ = {:?}\n  h = {:?}", gamma, h);
    println!("g^100 = {:?}", g.pow(100)?);

    let psi = Nilsequence::character(f("sqrt2"));
    println!("ψ(0..4) = {:?}", (0..4).map(|n| psi.eval(n).unwrap()).collect::<Vec<_>>());

    println!("nilkey exponents k=3: {:?}", nilkey_exponents(3));
    println!("B_k exponents k=2: {:?}", bk_exponents(2));
    let basis = make_basis(&BasisSpec { kind: BasisKind::Fejer, k: 1, frequencies: vec![f("sqrt2")], orders: vec![3] })?;
    println!("Fejér basis with {} members: {:?}", basis.len(), basis.labels);
    Ok(())
}
