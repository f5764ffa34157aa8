mod common;

use ergolab::config::ExperimentConfig;
use ergolab::correlate::{corr_seq, CorrelationSpec, SequenceSample};
use ergolab::decomp::{decompose, gram_project, normal_equation_residual};
use ergolab::fixed::FixedReal;
use ergolab::nil::{make_basis, make_correlation_basis, BasisKind, BasisSpec, NilBasis, Nilsequence};
use ergolab::pet::{vdc_numeric_check, VectorSequence};
use ergolab::poly::{RealPolynomial, Window};
use ergolab::runner;
use ergolab::seminorms::{hk_inverse_direction_checks, HKSeminormConfig};
use ergolab::suspension::lemma_f5_check;
use ergolab::systems::{e, CommutingSystem, Observable, Sampler, StateSpace, Transformation};
use num_complex::Complex64;

fn fx(s: &str) -> FixedReal {
    FixedReal::parse(s).unwrap()
}

fn run_toml(src: &str) -> (runner::RunReport, tempfile::TempDir) {
    let cfg = ExperimentConfig::from_toml(src).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = runner::run(&cfg, dir.path()).unwrap();
    (r, dir)
}

#[test]
fn converge_on_z12_is_exactly_zero() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/converge.toml")).unwrap();
    let (r, _d) = run_toml(&src);
    assert_eq!(r.exit_code(), 0);
    for row in r.results["rows"].as_array().unwrap() {
        assert_eq!(row["diff_l2"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn density_half_reports_zero() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/density_rational.toml")).unwrap();
    let (r, _d) = run_toml(&src);
    assert_eq!(r.exit_code(), 0);
    let d = &r.results["densities"][0];
    assert_eq!(d["density"].as_f64().unwrap(), 0.0);
    assert_eq!(d["periodic_flag"], true);
}

#[test]
fn pet_linear_scenario_json() {
    let (r, d) = run_toml("[run]\nname = \"lin\"\nscenario = \"pet\"\n[pet]\nfamily = [[[\"0\", \"sqrt2\"]]]\n");
    assert_eq!(r.results["depth"], 1);
    assert_eq!(r.results["k_estimate"], 2);
    assert_eq!(r.results["r_nice"]["nice"], true);
    let trace: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("pet_trace.json")).unwrap()).unwrap();
    assert_eq!(trace["steps"].as_array().unwrap().len(), 1);
}

#[test]
fn correlate_csv_matches_sequence() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/correlate.toml")).unwrap();
    let (r, d) = run_toml(&src);
    assert!(r.artifacts.contains(&"sequence.csv".to_string()));
    let mut rdr = csv::Reader::from_path(d.path().join("sequence.csv")).unwrap();
    let beta = fx("sqrt3").to_f64();
    for rec in rdr.records().take(200) {
        let rec = rec.unwrap();
        let n: i64 = rec[0].parse().unwrap();
        let m = fx("sqrt2").checked_mul_int(n as i128).unwrap().floor();
        let want = e(m as f64 * beta);
        let got = Complex64::new(rec[1].parse().unwrap(), rec[2].parse().unwrap());
        assert!((got - want).norm() < 1e-9, "n = {}", n);
    }
}

#[test]
fn non_ergodic_z8_relations_hold() {
    let sys = ergolab::seminorms::cyclic_shift_system(8, 2).unwrap();
    let f = Observable::Table {
        values: (0..8).map(|i| Complex64::new(common::hashed(3, &[i]) - 0.5, common::hashed(4, &[i]) - 0.5)).collect(),
    };
    for k in 1..=3 {
        let rep = hk_inverse_direction_checks(&f, &sys.transformations[0], &sys.space, k, HKSeminormConfig::default().budget)
            .unwrap();
        assert!(rep.min_margin() >= -1e-12, "{:?}", rep);
        let strict = rep.checks.iter().find(|c| c.relation == "tensor_square").unwrap();
        assert!(strict.margin >= 0.0);
    }
}

#[test]
fn f5_random_array_sqrt2() {
    let rep = lemma_f5_check(&|x: &[i64]| common::hashed(11, x), fx("sqrt2"), 2, Window::new(0, 100).unwrap()).unwrap();
    assert!(rep.margin >= 0.0, "{:?}", rep);
    assert!(rep.lhs > 0.0);
}

#[test]
fn vdc_random_unit_vectors() {
    let h = 64;
    let v = VectorSequence::from_fn(0, 100_000 + h + 1, 2, |n, out| {
        let t = common::hashed(5, &[n]);
        out[0] = Complex64::new(t.cos(), 0.0);
        out[1] = Complex64::new(t.sin(), 0.0) * e(common::hashed(6, &[n]));
    });
    let rep = vdc_numeric_check(&v, Window::new(0, 100_000).unwrap(), h).unwrap();
    assert!(rep.margin >= 0.0, "{:?}", rep);
}

#[test]
fn decomposition_on_correlation_basis_recovers_member() {
    let sys = CommutingSystem::new(
        StateSpace::cyclic(12),
        vec![Transformation::shift(12, 1)],
        Sampler::Enumerate,
    )
    .unwrap();
    let basis = make_correlation_basis(BasisKind::Nilkey, 2, &sys, &[Observable::character(vec![1]), Observable::character(vec![11])], 4).unwrap();
    assert!(!basis.is_empty());
    let w = Window::new(0, 600).unwrap();
    // (χ₁, χ₁) correlates to zero; (χ₁, χ₁₁) does not
    let target = &basis.members[1];
    let a = SequenceSample::from_fn(w, |n| target.eval(n).unwrap());
    assert!((a.values[5].norm() - 1.0).abs() < 1e-12);
    let rep = decompose(&a, &[basis], 1e-6, w).unwrap();
    assert_eq!(rep.index, Some(0));
    assert!(rep.residual_norm <= 1e-6);
}

#[test]
fn singular_gram_uses_ridge() {
    let psi = Nilsequence::character(fx("sqrt2"));
    let basis = NilBasis {
        members: vec![psi.clone(), psi.clone()],
        labels: vec!["a".into(), "b".into()],
        provenance: BasisKind::Torus,
    };
    let w = Window::new(0, 1000).unwrap();
    let a = SequenceSample::from_fn(w, |n| psi.eval(n).unwrap() * 0.5);
    let p = gram_project(&a, &basis, w).unwrap();
    let ridge = p.ridge.expect("duplicate members make the normal matrix singular");
    let coef_norm = p.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let worst = normal_equation_residual(&p).into_iter().fold(0.0, f64::max);
    assert!(worst <= ridge * coef_norm * (1.0 + 1e-9) + 1e-12, "{} > {}", worst, ridge * coef_norm);
    assert!(p.residual_norm <= 1e-6);
}

#[test]
fn fejer_order_eight_beats_order_two() {
    let spec = CorrelationSpec::new(
        CommutingSystem::new(StateSpace::torus(1), vec![Transformation::rotation(&[fx("sqrt3")])], Sampler::Lattice { per_dim: 4 })
            .unwrap(),
        vec![vec![RealPolynomial::parse(&["0", "sqrt2"]).unwrap()]],
        vec![Observable::character(vec![-1]), Observable::character(vec![1])],
    )
    .unwrap();
    let w = Window::new(1, 20_001).unwrap();
    let a = corr_seq(&spec, w).unwrap();
    let res = |k: u32| {
        let b = make_basis(&BasisSpec { kind: BasisKind::Torus, k: 1, frequencies: vec![fx("sqrt2"), fx("sqrt6")], orders: vec![k, 1] })
            .unwrap();
        gram_project(&a, &b, w).unwrap().residual_norm
    };
    assert!(res(8) < res(2));
}
