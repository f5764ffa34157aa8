//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use ergolab::config::ExperimentConfig;
use ergolab::correlate::{corr_seq, multi_average, CorrelationSpec, SequenceSample};
use ergolab::decomp::decompose;
use ergolab::fixed::FixedReal;
use ergolab::nil::{make_basis, BasisKind, BasisSpec, HeisenbergElement, Nilsequence};
use ergolab::pet::{pet_reduce, PolyFamily, VectorSequence, vdc_numeric_check};
use ergolab::poly::{floor_split, frac_density, RealPolynomial, Window};
use ergolab::runner;
use ergolab::seminorms::{hk_inverse_direction_checks, hk_seminorm, HKSeminormConfig};
use ergolab::suspension::{
    flow_apply, flow_power_identity_check, lemma_f5_check, lemma_f6_numeric_check, weak_anti_uniform_bound,
    SuspensionFlow, SuspensionPoint,
};
use ergolab::systems::{
    ergodic_projection, e, CommutingSystem, Observable, Sampler, StatePoint, StateSpace, Transformation,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2024;

// criterion 1
const IDENTITY_TIME: Duration = Duration::from_secs(1);
// criterion 2
const ORACLE_REL_TOL: f64 = 1e-12;
const ORACLE_TIME: Duration = Duration::from_secs(30);
// criterion 3
const CALIBRATION_TOL: f64 = 1e-12;
const RELATION_TOL: f64 = 1e-9;
// criterion 4
const DENSITY_REL_TOL: f64 = 0.15;
// criterion 5
const ZERO_LIMIT_THRESHOLD: f64 = 0.05;
const ZERO_LIMIT_TIME: Duration = Duration::from_secs(60);
// criterion 6
const BATTERY_CASES: usize = 50;
const INEQUALITY_TOL: f64 = 1e-6;
// criterion 7
const DECOMP_EPSILON: f64 = 0.05;
const ORTHOGONALITY_TOL: f64 = 1e-6;
const PURE_RESIDUAL_TOL: f64 = 1e-10;

type Verdict = Result<String, String>;

fn fx(s: &str) -> FixedReal {
    FixedReal::parse(s).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    let t0 = Instant::now();
    let out = f()?;
    let el = t0.elapsed();
    ensure(el <= limit, format!("{} took {:.2?} > {:?}", what, el, limit))?;
    Ok(out)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_fixed(rng: &mut ChaCha8Rng, bound: i64) -> FixedReal {
    FixedReal::from_int(rng.gen_range(-bound..bound)) + FixedReal::from_frac_bits(rng.gen())
}

fn random_torus_point(rng: &mut ChaCha8Rng, dim: usize) -> StatePoint {
    StatePoint((0..dim).map(|_| rng.gen()).collect())
}

fn cat_system() -> CommutingSystem {
    let a = Transformation::torus_automorphism(&[vec![2, 1], vec![1, 1]]).unwrap();
    let b = Transformation::torus_automorphism(&[vec![3, 2], vec![2, 1]]).unwrap();
    CommutingSystem::new(StateSpace::torus(2), vec![a, b], Sampler::Random { seed: SEED, count: 512 }).unwrap()
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let bad = timed(IDENTITY_TIME, "floor identity", || {
        Ok((0..100_000)
            .filter(|_| {
                let x = random_fixed(&mut rng, 1 << 20);
                let y = random_fixed(&mut rng, 1 << 20);
                floor_split(x, y) != (x + y).floor()
            })
            .count())
    })?;
    ensure(bad == 0, format!("floor identity failed {} times", bad))?;

    let sys = cat_system();
    let flow = SuspensionFlow::new(sys.clone(), 2).map_err(err)?;
    let bad = timed(IDENTITY_TIME, "flow law", || {
        let mut bad = 0;
        for _ in 0..1000 {
            let heights = (0..2).map(|_| (0..2).map(|_| FixedReal::from_frac_bits(rng.gen())).collect()).collect();
            let pt = SuspensionPoint::new(random_torus_point(&mut rng, 2), heights).map_err(err)?;
            let s: Vec<Vec<FixedReal>> = (0..2).map(|_| (0..2).map(|_| random_fixed(&mut rng, 8)).collect()).collect();
            let t: Vec<Vec<FixedReal>> = (0..2).map(|_| (0..2).map(|_| random_fixed(&mut rng, 8)).collect()).collect();
            let st: Vec<Vec<FixedReal>> =
                s.iter().zip(&t).map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x + *y).collect()).collect();
            let lhs = flow_apply(&flow, &st, &pt).map_err(err)?;
            let rhs = flow_apply(&flow, &t, &flow_apply(&flow, &s, &pt).map_err(err)?).map_err(err)?;
            bad += (lhs != rhs) as usize;
        }
        Ok(bad)
    })?;
    ensure(bad == 0, format!("flow law failed at {} points", bad))?;

    let one = CommutingSystem::new(StateSpace::torus(2), vec![sys.transformations[0].clone()], sys.sampler.clone())
        .map_err(err)?;
    let single = SuspensionFlow::new(one, 1).map_err(err)?;
    let pts: Vec<SuspensionPoint> = [fx("0"), fx("0.999"), fx("0.5")]
        .iter()
        .map(|&b| SuspensionPoint::new(random_torus_point(&mut rng, 2), vec![vec![b]]).unwrap())
        .collect();
    let rep = timed(IDENTITY_TIME, "power identity", || {
        flow_power_identity_check(&single, fx("0.002"), 10_000, &pts, &Observable::character(vec![1, 0])).map_err(err)
    })?;
    ensure(rep.mismatches == 0 && rep.observable_mismatches == 0, format!("power identity: {:?}", rep))?;

    timed(IDENTITY_TIME, "Heisenberg powers", || {
        for _ in 0..4 {
            let g = HeisenbergElement::new(random_fixed(&mut rng, 4), random_fixed(&mut rng, 4), random_fixed(&mut rng, 4));
            let mut acc = HeisenbergElement::identity();
            for n in 0..=1000i128 {
                ensure(g.pow(n).map_err(err)? == acc, format!("g^{} differs from the iterated product", n))?;
                acc = acc.mul(&g).map_err(err)?;
            }
        }
        Ok(())
    })?;

    timed(IDENTITY_TIME, "power laws", || {
        let (t, s) = (&sys.transformations[0], &sys.transformations[1]);
        for _ in 0..200 {
            let x = random_torus_point(&mut rng, 2);
            let a = rng.gen_range(-1_000_000i128..1_000_000);
            let b = rng.gen_range(-1_000_000i128..1_000_000);
            let ta = t.power(a).map_err(err)?;
            ensure(ta.apply(&t.power(b).map_err(err)?.apply(&x)) == t.power(a + b).map_err(err)?.apply(&x), "T^a T^b")?;
            ensure(t.power(-a).map_err(err)?.apply(&ta.apply(&x)) == x, "T^-a T^a")?;
            let sb = s.power(b).map_err(err)?;
            ensure(ta.apply(&sb.apply(&x)) == sb.apply(&ta.apply(&x)), "T^a S^b = S^b T^a")?;
        }
        Ok(())
    })?;
    Ok("floor identity 1e5, flow law 1e3, power identity n ≤ 1e4, Heisenberg n ≤ 1e3, power laws".into())
}

fn table_observable(rng: &mut ChaCha8Rng, q: usize) -> Observable {
    Observable::Table { values: (0..q).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() }
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let worst = timed(ORACLE_TIME, "oracle battery", || {
        let mut worst: f64 = 0.0;
        for q in [5u64, 12, 17, 24] {
            let space = StateSpace::cyclic(q);
            let units: Vec<i64> = (1..q as i64).filter(|u| num_integer::gcd(*u, q as i64) == 1).collect();
            let u = units[rng.gen_range(0..units.len())];
            // a shift and a multiplication commute only when u·r ≡ r
            let systems = vec![
                vec![Transformation::shift(q, rng.gen_range(1..q as i64)), Transformation::shift(q, rng.gen_range(1..q as i64))],
                vec![Transformation::cyclic_automorphism(q, &[vec![u]]).unwrap()],
            ];
            for ts in systems {
                let ell = ts.len();
                let sys = CommutingSystem::new(space.clone(), ts, Sampler::Enumerate).map_err(err)?;
                let polys = [vec!["0", "sqrt2"], vec!["0.25", "sqrt3", "0.5"], vec!["0", "0", "0", "1"], vec!["-3", "2"]];
                let iterates: Vec<Vec<RealPolynomial>> = (0..ell)
                    .map(|i| (0..2).map(|j| RealPolynomial::parse(&polys[(i + 2 * j) % 4]).unwrap()).collect())
                    .collect();
                let obs = vec![table_observable(&mut rng, q as usize), table_observable(&mut rng, q as usize), Observable::character(vec![1])];
                let spec = CorrelationSpec::new(sys.clone(), iterates, obs).map_err(err)?;
                let w = Window::new(-40, 200).unwrap();
                let a = corr_seq(&spec, w).map_err(err)?;
                for n in w.start..w.end {
                    worst = worst.max(rel_err(a.get(n).unwrap(), common::corr_oracle(&spec, n)));
                }
                for t in &sys.transformations {
                    let perm = common::perm_of(t, &space);
                    let f = table_observable(&mut rng, q as usize);
                    let vals = common::table(&f, &space);
                    for k in 1..=3 {
                        let cfg = HKSeminormConfig { k, ..HKSeminormConfig::default() };
                        let got = hk_seminorm(&f, t, &sys, &cfg).map_err(err)?;
                        let want = common::hk_oracle(&vals, &perm, k);
                        worst = worst.max((got - want).abs() / want.max(1.0));
                    }
                    let period = common::period_of(&perm) as u64;
                    let proj = ergodic_projection(&f, t, period, &sys).map_err(err)?;
                    let means = common::cycle_means(&vals, &perm);
                    for (i, v) in proj.values.iter().enumerate() {
                        let idx = space.index_of(&proj.points[i]).unwrap() as usize;
                        worst = worst.max(rel_err(*v, means[idx]));
                    }
                }
            }
        }
        Ok(worst)
    })?;
    ensure(worst <= ORACLE_REL_TOL, format!("max relative error {:e} > {:e}", worst, ORACLE_REL_TOL))?;
    Ok(format!("corr_seq, hk_seminorm k ≤ 3, ergodic_projection on ℤ_q, q ≤ 24: max rel err {:.1e}", worst))
}

fn criterion_3() -> Verdict {
    let sys = ergolab::seminorms::cyclic_shift_system(12, 1).map_err(err)?;
    let t = &sys.transformations[0];
    let hk = |f: &Observable, k: u32| hk_seminorm(f, t, &sys, &HKSeminormConfig { k, ..HKSeminormConfig::default() });
    for c in [Complex64::new(0.7, -0.2), Complex64::new(-3.0, 0.0), Complex64::new(0.0, 0.0)] {
        let f = Observable::Constant { value: c };
        for k in 1..=4 {
            let v = hk(&f, k).map_err(err)?;
            ensure((v - c.norm()).abs() <= CALIBRATION_TOL * c.norm().max(1.0), format!("|||{}|||_{} = {}", c, k, v))?;
        }
    }
    let chi = Observable::character(vec![1]);
    let k1 = hk(&chi, 1).map_err(err)?;
    let k2 = hk(&chi, 2).map_err(err)?;
    ensure(k1 <= CALIBRATION_TOL, format!("|||χ|||₁ = {:e}", k1))?;
    ensure((k2 - 1.0).abs() <= CALIBRATION_TOL, format!("|||χ|||₂ = {}", k2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut worst = f64::INFINITY;
    for r in [1i64, 5, 4] {
        let s = ergolab::seminorms::cyclic_shift_system(12, r).map_err(err)?;
        for f in [chi.clone(), Observable::cos(vec![3]), table_observable(&mut rng, 12)] {
            for k in 1..=3 {
                let rep = hk_inverse_direction_checks(&f, &s.transformations[0], &s.space, k, 2_000_000_000).map_err(err)?;
                worst = worst.min(rep.min_margin());
            }
        }
    }
    ensure(worst >= -RELATION_TOL, format!("relation margin {:e}", worst))?;
    Ok(format!("|||c|||_k = |c|, |||χ|||₁ = {:.1e}, |||χ|||₂ = 1 {:+.1e}, relation margin {:.1e}", k1, k2 - 1.0, worst))
}

fn criterion_4() -> Verdict {
    let w = Window::new(1, 100_001).unwrap();
    let mut worst: f64 = 0.0;
    for p in [vec!["0", "sqrt2"], vec!["0", "0", "sqrt2"]] {
        let p = RealPolynomial::parse(&p).unwrap();
        for d in ["0.2", "0.1", "0.05"] {
            let rep = frac_density(&p, fx(d), w).map_err(err)?;
            let df = fx(d).to_f64();
            let rel = (rep.density - df).abs() / df;
            ensure(rel <= DENSITY_REL_TOL, format!("density {} for δ = {}", rep.density, d))?;
            ensure(!rep.periodic_flag, "irrational polynomial flagged periodic")?;
            worst = worst.max(rel);
        }
    }
    let p = RealPolynomial::parse(&["0", "0.75"]).unwrap();
    let rep = frac_density(&p, fx("0.3"), w).map_err(err)?;
    ensure(rep.periodic_flag && rep.period == Some(4) && rep.count == 1 && rep.total == 4, format!("rational case {:?}", rep))?;
    let half = RealPolynomial::parse(&["0", "0.5"]).unwrap();
    let rep0 = frac_density(&half, fx("0.1"), w).map_err(err)?;
    ensure(rep0.periodic_flag && rep0.count == 0, "t/2 with δ = 0.1 should give density 0")?;
    Ok(format!("√2t, √2t²: max |d−δ|/δ = {:.3}; 3t/4 exactly 1/4 with period 4", worst))
}

fn criterion_5() -> Verdict {
    let spec = CorrelationSpec::new(
        cat_system(),
        vec![
            vec![RealPolynomial::parse(&["0", "1"]).unwrap(), RealPolynomial::zero()],
            vec![RealPolynomial::zero(), RealPolynomial::parse(&["0", "0", "1"]).unwrap()],
        ],
        vec![Observable::one(), Observable::character(vec![1, 0]), Observable::character(vec![0, 1])],
    )
    .map_err(err)?;
    let (n1, n2) = timed(ZERO_LIMIT_TIME, "zero-limit", || {
        let (_, a) = multi_average(&spec, Window::new(0, 10_000).unwrap()).map_err(err)?;
        let (_, b) = multi_average(&spec, Window::new(0, 20_000).unwrap()).map_err(err)?;
        Ok((a.value, b.value))
    })?;
    ensure(n1 <= ZERO_LIMIT_THRESHOLD, format!("‖A‖ = {} at 1e4", n1))?;
    ensure(n2 < n1, format!("‖A‖ = {} at 2e4 is not smaller than {}", n2, n1))?;
    Ok(format!("‖A_W‖₂ = {:.4} at W = 1e4, {:.4} at 2e4", n1, n2))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut worst = [f64::INFINITY; 4];
    for _ in 0..BATTERY_CASES {
        // lattice averaging bound
        let s = FixedReal::from_raw(rng.gen_range((1i128 << 60)..(3i128 << 64)));
        let k = rng.gen_range(1..=3usize);
        let len = [4000i64, 60, 14][k - 1];
        let start = rng.gen_range(-500..500);
        let a_seed = rng.gen::<u64>();
        let rep = lemma_f5_check(&|x: &[i64]| common::hashed(a_seed, x), s, k, Window::new(start, start + len).unwrap())
            .map_err(err)?;
        worst[0] = worst[0].min(rep.margin);

        // seminorm transfer on a finite base
        let q = rng.gen_range(3..=10u64);
        let r = rng.gen_range(1..q as i64);
        let s6 = fx(["0.5", "0.25", "0.75", "1", "1.5", "2", "0.125"][rng.gen_range(0..7)]);
        let f = table_observable(&mut rng, q as usize);
        let k6 = rng.gen_range(1..=2u32);
        let rep = lemma_f6_numeric_check(&f, &Transformation::shift(q, r), &StateSpace::cyclic(q), s6, k6, 3, 2_000_000_000)
            .map_err(err)?;
        worst[1] = worst[1].min(rep.margin);

        // van der Corput
        let dim = rng.gen_range(1..=3usize);
        let v_seed = rng.gen::<u64>();
        let alpha: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
        let quad = rng.gen_bool(0.5);
        let len = rng.gen_range(200..2000i64);
        let h = rng.gen_range(1..=(len as usize / 4).min(50));
        let v = VectorSequence::from_fn(0, len as usize + h + 1, dim, |n, out| {
            for (d, o) in out.iter_mut().enumerate() {
                let nf = n as f64;
                let phase = if quad { alpha[d] * nf * nf } else { alpha[d] * nf };
                *o = e(phase) * common::hashed(v_seed, &[d as i64]);
            }
        });
        let rep = vdc_numeric_check(&v, Window::new(0, len).unwrap(), h).map_err(err)?;
        worst[2] = worst[2].min(rep.margin);

        // weak anti-uniformity
        let q = rng.gen_range(3..=16u64);
        let sys = CommutingSystem::new(StateSpace::cyclic(q), vec![Transformation::shift(q, 1)], Sampler::Enumerate).map_err(err)?;
        let c1 = FixedReal::from_frac_bits(rng.gen()) + FixedReal::from_int(rng.gen_range(0..3));
        let c2 = FixedReal::from_frac_bits(rng.gen());
        let p = RealPolynomial::new(vec![FixedReal::ZERO, c1, c2]).map_err(err)?;
        let obs = vec![table_observable(&mut rng, q as usize), Observable::character(vec![rng.gen_range(1..q as i64)])];
        let spec = CorrelationSpec::new(sys, vec![vec![p]], obs).map_err(err)?;
        let w = Window::new(0, 1500).unwrap();
        let b_seed = rng.gen::<u64>();
        let b = SequenceSample::from_fn(w, |n| e(common::hashed(b_seed, &[n])));
        let delta = FixedReal::from_raw(rng.gen_range((1i128 << 58)..(5i128 << 60)));
        let rep = weak_anti_uniform_bound(&spec, &b, delta, w, None).map_err(err)?;
        worst[3] = worst[3].min(rep.margin);
    }
    let names = ["averaging bound", "seminorm transfer", "van der Corput", "weak anti-uniformity"];
    for (n, m) in names.iter().zip(worst) {
        ensure(m >= -INEQUALITY_TOL, format!("{} margin {:e}", n, m))?;
    }

    let sys = CommutingSystem::new(StateSpace::cyclic(12), vec![Transformation::shift(12, 1)], Sampler::Enumerate).map_err(err)?;
    let spec = CorrelationSpec::new(
        sys,
        vec![vec![RealPolynomial::parse(&["0", "sqrt2"]).unwrap()]],
        vec![Observable::character(vec![-1]), Observable::character(vec![1])],
    )
    .map_err(err)?;
    let w = Window::new(0, 20_000).unwrap();
    let b = SequenceSample::from_fn(w, |n| e(-(n as f64) * 0.1));
    let mut prev = f64::INFINITY;
    let mut cs = Vec::new();
    for d in ["0.2", "0.1", "0.05"] {
        let rep = weak_anti_uniform_bound(&spec, &b, fx(d), w, None).map_err(err)?;
        ensure(rep.c_delta < prev, format!("c_δ not decreasing at δ = {}", d))?;
        prev = rep.c_delta;
        cs.push(rep.c_delta);
    }
    Ok(format!(
        "{} cases each; min margins {:.2e}/{:.2e}/{:.2e}/{:.2e}; c_δ = {:.3}, {:.3}, {:.3}",
        BATTERY_CASES, worst[0], worst[1], worst[2], worst[3], cs[0], cs[1], cs[2]
    ))
}

fn criterion_7() -> Verdict {
    let spec = CorrelationSpec::new(
        CommutingSystem::new(
            StateSpace::torus(1),
            vec![Transformation::rotation(&[fx("sqrt3")])],
            Sampler::Lattice { per_dim: 16 },
        )
        .map_err(err)?,
        vec![vec![RealPolynomial::parse(&["0", "sqrt2"]).unwrap()]],
        vec![Observable::character(vec![-1]), Observable::character(vec![1])],
    )
    .map_err(err)?;
    let w = Window::new(1, 100_001).unwrap();
    let a = corr_seq(&spec, w).map_err(err)?;
    // the sequence is e([√2 n]√3)
    let direct = (w.start..w.end).step_by(997).all(|n| {
        let m = fx("sqrt2").checked_mul_int(n as i128).unwrap().floor();
        (a.get(n).unwrap() - e(fx("sqrt3").to_f64() * m as f64)).norm() < 1e-6
    });
    ensure(direct, "correlation sequence differs from e([√2n]√3)")?;
    let ladder: Vec<_> = [1u32, 2, 4, 8, 16, 32, 64]
        .iter()
        .map(|&k| {
            make_basis(&BasisSpec { kind: BasisKind::Torus, k: 1, frequencies: vec![fx("sqrt2"), fx("sqrt6")], orders: vec![k, 1] })
                .unwrap()
        })
        .collect();
    let rep = decompose(&a, &ladder, DECOMP_EPSILON, w).map_err(err)?;
    ensure(rep.certified, format!("not certified; residuals {:?}", rep.rungs.iter().map(|r| r.residual_norm).collect::<Vec<_>>()))?;
    ensure(rep.monotone, "residual increases along the ladder")?;
    let worst = rep.rungs.iter().map(|r| r.max_margin).fold(0.0, f64::max);
    ensure(worst <= ORTHOGONALITY_TOL, format!("orthogonality margin {:e}", worst))?;

    let pw = Window::new(1, 20_001).unwrap();
    let pure = SequenceSample::from_fn(pw, |n| Nilsequence::character(fx("sqrt2")).eval(n).unwrap());
    let pl: Vec<_> = [1u32, 2]
        .iter()
        .map(|&k| make_basis(&BasisSpec { kind: BasisKind::Torus, k: 1, frequencies: vec![fx("sqrt2")], orders: vec![k] }).unwrap())
        .collect();
    let prep = decompose(&pure, &pl, DECOMP_EPSILON, pw).map_err(err)?;
    ensure(prep.index == Some(0), format!("pure input certified at {:?}", prep.index))?;
    ensure(prep.residual_norm <= PURE_RESIDUAL_TOL, format!("pure residual {:e}", prep.residual_norm))?;
    Ok(format!(
        "certified at rung {} with ‖e‖₂ = {:.4}, orthogonality {:.1e}; pure input residual {:.1e}",
        rep.index.unwrap(),
        rep.residual_norm,
        worst,
        prep.residual_norm
    ))
}

fn family(entries: &[&[&str]]) -> PolyFamily {
    PolyFamily::new(vec![entries.iter().map(|c| RealPolynomial::parse(c).unwrap()).collect()]).unwrap()
}

fn criterion_8() -> Verdict {
    let lin = pet_reduce(&family(&[&["0", "1"]]), 64).map_err(err)?;
    ensure(lin.completed && lin.depth == 1 && lin.k_estimate == 2, format!("linear: d = {}, k = {}", lin.depth, lin.k_estimate))?;
    let quad = pet_reduce(&family(&[&["0", "0", "1"]]), 64).map_err(err)?;
    ensure(quad.completed && quad.depth == 2 && quad.k_estimate == 3, format!("quadratic: d = {}, k = {}", quad.depth, quad.k_estimate))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let mut worst_gap = i64::MAX;
    for m in 1..=4usize {
        for _ in 0..10 {
            let mut slopes: Vec<String> = Vec::new();
            while slopes.len() < m {
                let c = format!("{}", rng.gen_range(-9i64..=9));
                if c != "0" && !slopes.contains(&c) {
                    slopes.push(c);
                }
            }
            let entries: Vec<Vec<&str>> = slopes.iter().map(|c| vec!["0", c.as_str()]).collect();
            let refs: Vec<&[&str]> = entries.iter().map(|v| v.as_slice()).collect();
            let tr = pet_reduce(&family(&refs), 64).map_err(err)?;
            ensure(tr.completed, "linear family did not complete")?;
            ensure(tr.depth <= m, format!("{} linear entries reached depth {}", m, tr.depth))?;
            worst_gap = worst_gap.min(m as i64 - tr.depth as i64);
            let again = pet_reduce(&family(&refs), 64).map_err(err)?;
            ensure(serde_json::to_string(&tr).unwrap() == serde_json::to_string(&again).unwrap(), "trace replay differs")?;
        }
    }
    Ok(format!("linear d = 1, quadratic d = 2, 40 linear families with d ≤ m (min slack {}), replay identical", worst_gap))
}

fn criterion_9() -> Verdict {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names: Vec<_> = std::fs::read_dir(&dir).map_err(err)?.map(|e| e.unwrap().path()).collect();
    names.sort();
    let tmp = tempfile::tempdir().map_err(err)?;
    for path in &names {
        let cfg = ExperimentConfig::load(path).map_err(err)?;
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let (d1, d2) = (tmp.path().join(format!("{}-1", stem)), tmp.path().join(format!("{}-2", stem)));
        let r1 = runner::run(&cfg, &d1).map_err(err)?;
        let r2 = runner::run(&cfg, &d2).map_err(err)?;
        ensure(r1.exit_code() == 0, format!("{} exits with {}", stem, r1.exit_code()))?;
        ensure(r1.deterministic_json() == r2.deterministic_json(), format!("{} report differs", stem))?;
        for art in &r1.artifacts {
            let (a, b) = (std::fs::read(d1.join(art)).map_err(err)?, std::fs::read(d2.join(art)).map_err(err)?);
            if art == "report.json" {
                let strip = |v: &[u8]| -> String {
                    String::from_utf8_lossy(v)
                        .lines()
                        .filter(|l| !l.contains("\"wall_seconds\"") && !l.contains("\"threads\""))
                        .collect::<Vec<_>>()
                        .join("\n")
                };
                ensure(strip(&a) == strip(&b), format!("{}/report.json differs outside timing", stem))?;
            } else {
                ensure(a == b, format!("{}/{} differs", stem, art))?;
            }
        }
    }
    Ok(format!("{} configs re-run with byte-identical artifacts", names.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("exact identities", criterion_1),
        ("brute-force oracles", criterion_2),
        ("seminorm calibration", criterion_3),
        ("equidistribution", criterion_4),
        ("zero-limit", criterion_5),
        ("inequality battery", criterion_6),
        ("decomposition", criterion_7),
        ("PET depth", criterion_8),
        ("reproducibility", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = f();
        let secs = t0.elapsed().as_secs_f64();
        match v {
            Ok(msg) => println!("criterion {} ({}): PASS [{:.1}s] {}", i + 1, name, secs, msg),
            Err(msg) => {
                failed += 1;
                println!("criterion {} ({}): FAIL [{:.1}s] {}", i + 1, name, secs, msg)
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
