//! Scenario runner: executes a config, evaluates its checks and writes artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ScenarioKind};
use crate::correlate::{cauchy_report, corr_seq, multi_average, write_json, SequenceSample, WindowFamily};
use crate::decomp::decompose;
use crate::error::{LabError, Result};
use crate::fixed::FixedReal;
use crate::pet::{is_nice, is_r_nice, pet_reduce, PolyFamily};
use crate::poly::{frac_density, Window};
use crate::seminorms::{hk_inverse_direction_checks, hk_seminorm, HKSeminormConfig};
use crate::suspension::{
    flow_apply, flow_power_identity_check, lemma_f5_check, lemma_f6_numeric_check, weak_anti_uniform_bound,
    SuspensionFlow, SuspensionPoint,
};
use crate::systems::{CommutingSystem, Modulus, StatePoint};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAIL: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    /// Signed slack; negative when the check fails.
    pub margin: f64,
    /// Failure means the decomposition was not certified rather than a wrong result.
    #[serde(default)]
    pub certification: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        let margin = tolerance - value;
        Check { name: name.into(), passed: margin >= 0.0, value, tolerance, margin, certification: false }
    }

    /// Passes when `margin ≥ −tolerance`.
    pub fn margin(name: &str, margin: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: margin >= -tolerance, value: margin, tolerance, margin: margin + tolerance, certification: false }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Check { name: name.into(), passed: ok, value: ok as u8 as f64, tolerance: 0.0, margin: if ok { 0.0 } else { -1.0 }, certification: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Fingerprint {
    pub fn current() -> Self {
        Fingerprint {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub scenario: ScenarioKind,
    pub anchor: String,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub results: Value,
    pub artifacts: Vec<String>,
    pub env: Fingerprint,
    pub timing: Timing,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| !c.passed && !c.certification) {
            EXIT_CHECK_FAIL
        } else if self.checks.iter().any(|c| !c.passed) {
            EXIT_NOT_CERTIFIED
        } else {
            EXIT_PASS
        }
    }

    /// The report as JSON with the timing block removed.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("timing");
        v
    }
}

/// Exit code for an error raised before or during a run.
pub fn error_exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Io(_) | LabError::DepthGuard(_) => EXIT_CHECK_FAIL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub keys: &'static [&'static str],
    pub anchor: &'static str,
}

pub fn anchor(kind: ScenarioKind) -> &'static str {
    scenario_catalog().into_iter().find(|s| s.name == kind.name()).unwrap().anchor
}

pub fn scenario_catalog() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "correlate",
            keys: &["system", "correlation", "correlate.window"],
            anchor: "integer-part polynomial correlation sequences a(n) = ∫ f₀ ∏ T_i^[p_ij(n)] f_j dμ",
        },
        ScenarioInfo {
            name: "converge",
            keys: &["system", "correlation", "converge.start", "converge.base", "converge.count", "converge.tolerance"],
            anchor: "L² convergence of integer-part polynomial multiple ergodic averages",
        },
        ScenarioInfo {
            name: "zero-limit",
            keys: &["system", "correlation", "zero_limit.windows", "zero_limit.threshold"],
            anchor: "zero limit of integer-part averages for weakly mixing or zero-seminorm functions",
        },
        ScenarioInfo {
            name: "seminorm",
            keys: &["system", "seminorm.observable", "seminorm.ks"],
            anchor: "Host-Kra seminorms: calibration, monotonicity, inverse symmetry",
        },
        ScenarioInfo {
            name: "suspension",
            keys: &["run.seed", "system", "suspension.flow | f5 | f6 | weak"],
            anchor: "suspension flow transference: flow law, lattice averaging bound, seminorm transfer, weak anti-uniformity",
        },
        ScenarioInfo {
            name: "pet",
            keys: &["pet.family"],
            anchor: "nice families and PET complexity k = d + 1 by van der Corput reduction",
        },
        ScenarioInfo {
            name: "decompose",
            keys: &["system", "correlation", "decompose.window", "decompose.epsilon", "decompose.basis"],
            anchor: "nilsequence plus null-sequence decomposition of correlation sequences",
        },
        ScenarioInfo {
            name: "density",
            keys: &["density.polynomial", "density.deltas", "density.window"],
            anchor: "density of n with {p(n)} near 1: equidistributed and periodic polynomials",
        },
    ]
}

/// Parses and validates a config file.
pub fn validate(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

struct Outcome {
    checks: Vec<Check>,
    results: Value,
    artifacts: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Runs a validated config and writes `report.json` plus scenario artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let t0 = Instant::now();
    let outcome = match cfg.run.scenario {
        ScenarioKind::Correlate => run_correlate(cfg, out)?,
        ScenarioKind::Converge => run_converge(cfg)?,
        ScenarioKind::ZeroLimit => run_zero_limit(cfg)?,
        ScenarioKind::Seminorm => run_seminorm(cfg)?,
        ScenarioKind::Suspension => run_suspension(cfg)?,
        ScenarioKind::Pet => run_pet(cfg, out)?,
        ScenarioKind::Decompose => run_decompose(cfg, out)?,
        ScenarioKind::Density => run_density(cfg)?,
    };
    let passed = outcome.checks.iter().all(|c| c.passed);
    let mut artifacts = outcome.artifacts;
    artifacts.push("report.json".into());
    let report = RunReport {
        name: cfg.run.name.clone(),
        scenario: cfg.run.scenario,
        anchor: anchor(cfg.run.scenario).into(),
        seed: cfg.run.seed,
        config: cfg.clone(),
        checks: outcome.checks,
        passed,
        results: outcome.results,
        artifacts,
        env: Fingerprint::current(),
        timing: Timing { wall_seconds: t0.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    };
    write_json(&report, &out.join("report.json"))?;
    Ok(report)
}

/// Output directory: explicit override, then `run.output`, then `ergolab-out/<name>`.
pub fn output_dir(cfg: &ExperimentConfig, over: Option<&Path>) -> PathBuf {
    match (over, &cfg.run.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from("ergolab-out").join(&cfg.run.name),
    }
}

fn sequence_summary(a: &SequenceSample) -> Value {
    let max_abs = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    json!({ "window": a.window, "route": a.route, "mean": a.mean(), "max_abs": max_abs })
}

fn run_correlate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.correlate.as_ref().unwrap();
    let spec = cfg.correlation_spec()?;
    let a = corr_seq(&spec, p.window)?;
    let bound: f64 = spec.observables.iter().map(|f| f.sup_bound()).product();
    let max_abs = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut artifacts = Vec::new();
    if p.csv {
        a.write_csv(&out.join("sequence.csv"))?;
        artifacts.push("sequence.csv".into());
    }
    Ok(Outcome {
        checks: vec![Check::at_most("sup_bound", max_abs, bound + p.tolerance)],
        results: json!({ "sequence": sequence_summary(&a), "sup_bound": bound }),
        artifacts,
    })
}

fn run_converge(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.converge.as_ref().unwrap();
    let spec = cfg.correlation_spec()?;
    let ladder = WindowFamily::doubling(p.start, p.base, p.count)?;
    let rep = cauchy_report(&spec, &ladder, p.tolerance)?;
    let last = rep.rows.last().map(|r| r.diff_l2).unwrap_or(0.0);
    let mut checks = vec![Check::at_most("cauchy_tail", last, p.tolerance), Check::flag("monotone", rep.monotone)];
    if p.expect_exact_zero {
        let worst = rep.rows.iter().map(|r| r.diff_l2).fold(0.0, f64::max);
        checks.push(Check::at_most("exact_zero", worst, 0.0));
    }
    Ok(Outcome { checks, results: to_value(&rep), artifacts: vec![] })
}

fn run_zero_limit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.zero_limit.as_ref().unwrap();
    if p.windows.is_empty() {
        return Err(LabError::Config("zero_limit.windows must be nonempty".into()));
    }
    let spec = cfg.correlation_spec()?;
    let mut rows = Vec::new();
    for w in &p.windows {
        let (_, est) = multi_average(&spec, *w)?;
        rows.push(json!({ "window": w, "estimate": est }));
    }
    let norms: Vec<f64> = rows.iter().map(|r| r["estimate"]["value"].as_f64().unwrap()).collect();
    let mut checks = vec![Check::at_most("first_window_norm", norms[0], p.threshold)];
    if p.require_decrease {
        for (i, pair) in norms.windows(2).enumerate() {
            checks.push(Check { name: format!("decrease_{}", i + 1), ..Check::at_most("", pair[1], pair[0]) });
        }
    }
    Ok(Outcome { checks, results: json!({ "windows": rows }), artifacts: vec![] })
}

fn run_seminorm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.seminorm.as_ref().unwrap();
    let sys = cfg.system()?;
    let t = &sys.transformations[p.transformation];
    let mut values = Vec::new();
    let mut checks = Vec::new();
    for &k in &p.ks {
        let hk = HKSeminormConfig { k, n: p.n as u64, exact: p.exact, budget: p.budget as u128 };
        values.push(json!({ "k": k, "value": hk_seminorm(&p.observable, t, &sys, &hk)? }));
    }
    for e in &p.expected {
        let v = values
            .iter()
            .find(|v| v["k"] == e.k)
            .ok_or_else(|| LabError::Config(format!("expected value for k = {} not in ks", e.k)))?["value"]
            .as_f64()
            .unwrap();
        checks.push(Check::at_most(&format!("value_k{}", e.k), (v - e.value).abs(), e.tolerance));
    }
    let mut relations = Vec::new();
    if p.exact && sys.space.is_finite() {
        for &k in &p.ks {
            let rep = hk_inverse_direction_checks(&p.observable, t, &sys.space, k, p.budget as u128)?;
            for c in &rep.checks {
                checks.push(Check::margin(&format!("{}_k{}", c.relation, k), c.margin, p.relation_tolerance));
            }
            relations.push(rep);
        }
    }
    Ok(Outcome { checks, results: json!({ "values": values, "relations": relations }), artifacts: vec![] })
}

fn random_point(rng: &mut ChaCha8Rng, moduli: &[Modulus]) -> StatePoint {
    StatePoint(
        moduli
            .iter()
            .map(|m| match m {
                Modulus::Torus => rng.gen::<u64>(),
                Modulus::Cyclic(q) => rng.gen_range(0..*q),
            })
            .collect(),
    )
}

fn random_time(rng: &mut ChaCha8Rng, bound: i64) -> FixedReal {
    FixedReal::from_int(rng.gen_range(-bound..bound)) + FixedReal::from_frac_bits(rng.gen())
}

fn random_grid(rng: &mut ChaCha8Rng, ell: usize, m: usize, bound: i64) -> Vec<Vec<FixedReal>> {
    (0..ell).map(|_| (0..m).map(|_| random_time(rng, bound)).collect()).collect()
}

/// Uniform value in `[0, 1)` attached to an integer tuple.
pub fn hashed_uniform(seed: u64, idx: &[i64]) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &v in idx {
        h = mix(h ^ (v as u64));
    }
    (mix(h) >> 11) as f64 / (1u64 << 53) as f64
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn single_direction(sys: &CommutingSystem) -> Result<SuspensionFlow> {
    let one = CommutingSystem::new(sys.space.clone(), vec![sys.transformations[0].clone()], sys.sampler.clone())?;
    SuspensionFlow::new(one, 1)
}

fn run_suspension(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.suspension.as_ref().unwrap();
    let seed = cfg.seed()?;
    let sys = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moduli = sys.space.moduli();
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();

    if let Some(fp) = &p.flow {
        let flow = SuspensionFlow::new(sys.clone(), fp.directions)?;
        let (ell, m) = (flow.ell(), fp.directions);
        let mut bad = 0u64;
        for _ in 0..fp.points {
            let base = random_point(&mut rng, &moduli);
            let heights = (0..ell).map(|_| (0..m).map(|_| FixedReal::from_frac_bits(rng.gen())).collect()).collect();
            let pt = SuspensionPoint::new(base, heights)?;
            let s = random_grid(&mut rng, ell, m, 4);
            let t = random_grid(&mut rng, ell, m, 4);
            let st: Vec<Vec<FixedReal>> =
                s.iter().zip(&t).map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x + *y).collect()).collect();
            let lhs = flow_apply(&flow, &st, &pt)?;
            let rhs = flow_apply(&flow, &t, &flow_apply(&flow, &s, &pt)?)?;
            bad += (lhs != rhs) as u64;
        }
        checks.push(Check::at_most("flow_law_mismatches", bad as f64, 0.0));
        let single = single_direction(&sys)?;
        let pts: Vec<SuspensionPoint> =
            (0..fp.identity_points).map(|_| SuspensionPoint::at_floor(random_point(&mut rng, &moduli), 1, 1)).collect();
        let f = cfg
            .correlation
            .as_ref()
            .and_then(|c| c.observables.get(1).cloned())
            .unwrap_or_else(crate::systems::Observable::one);
        let rep = flow_power_identity_check(&single, fp.s, fp.n_max, &pts, &f)?;
        checks.push(Check::at_most("power_identity_mismatches", (rep.mismatches + rep.observable_mismatches) as f64, 0.0));
        results.insert("flow".into(), json!({ "flow_law_points": fp.points, "flow_law_mismatches": bad, "power_identity": rep }));
    }

    if let Some(f5) = &p.f5 {
        let mut cases = Vec::new();
        let mut worst = f64::INFINITY;
        for case in 0..f5.cases {
            let s = FixedReal::from_raw(rng.gen_range((1i128 << 60)..(3i128 << 64)));
            let k = rng.gen_range(1..=2usize);
            let len = if k == 1 { f5.window_len } else { (f5.window_len as f64).sqrt().ceil() as i64 };
            let start = rng.gen_range(0..1000);
            let a_seed = rng.gen::<u64>();
            let a = move |x: &[i64]| hashed_uniform(a_seed, x);
            let rep = lemma_f5_check(&a, s, k, Window::new(start, start + len.max(1))?)?;
            worst = worst.min(rep.margin);
            cases.push(json!({ "case": case, "report": rep }));
        }
        checks.push(Check::margin("f5_min_margin", worst, p.tolerance));
        results.insert("f5".into(), json!(cases));
    }

    if let Some(f6) = &p.f6 {
        let rep = lemma_f6_numeric_check(
            &f6.observable,
            &sys.transformations[0],
            &sys.space,
            f6.s,
            f6.k,
            f6.grid_bits,
            f6.budget as u128,
        )?;
        checks.push(Check::margin("f6_margin", rep.margin, p.tolerance));
        results.insert("f6".into(), to_value(&rep));
    }

    if let Some(w) = &p.weak {
        let spec = cfg.correlation_spec()?;
        let a = corr_seq(&spec, w.window)?;
        let sup = a.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let b = SequenceSample::from_fn(w.window, |n| a.get(n).unwrap().conj() / sup);
        let mut rows = Vec::new();
        let mut c_prev = f64::INFINITY;
        let mut decreasing = true;
        let mut worst = f64::INFINITY;
        for &d in &w.deltas {
            let rep = weak_anti_uniform_bound(&spec, &b, d, w.window, None)?;
            decreasing &= rep.c_delta < c_prev;
            c_prev = rep.c_delta;
            worst = worst.min(rep.margin);
            rows.push(rep);
        }
        checks.push(Check::margin("weak_min_margin", worst, p.tolerance));
        checks.push(Check::flag("c_delta_decreasing", decreasing));
        results.insert("weak".into(), to_value(&rows));
    }
    if checks.is_empty() {
        return Err(LabError::Config("suspension needs at least one of flow, f5, f6, weak".into()));
    }
    Ok(Outcome { checks, results: Value::Object(results), artifacts: vec![] })
}

fn run_pet(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.pet.as_ref().unwrap();
    let fam = PolyFamily::new(p.family.clone())?;
    let trace = pet_reduce(&fam, p.max_depth)?;
    let integer = p.family.iter().flatten().all(|q| q.has_integer_coeffs());
    let nice = if integer { Some(is_nice(&fam)?) } else { None };
    let r_nice = is_r_nice(&fam)?;
    let mut checks = vec![Check::flag("completed", trace.completed)];
    if let Some(d) = p.expect_depth {
        checks.push(Check::at_most("depth_exact", (trace.depth as f64 - d as f64).abs(), 0.0));
    }
    if let Some(d) = p.depth_at_most {
        checks.push(Check::at_most("depth_bound", trace.depth as f64, d as f64));
    }
    write_json(&trace, &out.join("pet_trace.json"))?;
    Ok(Outcome {
        checks,
        results: json!({
            "depth": trace.depth,
            "k_estimate": trace.k_estimate,
            "completed": trace.completed,
            "nice": nice,
            "r_nice": r_nice,
            "steps": trace.steps.len(),
        }),
        artifacts: vec!["pet_trace.json".into()],
    })
}

fn run_decompose(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.decompose.as_ref().unwrap();
    let spec = cfg.correlation_spec()?;
    let ladder = p.basis.build()?;
    let a = corr_seq(&spec, p.window)?;
    let rep = decompose(&a, &ladder, p.epsilon, p.window)?;
    let worst = rep.margins.iter().cloned().fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("orthogonality", worst, p.margin_tolerance),
        Check::flag("monotone", rep.monotone),
        Check { certification: true, ..Check::at_most("certified_residual", rep.residual_norm, p.epsilon) },
    ];
    if !rep.certified {
        checks.last_mut().unwrap().passed = false;
    }
    let mut artifacts = Vec::new();
    if p.csv {
        rep.write_csv(&out.join("decomposition.csv"))?;
        artifacts.push("decomposition.csv".into());
    }
    Ok(Outcome { checks, results: to_value(&rep), artifacts })
}

fn run_density(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.density.as_ref().unwrap();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &d in &p.deltas {
        let rep = frac_density(&p.polynomial, d, p.window)?;
        let df = d.to_f64();
        if let Some(tol) = p.rel_tolerance {
            checks.push(Check::at_most(&format!("density_{}", d), (rep.density - df).abs(), tol * df));
        }
        if let Some(per) = p.expect_periodic {
            checks.push(Check::flag(&format!("periodic_{}", d), rep.periodic_flag == per));
        }
        if p.expect_zero {
            checks.push(Check::at_most(&format!("zero_{}", d), rep.density, 0.0));
        }
        rows.push(rep);
    }
    Ok(Outcome { checks, results: json!({ "densities": rows }), artifacts: vec![] })
}
