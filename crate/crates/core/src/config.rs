//! TOML experiment configuration.
//!
//! A config has a `[run]` header naming the scenario, shared `[system]` and
//! `[correlation]` declarations, and one parameter table per scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlate::CorrelationSpec;
use crate::error::{LabError, Result};
use crate::fixed::FixedReal;
use crate::nil::{make_basis, BasisKind, BasisSpec, NilBasis};
use crate::pet::PolyFamily;
use crate::poly::{RealPolynomial, Window};
use crate::systems::{CommutingSystem, Factor, FactorMap, Observable, Sampler, StateSpace, Transformation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Correlate,
    Converge,
    ZeroLimit,
    Seminorm,
    Suspension,
    Pet,
    Decompose,
    Density,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::Correlate,
        ScenarioKind::Converge,
        ScenarioKind::ZeroLimit,
        ScenarioKind::Seminorm,
        ScenarioKind::Suspension,
        ScenarioKind::Pet,
        ScenarioKind::Decompose,
        ScenarioKind::Density,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Correlate => "correlate",
            ScenarioKind::Converge => "converge",
            ScenarioKind::ZeroLimit => "zero-limit",
            ScenarioKind::Seminorm => "seminorm",
            ScenarioKind::Suspension => "suspension",
            ScenarioKind::Pet => "pet",
            ScenarioKind::Decompose => "decompose",
            ScenarioKind::Density => "density",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub scenario: ScenarioKind,
    pub seed: Option<u64>,
    /// Artifact directory; the CLI `--out` flag overrides it.
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDecl {
    pub space: Vec<Factor>,
    /// One list of factor maps per transformation.
    pub transformations: Vec<Vec<FactorMap>>,
    pub sampler: Option<Sampler>,
}

impl SystemDecl {
    pub fn build(&self) -> Result<CommutingSystem> {
        let space = StateSpace::new(self.space.clone())?;
        let sampler = match &self.sampler {
            Some(s) => s.clone(),
            None if space.is_finite() => Sampler::Enumerate,
            None => return Err(LabError::Config("an infinite space needs a sampler with a seed".into())),
        };
        let ts = self.transformations.iter().map(|maps| Transformation::new(&space, maps)).collect::<Result<Vec<_>>>()?;
        CommutingSystem::new(space, ts, sampler)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationDecl {
    /// `ℓ × m` grid of coefficient lists, lowest degree first.
    pub iterates: Vec<Vec<RealPolynomial>>,
    /// `f₀, …, f_m`.
    pub observables: Vec<Observable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateParams {
    pub window: Window,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "tiny")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    pub start: i64,
    pub base: i64,
    pub count: usize,
    pub tolerance: f64,
    /// Require every difference to vanish exactly.
    #[serde(default)]
    pub expect_exact_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroLimitParams {
    pub windows: Vec<Window>,
    pub threshold: f64,
    #[serde(default = "yes")]
    pub require_decrease: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSeminorm {
    pub k: u32,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormParams {
    pub observable: Observable,
    #[serde(default)]
    pub transformation: usize,
    pub ks: Vec<u32>,
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub expected: Vec<ExpectedSeminorm>,
    #[serde(default = "relation_tol")]
    pub relation_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    /// Random points for the flow law.
    pub points: usize,
    /// Directions per transformation.
    #[serde(default = "one")]
    pub directions: usize,
    /// Time for the power identity.
    pub s: FixedReal,
    pub n_max: u64,
    #[serde(default = "default_identity_points")]
    pub identity_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F5Params {
    pub cases: usize,
    pub window_len: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct F6Params {
    pub observable: Observable,
    pub s: FixedReal,
    pub k: u32,
    #[serde(default = "default_grid_bits")]
    pub grid_bits: u32,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakParams {
    pub deltas: Vec<FixedReal>,
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionParams {
    pub flow: Option<FlowParams>,
    pub f5: Option<F5Params>,
    pub f6: Option<F6Params>,
    pub weak: Option<WeakParams>,
    #[serde(default = "margin_tol")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetParams {
    /// `ℓ × m` grid of coefficient lists.
    pub family: Vec<Vec<RealPolynomial>>,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    pub expect_depth: Option<usize>,
    /// Upper bound on the depth.
    pub depth_at_most: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderDecl {
    pub kind: BasisKind,
    #[serde(default = "one_u32")]
    pub k: u32,
    pub frequencies: Vec<FixedReal>,
    /// Orders per rung.
    pub ladder: Vec<Vec<u32>>,
}

impl LadderDecl {
    pub fn build(&self) -> Result<Vec<NilBasis>> {
        self.ladder
            .iter()
            .map(|orders| {
                make_basis(&BasisSpec { kind: self.kind, k: self.k, frequencies: self.frequencies.clone(), orders: orders.clone() })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeParams {
    pub window: Window,
    pub epsilon: f64,
    pub basis: LadderDecl,
    #[serde(default = "margin_tol")]
    pub margin_tolerance: f64,
    #[serde(default = "yes")]
    pub csv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub polynomial: RealPolynomial,
    pub deltas: Vec<FixedReal>,
    pub window: Window,
    /// Require `|density − δ| ≤ rel_tolerance · δ`.
    pub rel_tolerance: Option<f64>,
    pub expect_periodic: Option<bool>,
    #[serde(default)]
    pub expect_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub system: Option<SystemDecl>,
    pub correlation: Option<CorrelationDecl>,
    pub correlate: Option<CorrelateParams>,
    pub converge: Option<ConvergeParams>,
    pub zero_limit: Option<ZeroLimitParams>,
    pub seminorm: Option<SeminormParams>,
    pub suspension: Option<SuspensionParams>,
    pub pet: Option<PetParams>,
    pub decompose: Option<DecomposeParams>,
    pub density: Option<DensityParams>,
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn tiny() -> f64 {
    1e-12
}
fn relation_tol() -> f64 {
    1e-9
}
fn margin_tol() -> f64 {
    1e-6
}
fn default_n() -> usize {
    256
}
fn default_budget() -> u64 {
    2_000_000_000
}
fn default_grid_bits() -> u32 {
    6
}
fn default_depth() -> usize {
    crate::pet::DEFAULT_MAX_DEPTH
}
fn default_identity_points() -> usize {
    4
}

fn missing(what: &str, scenario: ScenarioKind) -> LabError {
    LabError::Config(format!("scenario {} needs a [{}] table", scenario.name(), what))
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {}", path.display(), e)))?;
        Self::from_toml(&src)
    }

    pub fn system(&self) -> Result<CommutingSystem> {
        self.system.as_ref().ok_or_else(|| missing("system", self.run.scenario))?.build()
    }

    pub fn correlation_spec(&self) -> Result<CorrelationSpec> {
        let decl = self.correlation.as_ref().ok_or_else(|| missing("correlation", self.run.scenario))?;
        CorrelationSpec::new(self.system()?, decl.iterates.clone(), decl.observables.clone())
    }

    pub fn seed(&self) -> Result<u64> {
        self.run.seed.ok_or_else(|| LabError::Config(format!("scenario {} needs run.seed", self.run.scenario.name())))
    }

    /// Checks that every declaration the scenario uses is present and builds.
    pub fn validate(&self) -> Result<()> {
        let s = self.run.scenario;
        let tables = [
            ("correlate", self.correlate.is_some(), ScenarioKind::Correlate),
            ("converge", self.converge.is_some(), ScenarioKind::Converge),
            ("zero_limit", self.zero_limit.is_some(), ScenarioKind::ZeroLimit),
            ("seminorm", self.seminorm.is_some(), ScenarioKind::Seminorm),
            ("suspension", self.suspension.is_some(), ScenarioKind::Suspension),
            ("pet", self.pet.is_some(), ScenarioKind::Pet),
            ("decompose", self.decompose.is_some(), ScenarioKind::Decompose),
            ("density", self.density.is_some(), ScenarioKind::Density),
        ];
        for (name, present, kind) in tables {
            if kind == s && !present {
                return Err(missing(name, s));
            }
            if kind != s && present {
                return Err(LabError::Config(format!("[{}] does not belong to scenario {}", name, s.name())));
            }
        }
        match s {
            ScenarioKind::Correlate | ScenarioKind::Converge | ScenarioKind::ZeroLimit => {
                self.correlation_spec()?;
            }
            ScenarioKind::Seminorm => {
                let sys = self.system()?;
                let p = self.seminorm.as_ref().unwrap();
                if p.transformation >= sys.ell() {
                    return Err(LabError::Config(format!("transformation {} is not declared", p.transformation)));
                }
                p.observable.check(&sys.space)?;
                if p.ks.is_empty() {
                    return Err(LabError::Config("seminorm.ks must be nonempty".into()));
                }
            }
            ScenarioKind::Suspension => {
                self.seed()?;
                let p = self.suspension.as_ref().unwrap();
                let sys = self.system()?;
                if let Some(f6) = &p.f6 {
                    if !sys.space.is_finite() {
                        return Err(LabError::Config("suspension.f6 needs a finite base".into()));
                    }
                    f6.observable.check(&sys.space)?;
                }
                if p.weak.is_some() {
                    self.correlation_spec()?;
                }
            }
            ScenarioKind::Pet => {
                PolyFamily::new(self.pet.as_ref().unwrap().family.clone())?;
            }
            ScenarioKind::Decompose => {
                self.correlation_spec()?;
                self.decompose.as_ref().unwrap().basis.build()?;
            }
            ScenarioKind::Density => {
                let p = self.density.as_ref().unwrap();
                if p.deltas.is_empty() {
                    return Err(LabError::Config("density.deltas must be nonempty".into()));
                }
            }
        }
        Ok(())
    }
}
