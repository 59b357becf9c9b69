//! Experiment configuration: TOML schema and conversion into model objects.

use serde::{Deserialize, Serialize};
use weakorder::classical::{ClassicalModel, ClassicalObservable, GaussianDensity, Polynomial};
use weakorder::operator::{CMatrix, CVector, DensityMatrix, Observable, Projector};
use weakorder::pointer::{make_gaussian_pointer, BackendChoice, Grid, PointerState};
use weakorder::C64;

use crate::error::CliError;

pub const MIN_SCHEDULE_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ForwardWeakValue,
    ReverseWeakValue,
    OrderSymmetry,
    StrongAsymmetry,
    ClassicalCheck,
    PointerConditions,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ForwardWeakValue => "forward_weak_value",
            Self::ReverseWeakValue => "reverse_weak_value",
            Self::OrderSymmetry => "order_symmetry",
            Self::StrongAsymmetry => "strong_asymmetry",
            Self::ClassicalCheck => "classical_check",
            Self::PointerConditions => "pointer_conditions",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub eps1_schedule: Option<Vec<f64>>,
    pub eps2: Option<Eps2>,
    pub system: Option<SystemSpec>,
    pub pointer: Option<PointerSpec>,
    pub pointer2: Option<PointerSpec>,
    pub classical: Option<ClassicalSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Eps2 {
    One(f64),
    Many(Vec<f64>),
}

/// `[re, im]` pair.
pub type Complex = [f64; 2];

/// Named qubit state or explicit (unnormalized) ket / density matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Ket { ket: Vec<Complex> },
    Density { density: Vec<Vec<Complex>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(String),
    Matrix { matrix: Vec<Vec<Complex>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProjectorSpec {
    Named(String),
    Ket { ket: Vec<Complex> },
    Matrix { matrix: Vec<Vec<Complex>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub state: StateSpec,
    pub a: Option<OperatorSpec>,
    pub b: Option<OperatorSpec>,
    pub projector: Option<ProjectorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Grid,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerSpec {
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "one")]
    pub sigma_q: f64,
    pub n_points: Option<usize>,
    pub spacing: Option<f64>,
    pub boost_k: Option<f64>,
    pub displacement: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpaceSpec {
    Named(String),
    Poly { poly: Vec<(u32, u32, f64)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalObservables {
    pub a: PhaseSpaceSpec,
    pub b: PhaseSpaceSpec,
    /// First-pointer readout: "Q1" or "P1".
    #[serde(default = "default_f1")]
    pub f1: String,
}

fn default_f1() -> String {
    "Q1".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSigmas {
    /// `[sigma_q, sigma_p]` of the system.
    #[serde(default = "unit_pair")]
    pub system: [f64; 2],
    #[serde(default = "one")]
    pub pointer1: f64,
    #[serde(default = "one")]
    pub pointer2: f64,
}

fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}

impl Default for ClassicalSigmas {
    fn default() -> Self {
        Self { system: unit_pair(), pointer1: 1.0, pointer2: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSpec {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Overrides the top-level seed for the Monte Carlo streams.
    pub seed: Option<u64>,
    pub observables: ClassicalObservables,
    #[serde(default)]
    pub sigma: ClassicalSigmas,
    /// `[mean_q, mean_p]` of the system density.
    #[serde(default)]
    pub system_mean: [f64; 2],
}

fn default_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Per-component error of an estimate against the exact weak value.
    pub weak_value: f64,
    /// `|forward - conj(reverse)|` per component.
    pub conjugation: f64,
    /// Spread of forward estimates across the eps2 list.
    pub eps2_spread: f64,
    /// Minimum order asymmetry for `strong_asymmetry` to pass.
    pub asymmetry_threshold: f64,
    /// Monte Carlo agreement, in standard errors.
    pub classical_stderr: f64,
    /// Extrapolation fits above this residual are flagged invalid.
    pub fit_residual: f64,
    /// Whether `pointer_conditions` expects the pointer to pass.
    pub expect_conditions: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            weak_value: 1e-3,
            conjugation: 2e-3,
            eps2_spread: 2e-3,
            asymmetry_threshold: 0.01,
            classical_stderr: 3.0,
            fit_residual: weakorder::estimators::DEFAULT_FIT_TOLERANCE,
            expect_conditions: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub summary: String,
    pub csv: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { summary: "summary.json".into(), csv: "correlations.csv".into() }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that need no numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        let needs_schedule = !matches!(self.experiment, PointerConditions);
        if needs_schedule {
            let s = self.eps1_schedule.as_deref().ok_or_else(|| invalid("eps1_schedule is required"))?;
            if s.len() < MIN_SCHEDULE_POINTS {
                return Err(invalid(format!(
                    "eps1_schedule has {} points, need at least {MIN_SCHEDULE_POINTS}",
                    s.len()
                )));
            }
            if s.iter().any(|e| !e.is_finite() || *e <= 0.0) {
                return Err(invalid("eps1_schedule values must be positive"));
            }
            if s.windows(2).any(|w| w[0] <= w[1]) {
                return Err(invalid("eps1_schedule must be strictly decreasing"));
            }
            if self.eps2_values().is_empty() || self.eps2_values().iter().any(|e| !e.is_finite()) {
                return Err(invalid("eps2 must be a finite number or a non-empty list"));
            }
        }
        match self.experiment {
            ForwardWeakValue | ReverseWeakValue | OrderSymmetry => {
                let sys = self.system.as_ref().ok_or_else(|| invalid("[system] is required"))?;
                if sys.projector.is_none() {
                    return Err(invalid("system.projector is required"));
                }
                let op = if self.experiment == ReverseWeakValue { &sys.b } else { &sys.a };
                if op.is_none() {
                    let key = if self.experiment == ReverseWeakValue { "b" } else { "a" };
                    return Err(invalid(format!("system.{key} is required")));
                }
            }
            StrongAsymmetry => {
                let sys = self.system.as_ref().ok_or_else(|| invalid("[system] is required"))?;
                if sys.a.is_none() || sys.b.is_none() {
                    return Err(invalid("system.a and system.b are required"));
                }
                let floor = weakorder::estimators::STRONG_COUPLING_MIN;
                if self.schedule().iter().any(|&e| e < floor) {
                    return Err(invalid(format!("strong_asymmetry needs every eps1 >= {floor}")));
                }
            }
            ClassicalCheck => {
                let c = self.classical.as_ref().ok_or_else(|| invalid("[classical] is required"))?;
                if !matches!(c.observables.f1.as_str(), "Q1" | "P1") {
                    return Err(invalid(format!(
                        "classical.observables.f1 must be Q1 or P1, got {}",
                        c.observables.f1
                    )));
                }
            }
            PointerConditions => {
                if self.pointer.is_none() {
                    return Err(invalid("[pointer] is required"));
                }
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> &[f64] {
        self.eps1_schedule.as_deref().unwrap_or(&[])
    }

    pub fn eps2_values(&self) -> Vec<f64> {
        match &self.eps2 {
            None => vec![1.0],
            Some(Eps2::One(e)) => vec![*e],
            Some(Eps2::Many(v)) => v.clone(),
        }
    }

    pub fn system(&self) -> Result<&SystemSpec, CliError> {
        self.system.as_ref().ok_or_else(|| invalid("[system] is required"))
    }

    pub fn pointer1(&self) -> Result<PointerState, CliError> {
        build_pointer(self.pointer.as_ref())
    }

    pub fn pointer2(&self) -> Result<PointerState, CliError> {
        build_pointer(self.pointer2.as_ref().or(self.pointer.as_ref()))
    }
}

fn complex(c: &Complex) -> C64 {
    C64::new(c[0], c[1])
}

fn named_ket(name: &str) -> Result<CVector, CliError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pairs: [(f64, f64); 2] = match name {
        "zero" => [(1.0, 0.0), (0.0, 0.0)],
        "one" => [(0.0, 0.0), (1.0, 0.0)],
        "plus" => [(s, 0.0), (s, 0.0)],
        "minus" => [(s, 0.0), (-s, 0.0)],
        "plus_i" => [(s, 0.0), (0.0, s)],
        "minus_i" => [(s, 0.0), (0.0, -s)],
        other => return Err(invalid(format!("unknown state {other:?}"))),
    };
    Ok(weakorder::operator::ket(&pairs))
}

fn ket_from(components: &[Complex]) -> Result<CVector, CliError> {
    if components.is_empty() {
        return Err(invalid("empty ket"));
    }
    Ok(CVector::from_iterator(components.len(), components.iter().map(complex)))
}

fn matrix_from(rows: &[Vec<Complex>]) -> Result<CMatrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix must be square and non-empty"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| complex(&rows[i][j])))
}

impl StateSpec {
    pub fn build(&self) -> Result<DensityMatrix, CliError> {
        let rho = match self {
            Self::Named(name) if name == "maximally_mixed" => Ok(DensityMatrix::maximally_mixed(2)),
            Self::Named(name) => DensityMatrix::pure(&named_ket(name)?),
            Self::Ket { ket } => DensityMatrix::pure(&ket_from(ket)?),
            Self::Density { density } => DensityMatrix::new(matrix_from(density)?),
        };
        rho.map_err(|e| invalid(format!("system.state: {e}")))
    }
}

impl OperatorSpec {
    pub fn build(&self, dim: usize) -> Result<Observable, CliError> {
        let obs = match self {
            Self::Named(name) => match name.as_str() {
                "pauli_x" => Ok(Observable::pauli_x()),
                "pauli_y" => Ok(Observable::pauli_y()),
                "pauli_z" => Ok(Observable::pauli_z()),
                "identity" => Ok(Observable::identity(dim)),
                other => return Err(invalid(format!("unknown operator {other:?}"))),
            },
            Self::Matrix { matrix } => Observable::new(matrix_from(matrix)?),
        };
        let obs = obs.map_err(|e| invalid(format!("operator: {e}")))?;
        if obs.dim() != dim {
            return Err(invalid(format!("operator dimension {} does not match state dimension {dim}", obs.dim())));
        }
        Ok(obs)
    }
}

impl ProjectorSpec {
    pub fn build(&self, dim: usize) -> Result<Projector, CliError> {
        let p = match self {
            Self::Named(name) => Projector::onto(&named_ket(name)?),
            Self::Ket { ket } => Projector::onto(&ket_from(ket)?),
            Self::Matrix { matrix } => Projector::new(matrix_from(matrix)?),
        };
        let p = p.map_err(|e| invalid(format!("system.projector: {e}")))?;
        if p.dim() != dim {
            return Err(invalid(format!("projector dimension {} does not match state dimension {dim}", p.dim())));
        }
        Ok(p)
    }
}

fn build_pointer(spec: Option<&PointerSpec>) -> Result<PointerState, CliError> {
    let default = PointerSpec {
        backend: Backend::Grid,
        sigma_q: 1.0,
        n_points: None,
        spacing: None,
        boost_k: None,
        displacement: None,
    };
    let spec = spec.unwrap_or(&default);
    if !(spec.sigma_q.is_finite() && spec.sigma_q > 0.0) {
        return Err(invalid("pointer.sigma_q must be positive"));
    }
    let numerical = |e: weakorder::Error| invalid(format!("pointer: {} ({e})", e.name()));
    let state = match spec.backend {
        Backend::Gaussian => {
            if spec.n_points.is_some()
                || spec.spacing.is_some()
                || spec.boost_k.is_some()
                || spec.displacement.is_some()
            {
                return Err(invalid("grid options require backend = \"grid\""));
            }
            make_gaussian_pointer(spec.sigma_q, BackendChoice::AnalyticGaussian).map_err(numerical)?
        }
        Backend::Grid => {
            let base = Grid::default_for(spec.sigma_q).map_err(numerical)?;
            let grid = Grid::new(spec.n_points.unwrap_or(base.n_points()), spec.spacing.unwrap_or(base.spacing()))
                .map_err(|e| invalid(format!("pointer grid: {e}")))?;
            let mut p = make_gaussian_pointer(spec.sigma_q, BackendChoice::Grid(grid)).map_err(numerical)?;
            if let Some(k) = spec.boost_k {
                p = p.boosted(k).map_err(numerical)?;
            }
            if let Some(d) = spec.displacement {
                p = p.displaced(d).map_err(numerical)?;
            }
            p
        }
    };
    Ok(state)
}

impl PhaseSpaceSpec {
    pub fn build(&self) -> Result<ClassicalObservable, CliError> {
        match self {
            Self::Named(name) => match name.as_str() {
                "q" => Ok(ClassicalObservable::q()),
                "p" => Ok(ClassicalObservable::p()),
                "q2p2" => Ok(ClassicalObservable::harmonic()),
                other => Err(invalid(format!("unknown classical observable {other:?}"))),
            },
            Self::Poly { poly } => {
                if poly.iter().any(|t| !t.2.is_finite()) {
                    return Err(invalid("polynomial coefficients must be finite"));
                }
                Ok(ClassicalObservable::polynomial(Polynomial::from_triples(poly)))
            }
        }
    }
}

impl ClassicalSpec {
    pub fn model(&self) -> Result<ClassicalModel, CliError> {
        let s = &self.sigma;
        let [mq, mp] = self.system_mean;
        let system = GaussianDensity::new(mq, mp, s.system[0], s.system[1]).map_err(|e| invalid(e.to_string()))?;
        let pointer1 = GaussianDensity::pointer(s.pointer1).map_err(|e| invalid(e.to_string()))?;
        let pointer2 = GaussianDensity::pointer(s.pointer2).map_err(|e| invalid(e.to_string()))?;
        Ok(ClassicalModel {
            system,
            pointer1,
            pointer2,
            a: self.observables.a.build()?,
            b: self.observables.b.build()?,
        })
    }

    pub fn f1(&self) -> ClassicalObservable {
        if self.observables.f1 == "P1" {
            ClassicalObservable::p()
        } else {
            ClassicalObservable::q()
        }
    }
}
