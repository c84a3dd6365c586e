//! Scenario documents: strict JSON, complex entries as `[re, im]` pairs,
//! angles in degrees.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "dimension": 4,
//!   "state": { "builtin": "singlet" },
//!   "projectors": [ { "four_projector": {} } ],
//!   "analyses": { "rvr": {}, "bell": {}, "entropy": {} }
//! }
//! ```
//!
//! Every operator is built and validated while parsing, so a parsed
//! [`Scenario`] never fails a hilbert-space check later.

use std::collections::BTreeSet;

use rvrcheck::bell::{spin_projector, BlochAngles, ChshSettings, HvmModel};
use rvrcheck::entropy::make_singlet;
use rvrcheck::hilbert::{c64, tensor_all, DensityOperator, Operator, Projector, C64};
use rvrcheck::rvr::{LabeledProjector, DEFAULT_MAX_SUBSET};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("validation error in {operator}: {invariant} (residual {residual:.3e})")]
    Validation { operator: String, invariant: String, residual: f64 },
    #[error("unknown builtin {0:?}")]
    UnknownBuiltin(String),
}

fn invalid(operator: impl Into<String>, invariant: impl Into<String>, residual: f64) -> ScenarioError {
    ScenarioError::Validation { operator: operator.into(), invariant: invariant.into(), residual }
}

/// Maps a library validation failure to the invariant it names.
fn from_core(operator: &str, err: rvrcheck::Error) -> ScenarioError {
    use rvrcheck::Error as E;
    let (invariant, residual) = match &err {
        E::NotHermitian { residual } => ("hermitian".to_string(), *residual),
        E::NotIdempotent { residual } => ("idempotent".to_string(), *residual),
        E::TraceNotUnit { residual } => ("unit trace".to_string(), *residual),
        E::NegativeEigenvalue { value } => ("positive semidefinite".to_string(), *value),
        E::DimensionMismatch { expected, found } => {
            (format!("dimension {expected} (found {found})"), expected.abs_diff(*found) as f64)
        }
        other => (other.to_string(), f64::NAN),
    };
    invalid(operator, invariant, residual)
}

type Entry = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    format_version: u32,
    dimension: usize,
    #[serde(default)]
    subsystems: Option<Vec<usize>>,
    state: RawState,
    #[serde(default)]
    projectors: Vec<RawProjector>,
    #[serde(default)]
    analyses: RawAnalyses,
    #[serde(default)]
    hvms: Vec<RawHvm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawState {
    Builtin(String),
    Matrix(Vec<Vec<Entry>>),
    Pure(Vec<Entry>),
    Product(Vec<RawState>),
    /// `I/d` with explicit `d`, usable inside products.
    MaximallyMixed(usize),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawProjector {
    Spin(RawSpin),
    Matrix(RawMatrixProjector),
    FourProjector(RawFourProjector),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpin {
    label: String,
    theta: f64,
    #[serde(default)]
    phi: f64,
    #[serde(default)]
    slot: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrixProjector {
    label: String,
    entries: Vec<Vec<Entry>>,
}

/// x-z plane angles; the defaults are the Tsirelson-optimal singlet settings.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFourProjector {
    #[serde(default = "default_alice")]
    alice: [f64; 2],
    #[serde(default = "default_bob")]
    bob: [f64; 2],
}

fn default_alice() -> [f64; 2] {
    [0.0, 90.0]
}

fn default_bob() -> [f64; 2] {
    [225.0, 135.0]
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalyses {
    rvr: Option<RawRvr>,
    bell: Option<RawBell>,
    entropy: Option<RawEntropy>,
    hvm: Option<RawEmpty>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRvr {
    max_subset: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBell {
    #[serde(default)]
    full_sphere: bool,
    settings: Option<[String; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntropy {
    subsystems: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmpty {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHvm {
    name: String,
    observables: Vec<String>,
    ontic: Vec<RawOntic>,
    #[serde(default)]
    expectations: Vec<Vec<String>>,
    chsh: Option<[String; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOntic {
    label: String,
    weight: f64,
    responses: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RvrRequest {
    pub max_subset: usize,
}

#[derive(Debug, Clone)]
pub struct BellRequest {
    pub full_sphere: bool,
    /// Labels of `a1, a2, b1, b2`.
    pub settings: [String; 4],
}

impl Default for BellRequest {
    fn default() -> Self {
        Self { full_sphere: false, settings: ["a1", "a2", "b1", "b2"].map(String::from) }
    }
}

#[derive(Debug, Clone)]
pub struct EntropyRequest {
    pub subsystems: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HvmSpec {
    pub name: String,
    pub model: HvmModel,
    pub expectations: Vec<Vec<String>>,
    pub chsh: Option<[String; 4]>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Hex SHA-256 of the document bytes.
    pub hash: String,
    pub dimension: usize,
    pub subsystems: Vec<usize>,
    pub state: DensityOperator,
    pub projectors: Vec<LabeledProjector>,
    pub rvr: Option<RvrRequest>,
    pub bell: Option<BellRequest>,
    pub entropy: Option<EntropyRequest>,
    pub hvm: bool,
    pub hvms: Vec<HvmSpec>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.format_version != FORMAT_VERSION {
        return Err(invalid(
            "document",
            format!("format_version {FORMAT_VERSION}"),
            f64::from(raw.format_version.abs_diff(FORMAT_VERSION)),
        ));
    }
    let dimension = raw.dimension;
    if dimension == 0 {
        return Err(invalid("document", "dimension ≥ 1", 1.0));
    }
    let subsystems = match raw.subsystems {
        Some(dims) => dims,
        None if dimension == 4 => vec![2, 2],
        None => vec![dimension],
    };
    check_factorization("subsystems", &subsystems, dimension)?;

    let state = build_state(&raw.state, "state", Some(dimension))?;
    if state.dim() != dimension {
        return Err(from_core("state", rvrcheck::Error::DimensionMismatch { expected: dimension, found: state.dim() }));
    }

    let mut projectors = Vec::new();
    for p in &raw.projectors {
        projectors.extend(build_projectors(p, &subsystems)?);
    }
    let mut seen = BTreeSet::new();
    for p in &projectors {
        if !seen.insert(p.label.clone()) {
            return Err(invalid(format!("projector {:?}", p.label), "unique label", 0.0));
        }
        if p.projector.dim() != dimension {
            let err = rvrcheck::Error::DimensionMismatch { expected: dimension, found: p.projector.dim() };
            return Err(from_core(&format!("projector {:?}", p.label), err));
        }
    }

    let entropy = match raw.analyses.entropy {
        Some(e) => {
            let dims = e.subsystems.unwrap_or_else(|| subsystems.clone());
            check_factorization("analyses.entropy.subsystems", &dims, dimension)?;
            Some(EntropyRequest { subsystems: dims })
        }
        None => None,
    };
    let hvms = raw.hvms.into_iter().map(build_hvm).collect::<Result<Vec<_>, _>>()?;

    Ok(Scenario {
        hash: hex::encode(Sha256::digest(text.as_bytes())),
        dimension,
        subsystems,
        state,
        projectors,
        rvr: raw.analyses.rvr.map(|r| RvrRequest { max_subset: r.max_subset.unwrap_or(DEFAULT_MAX_SUBSET) }),
        bell: raw.analyses.bell.map(|b| {
            let defaults = BellRequest::default();
            BellRequest { full_sphere: b.full_sphere, settings: b.settings.unwrap_or(defaults.settings) }
        }),
        entropy,
        hvm: raw.analyses.hvm.is_some(),
        hvms,
    })
}

fn check_factorization(operator: &str, dims: &[usize], dimension: usize) -> Result<(), ScenarioError> {
    let product: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || product != dimension {
        let err = rvrcheck::Error::DimensionMismatch { expected: dimension, found: product };
        return Err(from_core(operator, err));
    }
    Ok(())
}

fn complex_matrix(operator: &str, rows: &[Vec<Entry>]) -> Result<Operator, ScenarioError> {
    let n = rows.len();
    if let Some(row) = rows.iter().find(|r| r.len() != n) {
        return Err(invalid(operator, format!("square matrix ({n} rows)"), n.abs_diff(row.len()) as f64));
    }
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&[re, im]| c64(re, im)).collect()).collect();
    Operator::from_rows(&rows).map_err(|e| from_core(operator, e))
}

/// `dimension` resolves the `maximally_mixed` builtin; it is only known at top level.
fn build_state(raw: &RawState, operator: &str, dimension: Option<usize>) -> Result<DensityOperator, ScenarioError> {
    match raw {
        RawState::Builtin(name) => match name.as_str() {
            "singlet" => Ok(make_singlet()),
            "up" => Ok(DensityOperator::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).expect("unit ket")),
            "down" => Ok(DensityOperator::pure(&[c64(0.0, 0.0), c64(1.0, 0.0)]).expect("unit ket")),
            "maximally_mixed" => match dimension {
                Some(d) => Ok(DensityOperator::maximally_mixed(d)),
                None => Err(invalid(operator, "explicit dimension, as {\"maximally_mixed\": d}", 0.0)),
            },
            other => Err(ScenarioError::UnknownBuiltin(other.to_string())),
        },
        RawState::Matrix(rows) => DensityOperator::new(complex_matrix(operator, rows)?).map_err(|e| from_core(operator, e)),
        RawState::Pure(ket) => {
            let ket: Vec<C64> = ket.iter().map(|&[re, im]| c64(re, im)).collect();
            let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(invalid(operator, "unit norm", (norm - 1.0).abs()));
            }
            DensityOperator::pure(&ket).map_err(|e| from_core(operator, e))
        }
        RawState::Product(factors) => {
            if factors.is_empty() {
                return Err(invalid(operator, "at least one factor", 1.0));
            }
            let states = factors
                .iter()
                .enumerate()
                .map(|(i, f)| build_state(f, &format!("{operator}.product[{i}]"), None))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(states[1..].iter().fold(states[0].clone(), |acc, s| acc.tensor(s)))
        }
        RawState::MaximallyMixed(d) if *d > 0 => Ok(DensityOperator::maximally_mixed(*d)),
        RawState::MaximallyMixed(_) => Err(invalid(operator, "dimension ≥ 1", 1.0)),
    }
}

fn check_angle(operator: &str, deg: f64) -> Result<f64, ScenarioError> {
    if !(0.0..360.0).contains(&deg) {
        let excess = if deg < 0.0 { -deg } else { deg - 360.0 };
        return Err(invalid(operator, "angle in [0, 360)", excess.abs()));
    }
    Ok(deg)
}

/// `P` on qubit `slot`, identities elsewhere.
fn embed(operator: &str, local: &Projector, slot: usize, subsystems: &[usize]) -> Result<Projector, ScenarioError> {
    match subsystems.get(slot) {
        Some(2) => {}
        Some(&d) => return Err(invalid(operator, format!("slot {slot} is a qubit (dimension {d})"), d.abs_diff(2) as f64)),
        None => return Err(invalid(operator, format!("slot {slot} < {}", subsystems.len()), slot as f64)),
    }
    let identities: Vec<Operator> = subsystems.iter().map(|&d| Operator::identity(d)).collect();
    let factors = identities.iter().enumerate().map(|(i, id)| if i == slot { local.op() } else { id });
    let op = tensor_all(factors).expect("nonempty subsystem list");
    Projector::new(op).map_err(|e| from_core(operator, e))
}

fn build_projectors(raw: &RawProjector, subsystems: &[usize]) -> Result<Vec<LabeledProjector>, ScenarioError> {
    match raw {
        RawProjector::Spin(s) => {
            let name = format!("projector {:?}", s.label);
            let angles = BlochAngles::from_degrees(check_angle(&name, s.theta)?, check_angle(&name, s.phi)?);
            let p = embed(&name, &spin_projector(angles), s.slot, subsystems)?;
            Ok(vec![LabeledProjector::new(s.label.clone(), p)])
        }
        RawProjector::Matrix(m) => {
            let name = format!("projector {:?}", m.label);
            let p = Projector::new(complex_matrix(&name, &m.entries)?).map_err(|e| from_core(&name, e))?;
            Ok(vec![LabeledProjector::new(m.label.clone(), p)])
        }
        RawProjector::FourProjector(f) => {
            if subsystems != [2, 2] {
                return Err(invalid("four_projector", "two-qubit subsystems [2, 2]", 0.0));
            }
            let xz = |deg: f64| check_angle("four_projector", deg).map(|d| BlochAngles::from_degrees(d, 0.0));
            let settings = ChshSettings {
                alice: [xz(f.alice[0])?, xz(f.alice[1])?],
                bob: [xz(f.bob[0])?, xz(f.bob[1])?],
            };
            Ok(settings.four_projectors())
        }
    }
}

fn build_hvm(raw: RawHvm) -> Result<HvmSpec, ScenarioError> {
    let name = format!("hvm {:?}", raw.name);
    let (ontic, weights, responses) = raw.ontic.into_iter().fold(
        (Vec::new(), Vec::new(), Vec::new()),
        |(mut l, mut w, mut r), o| {
            l.push(o.label);
            w.push(o.weight);
            r.push(o.responses);
            (l, w, r)
        },
    );
    let total: f64 = weights.iter().sum();
    let model = HvmModel::new(ontic, weights, raw.observables, responses).map_err(|e| match e {
        rvrcheck::Error::InvalidModel { reason } => invalid(&name, reason, (total - 1.0).abs()),
        other => from_core(&name, other),
    })?;
    for label in raw.expectations.iter().flatten().chain(raw.chsh.iter().flatten()) {
        model.observable_index(label).map_err(|_| invalid(&name, format!("observable {label:?} defined"), 0.0))?;
    }
    Ok(HvmSpec { name: raw.name, model, expectations: raw.expectations, chsh: raw.chsh })
}
