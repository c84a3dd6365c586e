//! Report tree and its two renderings.
//!
//! All numbers are rounded to 12 significant digits when the report is
//! built, so the structured form round-trips exactly and two runs on the
//! same input give byte-identical output.

use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

pub use crate::scenario::FORMAT_VERSION;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section<T> {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<T>,
}

impl<T> Section<T> {
    pub fn ok(result: T) -> Self {
        Self { status: Status::Ok, reason: None, result: Some(result) }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        Self { status: Status::Failed, reason: Some(reason.into()), result: None }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Self { status: Status::Skipped, reason: Some(reason.into()), result: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub subset: Vec<String>,
    pub probability: f64,
}

/// Quadrilateral over `[a1, b1, b2, a2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrilateral {
    pub indices: [usize; 4],
    pub variables: Vec<String>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasTerm {
    /// Empty for the normalization row.
    pub subset: Vec<String>,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateReport {
    Quadrilateral(Quadrilateral),
    Farkas { terms: Vec<FarkasTerm>, margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Completeness {
    /// `witness[atom]`, bit `j` of `atom` = base variable `j`.
    Complete { witness: Vec<f64>, max_residual: f64 },
    Incomplete { certificate: CertificateReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvrResult {
    pub variables: Vec<String>,
    pub base_variables: Vec<String>,
    pub max_subset: usize,
    pub marginals: Vec<Marginal>,
    pub quadrilaterals: Vec<Quadrilateral>,
    pub completeness: Completeness,
    pub kochen_specker_witness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsChsh {
    /// `a1, a2, b1, b2`
    pub labels: Vec<String>,
    /// `⟨A1B1⟩, ⟨A2B1⟩, ⟨A1B2⟩, ⟨A2B2⟩`
    pub expectations: [f64; 4],
    pub chsh: f64,
}

/// Bloch angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub mode: String,
    pub alice: [Angles; 2],
    pub bob: [Angles; 2],
    pub value: f64,
    pub grid_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_settings: Option<SettingsChsh>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings_note: Option<String>,
    pub search: SearchReport,
    pub classical_bound: f64,
    pub quantum_bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub nats: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub product_residual: f64,
    pub min_partial_transpose_eigenvalue: f64,
    pub found_decomposition: bool,
    pub entangled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub subsystem_dims: Vec<usize>,
    pub total: EntropyValue,
    pub subsystems: Vec<EntropyValue>,
    pub lower_bound_slack: f64,
    pub subadditivity_slack: f64,
    pub violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separability: Option<SeparabilityReport>,
    /// Best CHSH value for two-qubit states, shown next to the entropy flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_chsh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub observables: Vec<String>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvmEntry {
    pub name: String,
    pub expectations: Vec<Expectation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvmResult {
    pub models: Vec<HvmEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Base-variable subsets used as coordinates.
    pub coordinates: Vec<Vec<String>>,
    pub float_complete: bool,
    pub exact_inside: bool,
    pub agree: bool,
    /// Integer hyperplane `normal · v ≤ offset` separating the target, when outside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub scenario_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rvr: Option<Section<RvrResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<Section<BellResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<Section<EntropyResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hvm: Option<Section<HvmResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Section<OracleResult>>,
}

impl Report {
    pub fn empty(scenario_sha256: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario_sha256: scenario_sha256.into(),
            timestamp: None,
            rvr: None,
            bell: None,
            entropy: None,
            hvm: None,
            oracle: None,
        }
    }

    /// Some analysis found a nonclassical signature.
    pub fn has_violations(&self) -> bool {
        let rvr = self.rvr.as_ref().and_then(|s| s.result.as_ref()).is_some_and(|r| {
            r.kochen_specker_witness || matches!(r.completeness, Completeness::Incomplete { .. })
        });
        let bell = self.bell.as_ref().and_then(|s| s.result.as_ref()).is_some_and(|r| r.violation);
        let entropy = self.entropy.as_ref().and_then(|s| s.result.as_ref()).is_some_and(|r| r.violation);
        let oracle = self.oracle.as_ref().and_then(|s| s.result.as_ref()).is_some_and(|r| !r.exact_inside);
        rvr || bell || entropy || oracle
    }

    /// Some requested analysis could not run.
    pub fn has_failures(&self) -> bool {
        let statuses = [
            self.rvr.as_ref().map(|s| s.status),
            self.bell.as_ref().map(|s| s.status),
            self.entropy.as_ref().map(|s| s.status),
            self.hvm.as_ref().map(|s| s.status),
            self.oracle.as_ref().map(|s| s.status),
        ];
        statuses.contains(&Some(Status::Failed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => emit_text(report),
    }
}

/// Quadrilateral rows shown in the text rendering; the structured form has all.
const TEXT_QUADRILATERAL_ROWS: usize = 10;

/// Plain decimal for ordinary magnitudes, exponent form for tiny or huge ones.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        let a = x.abs();
        if x == 0.0 || (1e-4..1e7).contains(&a) || !x.is_finite() {
            f.pad(&x.to_string())
        } else {
            f.pad(&format!("{x:e}"))
        }
    }
}

fn status_line<T>(out: &mut String, name: &str, section: &Section<T>) {
    let status = match section.status {
        Status::Ok => "ok",
        Status::Failed => "failed",
        Status::Skipped => "skipped",
    };
    let _ = write!(out, "\n[{name}] {status}");
    if let Some(reason) = &section.reason {
        let _ = write!(out, ": {reason}");
    }
    out.push('\n');
}

fn subset(labels: &[String]) -> String {
    if labels.is_empty() {
        "normalization".into()
    } else {
        format!("p({})", labels.join(", "))
    }
}

fn emit_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rvrcheck report (format {})", r.format_version);
    let _ = writeln!(out, "scenario sha256: {}", r.scenario_sha256);
    if let Some(t) = &r.timestamp {
        let _ = writeln!(out, "timestamp: {t}");
    }

    if let Some(section) = &r.rvr {
        status_line(&mut out, "rvr", section);
        if let Some(x) = &section.result {
            let _ = writeln!(out, "  variables: {}", x.variables.join(" "));
            let _ = writeln!(out, "  base variables: {}", x.base_variables.join(" "));
            let _ = writeln!(out, "  defined marginals ({}, subsets up to {}):", x.marginals.len(), x.max_subset);
            for m in &x.marginals {
                let _ = writeln!(out, "    {:<28} {}", subset(&m.subset), Num(m.probability));
            }
            let _ = writeln!(out, "  quadrilateral scan ({} quadruples, ascending slack):", x.quadrilaterals.len());
            for q in x.quadrilaterals.iter().take(TEXT_QUADRILATERAL_ROWS) {
                let _ = writeln!(out, "    {:<20} {}", Num(q.slack), q.variables.join(" "));
            }
            if x.quadrilaterals.len() > TEXT_QUADRILATERAL_ROWS {
                let _ = writeln!(out, "    ({} more)", x.quadrilaterals.len() - TEXT_QUADRILATERAL_ROWS);
            }
            match &x.completeness {
                Completeness::Complete { witness, max_residual } => {
                    let _ = writeln!(out, "  completeness: complete (witness residual {})", Num(*max_residual));
                    for (atom, p) in witness.iter().enumerate().filter(|(_, p)| **p != 0.0) {
                        let _ = writeln!(out, "    atom {atom:>4}  {}", Num(*p));
                    }
                }
                Completeness::Incomplete { certificate } => {
                    let _ = writeln!(out, "  completeness: incomplete");
                    match certificate {
                        CertificateReport::Quadrilateral(q) => {
                            let _ = writeln!(
                                out,
                                "    certificate: quadrilateral {} {:?} slack {}",
                                q.variables.join(" "),
                                q.indices,
                                Num(q.slack)
                            );
                        }
                        CertificateReport::Farkas { terms, margin } => {
                            let _ = writeln!(out, "    certificate: Farkas multipliers (margin {})", Num(*margin));
                            for t in terms {
                                let _ = writeln!(out, "      {:<28} {}", subset(&t.subset), Num(t.multiplier));
                            }
                        }
                    }
                }
            }
            let _ = writeln!(out, "  noncontextual model excluded: {}", if x.kochen_specker_witness { "yes" } else { "no" });
        }
    }

    if let Some(section) = &r.bell {
        status_line(&mut out, "bell", section);
        if let Some(x) = &section.result {
            if let Some(s) = &x.at_settings {
                let _ = writeln!(out, "  settings {}:", s.labels.join(" "));
                for (name, e) in ["A1B1", "A2B1", "A1B2", "A2B2"].iter().zip(s.expectations) {
                    let _ = writeln!(out, "    <{name}> = {}", Num(e));
                }
                let _ = writeln!(out, "    CHSH = {}", Num(s.chsh));
            }
            if let Some(note) = &x.settings_note {
                let _ = writeln!(out, "  settings: {note}");
            }
            let angles = |a: &[Angles; 2]| {
                a.iter().map(|x| format!("({}°, {}°)", Num(x.theta), Num(x.phi))).collect::<Vec<_>>().join(" ")
            };
            let _ = writeln!(out, "  search ({}): CHSH = {} (grid {})", x.search.mode, Num(x.search.value), Num(x.search.grid_value));
            let _ = writeln!(out, "    alice {}", angles(&x.search.alice));
            let _ = writeln!(out, "    bob   {}", angles(&x.search.bob));
            let _ = writeln!(out, "  bounds: classical {}, quantum {}", Num(x.classical_bound), Num(x.quantum_bound));
            let _ = writeln!(out, "  violation: {}", if x.violation { "yes" } else { "no" });
        }
    }

    if let Some(section) = &r.entropy {
        status_line(&mut out, "entropy", section);
        if let Some(x) = &section.result {
            let dims: Vec<String> = x.subsystem_dims.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "  subsystems: {}", dims.join(" x "));
            let _ = writeln!(out, "  {:<10} {:<20} bits", "", "nats");
            let _ = writeln!(out, "  {:<10} {:<20} {}", "S", Num(x.total.nats), Num(x.total.bits));
            for (j, s) in x.subsystems.iter().enumerate() {
                let _ = writeln!(out, "  {:<10} {:<20} {}", format!("S{}", j + 1), Num(s.nats), Num(s.bits));
            }
            let _ = writeln!(out, "  lower-bound slack: {}", Num(x.lower_bound_slack));
            let _ = writeln!(out, "  subadditivity slack: {}", Num(x.subadditivity_slack));
            let _ = writeln!(out, "  violation: {}", if x.violation { "yes" } else { "no" });
            if let Some(p) = &x.separability {
                let _ = writeln!(
                    out,
                    "  separability probe: product residual {}, min partial-transpose eigenvalue {}",
                    Num(p.product_residual), Num(p.min_partial_transpose_eigenvalue)
                );
            }
            if let Some(v) = x.max_chsh {
                let _ = writeln!(out, "  best CHSH for this state: {}", Num(v));
            }
        }
    }

    if let Some(section) = &r.hvm {
        status_line(&mut out, "hvm", section);
        if let Some(x) = &section.result {
            for m in &x.models {
                let _ = writeln!(out, "  model {}:", m.name);
                for e in &m.expectations {
                    let _ = writeln!(out, "    <{}> = {}", e.observables.join(" "), Num(e.value));
                }
                if let Some(c) = m.chsh {
                    let _ = writeln!(out, "    CHSH = {}", Num(c));
                }
            }
        }
    }

    if let Some(section) = &r.oracle {
        status_line(&mut out, "oracle", section);
        if let Some(x) = &section.result {
            let _ = writeln!(out, "  coordinates: {}", x.coordinates.iter().map(|c| subset(c)).collect::<Vec<_>>().join(" "));
            let _ = writeln!(out, "  float path complete: {}", x.float_complete);
            let _ = writeln!(out, "  exact hull membership: {}", x.exact_inside);
            let _ = writeln!(out, "  agree: {}", x.agree);
            if let (Some(n), Some(c)) = (&x.normal, &x.offset) {
                let _ = writeln!(out, "  separating hyperplane: [{}] . v <= {c}", n.join(", "));
            }
        }
    }
    out
}
