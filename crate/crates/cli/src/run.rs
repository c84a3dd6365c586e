//! Runs the requested analyses in the fixed order rvr, bell, entropy, hvm.
//!
//! A failing analysis is reported in its own section; the others still run.

use std::f64::consts::SQRT_2;

use rvrcheck::bell::{
    hvm_chsh, hvm_expectation, maximize_chsh, quantum_chsh, BlochAngles, SearchMode, TwoQubitScenario,
};
use rvrcheck::entropy::{information_inequality_report, nats_to_bits, separability_probe};
use rvrcheck::lp::oracle::{hull_membership_oracle, integer_normal, rational_vec, HullMembership};
use rvrcheck::rvr::{build_rvr, completeness_lp, scan_quadrilaterals, Certificate, FeasibilityResult, RvrModel};

use crate::report::*;
use crate::scenario::{BellRequest, EntropyRequest, RvrRequest, Scenario};

/// Which sections a subcommand produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every analysis the scenario requests.
    Check,
    /// Bell and hidden-variable sections, run with defaults if not requested.
    Bell,
    /// Entropy section only, run with defaults if not requested.
    Entropy,
    /// The rvr section plus the exact hull-membership cross-check.
    Oracle,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub max_subset: Option<usize>,
    pub full_sphere: bool,
    pub timestamp: Option<String>,
}

pub fn run(scenario: &Scenario, mode: Mode, overrides: &Overrides) -> Report {
    let mut report = Report::empty(scenario.hash.clone());
    report.timestamp = overrides.timestamp.clone();

    let rvr_request = match mode {
        Mode::Check => scenario.rvr.clone(),
        Mode::Oracle => Some(scenario.rvr.clone().unwrap_or(RvrRequest { max_subset: rvrcheck::rvr::DEFAULT_MAX_SUBSET })),
        Mode::Bell | Mode::Entropy => None,
    }
    .map(|mut r| {
        if let Some(m) = overrides.max_subset {
            r.max_subset = m;
        }
        r
    });
    let bell_request = match mode {
        Mode::Check => scenario.bell.clone(),
        Mode::Bell => Some(scenario.bell.clone().unwrap_or_default()),
        Mode::Entropy | Mode::Oracle => None,
    }
    .map(|mut b| {
        b.full_sphere |= overrides.full_sphere;
        b
    });
    let entropy_request = match mode {
        Mode::Check => scenario.entropy.clone(),
        Mode::Entropy => Some(scenario.entropy.clone().unwrap_or(EntropyRequest { subsystems: scenario.subsystems.clone() })),
        Mode::Bell | Mode::Oracle => None,
    };
    let hvm_requested = match mode {
        Mode::Check => scenario.hvm,
        Mode::Bell => scenario.hvm || !scenario.hvms.is_empty(),
        Mode::Entropy | Mode::Oracle => false,
    };

    let mut model = None;
    if let Some(req) = &rvr_request {
        let (section, built) = rvr_section(scenario, req);
        report.rvr = Some(section);
        model = built;
    }
    let mut best_chsh = None;
    if let Some(req) = &bell_request {
        let section = bell_section(scenario, req);
        best_chsh = section.result.as_ref().map(|r| r.search.value);
        report.bell = Some(section);
    }
    if let Some(req) = &entropy_request {
        report.entropy = Some(entropy_section(scenario, req, best_chsh));
    }
    if hvm_requested {
        report.hvm = Some(hvm_section(scenario));
    }
    if mode == Mode::Oracle {
        report.oracle = Some(match (&model, report.rvr.as_ref().and_then(|s| s.result.as_ref())) {
            (Some(m), Some(r)) => oracle_section(m, r),
            _ => Section::skipped("rvr analysis did not complete"),
        });
    }
    report
}

fn labels(model: &RvrModel, vars: &[usize]) -> Vec<String> {
    vars.iter().map(|&v| model.label(v).to_string()).collect()
}

fn rvr_section(scenario: &Scenario, req: &RvrRequest) -> (Section<RvrResult>, Option<RvrModel>) {
    if scenario.projectors.is_empty() {
        return (Section::skipped("no projectors"), None);
    }
    if req.max_subset < 2 {
        return (Section::failed(format!("max_subset must be at least 2, got {}", req.max_subset)), None);
    }
    let model = match build_rvr(scenario.projectors.clone(), &scenario.state, req.max_subset) {
        Ok(m) => m,
        Err(e) => return (Section::failed(e.to_string()), None),
    };
    let quads = match scan_quadrilaterals(&model) {
        Ok(q) => q,
        Err(e) => return (Section::failed(e.to_string()), None),
    };
    let completeness = match completeness_lp(&model) {
        Ok(FeasibilityResult::Complete { witness, max_residual }) => Completeness::Complete {
            witness: witness.probs().iter().map(|&p| sig12(p)).collect(),
            max_residual: sig12(max_residual),
        },
        Ok(FeasibilityResult::Incomplete { certificate: Certificate::Quadrilateral(q) }) => Completeness::Incomplete {
            certificate: CertificateReport::Quadrilateral(Quadrilateral {
                indices: q.vars,
                variables: labels(&model, &q.vars),
                slack: sig12(q.slack),
            }),
        },
        Ok(FeasibilityResult::Incomplete { certificate: Certificate::Farkas { terms, margin } }) => {
            Completeness::Incomplete {
                certificate: CertificateReport::Farkas {
                    terms: terms
                        .iter()
                        .map(|(s, y)| FarkasTerm { subset: labels(&model, s), multiplier: sig12(*y) })
                        .collect(),
                    margin: sig12(margin),
                },
            }
        }
        Err(e) => return (Section::failed(e.to_string()), Some(model)),
    };
    let witness = quads.first().is_some_and(|q| q.slack < -rvrcheck::rvr::VIOLATION_TOL);
    let result = RvrResult {
        variables: model.variables().iter().map(|v| v.label.clone()).collect(),
        base_variables: model.base_variables().iter().map(|&v| model.label(v).to_string()).collect(),
        max_subset: model.max_subset(),
        marginals: model
            .defined()
            .iter()
            .map(|(s, &p)| Marginal { subset: labels(&model, s), probability: sig12(p) })
            .collect(),
        quadrilaterals: quads
            .iter()
            .map(|q| Quadrilateral { indices: q.vars, variables: labels(&model, &q.vars), slack: sig12(q.slack) })
            .collect(),
        completeness,
        kochen_specker_witness: witness,
    };
    (Section::ok(result), Some(model))
}

fn degrees(a: BlochAngles) -> Angles {
    Angles { theta: sig12(a.theta.to_degrees()), phi: sig12(a.phi.to_degrees()) }
}

fn bell_section(scenario: &Scenario, req: &BellRequest) -> Section<BellResult> {
    if scenario.subsystems != [2, 2] {
        return Section::skipped(format!("needs a two-qubit state, subsystems are {:?}", scenario.subsystems));
    }
    let mode = if req.full_sphere { SearchMode::FullSphere } else { SearchMode::XzPlane };
    let found = match maximize_chsh(&scenario.state, mode) {
        Ok(f) => f,
        Err(e) => return Section::failed(e.to_string()),
    };
    let lookup = |label: &str| scenario.projectors.iter().find(|p| p.label == label).map(|p| p.projector.clone());
    let ops: Vec<_> = req.settings.iter().map(|l| lookup(l)).collect();
    let (at_settings, settings_note) = match ops.as_slice() {
        [Some(a1), Some(a2), Some(b1), Some(b2)] => {
            let evaluated = TwoQubitScenario::new(scenario.state.clone(), [a1.clone(), a2.clone()], [b1.clone(), b2.clone()])
                .and_then(|s| Ok((s.expectations()?, quantum_chsh(&s)?)));
            match evaluated {
                Ok((e, chsh)) => (
                    Some(SettingsChsh {
                        labels: req.settings.to_vec(),
                        expectations: [e.a1b1, e.a2b1, e.a1b2, e.a2b2].map(sig12),
                        chsh: sig12(chsh),
                    }),
                    None,
                ),
                Err(e) => (None, Some(format!("settings {:?} not evaluated: {e}", req.settings))),
            }
        }
        _ => (None, Some(format!("projectors {:?} not all present", req.settings))),
    };
    let violation = found.value > 2.0 + 1e-9 || at_settings.as_ref().is_some_and(|s| s.chsh > 2.0 + 1e-9);
    Section::ok(BellResult {
        at_settings,
        settings_note,
        search: SearchReport {
            mode: match mode {
                SearchMode::XzPlane => "xz_plane".into(),
                SearchMode::FullSphere => "full_sphere".into(),
            },
            alice: found.settings.alice.map(degrees),
            bob: found.settings.bob.map(degrees),
            value: sig12(found.value),
            grid_value: sig12(found.grid_value),
        },
        classical_bound: 2.0,
        quantum_bound: sig12(2.0 * SQRT_2),
        violation,
    })
}

fn entropy_value(nats: f64) -> EntropyValue {
    EntropyValue { nats: sig12(nats), bits: sig12(nats_to_bits(nats)) }
}

fn entropy_section(scenario: &Scenario, req: &EntropyRequest, best_chsh: Option<f64>) -> Section<EntropyResult> {
    let report = match information_inequality_report(&scenario.state, &req.subsystems) {
        Ok(r) => r,
        Err(e) => return Section::failed(e.to_string()),
    };
    let separability = match req.subsystems.as_slice() {
        &[d1, d2] => match separability_probe(&scenario.state, [d1, d2]) {
            Ok(p) => Some(SeparabilityReport {
                product_residual: sig12(p.product_residual),
                min_partial_transpose_eigenvalue: sig12(p.min_partial_transpose_eigenvalue),
                found_decomposition: p.found_decomposition(),
                entangled: p.entangled(),
            }),
            Err(e) => return Section::failed(e.to_string()),
        },
        _ => None,
    };
    let max_chsh = match (best_chsh, req.subsystems.as_slice()) {
        (Some(v), _) => Some(v),
        (None, [2, 2]) => maximize_chsh(&scenario.state, SearchMode::XzPlane).ok().map(|f| sig12(f.value)),
        _ => None,
    };
    Section::ok(EntropyResult {
        subsystem_dims: req.subsystems.clone(),
        total: entropy_value(report.total),
        subsystems: report.subsystems.iter().map(|&s| entropy_value(s)).collect(),
        lower_bound_slack: sig12(report.lower_bound_slack),
        subadditivity_slack: sig12(report.subadditivity_slack),
        violation: report.violation,
        separability,
        max_chsh,
    })
}

fn hvm_section(scenario: &Scenario) -> Section<HvmResult> {
    if scenario.hvms.is_empty() {
        return Section::skipped("no hidden-variable models defined");
    }
    let mut models = Vec::new();
    for entry in &scenario.hvms {
        let mut expectations = Vec::new();
        for obs in &entry.expectations {
            let refs: Vec<&str> = obs.iter().map(String::as_str).collect();
            match hvm_expectation(&entry.model, &refs) {
                Ok(v) => expectations.push(Expectation { observables: obs.clone(), value: sig12(v) }),
                Err(e) => return Section::failed(format!("model {:?}: {e}", entry.name)),
            }
        }
        let chsh = match &entry.chsh {
            Some([a1, a2, b1, b2]) => match hvm_chsh(&entry.model, a1, a2, b1, b2) {
                Ok(v) => Some(sig12(v)),
                Err(e) => return Section::failed(format!("model {:?}: {e}", entry.name)),
            },
            None => None,
        };
        models.push(HvmEntry { name: entry.name.clone(), expectations, chsh });
    }
    Section::ok(HvmResult { models })
}

fn oracle_section(model: &RvrModel, rvr: &RvrResult) -> Section<OracleResult> {
    let (vertices, target) = match model.marginal_polytope() {
        Ok(x) => x,
        Err(e) => return Section::skipped(e.to_string()),
    };
    let exact_vertices: Vec<_> = vertices.iter().map(|v| rational_vec(v)).collect();
    let exact = match hull_membership_oracle(&exact_vertices, &rational_vec(&target)) {
        Ok(x) => x,
        Err(e) => return Section::failed(e.to_string()),
    };
    let float_complete = matches!(rvr.completeness, Completeness::Complete { .. });
    let (normal, offset) = match &exact {
        HullMembership::Outside { normal, offset } => {
            let (n, c) = integer_normal(normal, offset);
            (Some(n.iter().map(ToString::to_string).collect()), Some(c.to_string()))
        }
        HullMembership::Inside { .. } => (None, None),
    };
    let result = OracleResult {
        coordinates: model.base_subsets().iter().map(|s| labels(model, s)).collect(),
        float_complete,
        exact_inside: exact.is_inside(),
        agree: float_complete == exact.is_inside(),
        normal,
        offset,
    };
    if result.agree {
        Section::ok(result)
    } else {
        Section { status: Status::Failed, reason: Some("float and exact paths disagree".into()), result: Some(result) }
    }
}
