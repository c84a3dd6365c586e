//! Scenario ingestion, analysis orchestration and report emission for the
//! `rvrcheck` command-line tool.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::{emit, Format, Report};
pub use run::{run, Mode, Overrides};
pub use scenario::{parse_scenario, Scenario, ScenarioError};

/// Exit status: 0 all satisfied, 1 violations found, 2 input error or an
/// analysis that could not run.
pub fn exit_code(report: &Report) -> i32 {
    if report.has_failures() {
        2
    } else if report.has_violations() {
        1
    } else {
        0
    }
}
