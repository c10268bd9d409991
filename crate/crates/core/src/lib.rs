//! Soundness and safeness checking for BPMN process models.
//!
//! The crate parses BPMN 2.0 XML into a [`model::ProcessModel`], explores
//! its state space under a token-game semantics ([`semantics`]), and checks
//! Safeness, Option To Complete, Proper Completion and No Dead Activities
//! ([`checker`]). Violations come with shortest counterexample traces and,
//! where a known repair pattern applies, revertible quick fixes
//! ([`quickfix`]). [`genbench`] generates the synthetic benchmark models
//! and [`report`] defines the JSON wire format shared by the CLI and the
//! HTTP service.

pub mod checker;
pub mod genbench;
pub mod model;
pub mod quickfix;
pub mod report;
pub mod semantics;

pub use checker::{
    check, explore, reconstruct_trace, unsafe_flows, CheckError, CheckResult, Counterexample, ExplorationConfig,
    Property, Verdict,
};
pub use model::{parse_bpmn, serialize_bpmn, ModelIssue, ProcessModel};
pub use quickfix::{apply_fix, suggest_fixes, QuickFix};
pub use report::CheckReport;
pub use semantics::{Net, State};
