//! Command-line and HTTP front-ends for the checker.
//!
//! Both front-ends run the same pipeline: parse, check, optionally suggest
//! fixes, and render a [`CheckReport`].

pub mod service;

use std::collections::BTreeSet;

use bpmn_soundness::checker::{CheckError, DEFAULT_MAX_STATES};
use bpmn_soundness::quickfix::{apply_edits, Edit, FixError};
use bpmn_soundness::{
    check, parse_bpmn, serialize_bpmn, suggest_fixes, CheckReport, ExplorationConfig, ModelIssue, Property,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Empty means all four properties.
    pub properties: BTreeSet<Property>,
    pub max_states: usize,
    pub quick_fixes: bool,
    pub detect_livelocks: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            properties: BTreeSet::new(),
            max_states: DEFAULT_MAX_STATES,
            quick_fixes: false,
            detect_livelocks: false,
        }
    }
}

impl CheckOptions {
    fn config(&self) -> ExplorationConfig {
        let mut config = if self.properties.is_empty() {
            ExplorationConfig::default()
        } else {
            ExplorationConfig::with_properties(self.properties.iter().copied())
        };
        config.max_states = self.max_states;
        config.detect_livelocks = self.detect_livelocks;
        config
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("model rejected with {} issue(s)", .0.len())]
    Invalid(Vec<ModelIssue>),
    #[error(transparent)]
    Check(#[from] CheckError),
}

pub fn check_xml(xml: &str, options: &CheckOptions) -> Result<CheckReport, PipelineError> {
    let model = parse_bpmn(xml).map_err(PipelineError::Invalid)?;
    let result = check(&model, &options.config())?;
    let fixes = if options.quick_fixes {
        suggest_fixes(&model, &result)
    } else {
        Vec::new()
    };
    Ok(CheckReport::new(&model, &result, fixes))
}

/// Parses a comma-separated property list; blank input selects all.
pub fn parse_properties(list: &str) -> Result<BTreeSet<Property>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Property>().map_err(|e| e.to_string()))
        .collect()
}

/// Which edits to apply: a suggested fix by ID or an explicit edit list.
#[derive(Debug, Clone)]
pub enum FixSelector {
    Id(String),
    Edits(Vec<Edit>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixOutcome {
    pub bpmn_xml: String,
    pub inverse_edits: Vec<Edit>,
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("model rejected with {} issue(s)", .0.len())]
    Invalid(Vec<ModelIssue>),
    #[error("no fix with ID {0} is suggested for this model")]
    UnknownFix(String),
    #[error(transparent)]
    Fix(#[from] FixError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Applies a fix to `xml`. A fix ID is resolved by re-checking the model
/// and matching against the fixes suggested for it.
pub fn apply_to_xml(xml: &str, selector: &FixSelector, max_states: usize) -> Result<FixOutcome, ApplyError> {
    let model = parse_bpmn(xml).map_err(ApplyError::Invalid)?;
    let edits = match selector {
        FixSelector::Edits(edits) => edits.clone(),
        FixSelector::Id(id) => {
            let config = ExplorationConfig {
                max_states,
                ..Default::default()
            };
            let result = check(&model, &config)?;
            suggest_fixes(&model, &result)
                .into_iter()
                .find(|f| &f.id == id)
                .ok_or_else(|| ApplyError::UnknownFix(id.clone()))?
                .edits
        }
    };
    let (edited, inverse_edits) = apply_edits(&model, &edits)?;
    Ok(FixOutcome {
        bpmn_xml: serialize_bpmn(&edited),
        inverse_edits,
    })
}
