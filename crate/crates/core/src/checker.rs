//! Breadth-first state-space exploration with property checking.
//!
//! Safeness, Proper Completion and stuck states (Option To Complete) are
//! checked on the fly for every discovered state; No Dead Activities is
//! decided once the whole space has been explored. Each state remembers the
//! transition that discovered it, which gives shortest counterexamples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProcessModel;
use crate::semantics::{Net, NodeIdx, State, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Property {
    Safeness,
    OptionToComplete,
    ProperCompletion,
    NoDeadActivities,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Safeness,
        Property::OptionToComplete,
        Property::ProperCompletion,
        Property::NoDeadActivities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Safeness => "Safeness",
            Property::OptionToComplete => "OptionToComplete",
            Property::ProperCompletion => "ProperCompletion",
            Property::NoDeadActivities => "NoDeadActivities",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown property '{0}'")]
pub struct UnknownProperty(pub String);

impl FromStr for Property {
    type Err = UnknownProperty;

    /// Accepts the wire names as well as kebab/snake case spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "safeness" => Ok(Property::Safeness),
            "optiontocomplete" => Ok(Property::OptionToComplete),
            "propercompletion" => Ok(Property::ProperCompletion),
            "nodeadactivities" => Ok(Property::NoDeadActivities),
            _ => Err(UnknownProperty(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Fulfilled,
    Violated,
}

pub const DEFAULT_MAX_STATES: usize = 1 << 21;

#[derive(Debug, Clone)]
pub struct ExplorationConfig {
    /// Upper bound on distinct states; must be at least one.
    pub max_states: usize,
    pub properties: BTreeSet<Property>,
    /// Also report states from which no completed state is reachable as
    /// Option To Complete violations, not only stuck states.
    pub detect_livelocks: bool,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            max_states: DEFAULT_MAX_STATES,
            properties: Property::ALL.into_iter().collect(),
            detect_livelocks: false,
        }
    }
}

impl ExplorationConfig {
    pub fn with_properties(properties: impl IntoIterator<Item = Property>) -> Self {
        ExplorationConfig {
            properties: properties.into_iter().collect(),
            ..Default::default()
        }
    }
}

/// One step of a counterexample: the executed element and the state it led to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub executed_element: String,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub initial: State,
    pub steps: Vec<TraceStep>,
}

impl Counterexample {
    /// The violating state the trace ends in.
    pub fn final_state(&self) -> &State {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    /// Executed element IDs, in order.
    pub fn executed(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.executed_element.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub verdicts: BTreeMap<Property, Verdict>,
    pub unsafe_flow_ids: BTreeSet<String>,
    pub improper_end_event_ids: BTreeSet<String>,
    pub dead_activity_ids: BTreeSet<String>,
    /// One per violated property except No Dead Activities.
    pub counterexamples: BTreeMap<Property, Counterexample>,
    pub state_count: usize,
    pub transition_count: usize,
    pub elapsed: Duration,
}

impl CheckResult {
    pub fn verdict(&self, property: Property) -> Option<Verdict> {
        self.verdicts.get(&property).copied()
    }

    pub fn is_violated(&self, property: Property) -> bool {
        self.verdict(property) == Some(Verdict::Violated)
    }

    pub fn all_fulfilled(&self) -> bool {
        self.verdicts.values().all(|v| *v == Verdict::Fulfilled)
    }

    pub fn violated(&self) -> impl Iterator<Item = Property> + '_ {
        self.verdicts
            .iter()
            .filter(|(_, v)| **v == Verdict::Violated)
            .map(|(p, _)| *p)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    /// Exploration stopped early. Properties in `violated` are definitely
    /// violated; all others are undecided.
    #[error("state space exceeds the limit of {limit} states (explored {explored}); verdicts are indeterminate")]
    StateSpaceLimitExceeded {
        limit: usize,
        explored: usize,
        violated: BTreeSet<Property>,
    },
    #[error("max_states must be at least 1")]
    InvalidConfig,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("state was not reached during exploration")]
pub struct UnknownState;

/// Everything discovered during one exploration; the data source for
/// counterexample reconstruction.
#[derive(Debug, Clone)]
pub struct ExplorationRecord {
    states: IndexSet<State>,
    /// For each state (same index), the predecessor index and the element
    /// whose execution discovered it. `None` for the initial state.
    parents: Vec<Option<(u32, NodeIdx)>>,
}

impl ExplorationRecord {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.states.iter()
    }

    pub fn contains(&self, state: &State) -> bool {
        self.states.contains(state)
    }

    /// BFS depth of a reached state.
    pub fn depth(&self, state: &State) -> Option<usize> {
        let mut idx = self.states.get_index_of(state)?;
        let mut depth = 0;
        while let Some((parent, _)) = self.parents[idx] {
            idx = parent as usize;
            depth += 1;
        }
        Some(depth)
    }
}

/// Rebuilds the shortest (BFS-layer) trace from the initial state to
/// `violating`.
pub fn reconstruct_trace(
    net: &Net,
    record: &ExplorationRecord,
    violating: &State,
) -> Result<Counterexample, UnknownState> {
    let idx = record.states.get_index_of(violating).ok_or(UnknownState)?;
    Ok(trace_to(net, record, idx))
}

fn trace_to(net: &Net, record: &ExplorationRecord, mut idx: usize) -> Counterexample {
    let mut steps = Vec::new();
    while let Some((parent, element)) = record.parents[idx] {
        steps.push(TraceStep {
            executed_element: net.node(element).id.clone(),
            state: record.states[idx].clone(),
        });
        idx = parent as usize;
    }
    steps.reverse();
    Counterexample {
        initial: record.states[0].clone(),
        steps,
    }
}

/// Checks `model` for the configured properties.
pub fn check(model: &ProcessModel, config: &ExplorationConfig) -> Result<CheckResult, CheckError> {
    let start = Instant::now();
    let net = Net::new(model);
    let (mut result, _) = explore(&net, config)?;
    result.elapsed = start.elapsed();
    Ok(result)
}

/// Explores the state space of `net` and keeps the exploration record.
pub fn explore(net: &Net, config: &ExplorationConfig) -> Result<(CheckResult, ExplorationRecord), CheckError> {
    explore_with(net, config, |_| {})
}

/// Like [`explore`], but lets the caller permute each state's successor
/// list before it is processed. The reachable state set does not depend on
/// that order; state numbering and chosen traces may.
pub fn explore_with(
    net: &Net,
    config: &ExplorationConfig,
    mut reorder: impl FnMut(&mut Vec<Transition>),
) -> Result<(CheckResult, ExplorationRecord), CheckError> {
    if config.max_states == 0 {
        return Err(CheckError::InvalidConfig);
    }
    let start = Instant::now();
    let mut record = ExplorationRecord {
        states: IndexSet::new(),
        parents: Vec::new(),
    };
    record.states.insert(net.initial_state());
    record.parents.push(None);

    let mut executed = vec![false; net.nodes.len()];
    let mut unsafe_flows = BTreeSet::new();
    let mut improper_ends = BTreeSet::new();
    let mut first_unsafe: Option<usize> = None;
    let mut first_improper: Option<usize> = None;
    let mut first_stuck: Option<usize> = None;
    let mut transition_count = 0usize;
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut buffer: Vec<Transition> = Vec::new();

    let mut cursor = 0;
    while cursor < record.states.len() {
        let state = &record.states[cursor];

        let flows = state.unsafe_flow_indices();
        if !flows.is_empty() {
            unsafe_flows.extend(flows);
            first_unsafe.get_or_insert(cursor);
        }
        let mut improper = false;
        for end in state.improper_end_events() {
            improper_ends.insert(end);
            improper = true;
        }
        if improper {
            first_improper.get_or_insert(cursor);
        }

        buffer.clear();
        net.successors_into(state, &mut buffer);
        if buffer.is_empty() && state.has_active_snapshot() {
            first_stuck.get_or_insert(cursor);
        }
        reorder(&mut buffer);

        if config.detect_livelocks {
            edges.push(Vec::with_capacity(buffer.len()));
        }
        transition_count += buffer.len();
        for transition in buffer.drain(..) {
            executed[transition.executed as usize] = true;
            let (idx, inserted) = record.states.insert_full(transition.successor);
            if inserted {
                if record.states.len() > config.max_states {
                    let mut violated = BTreeSet::new();
                    if first_unsafe.is_some() {
                        violated.insert(Property::Safeness);
                    }
                    if first_improper.is_some() {
                        violated.insert(Property::ProperCompletion);
                    }
                    if first_stuck.is_some() {
                        violated.insert(Property::OptionToComplete);
                    }
                    violated.retain(|p| config.properties.contains(p));
                    return Err(CheckError::StateSpaceLimitExceeded {
                        limit: config.max_states,
                        explored: config.max_states,
                        violated,
                    });
                }
                record.parents.push(Some((cursor as u32, transition.executed)));
            }
            if config.detect_livelocks {
                edges[cursor].push(idx as u32);
            }
        }
        cursor += 1;
    }

    let mut otc_anchor = first_stuck;
    if config.detect_livelocks && otc_anchor.is_none() {
        otc_anchor = first_livelocked(&record, &edges);
    }

    let mut verdicts = BTreeMap::new();
    let mut counterexamples = BTreeMap::new();
    let mut decide = |property: Property, anchor: Option<usize>| {
        if !config.properties.contains(&property) {
            return;
        }
        match anchor {
            Some(idx) => {
                verdicts.insert(property, Verdict::Violated);
                counterexamples.insert(property, trace_to(net, &record, idx));
            }
            None => {
                verdicts.insert(property, Verdict::Fulfilled);
            }
        }
    };
    decide(Property::Safeness, first_unsafe);
    decide(Property::ProperCompletion, first_improper);
    decide(Property::OptionToComplete, otc_anchor);

    let mut dead_activity_ids = BTreeSet::new();
    if config.properties.contains(&Property::NoDeadActivities) {
        dead_activity_ids = net
            .nodes
            .iter()
            .zip(&executed)
            .filter(|(node, executed)| node.kind.is_activity() && !**executed)
            .map(|(node, _)| node.id.clone())
            .collect();
        let verdict = if dead_activity_ids.is_empty() {
            Verdict::Fulfilled
        } else {
            Verdict::Violated
        };
        verdicts.insert(Property::NoDeadActivities, verdict);
    }

    let unsafe_flow_ids = if config.properties.contains(&Property::Safeness) {
        unsafe_flows.into_iter().map(|f| net.flow(f).id.clone()).collect()
    } else {
        BTreeSet::new()
    };
    let improper_end_event_ids = if config.properties.contains(&Property::ProperCompletion) {
        improper_ends.into_iter().map(|n| net.node(n).id.clone()).collect()
    } else {
        BTreeSet::new()
    };

    let result = CheckResult {
        verdicts,
        unsafe_flow_ids,
        improper_end_event_ids,
        dead_activity_ids,
        counterexamples,
        state_count: record.states.len(),
        transition_count,
        elapsed: start.elapsed(),
    };
    Ok((result, record))
}

/// First state (in discovery order) from which no state without active
/// snapshots is reachable.
fn first_livelocked(record: &ExplorationRecord, edges: &[Vec<u32>]) -> Option<usize> {
    let n = record.states.len();
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (from, targets) in edges.iter().enumerate() {
        for &to in targets {
            reverse[to as usize].push(from as u32);
        }
    }
    let mut can_complete = vec![false; n];
    let mut stack: Vec<usize> = record
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.has_active_snapshot())
        .map(|(i, _)| i)
        .collect();
    for &i in &stack {
        can_complete[i] = true;
    }
    while let Some(i) = stack.pop() {
        for &p in &reverse[i] {
            if !can_complete[p as usize] {
                can_complete[p as usize] = true;
                stack.push(p as usize);
            }
        }
    }
    can_complete.iter().position(|ok| !ok)
}

/// IDs of sequence flows holding at least two tokens in one snapshot.
pub fn unsafe_flows(net: &Net, state: &State) -> BTreeSet<String> {
    state
        .unsafe_flow_indices()
        .into_iter()
        .map(|f| net.flow(f).id.clone())
        .collect()
}
