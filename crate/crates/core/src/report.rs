//! JSON wire format for check results.
//!
//! Field names are camelCase and maps are ordered, so serializing the same
//! report twice yields identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::checker::{CheckResult, Property, Verdict};
use crate::model::ProcessModel;
use crate::quickfix::QuickFix;
use crate::semantics::{Net, State};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub schema_version: u32,
    pub properties: Vec<PropertyReport>,
    pub initial_state: StateView,
    pub counterexamples: BTreeMap<Property, Vec<StepReport>>,
    pub quick_fixes: Vec<QuickFix>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyReport {
    pub name: Property,
    pub fulfilled: bool,
    pub problematic_elements: Vec<String>,
}

/// A full state with IDs in place of indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateView {
    pub snapshots: Vec<SnapshotView>,
    pub messages: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotView {
    pub process: String,
    pub tokens: BTreeMap<String, u32>,
    pub end_events: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepReport {
    pub executed_element: String,
    pub state_delta: StateDelta,
}

/// Signed changes summed over all snapshots; zero entries are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateDelta {
    pub tokens: BTreeMap<String, i64>,
    pub messages: BTreeMap<String, i64>,
    pub end_events: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub elapsed_ms: f64,
}

/// Per-element totals of a state, the quantity a delta describes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Totals {
    pub tokens: BTreeMap<String, i64>,
    pub messages: BTreeMap<String, i64>,
    pub end_events: BTreeMap<String, i64>,
}

impl Totals {
    pub fn of(view: &StateView) -> Totals {
        let mut totals = Totals::default();
        for snapshot in &view.snapshots {
            for (flow, &c) in &snapshot.tokens {
                *totals.tokens.entry(flow.clone()).or_default() += i64::from(c);
            }
            for (end, &c) in &snapshot.end_events {
                *totals.end_events.entry(end.clone()).or_default() += i64::from(c);
            }
        }
        for (m, &c) in &view.messages {
            totals.messages.insert(m.clone(), i64::from(c));
        }
        totals
    }

    /// Adds `delta`, dropping entries that reach zero.
    pub fn apply(&mut self, delta: &StateDelta) {
        fn add(target: &mut BTreeMap<String, i64>, changes: &BTreeMap<String, i64>) {
            for (id, change) in changes {
                let entry = target.entry(id.clone()).or_default();
                *entry += change;
                if *entry == 0 {
                    target.remove(id);
                }
            }
        }
        add(&mut self.tokens, &delta.tokens);
        add(&mut self.messages, &delta.messages);
        add(&mut self.end_events, &delta.end_events);
    }
}

fn diff(before: &BTreeMap<String, i64>, after: &BTreeMap<String, i64>) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for id in before.keys().chain(after.keys()) {
        let change = after.get(id).copied().unwrap_or(0) - before.get(id).copied().unwrap_or(0);
        if change != 0 {
            out.insert(id.clone(), change);
        }
    }
    out
}

impl StateDelta {
    pub fn between(before: &StateView, after: &StateView) -> StateDelta {
        let (b, a) = (Totals::of(before), Totals::of(after));
        StateDelta {
            tokens: diff(&b.tokens, &a.tokens),
            messages: diff(&b.messages, &a.messages),
            end_events: diff(&b.end_events, &a.end_events),
        }
    }
}

pub fn state_view(net: &Net, state: &State) -> StateView {
    StateView {
        snapshots: state
            .snapshots
            .iter()
            .map(|s| SnapshotView {
                process: net.processes[s.process as usize].id.clone(),
                tokens: s.tokens.iter().map(|&(f, c)| (net.flow(f).id.clone(), c)).collect(),
                end_events: s.end_events.iter().map(|&(n, c)| (net.node(n).id.clone(), c)).collect(),
            })
            .collect(),
        messages: state
            .messages
            .iter()
            .map(|&(m, c)| (net.messages[m as usize].id.clone(), c))
            .collect(),
    }
}

impl CheckReport {
    pub fn new(model: &ProcessModel, result: &CheckResult, quick_fixes: Vec<QuickFix>) -> CheckReport {
        let net = Net::new(model);
        let properties = result
            .verdicts
            .iter()
            .map(|(&name, &verdict)| {
                let elements = match name {
                    Property::Safeness => &result.unsafe_flow_ids,
                    Property::ProperCompletion => &result.improper_end_event_ids,
                    Property::NoDeadActivities => &result.dead_activity_ids,
                    Property::OptionToComplete => &Default::default(),
                };
                PropertyReport {
                    name,
                    fulfilled: verdict == Verdict::Fulfilled,
                    problematic_elements: elements.iter().cloned().collect(),
                }
            })
            .collect();
        let counterexamples = result
            .counterexamples
            .iter()
            .map(|(&property, trace)| {
                let mut previous = state_view(&net, &trace.initial);
                let steps = trace
                    .steps
                    .iter()
                    .map(|step| {
                        let current = state_view(&net, &step.state);
                        let delta = StateDelta::between(&previous, &current);
                        previous = current;
                        StepReport {
                            executed_element: step.executed_element.clone(),
                            state_delta: delta,
                        }
                    })
                    .collect();
                (property, steps)
            })
            .collect();
        CheckReport {
            schema_version: SCHEMA_VERSION,
            properties,
            initial_state: state_view(&net, &net.initial_state()),
            counterexamples,
            quick_fixes,
            stats: Stats {
                states: result.state_count,
                transitions: result.transition_count,
                elapsed_ms: result.elapsed.as_secs_f64() * 1000.0,
            },
        }
    }

    pub fn property(&self, property: Property) -> Option<&PropertyReport> {
        self.properties.iter().find(|p| p.name == property)
    }

    pub fn all_fulfilled(&self) -> bool {
        self.properties.iter().all(|p| p.fulfilled)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            let status = if p.fulfilled { "fulfilled" } else { "VIOLATED" };
            let _ = write!(out, "{:<18} {status}", p.name.name());
            if !p.problematic_elements.is_empty() {
                let _ = write!(out, "  [{}]", p.problematic_elements.join(", "));
            }
            out.push('\n');
        }
        for (property, steps) in &self.counterexamples {
            let log: Vec<&str> = steps.iter().map(|s| s.executed_element.as_str()).collect();
            let _ = writeln!(out, "counterexample {property}: [{}]", log.join(", "));
        }
        for fix in &self.quick_fixes {
            let _ = writeln!(
                out,
                "fix {} ({}) at {}: {}",
                fix.id, fix.target_property, fix.anchor_element, fix.rationale
            );
        }
        let _ = writeln!(
            out,
            "{} states, {} transitions, {:.3} ms",
            self.stats.states, self.stats.transitions, self.stats.elapsed_ms
        );
        out
    }
}
