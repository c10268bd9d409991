//! The property suite, shared by the focused tests and the acceptance run.
//!
//! Each check returns a short summary on success and the first failure
//! otherwise.

#![allow(dead_code)]

use std::collections::HashSet;

use bpmn_soundness::checker::{explore, explore_with, Counterexample, ExplorationConfig, Property, Verdict};
use bpmn_soundness::model::validate;
use bpmn_soundness::quickfix::{apply_fix, suggest_fixes};
use bpmn_soundness::report::state_view;
use bpmn_soundness::{check, parse_bpmn, serialize_bpmn, Net, State};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::oracle::{self, OState};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub const ORDER_MODELS: [&str; 10] = [
    "mismatched_gateways",
    "implicit_merge",
    "implicit_split",
    "message_collaboration",
    "event_based_choice",
    "terminate_end",
    "rework_loop",
    "parallel_3_1",
    "parallel_5_1",
    "blocks_6",
];
pub const ORDERINGS: u64 = 50;
pub const ORACLE_LIMIT: usize = 1_000;

/// Models the quick-fix check runs on: one per repair pattern.
pub const FIX_PATTERNS: [&str; 8] = [
    "mismatched_gateways",
    "implicit_merge",
    "implicit_split",
    "end_event_two_incoming",
    "exclusive_split_parallel_join",
    "missing_message_flow",
    "disconnected_task",
    "unreachable_receive",
];

/// (a) The reachable state set does not depend on successor order.
pub fn order_independence() -> Outcome {
    let corpus = super::corpus();
    let mut reordered = 0;
    for name in ORDER_MODELS {
        let model = &corpus
            .iter()
            .find(|(n, _)| n == name)
            .ok_or(format!("missing model {name}"))?
            .1;
        let net = Net::new(model);
        let config = ExplorationConfig::default();
        let (baseline, record) = explore(&net, &config).map_err(|e| e.to_string())?;
        let expected: HashSet<State> = record.states().cloned().collect();
        let order: Vec<State> = record.states().cloned().collect();
        for seed in 0..ORDERINGS {
            let mut rng = StdRng::seed_from_u64(seed);
            let (result, shuffled) =
                explore_with(&net, &config, |succ| succ.shuffle(&mut rng)).map_err(|e| e.to_string())?;
            let reached: HashSet<State> = shuffled.states().cloned().collect();
            ensure!(reached == expected, "{name}, seed {seed}: reachable sets differ");
            ensure!(
                result.verdicts == baseline.verdicts,
                "{name}, seed {seed}: verdicts differ"
            );
            ensure!(
                result.unsafe_flow_ids == baseline.unsafe_flow_ids
                    && result.improper_end_event_ids == baseline.improper_end_event_ids
                    && result.dead_activity_ids == baseline.dead_activity_ids,
                "{name}, seed {seed}: element sets differ"
            );
            if shuffled.states().ne(order.iter()) {
                reordered += 1;
            }
        }
    }
    ensure!(reordered > 0, "no ordering changed the exploration order");
    Ok(format!(
        "{} models x {ORDERINGS} orderings, {reordered} runs visited states in a different order",
        ORDER_MODELS.len()
    ))
}

fn violates(net: &Net, property: Property, state: &State) -> bool {
    match property {
        Property::Safeness => !state.unsafe_flow_indices().is_empty(),
        Property::ProperCompletion => state.improper_end_events().next().is_some(),
        Property::OptionToComplete => state.has_active_snapshot() && net.successors(state).is_empty(),
        Property::NoDeadActivities => false,
    }
}

/// Re-executes `trace` step by step; returns the state it ends in.
pub fn replay(net: &Net, trace: &Counterexample) -> Result<State, String> {
    ensure!(
        trace.initial == net.initial_state(),
        "trace does not start in the initial state"
    );
    let mut current = trace.initial.clone();
    for (i, step) in trace.steps.iter().enumerate() {
        let fired = net
            .successors(&current)
            .into_iter()
            .any(|t| net.node(t.executed).id == step.executed_element && t.successor == step.state);
        ensure!(fired, "step {i} ({}) is not enabled", step.executed_element);
        current = step.state.clone();
    }
    Ok(current)
}

/// (b) Every counterexample replays to a state violating its property.
pub fn counterexample_replay() -> Outcome {
    let mut traces = 0;
    for (name, model) in super::corpus() {
        let net = Net::new(&model);
        let (result, _) = explore(&net, &ExplorationConfig::default()).map_err(|e| e.to_string())?;
        for (&property, trace) in &result.counterexamples {
            let last = replay(&net, trace).map_err(|e| format!("{name} {property}: {e}"))?;
            ensure!(&last == trace.final_state(), "{name} {property}: replay ends elsewhere");
            ensure!(
                violates(&net, property, &last),
                "{name} {property}: final state is not violating"
            );
            traces += 1;
        }
    }
    ensure!(traces > 0, "no counterexamples in the corpus");
    Ok(format!("{traces} counterexamples replayed"))
}

/// (c) Suggested fixes apply, revert exactly and remove their violation.
pub fn quick_fixes() -> Outcome {
    let corpus = super::corpus();
    let mut fixes_checked = 0;
    for name in FIX_PATTERNS {
        let model = &corpus
            .iter()
            .find(|(n, _)| n == name)
            .ok_or(format!("missing model {name}"))?
            .1;
        let result = check(model, &ExplorationConfig::default()).map_err(|e| e.to_string())?;
        let fixes = suggest_fixes(model, &result);
        ensure!(!fixes.is_empty(), "{name}: no fix suggested");
        for fix in fixes {
            let (fixed, inverse) = apply_fix(model, &fix).map_err(|e| format!("{name} {}: {e}", fix.id))?;
            ensure!(
                validate(&fixed).is_empty(),
                "{name} {}: edited model is invalid",
                fix.id
            );
            let recheck = check(&fixed, &ExplorationConfig::default()).map_err(|e| e.to_string())?;
            ensure!(
                !fix.violation.is_present(&recheck),
                "{name} {}: {:?} survives",
                fix.id,
                fix.violation
            );
            let (restored, _) = apply_fix(&fixed, &inverse).map_err(|e| format!("{name} undo: {e}"))?;
            ensure!(restored.structurally_eq(model), "{name} {}: undo is not exact", fix.id);
            fixes_checked += 1;
        }
    }
    // Sound models get no fixes at all.
    for (name, model) in &corpus {
        let result = check(model, &ExplorationConfig::default()).map_err(|e| e.to_string())?;
        if result.all_fulfilled() {
            ensure!(
                suggest_fixes(model, &result).is_empty(),
                "{name}: fixes for a sound model"
            );
        }
    }
    Ok(format!("{fixes_checked} fixes on {} patterns", FIX_PATTERNS.len()))
}

/// (d) Serializing and re-parsing yields a structurally equal model.
pub fn round_trip() -> Outcome {
    let corpus = super::corpus();
    for (name, model) in &corpus {
        let xml = serialize_bpmn(model);
        let back = parse_bpmn(&xml).map_err(|e| format!("{name}: {e:?}"))?;
        ensure!(back.structurally_eq(model), "{name}: not structurally equal");
        ensure!(serialize_bpmn(&back) == xml, "{name}: serialization not stable");
    }
    Ok(format!("{} models", corpus.len()))
}

fn violated(verdict: Option<Verdict>) -> bool {
    verdict == Some(Verdict::Violated)
}

/// (e) The checker agrees with the brute-force oracle on small models.
pub fn oracle_equivalence() -> Outcome {
    let mut compared = 0;
    for (name, model) in super::corpus() {
        let Some(graph) = oracle::explore(&model, ORACLE_LIMIT) else {
            continue;
        };
        compared += 1;
        let expected = oracle::verdicts(&model, &graph);
        let net = Net::new(&model);
        let (result, record) = explore(&net, &ExplorationConfig::default()).map_err(|e| e.to_string())?;

        ensure!(result.state_count == graph.states.len(), "{name}: state count");
        let reached: HashSet<OState> = record
            .states()
            .map(|s| OState::from_view(&state_view(&net, s)))
            .collect();
        let oracle_states: HashSet<OState> = graph.states.iter().cloned().collect();
        ensure!(reached == oracle_states, "{name}: reachable states differ");
        ensure!(result.unsafe_flow_ids == expected.unsafe_flows, "{name}: unsafe flows");
        ensure!(
            result.improper_end_event_ids == expected.improper_ends,
            "{name}: end events"
        );
        ensure!(
            result.dead_activity_ids == expected.dead_activities,
            "{name}: dead activities"
        );
        ensure!(
            violated(result.verdict(Property::Safeness)) == !expected.unsafe_flows.is_empty()
                && violated(result.verdict(Property::ProperCompletion)) == !expected.improper_ends.is_empty()
                && violated(result.verdict(Property::OptionToComplete)) == expected.stuck
                && violated(result.verdict(Property::NoDeadActivities)) == !expected.dead_activities.is_empty(),
            "{name}: verdicts"
        );

        let config = ExplorationConfig {
            detect_livelocks: true,
            ..Default::default()
        };
        let (strict, _) = explore(&net, &config).map_err(|e| e.to_string())?;
        ensure!(
            violated(strict.verdict(Property::OptionToComplete)) == expected.livelock,
            "{name}: livelock verdict"
        );
    }
    ensure!(compared > 0, "no model within the oracle limit");
    Ok(format!("{compared} models with at most {ORACLE_LIMIT} states"))
}
