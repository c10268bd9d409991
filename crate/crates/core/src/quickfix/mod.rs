//! Quick fixes: invertible model edits proposed for specific violations.
//!
//! [`suggest_fixes`] inspects a [`CheckResult`] together with the model
//! structure and emits [`QuickFix`]es. [`apply_fix`] applies one atomically
//! and returns the fix that undoes it.

mod edit;

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use edit::{apply_edits, Edit, EndEventInsertion, FixError, FlowSpec, GatewayInsertion, Position};

use crate::checker::{CheckResult, Counterexample, Property};
use crate::model::{Bounds, FlowNode, NodeKind, Process, ProcessModel};
use crate::semantics::Net;

/// The repair pattern a fix implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Strategy {
    MergeToParallel,
    InsertParallelMerge,
    SplitToExclusive,
    InsertExclusiveSplit,
    AddEndEvents,
    JoinToExclusive,
    SplitToParallel,
    AddMessageFlow,
    ConnectDeadActivity,
    /// Undoes a previously applied fix.
    Revert,
}

/// The violation instance a fix was derived for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "element", rename_all = "camelCase")]
pub enum Violation {
    UnsafeFlow(String),
    ImproperEndEvent(String),
    /// A stuck element: a join or catching element that can never fire.
    Blocked(String),
    DeadActivity(String),
}

impl Violation {
    pub fn property(&self) -> Property {
        match self {
            Violation::UnsafeFlow(_) => Property::Safeness,
            Violation::ImproperEndEvent(_) => Property::ProperCompletion,
            Violation::Blocked(_) => Property::OptionToComplete,
            Violation::DeadActivity(_) => Property::NoDeadActivities,
        }
    }

    pub fn element(&self) -> &str {
        match self {
            Violation::UnsafeFlow(id)
            | Violation::ImproperEndEvent(id)
            | Violation::Blocked(id)
            | Violation::DeadActivity(id) => id,
        }
    }

    /// Whether `result` still exhibits this violation.
    ///
    /// Option To Complete has no per-element result, so a blocked element
    /// counts as present while the property is violated at all.
    pub fn is_present(&self, result: &CheckResult) -> bool {
        match self {
            Violation::UnsafeFlow(id) => result.unsafe_flow_ids.contains(id),
            Violation::ImproperEndEvent(id) => result.improper_end_event_ids.contains(id),
            Violation::Blocked(_) => result.is_violated(Property::OptionToComplete),
            Violation::DeadActivity(id) => result.dead_activity_ids.contains(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuickFix {
    pub id: String,
    #[serde(rename = "property")]
    pub target_property: Property,
    pub strategy: Strategy,
    pub violation: Violation,
    /// Element the fix is displayed at.
    pub anchor_element: String,
    pub edits: Vec<Edit>,
    pub rationale: String,
}

impl QuickFix {
    pub fn new(
        strategy: Strategy,
        violation: Violation,
        anchor_element: impl Into<String>,
        edits: Vec<Edit>,
        rationale: impl Into<String>,
    ) -> Self {
        let anchor_element = anchor_element.into();
        QuickFix {
            id: fix_id(strategy, &anchor_element, &edits),
            target_property: violation.property(),
            strategy,
            violation,
            anchor_element,
            edits,
            rationale: rationale.into(),
        }
    }
}

/// Deterministic ID over strategy, anchor and edits.
pub fn fix_id(strategy: Strategy, anchor: &str, edits: &[Edit]) -> String {
    let payload = serde_json::to_vec(&(strategy, anchor, edits)).expect("edits serialize to JSON");
    let digest = Sha256::digest(&payload);
    format!("qf-{}", &hex::encode(digest)[..16])
}

/// Applies `fix` to a copy of `model`.
///
/// Returns the edited model and a fix that reverts it in one application.
/// A stale fix leaves `model` untouched and yields an error.
pub fn apply_fix(model: &ProcessModel, fix: &QuickFix) -> Result<(ProcessModel, QuickFix), FixError> {
    let (edited, inverse_edits) = apply_edits(model, &fix.edits)?;
    let inverse = QuickFix::new(
        Strategy::Revert,
        fix.violation.clone(),
        fix.anchor_element.clone(),
        inverse_edits,
        format!("Undo: {}", fix.rationale),
    );
    Ok((edited, inverse))
}

/// Proposes fixes for the violations in `result`.
///
/// Every returned fix references existing elements only and applies to
/// `model` without validation errors. Fixes are deduplicated by ID and
/// returned in a deterministic order.
pub fn suggest_fixes(model: &ProcessModel, result: &CheckResult) -> Vec<QuickFix> {
    let mut suggester = Suggester {
        model,
        result,
        fixes: Vec::new(),
        seen: HashSet::new(),
    };
    if result.is_violated(Property::Safeness) {
        suggester.safeness();
    }
    if result.is_violated(Property::ProperCompletion) {
        suggester.proper_completion();
    }
    if result.is_violated(Property::OptionToComplete) {
        suggester.option_to_complete();
    }
    if result.is_violated(Property::NoDeadActivities) {
        suggester.dead_activities();
    }
    suggester.fixes
}

const GATEWAY_PREFIX: &str = "Gateway_fix";
const FLOW_PREFIX: &str = "Flow_fix";
const END_EVENT_PREFIX: &str = "EndEvent_fix";
const MESSAGE_FLOW_PREFIX: &str = "MessageFlow_fix";

/// Hands out IDs unused in the model, deterministically.
struct FreshIds<'a> {
    model: &'a ProcessModel,
    taken: HashSet<String>,
}

impl<'a> FreshIds<'a> {
    fn new(model: &'a ProcessModel) -> Self {
        FreshIds {
            model,
            taken: HashSet::new(),
        }
    }

    fn next(&mut self, prefix: &str) -> String {
        (1..)
            .map(|n| format!("{prefix}_{n}"))
            .find(|id| !self.model.contains_id(id) && !self.taken.contains(id))
            .inspect(|id| {
                self.taken.insert(id.clone());
            })
            .expect("unbounded range")
    }
}

struct Suggester<'a> {
    model: &'a ProcessModel,
    result: &'a CheckResult,
    fixes: Vec<QuickFix>,
    seen: HashSet<String>,
}

impl<'a> Suggester<'a> {
    fn push(&mut self, fix: QuickFix) {
        if self.seen.contains(&fix.id) || apply_edits(self.model, &fix.edits).is_err() {
            return;
        }
        self.seen.insert(fix.id.clone());
        self.fixes.push(fix);
    }

    fn locate(&self, id: &str) -> Option<(&'a Process, &'a FlowNode)> {
        self.model.find_node(id).map(|r| (r.process, r.node))
    }

    fn center(&self, id: &str) -> (f64, f64) {
        self.model.diagram.get(id).map(Bounds::center).unwrap_or((0.0, 0.0))
    }

    fn counterexample(&self, property: Property) -> Option<&'a Counterexample> {
        self.result.counterexamples.get(&property)
    }

    fn safeness(&mut self) {
        let mut merges = BTreeSet::new();
        for flow_id in &self.result.unsafe_flow_ids {
            let Some((process, flow)) = self.model.find_flow(flow_id) else {
                continue;
            };
            if let Some(merge) = upstream_merge(process, &flow.source) {
                if merges.insert(merge.id.clone()) {
                    let violation = Violation::UnsafeFlow(flow_id.clone());
                    self.merge_fixes(process, merge, violation, Property::Safeness);
                }
            }
        }
    }

    fn proper_completion(&mut self) {
        let mut merges = BTreeSet::new();
        for end_id in &self.result.improper_end_event_ids {
            let Some((process, end)) = self.locate(end_id) else {
                continue;
            };
            let violation = Violation::ImproperEndEvent(end_id.clone());
            if end.incoming.len() > 1 {
                self.add_end_events(process, end, violation);
            } else if let Some(flow) = end.incoming.first().and_then(|f| process.flow(f)) {
                if let Some(merge) = upstream_merge(process, &flow.source) {
                    if merges.insert(merge.id.clone()) {
                        self.merge_fixes(process, merge, violation, Property::ProperCompletion);
                    }
                }
            }
        }
    }

    /// Safeness-style fixes for duplicated tokens leaving `merge`.
    fn merge_fixes(&mut self, process: &'a Process, merge: &'a FlowNode, violation: Violation, source: Property) {
        let mut fresh = FreshIds::new(self.model);
        if merge.kind == NodeKind::ExclusiveGateway {
            self.push(QuickFix::new(
                Strategy::MergeToParallel,
                violation.clone(),
                &merge.id,
                vec![Edit::ChangeGatewayKind {
                    gateway: merge.id.clone(),
                    from: NodeKind::ExclusiveGateway,
                    to: NodeKind::ParallelGateway,
                }],
                format!(
                    "Change the exclusive gateway '{}' to a parallel gateway so concurrent paths are synchronized.",
                    merge.id
                ),
            ));
        } else {
            let edit = self.insertion(&mut fresh, process, merge, NodeKind::ParallelGateway, Position::Before);
            self.push(QuickFix::new(
                Strategy::InsertParallelMerge,
                violation.clone(),
                &merge.id,
                vec![edit],
                format!(
                    "Insert a parallel gateway before '{}' so its incoming paths are synchronized.",
                    merge.id
                ),
            ));
        }

        let trace = self.counterexample(source);
        let Some(split) = find_split(process, trace, &merge.id, is_parallel_split) else {
            return;
        };
        let mut fresh = FreshIds::new(self.model);
        if split.kind == NodeKind::ParallelGateway {
            self.push(QuickFix::new(
                Strategy::SplitToExclusive,
                violation,
                &split.id,
                vec![Edit::ChangeGatewayKind {
                    gateway: split.id.clone(),
                    from: NodeKind::ParallelGateway,
                    to: NodeKind::ExclusiveGateway,
                }],
                format!(
                    "Change the parallel gateway '{}' to an exclusive gateway so only one path reaches '{}'.",
                    split.id, merge.id
                ),
            ));
        } else {
            let edit = self.insertion(&mut fresh, process, split, NodeKind::ExclusiveGateway, Position::After);
            self.push(QuickFix::new(
                Strategy::InsertExclusiveSplit,
                violation,
                &split.id,
                vec![edit],
                format!(
                    "Add an explicit exclusive gateway after '{}' so only one path reaches '{}'.",
                    split.id, merge.id
                ),
            ));
        }
    }

    /// A gateway taking over all incoming (`Before`) or outgoing (`After`) flows of `node`.
    fn insertion(
        &self,
        fresh: &mut FreshIds<'_>,
        process: &Process,
        node: &FlowNode,
        kind: NodeKind,
        position: Position,
    ) -> Edit {
        let rewired = match position {
            Position::Before => node.incoming.clone(),
            Position::After => node.outgoing.clone(),
        };
        let others: Vec<(f64, f64)> = rewired
            .iter()
            .filter_map(|f| process.flow(f))
            .map(|f| match position {
                Position::Before => self.center(&f.source),
                Position::After => self.center(&f.target),
            })
            .collect();
        let (nx, ny) = self.center(&node.id);
        let (ox, oy) = mean(&others).unwrap_or((nx, ny));
        let (w, h) = kind.default_size();
        Edit::InsertGateway(GatewayInsertion {
            gateway: fresh.next(GATEWAY_PREFIX),
            kind,
            node: node.id.clone(),
            position,
            rewired,
            connector: fresh.next(FLOW_PREFIX),
            bounds: Bounds::centered((nx + ox) / 2.0, (ny + oy) / 2.0, w, h),
        })
    }

    fn add_end_events(&mut self, process: &Process, end: &FlowNode, violation: Violation) {
        let mut fresh = FreshIds::new(self.model);
        let (ex, ey) = self.center(&end.id);
        let (w, h) = NodeKind::NoneEndEvent.default_size();
        let edits: Vec<Edit> = end.incoming[1..]
            .iter()
            .enumerate()
            .map(|(i, flow_id)| {
                let source = process.flow(flow_id).map(|f| f.source.as_str());
                let (cx, cy) = match source.and_then(|s| self.model.placed_bounds(s)) {
                    Some(b) => {
                        let (sx, sy) = b.center();
                        ((sx + ex) / 2.0, (sy + ey) / 2.0)
                    }
                    None => (ex, ey + 60.0 * (i + 1) as f64),
                };
                Edit::AddEndEvent(EndEventInsertion {
                    end_event: fresh.next(END_EVENT_PREFIX),
                    flow: flow_id.clone(),
                    previous_target: end.id.clone(),
                    bounds: Bounds::centered(cx, cy, w, h),
                })
            })
            .collect();
        let surplus = edits.len();
        self.push(QuickFix::new(
            Strategy::AddEndEvents,
            violation,
            &end.id,
            edits,
            format!(
                "Add {surplus} end event(s) so each incoming sequence flow of '{}' has its own end event.",
                end.id
            ),
        ));
    }

    fn option_to_complete(&mut self) {
        let Some(trace) = self.counterexample(Property::OptionToComplete) else {
            return;
        };
        let net = Net::new(self.model);
        let state = trace.final_state();
        let mut waiting = BTreeSet::new();
        for snapshot in &state.snapshots {
            for &(flow, _) in &snapshot.tokens {
                let target = net.flow(flow).target;
                waiting.insert(net.node(target).id.clone());
            }
        }
        for id in &waiting {
            let Some((process, node)) = self.locate(id) else {
                continue;
            };
            match node.kind {
                NodeKind::ParallelGateway if node.incoming.len() > 1 => self.blocked_join(process, node, trace),
                NodeKind::IntermediateMessageCatchEvent | NodeKind::ReceiveTask { .. } => {
                    self.missing_message(node, Violation::Blocked(node.id.clone()))
                }
                NodeKind::EventBasedGateway => {
                    for flow in node.outgoing.iter().filter_map(|f| process.flow(f)) {
                        if let Some((_, catcher)) = self.locate(&flow.target) {
                            self.missing_message(catcher, Violation::Blocked(node.id.clone()));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn blocked_join(&mut self, process: &'a Process, join: &'a FlowNode, trace: &Counterexample) {
        let violation = Violation::Blocked(join.id.clone());
        self.push(QuickFix::new(
            Strategy::JoinToExclusive,
            violation.clone(),
            &join.id,
            vec![Edit::ChangeGatewayKind {
                gateway: join.id.clone(),
                from: NodeKind::ParallelGateway,
                to: NodeKind::ExclusiveGateway,
            }],
            format!(
                "Change the parallel gateway '{}' to an exclusive gateway; it waits for paths that are never all taken.",
                join.id
            ),
        ));
        if let Some(split) = find_split(process, Some(trace), &join.id, is_exclusive_split) {
            self.push(QuickFix::new(
                Strategy::SplitToParallel,
                violation,
                &split.id,
                vec![Edit::ChangeGatewayKind {
                    gateway: split.id.clone(),
                    from: NodeKind::ExclusiveGateway,
                    to: NodeKind::ParallelGateway,
                }],
                format!(
                    "Make the exclusive gateway '{}' a parallelization so every path into '{}' is taken.",
                    split.id, join.id
                ),
            ));
        }
    }

    /// Adds a message flow to `catcher` if it has none.
    fn missing_message(&mut self, catcher: &FlowNode, violation: Violation) {
        if self.model.incoming_messages(&catcher.id).next().is_some() {
            return;
        }
        let Some(sender) = self.nearest_sender(&catcher.id) else {
            return;
        };
        let mut fresh = FreshIds::new(self.model);
        self.push(QuickFix::new(
            Strategy::AddMessageFlow,
            violation,
            &catcher.id,
            vec![Edit::AddMessageFlow(FlowSpec {
                id: fresh.next(MESSAGE_FLOW_PREFIX),
                source: sender.clone(),
                target: catcher.id.clone(),
            })],
            format!(
                "Add a message flow from the closest message sender '{sender}' to '{}'.",
                catcher.id
            ),
        ));
    }

    fn dead_activities(&mut self) {
        for dead_id in &self.result.dead_activity_ids {
            let Some((process, node)) = self.locate(dead_id) else {
                continue;
            };
            let instantiating = matches!(node.kind, NodeKind::ReceiveTask { instantiate: true });
            let needs_flow = node.incoming.is_empty() && !instantiating;
            let needs_message = matches!(node.kind, NodeKind::ReceiveTask { .. })
                && self.model.incoming_messages(dead_id).next().is_none();
            if !needs_flow && !needs_message {
                continue;
            }
            let mut fresh = FreshIds::new(self.model);
            let mut edits = Vec::new();
            let mut sources = Vec::new();
            if needs_flow {
                let Some(source) = self.nearest_live_node(process, node) else {
                    continue;
                };
                edits.push(Edit::AddSequenceFlow(FlowSpec {
                    id: fresh.next(FLOW_PREFIX),
                    source: source.clone(),
                    target: dead_id.clone(),
                }));
                sources.push(format!("a sequence flow from '{source}'"));
            }
            if needs_message {
                let Some(sender) = self.nearest_sender(dead_id) else {
                    continue;
                };
                edits.push(Edit::AddMessageFlow(FlowSpec {
                    id: fresh.next(MESSAGE_FLOW_PREFIX),
                    source: sender.clone(),
                    target: dead_id.clone(),
                }));
                sources.push(format!("a message flow from '{sender}'"));
            }
            let strategy = if needs_flow {
                Strategy::ConnectDeadActivity
            } else {
                Strategy::AddMessageFlow
            };
            self.push(QuickFix::new(
                strategy,
                Violation::DeadActivity(dead_id.clone()),
                dead_id,
                edits,
                format!("Add {} so '{dead_id}' can execute.", sources.join(" and ")),
            ));
        }
    }

    /// Closest placed element among `candidates`, ties broken by ID.
    fn nearest<'n>(&self, to: &str, candidates: impl Iterator<Item = &'n str>) -> Option<String> {
        let origin = self.model.placed_bounds(to)?;
        candidates
            .filter_map(|id| self.model.placed_bounds(id).map(|b| (origin.distance_to(b), id)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
            .map(|(_, id)| id.to_string())
    }

    fn nearest_sender(&self, target: &str) -> Option<String> {
        let (process, _) = self.locate(target)?;
        let senders = self
            .model
            .processes
            .iter()
            .filter(|p| p.id != process.id)
            .flat_map(|p| &p.flow_nodes)
            .filter(|n| n.kind.is_message_sender() && !self.result.dead_activity_ids.contains(&n.id))
            .map(|n| n.id.as_str());
        self.nearest(target, senders)
    }

    /// Closest node that can gain an outgoing flow and is reachable from an
    /// instantiation point without passing a dead activity.
    fn nearest_live_node(&self, process: &Process, dead: &FlowNode) -> Option<String> {
        let dead_set = &self.result.dead_activity_ids;
        let roots = process
            .flow_nodes
            .iter()
            .filter(|n| n.kind.is_start_event() || matches!(n.kind, NodeKind::ReceiveTask { instantiate: true }));
        let mut live: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for root in roots {
            if !dead_set.contains(&root.id) && live.insert(&root.id) {
                queue.push_back(&root.id);
            }
        }
        while let Some(id) = queue.pop_front() {
            for next in successors(process, id) {
                if !dead_set.contains(next) && live.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        let candidates = process
            .flow_nodes
            .iter()
            .filter(|n| n.id != dead.id && live.contains(n.id.as_str()))
            .filter(|n| {
                !n.kind.is_end_event()
                    && !matches!(n.kind, NodeKind::EventBasedGateway | NodeKind::LinkThrowEvent { .. })
            })
            .map(|n| n.id.as_str());
        self.nearest(&dead.id, candidates)
    }
}

fn mean(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
    Some((sx / n, sy / n))
}

fn is_merge(node: &FlowNode) -> bool {
    node.incoming.len() > 1 && (node.kind == NodeKind::ExclusiveGateway || node.kind.is_activity())
}

/// Follows single incoming flows upstream from `start` to the nearest merge.
fn upstream_merge<'p>(process: &'p Process, start: &str) -> Option<&'p FlowNode> {
    let mut visited = HashSet::new();
    let mut current = process.node(start)?;
    loop {
        if is_merge(current) {
            return Some(current);
        }
        if current.incoming.len() != 1 || !visited.insert(current.id.as_str()) {
            return None;
        }
        let flow = process.flow(&current.incoming[0])?;
        current = process.node(&flow.source)?;
    }
}

/// Sequence-flow successors, with link throws jumping to their catch.
fn successors<'p>(process: &'p Process, id: &str) -> Vec<&'p str> {
    let Some(node) = process.node(id) else {
        return Vec::new();
    };
    let mut next: Vec<&str> = node
        .outgoing
        .iter()
        .filter_map(|f| process.flow(f))
        .map(|f| f.target.as_str())
        .collect();
    if let NodeKind::LinkThrowEvent { link_name } = &node.kind {
        next.extend(
            process
                .flow_nodes
                .iter()
                .filter(|n| matches!(&n.kind, NodeKind::LinkCatchEvent { link_name: l } if l == link_name))
                .map(|n| n.id.as_str()),
        );
    }
    next
}

fn reaches(process: &Process, from: &str, goal: &str) -> bool {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(id) = queue.pop_front() {
        if id == goal {
            return true;
        }
        for next in successors(process, id) {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}

fn is_parallel_split(node: &FlowNode) -> bool {
    node.kind == NodeKind::ParallelGateway || node.kind.is_activity() || node.kind.is_start_event()
}

fn is_exclusive_split(node: &FlowNode) -> bool {
    node.kind == NodeKind::ExclusiveGateway
}

/// Finds the split whose branches both lead to `target`.
///
/// Walks the counterexample backward first, then falls back to a backward
/// breadth-first search over the process graph.
fn find_split<'p>(
    process: &'p Process,
    trace: Option<&Counterexample>,
    target: &str,
    kind_matches: fn(&FlowNode) -> bool,
) -> Option<&'p FlowNode> {
    let qualifies = |node: &FlowNode| {
        node.id != target
            && node.outgoing.len() > 1
            && kind_matches(node)
            && node
                .outgoing
                .iter()
                .filter_map(|f| process.flow(f))
                .filter(|f| reaches(process, &f.target, target))
                .count()
                > 1
    };
    if let Some(trace) = trace {
        for step in trace.steps.iter().rev() {
            if let Some(node) = process.node(&step.executed_element) {
                if qualifies(node) {
                    return Some(node);
                }
            }
        }
    }
    let mut seen = HashSet::from([target]);
    let mut queue = VecDeque::from([target]);
    while let Some(id) = queue.pop_front() {
        let node = process.node(id)?;
        if qualifies(node) {
            return Some(node);
        }
        for flow in node.incoming.iter().filter_map(|f| process.flow(f)) {
            if seen.insert(&flow.source) {
                queue.push_back(&flow.source);
            }
        }
    }
    None
}
