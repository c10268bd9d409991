//! Declarative, invertible model edits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate, Bounds, FlowNode, MessageFlow, ModelIssue, NodeKind, ProcessModel, SequenceFlow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Position {
    /// The gateway takes over the listed incoming flows of the node.
    Before,
    /// The gateway takes over the listed outgoing flows of the node.
    After,
}

/// A gateway placed next to `node`, taking over `rewired` flows and linked
/// to `node` by the new `connector` flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GatewayInsertion {
    pub gateway: String,
    pub kind: NodeKind,
    pub node: String,
    pub position: Position,
    pub rewired: Vec<String>,
    pub connector: String,
    pub bounds: Bounds,
}

/// A new none end event that `flow` is retargeted to, away from `previous_target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EndEventInsertion {
    pub end_event: String,
    pub flow: String,
    pub previous_target: String,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowSpec {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Edit {
    #[serde(rename_all = "camelCase")]
    ChangeGatewayKind {
        gateway: String,
        from: NodeKind,
        to: NodeKind,
    },
    InsertGateway(GatewayInsertion),
    RemoveGateway(GatewayInsertion),
    AddEndEvent(EndEventInsertion),
    RemoveEndEvent(EndEventInsertion),
    AddSequenceFlow(FlowSpec),
    RemoveSequenceFlow(FlowSpec),
    AddMessageFlow(FlowSpec),
    RemoveMessageFlow(FlowSpec),
}

impl Edit {
    pub fn inverse(&self) -> Edit {
        match self.clone() {
            Edit::ChangeGatewayKind { gateway, from, to } => Edit::ChangeGatewayKind {
                gateway,
                from: to,
                to: from,
            },
            Edit::InsertGateway(g) => Edit::RemoveGateway(g),
            Edit::RemoveGateway(g) => Edit::InsertGateway(g),
            Edit::AddEndEvent(e) => Edit::RemoveEndEvent(e),
            Edit::RemoveEndEvent(e) => Edit::AddEndEvent(e),
            Edit::AddSequenceFlow(f) => Edit::RemoveSequenceFlow(f),
            Edit::RemoveSequenceFlow(f) => Edit::AddSequenceFlow(f),
            Edit::AddMessageFlow(f) => Edit::RemoveMessageFlow(f),
            Edit::RemoveMessageFlow(f) => Edit::AddMessageFlow(f),
        }
    }

    /// Every element ID the edit refers to, existing or new.
    pub fn element_ids(&self) -> Vec<&str> {
        match self {
            Edit::ChangeGatewayKind { gateway, .. } => vec![gateway],
            Edit::InsertGateway(g) | Edit::RemoveGateway(g) => {
                let mut ids = vec![g.gateway.as_str(), g.node.as_str(), g.connector.as_str()];
                ids.extend(g.rewired.iter().map(String::as_str));
                ids
            }
            Edit::AddEndEvent(e) | Edit::RemoveEndEvent(e) => {
                vec![&e.end_event, &e.flow, &e.previous_target]
            }
            Edit::AddSequenceFlow(f)
            | Edit::RemoveSequenceFlow(f)
            | Edit::AddMessageFlow(f)
            | Edit::RemoveMessageFlow(f) => vec![&f.id, &f.source, &f.target],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixError {
    /// The model no longer matches what the edit expects.
    #[error("stale fix: {0}")]
    Stale(String),
    #[error("edited model is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidResult(Vec<ModelIssue>),
}

fn stale(msg: impl Into<String>) -> FixError {
    FixError::Stale(msg.into())
}

/// Applies `edits` in order to a copy of `model`.
///
/// Returns the edited model and the edits that undo it, in application
/// order. On error `model` is untouched.
pub fn apply_edits(model: &ProcessModel, edits: &[Edit]) -> Result<(ProcessModel, Vec<Edit>), FixError> {
    let mut edited = model.clone();
    for edit in edits {
        apply_one(&mut edited, edit)?;
    }
    let issues = validate(&edited);
    if !issues.is_empty() {
        return Err(FixError::InvalidResult(issues));
    }
    let inverse = edits.iter().rev().map(Edit::inverse).collect();
    Ok((edited, inverse))
}

fn process_of_node(model: &ProcessModel, node: &str) -> Result<usize, FixError> {
    model
        .processes
        .iter()
        .position(|p| p.node(node).is_some())
        .ok_or_else(|| stale(format!("element '{node}' does not exist")))
}

fn require_fresh(model: &ProcessModel, id: &str) -> Result<(), FixError> {
    if model.contains_id(id) {
        Err(stale(format!("element '{id}' already exists")))
    } else {
        Ok(())
    }
}

fn apply_one(model: &mut ProcessModel, edit: &Edit) -> Result<(), FixError> {
    match edit {
        Edit::ChangeGatewayKind { gateway, from, to } => {
            let pi = process_of_node(model, gateway)?;
            let node = model.processes[pi]
                .flow_nodes
                .iter_mut()
                .find(|n| n.id == *gateway)
                .expect("located above");
            if node.kind != *from {
                return Err(stale(format!("'{gateway}' is {} rather than {from}", node.kind)));
            }
            node.kind = to.clone();
        }
        Edit::InsertGateway(g) => {
            require_fresh(model, &g.gateway)?;
            require_fresh(model, &g.connector)?;
            let pi = process_of_node(model, &g.node)?;
            let process = &mut model.processes[pi];
            for flow_id in &g.rewired {
                let flow = process
                    .sequence_flows
                    .iter_mut()
                    .find(|f| f.id == *flow_id)
                    .ok_or_else(|| stale(format!("flow '{flow_id}' does not exist")))?;
                let end = match g.position {
                    Position::Before => &mut flow.target,
                    Position::After => &mut flow.source,
                };
                if *end != g.node {
                    return Err(stale(format!("flow '{flow_id}' is not attached to '{}'", g.node)));
                }
                *end = g.gateway.clone();
            }
            let (source, target) = match g.position {
                Position::Before => (&g.gateway, &g.node),
                Position::After => (&g.node, &g.gateway),
            };
            process.sequence_flows.push(SequenceFlow {
                id: g.connector.clone(),
                source: source.clone(),
                target: target.clone(),
            });
            process
                .flow_nodes
                .push(FlowNode::new(g.gateway.clone(), g.kind.clone()));
            process.relink();
            model.diagram.insert(g.gateway.clone(), g.bounds);
        }
        Edit::RemoveGateway(g) => {
            let pi = process_of_node(model, &g.gateway)?;
            let process = &mut model.processes[pi];
            let gateway = process.node(&g.gateway).expect("located above");
            if gateway.kind != g.kind {
                return Err(stale(format!("'{}' is not a {}", g.gateway, g.kind)));
            }
            let attached = gateway.incoming.len() + gateway.outgoing.len();
            if attached != g.rewired.len() + 1 {
                return Err(stale(format!("'{}' has other connections", g.gateway)));
            }
            let connector_ok = process.flow(&g.connector).is_some_and(|f| match g.position {
                Position::Before => f.source == g.gateway && f.target == g.node,
                Position::After => f.source == g.node && f.target == g.gateway,
            });
            if !connector_ok {
                return Err(stale(format!("connector '{}' is missing or moved", g.connector)));
            }
            for flow_id in &g.rewired {
                let flow = process
                    .sequence_flows
                    .iter_mut()
                    .find(|f| f.id == *flow_id)
                    .ok_or_else(|| stale(format!("flow '{flow_id}' does not exist")))?;
                let end = match g.position {
                    Position::Before => &mut flow.target,
                    Position::After => &mut flow.source,
                };
                if *end != g.gateway {
                    return Err(stale(format!("flow '{flow_id}' is not attached to '{}'", g.gateway)));
                }
                *end = g.node.clone();
            }
            process.sequence_flows.retain(|f| f.id != g.connector);
            process.flow_nodes.retain(|n| n.id != g.gateway);
            process.relink();
            model.diagram.remove(&g.gateway);
        }
        Edit::AddEndEvent(e) => {
            require_fresh(model, &e.end_event)?;
            let (pi, _) = flow_location(model, &e.flow)?;
            let process = &mut model.processes[pi];
            let flow = process
                .sequence_flows
                .iter_mut()
                .find(|f| f.id == e.flow)
                .expect("located above");
            if flow.target != e.previous_target {
                return Err(stale(format!(
                    "flow '{}' no longer ends at '{}'",
                    e.flow, e.previous_target
                )));
            }
            flow.target = e.end_event.clone();
            process
                .flow_nodes
                .push(FlowNode::new(e.end_event.clone(), NodeKind::NoneEndEvent));
            process.relink();
            model.diagram.insert(e.end_event.clone(), e.bounds);
        }
        Edit::RemoveEndEvent(e) => {
            let pi = process_of_node(model, &e.end_event)?;
            let process = &mut model.processes[pi];
            let end = process.node(&e.end_event).expect("located above");
            if end.kind != NodeKind::NoneEndEvent || end.incoming != [e.flow.clone()] {
                return Err(stale(format!("'{}' changed since the fix was applied", e.end_event)));
            }
            if process.node(&e.previous_target).is_none() {
                return Err(stale(format!("element '{}' does not exist", e.previous_target)));
            }
            let flow = process
                .sequence_flows
                .iter_mut()
                .find(|f| f.id == e.flow)
                .expect("incoming flow exists");
            flow.target = e.previous_target.clone();
            process.flow_nodes.retain(|n| n.id != e.end_event);
            process.relink();
            model.diagram.remove(&e.end_event);
        }
        Edit::AddSequenceFlow(f) => {
            require_fresh(model, &f.id)?;
            let pi = process_of_node(model, &f.source)?;
            if model.processes[pi].node(&f.target).is_none() {
                return Err(stale(format!("'{}' is not in the process of '{}'", f.target, f.source)));
            }
            let process = &mut model.processes[pi];
            process.sequence_flows.push(SequenceFlow {
                id: f.id.clone(),
                source: f.source.clone(),
                target: f.target.clone(),
            });
            process.relink();
        }
        Edit::RemoveSequenceFlow(f) => {
            let (pi, existing) = flow_location(model, &f.id)?;
            if existing.source != f.source || existing.target != f.target {
                return Err(stale(format!("flow '{}' was reconnected", f.id)));
            }
            let process = &mut model.processes[pi];
            process.sequence_flows.retain(|s| s.id != f.id);
            process.relink();
        }
        Edit::AddMessageFlow(f) => {
            require_fresh(model, &f.id)?;
            process_of_node(model, &f.source)?;
            process_of_node(model, &f.target)?;
            model.message_flows.push(MessageFlow {
                id: f.id.clone(),
                source: f.source.clone(),
                target: f.target.clone(),
            });
        }
        Edit::RemoveMessageFlow(f) => {
            let existing = model
                .message_flow(&f.id)
                .ok_or_else(|| stale(format!("message flow '{}' does not exist", f.id)))?;
            if existing.source != f.source || existing.target != f.target {
                return Err(stale(format!("message flow '{}' was reconnected", f.id)));
            }
            model.message_flows.retain(|m| m.id != f.id);
        }
    }
    Ok(())
}

fn flow_location(model: &ProcessModel, flow: &str) -> Result<(usize, SequenceFlow), FixError> {
    model
        .processes
        .iter()
        .enumerate()
        .find_map(|(i, p)| p.flow(flow).map(|f| (i, f.clone())))
        .ok_or_else(|| stale(format!("flow '{flow}' does not exist")))
}
