//! In-memory BPMN process models.
//!
//! A [`ProcessModel`] holds the control-flow graph of every process in a
//! BPMN document together with the message flows between them and the
//! diagram bounds of each flow node. Models are plain values: once built
//! (by the parser, a generator, or by applying a quick fix) they are never
//! mutated in place by the checker.

mod parse;
mod validate;
mod write;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_bpmn, parse_bpmn_bytes};
pub use validate::validate;
pub use write::serialize_bpmn;

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
pub const BPMNDI_NS: &str = "http://www.omg.org/spec/BPMN/20100524/DI";
pub const DC_NS: &str = "http://www.omg.org/spec/DD/20100524/DC";
pub const DI_NS: &str = "http://www.omg.org/spec/DD/20100524/DI";

/// Control-flow relevant kind of a flow node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum NodeKind {
    NoneStartEvent,
    MessageStartEvent,
    NoneEndEvent,
    MessageEndEvent,
    TerminateEndEvent,
    Task,
    SendTask,
    ReceiveTask { instantiate: bool },
    ExclusiveGateway,
    ParallelGateway,
    EventBasedGateway,
    IntermediateMessageThrowEvent,
    IntermediateMessageCatchEvent,
    LinkThrowEvent { link_name: String },
    LinkCatchEvent { link_name: String },
}

impl NodeKind {
    pub fn is_start_event(&self) -> bool {
        matches!(self, NodeKind::NoneStartEvent | NodeKind::MessageStartEvent)
    }

    pub fn is_end_event(&self) -> bool {
        matches!(
            self,
            NodeKind::NoneEndEvent | NodeKind::MessageEndEvent | NodeKind::TerminateEndEvent
        )
    }

    /// Tasks of any flavour; these are the elements No Dead Activities is about.
    pub fn is_activity(&self) -> bool {
        matches!(self, NodeKind::Task | NodeKind::SendTask | NodeKind::ReceiveTask { .. })
    }

    pub fn is_gateway(&self) -> bool {
        matches!(
            self,
            NodeKind::ExclusiveGateway | NodeKind::ParallelGateway | NodeKind::EventBasedGateway
        )
    }

    /// Elements allowed as the source of a message flow.
    pub fn is_message_sender(&self) -> bool {
        matches!(
            self,
            NodeKind::SendTask | NodeKind::IntermediateMessageThrowEvent | NodeKind::MessageEndEvent
        )
    }

    /// Elements allowed as the target of a message flow.
    pub fn is_message_receiver(&self) -> bool {
        matches!(
            self,
            NodeKind::ReceiveTask { .. } | NodeKind::IntermediateMessageCatchEvent | NodeKind::MessageStartEvent
        )
    }

    /// BPMN XML element name used when serializing this kind.
    pub fn element_name(&self) -> &'static str {
        match self {
            NodeKind::NoneStartEvent | NodeKind::MessageStartEvent => "startEvent",
            NodeKind::NoneEndEvent | NodeKind::MessageEndEvent | NodeKind::TerminateEndEvent => "endEvent",
            NodeKind::Task => "task",
            NodeKind::SendTask => "sendTask",
            NodeKind::ReceiveTask { .. } => "receiveTask",
            NodeKind::ExclusiveGateway => "exclusiveGateway",
            NodeKind::ParallelGateway => "parallelGateway",
            NodeKind::EventBasedGateway => "eventBasedGateway",
            NodeKind::IntermediateMessageThrowEvent | NodeKind::LinkThrowEvent { .. } => "intermediateThrowEvent",
            NodeKind::IntermediateMessageCatchEvent | NodeKind::LinkCatchEvent { .. } => "intermediateCatchEvent",
        }
    }

    /// Default shape size (width, height) in diagram pixels.
    pub fn default_size(&self) -> (f64, f64) {
        if self.is_activity() {
            (100.0, 80.0)
        } else if self.is_gateway() {
            (50.0, 50.0)
        } else {
            (36.0, 36.0)
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::ReceiveTask { instantiate: true } => write!(f, "ReceiveTask(instantiate)"),
            NodeKind::ReceiveTask { .. } => write!(f, "ReceiveTask"),
            NodeKind::LinkThrowEvent { link_name } => write!(f, "LinkThrowEvent({link_name})"),
            NodeKind::LinkCatchEvent { link_name } => write!(f, "LinkCatchEvent({link_name})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNode {
    pub id: String,
    pub name: Option<String>,
    pub kind: NodeKind,
    /// Incoming sequence-flow IDs, in the order the flows are declared.
    pub incoming: Vec<String>,
    /// Outgoing sequence-flow IDs, in the order the flows are declared.
    pub outgoing: Vec<String>,
}

impl FlowNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        FlowNode {
            id: id.into(),
            name: None,
            kind,
            incoming: Vec::new(),
            outgoing: Vec::new(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessageFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub id: String,
    pub flow_nodes: Vec<FlowNode>,
    pub sequence_flows: Vec<SequenceFlow>,
}

impl Process {
    pub fn new(id: impl Into<String>) -> Self {
        Process {
            id: id.into(),
            flow_nodes: Vec::new(),
            sequence_flows: Vec::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.flow_nodes.iter().find(|n| n.id == id)
    }

    pub fn flow(&self, id: &str) -> Option<&SequenceFlow> {
        self.sequence_flows.iter().find(|f| f.id == id)
    }

    /// Recomputes every node's `incoming`/`outgoing` lists from the
    /// sequence flows. Flows whose endpoints do not resolve are skipped.
    pub fn relink(&mut self) {
        let index: HashMap<String, usize> = self
            .flow_nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        for node in &mut self.flow_nodes {
            node.incoming.clear();
            node.outgoing.clear();
        }
        for flow in &self.sequence_flows {
            if let Some(&i) = index.get(&flow.source) {
                self.flow_nodes[i].outgoing.push(flow.id.clone());
            }
            if let Some(&i) = index.get(&flow.target) {
                self.flow_nodes[i].incoming.push(flow.id.clone());
            }
        }
    }
}

/// Shape bounds of a diagram element in pixels (top-left corner plus size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    /// Bounds of the given size centered on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Bounds {
            x: cx - width / 2.0,
            y: cy - height / 2.0,
            width,
            height,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn distance_to(&self, other: &Bounds) -> f64 {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        (ax - bx).hypot(ay - by)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCategory {
    UnsupportedElement,
    StructuralError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelIssue {
    /// ID of the offending source element; empty when the document itself
    /// could not be read.
    pub element_id: String,
    pub category: IssueCategory,
    pub detail: String,
}

impl ModelIssue {
    pub fn unsupported(element_id: impl Into<String>, detail: impl Into<String>) -> Self {
        ModelIssue {
            element_id: element_id.into(),
            category: IssueCategory::UnsupportedElement,
            detail: detail.into(),
        }
    }

    pub fn structural(element_id: impl Into<String>, detail: impl Into<String>) -> Self {
        ModelIssue {
            element_id: element_id.into(),
            category: IssueCategory::StructuralError,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ModelIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let category = match self.category {
            IssueCategory::UnsupportedElement => "unsupported element",
            IssueCategory::StructuralError => "structural error",
        };
        if self.element_id.is_empty() {
            write!(f, "{category}: {}", self.detail)
        } else {
            write!(f, "{category} at '{}': {}", self.element_id, self.detail)
        }
    }
}

/// Reference to a flow node together with the process that owns it.
#[derive(Debug, Clone, Copy)]
pub struct NodeRef<'a> {
    pub process: &'a Process,
    pub node: &'a FlowNode,
}

#[derive(Debug, Clone, Default)]
pub struct ProcessModel {
    pub processes: Vec<Process>,
    pub message_flows: Vec<MessageFlow>,
    /// Shape bounds per flow-node ID.
    pub diagram: BTreeMap<String, Bounds>,
    /// Flow nodes that had no diagram shape in the source document. Their
    /// bounds default to the origin and proximity-based fixes skip them.
    pub unplaced: BTreeSet<String>,
    /// Non-fatal findings, e.g. ignored data objects or missing shapes.
    pub warnings: Vec<ModelIssue>,
}

impl ProcessModel {
    pub fn process(&self, id: &str) -> Option<&Process> {
        self.processes.iter().find(|p| p.id == id)
    }

    pub fn find_node(&self, id: &str) -> Option<NodeRef<'_>> {
        self.processes
            .iter()
            .find_map(|process| process.node(id).map(|node| NodeRef { process, node }))
    }

    pub fn find_flow(&self, id: &str) -> Option<(&Process, &SequenceFlow)> {
        self.processes.iter().find_map(|p| p.flow(id).map(|f| (p, f)))
    }

    pub fn message_flow(&self, id: &str) -> Option<&MessageFlow> {
        self.message_flows.iter().find(|m| m.id == id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeRef<'_>> {
        self.processes
            .iter()
            .flat_map(|process| process.flow_nodes.iter().map(move |node| NodeRef { process, node }))
    }

    /// True if `id` names any process, flow node, sequence flow or message flow.
    pub fn contains_id(&self, id: &str) -> bool {
        self.processes.iter().any(|p| {
            p.id == id || p.flow_nodes.iter().any(|n| n.id == id) || p.sequence_flows.iter().any(|f| f.id == id)
        }) || self.message_flows.iter().any(|m| m.id == id)
    }

    /// Diagram bounds of a node that was actually placed in the source.
    pub fn placed_bounds(&self, id: &str) -> Option<&Bounds> {
        if self.unplaced.contains(id) {
            None
        } else {
            self.diagram.get(id)
        }
    }

    /// Incoming message flows of a node.
    pub fn incoming_messages<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a MessageFlow> {
        self.message_flows.iter().filter(move |m| m.target == node_id)
    }

    /// Number of flow nodes, sequence flows and message flows.
    pub fn element_count(&self) -> usize {
        self.processes
            .iter()
            .map(|p| p.flow_nodes.len() + p.sequence_flows.len())
            .sum::<usize>()
            + self.message_flows.len()
    }

    /// Equality of everything with control-flow or layout meaning: IDs,
    /// names, kinds, flows and diagram bounds. Warnings are ignored.
    pub fn structurally_eq(&self, other: &ProcessModel) -> bool {
        self.processes == other.processes && self.message_flows == other.message_flows && self.diagram == other.diagram
    }
}
