//! Brute-force reference checker.
//!
//! Re-implements the token game directly on the model with string keys and
//! ordered maps, materializes the complete reachability graph and reads the
//! properties off it. Shares no code with the checker beyond the model types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use bpmn_soundness::model::{FlowNode, NodeKind, Process, ProcessModel};
use bpmn_soundness::report::StateView;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub process: String,
    pub tokens: BTreeMap<String, u32>,
    pub ends: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OState {
    /// Kept sorted, so the vector is a canonical multiset.
    pub instances: Vec<Instance>,
    pub messages: BTreeMap<String, u32>,
}

impl OState {
    pub fn from_view(view: &StateView) -> OState {
        let mut instances: Vec<Instance> = view
            .snapshots
            .iter()
            .map(|s| Instance {
                process: s.process.clone(),
                tokens: s.tokens.clone(),
                ends: s.end_events.clone(),
            })
            .collect();
        instances.sort();
        OState {
            instances,
            messages: view.messages.clone(),
        }
    }

    fn active(&self) -> bool {
        self.instances.iter().any(|i| !i.tokens.is_empty())
    }
}

pub struct Graph {
    pub states: Vec<OState>,
    pub index: HashMap<OState, usize>,
    /// Per state: (executed element, successor index).
    pub edges: Vec<Vec<(String, usize)>>,
}

#[derive(Debug, PartialEq, Eq)]
pub struct Verdicts {
    pub unsafe_flows: BTreeSet<String>,
    pub improper_ends: BTreeSet<String>,
    pub stuck: bool,
    pub livelock: bool,
    pub dead_activities: BTreeSet<String>,
}

fn add(map: &mut BTreeMap<String, u32>, key: &str) {
    *map.entry(key.to_string()).or_default() += 1;
}

fn take(map: &mut BTreeMap<String, u32>, key: &str) {
    let count = map.get_mut(key).expect("token present");
    *count -= 1;
    if *count == 0 {
        map.remove(key);
    }
}

struct Model<'a> {
    model: &'a ProcessModel,
}

impl<'a> Model<'a> {
    fn process(&self, id: &str) -> &'a Process {
        self.model.processes.iter().find(|p| p.id == id).unwrap()
    }

    fn node(&self, id: &str) -> &'a FlowNode {
        self.model.find_node(id).unwrap().node
    }

    fn target(&self, process: &Process, flow: &str) -> String {
        process.flow(flow).unwrap().target.clone()
    }

    fn message_flows_into(&self, node: &str) -> Vec<String> {
        self.model
            .message_flows
            .iter()
            .filter(|m| m.target == node)
            .map(|m| m.id.clone())
            .collect()
    }

    fn message_flows_from(&self, node: &str) -> Vec<String> {
        self.model
            .message_flows
            .iter()
            .filter(|m| m.source == node)
            .map(|m| m.id.clone())
            .collect()
    }

    fn initial(&self) -> OState {
        let mut instances = Vec::new();
        for p in &self.model.processes {
            let starts: Vec<&FlowNode> = p
                .flow_nodes
                .iter()
                .filter(|n| n.kind == NodeKind::NoneStartEvent)
                .collect();
            if starts.is_empty() {
                continue;
            }
            let mut tokens = BTreeMap::new();
            for s in starts {
                for f in &s.outgoing {
                    add(&mut tokens, f);
                }
            }
            instances.push(Instance {
                process: p.id.clone(),
                tokens,
                ends: BTreeMap::new(),
            });
        }
        instances.sort();
        OState {
            instances,
            messages: BTreeMap::new(),
        }
    }

    /// Flows that receive a token when `node` completes.
    fn output_flows(&self, process: &Process, node: &FlowNode) -> Vec<String> {
        if let NodeKind::LinkThrowEvent { link_name } = &node.kind {
            let catch = process
                .flow_nodes
                .iter()
                .find(|n| matches!(&n.kind, NodeKind::LinkCatchEvent { link_name: l } if l == link_name))
                .unwrap();
            return catch.outgoing.clone();
        }
        node.outgoing.clone()
    }

    fn complete(&self, state: &mut OState, i: usize, node: &FlowNode) {
        let process = self.process(&state.instances[i].process);
        let outputs = self.output_flows(process, node);
        let inst = &mut state.instances[i];
        match node.kind {
            NodeKind::TerminateEndEvent => {
                inst.tokens.clear();
                let c = inst.ends.entry(node.id.clone()).or_default();
                *c = (*c + 1).min(2);
            }
            NodeKind::NoneEndEvent | NodeKind::MessageEndEvent => {
                let c = inst.ends.entry(node.id.clone()).or_default();
                *c = (*c + 1).min(2);
            }
            _ => {
                for f in &outputs {
                    add(&mut inst.tokens, f);
                }
            }
        }
        for m in self.message_flows_from(&node.id) {
            add(&mut state.messages, &m);
        }
        state.instances.sort();
    }

    fn successors(&self, state: &OState) -> Vec<(String, OState)> {
        let mut out = Vec::new();
        for i in 0..state.instances.len() {
            let inst = &state.instances[i];
            let process = self.process(&inst.process);
            for node in &process.flow_nodes {
                let marked: Vec<&String> = node.incoming.iter().filter(|f| inst.tokens.contains_key(*f)).collect();
                match &node.kind {
                    NodeKind::NoneStartEvent | NodeKind::MessageStartEvent => {}
                    NodeKind::ParallelGateway => {
                        if !node.incoming.is_empty() && marked.len() == node.incoming.len() {
                            let mut next = state.clone();
                            for f in &node.incoming {
                                take(&mut next.instances[i].tokens, f);
                            }
                            self.complete(&mut next, i, node);
                            out.push((node.id.clone(), next));
                        }
                    }
                    NodeKind::ExclusiveGateway => {
                        for f in &marked {
                            if node.outgoing.is_empty() {
                                let mut next = state.clone();
                                take(&mut next.instances[i].tokens, f);
                                next.instances.sort();
                                out.push((node.id.clone(), next));
                            }
                            for o in &node.outgoing {
                                let mut next = state.clone();
                                take(&mut next.instances[i].tokens, f);
                                add(&mut next.instances[i].tokens, o);
                                next.instances.sort();
                                out.push((node.id.clone(), next));
                            }
                        }
                    }
                    NodeKind::ReceiveTask { .. } | NodeKind::IntermediateMessageCatchEvent => {
                        for f in &marked {
                            for m in self.message_flows_into(&node.id) {
                                if state.messages.contains_key(&m) {
                                    let mut next = state.clone();
                                    take(&mut next.instances[i].tokens, f);
                                    take(&mut next.messages, &m);
                                    self.complete(&mut next, i, node);
                                    out.push((node.id.clone(), next));
                                }
                            }
                        }
                    }
                    NodeKind::EventBasedGateway => {
                        for f in &marked {
                            for o in &node.outgoing {
                                let catcher = self.node(&self.target(process, o));
                                for m in self.message_flows_into(&catcher.id) {
                                    if state.messages.contains_key(&m) {
                                        let mut next = state.clone();
                                        take(&mut next.instances[i].tokens, f);
                                        take(&mut next.messages, &m);
                                        self.complete(&mut next, i, catcher);
                                        out.push((catcher.id.clone(), next));
                                    }
                                }
                            }
                        }
                    }
                    _ => {
                        for f in &marked {
                            let mut next = state.clone();
                            take(&mut next.instances[i].tokens, f);
                            self.complete(&mut next, i, node);
                            out.push((node.id.clone(), next));
                        }
                    }
                }
            }
        }
        for p in &self.model.processes {
            for node in &p.flow_nodes {
                let instantiates = matches!(
                    node.kind,
                    NodeKind::MessageStartEvent | NodeKind::ReceiveTask { instantiate: true }
                );
                if !instantiates {
                    continue;
                }
                for m in self.message_flows_into(&node.id) {
                    if state.messages.contains_key(&m) {
                        let mut next = state.clone();
                        take(&mut next.messages, &m);
                        let mut tokens = BTreeMap::new();
                        for f in &node.outgoing {
                            add(&mut tokens, f);
                        }
                        next.instances.push(Instance {
                            process: p.id.clone(),
                            tokens,
                            ends: BTreeMap::new(),
                        });
                        next.instances.sort();
                        out.push((node.id.clone(), next));
                    }
                }
            }
        }
        out
    }
}

/// Builds the full reachability graph, giving up beyond `limit` states.
pub fn explore(model: &ProcessModel, limit: usize) -> Option<Graph> {
    let m = Model { model };
    let initial = m.initial();
    let mut graph = Graph {
        states: vec![initial.clone()],
        index: HashMap::from([(initial, 0)]),
        edges: Vec::new(),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let succ = m.successors(&graph.states[i]);
        let mut edges = Vec::new();
        for (element, next) in succ {
            let j = match graph.index.get(&next) {
                Some(&j) => j,
                None => {
                    if graph.states.len() >= limit {
                        return None;
                    }
                    let j = graph.states.len();
                    graph.states.push(next.clone());
                    graph.index.insert(next, j);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((element, j));
        }
        if graph.edges.len() <= i {
            graph.edges.resize(i + 1, Vec::new());
        }
        graph.edges[i] = edges;
    }
    graph.edges.resize(graph.states.len(), Vec::new());
    Some(graph)
}

pub fn verdicts(model: &ProcessModel, graph: &Graph) -> Verdicts {
    let mut unsafe_flows = BTreeSet::new();
    let mut improper_ends = BTreeSet::new();
    let mut executed = BTreeSet::new();
    let mut stuck = false;
    for (i, state) in graph.states.iter().enumerate() {
        for inst in &state.instances {
            unsafe_flows.extend(inst.tokens.iter().filter(|(_, &c)| c > 1).map(|(f, _)| f.clone()));
            improper_ends.extend(inst.ends.iter().filter(|(_, &c)| c > 1).map(|(e, _)| e.clone()));
        }
        if state.active() && graph.edges[i].is_empty() {
            stuck = true;
        }
        executed.extend(graph.edges[i].iter().map(|(e, _)| e.clone()));
    }

    // Backward closure from states without tokens.
    let mut can_finish: Vec<bool> = graph.states.iter().map(|s| !s.active()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..graph.states.len() {
            if !can_finish[i] && graph.edges[i].iter().any(|&(_, j)| can_finish[j]) {
                can_finish[i] = true;
                changed = true;
            }
        }
    }
    let livelock = can_finish.iter().any(|ok| !ok);

    let dead_activities = model
        .nodes()
        .filter(|r| r.node.kind.is_activity() && !executed.contains(&r.node.id))
        .map(|r| r.node.id.clone())
        .collect();
    Verdicts {
        unsafe_flows,
        improper_ends,
        stuck,
        livelock,
        dead_activities,
    }
}
