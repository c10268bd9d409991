//! Token-game semantics over a compiled, index-based view of a model.
//!
//! Every element firing is one atomic step: a task consumes its incoming
//! token and produces its outgoing tokens in a single transition, without
//! separate "started"/"finished" states.

use std::collections::HashMap;

use crate::model::{NodeKind, ProcessModel};

pub type NodeIdx = u32;
pub type FlowIdx = u32;
pub type MessageIdx = u32;

/// Cap for remembered end-event executions; two already violate Proper
/// Completion and the cap keeps looping models finite.
pub const END_EVENT_CAP: u8 = 2;

#[derive(Debug, Clone)]
pub struct NetNode {
    pub id: String,
    pub kind: NodeKind,
    pub process: u32,
    pub incoming: Vec<FlowIdx>,
    pub outgoing: Vec<FlowIdx>,
    pub messages_in: Vec<MessageIdx>,
    pub messages_out: Vec<MessageIdx>,
    /// Flows that receive tokens when this node fires. Equals `outgoing`
    /// except for link throw events, which continue at their catch event.
    produces: Vec<FlowIdx>,
}

#[derive(Debug, Clone)]
pub struct NetFlow {
    pub id: String,
    pub source: NodeIdx,
    pub target: NodeIdx,
}

#[derive(Debug, Clone)]
pub struct NetProcess {
    pub id: String,
    /// Outgoing flows of all none start events; `None` if the process is
    /// only instantiated by messages.
    pub start_tokens: Option<Vec<FlowIdx>>,
}

/// Index-based form of a [`ProcessModel`], built once per check.
#[derive(Debug, Clone)]
pub struct Net {
    pub processes: Vec<NetProcess>,
    pub nodes: Vec<NetNode>,
    pub flows: Vec<NetFlow>,
    pub messages: Vec<NetFlow>,
    /// Message start events and instantiating receive tasks.
    instantiators: Vec<NodeIdx>,
    node_index: HashMap<String, NodeIdx>,
    flow_index: HashMap<String, FlowIdx>,
    message_index: HashMap<String, MessageIdx>,
}

impl Net {
    /// Compiles a validated model. Unresolvable references are skipped.
    pub fn new(model: &ProcessModel) -> Net {
        let mut node_index = HashMap::new();
        let mut nodes = Vec::new();
        for (pi, process) in model.processes.iter().enumerate() {
            for node in &process.flow_nodes {
                node_index.insert(node.id.clone(), nodes.len() as NodeIdx);
                nodes.push(NetNode {
                    id: node.id.clone(),
                    kind: node.kind.clone(),
                    process: pi as u32,
                    incoming: Vec::new(),
                    outgoing: Vec::new(),
                    messages_in: Vec::new(),
                    messages_out: Vec::new(),
                    produces: Vec::new(),
                });
            }
        }

        let mut flow_index = HashMap::new();
        let mut flows = Vec::new();
        for flow in model.processes.iter().flat_map(|p| &p.sequence_flows) {
            let (Some(&source), Some(&target)) = (node_index.get(&flow.source), node_index.get(&flow.target)) else {
                continue;
            };
            let idx = flows.len() as FlowIdx;
            flow_index.insert(flow.id.clone(), idx);
            nodes[source as usize].outgoing.push(idx);
            nodes[target as usize].incoming.push(idx);
            flows.push(NetFlow {
                id: flow.id.clone(),
                source,
                target,
            });
        }

        let mut message_index = HashMap::new();
        let mut messages = Vec::new();
        for flow in &model.message_flows {
            let (Some(&source), Some(&target)) = (node_index.get(&flow.source), node_index.get(&flow.target)) else {
                continue;
            };
            let idx = messages.len() as MessageIdx;
            message_index.insert(flow.id.clone(), idx);
            nodes[source as usize].messages_out.push(idx);
            nodes[target as usize].messages_in.push(idx);
            messages.push(NetFlow {
                id: flow.id.clone(),
                source,
                target,
            });
        }

        // Link throws continue at the catch event with the same name.
        let mut catches: HashMap<(u32, &str), NodeIdx> = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if let NodeKind::LinkCatchEvent { link_name } = &node.kind {
                catches.insert((node.process, link_name.as_str()), i as NodeIdx);
            }
        }
        let produces: Vec<Vec<FlowIdx>> = nodes
            .iter()
            .map(|node| match &node.kind {
                NodeKind::LinkThrowEvent { link_name } => catches
                    .get(&(node.process, link_name.as_str()))
                    .map(|&c| nodes[c as usize].outgoing.clone())
                    .unwrap_or_default(),
                _ => node.outgoing.clone(),
            })
            .collect();
        for (node, produces) in nodes.iter_mut().zip(produces) {
            node.produces = produces;
        }

        let processes = model
            .processes
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                let starts: Vec<&NetNode> = nodes
                    .iter()
                    .filter(|n| n.process == pi as u32 && n.kind == NodeKind::NoneStartEvent)
                    .collect();
                NetProcess {
                    id: p.id.clone(),
                    start_tokens: (!starts.is_empty())
                        .then(|| starts.iter().flat_map(|n| n.outgoing.iter().copied()).collect()),
                }
            })
            .collect();

        let instantiators = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| {
                matches!(
                    n.kind,
                    NodeKind::MessageStartEvent | NodeKind::ReceiveTask { instantiate: true }
                )
            })
            .map(|(i, _)| i as NodeIdx)
            .collect();

        Net {
            processes,
            nodes,
            flows,
            messages,
            instantiators,
            node_index,
            flow_index,
            message_index,
        }
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn flow_idx(&self, id: &str) -> Option<FlowIdx> {
        self.flow_index.get(id).copied()
    }

    pub fn message_idx(&self, id: &str) -> Option<MessageIdx> {
        self.message_index.get(id).copied()
    }

    pub fn node(&self, idx: NodeIdx) -> &NetNode {
        &self.nodes[idx as usize]
    }

    pub fn flow(&self, idx: FlowIdx) -> &NetFlow {
        &self.flows[idx as usize]
    }

    /// The state before anything has executed: one snapshot per process
    /// with none start events, holding a token on each of their outgoing
    /// flows. Message-instantiated processes start empty.
    pub fn initial_state(&self) -> State {
        let mut snapshots: Vec<Snapshot> = self
            .processes
            .iter()
            .enumerate()
            .filter_map(|(pi, p)| {
                p.start_tokens.as_ref().map(|flows| {
                    let mut snapshot = Snapshot::empty(pi as u32);
                    for &f in flows {
                        snapshot.add_token(f);
                    }
                    snapshot
                })
            })
            .collect();
        snapshots.sort();
        State {
            snapshots,
            messages: Vec::new(),
        }
    }

    /// All atomic steps enabled in `state`.
    pub fn successors(&self, state: &State) -> Vec<Transition> {
        let mut out = Vec::new();
        self.successors_into(state, &mut out);
        out
    }

    /// Like [`Net::successors`] but appends into a caller-owned buffer.
    pub fn successors_into(&self, state: &State, out: &mut Vec<Transition>) {
        for (si, snapshot) in state.snapshots.iter().enumerate() {
            // Equal snapshots yield equal successors.
            if si > 0 && state.snapshots[si - 1] == *snapshot {
                continue;
            }
            for &(flow, _) in &snapshot.tokens {
                let target = self.flows[flow as usize].target;
                let node = &self.nodes[target as usize];
                match &node.kind {
                    NodeKind::ParallelGateway => {
                        // All incoming flows must hold a token; emit once, for the first one.
                        if node.incoming.first() == Some(&flow) && node.incoming.iter().all(|&f| snapshot.count(f) > 0)
                        {
                            let mut next = state.clone();
                            let snap = &mut next.snapshots[si];
                            for &f in &node.incoming {
                                snap.remove_token(f);
                            }
                            self.produce(target, &node.produces, &mut next, si);
                            out.push(Transition::new(target, next));
                        }
                    }
                    NodeKind::ExclusiveGateway => {
                        if node.outgoing.is_empty() {
                            let mut next = state.clone();
                            next.snapshots[si].remove_token(flow);
                            out.push(Transition::new(target, next.canonical()));
                        }
                        for &branch in &node.outgoing {
                            let mut next = state.clone();
                            next.snapshots[si].remove_token(flow);
                            next.snapshots[si].add_token(branch);
                            out.push(Transition::new(target, next.canonical()));
                        }
                    }
                    NodeKind::ReceiveTask { .. } | NodeKind::IntermediateMessageCatchEvent => {
                        for &m in &node.messages_in {
                            if state.pending(m) == 0 {
                                continue;
                            }
                            let mut next = state.clone();
                            next.snapshots[si].remove_token(flow);
                            next.take_message(m);
                            self.produce(target, &node.produces, &mut next, si);
                            out.push(Transition::new(target, next));
                        }
                    }
                    NodeKind::EventBasedGateway => {
                        // The gateway never fires on its own; whichever
                        // attached catch element receives a message wins.
                        for &branch in &node.outgoing {
                            let catcher = self.flows[branch as usize].target;
                            let catch_node = &self.nodes[catcher as usize];
                            for &m in &catch_node.messages_in {
                                if state.pending(m) == 0 {
                                    continue;
                                }
                                let mut next = state.clone();
                                next.snapshots[si].remove_token(flow);
                                next.take_message(m);
                                self.produce(catcher, &catch_node.produces, &mut next, si);
                                out.push(Transition::new(catcher, next));
                            }
                        }
                    }
                    NodeKind::NoneStartEvent | NodeKind::MessageStartEvent => {}
                    _ => {
                        let mut next = state.clone();
                        next.snapshots[si].remove_token(flow);
                        self.produce(target, &node.produces, &mut next, si);
                        out.push(Transition::new(target, next));
                    }
                }
            }
        }

        for &starter in &self.instantiators {
            let node = &self.nodes[starter as usize];
            for &m in &node.messages_in {
                if state.pending(m) == 0 {
                    continue;
                }
                let mut next = state.clone();
                next.take_message(m);
                let mut snapshot = Snapshot::empty(node.process);
                for &f in &node.produces {
                    snapshot.add_token(f);
                }
                next.snapshots.push(snapshot);
                out.push(Transition::new(starter, next.canonical()));
            }
        }
    }

    /// Effects of `node` firing within snapshot `si` after its inputs were
    /// consumed. Canonicalizes `state`.
    fn produce(&self, node: NodeIdx, produces: &[FlowIdx], state: &mut State, si: usize) {
        let info = &self.nodes[node as usize];
        let snapshot = &mut state.snapshots[si];
        match info.kind {
            NodeKind::TerminateEndEvent => {
                snapshot.tokens.clear();
                snapshot.record_end(node);
            }
            NodeKind::NoneEndEvent | NodeKind::MessageEndEvent => snapshot.record_end(node),
            _ => {
                for &f in produces {
                    snapshot.add_token(f);
                }
            }
        }
        for &m in &info.messages_out {
            state.put_message(m);
        }
        state.sort_snapshots();
    }
}

/// One process instance: tokens per sequence flow plus how often each end
/// event has executed (capped at [`END_EVENT_CAP`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Snapshot {
    pub process: u32,
    /// Sorted by flow index; every count is at least one.
    pub tokens: Vec<(FlowIdx, u32)>,
    /// Sorted by node index; every count is at least one.
    pub end_events: Vec<(NodeIdx, u8)>,
}

impl Snapshot {
    pub fn empty(process: u32) -> Self {
        Snapshot {
            process,
            tokens: Vec::new(),
            end_events: Vec::new(),
        }
    }

    pub fn count(&self, flow: FlowIdx) -> u32 {
        match self.tokens.binary_search_by_key(&flow, |&(f, _)| f) {
            Ok(i) => self.tokens[i].1,
            Err(_) => 0,
        }
    }

    pub fn add_token(&mut self, flow: FlowIdx) {
        match self.tokens.binary_search_by_key(&flow, |&(f, _)| f) {
            Ok(i) => self.tokens[i].1 += 1,
            Err(i) => self.tokens.insert(i, (flow, 1)),
        }
    }

    /// Removes one token; returns false if the flow held none.
    pub fn remove_token(&mut self, flow: FlowIdx) -> bool {
        match self.tokens.binary_search_by_key(&flow, |&(f, _)| f) {
            Ok(i) => {
                if self.tokens[i].1 == 1 {
                    self.tokens.remove(i);
                } else {
                    self.tokens[i].1 -= 1;
                }
                true
            }
            Err(_) => false,
        }
    }

    fn record_end(&mut self, node: NodeIdx) {
        match self.end_events.binary_search_by_key(&node, |&(n, _)| n) {
            Ok(i) => self.end_events[i].1 = (self.end_events[i].1 + 1).min(END_EVENT_CAP),
            Err(i) => self.end_events.insert(i, (node, 1)),
        }
    }

    pub fn end_count(&self, node: NodeIdx) -> u8 {
        match self.end_events.binary_search_by_key(&node, |&(n, _)| n) {
            Ok(i) => self.end_events[i].1,
            Err(_) => 0,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn total_tokens(&self) -> u32 {
        self.tokens.iter().map(|&(_, c)| c).sum()
    }
}

/// A global state: a multiset of snapshots and the pending messages.
///
/// Both vectors are kept sorted, so derived equality and hashing are
/// independent of the order in which a state was built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub snapshots: Vec<Snapshot>,
    /// Sorted by message-flow index; every count is at least one.
    pub messages: Vec<(MessageIdx, u32)>,
}

impl State {
    /// Builds a state from parts in any order.
    pub fn from_parts(snapshots: Vec<Snapshot>, messages: Vec<(MessageIdx, u32)>) -> State {
        let mut state = State {
            snapshots,
            messages: Vec::new(),
        };
        for snapshot in &mut state.snapshots {
            let mut tokens = std::mem::take(&mut snapshot.tokens);
            tokens.sort();
            for (f, c) in tokens {
                for _ in 0..c {
                    snapshot.add_token(f);
                }
            }
            snapshot.end_events.retain(|&(_, c)| c > 0);
            snapshot.end_events.sort();
            snapshot.end_events.dedup_by_key(|&mut (n, _)| n);
        }
        for (m, c) in messages {
            for _ in 0..c {
                state.put_message(m);
            }
        }
        state.canonical()
    }

    fn canonical(mut self) -> State {
        self.sort_snapshots();
        self
    }

    fn sort_snapshots(&mut self) {
        self.snapshots.sort();
    }

    pub fn pending(&self, message: MessageIdx) -> u32 {
        match self.messages.binary_search_by_key(&message, |&(m, _)| m) {
            Ok(i) => self.messages[i].1,
            Err(_) => 0,
        }
    }

    fn put_message(&mut self, message: MessageIdx) {
        match self.messages.binary_search_by_key(&message, |&(m, _)| m) {
            Ok(i) => self.messages[i].1 += 1,
            Err(i) => self.messages.insert(i, (message, 1)),
        }
    }

    fn take_message(&mut self, message: MessageIdx) {
        if let Ok(i) = self.messages.binary_search_by_key(&message, |&(m, _)| m) {
            if self.messages[i].1 == 1 {
                self.messages.remove(i);
            } else {
                self.messages[i].1 -= 1;
            }
        }
    }

    /// True if some snapshot still holds tokens.
    pub fn has_active_snapshot(&self) -> bool {
        self.snapshots.iter().any(|s| !s.is_completed())
    }

    /// All snapshots completed and no message left in transit.
    pub fn is_terminal_completed(&self) -> bool {
        !self.has_active_snapshot() && self.messages.is_empty()
    }

    /// Flows holding two or more tokens in some snapshot, deduplicated and sorted.
    pub fn unsafe_flow_indices(&self) -> Vec<FlowIdx> {
        let mut flows: Vec<FlowIdx> = self
            .snapshots
            .iter()
            .flat_map(|s| s.tokens.iter().filter(|&&(_, c)| c >= 2).map(|&(f, _)| f))
            .collect();
        flows.sort_unstable();
        flows.dedup();
        flows
    }

    /// End events executed at least twice in some snapshot.
    pub fn improper_end_events(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        self.snapshots
            .iter()
            .flat_map(|s| s.end_events.iter().filter(|&&(_, c)| c >= 2).map(|&(n, _)| n))
    }

    /// Total tokens per flow across all snapshots.
    pub fn token_totals(&self) -> HashMap<FlowIdx, u32> {
        let mut totals = HashMap::new();
        for s in &self.snapshots {
            for &(f, c) in &s.tokens {
                *totals.entry(f).or_default() += c;
            }
        }
        totals
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub executed: NodeIdx,
    pub successor: State,
}

impl Transition {
    fn new(executed: NodeIdx, successor: State) -> Self {
        Transition { executed, successor }
    }
}
