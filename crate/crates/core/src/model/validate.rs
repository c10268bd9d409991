use std::collections::{HashMap, HashSet};

use super::{ModelIssue, NodeKind, ProcessModel};

/// Checks the structural invariants of a model and returns every violation,
/// in a deterministic order (processes, then message flows, in declaration
/// order).
pub fn validate(model: &ProcessModel) -> Vec<ModelIssue> {
    let mut issues = Vec::new();

    let mut seen = HashSet::new();
    let all_ids = model.processes.iter().flat_map(|p| {
        std::iter::once(&p.id)
            .chain(p.flow_nodes.iter().map(|n| &n.id))
            .chain(p.sequence_flows.iter().map(|f| &f.id))
    });
    for id in all_ids.chain(model.message_flows.iter().map(|m| &m.id)) {
        if !seen.insert(id.as_str()) {
            issues.push(ModelIssue::structural(id.clone(), "duplicate element ID"));
        }
    }

    // node ID -> (process index, kind)
    let owners: HashMap<&str, (usize, &NodeKind)> = model
        .processes
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.flow_nodes.iter().map(move |n| (n.id.as_str(), (i, &n.kind))))
        .collect();

    for (pi, process) in model.processes.iter().enumerate() {
        for flow in &process.sequence_flows {
            for (role, endpoint) in [("source", &flow.source), ("target", &flow.target)] {
                match owners.get(endpoint.as_str()) {
                    None => issues.push(ModelIssue::structural(
                        flow.id.clone(),
                        format!("{role} '{endpoint}' does not exist"),
                    )),
                    Some((owner, _)) if *owner != pi => issues.push(ModelIssue::structural(
                        flow.id.clone(),
                        format!("{role} '{endpoint}' belongs to another process"),
                    )),
                    Some(_) => {}
                }
            }
        }

        let mut can_instantiate = false;
        let mut link_catches: HashMap<&str, usize> = HashMap::new();
        for node in &process.flow_nodes {
            if let NodeKind::LinkCatchEvent { link_name } = &node.kind {
                *link_catches.entry(link_name.as_str()).or_default() += 1;
            }
        }

        for node in &process.flow_nodes {
            match &node.kind {
                NodeKind::NoneStartEvent
                | NodeKind::MessageStartEvent
                | NodeKind::ReceiveTask { instantiate: true } => can_instantiate = true,
                _ => {}
            }
            if node.kind.is_start_event() && !node.incoming.is_empty() {
                issues.push(ModelIssue::structural(
                    node.id.clone(),
                    "start event has incoming sequence flows",
                ));
            }
            if node.kind.is_end_event() && !node.outgoing.is_empty() {
                issues.push(ModelIssue::structural(
                    node.id.clone(),
                    "end event has outgoing sequence flows",
                ));
            }
            if node.kind == NodeKind::EventBasedGateway {
                for flow_id in &node.outgoing {
                    let target = process.flow(flow_id).and_then(|f| owners.get(f.target.as_str()));
                    let ok = matches!(
                        target,
                        Some((_, NodeKind::IntermediateMessageCatchEvent)) | Some((_, NodeKind::ReceiveTask { .. }))
                    );
                    if !ok {
                        issues.push(ModelIssue::structural(
                            node.id.clone(),
                            format!(
                                "event-based gateway flow '{flow_id}' must target a message catch event or receive task"
                            ),
                        ));
                    }
                }
            }
            if let NodeKind::LinkThrowEvent { link_name } = &node.kind {
                let count = link_catches.get(link_name.as_str()).copied().unwrap_or(0);
                if count != 1 {
                    issues.push(ModelIssue::structural(
                        node.id.clone(),
                        format!("link '{link_name}' needs exactly one catch event in the process, found {count}"),
                    ));
                }
            }
            if !model.diagram.contains_key(&node.id) {
                issues.push(ModelIssue::structural(node.id.clone(), "no diagram bounds"));
            }
        }

        if !can_instantiate {
            issues.push(ModelIssue::structural(
                process.id.clone(),
                "process has no start event and no instantiating receive task",
            ));
        }
    }

    for flow in &model.message_flows {
        let source = owners.get(flow.source.as_str());
        let target = owners.get(flow.target.as_str());
        match source {
            None => issues.push(ModelIssue::structural(
                flow.id.clone(),
                format!("source '{}' does not exist", flow.source),
            )),
            Some((_, kind)) if !kind.is_message_sender() => issues.push(ModelIssue::structural(
                flow.id.clone(),
                format!("source '{}' ({kind}) cannot send messages", flow.source),
            )),
            _ => {}
        }
        match target {
            None => issues.push(ModelIssue::structural(
                flow.id.clone(),
                format!("target '{}' does not exist", flow.target),
            )),
            Some((_, kind)) if !kind.is_message_receiver() => issues.push(ModelIssue::structural(
                flow.id.clone(),
                format!("target '{}' ({kind}) cannot receive messages", flow.target),
            )),
            _ => {}
        }
        if let (Some((sp, _)), Some((tp, _))) = (source, target) {
            if sp == tp {
                issues.push(ModelIssue::structural(
                    flow.id.clone(),
                    "message flow must connect different processes",
                ));
            }
        }
    }

    issues
}
