use std::fmt::Write as _;

use super::{NodeKind, ProcessModel, BPMNDI_NS, BPMN_NS, DC_NS, DI_NS};

const COLLABORATION_ID: &str = "Collaboration_1";

/// Serializes a model to BPMN 2.0 XML with a diagram section.
///
/// Output is deterministic: elements appear in model order and every shape
/// reuses the stored bounds, so parsing the result yields a structurally
/// equal model.
pub fn serialize_bpmn(model: &ProcessModel) -> String {
    let mut out = String::with_capacity(256 * model.element_count() + 512);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<bpmn:definitions xmlns:bpmn=\"{BPMN_NS}\" xmlns:bpmndi=\"{BPMNDI_NS}\" xmlns:dc=\"{DC_NS}\" xmlns:di=\"{DI_NS}\" id=\"Definitions_1\" targetNamespace=\"http://bpmn.io/schema/bpmn\">"
    );

    let collaboration = model.processes.len() > 1 || !model.message_flows.is_empty();
    if collaboration {
        let _ = writeln!(out, "  <bpmn:collaboration id=\"{COLLABORATION_ID}\">");
        for process in &model.processes {
            let _ = writeln!(
                out,
                "    <bpmn:participant id=\"Participant_{}\" processRef=\"{}\" />",
                escape(&process.id),
                escape(&process.id)
            );
        }
        for flow in &model.message_flows {
            let _ = writeln!(
                out,
                "    <bpmn:messageFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\" />",
                escape(&flow.id),
                escape(&flow.source),
                escape(&flow.target)
            );
        }
        out.push_str("  </bpmn:collaboration>\n");
    }

    for process in &model.processes {
        let _ = writeln!(
            out,
            "  <bpmn:process id=\"{}\" isExecutable=\"true\">",
            escape(&process.id)
        );
        for node in &process.flow_nodes {
            let tag = node.kind.element_name();
            let _ = write!(out, "    <bpmn:{tag} id=\"{}\"", escape(&node.id));
            if let Some(name) = &node.name {
                let _ = write!(out, " name=\"{}\"", escape(name));
            }
            if let NodeKind::ReceiveTask { instantiate: true } = node.kind {
                out.push_str(" instantiate=\"true\"");
            }
            out.push_str(">\n");
            for flow in &node.incoming {
                let _ = writeln!(out, "      <bpmn:incoming>{}</bpmn:incoming>", escape(flow));
            }
            for flow in &node.outgoing {
                let _ = writeln!(out, "      <bpmn:outgoing>{}</bpmn:outgoing>", escape(flow));
            }
            match &node.kind {
                NodeKind::MessageStartEvent
                | NodeKind::MessageEndEvent
                | NodeKind::IntermediateMessageThrowEvent
                | NodeKind::IntermediateMessageCatchEvent => out.push_str("      <bpmn:messageEventDefinition />\n"),
                NodeKind::TerminateEndEvent => out.push_str("      <bpmn:terminateEventDefinition />\n"),
                NodeKind::LinkThrowEvent { link_name } | NodeKind::LinkCatchEvent { link_name } => {
                    let _ = writeln!(out, "      <bpmn:linkEventDefinition name=\"{}\" />", escape(link_name));
                }
                _ => {}
            }
            let _ = writeln!(out, "    </bpmn:{tag}>");
        }
        for flow in &process.sequence_flows {
            let _ = writeln!(
                out,
                "    <bpmn:sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\" />",
                escape(&flow.id),
                escape(&flow.source),
                escape(&flow.target)
            );
        }
        out.push_str("  </bpmn:process>\n");
    }

    let plane_element = if collaboration {
        COLLABORATION_ID.to_string()
    } else {
        model.processes.first().map(|p| p.id.clone()).unwrap_or_default()
    };
    out.push_str("  <bpmndi:BPMNDiagram id=\"BPMNDiagram_1\">\n");
    let _ = writeln!(
        out,
        "    <bpmndi:BPMNPlane id=\"BPMNPlane_1\" bpmnElement=\"{}\">",
        escape(&plane_element)
    );
    for node in model.processes.iter().flat_map(|p| &p.flow_nodes) {
        if model.unplaced.contains(&node.id) {
            continue;
        }
        let Some(b) = model.diagram.get(&node.id) else {
            continue;
        };
        let _ = writeln!(
            out,
            "      <bpmndi:BPMNShape id=\"{id}_di\" bpmnElement=\"{id}\">\n        <dc:Bounds x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" />\n      </bpmndi:BPMNShape>",
            b.x,
            b.y,
            b.width,
            b.height,
            id = escape(&node.id)
        );
    }
    let edges = model
        .processes
        .iter()
        .flat_map(|p| p.sequence_flows.iter().map(|f| (&f.id, &f.source, &f.target)))
        .chain(model.message_flows.iter().map(|f| (&f.id, &f.source, &f.target)));
    for (id, source, target) in edges {
        let (Some(s), Some(t)) = (model.diagram.get(source), model.diagram.get(target)) else {
            continue;
        };
        let ((sx, sy), (tx, ty)) = (s.center(), t.center());
        let _ = writeln!(
            out,
            "      <bpmndi:BPMNEdge id=\"{id}_di\" bpmnElement=\"{id}\">\n        <di:waypoint x=\"{sx}\" y=\"{sy}\" />\n        <di:waypoint x=\"{tx}\" y=\"{ty}\" />\n      </bpmndi:BPMNEdge>",
            id = escape(id)
        );
    }
    out.push_str("    </bpmndi:BPMNPlane>\n  </bpmndi:BPMNDiagram>\n</bpmn:definitions>\n");
    out
}

fn escape(text: &str) -> String {
    let mut escaped = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => escaped.push_str("&amp;"),
            '<' => escaped.push_str("&lt;"),
            '>' => escaped.push_str("&gt;"),
            '"' => escaped.push_str("&quot;"),
            '\'' => escaped.push_str("&apos;"),
            '\n' => escaped.push_str("&#10;"),
            '\r' => escaped.push_str("&#13;"),
            '\t' => escaped.push_str("&#9;"),
            c => escaped.push(c),
        }
    }
    escaped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_bpmn, Bounds, FlowNode, MessageFlow, Process, SequenceFlow};

    fn trivial() -> ProcessModel {
        let mut p = Process::new("P");
        p.flow_nodes = vec![
            FlowNode::new("s", NodeKind::NoneStartEvent),
            FlowNode::new("a", NodeKind::Task).named("Check <order> & \"ship\""),
            FlowNode::new("e", NodeKind::NoneEndEvent),
        ];
        p.sequence_flows = vec![
            SequenceFlow {
                id: "f1".into(),
                source: "s".into(),
                target: "a".into(),
            },
            SequenceFlow {
                id: "f2".into(),
                source: "a".into(),
                target: "e".into(),
            },
        ];
        p.relink();
        let mut model = ProcessModel {
            processes: vec![p],
            ..Default::default()
        };
        model
            .diagram
            .insert("s".into(), Bounds::centered(100.0, 100.0, 36.0, 36.0));
        model
            .diagram
            .insert("a".into(), Bounds::centered(200.5, 100.0, 100.0, 80.0));
        model
            .diagram
            .insert("e".into(), Bounds::centered(320.0, 100.0, 36.0, 36.0));
        model
    }

    #[test]
    fn trivial_round_trip() {
        let model = trivial();
        let xml = serialize_bpmn(&model);
        let back = parse_bpmn(&xml).unwrap();
        assert!(back.structurally_eq(&model));
        assert!(back.warnings.is_empty());
    }

    #[test]
    fn collaboration_round_trip() {
        let mut model = trivial();
        let mut q = Process::new("Q");
        q.flow_nodes = vec![
            FlowNode::new("qs", NodeKind::MessageStartEvent),
            FlowNode::new("qt", NodeKind::LinkThrowEvent { link_name: "go".into() }),
            FlowNode::new("qc", NodeKind::LinkCatchEvent { link_name: "go".into() }),
            FlowNode::new("qe", NodeKind::TerminateEndEvent),
        ];
        q.sequence_flows = vec![
            SequenceFlow {
                id: "qf1".into(),
                source: "qs".into(),
                target: "qt".into(),
            },
            SequenceFlow {
                id: "qf2".into(),
                source: "qc".into(),
                target: "qe".into(),
            },
        ];
        q.relink();
        for (i, n) in q.flow_nodes.iter().enumerate() {
            model
                .diagram
                .insert(n.id.clone(), Bounds::centered(100.0 * i as f64, 300.0, 36.0, 36.0));
        }
        model.processes.push(q);
        model.processes[0].flow_nodes[2].kind = NodeKind::MessageEndEvent;
        model.message_flows.push(MessageFlow {
            id: "mf".into(),
            source: "e".into(),
            target: "qs".into(),
        });
        let xml = serialize_bpmn(&model);
        let back = parse_bpmn(&xml).unwrap();
        assert!(back.structurally_eq(&model));
    }

    #[test]
    fn serialization_is_deterministic() {
        assert_eq!(serialize_bpmn(&trivial()), serialize_bpmn(&trivial()));
    }
}
