use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::{
    validate, Bounds, FlowNode, MessageFlow, ModelIssue, NodeKind, Process, ProcessModel, SequenceFlow, BPMNDI_NS,
    BPMN_NS, DC_NS,
};

/// Parses raw bytes; invalid UTF-8 yields a single structural error.
pub fn parse_bpmn_bytes(bytes: &[u8]) -> Result<ProcessModel, Vec<ModelIssue>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_bpmn(text),
        Err(e) => Err(vec![ModelIssue::structural(
            "",
            format!("document is not valid UTF-8: {e}"),
        )]),
    }
}

/// Parses a BPMN 2.0 XML document into a validated [`ProcessModel`].
///
/// Every element outside the supported subset is reported as an
/// [`IssueCategory::UnsupportedElement`]; the model is only returned when
/// no issue of either category was found.
pub fn parse_bpmn(xml: &str) -> Result<ProcessModel, Vec<ModelIssue>> {
    let doc = Document::parse(xml).map_err(|e| vec![ModelIssue::structural("", format!("malformed XML: {e}"))])?;
    let root = doc.root_element();
    if !is_bpmn(&root, "definitions") {
        return Err(vec![ModelIssue::structural(
            root.attribute("id").unwrap_or(""),
            format!(
                "root element must be bpmn:definitions in namespace {BPMN_NS}, found '{}'",
                root.tag_name().name()
            ),
        )]);
    }

    let mut reader = Reader::default();
    for child in root.children().filter(Node::is_element) {
        match (child.tag_name().namespace(), child.tag_name().name()) {
            (Some(BPMN_NS), "process") => reader.process(child),
            (Some(BPMN_NS), "collaboration") => reader.collaboration(child),
            (Some(BPMNDI_NS), "BPMNDiagram") => reader.diagram(child),
            _ => {}
        }
    }

    let mut model = ProcessModel {
        processes: reader.processes,
        message_flows: reader.message_flows,
        ..ProcessModel::default()
    };
    for process in &mut model.processes {
        process.relink();
    }

    let mut issues = reader.issues;
    for node in model.processes.iter().flat_map(|p| &p.flow_nodes) {
        match reader.shapes.get(&node.id) {
            Some(bounds) => {
                model.diagram.insert(node.id.clone(), *bounds);
            }
            None => {
                model.unplaced.insert(node.id.clone());
                model
                    .diagram
                    .insert(node.id.clone(), Bounds::centered(0.0, 0.0, 0.0, 0.0));
                reader.warnings.push(ModelIssue::structural(
                    node.id.clone(),
                    "no diagram shape; placed at the origin",
                ));
            }
        }
    }
    model.warnings = reader.warnings;

    if issues.is_empty() {
        issues.extend(validate(&model));
    }
    if issues.is_empty() {
        Ok(model)
    } else {
        Err(issues)
    }
}

fn is_bpmn(node: &Node, name: &str) -> bool {
    node.tag_name().namespace() == Some(BPMN_NS) && node.tag_name().name() == name
}

fn element_id(node: &Node) -> String {
    node.attribute("id").unwrap_or("").to_string()
}

#[derive(Default)]
struct Reader {
    processes: Vec<Process>,
    message_flows: Vec<MessageFlow>,
    shapes: HashMap<String, Bounds>,
    issues: Vec<ModelIssue>,
    warnings: Vec<ModelIssue>,
}

/// Elements without control-flow meaning; skipped with a warning.
const IGNORED_WITH_WARNING: &[&str] = &[
    "laneSet",
    "dataObject",
    "dataObjectReference",
    "dataStoreReference",
    "textAnnotation",
    "association",
    "group",
    "property",
];

/// Purely descriptive children; skipped silently.
const IGNORED_SILENTLY: &[&str] = &["documentation", "extensionElements", "ioSpecification"];

impl Reader {
    fn process(&mut self, element: Node) {
        let mut process = Process::new(element_id(&element));
        if process.id.is_empty() {
            self.issues
                .push(ModelIssue::structural("", "process without an id attribute"));
        }
        for child in element.children().filter(Node::is_element) {
            let tag = child.tag_name();
            let name = tag.name();
            if tag.namespace() != Some(BPMN_NS) {
                continue;
            }
            if IGNORED_SILENTLY.contains(&name) {
                continue;
            }
            if IGNORED_WITH_WARNING.contains(&name) {
                self.warnings.push(ModelIssue::structural(
                    element_id(&child),
                    format!("{name} ignored: no control-flow semantics"),
                ));
                continue;
            }
            let id = element_id(&child);
            if id.is_empty() {
                self.issues.push(ModelIssue::structural(
                    process.id.clone(),
                    format!("{name} without an id attribute"),
                ));
                continue;
            }
            if name == "sequenceFlow" {
                match (child.attribute("sourceRef"), child.attribute("targetRef")) {
                    (Some(source), Some(target)) => process.sequence_flows.push(SequenceFlow {
                        id,
                        source: source.to_string(),
                        target: target.to_string(),
                    }),
                    _ => self
                        .issues
                        .push(ModelIssue::structural(id, "sequence flow lacks sourceRef or targetRef")),
                }
                continue;
            }
            match node_kind(&child) {
                Ok(kind) => {
                    let mut node = FlowNode::new(id, kind);
                    node.name = child.attribute("name").map(str::to_string);
                    process.flow_nodes.push(node);
                }
                Err(detail) => self.issues.push(ModelIssue::unsupported(id, detail)),
            }
        }
        self.processes.push(process);
    }

    fn collaboration(&mut self, element: Node) {
        let participants: Vec<&str> = element
            .children()
            .filter(|c| is_bpmn(c, "participant"))
            .filter_map(|c| c.attribute("id"))
            .collect();
        for child in element.children().filter(Node::is_element) {
            if !is_bpmn(&child, "messageFlow") {
                continue;
            }
            let id = element_id(&child);
            match (child.attribute("sourceRef"), child.attribute("targetRef")) {
                (Some(source), Some(target)) if participants.contains(&source) || participants.contains(&target) => {
                    // Flows to or from a collapsed pool have no token semantics here.
                    self.warnings.push(ModelIssue::structural(
                        id,
                        "message flow attached to a pool rather than a flow node; ignored",
                    ));
                }
                (Some(source), Some(target)) if !id.is_empty() => self.message_flows.push(MessageFlow {
                    id,
                    source: source.to_string(),
                    target: target.to_string(),
                }),
                _ => self.issues.push(ModelIssue::structural(
                    id,
                    "message flow lacks id, sourceRef or targetRef",
                )),
            }
        }
    }

    fn diagram(&mut self, element: Node) {
        for shape in element
            .descendants()
            .filter(|n| n.tag_name().namespace() == Some(BPMNDI_NS) && n.tag_name().name() == "BPMNShape")
        {
            let Some(target) = shape.attribute("bpmnElement") else {
                continue;
            };
            let bounds = shape
                .children()
                .find(|n| n.tag_name().namespace() == Some(DC_NS) && n.tag_name().name() == "Bounds");
            let Some(bounds) = bounds else { continue };
            let number = |attr: &str| bounds.attribute(attr).and_then(|v| v.trim().parse::<f64>().ok());
            match (number("x"), number("y"), number("width"), number("height")) {
                (Some(x), Some(y), Some(width), Some(height)) => {
                    self.shapes.insert(target.to_string(), Bounds { x, y, width, height });
                }
                _ => self.warnings.push(ModelIssue::structural(
                    target,
                    "diagram bounds are incomplete or not numeric",
                )),
            }
        }
    }
}

/// Names of the event definitions attached to an event element.
fn event_definitions<'a, 'i>(element: &Node<'a, 'i>) -> Vec<Node<'a, 'i>> {
    element
        .children()
        .filter(|c| {
            c.tag_name().namespace() == Some(BPMN_NS)
                && (c.tag_name().name().ends_with("EventDefinition") || c.tag_name().name() == "eventDefinitionRef")
        })
        .collect()
}

fn has_loop_characteristics(element: &Node) -> bool {
    element
        .children()
        .any(|c| is_bpmn(&c, "standardLoopCharacteristics") || is_bpmn(&c, "multiInstanceLoopCharacteristics"))
}

fn node_kind(element: &Node) -> Result<NodeKind, String> {
    let name = element.tag_name().name();
    let defs = event_definitions(element);
    let def_names: Vec<&str> = defs.iter().map(|d| d.tag_name().name()).collect();
    let unsupported_event = |what: &str| {
        if def_names.len() > 1 {
            format!("{what} with multiple event definitions is not supported")
        } else {
            format!(
                "{what} with {} is not supported",
                def_names.first().copied().unwrap_or("no definition")
            )
        }
    };

    match name {
        "startEvent" => match def_names.as_slice() {
            [] => Ok(NodeKind::NoneStartEvent),
            ["messageEventDefinition"] => Ok(NodeKind::MessageStartEvent),
            _ => Err(unsupported_event("start event")),
        },
        "endEvent" => match def_names.as_slice() {
            [] => Ok(NodeKind::NoneEndEvent),
            ["messageEventDefinition"] => Ok(NodeKind::MessageEndEvent),
            ["terminateEventDefinition"] => Ok(NodeKind::TerminateEndEvent),
            _ => Err(unsupported_event("end event")),
        },
        "intermediateThrowEvent" => match def_names.as_slice() {
            ["messageEventDefinition"] => Ok(NodeKind::IntermediateMessageThrowEvent),
            ["linkEventDefinition"] => Ok(NodeKind::LinkThrowEvent {
                link_name: link_name(element, &defs[0]),
            }),
            _ => Err(unsupported_event("intermediate throw event")),
        },
        "intermediateCatchEvent" => match def_names.as_slice() {
            ["messageEventDefinition"] => Ok(NodeKind::IntermediateMessageCatchEvent),
            ["linkEventDefinition"] => Ok(NodeKind::LinkCatchEvent {
                link_name: link_name(element, &defs[0]),
            }),
            _ => Err(unsupported_event("intermediate catch event")),
        },
        "task" | "userTask" | "serviceTask" | "scriptTask" | "manualTask" | "businessRuleTask" | "sendTask"
        | "receiveTask" => {
            if has_loop_characteristics(element) {
                return Err(format!(
                    "{name} with loop or multi-instance characteristics is not supported"
                ));
            }
            Ok(match name {
                "sendTask" => NodeKind::SendTask,
                "receiveTask" => NodeKind::ReceiveTask {
                    instantiate: element.attribute("instantiate") == Some("true"),
                },
                _ => NodeKind::Task,
            })
        }
        "exclusiveGateway" => Ok(NodeKind::ExclusiveGateway),
        "parallelGateway" => Ok(NodeKind::ParallelGateway),
        "eventBasedGateway" => {
            if element.attribute("instantiate") == Some("true") {
                Err("instantiating event-based gateway is not supported".into())
            } else if element.attribute("eventGatewayType") == Some("Parallel") {
                Err("parallel event-based gateway is not supported".into())
            } else {
                Ok(NodeKind::EventBasedGateway)
            }
        }
        "boundaryEvent" => Err("boundary events are not supported".into()),
        "subProcess" | "adHocSubProcess" | "transaction" | "callActivity" => Err(format!("{name} is not supported")),
        "inclusiveGateway" | "complexGateway" => Err(format!("{name} is not supported")),
        other => Err(format!("element '{other}' is not supported")),
    }
}

/// Link name from the link definition, falling back to the event's name.
fn link_name(event: &Node, definition: &Node) -> String {
    definition
        .attribute("name")
        .or_else(|| event.attribute("name"))
        .unwrap_or("")
        .to_string()
}
