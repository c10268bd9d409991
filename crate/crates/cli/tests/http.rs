use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bpmn_soundness::checker::DEFAULT_MAX_STATES;
use bpmn_soundness::genbench::generate_parallel;
use bpmn_soundness::{parse_bpmn, serialize_bpmn, CheckReport, Property};
use bpmn_soundness_cli::service::{router, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(ServiceConfig {
        max_states: DEFAULT_MAX_STATES,
    })
}

fn corpus(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

async fn send(app: Router, request: Request<Body>) -> (StatusCode, Value) {
    let response = app.oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn post_check(query: &str, xml: String) -> (StatusCode, Value) {
    let request = Request::post(format!("/check{query}"))
        .header("content-type", "application/xml")
        .body(Body::from(xml))
        .unwrap();
    send(app(), request).await
}

async fn post_apply(body: Value) -> (StatusCode, Value) {
    let request = Request::post("/apply-fix")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app(), request).await
}

fn report(value: Value) -> CheckReport {
    serde_json::from_value(value).unwrap()
}

#[tokio::test]
async fn health() {
    let (status, body) = send(app(), Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn parallel_model_has_35_states() {
    let (status, body) = post_check("", serialize_bpmn(&generate_parallel(5, 1))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["schemaVersion"], 1);
    assert_eq!(body["stats"]["states"], 35);
    assert!(report(body).all_fulfilled());
}

#[tokio::test]
async fn malformed_xml_is_400_with_issues() {
    let (status, body) = post_check("", corpus("invalid/malformed.bpmn")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(!body["issues"].as_array().unwrap().is_empty());

    let (status, body) = post_check("", corpus("invalid/subprocess.bpmn")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["issues"][0]["elementId"], "Sub_1");
    assert_eq!(body["issues"][0]["category"], "UnsupportedElement");
}

#[tokio::test]
async fn state_limit_is_422() {
    let (status, body) = post_check("?maxStates=10", serialize_bpmn(&generate_parallel(5, 1))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["limit"], 10);
}

#[tokio::test]
async fn request_cannot_raise_the_server_limit() {
    let app = router(ServiceConfig { max_states: 10 });
    let request = Request::post("/check?maxStates=1000000")
        .body(Body::from(serialize_bpmn(&generate_parallel(5, 1))))
        .unwrap();
    let (status, _) = send(app, request).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_property_is_400() {
    let (status, body) = post_check("?properties=Liveness", corpus("implicit_split.bpmn")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("Liveness"));
}

#[tokio::test]
async fn property_subset_is_respected() {
    let (status, body) = post_check("?properties=Safeness", corpus("mismatched_gateways.bpmn")).await;
    assert_eq!(status, StatusCode::OK);
    let report = report(body);
    assert_eq!(report.properties.len(), 1);
    assert_eq!(report.properties[0].name, Property::Safeness);
    assert!(!report.properties[0].fulfilled);
}

#[tokio::test]
async fn quick_fixes_only_on_request() {
    let xml = corpus("mismatched_gateways.bpmn");
    let (_, without) = post_check("", xml.clone()).await;
    assert!(without["quickFixes"].as_array().unwrap().is_empty());
    let (status, with) = post_check("?quickFixes=true", xml).await;
    assert_eq!(status, StatusCode::OK);
    let fixes = with["quickFixes"].as_array().unwrap();
    assert!(!fixes.is_empty());
    for fix in fixes {
        assert!(fix["id"].as_str().unwrap().starts_with("qf-"));
        assert!(fix["property"].is_string());
        assert!(fix["anchorElement"].is_string());
        assert!(!fix["edits"].as_array().unwrap().is_empty());
        assert!(!fix["rationale"].as_str().unwrap().is_empty());
    }
}

#[tokio::test]
async fn identical_requests_give_identical_reports() {
    let xml = corpus("message_collaboration.bpmn");
    let (_, mut a) = post_check("?quickFixes=true", xml.clone()).await;
    let (_, mut b) = post_check("?quickFixes=true", xml).await;
    a["stats"]["elapsedMs"] = json!(0);
    b["stats"]["elapsedMs"] = json!(0);
    assert_eq!(a, b);
}

#[tokio::test]
async fn apply_fix_by_id_then_recheck() {
    let xml = corpus("mismatched_gateways.bpmn");
    let (_, checked) = post_check("?quickFixes=true", xml.clone()).await;
    let fix = checked["quickFixes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["anchorElement"] == "e1")
        .unwrap()
        .clone();

    let (status, applied) = post_apply(json!({ "bpmnXml": xml, "fixId": fix["id"] })).await;
    assert_eq!(status, StatusCode::OK);
    let edited = applied["bpmnXml"].as_str().unwrap().to_string();
    let (status, rechecked) = post_check("", edited.clone()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(report(rechecked).property(Property::Safeness).unwrap().fulfilled);

    // Undo through the inverse edits.
    let (status, undone) = post_apply(json!({ "bpmnXml": edited, "edits": applied["inverseEdits"] })).await;
    assert_eq!(status, StatusCode::OK);
    let restored = parse_bpmn(undone["bpmnXml"].as_str().unwrap()).unwrap();
    assert!(restored.structurally_eq(&parse_bpmn(&xml).unwrap()));
}

#[tokio::test]
async fn apply_fix_with_explicit_edits() {
    let xml = corpus("mismatched_gateways.bpmn");
    let edits = json!([{ "op": "changeGatewayKind", "gateway": "e1", "from": { "type": "ExclusiveGateway" }, "to": { "type": "ParallelGateway" } }]);
    let (status, applied) = post_apply(json!({ "bpmnXml": xml, "edits": edits })).await;
    assert_eq!(status, StatusCode::OK, "{applied}");
    assert_eq!(applied["inverseEdits"][0]["to"]["type"], "ExclusiveGateway");
}

#[tokio::test]
async fn dangling_reference_is_409() {
    let xml = corpus("mismatched_gateways.bpmn");
    let edits = json!([{ "op": "changeGatewayKind", "gateway": "missing", "from": { "type": "ExclusiveGateway" }, "to": { "type": "ParallelGateway" } }]);
    let (status, _) = post_apply(json!({ "bpmnXml": xml, "edits": edits })).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, _) = post_apply(json!({ "bpmnXml": xml, "fixId": "qf-0000000000000000" })).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn apply_fix_requires_exactly_one_selector() {
    let xml = corpus("mismatched_gateways.bpmn");
    let (status, _) = post_apply(json!({ "bpmnXml": xml })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post_apply(json!({ "bpmnXml": xml, "fixId": "x", "edits": [] })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
