use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use counter_gnn::config::ServiceConfig;
use counter_gnn::io::dataset::SampleLine;
use counter_gnn::io::frames::{save_labeled_frames, LabeledFrameLine};
use counter_gnn::io::weights::save_weights;
use counter_gnn::io::write_json;
use counter_gnn::service::{
    router, ApiErrorBody, AppState, FramesResponse, HealthResponse, ImportanceResponse, PredictResponse,
    WhatIfResponse, VERSION_HEADER,
};
use counter_gnn_core::detector::{detect_counterattacks, label_frames, DetectorConfig, LabeledFrame};
use counter_gnn_core::gnn::{ModelDims, ModelParams};
use counter_gnn_core::graph::{frame_to_graph, GraphOptions};
use counter_gnn_core::importance::permutation_importance;
use counter_gnn_core::synth::{generate_synthetic_match, SynthConfig};
use counter_gnn_core::tracking::PitchSpec;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    state: AppState,
    frames: Vec<LabeledFrame>,
    config: ServiceConfig,
}

fn frames() -> Vec<LabeledFrame> {
    let config = SynthConfig {
        n_sequences: 6,
        ..SynthConfig::default()
    };
    let m = generate_synthetic_match(&config, 4).unwrap().matched;
    let seqs = detect_counterattacks(&m, &DetectorConfig::default()).unwrap();
    label_frames(&m, &seqs)
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let women = ModelParams::init(ModelDims::new(11, 16), 1).unwrap();
    save_weights(&p("women.cgnn"), &women).unwrap();
    save_weights(&p("men.cgnn"), &ModelParams::init(ModelDims::new(11, 16), 2).unwrap()).unwrap();
    save_weights(&p("aware.cgnn"), &ModelParams::init(ModelDims::new(12, 16), 3).unwrap()).unwrap();
    let frames = frames();
    save_labeled_frames(&p("frames.jsonl"), &frames).unwrap();
    let pitch = PitchSpec::default();
    let graphs: Vec<_> = frames
        .iter()
        .map(|f| frame_to_graph(f, &pitch, GraphOptions::default()))
        .collect();
    write_json(&p("women.importance.json"), &permutation_importance(&women, &graphs, 1, 0).unwrap()).unwrap();
    let config = ServiceConfig {
        models: [("women", "women.cgnn"), ("men", "men.cgnn"), ("aware", "aware.cgnn")]
            .into_iter()
            .map(|(n, f)| (n.to_string(), p(f)))
            .collect(),
        datasets: [("demo".to_string(), p("frames.jsonl"))].into(),
        importance: [("women".to_string(), p("women.importance.json"))].into(),
        ..ServiceConfig::default()
    };
    let state = AppState::new(config.clone(), pitch).unwrap();
    Fixture {
        _dir: dir,
        state,
        frames,
        config,
    }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Option<String>, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let version = res
        .headers()
        .get(VERSION_HEADER)
        .map(|v| v.to_str().unwrap().to_string());
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, version, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: &Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(serde_json::to_vec(body).unwrap()))
        .unwrap()
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> T {
    serde_json::from_slice(body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(body)))
}

fn frame_json(f: &LabeledFrame) -> Value {
    serde_json::to_value(LabeledFrameLine::from_labeled(f)).unwrap()
}

#[tokio::test]
async fn health_and_models_report_versions() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let (status, header, body) = call(&app, get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    let h: HealthResponse = parse(&body);
    assert_eq!(h.status, "ok");
    assert_eq!(header.as_deref(), Some(h.version.as_str()));
    let names: Vec<_> = h.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["aware", "men", "women"]);
    assert!(h.models[0].gender_aware && !h.models[1].gender_aware);
    assert!(h.models.iter().all(|m| m.version.len() == 16));

    let (status, _, body) = call(&app, get("/models")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse::<HealthResponse>(&body).models.len(), 3);
}

#[tokio::test]
async fn frames_are_paged() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let (status, _, body) = call(&app, get("/frames?dataset=demo&offset=2&limit=3")).await;
    assert_eq!(status, StatusCode::OK);
    let page: FramesResponse = parse(&body);
    assert_eq!(page.total, fx.frames.len());
    assert_eq!(page.frames.len(), 3);
    assert_eq!(page.frames[0], LabeledFrameLine::from_labeled(&fx.frames[2]));

    let (status, header, body) = call(&app, get("/frames?dataset=nope")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(header.is_some());
    assert_eq!(parse::<ApiErrorBody>(&body).code, "unknown_dataset");
}

#[tokio::test]
async fn predict_is_repeatable_and_compares_models() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let req = json!({"model": "women", "frame": frame_json(&fx.frames[0])});
    let (s1, _, a) = call(&app, post("/predict", &req)).await;
    let (s2, _, b) = call(&app, post("/predict", &req)).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(a, b);
    let one: PredictResponse = parse(&a);
    assert_eq!(one.predictions.len(), 1);
    assert!((0.0..=1.0).contains(&one.predictions[0].probability));

    let (status, _, body) = call(&app, post("/predict", &json!({"model": "all", "frame": frame_json(&fx.frames[0])}))).await;
    assert_eq!(status, StatusCode::OK);
    let all: PredictResponse = parse(&body);
    let names: Vec<_> = all.predictions.iter().map(|p| p.model.as_str()).collect();
    assert_eq!(names, ["aware", "men", "women"]);
    assert_eq!(all.predictions[2], one.predictions[0]);
}

#[tokio::test]
async fn predict_errors() {
    let fx = fixture();
    let app = router(fx.state.clone());

    let (status, _, body) = call(&app, post("/predict", &json!({"model": "kids", "frame": frame_json(&fx.frames[0])}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(parse::<ApiErrorBody>(&body).code, "unknown_model");

    let mut bad = frame_json(&fx.frames[0]);
    bad["frame"]["players"][1]["team"] = json!("referees");
    let (status, _, body) = call(&app, post("/predict", &json!({"model": "women", "frame": bad}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: ApiErrorBody = parse(&body);
    assert_eq!(err.field.as_deref(), Some("frame.frame.players[1].team"));

    let mut far = frame_json(&fx.frames[0]);
    far["frame"]["players"][0]["x"] = json!(1e9);
    let (status, _, body) = call(&app, post("/predict", &json!({"model": "women", "frame": far}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(parse::<ApiErrorBody>(&body).message.contains("position"));

    // a gender-aware graph against an 11-wide model
    let g = frame_to_graph(&fx.frames[0], &PitchSpec::default(), GraphOptions { gender_aware: true });
    let graph = serde_json::to_value(SampleLine::from_sample(&g)).unwrap();
    let (status, _, body) = call(&app, post("/predict", &json!({"model": "women", "graph": graph}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: ApiErrorBody = parse(&body);
    assert_eq!(err.code, "width_mismatch");
    assert!(err.message.contains("width 12") && err.message.contains("width 11"), "{}", err.message);
    // the same graph fits the gender-aware model
    let (status, _, _) = call(&app, post("/predict", &json!({"model": "aware", "graph": graph}))).await;
    assert_eq!(status, StatusCode::OK);

    let (status, _, body) = call(&app, post("/predict", &json!({"model": "women"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse::<ApiErrorBody>(&body).code, "invalid_request");

    let (status, _, _) = call(
        &app,
        Request::post("/predict").body(Body::from("{not json")).unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn whatif_identities() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let f = &fx.frames[0];
    let id = f.frame.players[0].player_id.clone();
    let req = json!({"model": "men", "frame": frame_json(f), "rotations": [{"player_id": id, "degrees": 0.0}]});
    let (status, _, body) = call(&app, post("/whatif", &req)).await;
    assert_eq!(status, StatusCode::OK);
    let r: WhatIfResponse = parse(&body);
    assert_eq!(r.new_probability, r.base_probability);
    assert_eq!(r.delta_percentage_points, 0.0);
    assert!(r.sweep.is_none());

    let req = json!({"model": "men", "frame": frame_json(f), "sweep": {"player_id": id}});
    let (_, _, body) = call(&app, post("/whatif", &req)).await;
    let r: WhatIfResponse = parse(&body);
    let sweep = r.sweep.unwrap();
    assert_eq!(sweep.len(), 24);
    assert_eq!(sweep[0].probability, r.base_probability);
    assert!(r.best.unwrap().probability >= r.base_probability);

    let (_, _, body) = call(&app, post("/predict", &json!({"model": "men", "frame": frame_json(f)}))).await;
    assert_eq!(parse::<PredictResponse>(&body).predictions[0].probability, r.base_probability);

    let req = json!({"model": "men", "frame": frame_json(f), "rotations": [{"player_id": "ghost", "degrees": 15.0}]});
    let (status, _, body) = call(&app, post("/whatif", &req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(parse::<ApiErrorBody>(&body).field.as_deref(), Some("rotations"));

    let req = json!({"model": "men", "frame": frame_json(f), "sweep": {"player_id": id, "step": 7.0}});
    let (status, _, _) = call(&app, post("/whatif", &req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn importance_reports() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let (status, _, body) = call(&app, get("/importance?model=women")).await;
    assert_eq!(status, StatusCode::OK);
    let r: ImportanceResponse = parse(&body);
    assert_eq!(r.report.rows.len(), 20);
    let (status, _, body) = call(&app, get("/importance?model=men")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(parse::<ApiErrorBody>(&body).code, "no_importance");
    let (status, _, _) = call(&app, get("/importance?model=nobody")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, body) = call(&app, get("/nowhere")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(parse::<ApiErrorBody>(&body).code, "not_found");
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let req = json!({"model": "all", "frame": frame_json(&fx.frames[3])});
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            let req = req.clone();
            tokio::spawn(async move { call(&app, post("/predict", &req)).await.2 })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn oversized_bodies_are_rejected_as_json() {
    let fx = fixture();
    let mut config = fx.config.clone();
    config.max_body_bytes = 64;
    let app = router(AppState::new(config, PitchSpec::default()).unwrap());
    let req = json!({"model": "women", "frame": frame_json(&fx.frames[0])});
    let (status, _, body) = call(&app, post("/predict", &req)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(parse::<ApiErrorBody>(&body).code, "invalid_request");
}

fn path_of(config: &ServiceConfig, name: &str) -> std::path::PathBuf {
    config.models[name].clone()
}

#[tokio::test]
async fn reload_swaps_models_and_survives_bad_files() {
    let fx = fixture();
    let app = router(fx.state.clone());
    let (_, before, _) = call(&app, get("/health")).await;

    let women = path_of(&fx.config, "women");
    save_weights(&women, &ModelParams::init(ModelDims::new(11, 16), 99).unwrap()).unwrap();
    fx.state.reload().unwrap();
    let (_, after, _) = call(&app, get("/health")).await;
    assert_ne!(before, after);

    let bytes = std::fs::read(&women).unwrap();
    std::fs::write(&women, &bytes[..bytes.len() - 1]).unwrap();
    assert!(fx.state.reload().is_err());
    let (status, kept, _) = call(&app, get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(kept, after);

    // and a fresh start refuses the corrupted file
    assert!(matches!(
        AppState::new(fx.config.clone(), PitchSpec::default()),
        Err(counter_gnn::Error::Checksum { .. })
    ));
}

#[test]
fn registry_needs_a_model() {
    assert!(AppState::new(ServiceConfig::default(), PitchSpec::default()).is_err());
}
