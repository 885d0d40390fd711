#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use proofbench_core::Role;
use proofbench_server::auth::{user_id, TokenMinter};
use proofbench_server::config::{IssuerConfig, ProverMode};
use proofbench_server::{router, App, AppState, Config};
use serde_json::Value;
use tower::ServiceExt;

pub const ISS: &str = "https://id.test.example";
pub const OTHER_ISS: &str = "https://other.example";

pub fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn keys() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/keys")
}

pub fn config() -> Config {
    Config {
        issuers: vec![IssuerConfig::from_jwks_file(ISS, &keys().join("test-issuer.jwks.json")).unwrap()],
        prover_mode: ProverMode::Fixture,
        tutorials_dir: repo().join("tutorials"),
        ..Config::default()
    }
}

pub fn minter() -> TokenMinter {
    let pem = std::fs::read(keys().join("test-issuer.pem")).unwrap();
    TokenMinter::from_ed_pem(ISS, Some("test-issuer"), &pem).unwrap()
}

pub fn other_minter() -> TokenMinter {
    let pem = std::fs::read(keys().join("other-issuer.pem")).unwrap();
    TokenMinter::from_ed_pem(OTHER_ISS, Some("other-issuer"), &pem).unwrap()
}

pub fn uid(subject: &str) -> String {
    user_id(ISS, subject)
}

pub struct Harness {
    pub state: AppState,
    pub router: Router,
    minter: TokenMinter,
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

impl Harness {
    pub async fn new() -> Harness {
        Harness::with(config()).await
    }

    pub async fn with(config: Config) -> Harness {
        let state = App::build(config).await.unwrap();
        Harness { router: router(state.clone()), state, minter: minter() }
    }

    pub fn token(&self, subject: &str, role: Role) -> String {
        self.minter.mint(subject, subject, &[role], 600)
    }

    pub async fn send(&self, method: Method, path: &str, token: Option<&str>, body: Option<(&str, String)>) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some((content_type, b)) => req.header(header::CONTENT_TYPE, content_type).body(Body::from(b)),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let body = resp.into_body().collect().await.unwrap().to_bytes();
        Reply { status, body }
    }

    pub async fn get(&self, path: &str, token: &str) -> Reply {
        self.send(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Reply {
        self.send(Method::POST, path, Some(token), Some(("application/json", body.to_string()))).await
    }

    pub async fn put(&self, path: &str, token: &str, body: Value) -> Reply {
        self.send(Method::PUT, path, Some(token), Some(("application/json", body.to_string()))).await
    }

    /// A course `id` owned by `teacher` containing the conjunction tutorial.
    pub async fn course(&self, id: &str, teacher: &str, students: &[&str]) -> Reply {
        let roster: Vec<String> = students.iter().map(|s| uid(s)).collect();
        let body = serde_json::json!({
            "id": id,
            "title": { "en": "Logic", "de": "Logik" },
            "tutorials": ["conjunction"],
            "roster": roster,
        });
        let reply = self.post("/v1/courses", &self.token(teacher, Role::Teacher), body).await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text());
        reply
    }
}

/// Task contents of a bundled solution file.
pub fn solution(name: &str) -> serde_json::Map<String, Value> {
    let text = std::fs::read_to_string(repo().join("tutorials/solutions").join(format!("{name}.toml"))).unwrap();
    let s = proofbench_core::tutorial::Solution::parse(&text).unwrap();
    s.blocks.into_iter().map(|(k, v)| (k, Value::String(v))).collect()
}
