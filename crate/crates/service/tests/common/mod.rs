#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use toxmarket_core::{ExchangeConfig, Timestamp};
use toxmarket_service::journal::EventLog;
use toxmarket_service::{router, AppState, ManualClock, ServiceState};

pub const ADMIN: &str = "admin-secret";
pub const START: i64 = 1_000;
pub const CUTOFF: i64 = 100_000;

pub const ASSETS: &str = "asset_id,title,county,latitude,longitude,book_value_cents,loan_reference\n\
A1,Cork house,Cork,51.8985,-8.4756,25000000,L-1\n\
A2,Dublin flat,Dublin,53.3498,-6.2603,30000000,L-2\n\
A3,Cobh cottage,Cork,51.8503,-8.2943,12000000,L-3\n";

pub struct TestApp {
    pub app: AppState,
    pub router: Router,
    pub clock: Arc<ManualClock>,
}

impl TestApp {
    pub fn new(log: impl EventLog + 'static) -> Self {
        Self::with_state(ServiceState::new(ExchangeConfig::default(), Box::new(log)))
    }

    pub fn with_state(state: ServiceState) -> Self {
        let clock = Arc::new(ManualClock::new(Timestamp(START)));
        let app = AppState::new(state, clock.clone(), ADMIN, 3_600);
        Self {
            router: router(app.clone()),
            app,
            clock,
        }
    }

    pub async fn raw(&self, method: Method, uri: &str, token: Option<&str>, body: Body, json_body: bool) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if json_body {
            req = req.header("content-type", "application/json");
        }
        let resp = self.router.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into_owned()));
        (status, value)
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> (StatusCode, Value) {
        self.raw(Method::GET, uri, token, Body::empty(), false).await
    }

    pub async fn post(&self, uri: &str, token: Option<&str>, body: Value) -> (StatusCode, Value) {
        self.raw(Method::POST, uri, token, Body::from(body.to_string()), true).await
    }

    /// Ingests the three test assets, opens M1 (A1 at €250k) and M2 (A2 at
    /// €300k), and opens account `alice`. Returns alice's token.
    pub async fn seed(&self) -> String {
        let (s, _) = self
            .raw(Method::POST, "/admin/assets", Some(ADMIN), Body::from(ASSETS), false)
            .await;
        assert_eq!(s, StatusCode::OK);
        for (asset, threshold) in [("A1", 25_000_000), ("A2", 30_000_000)] {
            let (s, v) = self
                .post(
                    "/admin/markets",
                    Some(ADMIN),
                    json!({ "asset_id": asset, "threshold_cents": threshold, "cutoff": CUTOFF }),
                )
                .await;
            assert_eq!(s, StatusCode::CREATED, "{v}");
        }
        self.open("alice").await
    }

    pub async fn open(&self, account: &str) -> String {
        let (s, v) = self
            .post(
                "/accounts",
                Some(ADMIN),
                json!({ "account_id": account, "adult_attested": true }),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["session"]["token"].as_str().unwrap().to_owned()
    }

    pub async fn trade(&self, token: &str, market: &str, outcome: &str, spend: i64) -> (StatusCode, Value) {
        self.post(
            &format!("/markets/{market}/trades"),
            Some(token),
            json!({ "outcome": outcome, "spend_cents": spend }),
        )
        .await
    }
}
