mod common;

use axum::body::Body;
use axum::http::{Method, StatusCode};
use common::*;
use proptest::prelude::*;
use serde_json::{json, Value};
use toxmarket_core::geo::GeoPoint;
use toxmarket_core::ExchangeConfig;
use toxmarket_service::journal::{read_records, FailingJournal};
use toxmarket_service::{MemoryJournal, ServiceState};

#[tokio::test]
async fn fresh_market_quotes_even_prices() {
    let t = TestApp::new(MemoryJournal::new());
    t.seed().await;
    let (s, m) = t.get("/markets/M1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["prices"]["HIGHER"], json!(0.5));
    assert_eq!(m["prices"]["LOWER"], json!(0.5));
    assert_eq!(m["state"], "OPEN");
    assert_eq!(m["threshold_cents"], 25_000_000);
    assert_eq!(m["county"], "Cork");

    let (s, list) = t.get("/markets", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 2);
    assert_eq!(t.get("/markets/M9", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn quote_matches_trade() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    let (s, q) = t.get("/markets/M1/quote?outcome=HIGHER&spend_cents=1000", None).await;
    assert_eq!(s, StatusCode::OK, "{q}");
    let (s, tr) = t.trade(&alice, "M1", "HIGHER", 1000).await;
    assert_eq!(s, StatusCode::OK, "{tr}");
    assert_eq!(q["shares"], tr["trade"]["shares"]);
    assert_eq!(tr["balance_cents"], 1_000_000 - 1000);
    assert_eq!(tr["remaining_cents"], 100_000 - 1000);
    let (_, m) = t.get("/markets/M1", None).await;
    assert_eq!(m["prices"]["HIGHER"], q["prices_after"][0]);
    assert_eq!(t.get("/markets/M1/quote?outcome=HIGHER", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn idempotent_retry_debits_once() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    let body = json!({ "outcome": "LOWER", "spend_cents": 500, "idempotency_key": "k1" });
    let (s1, r1) = t.post("/markets/M1/trades", Some(&alice), body.clone()).await;
    let (s2, r2) = t.post("/markets/M1/trades", Some(&alice), body).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(r1, r2);
    let (_, acct) = t.get("/accounts/alice", Some(&alice)).await;
    assert_eq!(acct["balance_cents"], 1_000_000 - 500);
    assert_eq!(t.app.lock().exchange().trades().len(), 1);

    let (s, e) = t
        .post(
            "/markets/M1/trades",
            Some(&alice),
            json!({ "outcome": "LOWER", "spend_cents": 600, "idempotency_key": "k1" }),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT, "{e}");
}

#[tokio::test]
async fn expired_token_is_rejected_without_effect() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    t.clock.advance(3_600);
    let before = t.app.lock().observable();
    let journaled = t.app.lock().journaled();
    let (s, e) = t.trade(&alice, "M1", "HIGHER", 100).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED, "{e}");
    assert_eq!(t.get("/accounts/alice", Some(&alice)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(t.app.lock().observable(), before);
    assert_eq!(t.app.lock().journaled(), journaled);

    // A fresh session restores access.
    let (s, sess) = t.post("/sessions", Some(ADMIN), json!({ "account_id": "alice" })).await;
    assert_eq!(s, StatusCode::CREATED);
    let token = sess["token"].as_str().unwrap();
    assert_eq!(t.trade(token, "M1", "HIGHER", 100).await.0, StatusCode::OK);
}

#[tokio::test]
async fn accounts_are_private() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    t.open("bob").await;
    assert_eq!(t.get("/accounts/bob", Some(&alice)).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(t.get("/accounts/bob", None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(t.get("/accounts/bob", Some(ADMIN)).await.0, StatusCode::OK);
    assert_eq!(t.get("/accounts/nobody", Some(ADMIN)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn admin_endpoints_need_the_admin_token() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    let body = json!({ "asset_id": "A3", "threshold_cents": 100, "cutoff": CUTOFF });
    assert_eq!(t.post("/admin/markets", Some(&alice), body.clone()).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(t.post("/admin/markets", None, body).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(
        t.post("/accounts/alice/credit", Some(&alice), json!({ "amount_cents": 1 })).await.0,
        StatusCode::UNAUTHORIZED
    );
}

#[tokio::test]
async fn unattested_participants_are_refused() {
    let t = TestApp::new(MemoryJournal::new());
    let (s, _) = t
        .post("/accounts", Some(ADMIN), json!({ "account_id": "kid", "adult_attested": false }))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(t.app.lock().journaled(), 0);
}

#[tokio::test]
async fn wager_cap_returns_remaining_allowance() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    assert_eq!(t.trade(&alice, "M1", "HIGHER", 90_000).await.0, StatusCode::OK);
    let (s, e) = t.trade(&alice, "M1", "LOWER", 20_000).await;
    assert_eq!(s, StatusCode::CONFLICT, "{e}");
    assert_eq!(e["remaining_cents"], 10_000);
    // The cap is per market.
    assert_eq!(t.trade(&alice, "M2", "LOWER", 20_000).await.0, StatusCode::OK);
}

#[tokio::test]
async fn failing_journal_leaves_state_unchanged() {
    let log = FailingJournal::after(4); // ingest, two markets, account
    let t = TestApp::new(log.clone());
    let alice = t.seed().await;
    let before = t.app.lock().observable();
    let (s, e) = t.trade(&alice, "M1", "HIGHER", 1_000).await;
    assert_eq!(s, StatusCode::INTERNAL_SERVER_ERROR, "{e}");
    assert_eq!(t.app.lock().observable(), before);
    assert_eq!(read_records(log.bytes().as_slice()).unwrap().len(), 4);
}

#[tokio::test]
async fn nearby_matches_registry() {
    let t = TestApp::new(MemoryJournal::new());
    t.seed().await;
    let (s, hits) = t.get("/assets/nearby?lat=51.8985&lon=-8.4756&radius_km=50", None).await;
    assert_eq!(s, StatusCode::OK);
    let got: Vec<(String, f64)> = hits
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (h["asset"]["asset_id"].as_str().unwrap().to_owned(), h["distance_km"].as_f64().unwrap()))
        .collect();
    let state = t.app.lock();
    let want: Vec<(String, f64)> = state
        .registry()
        .nearby(GeoPoint::new(51.8985, -8.4756).unwrap(), 50.0)
        .unwrap()
        .into_iter()
        .map(|(a, d)| (a.asset_id.to_string(), d))
        .collect();
    assert_eq!(got, want);
    assert_eq!(got.iter().map(|g| g.0.as_str()).collect::<Vec<_>>(), ["A1", "A3"]);
    drop(state);
    assert_eq!(t.get("/assets/nearby?lat=95&lon=0&radius_km=1", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(t.get("/assets/nearby?lat=0&lon=0&radius_km=-1", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn ingest_reports_rejected_lines() {
    let t = TestApp::new(MemoryJournal::new());
    let csv = "asset_id,title,county,latitude,longitude,book_value_cents,loan_reference\n\
B1,ok,Cork,51.0,-8.0,100,L\n\
B2,bad,Cork,151.0,-8.0,100,L\n";
    let (s, report) = t
        .raw(Method::POST, "/admin/assets", Some(ADMIN), Body::from(csv), false)
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{report}");
    assert_eq!(report["report"]["accepted"], json!(["B1"]));
    assert_eq!(report["report"]["rejected"][0]["line"], 3);
    let (_, assets) = t.get("/assets", None).await;
    assert_eq!(assets.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn cutoff_halts_then_settlement_pays() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    let bob = t.open("bob").await;
    assert_eq!(t.trade(&alice, "M1", "HIGHER", 5_000).await.0, StatusCode::OK);
    assert_eq!(t.trade(&bob, "M1", "LOWER", 5_000).await.0, StatusCode::OK);

    t.clock.set(toxmarket_core::Timestamp(CUTOFF));
    let (_, sess) = t.post("/sessions", Some(ADMIN), json!({ "account_id": "alice" })).await;
    let (s, e) = t.trade(sess["token"].as_str().unwrap(), "M1", "HIGHER", 100).await;
    assert_eq!(s, StatusCode::CONFLICT, "{e}");
    assert_eq!(t.get("/markets/M1", None).await.1["state"], "HALTED");

    let (s, report) = t
        .post("/admin/settle", Some(ADMIN), json!({ "market_id": "M1", "announced_cents": 26_000_000 }))
        .await;
    assert_eq!(s, StatusCode::OK, "{report}");
    assert_eq!(report["winning_outcome"], "HIGHER");
    let (_, m) = t.get("/markets/M1", None).await;
    assert_eq!(m["state"], "SETTLED");
    assert_eq!(m["resolution"]["announced_price"], 26_000_000);

    let alice_view = t.get("/accounts/alice", Some(ADMIN)).await.1;
    let payout = alice_view["payouts"][0]["amount_cents"].as_i64().unwrap();
    assert!(payout > 5_000);
    assert!(t.get("/accounts/bob", Some(ADMIN)).await.1["payouts"].as_array().unwrap().is_empty());
    assert!(t.app.lock().exchange().check_invariants().is_ok());

    let (s, _) = t
        .post("/admin/settle", Some(ADMIN), json!({ "market_id": "M1", "announced_cents": 1 }))
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn curve_and_joint_markets() {
    let t = TestApp::new(MemoryJournal::new());
    let alice = t.seed().await;
    let (s, _) = t
        .post(
            "/admin/markets",
            Some(ADMIN),
            json!({ "asset_id": "A1", "threshold_cents": 30_000_000, "cutoff": CUTOFF }),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED);
    // Pushing the higher threshold above the lower one inverts the ladder.
    assert_eq!(t.trade(&alice, "M3", "HIGHER", 3_000).await.0, StatusCode::OK);
    let (s, curve) = t.get("/assets/A1/curve", None).await;
    assert_eq!(s, StatusCode::OK, "{curve}");
    assert_eq!(curve["curve"]["points"].as_array().unwrap().len(), 2);
    assert_eq!(curve["violations"].as_array().unwrap().len(), 1);

    let (s, proposals) = t.get("/joint-markets/proposals?radius_km=300&max=5", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(proposals[0]["asset_a"], "A1");
    assert_eq!(proposals[0]["asset_b"], "A2");

    let (s, j) = t
        .post("/admin/joint-markets", Some(ADMIN), json!({ "event_a": "M1", "event_b": "M2" }))
        .await;
    assert_eq!(s, StatusCode::CREATED, "{j}");
    let joint_id = j["joint_id"].as_str().unwrap().to_owned();
    assert_eq!(t.trade(&alice, &joint_id, "HH", 1_000).await.0, StatusCode::OK);
    let (_, list) = t.get("/joint-markets", None).await;
    assert_eq!(list[0]["cells"], json!(["HH", "HL", "LH", "LL"]));
    assert!(list[0]["prices"][0].as_f64().unwrap() > 0.25);
}

#[tokio::test]
async fn guidelines_are_served() {
    let t = TestApp::new(MemoryJournal::new());
    let (s, text) = t.get("/docs/guidelines", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(text.as_str().unwrap().starts_with("# Valuation guidelines"));
}

#[tokio::test]
async fn restart_reproduces_state() {
    let log = MemoryJournal::new();
    let t = TestApp::new(log.clone());
    let alice = t.seed().await;
    let bob = t.open("bob").await;
    t.trade(&alice, "M1", "HIGHER", 2_345).await;
    t.trade(&bob, "M1", "LOWER", 7_001).await;
    let keyed = json!({ "outcome": "HIGHER", "spend_cents": 99, "idempotency_key": "retry-me" });
    let (_, first) = t.post("/markets/M2/trades", Some(&bob), keyed.clone()).await;
    t.post("/accounts/bob/credit", Some(ADMIN), json!({ "amount_cents": 12_345 })).await;
    t.clock.set(toxmarket_core::Timestamp(CUTOFF + 1));
    t.post("/admin/settle", Some(ADMIN), json!({ "market_id": "M1", "announced_cents": 10 })).await;

    let records = read_records(log.bytes().as_slice()).unwrap();
    let replayed = ServiceState::replay(ExchangeConfig::default(), &records, Box::new(MemoryJournal::new())).unwrap();
    assert_eq!(replayed.observable(), t.app.lock().observable());
    // Tokens survive a restart.
    let restarted = TestApp::with_state(replayed);
    restarted.clock.set(toxmarket_core::Timestamp(START + 10));
    assert_eq!(restarted.get("/accounts/bob", Some(&bob)).await.0, StatusCode::OK);
    // So do idempotency keys: the retry is answered, not re-executed.
    let trades = restarted.app.lock().exchange().trades().len();
    let (s, again) = restarted.post("/markets/M2/trades", Some(&bob), keyed).await;
    assert_eq!((s, again), (StatusCode::OK, first));
    assert_eq!(restarted.app.lock().exchange().trades().len(), trades);
}

#[tokio::test]
async fn file_backed_restart_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.log");
    let config = toxmarket_service::ServiceConfig {
        journal_path: path.clone(),
        admin_token: ADMIN.into(),
        fsync: false,
        ..Default::default()
    };
    let clock = std::sync::Arc::new(toxmarket_service::ManualClock::new(toxmarket_core::Timestamp(START)));
    let before = {
        let app = toxmarket_service::open_app(&config, clock.clone()).unwrap();
        let t = TestApp::with_state(std::mem::replace(
            &mut *app.lock(),
            ServiceState::new(ExchangeConfig::default(), Box::new(MemoryJournal::new())),
        ));
        let alice = t.seed().await;
        t.trade(&alice, "M2", "LOWER", 4_321).await;
        let obs = t.app.lock().observable();
        obs
    };
    let app = toxmarket_service::open_app(&config, clock.clone()).unwrap();
    assert_eq!(app.lock().observable(), before);
    drop(app);

    let mut bytes = std::fs::read(&path).unwrap();
    let good = bytes.len();
    bytes.extend(b"{\"seq\":99");
    std::fs::write(&path, &bytes).unwrap();
    let err = toxmarket_service::open_app(&config, clock).err().unwrap().to_string();
    assert!(err.contains(&format!("byte offset {good}")), "{err}");
}

/// Two concurrent trades must end in the state of one serial order.
#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_trades_serialize() {
    async fn setup() -> (TestApp, String, String) {
        let t = TestApp::new(MemoryJournal::new());
        let alice = t.seed().await;
        let bob = t.open("bob").await;
        (t, alice, bob)
    }
    let (a, alice, bob) = setup().await;
    a.trade(&alice, "M1", "HIGHER", 3_000).await;
    a.trade(&bob, "M1", "LOWER", 4_000).await;
    let ab = a.app.lock().observable();
    let (b, alice, bob) = setup().await;
    b.trade(&bob, "M1", "LOWER", 4_000).await;
    b.trade(&alice, "M1", "HIGHER", 3_000).await;
    let ba = b.app.lock().observable();
    assert_ne!(ab, ba);

    for _ in 0..20 {
        let (t, alice, bob) = setup().await;
        let t = std::sync::Arc::new(t);
        let (t1, t2) = (t.clone(), t.clone());
        let h1 = tokio::spawn(async move { t1.trade(&alice, "M1", "HIGHER", 3_000).await.0 });
        let h2 = tokio::spawn(async move { t2.trade(&bob, "M1", "LOWER", 4_000).await.0 });
        assert_eq!(h1.await.unwrap(), StatusCode::OK);
        assert_eq!(h2.await.unwrap(), StatusCode::OK);
        let got = t.app.lock().observable();
        assert!(got == ab || got == ba);
    }
}

fn invalid_trade_body() -> impl Strategy<Value = String> {
    prop_oneof![
        ".{0,40}",
        (any::<i64>().prop_map(|n| n.min(0))).prop_map(|s| json!({"outcome": "HIGHER", "spend_cents": s}).to_string()),
        "[A-Z]{0,6}".prop_filter("real outcome", |o| o != "HIGHER" && o != "LOWER")
            .prop_map(|o| json!({"outcome": o, "spend_cents": 100}).to_string()),
        any::<f64>().prop_map(|s| format!("{{\"outcome\":\"LOWER\",\"spend_cents\":{s:?}}}")),
        Just(json!({"outcome": "HIGHER"}).to_string()),
        Just(json!({"outcome": "HIGHER", "spend_cents": 100, "extra": 1}).to_string()),
        Just(json!({"outcome": "HIGHER", "spend_cents": 2_000_000}).to_string()),
        Just(json!(["HIGHER", 100]).to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invalid_payloads_cause_no_drift(body in invalid_trade_body(), market in prop::sample::select(vec!["M1", "M2", "M7", "A1"])) {
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        rt.block_on(async {
            let t = TestApp::new(MemoryJournal::new());
            let alice = t.seed().await;
            let before = t.app.lock().observable();
            let journaled = t.app.lock().journaled();
            let (s, _): (StatusCode, Value) = t
                .raw(Method::POST, &format!("/markets/{market}/trades"), Some(&alice), Body::from(body), true)
                .await;
            prop_assert!(s.is_client_error(), "status {s}");
            prop_assert_eq!(t.app.lock().observable(), before);
            prop_assert_eq!(t.app.lock().journaled(), journaled);
            prop_assert!(t.app.lock().exchange().check_invariants().is_ok());
            Ok(())
        })?;
    }
}
