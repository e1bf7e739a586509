//! Axum routes. Each handler validates input, submits at most one event,
//! and maps module errors onto status codes (see [`ApiError`]).

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use toxmarket_core::geo::GeoPoint;
use toxmarket_core::types::TradeOutcome;
use toxmarket_core::{AccountId, AssetId, Cents, MarketId, Timestamp};

use crate::clock::Clock;
use crate::error::ApiError;
use crate::journal::IdempotencyTag;
use crate::session::ApiSession;
use crate::state::{Event, ServiceState, ADMIN_SCOPE};
use crate::views::{AccountView, CurveView, JointView, MarketView, QuoteView};

pub const DEFAULT_GUIDELINES: &str = "# Valuation guidelines\n\n\
This slot holds the valuation guidelines that participants should read before \
trading. The operator configures the document with `guidelines_path`.\n";

#[derive(Clone)]
pub struct AppState {
    pub state: Arc<Mutex<ServiceState>>,
    pub clock: Arc<dyn Clock>,
    pub admin_token: Arc<str>,
    pub session_ttl_secs: i64,
    pub guidelines: Arc<str>,
}

impl AppState {
    pub fn new(state: ServiceState, clock: Arc<dyn Clock>, admin_token: &str, session_ttl_secs: i64) -> Self {
        Self {
            state: Arc::new(Mutex::new(state)),
            clock,
            admin_token: admin_token.into(),
            session_ttl_secs,
            guidelines: DEFAULT_GUIDELINES.into(),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, ServiceState> {
        // A panic mid-request cannot leave half-applied state: commits are
        // infallible once journaled, so the data is still consistent.
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/assets", get(list_assets))
        .route("/assets/nearby", get(nearby_assets))
        .route("/assets/{id}/curve", get(asset_curve))
        .route("/markets", get(list_markets))
        .route("/markets/{id}", get(get_market))
        .route("/markets/{id}/quote", get(quote))
        .route("/markets/{id}/trades", post(trade))
        .route("/accounts", post(open_account))
        .route("/accounts/{id}", get(get_account))
        .route("/accounts/{id}/credit", post(credit_account))
        .route("/sessions", post(issue_session))
        .route("/joint-markets", get(list_joint_markets))
        .route("/joint-markets/proposals", get(pair_proposals))
        .route("/admin/assets", post(ingest_assets))
        .route("/admin/markets", post(create_market))
        .route("/admin/joint-markets", post(create_joint_market))
        .route("/admin/settle", post(settle))
        .route("/docs/guidelines", get(guidelines))
        .with_state(app)
}

type ApiResult<T> = Result<T, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::Invalid(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::Invalid(e.body_text()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn require_admin(app: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    match bearer(headers) {
        Some(t) if !app.admin_token.is_empty() && t == &*app.admin_token => Ok(()),
        Some(_) => Err(ApiError::Unauthorized("admin token required".into())),
        None => Err(ApiError::Unauthorized("missing bearer token".into())),
    }
}

/// Who is calling: the admin, or the account behind a live session.
enum Caller {
    Admin,
    Account(AccountId),
}

fn caller(app: &AppState, state: &ServiceState, headers: &HeaderMap, now: Timestamp) -> ApiResult<Caller> {
    let token = bearer(headers).ok_or_else(|| ApiError::Unauthorized("missing bearer token".into()))?;
    if !app.admin_token.is_empty() && token == &*app.admin_token {
        return Ok(Caller::Admin);
    }
    Ok(Caller::Account(state.authenticate(token, now)?.account_id.clone()))
}

fn idempotency_key(headers: &HeaderMap, in_body: Option<String>) -> Option<String> {
    in_body.or_else(|| {
        headers
            .get("idempotency-key")
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned)
    })
}

fn tag(scope: &str, key: Option<String>, fingerprint: String) -> Option<IdempotencyTag> {
    key.map(|key| IdempotencyTag {
        scope: scope.to_owned(),
        key,
        fingerprint,
    })
}

async fn list_assets(State(app): State<AppState>) -> Json<Value> {
    let s = app.lock();
    Json(json!(s.exchange().registry().iter().collect::<Vec<_>>()))
}

#[derive(Deserialize)]
struct NearbyQuery {
    lat: f64,
    lon: f64,
    radius_km: f64,
}

async fn nearby_assets(State(app): State<AppState>, q: Result<Query<NearbyQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let q = query(q)?;
    let center = GeoPoint::new(q.lat, q.lon).map_err(|e| ApiError::Invalid(e.to_string()))?;
    let s = app.lock();
    let hits = s
        .exchange()
        .registry()
        .nearby(center, q.radius_km)
        .map_err(|e| ApiError::Invalid(e.to_string()))?;
    let out: Vec<Value> = hits
        .into_iter()
        .map(|(a, d)| json!({ "asset": a, "distance_km": d }))
        .collect();
    Ok(Json(json!(out)))
}

async fn asset_curve(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CurveView>> {
    let s = app.lock();
    let curve = s.exchange().implied_curve(&AssetId::new(id))?;
    Ok(Json(CurveView::of(curve)))
}

async fn list_markets(State(app): State<AppState>) -> Json<Vec<MarketView>> {
    let s = app.lock();
    let ex = s.exchange();
    Json(ex.markets().map(|m| MarketView::of(ex, m)).collect())
}

async fn get_market(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<MarketView>> {
    let s = app.lock();
    let ex = s.exchange();
    let m = ex.market(&MarketId::new(id))?;
    Ok(Json(MarketView::of(ex, m)))
}

#[derive(Deserialize)]
struct QuoteQuery {
    outcome: TradeOutcome,
    spend_cents: i64,
}

async fn quote(
    State(app): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<QuoteQuery>, QueryRejection>,
) -> ApiResult<Json<QuoteView>> {
    let q = query(q)?;
    let id = MarketId::new(id);
    let s = app.lock();
    let ex = s.exchange();
    let prices_before = match ex.market(&id) {
        Ok(m) => m.prices().to_vec(),
        Err(_) => ex.joint_market(&id)?.prices().to_vec(),
    };
    let (shares, prices_after) = ex.quote_spend(&id, q.outcome, Cents(q.spend_cents))?;
    Ok(Json(QuoteView {
        market_id: id,
        spend_cents: q.spend_cents,
        shares,
        prices_before,
        prices_after,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TradeRequest {
    outcome: TradeOutcome,
    spend_cents: i64,
    idempotency_key: Option<String>,
}

async fn trade(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<TradeRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let req = body(payload)?;
    let now = app.clock.now();
    let mut s = app.lock();
    let account_id = match caller(&app, &s, &headers, now)? {
        Caller::Account(a) => a,
        Caller::Admin => return Err(ApiError::Invalid("trades are placed with a participant token".into())),
    };
    s.tick(now)?;
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("trade {id} {} {}", req.outcome, req.spend_cents);
    let event = Event::TradeExecuted {
        account_id: account_id.clone(),
        market_id: MarketId::new(id),
        outcome: req.outcome,
        spend: Cents(req.spend_cents),
        now,
    };
    Ok(Json(s.submit(event, tag(account_id.as_str(), key, fingerprint))?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenAccountRequest {
    account_id: String,
    adult_attested: bool,
    /// Defaults to the configured starting balance.
    starting_balance_cents: Option<i64>,
    idempotency_key: Option<String>,
}

async fn open_account(
    State(app): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<OpenAccountRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let now = app.clock.now();
    let mut s = app.lock();
    let start = req
        .starting_balance_cents
        .map(Cents)
        .unwrap_or(s.exchange().config().starting_balance_cents);
    let account_id = AccountId::new(req.account_id);
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("open {account_id} {} {}", req.adult_attested, start.0);
    let event = Event::AccountOpened {
        session: ApiSession::issue(account_id.clone(), now, app.session_ttl_secs),
        account_id,
        adult_attested: req.adult_attested,
        starting_balance: start,
    };
    let out = s.submit(event, tag(ADMIN_SCOPE, key, fingerprint))?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn get_account(State(app): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Json<AccountView>> {
    let now = app.clock.now();
    let s = app.lock();
    let id = AccountId::new(id);
    if let Caller::Account(own) = caller(&app, &s, &headers, now)? {
        if own != id {
            return Err(ApiError::Unauthorized("token does not belong to this account".into()));
        }
    }
    let ex = s.exchange();
    Ok(Json(AccountView::of(ex, ex.account(&id)?)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreditRequest {
    amount_cents: i64,
    idempotency_key: Option<String>,
}

async fn credit_account(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<CreditRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let mut s = app.lock();
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("credit {id} {}", req.amount_cents);
    let event = Event::AccountCredited {
        account_id: AccountId::new(id),
        amount: Cents(req.amount_cents),
    };
    Ok(Json(s.submit(event, tag(ADMIN_SCOPE, key, fingerprint))?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionRequest {
    account_id: String,
}

async fn issue_session(
    State(app): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<SessionRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let now = app.clock.now();
    let mut s = app.lock();
    let session = ApiSession::issue(AccountId::new(req.account_id), now, app.session_ttl_secs);
    let out = s.submit(Event::SessionIssued { session }, None)?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn list_joint_markets(State(app): State<AppState>) -> Json<Vec<JointView>> {
    let s = app.lock();
    Json(s.exchange().joint_markets().map(JointView::of).collect())
}

#[derive(Deserialize)]
struct ProposalQuery {
    radius_km: f64,
    max: usize,
}

async fn pair_proposals(State(app): State<AppState>, q: Result<Query<ProposalQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    let q = query(q)?;
    if !(q.radius_km >= 0.0) {
        return Err(ApiError::Invalid("radius_km must be non-negative".into()));
    }
    let s = app.lock();
    Ok(Json(json!(s.exchange().propose_pairs(q.radius_km, q.max))))
}

async fn ingest_assets(State(app): State<AppState>, headers: HeaderMap, csv: String) -> ApiResult<Json<Value>> {
    require_admin(&app, &headers)?;
    let mut s = app.lock();
    let (event, report) = ingest_event(s.registry(), csv.as_bytes())?;
    if let Some(event) = event {
        s.submit(event, None)?;
    }
    if report.rejected.is_empty() {
        Ok(Json(json!(report)))
    } else {
        Err(ApiError::Rejected(json!(report)))
    }
}

/// Validates an asset file against `registry` and builds the ingest event
/// for the accepted records (none if nothing was accepted).
pub fn ingest_event(
    registry: &toxmarket_core::AssetRegistry,
    input: &[u8],
) -> ApiResult<(Option<Event>, toxmarket_core::registry::IngestReport)> {
    let mut scratch = registry.clone();
    let report = scratch.ingest(input).map_err(|e| ApiError::Invalid(e.to_string()))?;
    let assets: Vec<_> = report
        .accepted
        .iter()
        .filter_map(|id| scratch.get(id).cloned())
        .collect();
    let event = (!assets.is_empty()).then_some(Event::AssetsIngested { assets });
    Ok((event, report))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateMarketRequest {
    asset_id: String,
    threshold_cents: i64,
    cutoff: i64,
    b: Option<f64>,
    idempotency_key: Option<String>,
}

async fn create_market(
    State(app): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<CreateMarketRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let now = app.clock.now();
    let mut s = app.lock();
    let b = req.b.unwrap_or(s.exchange().config().default_b);
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("market {} {} {} {b}", req.asset_id, req.threshold_cents, req.cutoff);
    let event = Event::MarketCreated {
        asset_id: AssetId::new(req.asset_id),
        threshold: Cents(req.threshold_cents),
        b,
        cutoff: Timestamp(req.cutoff),
        now,
    };
    let out = s.submit(event, tag(ADMIN_SCOPE, key, fingerprint))?;
    Ok((StatusCode::CREATED, Json(out)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateJointRequest {
    event_a: String,
    event_b: String,
    b: Option<f64>,
    idempotency_key: Option<String>,
}

async fn create_joint_market(
    State(app): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<CreateJointRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let mut s = app.lock();
    let b = req.b.unwrap_or(s.exchange().config().default_b);
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("joint {} {} {b}", req.event_a, req.event_b);
    let event = Event::JointMarketCreated {
        event_a: MarketId::new(req.event_a),
        event_b: MarketId::new(req.event_b),
        b,
    };
    let out = s.submit(event, tag(ADMIN_SCOPE, key, fingerprint))?;
    Ok((StatusCode::CREATED, Json(out)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SettleRequest {
    market_id: String,
    announced_cents: i64,
    idempotency_key: Option<String>,
}

async fn settle(
    State(app): State<AppState>,
    headers: HeaderMap,
    payload: Result<Json<SettleRequest>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    require_admin(&app, &headers)?;
    let req = body(payload)?;
    let now = app.clock.now();
    let mut s = app.lock();
    s.tick(now)?;
    let key = idempotency_key(&headers, req.idempotency_key);
    let fingerprint = format!("settle {} {}", req.market_id, req.announced_cents);
    let event = Event::MarketSettled {
        market_id: MarketId::new(req.market_id),
        announced: Cents(req.announced_cents),
        now,
    };
    Ok(Json(s.submit(event, tag(ADMIN_SCOPE, key, fingerprint))?))
}

async fn guidelines(State(app): State<AppState>) -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
        app.guidelines.to_string(),
    )
}
