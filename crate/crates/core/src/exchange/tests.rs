use proptest::prelude::*;

use super::*;
use crate::lmsr;
use crate::registry::Asset;
use crate::types::{JointOutcome, Outcome};

fn bantry() -> Asset {
    Asset {
        asset_id: "BNT".into(),
        title: "Unfinished property, Bantry".into(),
        county: "Cork".into(),
        latitude: 51.68,
        longitude: -9.45,
        book_value: Cents::from_euros(325_000),
        loan_reference: "LN-1".into(),
        status: AssetStatus::Registered,
    }
}

fn exchange() -> (Exchange, MarketId) {
    let mut ex = Exchange::default();
    ex.registry_mut().insert(bantry()).unwrap();
    let id = ex
        .create_market(&"BNT".into(), Cents::from_euros(250_000), 100.0, Timestamp(1_000), Timestamp(0))
        .unwrap()
        .market_id
        .clone();
    (ex, id)
}

fn alice() -> AccountId {
    "alice".into()
}

#[test]
fn fresh_market_is_even() {
    let (ex, id) = exchange();
    let m = ex.market(&id).unwrap();
    assert_eq!(m.prices(), [0.5, 0.5]);
    assert_eq!(m.state, MarketState::Open);
    assert_eq!(m.book.quantities(), &[0.0, 0.0]);
    assert_eq!(ex.registry().get(&"BNT".into()).unwrap().status, AssetStatus::MarketOpen);
}

#[test]
fn create_market_errors() {
    let (mut ex, _) = exchange();
    let bnt: AssetId = "BNT".into();
    let err = ex.create_market(&bnt, Cents(100), 0.0, Timestamp(10), Timestamp(0)).unwrap_err();
    assert!(matches!(err, ExchangeError::InvalidArgument(_)));
    let err = ex.create_market(&"X".into(), Cents(100), 1.0, Timestamp(10), Timestamp(0)).unwrap_err();
    assert_eq!(err, ExchangeError::UnknownAsset("X".into()));
    assert_eq!(err.class(), ErrorClass::NotFound);
    assert!(ex.create_market(&bnt, Cents(0), 1.0, Timestamp(10), Timestamp(0)).is_err());
    assert!(ex.create_market(&bnt, Cents(1), 1.0, Timestamp(10), Timestamp(10)).is_err());
}

#[test]
fn five_euro_thirteen_trade() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    let t = ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(513), Timestamp(1)).unwrap();

    // d = b ln(1 + 2 (exp(5.13/100) - 1)) at q = (0, 0), b = 100
    let expected = 100.0 * (1.0 + 2.0 * (0.0513f64.exp() - 1.0)).ln();
    assert!((t.shares - expected).abs() < 1e-9);
    assert!((t.shares - 10.009_623_111).abs() < 1e-6);
    assert_eq!(t.cost, Cents(513));
    assert!((t.quoted_cost - 5.13).abs() < 1e-9);
    assert!(t.prices_after[0] > 0.5);

    let a = ex.account(&alice()).unwrap();
    assert_eq!(a.balance, Cents(999_487));
    assert_eq!(a.wagered_in(&id), Cents(513));
    assert_eq!(a.position(&id, 0), t.shares);
    assert_eq!(ex.market(&id).unwrap().book.quantities(), &[t.shares, 0.0]);
    assert_eq!(ex.trades().len(), 1);
    ex.check_invariants().unwrap();
}

#[test]
fn overspend_rejected_without_change() {
    let (mut ex, id) = exchange();
    ex.create_account(alice(), true).unwrap();
    ex.credit_account(&alice(), Cents(100)).unwrap();
    let before = format!("{ex:?}");
    let err = ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(101), Timestamp(1)).unwrap_err();
    assert!(matches!(err, ExchangeError::InsufficientBalance { .. }));
    assert_eq!(format!("{ex:?}"), before);
}

#[test]
fn cap_names_remaining_allowance() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    ex.execute_trade(&alice(), &id, Outcome::Lower, Cents(60_000), Timestamp(1)).unwrap();
    let before = format!("{ex:?}");
    let err = ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(50_000), Timestamp(2)).unwrap_err();
    assert_eq!(err, ExchangeError::WagerCapExceeded { remaining: Cents(40_000) });
    assert!(err.to_string().contains("€400.00"));
    assert_eq!(err.class(), ErrorClass::Conflict);
    assert_eq!(format!("{ex:?}"), before);
    // exactly at the cap is allowed
    ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(40_000), Timestamp(2)).unwrap();
}

#[test]
fn zero_spend_and_closed_market() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    assert!(matches!(
        ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(0), Timestamp(1)),
        Err(ExchangeError::InvalidArgument(_))
    ));
    assert!(matches!(
        ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(10), Timestamp(1_000)),
        Err(ExchangeError::PastCutoff { .. })
    ));
    ex.halt_at_cutoff(&id, Timestamp(1_000)).unwrap();
    assert!(matches!(
        ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(10), Timestamp(5)),
        Err(ExchangeError::MarketNotOpen { .. })
    ));
    assert!(matches!(
        ex.execute_trade(&alice(), &id, JointOutcome::HigherHigher, Cents(10), Timestamp(5)),
        Err(ExchangeError::OutcomeMismatch { .. })
    ));
}

#[test]
fn credit_examples() {
    let mut ex = Exchange::default();
    ex.create_account(alice(), true).unwrap();
    assert_eq!(ex.credit_account(&alice(), Cents(1_000_000)).unwrap(), Cents(1_000_000));
    assert_eq!(ex.account(&alice()).unwrap().balance.to_string(), "€10000.00");
    assert!(ex.credit_account(&alice(), Cents(0)).is_err());
    assert!(matches!(
        ex.credit_account(&"bob".into(), Cents(1)),
        Err(ExchangeError::UnknownAccount(_))
    ));

    let mut two = Exchange::default();
    two.create_account(alice(), true).unwrap();
    two.credit_account(&alice(), Cents(50_000)).unwrap();
    two.credit_account(&alice(), Cents(50_000)).unwrap();
    let mut one = Exchange::default();
    one.create_account(alice(), true).unwrap();
    one.credit_account(&alice(), Cents(100_000)).unwrap();
    assert_eq!(two.account(&alice()).unwrap().balance, one.account(&alice()).unwrap().balance);
    assert_eq!(two.ledger().len(), 2);
}

#[test]
fn duplicate_account_rejected() {
    let mut ex = Exchange::default();
    ex.open_account(alice(), true).unwrap();
    assert!(matches!(ex.open_account(alice(), true), Err(ExchangeError::DuplicateAccount(_))));
}

// A failure between planning and committing (e.g. the journal write fails)
// must leave every piece of state untouched.
#[test]
fn abandoned_plan_changes_nothing() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    let before = format!("{ex:?}");
    let plan = ex.plan_trade(&alice(), &id, Outcome::Higher, Cents(2_500), Timestamp(1)).unwrap();
    assert!(plan.shares > 0.0);
    let injected: Result<(), &str> = Err("journal write failed");
    if injected.is_ok() {
        ex.commit_trade(plan).unwrap();
    }
    assert_eq!(format!("{ex:?}"), before);
}

#[test]
fn stale_plan_is_refused() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    ex.open_account("bob".into(), true).unwrap();
    let plan = ex.plan_trade(&alice(), &id, Outcome::Higher, Cents(500), Timestamp(1)).unwrap();
    ex.execute_trade(&"bob".into(), &id, Outcome::Lower, Cents(500), Timestamp(1)).unwrap();
    let before = format!("{ex:?}");
    assert_eq!(ex.commit_trade(plan), Err(ExchangeError::StalePlan(id)));
    assert_eq!(format!("{ex:?}"), before);
}

#[test]
fn trade_log_export() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    ex.execute_trade(&alice(), &id, Outcome::Higher, Cents(513), Timestamp(7)).unwrap();
    let mut out = Vec::new();
    write_trade_log(&mut out, ex.trades()).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trade_id,account_id,market_id,outcome,shares,cost_cents,timestamp"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..4], ["T000001", "alice", "M1", "HIGHER"]);
    assert_eq!(row[5..], ["513", "7"]);
}

#[test]
fn quote_spend_matches_execution() {
    let (mut ex, id) = exchange();
    ex.open_account(alice(), true).unwrap();
    let (shares, prices) = ex.quote_spend(&id, Outcome::Lower.into(), Cents(2_000)).unwrap();
    let t = ex.execute_trade(&alice(), &id, Outcome::Lower, Cents(2_000), Timestamp(1)).unwrap();
    assert_eq!(shares, t.shares);
    assert_eq!(prices, t.prices_after);
}

#[test]
fn round_up_cents_behaviour() {
    assert_eq!(round_up_cents(5.13), Cents(513));
    assert_eq!(round_up_cents(5.1301), Cents(514));
    assert_eq!(round_up_cents(5.124948), Cents(513));
}

fn ladder_exchange(n_accounts: usize) -> (Exchange, MarketId) {
    let mut ex = Exchange::new(ExchangeConfig {
        wager_cap_cents: Cents(10_000_000),
        ..ExchangeConfig::default()
    });
    ex.registry_mut().insert(bantry()).unwrap();
    let id = ex
        .create_market(&"BNT".into(), Cents(100), 50.0, Timestamp(1_000), Timestamp(0))
        .unwrap()
        .market_id
        .clone();
    for i in 0..n_accounts {
        ex.open_account(AccountId(format!("a{i}")), true).unwrap();
    }
    (ex, id)
}

proptest! {
    #[test]
    fn invariants_hold_over_trade_sequences(
        trades in prop::collection::vec((0usize..3, any::<bool>(), 1i64..20_000), 1..40)
    ) {
        let (mut ex, id) = ladder_exchange(3);
        let q0 = ex.market(&id).unwrap().book.quantities().to_vec();
        let mut quoted = 0.0;
        for (who, higher, spend) in trades {
            let outcome = if higher { Outcome::Higher } else { Outcome::Lower };
            let before = ex.market(&id).unwrap().prices();
            let t = ex.execute_trade(&AccountId(format!("a{who}")), &id, outcome, Cents(spend), Timestamp(1)).unwrap();
            quoted += t.quoted_cost;
            let after = ex.market(&id).unwrap().prices();
            prop_assert!(after[outcome.index()] > before[outcome.index()]);
            prop_assert!(after[outcome.opposite().index()] < before[outcome.opposite().index()]);
            prop_assert!((after.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            ex.check_invariants().map_err(TestCaseError::fail)?;
        }
        let q1 = ex.market(&id).unwrap().book.quantities().to_vec();
        let direct = lmsr::cost(&q1, 50.0) - lmsr::cost(&q0, 50.0);
        prop_assert!((quoted - direct).abs() <= 1e-9, "{quoted} vs {direct}");

        ex.halt_at_cutoff(&id, Timestamp(1_000)).unwrap();
        let report = ex.resolve_and_settle(&id, Cents(200), Timestamp(1_000)).unwrap();
        ex.check_invariants().map_err(TestCaseError::fail)?;
        let winning: f64 = q1[0];
        prop_assert!(winning - quoted <= 50.0 * 2f64.ln() + 1e-9);
        let paid = report.total_paid();
        let holders = report.payouts().len() as i64;
        prop_assert!(paid.0 as f64 <= winning * 100.0 + holders as f64 + 1e-6);
    }
}
