use std::path::Path;
use std::process::{Command, Output};

fn toxmarket(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toxmarket"))
        .args(args)
        .current_dir(dir)
        .env_remove("TOXMARKET_JOURNAL")
        .env_remove("TOXMARKET_ADMIN_TOKEN")
        .env_remove("TOXMARKET_PORT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ingest_propose_and_settle_share_the_journal() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("assets.csv"),
        "asset_id,title,county,latitude,longitude,book_value_cents,loan_reference\n\
A1,Cork house,Cork,51.8985,-8.4756,25000000,L-1\n\
A2,bad,Cork,99,0,1,L-2\n",
    )
    .unwrap();
    let out = stdout(&toxmarket(&["ingest", "assets.csv", "--journal", "j.log"], dir.path()));
    assert!(out.contains("accepted A1"), "{out}");
    assert!(out.contains("rejected line 3"), "{out}");

    // No markets yet, so nothing to pair.
    let out = stdout(&toxmarket(&["propose-pairs", "--radius-km", "50", "--journal", "j.log"], dir.path()));
    assert_eq!(out.trim(), "asset_a,asset_b,distance_km");

    let o = toxmarket(&["settle", "M1", "--announced-cents", "100", "--journal", "j.log"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown market"));

    // Re-ingesting the same id is a rejected duplicate, proving replay ran.
    std::fs::write(
        dir.path().join("again.csv"),
        "asset_id,title,county,latitude,longitude,book_value_cents,loan_reference\nA1,x,Cork,51,-8,1,L\n",
    )
    .unwrap();
    let out = stdout(&toxmarket(&["ingest", "again.csv", "--journal", "j.log"], dir.path()));
    assert!(out.contains("rejected line 2"), "{out}");
}

#[test]
fn corrupt_journal_is_refused_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let good = "{\"seq\":1,\"event\":{\"type\":\"markets_halted\",\"now\":0}}\n";
    std::fs::write(dir.path().join("j.log"), format!("{good}garbage\n")).unwrap();
    let o = toxmarket(&["propose-pairs", "--radius-km", "1", "--journal", "j.log"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("byte offset {}", good.len())), "{err}");
}

#[test]
fn optimize_prints_solution_and_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("basket.txt"), "2,1000\n0,1000,500\n1,1000,500\n0,1,-1500\n").unwrap();
    let out = stdout(&toxmarket(
        &["optimize", "basket.txt", "--time-limit-ms", "1000", "--model", "model.txt"],
        dir.path(),
    ));
    let sol: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(sol["objective"], 1000);
    assert_eq!(sol["proof"]["status"], "OPTIMAL");
    let model = std::fs::read_to_string(dir.path().join("model.txt")).unwrap();
    assert!(model.contains("<="), "{model}");
}

#[test]
fn simulate_exports_rounds_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sim.toml"), "rounds = 20\nn_informed = 5\n").unwrap();
    let out = stdout(&toxmarket(&["simulate", "--config", "sim.toml", "--seed", "3"], dir.path()));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("round,threshold_cents,p_higher"));
    assert_eq!(out.lines().filter(|l| l.starts_with("19,")).count(), 5);
    assert!(out.contains("ledger_conserved,true"));

    let out = stdout(&toxmarket(
        &["simulate", "--config", "sim.toml", "--shock-round", "10", "--new-price", "290000"],
        dir.path(),
    ));
    assert!(out.contains("shock_round,10"));

    let out = stdout(&toxmarket(&["simulate", "--config", "sim.toml", "--manipulation"], dir.path()));
    assert!(out.contains("mean_displacement,"));

    assert!(!toxmarket(&["simulate", "--shock-round", "10"], dir.path()).status.success());
}
