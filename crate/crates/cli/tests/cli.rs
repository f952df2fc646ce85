use std::process::{Command, Output};

fn netcom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn catalog_build_then_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cat.txt");
    let o = netcom(&["catalog", "build", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("pnc-catalog 1"));
    let o = netcom(&["catalog", "check", "--catalog", path.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("top halves resolving: 25/25"), "{out}");
    assert!(out.contains("structure (rank 4, decode round trip): ok"));
    assert_eq!(out.lines().filter(|l| l.starts_with('M')).count(), 25);
}

#[test]
fn corrupt_catalog_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "pnc-catalog 1\nlabeling 1 2\n").unwrap();
    let o = netcom(&["catalog", "check", "--catalog", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn ser_run_writes_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = netcom(&[
            "ser",
            "run",
            "--ebno",
            "10:10:20",
            "--trials",
            "16",
            "--seed",
            "4",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{o:?}");
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ebno_db,symbols,errors,ser,ci_halfwidth,baseline_ser,fallback_rate,stall_rate,ue1_ser,ue2_ser,trials"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "ebno_db = [30.0]\ntrials = 1000\nseed = 2\n").unwrap();
    let o = netcom(&[
        "comp",
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "16",
        "--ebno",
        "5",
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("5.0,3072,"), "{row}");
    assert!(row.ends_with(",16"), "{row}");
}

#[test]
fn usage_errors() {
    let o = netcom(&["ser", "run", "--trials", "5", "--error-events", "5"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "ebno_dB = [1.0]\n").unwrap();
    let o = netcom(&["ser", "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ebno_dB"));

    std::fs::write(&cfg, "trials = 4\nerror_events = 4\n").unwrap();
    let o = netcom(&["ser", "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = netcom(&["ser", "run", "--ebno", "0:0:5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = netcom(&["ser", "run", "--h1", "1+2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constellation_dump_for_logged_case() {
    let o = netcom(&[
        "dump",
        "constellation",
        "--h1",
        "1+0i,0-1i",
        "--h2",
        "0.7+0.2i,0+0i",
    ]);
    assert!(o.status.success(), "{o:?}");
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ap1: sfs 3 mapping 11"), "{err}");
    assert!(err.contains("ap2: sfs 1 mapping 11"), "{err}");
    assert!(err.contains("ncv classes 4"));
    assert_eq!(stdout(&o).lines().count(), 33);
}

#[test]
fn channel_dump_lists_used_carriers() {
    let o = netcom(&[
        "dump", "channels", "--ebno", "30", "--ap", "2", "--trial", "3",
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.starts_with("carrier,est_h1_re"));
    assert_eq!(out.lines().count(), 49);
}

#[test]
fn trace_round_logs_protocol_events() {
    let o = netcom(&["trace", "round", "--ebno", "20", "--rounds", "2"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    for kind in [
        " sfs ap1 hub ",
        " mapping hub ap1 ",
        " data ap2 hub ",
        " decode hub ",
    ] {
        assert!(out.contains(kind), "missing '{kind}' in\n{out}");
    }
    assert!(out.contains("round=1"));
}

#[test]
fn trace_shows_fallback_under_loss() {
    let o = netcom(&[
        "trace",
        "round",
        "--ebno",
        "30",
        "--rounds",
        "12",
        "--loss",
        "0.6",
        "--replication",
        "1",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains(" drop-"), "{out}");
    assert!(
        out.contains(" timeout ") || out.contains(" stall "),
        "{out}"
    );
}
