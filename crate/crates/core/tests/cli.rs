use std::fs;
use std::path::Path;
use std::process::Command;

use powersharing::cli::run;
use powersharing::Panel;

fn args(dir: &Path, list: &[&str]) -> Vec<String> {
    let mut v = vec!["powersharing".to_string()];
    v.extend(list.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(dir.display().to_string());
    v
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const EPR: &str = "\
gwid,groupid,group,from,to,size,status
500,50001,Baganda,1946,1990,0.17,SENIOR PARTNER
500,50001,Baganda,1991,2017,0.17,POWERLESS
500,50002,Langi,1946,2017,0.06,JUNIOR PARTNER
500,50003,Acholi,1946,2017,0.04,POWERLESS
501,50101,Kikuyu,1946,2017,0.2,DOMINANT
501,50102,Luo,1946,2017,0.13,JUNIOR PARTNER
501,50103,Kamba,1946,2017,0.11,POWERLESS
502,50201,Hausa,1946,2017,0.3,SENIOR PARTNER
502,50202,Igbo,1946,2017,0.18,JUNIOR PARTNER
502,50203,Ijaw,1946,2017,0.02,DISCRIMINATED
";

#[test]
fn sweep_writes_curves_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(args(dir.path(), &["sweep", "--thresholds", "--phase", "5"])), 0);
    let csv = read(dir.path(), "sweep.csv");
    assert!(csv.starts_with("delta,f,h,p1,payoff_share,payoff_limit,grants_access"));
    assert_eq!(csv.lines().count(), 100);
    let t: serde_json::Value = serde_json::from_str(&read(dir.path(), "thresholds.json")).unwrap();
    assert!((t["delta_star"].as_f64().unwrap() - 0.683_772_233_983_162).abs() < 1e-12);
    for f in ["sweep.svg", "phase.csv", "phase.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn synth_is_deterministic_and_estimates() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["synth", "--countries", "60", "--mode", "quadratic", "--seed", "4"];
    assert_eq!(run(args(a.path(), &flags)), 0);
    assert_eq!(run(args(b.path(), &flags)), 0);
    for f in ["panel.csv", "truth.json", "truth_report.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let panel = a.path().join("panel.csv").display().to_string();
    assert_eq!(run(args(a.path(), &["estimate", "--panel", &panel, "--spec-ladder", "1,4"])), 0);
    let results = read(a.path(), "results.csv");
    assert!(results.lines().any(|l| l.starts_with("contemporaneous,4,,ols,size,")));
    let json = a.path().join("results.json").display().to_string();
    assert_eq!(run(args(a.path(), &["report", "--results", &json])), 0);
    assert!(read(a.path(), "report.md").contains("| size² |"));
}

#[test]
fn ingest_then_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let epr = dir.path().join("epr.csv");
    fs::write(&epr, EPR).unwrap();
    let mut polity = String::from("ccode,year,xropen,xrcomp\n");
    for year in 1946..=2017 {
        polity.push_str(&format!("500,{year},4,2\n501,{year},{},1\n502,{year},4,3\n", if year % 2 == 0 { 4 } else { 1 }));
    }
    let pol = dir.path().join("polity.csv");
    fs::write(&pol, polity).unwrap();
    let code = run(args(dir.path(), &["ingest", "--epr", &epr.display().to_string(), "--polity", &pol.display().to_string(), "--restrict"]));
    assert_eq!(code, 0);
    let panel = Panel::read_csv(fs::File::open(dir.path().join("panel.csv")).unwrap()).unwrap();
    assert!(panel.rows.iter().all(|r| r.access <= 2.0));
    assert!(panel.rows.iter().all(|r| r.high_openness.is_some()));
    assert!(read(dir.path(), "validation.txt").contains("restricted"));

    let p = dir.path().join("panel.csv").display().to_string();
    assert_eq!(run(args(dir.path(), &["replicate", "--panel", &p, "--spec-ladder", "1-2"])), 0);
    assert!(read(dir.path(), "summary.txt").lines().count() > 1);
    assert!(dir.path().join("figure_size_access.svg").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Parameter errors.
    assert_eq!(run(args(dir.path(), &["sweep", "--lambda", "1.5"])), 2);
    assert_eq!(run(args(dir.path(), &["sweep", "--lambda", "0.5", "--a1", "2", "--thresholds"])), 2);
    assert_eq!(run(args(dir.path(), &["synth", "--countries", "0"])), 2);
    assert_eq!(run(["powersharing", "sweep", "--no-such-flag"]), 2);
    // Schema and I/O errors.
    let missing = dir.path().join("nope.csv").display().to_string();
    assert_eq!(run(args(dir.path(), &["estimate", "--panel", &missing])), 3);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "group_id,country_id,period,access\ng,c,1,1\n").unwrap();
    assert_eq!(run(args(dir.path(), &["estimate", "--panel", &bad.display().to_string()])), 3);
    let epr = dir.path().join("epr.csv");
    fs::write(&epr, "gwid,groupid,from,to,size,status\n1,2,1950,1960,0.1,POWERLESS\n").unwrap();
    assert_eq!(run(args(dir.path(), &["ingest", "--epr", &epr.display().to_string()])), 3);
    // Help is not an error.
    assert_eq!(run(["powersharing", "--help"]), 0);
}

#[test]
fn binary_prefixes_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_powersharing")).args(["sweep", "--gamma", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().any(|l| l.starts_with("error: ")), "{stderr}");
}
