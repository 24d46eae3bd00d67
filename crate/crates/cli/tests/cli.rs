use std::process::{Command, Output};

use rfmems_match::{parse_netlist, ElementKind};
use serde_json::Value;

fn rfmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfmatch"))
        .args(args)
        .output()
        .expect("spawn rfmatch")
}

fn stdout_of(args: &[&str]) -> String {
    let out = rfmatch(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_of(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_of(args)).unwrap()
}

#[test]
fn netlist_round_trips() {
    for mode in ["ideal", "lumped"] {
        let text = stdout_of(&["netlist", "--mode", mode]);
        let net = parse_netlist(&text).unwrap();
        assert_eq!(net.n_ports(), 2);
        assert_eq!(net.n_bits(), 11);
        assert_eq!(net.to_string(), text);
    }
}

#[test]
fn lumped_netlist_has_decoupling_caps() {
    let text = stdout_of(&["netlist", "--mode", "lumped"]);
    let net = parse_netlist(&text).unwrap();
    for label in ["CDA", "CDB"] {
        assert_eq!(
            net.element(label).map(|e| &e.kind),
            Some(&ElementKind::Capacitor {
                c: 6e-12,
                q: None,
                ron: None
            })
        );
    }
    assert!(!stdout_of(&["netlist"]).contains("CDA"));
}

#[test]
fn netlist_word_fixes_switches_high() {
    let net = parse_netlist(&stdout_of(&[
        "netlist", "--word", "2047", "--mode", "lumped",
    ]))
    .unwrap();
    assert!(net.elements().iter().all(|e| !matches!(
        e.kind,
        ElementKind::SwitchedCapacitor { .. } | ElementKind::Relay { .. }
    )));
    let c = |label: &str| match net.element(label).unwrap().kind {
        ElementKind::Capacitor { c, .. } => c,
        ref k => panic!("{label}: {k:?}"),
    };
    assert_eq!(c("CSH1"), 6.5e-12);
    assert_eq!(c("CS4"), 7e-12);
    assert_eq!(c("CPH1A"), 3.14e-12);
    assert_eq!(c("CPH2B"), 7.14e-12);
    assert_eq!(c("C2VA"), 5.5e-12);
}

#[test]
fn enumerate_row_counts() {
    assert_eq!(stdout_of(&["enumerate"]).lines().count(), 2049);
    assert_eq!(
        stdout_of(&["enumerate", "--bits", "0-7"]).lines().count(),
        257
    );
    let sweep = stdout_of(&["enumerate", "--bits", "8-10", "--sweep", "600M,620M,640M"]);
    assert_eq!(sweep.lines().count(), 1 + 8 * 3);
}

#[test]
fn enumerate_is_reproducible() {
    let a = stdout_of(&["enumerate", "--mode", "lumped"]);
    let b = stdout_of(&["enumerate", "--mode", "lumped", "--threads", "1"]);
    assert_eq!(a, b);
}

#[test]
fn enumerate_json_matches_csv() {
    let csv = stdout_of(&["enumerate", "--bits", "0-1"]);
    let json = json_of(&["enumerate", "--bits", "0-1", "--format", "json"]);
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), csv.lines().count() - 1);
    let first: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(rows[1]["word"], 1);
    let re_s11: f64 = first[2].parse().unwrap();
    assert_eq!(rows[1]["s11"][0].as_f64().unwrap(), re_s11);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("states.csv");
    let out = rfmatch(&[
        "enumerate",
        "--bits",
        "0-7",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 257);
}

#[test]
fn coverage_report() {
    let full = json_of(&["coverage"]);
    let pi = json_of(&["coverage", "--bits", "0-7"]);
    assert!(full["max_radius"].as_f64().unwrap() <= 1.0);
    assert!(full["phase_span_deg"].as_f64().is_some());
    assert!(full["grid_coverage"].as_f64().unwrap() >= pi["grid_coverage"].as_f64().unwrap());
    assert!(full.get("points").is_none());
    let with_points = json_of(&["coverage", "--bits", "0-2", "--points"]);
    assert_eq!(with_points["points"].as_array().unwrap().len(), 8);
}

#[test]
fn tune_matched_load() {
    let r = json_of(&["tune", "--load", "50+0j", "--lossless"]);
    assert!(r["objective_value"].as_f64().unwrap() < 0.1);
    assert_eq!(r["evaluations"], 2048);
}

#[test]
fn tune_greedy_is_seeded() {
    let args = [
        "tune",
        "--load",
        "25-40j",
        "--greedy",
        "--restarts",
        "4",
        "--seed",
        "7",
    ];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn tune_gain_objective() {
    let r = json_of(&[
        "tune",
        "--load",
        "10+30j",
        "--objective",
        "max_transducer_gain",
    ]);
    assert_eq!(r["objective"], "max_transducer_gain");
    let g = r["transducer_gain"].as_f64().unwrap();
    assert_eq!(r["objective_value"].as_f64().unwrap(), g);
    assert!(g > 0.0 && g <= 1.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["tune", "--load", "25-j40"][..],
        &["tune", "--load", "fifty"],
        &["tune", "--load", "-5+0j"],
        &["enumerate", "--bits", "12"],
        &["enumerate", "--freq", "0"],
        &["netlist", "--word", "4096"],
        &["coverage", "--format", "csv"],
        &["loss-sweep", "--q-l-grid", "0"],
        &["enumerate", "--config", "/nonexistent/rfmatch.conf"],
        &["frobnicate"],
    ] {
        let out = rfmatch(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "mode = lumped\nfreq = 600MHz\n").unwrap();
    let conf = conf.to_str().unwrap();
    let from_file = stdout_of(&["enumerate", "--bits", "8", "--config", conf]);
    assert!(from_file
        .lines()
        .nth(1)
        .unwrap()
        .contains(",6.0000000000000000e8,"));
    let flags = stdout_of(&[
        "enumerate",
        "--bits",
        "8",
        "--mode",
        "lumped",
        "--freq",
        "600M",
    ]);
    assert_eq!(from_file, flags);
    let overridden = stdout_of(&[
        "enumerate",
        "--bits",
        "8",
        "--config",
        conf,
        "--freq",
        "620M",
    ]);
    assert!(overridden
        .lines()
        .nth(1)
        .unwrap()
        .contains(",6.2000000000000000e8,"));
}

#[test]
fn loss_sweep_lossless_row_is_unity() {
    let csv = stdout_of(&["loss-sweep", "--lossless"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("q_l,q_c,r_on,c_off,radius_ratio"));
    let ratio: f64 = lines
        .next()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(ratio, 1.0);
}

#[test]
fn loss_sweep_grid_is_monotone_in_q_l() {
    let csv = stdout_of(&["loss-sweep", "--q-l-grid", "10,30,100"]);
    let ratios: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");
}

#[test]
fn phase_span_reports() {
    let ideal = json_of(&["phase-span", "--lossless"]);
    assert_eq!(ideal["span"]["phases_deg"].as_array().unwrap().len(), 8);
    assert!(ideal.get("calibration").is_none());
    for m in ideal["span"]["magnitudes"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    let load_only = json_of(&["phase-span", "--lossless", "--bits", "8,9"]);
    assert_eq!(load_only["span"]["words"].as_array().unwrap().len(), 4);

    let out = rfmatch(&["phase-span", "--mode", "lumped"]);
    assert!(out.status.success());
    let lumped: Value = serde_json::from_slice(&out.stdout).unwrap();
    let span = lumped["span"]["span_deg"].as_f64().unwrap();
    let missed = (span - 340.0).abs() > 40.0;
    assert_eq!(lumped.get("calibration").is_some(), missed);
    assert_eq!(!out.stderr.is_empty(), missed);
}

#[test]
fn frequency_units_are_normalized() {
    let a = stdout_of(&["tune", "--load", "25-40j", "--freq", "620e6"]);
    assert_eq!(
        a,
        stdout_of(&["tune", "--load", "25-40j", "--freq", "0.62GHz"])
    );
    assert_eq!(
        a,
        stdout_of(&["tune", "--load", "25-40j", "--freq", "620MHz"])
    );
}

#[test]
fn tuned_word_is_certified_by_rescan() {
    use num_complex::Complex64;
    use rfmems_match::tuner::TuneProblem;
    use rfmems_match::{ComponentTable, ConfigurationWord, TuneQuery};

    let r = json_of(&["tune", "--load", "25-40j"]);
    let word = r["word"].as_u64().unwrap() as u16;
    let value = r["objective_value"].as_f64().unwrap();
    let q = TuneQuery::new(Complex64::new(25.0, -40.0), 620e6);
    let p = TuneProblem::new(&q, &ComponentTable::default()).unwrap();
    let best = ConfigurationWord::all()
        .map(|w| p.objective_value(w).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(value, best);
    assert_eq!(
        p.objective_value(ConfigurationWord::new(word).unwrap())
            .unwrap(),
        best
    );
}
