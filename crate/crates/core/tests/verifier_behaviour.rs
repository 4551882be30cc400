use gpi_core::bounds::Kind;
use gpi_core::verifier::{
    emit_report, hunt_gpi, hunt_gpi_with, sweep, sweep_with, write_report, HuntConfig, Report, ReportFormat, SweepConfig,
    CANDIDATE, CSV_COLUMNS, RETEST_CONFIRMED,
};

fn small() -> SweepConfig {
    SweepConfig { trials: 6, master_seed: 99, ..SweepConfig::default() }
}

fn bytes(report: &Report, format: ReportFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    write_report(report, format, &mut buf).unwrap();
    buf
}

#[test]
fn default_kinds_have_no_violations() {
    let r = sweep(&small()).unwrap();
    assert_eq!(r.summary.total, 6 * Kind::ALL.len());
    assert_eq!(r.summary.failed, 0, "{:?}", r.results.iter().find(|c| c.failed()));
    assert_eq!(r.summary.passed + r.summary.skipped, r.summary.total);
}

#[test]
fn sweeps_are_reproducible() {
    let a = sweep(&small()).unwrap();
    let b = sweep(&small()).unwrap();
    for f in [ReportFormat::Json, ReportFormat::Csv] {
        assert_eq!(bytes(&a, f), bytes(&b, f));
    }
    let other = sweep(&SweepConfig { master_seed: 100, ..small() }).unwrap();
    assert_ne!(bytes(&a, ReportFormat::Json), bytes(&other, ReportFormat::Json));
}

#[test]
fn json_round_trip_and_csv_shape() {
    let r = sweep(&small()).unwrap();
    let back: Report = serde_json::from_slice(&bytes(&r, ReportFormat::Json)).unwrap();
    assert_eq!(back, r);
    let csv = String::from_utf8(bytes(&r, ReportFormat::Csv)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), r.results.len() + 1);
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    let value: serde_json::Value = serde_json::from_slice(&bytes(&r, ReportFormat::Json)).unwrap();
    let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["config", "results", "summary"]);
}

#[test]
fn reports_are_written_to_disk() {
    let r = sweep(&SweepConfig { trials: 2, kinds: vec![Kind::GpiN2], ..small() }).unwrap();
    let path = std::env::temp_dir().join(format!("gpi-report-{}.csv", std::process::id()));
    emit_report(&r, ReportFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(emit_report(&r, ReportFormat::Json, std::path::Path::new("/nonexistent/dir/x.json")).is_err());
}

#[test]
fn corrupted_bounds_are_caught() {
    let cfg = SweepConfig { kinds: vec![Kind::Prop1_4, Kind::GpiN2, Kind::EvenGpi1_6], ..small() };
    let honest = sweep(&cfg).unwrap();
    assert_eq!(honest.summary.failed, 0);
    let corrupted = sweep_with(&cfg, Some(1e3)).unwrap();
    assert_eq!(corrupted.summary.failed, corrupted.summary.total);
}

#[test]
fn hunter_flags_injected_violation() {
    let cfg = HuntConfig { trials: 20, samples: 5_000, retest_factor: 10, master_seed: 4, ..HuntConfig::default() };
    let clean = hunt_gpi(&cfg).unwrap();
    assert_eq!(clean.summary.failed, 0);
    assert!(clean.results.iter().all(|r| r.flags.is_empty()));
    let injected = hunt_gpi_with(&cfg, &[(7, 1e3)]).unwrap();
    assert_eq!(injected.summary.failed, 1);
    let hit = &injected.results[7];
    assert!(!hit.pass);
    assert_eq!(hit.flags, [CANDIDATE, RETEST_CONFIRMED]);
}

#[test]
fn hunter_finds_nothing_in_the_even_region() {
    let cfg = HuntConfig { trials: 50, samples: 5_000, even_only: true, master_seed: 1, ..HuntConfig::default() };
    let r = hunt_gpi(&cfg).unwrap();
    assert_eq!(r.summary.failed, 0);
    assert!(r.results.iter().all(|c| c.alphas.as_slice().iter().all(|&a| a == 2.0 || a == 4.0)));
}

