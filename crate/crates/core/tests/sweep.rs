//! End-to-end sweep with file outputs.

use gapspectra::harness::{run_and_write, SweepConfig, SweepReport, CSV_COLUMNS};

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig::from_json(
        r#"{
            "potential": {"family": "square_well", "params": [1, 0, 1]},
            "m": 1.0,
            "eps_list": [0.2, 0.1, 0.05, 0.025],
            "methods": ["bs", "grid", "minmax"],
            "grid": {"L": 200, "N": 20000},
            "outputs": {"csv": "out/sweep.csv", "json": "out/report.json"}
        }"#,
    )
    .unwrap();
    let report = run_and_write(&cfg, Some(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 4);
    let back: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(back, report);
    assert!(back.is_consistent());
    for r in &report.rows {
        let zs: Vec<_> = ["bs", "grid", "minmax"].iter().map(|m| r.z(m).unwrap()).collect();
        assert!((zs[0] - zs[1]).norm() <= 1e-5 && (zs[1] - zs[2]).norm() <= 1e-6, "eps = {}: {zs:?}", r.eps);
    }
}

#[test]
fn tabulated_potential_runs_through_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("well.dat");
    let mut text = String::from("x,re11,im11,re12,im12,re21,im21,re22,im22\n");
    for i in 0..=80 {
        let x = -2.0 + 0.05 * i as f64;
        let v = (-x * x).exp();
        text.push_str(&format!("{x},{v},0,0,0,0,0,0,0\n"));
    }
    std::fs::write(&table, text).unwrap();
    let cfg = SweepConfig::from_json(&format!(
        r#"{{"potential": {{"tabulated": {:?}}}, "m": 1.0, "eps_list": [0.2, 0.1], "methods": ["bs", "grid"],
            "bs": {{"quad": {{"order": 4}}}}, "grid": {{"L": 60, "N": 12000}}}}"#,
        table.to_str().unwrap()
    ))
    .unwrap();
    let report = run_and_write(&cfg, None).unwrap();
    for r in &report.rows {
        let (a, b) = (r.z("bs").unwrap(), r.z("grid").unwrap());
        assert!((a - b).norm() < 1e-4, "{a} vs {b}");
    }
}
