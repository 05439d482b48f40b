//! Ingestion, output and invariance tests for the command-line front end.

use std::fs;
use std::path::Path;
use std::process::Command;

use gsd_cli::*;
use gsd_core::{ResampleMode, TestConfig};
use tempfile::TempDir;

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

fn grid_spec(csv: &Path) -> DatasetSpec {
    DatasetSpec {
        csv_path: csv.to_path_buf(),
        group_column: "grp".into(),
        group_x: "D".into(),
        group_y: "L".into(),
        cardinal_columns: vec!["c".into()],
        ordinal_columns: vec![OrdinalSpec {
            column: "o".into(),
            levels: vec!["1".into(), "2".into()],
        }],
        bounds: None,
    }
}

/// The four-point grid sample: D takes the diagonal, L is uniform.
const GRID_CSV: &str = "grp,c,o\nD,1,1\nD,1,1\nD,2,2\nD,2,2\nL,1,1\nL,1,2\nL,2,1\nL,2,2\n";

#[test]
fn ingest_grid_sample() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, GRID_CSV);
    let (xs, ys, schema) = ingest(&grid_spec(&csv)).unwrap();
    assert_eq!(xs.len(), 4);
    assert_eq!(ys.len(), 4);
    assert_eq!(schema.cardinal_dims(), 1);
    let pooled = gsd_core::build_pooled(&xs, &ys, &schema, None).unwrap();
    assert_eq!(pooled.s(), 4);
    assert!(pooled.bounds_synthesized());
    assert_eq!(pooled.n(), 4);
    assert_eq!(pooled.m(), 4);
}

#[test]
fn ingest_reports_unknown_level_with_location() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, "grp,c,o\nD,1,1\nL,2,excellent\n");
    let err = ingest(&grid_spec(&csv)).unwrap_err();
    match err {
        IngestError::UnknownLevel { location, column, value } => {
            assert_eq!(location, "line 3");
            assert_eq!(column, "o");
            assert_eq!(value, "excellent");
        }
        other => panic!("unexpected error {:?}", other),
    }
}

#[test]
fn ingest_rejects_empty_group_and_missing_values() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, "grp,c,o\nD,1,1\nD,2,2\n");
    assert!(matches!(ingest(&grid_spec(&csv)), Err(IngestError::EmptyGroup(g)) if g == "L"));

    write(&csv, "grp,c,o\nD,1,1\nL,,2\n");
    assert!(matches!(
        ingest(&grid_spec(&csv)),
        Err(IngestError::Schema { location, .. }) if location == "line 3"
    ));

    write(&csv, "grp,c,o\nD,nan,1\nL,2,2\n");
    assert!(matches!(ingest(&grid_spec(&csv)), Err(IngestError::NonFiniteNumber { .. })));
}

#[test]
fn rows_with_other_group_labels_are_ignored() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, "grp,c,o\nD,1,1\nZ,9,2\nL,2,2\n");
    let (xs, ys, _) = ingest(&grid_spec(&csv)).unwrap();
    assert_eq!((xs.len(), ys.len()), (1, 1));
}

fn quick_config() -> TestConfig {
    TestConfig::new(
        vec![0.0, 0.5],
        vec![0.0, 0.05],
        ResampleMode::MonteCarlo { resamples: 80 },
        0.05,
        7,
    )
    .unwrap()
}

#[test]
fn column_and_row_order_do_not_change_the_report() {
    let dir = TempDir::new().unwrap();
    let base = dir.path().join("a.csv");
    write(&base, GRID_CSV);
    let out_a = execute(&grid_spec(&base), &quick_config(), &dir.path().join("oa"), false, false)
        .unwrap();

    // permute columns
    let cols = dir.path().join("b.csv");
    write(&cols, "o,grp,c\n1,D,1\n1,D,1\n2,D,2\n2,D,2\n1,L,1\n2,L,1\n1,L,2\n2,L,2\n");
    let out_b = execute(&grid_spec(&cols), &quick_config(), &dir.path().join("ob"), false, false)
        .unwrap();
    assert_eq!(out_a.report, out_b.report);

    // shuffle rows
    let rows = dir.path().join("c.csv");
    write(&rows, "grp,c,o\nL,2,2\nD,2,2\nL,1,2\nD,1,1\nL,2,1\nD,2,2\nL,1,1\nD,1,1\n");
    let out_c = execute(&grid_spec(&rows), &quick_config(), &dir.path().join("oc"), false, false)
        .unwrap();
    assert_eq!(out_a.report, out_c.report);
}

#[test]
fn outputs_round_trip_and_digest_is_stable() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, GRID_CSV);
    let spec = grid_spec(&csv);
    let config = quick_config();
    let out = execute(&spec, &config, &dir.path().join("run1"), true, true).unwrap();

    // report document parses back into the identical in-memory report
    let doc: ReportDocument =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run1/report.json")).unwrap())
            .unwrap();
    assert_eq!(doc.schema_version, REPORT_SCHEMA_VERSION);
    assert_eq!(doc.report, out.report);

    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run1/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest, out.manifest);
    let digest = run_digest(&fs::read(&csv).unwrap(), &spec, &config);
    assert_eq!(digest, manifest.digest);

    for f in [
        "report.json",
        "report_reversed.json",
        "resamples.csv",
        "resamples_reversed.csv",
        "pvalues_gamma.csv",
        "pvalues_gamma_reversed.csv",
        "constraints.txt",
        "manifest.json",
    ] {
        assert!(dir.path().join("run1").join(f).exists(), "{} missing", f);
    }

    // reruns with the same seed write byte-identical reports
    let _ = execute(&spec, &config, &dir.path().join("run2"), true, true).unwrap();
    for f in [
        "report.json",
        "report_reversed.json",
        "resamples.csv",
        "resamples_reversed.csv",
        "pvalues_gamma.csv",
        "pvalues_gamma_reversed.csv",
        "constraints.txt",
    ] {
        assert_eq!(
            fs::read(dir.path().join("run1").join(f)).unwrap(),
            fs::read(dir.path().join("run2").join(f)).unwrap(),
            "{} differs between reruns",
            f
        );
    }
}

#[test]
fn exact_mode_enumerates_all_splits() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    write(&csv, GRID_CSV);
    let config =
        TestConfig::new(vec![0.0], vec![0.0], ResampleMode::Exact, 0.05, 0).unwrap();
    let out = execute(&grid_spec(&csv), &config, &dir.path().join("o"), false, false).unwrap();
    let block = &out.report.blocks[0];
    let total: u64 = block.weights.as_ref().unwrap().iter().sum();
    assert_eq!(total, 70); // splits of 8 observations into two fours
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gsd");
    let dir = TempDir::new().unwrap();

    // usage error: unknown flag
    let status = Command::new(bin).arg("--nonsense").output().unwrap();
    assert_eq!(status.status.code(), Some(1));

    // help is a successful exit
    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));

    // data error: missing input file
    let status = Command::new(bin)
        .args([
            "--input",
            dir.path().join("absent.csv").to_str().unwrap(),
            "--group-col",
            "grp",
            "--groups",
            "D,L",
            "--cardinal",
            "c",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // a successful run
    let csv = dir.path().join("d.csv");
    write(&csv, GRID_CSV);
    let status = Command::new(bin)
        .args([
            "--input",
            csv.to_str().unwrap(),
            "--group-col",
            "grp",
            "--groups",
            "D,L",
            "--cardinal",
            "c",
            "--ordinal",
            "o:1<2",
            "--epsilon",
            "0,1",
            "--gamma",
            "0,0.1",
            "--resamples",
            "50",
            "--seed",
            "3",
            "--out",
            dir.path().join("ok").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&status.stderr));
    assert!(dir.path().join("ok/report.json").exists());
}

#[test]
fn bundled_dataset_runs_end_to_end() {
    let dir = TempDir::new().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo.csv");
    let spec = DatasetSpec {
        csv_path: data,
        group_column: "group".into(),
        group_x: "A".into(),
        group_y: "B".into(),
        cardinal_columns: vec!["income".into()],
        ordinal_columns: vec![
            OrdinalSpec {
                column: "health".into(),
                levels: vec!["poor".into(), "fair".into(), "good".into()],
            },
            OrdinalSpec {
                column: "education".into(),
                levels: vec![
                    "none".into(),
                    "basic".into(),
                    "secondary".into(),
                    "tertiary".into(),
                ],
            },
        ],
        bounds: None,
    };
    let config = TestConfig::new(
        vec![0.0, 1.0],
        vec![0.0],
        ResampleMode::MonteCarlo { resamples: 120 },
        0.05,
        1,
    )
    .unwrap();
    let out = execute(&spec, &config, &dir.path().join("o"), false, false).unwrap();
    assert_eq!(out.report.n, 24);
    assert_eq!(out.report.m, 24);
    assert!(out.report.xi_star > 0.0);
}
