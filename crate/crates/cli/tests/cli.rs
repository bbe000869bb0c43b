use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crosslab::circlepack::{regular_radius, Packing};
use crosslab::oracles::sphere_expected_crossings;
use crosslab::surface::load_surface;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crosslab"));
    c.env_remove("CROSSLAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_a_valid_deterministic_table() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        code(&run(&["gen", "--faces", "16", "--seed", "4", "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&run(&["gen", "--faces", "16", "--seed", "4", "--out", s(&b)])),
        0
    );
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let surface = load_surface(&text).unwrap();
    assert_eq!(surface.genus(), 2);
}

#[test]
fn gen_rejects_bad_face_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&["gen", "--faces", "24", "--out", s(&out)]);
    assert_eq!(code(&o), 64);
    assert!(!out.exists());
    assert_eq!(
        code(&run(&[
            "gen",
            "--faces",
            "16",
            "--out",
            "/nonexistent/dir/x.json"
        ])),
        73
    );
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(
        code(&run(&[
            "oracle",
            "--backend",
            "klein",
            "--n",
            "4",
            "--trials",
            "1"
        ])),
        64
    );
    assert_eq!(code(&run(&["route", "--g", "7", "--n", "10"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
    let o = bin()
        .env("CROSSLAB_THREADS", "zero")
        .args(["route", "--g", "4", "--n", "4"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sweep_rows_manifest_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let svg = dir.path().join("sweep.svg");
    let o = run(&[
        "sweep",
        "--surfaces",
        "16,32,64",
        "--n",
        "20",
        "--trials",
        "5",
        "--seed",
        "11",
        "--csv",
        s(&csv),
        "--svg",
        s(&svg),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&csv);
    assert_eq!(rows[0].len(), 11);
    assert_eq!(rows[0][10], "normalized");
    assert_eq!(rows.len(), 16);
    for r in &rows[1..] {
        let v: f64 = r[10].parse().unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
    assert_eq!(
        std::fs::read_to_string(&svg).unwrap().matches("<circle").count(),
        15
    );

    let manifest = dir.path().join("sweep.csv.manifest.json");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(doc["trial_seeds"].as_array().unwrap().len(), 5);
    assert_eq!(doc["surfaces"].as_array().unwrap().len(), 3);

    let again = dir.path().join("again.csv");
    let o = run(&["sweep", "--replay", s(&manifest), "--csv", s(&again)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());

    // Same flags on a single thread give the same bytes.
    let single = dir.path().join("single.csv");
    let o = bin()
        .env("CROSSLAB_THREADS", "1")
        .args([
            "sweep",
            "--surfaces",
            "16,32,64",
            "--n",
            "20",
            "--trials",
            "5",
            "--seed",
            "11",
            "--csv",
            s(&single),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&single).unwrap());
}

#[test]
fn sweep_accepts_table_files_and_reports_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let table = data("surfaces/genus2.json");
    let o = run(&[
        "sweep",
        "--surfaces",
        s(&table),
        "--n",
        "6",
        "--trials",
        "2",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&csv).len(), 3);
    let o = run(&[
        "sweep",
        "--surfaces",
        "16",
        "--n",
        "6",
        "--trials",
        "2",
        "--csv",
        "/nonexistent/out.csv",
    ]);
    assert_eq!(code(&o), 73);
    let o = run(&[
        "sweep",
        "--surfaces",
        "/nonexistent/t.json",
        "--n",
        "6",
        "--trials",
        "2",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 73);
    let o = run(&[
        "sweep",
        "--surfaces",
        "24",
        "--n",
        "6",
        "--trials",
        "2",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 64);
}

#[test]
fn pack_shipped_triangulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("radii.json");
    let tri = data("triangulations/genus2.json");
    let o = run(&[
        "pack",
        "--triangulation",
        s(&tri),
        "--tol",
        "1e-8",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p: Packing = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(p.residual < 1e-8);
    for r in p.radii {
        assert!((r - regular_radius()).abs() < 1e-6);
    }
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"vertices": 3, "triangles": [[0, 1, 2]]}"#).unwrap();
    assert_eq!(code(&run(&["pack", "--triangulation", s(&broken)])), 1);
}

#[test]
fn route_k4() {
    let o = run(&["route", "--g", "4", "--n", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "36");
}

#[test]
fn sphere_oracle_mean() {
    let o = run(&[
        "oracle",
        "--backend",
        "sphere",
        "--n",
        "12",
        "--trials",
        "2000",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mean = doc["mean"].as_f64().unwrap();
    let se = doc["standard_error"].as_f64().unwrap();
    assert_eq!(doc["expected"].as_f64().unwrap(), sphere_expected_crossings(12));
    assert!((mean - 185.625).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn check_passes_then_names_the_broken_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.json");
    assert_eq!(
        code(&run(&[
            "draw",
            "--faces",
            "32",
            "--n",
            "9",
            "--seed",
            "3",
            "--out",
            s(&file)
        ])),
        0
    );
    let o = run(&["check", "--drawing", s(&file)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("ok oracle-equivalence"));

    // Shift one interior exit point so the path no longer continues across
    // the edge it leaves through.
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let edges = doc["drawing"]["edges"].as_array_mut().unwrap();
    let edge = edges
        .iter_mut()
        .find(|e| e["path"]["segments"].as_array().unwrap().len() > 1)
        .expect("some path crosses an edge");
    let x = edge["path"]["segments"][0]["exit"]["x"].as_f64().unwrap();
    edge["path"]["segments"][0]["exit"]["x"] = (x * 0.9).into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let o = run(&["check", "--drawing", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("VIOLATION path-continuity"));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("invariant path-continuity"));

    std::fs::write(&bad, "{\"drawing\": 7").unwrap();
    let o = run(&["check", "--drawing", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("invariant document"));
    assert_eq!(code(&run(&["check", "--drawing", "/nonexistent.json"])), 73);
}
