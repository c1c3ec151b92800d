use std::path::Path;
use std::process::Command;

use curvlab_cli::config::{ExperimentConfig, Kind};
use curvlab_cli::{data_csv, run, RunOptions, DATA_CSV_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_curvlab"));
    c.env_remove("CURVLAB_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn opts(workers: usize) -> RunOptions {
    RunOptions {
        workers: Some(workers),
        ..Default::default()
    }
}

const RECT_S2: &str = r#"{"schema":1,"space":"spherical","N":4,
    "shapes":[{"type":"polar_rect","t0":0.2,"t1":1.1,"phi0":0.0,"phi1":1.5707963267948966}],
    "m_outer":3000,"seed":11}"#;

#[test]
fn self_test_passes() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", r#"{"schema":1}"#);
    let out = bin()
        .args(["self-test", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/result.json")).unwrap()).unwrap();
    for key in ["config_hash", "version", "rng", "timestamp", "wall_ms", "estimates"] {
        assert!(record.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn identical_pairs_give_zero_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema":1,"space":"spherical","N":4,
        "shapes":[{"type":"polar_rect","t0":0.2,"t1":1.1,"phi0":0.0,"phi1":1.5707963267948966}],
        "shapes_b":[{"type":"polar_rect","t0":0.2,"t1":1.1,"phi0":0.0,"phi1":1.5707963267948966}],
        "m_outer":500}"#;
    let c = write_config(dir.path(), "c.json", text);
    let out = bin()
        .args(["urysohn-paired", "--assert", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "delta");
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn assert_fails_on_reversed_pair() {
    // K against its equal-measure ball, but with the roles swapped
    let dir = tempfile::tempdir().unwrap();
    let r = (2.0f64 * 0.125 * 4.0 / std::f64::consts::PI).sqrt();
    let text = format!(
        r#"{{"schema":1,"space":"euclidean","N":4,"shapes":[{{"type":"ball","r":{r:?}}}],
            "shapes_b":[{{"type":"axis_box","half_widths":[2.0,0.125]}}],"m_outer":2000}}"#
    );
    let c = write_config(dir.path(), "c.json", &text);
    let run = |assert: bool| {
        let mut cmd = bin();
        cmd.args(["urysohn-paired", "--config"]).arg(&c).arg("--out").arg(dir.path());
        if assert {
            cmd.arg("--assert");
        }
        cmd.output().unwrap().status.code()
    };
    assert_eq!(run(false), Some(0));
    assert_eq!(run(true), Some(2));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let code = |sub: &str, text: &str| {
        let c = write_config(dir.path(), "c.json", text);
        bin()
            .args([sub, "--config"])
            .arg(&c)
            .arg("--out")
            .arg(dir.path().join("o"))
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(code("self-test", r#"{"schema":1,"nope":0}"#), Some(64));
    assert_eq!(code("self-test", r#"{"schema":9}"#), Some(64));
    assert_eq!(code("u1-ball", r#"{"schema":1,"kind":"self_test"}"#), Some(64));
    assert_eq!(code("u1-ball", r#"{"schema":1,"space":"euclidean","radii":[-1.0]}"#), Some(64));
    let not_proper = r#"{"schema":1,"space":"spherical","points":[{"t":0.0},
        {"t":1.6,"phi":0.0},{"t":1.6,"phi":2.1},{"t":1.6,"phi":4.2}]}"#;
    assert_eq!(code("u1-polytope", not_proper), Some(65));
    let missing = bin()
        .args(["self-test", "--config"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(74));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.json"));
}

#[test]
fn print_schema_is_json() {
    let out = bin().arg("--print-schema").output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["required"][0], "schema");
    let help = bin().arg("--help").output().unwrap();
    assert!(String::from_utf8_lossy(&help.stdout).contains(DATA_CSV_HEADER));
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", RECT_S2);
    let out = bin()
        .env("CURVLAB_WORKERS", "3")
        .args(["urysohn-paired", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(record["workers"], 3);
}

#[test]
fn estimates_do_not_depend_on_workers() {
    let c = cfg(RECT_S2);
    let a = run(&c, Kind::UrysohnPaired, &opts(1)).unwrap();
    let b = run(&c, Kind::UrysohnPaired, &opts(5)).unwrap();
    assert_eq!(a.record.estimates, b.record.estimates);
    assert_eq!(a.record.config_hash, b.record.config_hash);
    assert_eq!(data_csv(&a.record), data_csv(&b.record));
}

#[test]
fn seed_override_changes_hash_and_estimates() {
    let c = cfg(RECT_S2);
    let a = run(&c, Kind::UrysohnPaired, &opts(2)).unwrap();
    let b = run(
        &c,
        Kind::UrysohnPaired,
        &RunOptions {
            seed: Some(12),
            workers: Some(2),
            assert: false,
        },
    )
    .unwrap();
    assert_ne!(a.record.config_hash, b.record.config_hash);
    assert_ne!(a.record.estimates, b.record.estimates);
    assert_eq!(b.record.seed, 12);
}

#[test]
fn empty_sweep_gives_header_only_csv() {
    let c = cfg(r#"{"schema":1,"space":"euclidean","sweep_n":[],"shapes":[{"type":"ball","r":1.0}]}"#);
    let out = run(&c, Kind::ExpectU1, &opts(1)).unwrap();
    assert_eq!(data_csv(&out.record), format!("{DATA_CSV_HEADER}\n"));
}

#[test]
fn sweep_mean_grows_with_n() {
    let c = cfg(
        r#"{"schema":1,"space":"euclidean","sweep_n":[4,8,16,32],"shapes":[{"type":"ball","r":1.0}],
            "m_outer":4000,"seed":5}"#,
    );
    let out = run(&c, Kind::ExpectU1, &opts(4)).unwrap();
    let means: Vec<f64> = out.record.estimates.iter().map(|r| r.mean).collect();
    assert_eq!(means.len(), 4);
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
    assert!(means.iter().all(|&m| m < 1.0));
}

#[test]
fn bt_trace_is_non_increasing_within_eps() {
    let c = cfg(
        r#"{"schema":1,"space":"spherical","seed":2,"iterations":30,
            "grid":{"radius":1.2,"nt":64,"nphi":64,"init":{"type":"cap","t":0.4,"phi":1.0,"r":0.5}}}"#,
    );
    let out = run(&c, Kind::BtConverge, &opts(2)).unwrap();
    let trace = out.trace_csv.unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,l2_distance"));
    let d: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(d.len(), 31);
    let eps = out.record.estimates.iter().find(|r| r.quantity == "eps_grid").unwrap().mean;
    assert!(d.windows(2).all(|w| w[1] <= w[0] + eps));
}

#[test]
fn symmetrize_preserves_norms_and_writes_grids() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"schema":1,"space":"hyperbolic","map":{"sigma":0.3,"phi":0.5},
        "grid":{"radius":1.5,"nt":48,"nphi":48,"init":{"type":"tent","t":0.7,"phi":2.0,"r":0.6}}}"#;
    let c = write_config(dir.path(), "c.json", text);
    let out = bin()
        .args(["symmetrize", "--config"])
        .arg(&c)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f = curvlab_core::symmetrize::read_grid(&std::fs::read_to_string(dir.path().join("input.grid")).unwrap()).unwrap();
    let tf = curvlab_core::symmetrize::read_grid(&std::fs::read_to_string(dir.path().join("symmetrized.grid")).unwrap()).unwrap();
    let tol = 2.0 * f.eps_grid() * f.grid().total_measure();
    assert!((f.l1() - tf.l1()).abs() <= tol);
    assert!((tf.sup() - f.sup()).abs() < 1e-12);

    // the written grid feeds straight back in as a density
    let dens = format!(
        r#"{{"schema":1,"space":"hyperbolic","N":3,"m_outer":400,
            "shapes":[{{"type":"grid_density","path":{:?}}}]}}"#,
        dir.path().join("symmetrized.grid").display().to_string()
    );
    let out = run(&cfg(&dens), Kind::ExpectU1, &opts(1)).unwrap();
    assert!(out.record.estimates[0].mean > 0.0);
}

#[test]
fn rearrange_writes_profile() {
    let c = cfg(
        r#"{"schema":1,"space":"euclidean",
            "grid":{"radius":2.0,"nt":40,"nphi":40,"init":{"type":"cap","t":0.8,"phi":0.0,"r":0.5}}}"#,
    );
    let out = run(&c, Kind::Rearrange, &opts(1)).unwrap();
    let (_, profile) = out.files.iter().find(|(n, _)| n == "profile.csv").unwrap();
    let vals: Vec<f64> = profile
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    let r = out.record.estimates.iter().find(|r| r.quantity == "bathtub_radius").unwrap().mean;
    assert!((r - 0.5).abs() < 0.05, "{r}");
}

#[test]
fn polytope_rows() {
    let c = cfg(
        r#"{"schema":1,"space":"spherical","m_outer":20000,"seed":4,
            "points":[{"t":0.5,"phi":0.0},{"t":0.5,"phi":2.0},{"t":0.9,"phi":4.0}]}"#,
    );
    let out = run(&c, Kind::U1Polytope, &opts(1)).unwrap();
    let get = |q: &str| out.record.estimates.iter().find(|r| r.quantity == q).unwrap().clone();
    assert!(get("u1_polar_residual").mean.abs() < 1e-12);
    let mc = get("u1_mc");
    let exact = get("u1_exact").mean;
    assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr + 1e-12);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let c = ExperimentConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(c.kind.is_some(), "{}", path.display());
        n += 1;
    }
    assert!(n >= 5);
}
