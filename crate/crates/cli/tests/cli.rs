use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphere_fda::curves::warp_curve;
use sphere_fda::io::{import_json, write_trajectory_csv, Artifact};
use sphere_fda::simulate::{random_smooth_curve, random_warp};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphere-fda")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A smooth curve and `warped` reparametrizations of it, as CSV files.
fn orbit(dir: &Path, n: usize, warped: usize, seed: u64) -> Vec<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_smooth_curve::<f64, _>(&mut rng, n, 1.0, 0.3);
    let mut out = vec![dir.join(format!("src{seed}.csv"))];
    write_trajectory_csv(&c, &out[0]).unwrap();
    for k in 0..warped {
        let w = warp_curve(&c, &random_warp(&mut rng, n, 0.5)).unwrap();
        let path = dir.join(format!("w{seed}_{k}.csv"));
        write_trajectory_csv(&w, &path).unwrap();
        out.push(path);
    }
    out
}

#[test]
fn geodesic_same_file_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 60, 0, 1);
    let out = dir.path().join("g.json");
    let o = run(&["geodesic", s(&files[0]), s(&files[0]), "--grid", "60", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::GeodesicPath(g) = import_json(&out).unwrap() else { panic!("wrong kind") };
    assert!(g.dist_sq <= 1e-10);
    assert_eq!(g.curves.len(), 21);
    assert!(g.gamma.is_none());
}

#[test]
fn amplitude_geodesic_on_warped_copy() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 200, 1, 2);
    let out = dir.path().join("g.json");
    let o = run(&["geodesic", s(&files[1]), s(&files[0]), "--amplitude", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::GeodesicPath(g) = import_json(&out).unwrap() else { panic!("wrong kind") };
    assert!(g.dist_sq <= 1e-3, "{}", g.dist_sq);
    assert_eq!(g.gamma.map(|v| v.len()), Some(200));
}

#[test]
fn missing_file_exits_1_and_names_it() {
    let o = run(&["geodesic", "/no/such/a.csv", "/no/such/b.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/a.csv"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 30, 0, 3);
    assert_eq!(run(&["geodesic", s(&files[0]), s(&files[0]), "--grid", "5"]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,a,b\n0,0,0\n").unwrap();
    let o = run(&["mean", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(run(&["mean", s(&files[0]), "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 30, 0, 4);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid = 5\n").unwrap();
    assert_eq!(run(&["mean", s(&files[0]), "--config", s(&cfg)]).status.code(), Some(2));
    let out = dir.path().join("m.json");
    let o = run(&["mean", s(&files[0]), "--config", s(&cfg), "--grid", "30", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::Mean(m) = import_json(&out).unwrap() else { panic!("wrong kind") };
    assert_eq!(m.mean.len(), 30);
}

#[test]
fn mean_of_duplicates_and_single_input() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 50, 0, 5);
    let out = dir.path().join("m.json");
    let one = s(&files[0]);
    let o = run(&["mean", one, one, one, one, one, "--grid", "50", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::Mean(m) = import_json(&out).unwrap() else { panic!("wrong kind") };
    assert!(m.frechet_value <= 1e-6);
    assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));

    let o = run(&["mean", one, "--grid", "50", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let Artifact::Mean(m) = import_json(&out).unwrap() else { panic!("wrong kind") };
    // Compared with the input's own reconstruction: rebuilding any curve from
    // its representation carries a first-order integration error.
    let src = sphere_fda::io::load_trajectory_csv::<f64>(&files[0], 50).unwrap();
    let rep = sphere_fda::curves::to_tsrvc(&src).unwrap();
    let rebuilt = sphere_fda::curves::from_tsrvc(&rep);
    let dist = |a: [f64; 3], b: &[f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let field_gap = rep.field.iter().zip(&m.mean_field).map(|(a, b)| dist(a.to_f64(), b)).fold(0.0, f64::max);
    assert!(field_gap <= 1e-3, "{field_gap}");
    let gap = rebuilt.samples().iter().zip(&m.mean).map(|(a, b)| dist(a.coords().to_f64(), b)).fold(0.0, f64::max);
    assert!(gap <= 1e-3, "{gap}");
}

#[test]
fn iteration_cap_exits_3_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = orbit(dir.path(), 40, 0, 6);
    files.extend(orbit(dir.path(), 40, 0, 7));
    files.extend(orbit(dir.path(), 40, 0, 8));
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "max_iter = 1\n").unwrap();
    let out = dir.path().join("m.json");
    let o = run(&["mean", s(&files[0]), s(&files[1]), s(&files[2]), "--grid", "40", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(matches!(import_json(&out).unwrap(), Artifact::Mean(_)));
}

#[test]
fn distmat_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = orbit(dir.path(), 40, 0, 9);
    files.extend(orbit(dir.path(), 40, 0, 10));
    files.extend(orbit(dir.path(), 40, 0, 11));
    let out = dir.path().join("d.json");
    let mut args = vec!["distmat"];
    args.extend(files.iter().map(|p| s(p)));
    args.extend(["--grid", "40", "--baseline", "30", "60", "--out", s(&out)]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let Artifact::DistanceMatrix(d) = import_json(&out).unwrap() else { panic!("wrong kind") };
    for i in 0..3 {
        assert_eq!(d.matrix[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(d.matrix[i][j], d.matrix[j][i]);
        }
    }
    assert_eq!(d.baseline.map(|b| b.len()), Some(3));
    assert_eq!(d.improvement.map(|v| v.len()), Some(3));
}

#[test]
fn covariance_aligned_reduces_trace() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 60, 6, 12);
    let trace = |aligned: bool| {
        let out = dir.path().join(format!("c{aligned}.json"));
        let mut args = vec!["covariance"];
        args.extend(files.iter().map(|p| s(p)));
        args.extend(["--grid", "60", "--out", s(&out)]);
        if aligned {
            args.push("--aligned");
        }
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let Artifact::Covariance(c) = import_json(&out).unwrap() else { panic!("wrong kind") };
        let t = c.pointwise.unwrap().trace;
        assert!(c.transported.is_some());
        t.iter().sum::<f64>() / t.len() as f64
    };
    let (plain, aligned) = (trace(false), trace(true));
    assert!(aligned <= plain, "{aligned} > {plain}");
}

#[test]
fn covariance_of_identical_inputs_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let files = orbit(dir.path(), 30, 0, 13);
    let out = dir.path().join("c.json");
    let f = s(&files[0]);
    let o = run(&["covariance", f, f, f, "--grid", "30", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let Artifact::Covariance(c) = import_json(&out).unwrap() else { panic!("wrong kind") };
    assert!(c.big_k.iter().flatten().flatten().flatten().all(|v| v.abs() < 1e-12));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--grid", "30", "--seed", "9", "--out", s(&out)];
        args.extend_from_slice(extra);
        let cfg = dir.path().join("sim.cfg");
        std::fs::write(&cfg, "means = 2\nper_mean = 2\n").unwrap();
        args.extend(["--config", s(&cfg)]);
        assert_eq!(run(&args).status.code(), Some(0));
        out
    };
    let a = sim("a", &[]);
    let b = sim("b", &[]);
    let manifest = |p: &Path| std::fs::read_to_string(p.join("manifest.json")).unwrap().replace(s(p), "");
    assert_eq!(manifest(&a), manifest(&b));
    assert_eq!(std::fs::read(a.join("curves/curve_003.csv")).unwrap(), std::fs::read(b.join("curves/curve_003.csv")).unwrap());
    assert!(a.join("warps/gamma_000.csv").exists());

    let cfg = dir.path().join("flat.cfg");
    std::fs::write(&cfg, "means = 2\nper_mean = 2\nwarp_strength = 0\n").unwrap();
    let out = dir.path().join("flat");
    assert_eq!(run(&["simulate", "--grid", "30", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    assert!(!out.join("warps").exists());
    assert_eq!(std::fs::read_dir(out.join("curves")).unwrap().count(), 4);
}

#[test]
fn simulate_unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run(&["simulate", "--grid", "20", "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
}
