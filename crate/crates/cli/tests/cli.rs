use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlab")).args(args).output().expect("rlab runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_in(dir: &TempDir, body: &str, extra: &[&str]) -> (Output, String) {
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let out = out.to_string_lossy().into_owned();
    let mut args = vec!["run", cfg.as_str(), "--out", out.as_str()];
    args.extend_from_slice(extra);
    (rlab(&args), out)
}

fn summary_lines(out: &str) -> Vec<String> {
    fs::read_to_string(Path::new(out).join("summary.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

const HITTING: &str = "experiment = hitting
kappa.kind = constant
kappa.value = 1
sim.dt = 1e-3
sim.n_paths = 4000
sim.seed = 11
check.tol = 0.03
check.rel_tol = 0.5
";

#[test]
fn lists_every_experiment() {
    let o = rlab(&["list-experiments"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["hitting", "feynman-neumann", "cauchy-kernel", "discriminate", "dtn-reference", "scaling"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn dtn_reference_for_unit_conductivity() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_in(&dir, "experiment = dtn-reference\nkappa.kind = constant\nref.n_max = 8\n", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("dtn.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["n", "lambda", "kappa_label"]);
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), n);
        assert!((r[1].parse::<f64>().unwrap() - n as f64).abs() < 1e-12);
    }
    assert!(Path::new(&out).join("kernel_ref.csv").exists());
    let lines = summary_lines(&out);
    assert_eq!(lines.len(), 9);
    assert!(lines.iter().all(|l| l.contains("verdict=pass") && l.contains("config=")));
}

#[test]
fn hitting_writes_sixteen_bins_with_provenance() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_in(&dir, HITTING, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("hitting.csv")).unwrap();
    assert_eq!(rdr.records().count(), 16);
    let text = fs::read_to_string(Path::new(&out).join("summary.txt")).unwrap();
    assert!(text.contains("# config_hash = ") && text.contains("# seed = 11"));
    let bins: Vec<_> = summary_lines(&out).into_iter().filter(|l| l.starts_with("name=hitting.bin")).collect();
    assert_eq!(bins.len(), 16);
    assert!(bins.iter().all(|l| l.contains("verdict=pass") && l.contains("seed=11") && l.contains("n=4000")));
}

#[test]
fn identical_config_gives_identical_csv() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (oa, out_a) = run_in(&a, HITTING, &["--threads", "1"]);
    let (ob, out_b) = run_in(&b, HITTING, &[]);
    assert!(oa.status.success() && ob.status.success());
    let read = |o: &str| fs::read(Path::new(o).join("hitting.csv")).unwrap();
    assert_eq!(read(&out_a), read(&out_b));
    let c = TempDir::new().unwrap();
    let (_, out_c) = run_in(&c, HITTING, &["--seed", "12"]);
    assert_ne!(read(&out_a), read(&out_c));
}

#[test]
fn failed_check_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_in(&dir, HITTING, &["check.tol=1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(summary_lines(&out).iter().any(|l| l.contains("verdict=fail")));
}

#[test]
fn small_kernel_run_is_inconclusive_not_failed() {
    let dir = TempDir::new().unwrap();
    let cfg = "experiment = cauchy-kernel
kappa.kind = constant
kappa.value = 0.5
sim.dt = 1e-3
sim.n_paths = 2
sim.horizon = 1
sim.seed = 3
ref.n_max = 64
";
    let (o, out) = run_in(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bins: Vec<_> = summary_lines(&out).into_iter().filter(|l| l.starts_with("name=kernel.bin")).collect();
    assert_eq!(bins.len(), 6);
    assert!(bins.iter().all(|l| l.contains("verdict=inconclusive")), "{bins:?}");
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("kernel.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["delta_mid", "density", "stderr", "reference_value"]);
}

#[test]
fn config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg =
        write_config(dir.path(), "experiment = hitting\nkappa.kind = constant\nsim.dt = 1e-3\nsim.n_paths = 10\n");
    let o = rlab(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.seed"));
    let o = rlab(&["validate", &cfg, "sim.seed=1"]);
    assert!(o.status.success());
    let o = rlab(&["validate", &cfg, "sim.sed=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.sed"));
    let o = rlab(&["validate", &cfg, "--seed", "4", "experiment=teleport"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));
}

#[test]
fn scaling_identities_hold_on_records() {
    let dir = TempDir::new().unwrap();
    let cfg = "experiment = scaling\nkappa.kind = radial\nkappa.coeffs = 1, 1\nsim.dt = 1e-3\nsim.n_paths = 10\nsim.seed = 5\n";
    let (o, out) = run_in(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = summary_lines(&out);
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.contains("verdict=pass")));
}

#[test]
fn dirichlet_and_paths_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = "experiment = feynman-dirichlet
kappa.kind = constant
sim.dt = 1e-3
sim.n_paths = 2000
sim.seed = 9
check.tol = 0.05
output.paths = true
output.paths_count = 2
sim.horizon = 0.01
";
    let (o, out) = run_in(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("paths.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["path_id", "t", "x1", "x2", "L"]);
    assert_eq!(rdr.records().count(), 2 * 11);
    assert!(Path::new(&out).join("feynman_dirichlet.csv").exists());
}

#[test]
fn excursion_csv_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = "experiment = excursion-rate
kappa.kind = constant
kappa.value = 0.5
sim.dt = 1e-3
sim.n_paths = 4
sim.horizon = 5
sim.seed = 21
ref.n_max = 64
";
    let (o, out) = run_in(&dir, cfg, &[]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("excursions.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["path_id", "s", "theta_start", "theta_end", "duration"]);
    assert!(rdr.records().count() > 0);
}

#[test]
fn square_domain_starts_inside() {
    let dir = TempDir::new().unwrap();
    let cfg = "experiment = feynman-dirichlet
domain.kind = square
kappa.kind = constant
sim.dt = 1e-3
sim.n_paths = 2000
sim.seed = 13
data.mode = 2
check.tol = 0.05
";
    let (o, out) = run_in(&dir, cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(Path::new(&out).join("feynman_dirichlet.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!((&row[0], &row[1]), ("8e-1", "5e-1"));
}
