use std::path::PathBuf;
use std::process::{Command, Output};

use ccembed::{run_pipeline, PipelineConfig, StopAfter};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccembed"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ccembed-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config(dir: &PathBuf, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SCALED: &str = "[metric]\nbuiltin = \"scaled-disk(4)\"\n[bdf]\ncollar_nodes = 16\nboundary_nodes = 16\n";

#[test]
fn reports_are_deterministic_apart_from_the_header() {
    let dir = scratch("det");
    let cfg = config(&dir, SCALED);
    let a = bin().arg("bdf").arg(&cfg).output().unwrap();
    let b = bin().arg("bdf").arg(&cfg).output().unwrap();
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let (ta, tb) = (stdout(&a), stdout(&b));
    assert_eq!(ta.lines().filter(|l| l.starts_with('#')).count(), 1);
    assert_eq!(ta.lines().skip(1).collect::<Vec<_>>(), tb.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn embedding_runs_repeat_bit_for_bit() {
    let mut cfg = PipelineConfig::builtin("scaled-disk(4)", 1.0);
    cfg.bdf.collar_nodes = 12;
    cfg.bdf.boundary_nodes = 12;
    cfg.embed.max_iters = 300;
    cfg.embed.seed = 7;
    let a = run_pipeline(&cfg, StopAfter::Full).unwrap();
    let b = run_pipeline(&cfg, StopAfter::Full).unwrap();
    assert_eq!(a.report.body(), b.report.body());
    let (ea, eb) = (a.artifacts.embedding.unwrap(), b.artifacts.embedding.unwrap());
    assert_eq!(ea.embedding.points, eb.embedding.points);
    cfg.embed.seed = 8;
    let c = run_pipeline(&cfg, StopAfter::Full).unwrap();
    assert_ne!(c.artifacts.embedding.unwrap().embedding.points, ea.embedding.points);
}

#[test]
fn config_errors_exit_with_4() {
    let dir = scratch("bad");
    let bad = config(&dir, "lambda = 0.0\n[metric]\nbuiltin = \"hyperbolic-disk\"\n");
    assert_eq!(bin().args(["pipeline", "run"]).arg(&bad).output().unwrap().status.code(), Some(4));
    let missing = dir.join("missing.toml");
    assert_eq!(bin().arg("kappa").arg(&missing).output().unwrap().status.code(), Some(4));
    let good = config(&dir, SCALED);
    let o = bin().arg("kappa").arg(&good).args(["--tol", "nonsense=1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(bin().args(["pipeline", "suite", "nope"]).output().unwrap().status.code(), Some(4));
}

#[test]
fn tolerance_overrides_reach_the_report() {
    let dir = scratch("tol");
    let cfg = config(&dir, SCALED);
    // boundary |dx| is 1, so a bound of 2 must fail
    let o = bin().arg("bdf").arg(&cfg).args(["--tol", "transversality=2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("> 2e0"));
}

#[test]
fn dump_fields_writes_csv_with_headers() {
    let dir = scratch("dump");
    let cfg = config(&dir, &format!("{SCALED}[embed]\nmax_iters = 50\nambient_dim = 6\n"));
    let out = dir.join("out");
    let o = bin().args(["pipeline", "run"]).arg(&cfg).arg("--out").arg(&out).arg("--dump-fields").output().unwrap();
    // 50 iterations do not converge
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let head = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(head("kappa.csv"), "y1,kappa");
    assert_eq!(head("metric.csv"), "r,y1,y2,g11,g12,g22");
    assert_eq!(head("profile.csv"), "r,phi,x,one_plus_rphi");
    assert_eq!(head("normal_form.csv"), "r,y1,k2,h11");
    assert_eq!(head("embedding.csv"), "r,y1,v1,v2,v3,v4,v5,v6");
    assert_eq!(head("trace.csv"), "iter,residual,step");
    assert_eq!(head("pembedding.csv"), "r,y1,X,Y1,Y2,Y3,Y4,Y5,Y6");
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("verdict = not-converged"));
    let rows = std::fs::read_to_string(out.join("pembedding.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 16 * 16);
}

#[test]
fn negative_control_suite_passes() {
    let o = bin().args(["pipeline", "suite", "negative-controls"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("borderline"));
}
