use elliptic_ocp::cli::{self, Task};
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ellopt").chain(args.iter().copied());
    let code = cli::main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed(dir: &Path) -> Vec<String> {
    manifest(dir)["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn converge_writes_table_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = out.to_str().unwrap();
    let (code, stdout, _) = run(&["converge", "--scheme", "do2-trap,do2-simp", "--meshes", "10,20", "--out", o]);
    assert_eq!(code, 0);
    assert!(stdout.contains("| 1/20 |"));
    let files = listed(&out);
    assert!(files.contains(&"table.md".to_string()) && files.contains(&"table.csv".to_string()));
    for f in &files {
        assert!(out.join(f).exists());
    }
    let csv = std::fs::read_to_string(out.join("table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scheme,problem,n,h,err_z,err_u,err_p,order_u,osc_index,solve_ms,residual");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[..3], ["do2-trap", "ex2", "10"]);
    assert_eq!(first[7], "");
    assert_eq!(csv.lines().count(), 5);
    let md = std::fs::read_to_string(out.join("table.md")).unwrap();
    assert!(md.starts_with("| h | do2-trap Error | Order | do2-simp Error | Order |"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let out = tmp.path().join(name);
        let (code, _, _) = run(&["converge", "--scheme", "do4-simp-reg", "--meshes", "8,16", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        std::fs::read(out.join("table.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn precondition_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    let (code, _, err) = run(&["solve", "--scheme", "do2-simp", "--problem", "ex2", "--n", "41", "--out", o]);
    assert_eq!(code, 2);
    assert!(err.contains("even"), "{err}");
    assert_eq!(run(&["converge", "--scheme", "od2", "--meshes", "", "--out", o]).0, 2);
    assert_eq!(run(&["converge", "--scheme", "od2", "--out", o]).0, 2);
    assert_eq!(run(&["converge", "--scheme", "od2", "--meshes", "20,10", "--out", o]).0, 2);
    assert_eq!(run(&["solve", "--scheme", "do9", "--out", o]).0, 2);
    assert_eq!(run(&["solve", "--scheme", "od2", "--problem", "ex7", "--out", o]).0, 2);
    assert_eq!(run(&["solve", "--scheme", "od2", "--alpha", "-1", "--out", o]).0, 2);
    assert_eq!(run(&["converge", "--scheme", "od2", "--problem", "ex4", "--meshes", "8", "--out", o]).0, 2);
    assert_eq!(run(&["solve", "--scheme", "od2", "--n", "forty"]).0, 2);
}

#[test]
fn solver_failures_map_to_exit_3() {
    let e = elliptic_ocp::OcpError::Solver {
        reason: "stagnated".into(),
        stats: elliptic_ocp::SolveStats {
            method: elliptic_ocp::SolveMethod::Krylov,
            unknowns: 3,
            iterations: 2000,
            final_relative_residual: 1e-3,
        },
    };
    assert_eq!(cli::exit_code(&e), 3);
    assert_eq!(cli::exit_code(&elliptic_ocp::OcpError::SimpsonParity(3)), 2);
}

#[test]
fn parse_table_command_line() {
    let cfg = cli::parse_args([
        "ellopt",
        "converge",
        "--scheme",
        "do2-simp-reg",
        "--problem",
        "ex2",
        "--meshes",
        "20,40,60,80,100,200",
    ])
    .ok()
    .unwrap();
    assert_eq!(
        cfg.task,
        Task::Converge {
            schemes: vec![elliptic_ocp::SchemeName::DO2SimpReg],
            meshes: vec![20, 40, 60, 80, 100, 200],
        }
    );
    assert_eq!(cfg.problem, elliptic_ocp::ProblemName::Ex2);
}

#[test]
fn sweep_writes_fields_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let (code, stdout, _) = run(&[
        "sweep",
        "--gammas",
        "0.01,0.001,0.0001",
        "--problem",
        "ex2",
        "--n",
        "40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 3);
    let files = listed(&out);
    let u_files: Vec<_> = files.iter().filter(|f| f.starts_with("u_gamma_")).collect();
    assert_eq!(u_files.len(), 3);
    let field = std::fs::read_to_string(out.join(u_files[0])).unwrap();
    assert_eq!(field.lines().next().unwrap(), "i,j,x,y,value");
    assert_eq!(field.lines().count(), 1 + 39 * 39);
    let summary = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn identities_and_audits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("i");
    let o = out.to_str().unwrap();
    let (code, stdout, _) = run(&["identities", "--n", "10", "--out", o]);
    assert_eq!(code, 0);
    assert!(stdout.lines().all(|l| l.starts_with("[PASS]")));
    let (code, _, _) = run(&["audit", "--kind", "stability", "--out", o]);
    assert_eq!(code, 0);
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("audit_stability.json")).unwrap()).unwrap();
    assert_eq!(audit["stability"].as_array().unwrap().len(), 9);
    assert_eq!(run(&["audit", "--kind", "stability", "--meshes", "64", "--out", o]).0, 2);
}

#[test]
fn config_file_fills_missing_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    let out = tmp.path().join("c");
    std::fs::write(
        &cfg,
        format!("# table run\nscheme = od2\nmeshes = 8,16\nout = {}\n", out.display()),
    )
    .unwrap();
    let (code, _, _) = run(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(manifest(&out)["config"]["task"]["meshes"], serde_json::json!([8, 16]));
    let (code, _, _) = run(&["converge", "--config", cfg.to_str().unwrap(), "--meshes", "4,8,12"]);
    assert_eq!(code, 0);
    assert_eq!(manifest(&out)["config"]["task"]["meshes"], serde_json::json!([4, 8, 12]));
}

#[test]
fn help_lists_catalogs() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for name in ["do2-simp-reg", "od4", "ex4", "M = Q - γΔ"] {
        assert!(stdout.contains(name), "{name}");
    }
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_ellopt");
    let status = |args: &[&str]| Command::new(bin).args(args).current_dir(tmp.path()).output().unwrap().status.code();
    assert_eq!(status(&["solve", "--scheme", "do2-simp", "--n", "41"]), Some(2));
    assert_eq!(status(&["solve", "--scheme", "do2-simp", "--n", "8"]), Some(0));
    assert!(tmp.path().join("out/u.csv").exists());
    assert!(tmp.path().join("out/solve.json").exists());
}
