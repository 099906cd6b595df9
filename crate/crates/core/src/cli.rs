//! Command-line front end behind the `ellopt` binary.
//!
//! Every command writes its artifacts into `--out` together with a
//! `manifest.json` naming each file and the parameters that produced it.
//! Exit codes: 0 success, 1 failed identity check, 2 usage or precondition
//! error, 3 solver failure.

use crate::error::OcpError;
use crate::fmt::sci;
use crate::linsolve::{SolveConfig, SolveMethod};
use crate::problems::{Field, ManufacturedProblem, ProblemName};
use crate::schemes::{self, GammaRule, SchemeName, SchemeSpec, SystemForm};
use crate::study::{self, StudyOptions};
use crate::grid::{Grid, GridFunction};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IDENTITY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

fn catalog() -> String {
    let mut s = String::from("Schemes (Δ: 5-point Laplacian, F, R: compact 9-point pair, Q: Simpson weights):\n");
    for n in SchemeName::ALL {
        let _ = writeln!(s, "  {:<13} {}", n.as_str(), n.equations());
    }
    s.push_str("\nProblems:\n");
    for p in ProblemName::ALL {
        let _ = writeln!(s, "  {:<13} {}", p.as_str(), p.description());
    }
    s.push_str(
        "\nA --config file holds flat key=value lines mirroring the long flags \
         (e.g. `meshes=20,40,60`); flags given on the command line win.",
    );
    s
}

#[derive(Parser, Debug)]
#[command(name = "ellopt", version, about = "Finite-difference schemes for elliptic optimal control", after_long_help = catalog())]
struct Cli {
    /// Flat key=value file with defaults for the long flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one scheme on one mesh and dump z, u, p.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 40)]
        n: usize,
    },
    /// Convergence table over a mesh list for one or more schemes.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending mesh sizes.
        #[arg(long, value_parser = parse_usize_list)]
        meshes: Option<List<usize>>,
    },
    /// Control-only gradient penalty sweep on an unregularized scheme.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 40)]
        n: usize,
        /// Comma-separated penalty weights.
        #[arg(long, value_parser = parse_f64_list, default_value = "0.01,0.001,0.0001")]
        gammas: List<f64>,
    },
    /// Scheme equivalence, stability, truncation, embedding and filter audits.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = AuditKind::All)]
        kind: AuditKind,
        #[arg(long, default_value_t = 40)]
        n: usize,
        /// Mesh list for the truncation and embedding audits.
        #[arg(long, value_parser = parse_usize_list)]
        meshes: Option<List<usize>>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Commutativity and symmetry identities of the operators.
    Identities {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scheme name, or a comma-separated list for `converge`.
    #[arg(long, value_parser = parse_scheme_list)]
    scheme: Option<List<SchemeName>>,
    #[arg(long, default_value = "ex2", value_parser = parse_problem)]
    problem: ProblemName,
    /// Overrides the problem's default α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed γ for regularized schemes; control penalty for unregularized
    /// discretize-then-optimize schemes.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value = "direct", value_parser = parse_method)]
    method: SolveMethod,
    #[arg(long, value_enum, default_value_t = FormArg::Full)]
    form: FormArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of md, csv, fields.
    #[arg(long, value_parser = parse_formats, default_value = "md,csv,fields")]
    formats: Formats,
    /// Record wall-clock solve times in CSV output (breaks byte-identity).
    #[arg(long)]
    timings: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditKind {
    Equivalence,
    Stability,
    Truncation,
    Embedding,
    Filter,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormArg {
    Full,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Formats {
    pub markdown: bool,
    pub csv: bool,
    pub fields: bool,
}

/// Comma-separated flag value, kept whole so clap sees one value.
#[derive(Clone, Debug)]
struct List<T>(Vec<T>);

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let v: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

fn parse_usize_list(s: &str) -> Result<List<usize>, String> {
    parse_list(s, |t| t.parse::<usize>().map_err(|e| format!("`{t}`: {e}"))).map(List)
}

fn parse_f64_list(s: &str) -> Result<List<f64>, String> {
    parse_list(s, |t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"))).map(List)
}

fn parse_scheme_list(s: &str) -> Result<List<SchemeName>, String> {
    parse_list(s, |t| t.parse::<SchemeName>().map_err(|e| e.to_string())).map(List)
}

fn parse_problem(s: &str) -> Result<ProblemName, String> {
    s.parse().map_err(|e: OcpError| e.to_string())
}

fn parse_method(s: &str) -> Result<SolveMethod, String> {
    s.parse().map_err(|e: OcpError| e.to_string())
}

fn parse_formats(s: &str) -> Result<Formats, String> {
    let mut f = Formats {
        markdown: false,
        csv: false,
        fields: false,
    };
    for t in parse_list(s, |t| Ok(t.to_ascii_lowercase()))? {
        match t.as_str() {
            "md" | "markdown" => f.markdown = true,
            "csv" => f.csv = true,
            "fields" => f.fields = true,
            _ => return Err(format!("unknown format `{t}`")),
        }
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Task {
    Solve {
        scheme: SchemeName,
        n: usize,
    },
    Converge {
        schemes: Vec<SchemeName>,
        meshes: Vec<usize>,
    },
    Sweep {
        base: SchemeName,
        n: usize,
        gammas: Vec<f64>,
    },
    Audit {
        kind: AuditKind,
        n: usize,
        meshes: Option<Vec<usize>>,
        samples: usize,
        seed: u64,
    },
    Identities {
        n: usize,
    },
}

/// Validated command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub problem: ProblemName,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub solve: SolveConfig,
    pub form: SystemForm,
    pub out_dir: PathBuf,
    pub formats: Formats,
    pub timings: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// `--help` or `--version`; the text goes to stdout and the exit code is 0.
    Display(String),
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), no + 1))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file entries into `argv` right after the subcommand,
/// skipping keys that already appear as flags.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut cfg_path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            cfg_path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            cfg_path = Some(p.to_string());
        }
    }
    let Some(cfg_path) = cfg_path else {
        return Ok(argv);
    };
    let entries = read_config(Path::new(&cfg_path))?;
    let given = |k: &str| {
        strs.iter()
            .any(|a| a == &format!("--{k}") || a.starts_with(&format!("--{k}=")))
    };
    let commands = ["solve", "converge", "sweep", "audit", "identities"];
    let mut cmd_pos = strs.iter().position(|a| commands.contains(&a.as_str()));
    let mut out = argv.clone();
    if cmd_pos.is_none() {
        if let Some((_, c)) = entries.iter().find(|(k, _)| k == "command") {
            out.insert(1, c.into());
            cmd_pos = Some(1);
        }
    }
    let Some(pos) = cmd_pos else {
        return Ok(out);
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in entries {
        if k == "command" || k == "config" || given(&k) {
            continue;
        }
        if k == "timings" {
            if v == "true" || v == "1" {
                extra.push("--timings".into());
            }
            continue;
        }
        extra.push(format!("--{k}={v}").into());
    }
    out.splice(pos + 1..pos + 1, extra);
    Ok(out)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn one_scheme(common: &Common) -> Result<SchemeName, CliError> {
    match common.scheme.as_ref().map(|l| l.0.as_slice()) {
        Some([s]) => Ok(*s),
        Some(_) => Err(usage("this command takes a single --scheme")),
        None => Err(usage("--scheme is required")),
    }
}

fn check_parity(scheme: SchemeName, n: usize) -> Result<(), CliError> {
    if scheme.quadrature() == Some(crate::objective::Quadrature::Simpson) && n % 2 == 1 {
        return Err(usage(OcpError::SimpsonParity(n).to_string()));
    }
    Ok(())
}

/// Parses and validates a command line (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = merge_config(argv).map_err(CliError::Usage)?;
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Display(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let (task, common) = match cli.command {
        Command::Solve { common, n } => {
            let scheme = one_scheme(&common)?;
            check_parity(scheme, n)?;
            (Task::Solve { scheme, n }, common)
        }
        Command::Converge { common, meshes } => {
            let schemes = common.scheme.clone().map(|l| l.0).ok_or_else(|| usage("--scheme is required"))?;
            let meshes = meshes.map(|l| l.0).ok_or_else(|| usage("--meshes is required and must be non-empty"))?;
            if meshes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("--meshes must be strictly ascending"));
            }
            for &s in &schemes {
                for &n in &meshes {
                    check_parity(s, n)?;
                }
            }
            (Task::Converge { schemes, meshes }, common)
        }
        Command::Sweep { common, n, gammas } => {
            let gammas = gammas.0;
            let base = match common.scheme {
                None => SchemeName::DO2Simp,
                Some(_) => one_scheme(&common)?,
            };
            if base.is_od() || base.is_reg() {
                return Err(usage("sweep needs an unregularized discretize-then-optimize base scheme"));
            }
            check_parity(base, n)?;
            if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0)) {
                return Err(usage(OcpError::NegativeGamma(*g).to_string()));
            }
            (Task::Sweep { base, n, gammas }, common)
        }
        Command::Audit {
            common,
            kind,
            n,
            meshes,
            samples,
            seed,
        } => (
            Task::Audit {
                kind,
                n,
                meshes: meshes.map(|l| l.0),
                samples,
                seed,
            },
            common,
        ),
        Command::Identities { common, n } => (Task::Identities { n }, common),
    };
    if let Some(a) = common.alpha {
        if !(a > 0.0) || !a.is_finite() {
            return Err(usage(OcpError::NonPositiveAlpha(a).to_string()));
        }
    }
    if let Some(g) = common.gamma {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(usage(OcpError::NegativeGamma(g).to_string()));
        }
    }
    Ok(RunConfig {
        task,
        problem: common.problem,
        alpha: common.alpha,
        gamma: common.gamma,
        solve: SolveConfig::with_method(common.method),
        form: match common.form {
            FormArg::Full => SystemForm::Full,
            FormArg::Reduced => SystemForm::Reduced,
        },
        out_dir: common.out,
        formats: common.formats,
        timings: common.timings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub kind: &'static str,
    pub params: Value,
}

/// Result of a run: artifacts written and the process exit code.
#[derive(Debug)]
pub struct RunOutcome {
    pub artifacts: Vec<Artifact>,
    pub exit_code: i32,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, name: &str, kind: &'static str, params: Value, bytes: &[u8]) -> crate::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            kind,
            params,
        });
        Ok(())
    }

    fn field(&mut self, name: &str, v: &GridFunction, params: Value) -> crate::Result<()> {
        let mut buf = Vec::new();
        v.write_csv(&mut buf)?;
        self.put(name, "field", params, &buf)
    }
}

fn problem_of(cfg: &RunConfig) -> crate::Result<ManufacturedProblem> {
    match cfg.alpha {
        Some(a) => ManufacturedProblem::with_alpha(cfg.problem, a),
        None => Ok(ManufacturedProblem::make(cfg.problem)),
    }
}

fn spec_of(cfg: &RunConfig, name: SchemeName, alpha: f64) -> crate::Result<SchemeSpec> {
    let spec = SchemeSpec::new(name, alpha)?;
    match cfg.gamma {
        Some(g) if name.is_reg() => spec.with_gamma_rule(GammaRule::Fixed(g)),
        Some(g) => spec.with_control_penalty(g),
        None => Ok(spec),
    }
}

fn gamma_label(g: f64) -> String {
    sci(g, 2)
}

fn run_tasks(cfg: &RunConfig, w: &mut Writer, log: &mut dyn std::io::Write) -> crate::Result<i32> {
    let options = StudyOptions {
        solve: cfg.solve,
        form: cfg.form,
        parallel: true,
    };
    let problem = problem_of(cfg)?;
    let alpha = problem.alpha();
    let base = json!({ "problem": cfg.problem, "alpha": alpha });
    match &cfg.task {
        Task::Solve { scheme, n } => {
            let spec = spec_of(cfg, *scheme, alpha)?;
            let grid = Grid::new(problem.dim(), *n)?;
            let sol = study::solve_problem(&spec, &problem, *n, &options)?;
            let mut summary = json!({
                "scheme": scheme, "problem": cfg.problem, "alpha": alpha, "n": n,
                "gamma": spec.gamma(grid), "osc_index": study::oscillation_index(&sol.u),
                "stats": sol.stats,
            });
            if problem.has_exact() {
                let e = |f: Field, v: &GridFunction| -> crate::Result<f64> {
                    Ok(v.sub(&problem.exact_on_grid(f, grid)?)?.norm_inf())
                };
                summary["err_z"] = json!(e(Field::Z, &sol.z)?);
                summary["err_u"] = json!(e(Field::U, &sol.u)?);
                summary["err_p"] = json!(e(Field::P, &sol.p)?);
            } else {
                let data = problem.data_on_grid(grid)?;
                summary["tracking_gap"] = json!(study::tracking_gap(cfg.problem, &sol.z, &data.g)?);
            }
            let _ = writeln!(log, "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            let params = json!({ "scheme": scheme, "problem": cfg.problem, "alpha": alpha, "n": n });
            if cfg.formats.fields {
                w.field("z.csv", &sol.z, params.clone())?;
                w.field("u.csv", &sol.u, params.clone())?;
                w.field("p.csv", &sol.p, params.clone())?;
            }
            w.put("solve.json", "summary", params, serde_json::to_string_pretty(&summary).unwrap_or_default().as_bytes())?;
            Ok(EXIT_OK)
        }
        Task::Converge { schemes, meshes } => {
            let mut reports = Vec::new();
            for &s in schemes {
                let spec = spec_of(cfg, s, alpha)?;
                reports.push(study::run_convergence(&spec, &problem, meshes, &options)?);
            }
            let md = study::markdown_table(&reports);
            let _ = write!(log, "{md}");
            for r in &reports {
                let v = match r.verdict {
                    study::Verdict::ConvergentOrder(o) => format!("convergent, order {o:.2}"),
                    study::Verdict::NonConvergent => "non-convergent".into(),
                };
                let _ = writeln!(log, "{}: {v}", r.scheme.name);
            }
            let params = json!({ "schemes": schemes, "problem": cfg.problem, "alpha": alpha, "meshes": meshes });
            if cfg.formats.markdown {
                w.put("table.md", "markdown-table", params.clone(), md.as_bytes())?;
            }
            if cfg.formats.csv {
                w.put("table.csv", "report-csv", params.clone(), study::report_csv(&reports, cfg.timings).as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Task::Sweep { base: scheme, n, gammas } => {
            let entries = study::gamma_sweep(*scheme, &problem, *n, gammas, &options)?;
            let mut csv = String::from("gamma,osc_index,max_abs_u,err_u\n");
            for e in &entries {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    sci(e.gamma, 6),
                    sci(e.osc_index, 6),
                    sci(e.max_abs_u, 6),
                    e.err_u.map(|x| sci(x, 6)).unwrap_or_default()
                );
                let _ = writeln!(
                    log,
                    "gamma = {}: oscillation index {:.4}, max|u| = {:.4}",
                    gamma_label(e.gamma),
                    e.osc_index,
                    e.max_abs_u
                );
                if cfg.formats.fields {
                    let params = json!({ "base": scheme, "problem": cfg.problem, "alpha": alpha, "n": n, "gamma": e.gamma });
                    let label = gamma_label(e.gamma);
                    w.field(&format!("u_gamma_{label}.csv"), &e.u, params.clone())?;
                    w.field(&format!("z_gamma_{label}.csv"), &e.z, params)?;
                }
            }
            let params = json!({ "base": scheme, "problem": cfg.problem, "alpha": alpha, "n": n, "gammas": gammas });
            w.put("sweep.csv", "sweep-summary", params, csv.as_bytes())?;
            Ok(EXIT_OK)
        }
        Task::Audit {
            kind,
            n,
            meshes,
            samples,
            seed,
        } => {
            let all = *kind == AuditKind::All;
            let mut out = serde_json::Map::new();
            if all || *kind == AuditKind::Equivalence {
                let mut v = Vec::new();
                for (a, b) in study::EQUIVALENT_PAIRS {
                    let r = study::equivalence_audit(a, b, &problem, *n, &options)?;
                    let _ = writeln!(
                        log,
                        "{a} vs {b}: |dz| = {}, |du| = {}, |dp| = {}",
                        sci(r.dz, 2),
                        sci(r.du, 2),
                        sci(r.dp, 2)
                    );
                    v.push(r);
                }
                out.insert("equivalence".into(), json!(v));
            }
            if all || *kind == AuditKind::Stability {
                let alphas = cfg.alpha.map(|a| vec![a]).unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
                let ns = meshes.clone().unwrap_or_else(|| vec![4, 8, 16]);
                let mut v = Vec::new();
                for &a in &alphas {
                    for &m in &ns {
                        let r = study::stability_audit(a, m)?;
                        let _ = writeln!(log, "alpha = {a}, n = {m}: sigma_min = {:.6}, bound = {}", r.sigma_min, r.bound);
                        v.push(r);
                    }
                }
                out.insert("stability".into(), json!(v));
            }
            if all || *kind == AuditKind::Truncation {
                let ns = meshes.clone().unwrap_or_else(|| vec![20, 40, 80]);
                let rows = study::truncation_audit(&problem, &ns)?;
                for r in &rows {
                    let _ = writeln!(
                        log,
                        "n = {}: F {} G {} H {} S {}",
                        r.n,
                        sci(r.f, 2),
                        sci(r.g, 2),
                        sci(r.h, 2),
                        sci(r.s, 2)
                    );
                }
                out.insert("truncation".into(), json!(rows));
            }
            if all || *kind == AuditKind::Embedding {
                let ns = meshes.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
                let rows = study::embedding_audit(&ns, *samples, *seed)?;
                for r in &rows {
                    let _ = writeln!(
                        log,
                        "n = {}: max |v|/|Δv| = {:.4}, max |v|/|Fv| = {:.4}",
                        r.n, r.max_ratio_laplacian, r.max_ratio_compact
                    );
                }
                out.insert("embedding".into(), json!(rows));
            }
            if all || *kind == AuditKind::Filter {
                let m = (*n).min(schemes::DENSE_LIMIT);
                let grid = Grid::two_d(m)?;
                let gamma = cfg.gamma.unwrap_or(1.0);
                let dev = schemes::filter_deviation(grid, gamma)?;
                let _ = writeln!(log, "filter n = {m}, gamma = {gamma}: |S - I| = {}", sci(dev, 3));
                out.insert("filter".into(), json!({ "n": m, "gamma": gamma, "deviation": dev }));
            }
            let mut params = base;
            params["kind"] = json!(kind);
            let name = format!("audit_{}.json", serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            w.put(&name, "audit", params, serde_json::to_string_pretty(&out).unwrap_or_default().as_bytes())?;
            Ok(EXIT_OK)
        }
        Task::Identities { n } => {
            let checks = study::identity_suite(*n)?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                let _ = writeln!(
                    log,
                    "[{}] {} (n = {}): {} (scale {})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.n,
                    sci(c.value, 2),
                    sci(c.scale, 2)
                );
            }
            w.put(
                "identities.json",
                "identities",
                json!({ "n": n }),
                serde_json::to_string_pretty(&checks).unwrap_or_default().as_bytes(),
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_IDENTITY })
        }
    }
}

/// Runs a validated configuration, writing artifacts and `manifest.json`.
pub fn run(cfg: &RunConfig, log: &mut dyn std::io::Write) -> Result<RunOutcome, OcpError> {
    cfg.solve.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut w = Writer {
        dir: cfg.out_dir.clone(),
        artifacts: Vec::new(),
    };
    let code = run_tasks(cfg, &mut w, log)?;
    let manifest = json!({ "config": cfg, "artifacts": w.artifacts });
    std::fs::write(
        cfg.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap_or_default(),
    )?;
    Ok(RunOutcome {
        artifacts: w.artifacts,
        exit_code: code,
    })
}

/// Exit code for a library error.
pub fn exit_code(e: &OcpError) -> i32 {
    match e {
        OcpError::Solver { .. } => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

/// Full entry point: parse, run, report. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(c) => c,
        Err(CliError::Display(s)) => {
            let _ = write!(out, "{s}");
            return EXIT_OK;
        }
        Err(CliError::Usage(s)) => {
            let _ = writeln!(err, "error: {}", s.trim_start_matches("error: ").trim_end());
            return EXIT_USAGE;
        }
    };
    match run(&cfg, out) {
        Ok(o) => o.exit_code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
