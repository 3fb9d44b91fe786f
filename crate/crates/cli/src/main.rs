// esslab: scenario runner, theorem verification and plot-data emission.
//
// Exit codes: 0 success or pass, 1 verification failed, 2 usage error,
// 3 numeric or output error.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use esslab::criteria::{chihara_check, golinskii_decay_spectrum, krein_check, TargetSet, KREIN_TOL};
use esslab::esscore::{
    discriminant_spectrum, essential_spectrum, sweep, truncation_spectrum, verify_theorem, EssOptions, Persistence,
    SweepRow,
};
use esslab::limits::{detect_right_limits, right_limit_set};
use esslab::localization::commutator_c_norm;
use esslab::{Error, PointCloud, ScenarioSpec, SetKind, SpectralSet};

const GIT_DESCRIBE: &str = env!("ESSLAB_GIT_DESCRIBE");
const LOCALIZATION_TAG: &str = "localization";

#[derive(Debug, Parser)]
#[command(name = "esslab", version, about = "Essential spectra of Jacobi and CMV operators via right limits")]
struct Cli {
    #[command(flatten)]
    tol: Tolerances,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
struct Tolerances {
    /// Gap below which components are fused when forming unions.
    #[arg(long = "tol-merge", global = true, default_value_t = esslab::spectra::DEFAULT_MERGE_TOL)]
    merge: f64,
    /// Persistence radius for truncation clouds.
    #[arg(long = "tol-persist", global = true, default_value_t = esslab::esscore::DEFAULT_PERSIST_DELTA)]
    persist: f64,
    /// Clustering radius for numeric right-limit detection.
    #[arg(long = "tol-eps", global = true, default_value_t = 0.05)]
    eps: f64,
    /// Tail threshold for the Krein and Chihara checks.
    #[arg(long = "tol-krein", global = true, default_value_t = KREIN_TOL)]
    krein: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Essential spectrum of a scenario.
    Spectrum {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Structural)]
        method: Method,
        /// Truncation size.
        #[arg(long = "N", default_value_t = 2000)]
        n: usize,
        /// CSV destination; a `.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Right-limit set, structural or detected from stream windows.
    Rightlimits {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        detect: bool,
        /// Window half-width for detection.
        #[arg(long = "L", default_value_t = 64)]
        l: u64,
        /// Clustering radius for detection; overrides --tol-eps.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a registered theorem check (or `localization`).
    Verify {
        tag: String,
        #[arg(long, value_delimiter = ',')]
        budget: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff distance from truncation clouds to the reference set.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Reference::Structural)]
        reference: Reference,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite essential spectrum criteria.
    Criteria {
        #[arg(value_enum)]
        which: Criterion,
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated real targets (Krein: any number, Chihara: two).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        targets: Vec<f64>,
        #[arg(long, default_value_t = 4000)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Structural,
    Truncation,
    Discriminant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reference {
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Criterion {
    Krein,
    Chihara,
    Golinskii,
}

/// Terminal state of a run.
enum Failure {
    Verification,
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type Run = Result<(), Failure>;

/// CSV rows plus the provenance written to the sidecar.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Context {
    tol: Tolerances,
    opts: EssOptions,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let mut opts = EssOptions::new();
    opts.limits.merge_tol = cli.tol.merge;
    opts.persist_delta = cli.tol.persist;
    opts.detect.eps = cli.tol.eps;
    let ctx = Context { tol: cli.tol, opts };
    match run(&ctx, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("ESSLAB_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("ESSLAB_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("ESSLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(ctx: &Context, command: Command) -> Run {
    match command {
        Command::Spectrum { scenario, method, n, out } => {
            let spec = load(&scenario)?;
            let (doc, table) = match method {
                Method::Structural => {
                    let ess = essential_spectrum(&spec, &ctx.opts)?;
                    let mut doc = to_value(&ess.set)?;
                    doc["report"] = to_value(&ess.report)?;
                    (doc, set_table(&ess.set))
                }
                Method::Discriminant => {
                    let set = discriminant_spectrum(&spec)?;
                    (to_value(&set)?, set_table(&set))
                }
                Method::Truncation => {
                    let p = Persistence { delta: ctx.tol.persist, ..Persistence::default_for(n) };
                    let cloud = truncation_spectrum(&spec, n, Some(p))?.with_meta(Some(n), Some(spec.label()));
                    (to_value(&cloud)?, cloud_table(&cloud))
                }
            };
            print_json(&doc)?;
            if let Some(path) = out {
                let meta = json!({ "command": "spectrum", "method": method, "N": n });
                emit(&path, &table, ctx, Some(&spec), meta)?;
            }
            Ok(())
        }
        Command::Rightlimits { scenario, detect, l, eps, out } => {
            let spec = load(&scenario)?;
            let eps = eps.unwrap_or(ctx.tol.eps);
            let (doc, table) = if detect {
                let centers = ctx.opts.detect.center_list();
                let clusters = detect_right_limits(&spec, l, &centers, eps)?;
                let rows = clusters
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        vec![
                            i.to_string(),
                            c.radius.to_string(),
                            c.late_density.to_string(),
                            c.transient.to_string(),
                            c.centers.len().to_string(),
                        ]
                    })
                    .collect();
                let header = vec!["cluster", "radius", "late_density", "transient", "centers"];
                (json!({ "detected": true, "L": l, "eps": eps, "clusters": clusters }), Table { header, rows })
            } else {
                let set = right_limit_set(&spec, &ctx.opts.limits)?;
                let rows = set.members.iter().enumerate().map(|(i, m)| vec![i.to_string(), m.tag().to_string()]).collect();
                (to_value(&set)?, Table { header: vec!["member", "tag"], rows })
            };
            print_json(&doc)?;
            if let Some(path) = out {
                let meta = json!({ "command": "rightlimits", "detect": detect, "L": l, "eps": eps });
                emit(&path, &table, ctx, Some(&spec), meta)?;
            }
            Ok(())
        }
        Command::Verify { tag, budget, out } => {
            if tag == LOCALIZATION_TAG {
                return verify_localization(ctx, out);
            }
            let report = verify_theorem(&tag, &budget, &ctx.opts)?;
            print_json(&to_value(&report)?)?;
            if let Some(path) = out {
                let meta = json!({ "command": "verify", "tag": tag, "scenario_label": report.scenario });
                emit(&path, &sweep_table(&report.distances), ctx, None, meta)?;
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Sweep { scenario, sizes, reference: Reference::Structural, out } => {
            let spec = load(&scenario)?;
            let rows = sweep(&spec, &sizes, &ctx.opts)?;
            let table = sweep_table(&rows);
            write_stdout(&csv_string(&table)?)?;
            if let Some(path) = out {
                let meta = json!({ "command": "sweep", "reference": "structural", "sizes": rows.iter().map(|r| r.n).collect::<Vec<_>>() });
                emit(&path, &table, ctx, Some(&spec), meta)?;
            }
            Ok(())
        }
        Command::Criteria { which, scenario, targets, horizon, out } => {
            let spec = load(&scenario)?;
            let (doc, holds, table) = match which {
                Criterion::Krein => {
                    let t = TargetSet::line(targets.clone())?;
                    let r = krein_check(&spec, &t, horizon, ctx.tol.krein)?;
                    (to_value(&r)?, r.holds(), profile_table(&r.decay_profile))
                }
                Criterion::Chihara => {
                    let &[x1, x2] = targets.as_slice() else {
                        return Err(Failure::Usage(format!("chihara needs exactly two targets, got {}", targets.len())));
                    };
                    if x1 == x2 {
                        return Err(Failure::Usage("chihara targets must be distinct".into()));
                    }
                    let r = chihara_check(&spec, x1, x2, horizon, ctx.tol.krein)?;
                    (to_value(&r)?, r.holds(), profile_table(&r.decay_profile))
                }
                Criterion::Golinskii => {
                    if !targets.is_empty() {
                        return Err(Failure::Usage("golinskii takes no targets".into()));
                    }
                    let r = golinskii_decay_spectrum(&spec, horizon)?;
                    let set = SpectralSet::Circle(r.set.clone());
                    let doc = json!({
                        "criterion": "golinskii",
                        "set": to_value(&set)?,
                        "max_defect": r.max_defect,
                        "warning": r.warning,
                    });
                    (doc, r.warning.is_none(), set_table(&set))
                }
            };
            print_json(&doc)?;
            if let Some(path) = out {
                let meta = json!({ "command": "criteria", "criterion": format!("{which:?}").to_lowercase(), "targets": targets, "horizon": horizon });
                emit(&path, &table, ctx, Some(&spec), meta)?;
            }
            if holds {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

/// `‖C‖` of the tent commutator on the free matrix for `L = 4, 8, …, 256`.
/// Passes when `‖C‖·L²` stays within a factor 2 and each doubling of `L`
/// from 8 on shrinks `‖C‖` by a factor in `[0.2, 0.3]`.
fn verify_localization(ctx: &Context, out: Option<PathBuf>) -> Run {
    let spec = ScenarioSpec::free_jacobi();
    let mut norms = Vec::new();
    for k in 2..=8 {
        let l = 1usize << k;
        let lo = 4 * l as u64;
        norms.push(commutator_c_norm(&spec, l, lo, lo + 8 * l as u64 - 1)?);
    }
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), c| (a.min(c.scaled), b.max(c.scaled)));
    let ratios: Vec<f64> = norms.windows(2).filter(|w| w[0].l >= 8).map(|w| w[1].norm / w[0].norm).collect();
    let passed = hi / lo <= 2.0 && ratios.iter().all(|r| (0.2..=0.3).contains(r));
    let doc = json!({ "tag": LOCALIZATION_TAG, "norms": norms, "scaled_band": [lo, hi], "ratios": ratios, "passed": passed });
    print_json(&doc)?;
    if let Some(path) = out {
        let rows = norms
            .iter()
            .map(|c| vec![c.l.to_string(), c.c_l.to_string(), c.norm.to_string(), c.scaled.to_string()])
            .collect();
        let table = Table { header: vec!["L", "c_L", "norm_C", "norm_C_L2"], rows };
        emit(&path, &table, ctx, None, json!({ "command": "verify", "tag": LOCALIZATION_TAG }))?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn load(path: &Path) -> Result<ScenarioSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
    ScenarioSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Numeric(e.to_string()))
}

fn print_json(v: &Value) -> Run {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Numeric(e.to_string()))?;
    write_stdout(&(text + "\n"))
}

// A closed pipe downstream (e.g. `| head`) is not an error.
fn write_stdout(text: &str) -> Run {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Failure::Numeric(format!("cannot write stdout: {e}"))),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// plot data

fn set_table(set: &SpectralSet) -> Table {
    let (intervals, points): (Vec<[f64; 2]>, Vec<f64>) = match set {
        SpectralSet::Line(r) => (r.intervals().to_vec(), r.points().to_vec()),
        SpectralSet::Circle(c) => (c.arcs(), c.points().to_vec()),
    };
    let mut rows: Vec<(f64, f64, &str)> = intervals.iter().map(|iv| (iv[0], iv[1], "interval")).collect();
    rows.extend(points.iter().map(|&x| (x, x, "point")));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let kind = match set.kind() {
        SetKind::Line => "interval",
        SetKind::Circle => "arc",
    };
    let rows = rows
        .into_iter()
        .map(|(s, e, k)| vec![if k == "point" { "point" } else { kind }.to_string(), s.to_string(), e.to_string()])
        .collect();
    Table { header: vec!["kind", "start", "end"], rows }
}

/// One row per value, ascending; the second column is the 1-based ordinal.
fn cloud_table(cloud: &PointCloud) -> Table {
    let header = match cloud.kind {
        SetKind::Circle => vec!["theta", "zero"],
        SetKind::Line => vec!["x", "eigenvalue"],
    };
    let rows = cloud.sorted().iter().enumerate().map(|(i, v)| vec![v.to_string(), (i + 1).to_string()]).collect();
    Table { header, rows }
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| r.n);
    Table { header: vec!["N", "hausdorff"], rows: rows.iter().map(|r| vec![r.n.to_string(), r.hausdorff.to_string()]).collect() }
}

fn profile_table(profile: &[(u64, f64)]) -> Table {
    Table {
        header: vec!["block_start", "sup"],
        rows: profile.iter().map(|(s, v)| vec![s.to_string(), v.to_string()]).collect(),
    }
}

fn csv_string(table: &Table) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let numeric = |e: csv::Error| Failure::Numeric(e.to_string());
    w.write_record(&table.header).map_err(numeric)?;
    for row in &table.rows {
        w.write_record(row).map_err(numeric)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Numeric(e.to_string()))
}

/// Writes the CSV and its `<out>.meta.json` sidecar. No timestamps, so
/// identical inputs give identical bytes.
fn emit(path: &Path, table: &Table, ctx: &Context, spec: Option<&ScenarioSpec>, run: Value) -> Run {
    let scenario = match spec {
        Some(s) => to_value(s)?,
        None => Value::Null,
    };
    let meta = json!({
        "run": run,
        "scenario": scenario,
        "seeds": [],
        "tolerances": ctx.tol,
        "options": ctx.opts,
        "columns": table.header,
        "rows": table.rows.len(),
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": GIT_DESCRIBE,
    });
    let sidecar = {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    };
    let unwritable = |p: &Path, e: std::io::Error| Failure::Numeric(format!("cannot write {}: {e}", p.display()));
    fs::write(path, csv_string(table)?).map_err(|e| unwritable(path, e))?;
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Numeric(e.to_string()))?;
    fs::write(&sidecar, text + "\n").map_err(|e| unwritable(&sidecar, e))?;
    Ok(())
}
