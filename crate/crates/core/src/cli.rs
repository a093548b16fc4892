//! Command-line surface: `dd`, `solve`, `certify`, `fdr-check`,
//! `verify-identities` and `replay`, plus run manifests.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 parse error, 3 empty
//! interior, 4 level too low, 5 verification failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::{certificate_json, certify, objective_poly, term_poly, verify_certificate_seeded, Certificate, Verdict};
use crate::dd_engine::{bounds_first_order, dd_run, ledger_verify, DDError, DDOptions, InitMode};
use crate::exactmath::{approx_rat, fmt_rat, Poly, Rat};
use crate::facial::{build_fdr_level, fdp_brute_force, substitute_indicators, FDPInstance};
use crate::lp_exact::{lp_solve, LPProblem, LpStatus};
use crate::polyhedra::{enumerate_vertices_oracle, HPolyhedron, PolytopeJson};
use crate::relaxation::{
    all_k_orders, build_de_linear_with, build_hull_lp, build_level_lp, build_rlt_baseline, gap_table, solve_and_report, ACInstance,
    DBPInstance, DeOptions, LevelInput, RelaxError, Report, RltFlavor,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EMPTY_INTERIOR: i32 = 3;
pub const EXIT_LEVEL_TOO_LOW: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Environment variable fixing the RNG for sampled-point checks.
pub const SEED_ENV: &str = "BARYDD_SEED";

#[derive(Debug, Parser)]
#[command(name = "barydd", version, about = "Symbolic barycentric coordinates, exact relaxation hierarchies and certificates")]
pub struct Cli {
    /// Write a run manifest to this file.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Hull,
    Ddr,
    De,
    Rlt1,
    Rltbox,
    Fdr,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the double description method and dump coordinates and ledger.
    Dd {
        input: PathBuf,
        /// Comma-separated 0-based rows, `natural` or `bounds-first`.
        #[arg(long, default_value = "natural")]
        order: String,
        /// `default`, `orthant`, `phase1` or `partial:<k>`.
        #[arg(long, default_value = "default")]
        init: String,
        #[arg(long)]
        prune: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a relaxation and print its exact value.
    Solve {
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        level: Option<usize>,
        /// Orders separated by `;` (rows by `,`), or `all-k-subsets`.
        #[arg(long)]
        orders: Option<String>,
        #[arg(long)]
        theta_cap: Option<usize>,
        /// Report JSON with primal, duals and gap table.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Append decimal renderings after exact values.
        #[arg(long)]
        approx: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Warn when `all-k-subsets` expands to more orders than this.
        #[arg(long, default_value_t = 1000)]
        warn_orders: usize,
        /// FDR only: add the indicator substitution.
        #[arg(long)]
        substitute: bool,
    },
    /// Extract an optimality certificate from the hull LP.
    Certify {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
        /// Re-verify this certificate file instead of extracting one.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Compare every FDR level with the disjunct enumeration.
    FdrCheck { input: PathBuf },
    /// Run the invariant suite on a polytope and print a check matrix.
    VerifyIdentities {
        input: PathBuf,
        #[arg(long, default_value = "bounds-first")]
        order: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Re-run the command recorded in a manifest.
    Replay { manifest_file: PathBuf },
}

/// Record of one invocation; replaying it reproduces the output files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub input_hash: String,
    /// Row orders used (ς, or the family Ξ).
    pub orders: Vec<Vec<usize>>,
    pub options: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
    pub wall_time_ms: u128,
}

struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

impl From<RelaxError> for Failure {
    fn from(e: RelaxError) -> Self {
        let code = match &e {
            RelaxError::LevelTooLow { .. } => EXIT_LEVEL_TOO_LOW,
            RelaxError::DD(DDError::EmptyInterior(_)) => EXIT_EMPTY_INTERIOR,
            _ => EXIT_USAGE,
        };
        fail(code, e.to_string())
    }
}

impl From<DDError> for Failure {
    fn from(e: DDError) -> Self {
        let code = if matches!(e, DDError::EmptyInterior(_)) { EXIT_EMPTY_INTERIOR } else { EXIT_USAGE };
        fail(code, e.to_string())
    }
}

/// Collected per-run facts for the manifest.
#[derive(Default)]
struct RunInfo {
    input_hash: String,
    orders: Vec<Vec<usize>>,
    options: BTreeMap<String, String>,
    artifacts: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn read_input(path: &Path, info: &mut RunInfo) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    info.input_hash = sha256_hex(&bytes);
    String::from_utf8(bytes).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str, info: &mut RunInfo) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    info.artifacts.push(path.display().to_string());
    Ok(())
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_json_value(text: &str) -> Result<serde_json::Value, Failure> {
    serde_json::from_str(text).map_err(|e| fail(EXIT_PARSE, format!("line {} column {}: {e}", e.line(), e.column())))
}

fn parse_polytope(text: &str) -> Result<HPolyhedron, Failure> {
    let j: PolytopeJson = serde_json::from_str(text).map_err(|e| fail(EXIT_PARSE, format!("line {} column {}: {e}", e.line(), e.column())))?;
    j.to_hpoly().map_err(|e| fail(EXIT_PARSE, e.to_string()))
}

fn parse_rows(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| fail(EXIT_USAGE, format!("bad row index '{t}'")))).collect()
}

fn parse_order(spec: &str, p: &HPolyhedron) -> Result<Vec<usize>, Failure> {
    match spec {
        "natural" => Ok((0..p.m()).collect()),
        "bounds-first" => Ok(bounds_first_order(p)),
        s => parse_rows(s),
    }
}

fn parse_init(s: &str) -> Result<InitMode, Failure> {
    match s {
        "default" => Ok(InitMode::Default),
        "orthant" => Ok(InitMode::Orthant),
        "phase1" => Ok(InitMode::Phase1),
        s => s
            .strip_prefix("partial:")
            .and_then(|k| k.parse().ok())
            .map(InitMode::PartialOrthant)
            .ok_or_else(|| fail(EXIT_USAGE, format!("unknown init mode '{s}'"))),
    }
}

fn show(r: &Rat, approx: bool) -> String {
    if approx {
        format!("{} (~{})", fmt_rat(r), approx_rat(r, 6))
    } else {
        fmt_rat(r)
    }
}

enum Instance {
    Dbp(DBPInstance),
    Ac(ACInstance),
    Fdp(FDPInstance),
}

fn parse_instance(text: &str) -> Result<Instance, Failure> {
    let v = parse_json_value(text)?;
    let parsed = if v.get("blocks").is_some() {
        FDPInstance::from_json_str(text).map(Instance::Fdp)
    } else if v.get("g").is_some() {
        ACInstance::from_json_str(text).map(Instance::Ac)
    } else {
        DBPInstance::from_json_str(text).map(Instance::Dbp)
    };
    parsed.map_err(|e| fail(EXIT_PARSE, e))
}

/// Parses argv, runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let start = Instant::now();
    let mut info = RunInfo::default();
    let result = dispatch(&cli.command, out, err, &mut info);
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    };
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            command: command_name(&cli.command).into(),
            argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            input_hash: info.input_hash,
            orders: info.orders,
            options: info.options,
            artifacts: info.artifacts,
            wall_time_ms: start.elapsed().as_millis(),
        };
        if let Err(e) = std::fs::write(path, pretty(&manifest)) {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    code
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Dd { .. } => "dd",
        Command::Solve { .. } => "solve",
        Command::Certify { .. } => "certify",
        Command::FdrCheck { .. } => "fdr-check",
        Command::VerifyIdentities { .. } => "verify-identities",
        Command::Replay { .. } => "replay",
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    match cmd {
        Command::Dd { input, order, init, prune, out: dest } => cmd_dd(input, order, init, *prune, dest.as_deref(), out, info),
        Command::Solve { input, method, level, orders, theta_cap, report, approx, jobs, warn_orders, substitute } => {
            let opts = SolveOpts {
                method: *method,
                level: *level,
                orders: orders.clone(),
                theta_cap: *theta_cap,
                report: report.clone(),
                approx: *approx,
                jobs: *jobs,
                warn_orders: *warn_orders,
                substitute: *substitute,
            };
            cmd_solve(input, &opts, out, err, info)
        }
        Command::Certify { input, out: dest, verify, check } => cmd_certify(input, dest.as_deref(), *verify, check.as_deref(), out, info),
        Command::FdrCheck { input } => cmd_fdr_check(input, out, info),
        Command::VerifyIdentities { input, order, samples } => cmd_verify_identities(input, order, *samples, out, info),
        Command::Replay { manifest_file } => cmd_replay(manifest_file, out, err),
    }
}

fn cmd_dd(input: &Path, order: &str, init: &str, prune: bool, dest: Option<&Path>, out: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    let text = read_input(input, info)?;
    let p = parse_polytope(&text)?;
    let order = parse_order(order, &p)?;
    let init = parse_init(init)?;
    info.options.insert("init".into(), format!("{init:?}"));
    info.options.insert("prune".into(), prune.to_string());
    let run = dd_run(&p, &order, DDOptions { init, prune })?;
    info.orders.push(run.order.clone());
    let _ = writeln!(out, "order: {}", join(&run.order));
    let dump = pretty(&run.dump_json());
    match dest {
        Some(path) => write_file(path, &dump, info)?,
        None => {
            let _ = write!(out, "{dump}");
        }
    }
    Ok(EXIT_OK)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

struct SolveOpts {
    method: Method,
    level: Option<usize>,
    orders: Option<String>,
    theta_cap: Option<usize>,
    report: Option<PathBuf>,
    approx: bool,
    jobs: usize,
    warn_orders: usize,
    substitute: bool,
}

fn incompatible(method: Method, what: &str) -> Failure {
    fail(EXIT_USAGE, format!("method {method:?} does not apply to {what} instances").to_lowercase())
}

fn cmd_solve(input: &Path, o: &SolveOpts, out: &mut dyn Write, err: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    let text = read_input(input, info)?;
    let inst = parse_instance(&text)?;
    info.options.insert("method".into(), format!("{:?}", o.method).to_lowercase());
    if let Some(k) = o.level {
        info.options.insert("level".into(), k.to_string());
    }
    if let Some(t) = o.theta_cap {
        info.options.insert("theta_cap".into(), t.to_string());
    }
    let explicit_order = |p: &HPolyhedron| -> Result<Vec<usize>, Failure> {
        match o.orders.as_deref() {
            None => Ok((0..p.m()).collect()),
            Some(s) if s.contains(';') || s == "all-k-subsets" => Err(fail(EXIT_USAGE, "this method takes a single order")),
            Some(s) => parse_order(s, p),
        }
    };
    let mut gaps = Vec::new();
    let lp: LPProblem = match (&inst, o.method) {
        (Instance::Dbp(d), Method::Hull) => build_hull_lp(d)?.lp,
        (Instance::Ac(a), Method::Hull) => {
            let order: Vec<usize> = (0..a.p.m()).collect();
            build_level_lp(LevelInput::Ac(a), order.len(), &order)?.lp
        }
        (Instance::Dbp(_) | Instance::Ac(_), Method::Ddr) => {
            let li = match &inst {
                Instance::Dbp(d) => LevelInput::Dbp(d),
                Instance::Ac(a) => LevelInput::Ac(a),
                Instance::Fdp(_) => unreachable!(),
            };
            let p = match &inst {
                Instance::Dbp(d) => &d.p,
                Instance::Ac(a) => &a.p,
                Instance::Fdp(_) => unreachable!(),
            };
            let order = explicit_order(p)?;
            let k = o.level.unwrap_or(order.len());
            info.orders.push(order.clone());
            let _ = writeln!(err, "order: {}", join(&order));
            let m = build_level_lp(li, k, &order)?;
            if o.report.is_some() {
                gaps = gap_table(li, &order)?;
            }
            m.lp
        }
        (Instance::Dbp(d), Method::De) => {
            let k = o.level.unwrap_or(1);
            let orders = match o.orders.as_deref() {
                Some("all-k-subsets") => {
                    let all = all_k_orders(d.p.m(), k);
                    if all.len() > o.warn_orders {
                        let _ = writeln!(err, "warning: all-k-subsets expands to {} orders", all.len());
                    }
                    all
                }
                Some(s) => s.split(';').map(parse_rows).collect::<Result<Vec<_>, _>>()?,
                None => vec![(0..k.min(d.p.m())).collect()],
            };
            for ord in &orders {
                let _ = writeln!(err, "order: {}", join(ord));
            }
            info.orders.extend(orders.iter().cloned());
            info.options.insert("jobs".into(), o.jobs.to_string());
            let model = build_de_linear_with(d, k, &orders, DeOptions { theta_cap: o.theta_cap, jobs: o.jobs })?;
            let _ = writeln!(err, "theta_cap: {}", model.theta_cap);
            model.lp
        }
        (Instance::Dbp(d), Method::Rlt1) => build_rlt_baseline(d, RltFlavor::Level1General)?,
        (Instance::Dbp(d), Method::Rltbox) => build_rlt_baseline(d, RltFlavor::BoxLevel(o.level.unwrap_or(d.n())))?,
        (Instance::Fdp(f), Method::Fdr) => {
            let k = o.level.unwrap_or(f.np());
            let model = build_fdr_level(f, k).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            if o.substitute {
                info.options.insert("substitute".into(), "true".into());
                substitute_indicators(f, &model).lp
            } else {
                model.lp
            }
        }
        (Instance::Dbp(_), m) => return Err(incompatible(m, "disjoint bilinear")),
        (Instance::Ac(_), m) => return Err(incompatible(m, "affine-convex")),
        (Instance::Fdp(_), m) => return Err(incompatible(m, "facial disjunctive")),
    };
    let (sol, mut report): (_, Report) = solve_and_report(&lp);
    report.gap_table = gaps;
    match sol.status {
        LpStatus::Optimal => {
            let _ = writeln!(out, "{}", show(&sol.value, o.approx));
        }
        LpStatus::Infeasible => {
            let _ = writeln!(out, "infeasible");
        }
        LpStatus::Unbounded => {
            let _ = writeln!(out, "unbounded");
        }
    }
    if let Some(path) = &o.report {
        let mut v = serde_json::to_value(&report).expect("serializable");
        if o.approx && sol.status == LpStatus::Optimal {
            v["value_approx"] = approx_rat(&sol.value, 12).into();
        }
        write_file(path, &pretty(&v), info)?;
    }
    Ok(EXIT_OK)
}

/// `z·(obj − δ) − Σ terms`, zero for a valid identity.
pub fn identity_residual(inst: &DBPInstance, cert: &Certificate) -> Poly {
    let nv = inst.n() + inst.ny();
    let lhs = &cert.zpoly * &(&objective_poly(inst) - &Poly::constant(nv, cert.delta.clone()));
    let rhs = cert.terms.iter().fold(Poly::zero(nv), |acc, t| &acc + &term_poly(inst, t));
    &lhs - &rhs
}

fn cmd_certify(input: &Path, dest: Option<&Path>, verify: bool, check: Option<&Path>, out: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    let text = read_input(input, info)?;
    let inst = match parse_instance(&text)? {
        Instance::Dbp(d) => d,
        _ => return Err(fail(EXIT_USAGE, "certify needs a disjoint bilinear instance")),
    };
    let seed = seed_from_env();
    info.options.insert("seed".into(), seed.to_string());
    let (cert, verdict) = match check {
        Some(path) => {
            let ctext = std::fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
            let cert: Certificate = serde_json::from_str(&ctext).map_err(|e| fail(EXIT_PARSE, format!("line {} column {}: {e}", e.line(), e.column())))?;
            let verdict = verify_certificate_seeded(&inst, &cert, seed);
            (cert, verdict)
        }
        None => {
            info.orders.push(bounds_first_order(&inst.p));
            let (cert, _, _) = certify(&inst).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let verdict = if verify { verify_certificate_seeded(&inst, &cert, seed) } else { Verdict { ok: true, diagnostic: None } };
            (cert, verdict)
        }
    };
    let names: Vec<String> = (1..=inst.n()).map(|j| format!("x{j}")).chain((1..=inst.ny()).map(|l| format!("y{l}"))).collect();
    let _ = writeln!(out, "delta: {}", fmt_rat(&cert.delta));
    let _ = writeln!(out, "z: {}", cert.zpoly.render(Some(&names)));
    if let Some(path) = dest {
        write_file(path, &pretty(&certificate_json(&inst, &cert, &verdict)), info)?;
    }
    if verify || check.is_some() {
        let residual = identity_residual(&inst, &cert);
        let res = if residual.is_zero() { "0".to_string() } else { residual.render(Some(&names)) };
        if verdict.ok {
            let _ = writeln!(out, "PASS residual: {res}");
        } else {
            let _ = writeln!(out, "FAIL residual: {res} ({})", verdict.diagnostic.unwrap_or_default());
            return Ok(EXIT_VERIFY);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_fdr_check(input: &Path, out: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    let text = read_input(input, info)?;
    let inst = match parse_instance(&text)? {
        Instance::Fdp(f) => f,
        _ => return Err(fail(EXIT_USAGE, "fdr-check needs a facial disjunctive instance")),
    };
    let fmt = |v: &Option<Rat>| v.as_ref().map_or("infeasible".to_string(), fmt_rat);
    let brute = fdp_brute_force(&inst).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let _ = writeln!(out, "disjuncts: {}", fmt(&brute));
    let mut last = None;
    for k in 1..=inst.np() {
        let model = build_fdr_level(&inst, k).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
        let value = lp_value(&model.lp)?;
        let sub = lp_value(&substitute_indicators(&inst, &model).lp)?;
        let _ = writeln!(out, "level {k}: {}  substituted: {}", fmt(&value), fmt(&sub));
        last = Some(value);
    }
    if last.as_ref() == Some(&brute) {
        let _ = writeln!(out, "PASS level {} equals the disjunct enumeration", inst.np());
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "FAIL level {} differs from the disjunct enumeration", inst.np());
        Ok(EXIT_VERIFY)
    }
}

fn lp_value(lp: &LPProblem) -> Result<Option<Rat>, Failure> {
    let s = lp_solve(lp);
    match s.status {
        LpStatus::Optimal => Ok(Some(s.value)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(fail(EXIT_USAGE, "relaxation is unbounded")),
    }
}

/// Named pass/fail checks on the double description of one polytope.
pub fn identity_checks(p: &HPolyhedron, order: &[usize], samples: usize, seed: u64) -> Result<Vec<(String, bool)>, DDError> {
    let raw = dd_run(p, order, DDOptions { init: InitMode::Default, prune: false })?;
    let pruned = dd_run(p, order, DDOptions { init: InitMode::Default, prune: true })?;
    let mut checks = Vec::new();
    checks.push(("linear precision".to_string(), raw.levels.iter().chain(std::iter::once(&pruned.state)).all(|s| s.linear_precision_holds())));
    checks.push(("ledger".to_string(), raw.steps.iter().all(|s| ledger_verify(&s.before, &s.after, &s.entry))));
    checks.push(("degree bounds".to_string(), raw.levels.iter().all(|s| s.degree_bounds_hold())));
    let oracle = enumerate_vertices_oracle(p)?;
    let mut got = pruned.state.vertices();
    got.sort();
    let mut want = oracle.clone();
    want.sort();
    checks.push(("pruned vertices".to_string(), got == want));
    let bounded = pruned.state.gen.l.is_empty() && pruned.state.gen.r.iter().all(|r| r[0].is_positive());
    let positive = if bounded {
        let (_, lams) = pruned.state.dehomogenized()?;
        crate::certify::interior_samples(&oracle, samples, seed).iter().all(|x| {
            let mut pt = vec![Rat::from_integer(1.into())];
            pt.extend(x.iter().cloned());
            lams.iter().all(|f| f.eval(&pt).is_ok_and(|v| v.is_positive()))
        })
    } else {
        true
    };
    checks.push(("interior positivity".to_string(), positive));
    Ok(checks)
}

fn cmd_verify_identities(input: &Path, order: &str, samples: usize, out: &mut dyn Write, info: &mut RunInfo) -> Result<i32, Failure> {
    let text = read_input(input, info)?;
    let p = parse_polytope(&text)?;
    let order = parse_order(order, &p)?;
    let seed = seed_from_env();
    info.orders.push(order.clone());
    info.options.insert("seed".into(), seed.to_string());
    let _ = writeln!(out, "order: {}", join(&order));
    let checks = identity_checks(&p, &order, samples, seed)?;
    let width = checks.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    for (name, ok) in &checks {
        let _ = writeln!(out, "{name:<width$}  {}", if *ok { "PASS" } else { "FAIL" });
    }
    Ok(if checks.iter().all(|(_, ok)| *ok) { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_replay(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| fail(EXIT_PARSE, format!("line {} column {}: {e}", e.line(), e.column())))?;
    let mut argv = vec!["barydd".to_string()];
    // Drop the manifest flag so the recorded manifest is not overwritten.
    let mut it = m.argv.iter();
    while let Some(a) = it.next() {
        if a == "--manifest" {
            it.next();
        } else if !a.starts_with("--manifest=") {
            argv.push(a.clone());
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    let mut info = RunInfo::default();
    let code = dispatch(&cli.command, out, err, &mut info)?;
    if info.input_hash != m.input_hash {
        return Err(fail(EXIT_VERIFY, "input changed since the manifest was written"));
    }
    Ok(code)
}
