use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bohrlab_core::almost_periodic::{cs_translates, smoothed, CsInstance};
use bohrlab_core::constructions::{behrend_set, ternary_free_set, Method};
use bohrlab_core::io::read_set;
use bohrlab_core::kk::{Kk, KkOutcome, KkSetup};
use bohrlab_core::roth::{count_3ap, run_main_iteration, CountMode};
use bohrlab_core::spectra::{chang_entropy_check, spectrum, EntropyOptions};
use bohrlab_core::suite::run_suite;
use bohrlab_core::{BohrSet, BohrSpec, CsMode, DensityFn, Error, Group, RegularBohr, RunConfig, Subset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bohrlab", version, about = "Bohr sets, spectra and progression counting on finite abelian groups")]
struct Cli {
    /// Print machine-readable output only: the header line and one compact JSON line.
    #[arg(long, global = true)]
    json: bool,
    /// TOML file overriding any run constant; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count three-term progressions in a set.
    Count {
        #[command(flatten)]
        set: GroupSet,
        #[arg(long, value_enum, default_value = "fourier")]
        mode: ModeArg,
    },
    /// Build a progression-free subset of {1..N}.
    Construct {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "N")]
        n: u64,
        /// Behrend dimension; every feasible one is tried when omitted.
        #[arg(long)]
        dim: Option<u32>,
        /// Set file to write, one integer per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Large spectrum of a set's indicator.
    Spectrum {
        #[command(flatten)]
        set: GroupSet,
        #[arg(long)]
        eps: f64,
        /// Bohr set whose normalised measure replaces Haar measure.
        #[arg(long)]
        bohr: Option<PathBuf>,
    },
    /// Entropy of a spectrum against the Chang-type bound.
    ChangReport {
        #[command(flatten)]
        set: GroupSet,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        bohr: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Find and verify almost-periodic translates of f ∗ μ_A.
    CsVerify {
        #[arg(long)]
        group: String,
        /// Set whose indicator is f.
        #[arg(long)]
        f: PathBuf,
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long = "S")]
        s: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: CsModeArg,
        #[arg(long)]
        seed: u64,
    },
    /// Run the Katz-Koester iteration.
    KkRun {
        #[arg(long)]
        group: String,
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long = "Aprime")]
        aprime: PathBuf,
        /// Bohr set containing A and A'; its regular dilate is used for B and B'.
        #[arg(long)]
        bohr: PathBuf,
        /// Dilation giving B'' inside B'.
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[command(flatten)]
        log: LogArg,
    },
    /// Density-increment iteration with a brute-force soundness check.
    RothRun {
        #[command(flatten)]
        set: GroupSet,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        log: LogArg,
    },
    /// Run the acceptance battery and print a pass/fail table.
    VerifySuite {
        /// Only these criteria (1-10).
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..=10))]
        only: Option<Vec<u32>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Include wall-clock times (output is then not reproducible).
        #[arg(long)]
        timings: bool,
        /// Exit with status 1 when any criterion fails.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct GroupSet {
    /// Group spec such as Z101, Z3^4 or Z4xZ9.
    #[arg(long)]
    group: String,
    /// Set file: coordinate tuples per line, or a BLAB bitmap.
    #[arg(long)]
    set: PathBuf,
}

#[derive(Args)]
struct LogArg {
    /// JSON-lines log, appended to.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fourier,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ternary,
    Behrend,
}

#[derive(Clone, Copy, ValueEnum)]
enum CsModeArg {
    Sampled,
    Exhaustive,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Out = Result<Value, Failure>;

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| Failure::Usage(format!("bad config {}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn group(spec: &str) -> Result<Group, Failure> {
    Ok(Group::parse(spec)?)
}

fn load_bohr(path: &Path, g: &Group) -> Result<BohrSet, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let spec: BohrSpec =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let b = spec.build()?;
    if b.group() != g {
        return Err(Error::GroupMismatch.into());
    }
    Ok(b)
}

struct Log {
    file: Option<std::fs::File>,
}

impl Log {
    fn open(arg: &LogArg, header: &Value) -> Result<Self, Failure> {
        let file = match &arg.log {
            Some(p) => {
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                Some(f)
            }
            None => None,
        };
        let mut log = Log { file };
        log.line(header)?;
        Ok(log)
    }

    fn line<T: Serialize>(&mut self, v: &T) -> Result<(), Failure> {
        if let Some(f) = &mut self.file {
            let s = serde_json::to_string(v).expect("serialisable");
            writeln!(f, "{s}").map_err(|e| Error::Io(e.to_string()))?;
        }
        Ok(())
    }
}

fn header(command: &str, cfg: &RunConfig) -> Value {
    json!({
        "bohrlab": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed,
        "config": cfg,
    })
}

fn run(cli: &Cli) -> Result<(Value, Value, Option<String>), Failure> {
    let seed = match &cli.cmd {
        Cmd::ChangReport { seed, .. } | Cmd::CsVerify { seed, .. } | Cmd::RothRun { seed, .. } => Some(*seed),
        Cmd::VerifySuite { seed, .. } => *seed,
        _ => None,
    };
    let cfg = load_config(cli.config.as_deref(), seed)?;
    let name = command_name(&cli.cmd);
    let head = header(name, &cfg);
    let mut text = None;
    let body = match &cli.cmd {
        Cmd::Count { set, mode } => {
            let g = group(&set.group)?;
            let a = read_set(&g, &set.set)?;
            let mode = match mode {
                ModeArg::Fourier => CountMode::Fourier,
                ModeArg::Brute => CountMode::Brute,
            };
            serde_json::to_value(count_3ap(&g, &a, mode)?).expect("serialisable")
        }
        Cmd::Construct { method, n, dim, out } => construct(*method, *n, *dim, out)?,
        Cmd::Spectrum { set, eps, bohr } => {
            let g = group(&set.group)?;
            let a = read_set(&g, &set.set)?;
            let mu = measure(&g, bohr.as_deref())?;
            let s = spectrum(&DensityFn::indicator(&a), &mu, *eps)?;
            let chars: Vec<Vec<usize>> = s.chars.iter().map(|&c| g.coords(c)).collect();
            json!({
                "epsilon": s.epsilon,
                "l1_norm": s.l1_norm,
                "threshold": s.threshold,
                "size": s.len(),
                "chars": chars,
                "magnitudes": s.magnitudes,
            })
        }
        Cmd::ChangReport { set, eps, bohr, .. } => {
            let g = group(&set.group)?;
            let a = read_set(&g, &set.set)?;
            let mu = measure(&g, bohr.as_deref())?;
            let r = chang_entropy_check(
                &DensityFn::indicator(&a),
                &mu,
                *eps,
                cfg.c_chang,
                &EntropyOptions::from_config(&cfg),
            )?;
            serde_json::to_value(r).expect("serialisable")
        }
        Cmd::CsVerify {
            group: gs,
            f,
            a,
            s,
            eps,
            p,
            mode,
            seed,
        } => cs_verify(&cfg, gs, f, a, s, *eps, *p, *mode, *seed)?,
        Cmd::KkRun {
            group: gs,
            a,
            aprime,
            bohr,
            rho,
            log,
        } => kk_run(&cfg, &head, gs, a, aprime, bohr, *rho, log)?,
        Cmd::RothRun { set, seed, log } => {
            let g = group(&set.group)?;
            let a = read_set(&g, &set.set)?;
            let mut lg = Log::open(log, &head)?;
            let run = run_main_iteration(&g, &a, &cfg, *seed)?;
            for s in &run.steps {
                lg.line(&json!({ "step": s }))?;
            }
            lg.line(&json!({ "terminal": run.terminal, "brute": run.brute }))?;
            let v = run.violations(&cfg);
            json!({
                "group": run.group,
                "alpha": run.alpha,
                "i0": run.i0,
                "step_bound": run.step_bound,
                "branches": run.steps.iter().map(|s| s.branch).collect::<Vec<_>>(),
                "brute_value": run.brute.value,
                "triple_count": run.brute.triple_count,
                "claimed_lower_bound": run.terminal.claimed(),
                "lb_direct": run.terminal.lb_direct,
                "lb_chain": run.terminal.lb_chain,
                "fallback": run.terminal.fallback,
                "sound": v.is_empty(),
                "violations": v,
            })
        }
        Cmd::VerifySuite { only, timings, .. } => {
            let report = run_suite(&cfg, only.as_deref(), *timings);
            text = Some(report.to_text());
            serde_json::to_value(&report).expect("serialisable")
        }
    };
    Ok((head, body, text))
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Count { .. } => "count",
        Cmd::Construct { .. } => "construct",
        Cmd::Spectrum { .. } => "spectrum",
        Cmd::ChangReport { .. } => "chang-report",
        Cmd::CsVerify { .. } => "cs-verify",
        Cmd::KkRun { .. } => "kk-run",
        Cmd::RothRun { .. } => "roth-run",
        Cmd::VerifySuite { .. } => "verify-suite",
    }
}

fn measure(g: &Group, bohr: Option<&Path>) -> Result<DensityFn, Failure> {
    Ok(match bohr {
        Some(p) => load_bohr(p, g)?.beta(1.0)?,
        None => DensityFn::haar(g),
    })
}

fn construct(method: MethodArg, n: u64, dim: Option<u32>, out: &Path) -> Out {
    let r = match method {
        MethodArg::Ternary => ternary_free_set(n)?,
        MethodArg::Behrend => behrend_set(n, dim)?,
    };
    let m = 2 * n + 1;
    let name = match r.method {
        Method::Ternary => "ternary",
        Method::Behrend => "behrend",
    };
    let mut body = format!("# {name} set, N = {n}, group Z{m}\n");
    for v in &r.set {
        body.push_str(&format!("{v}\n"));
    }
    std::fs::write(out, body).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    Ok(json!({
        "N": r.n,
        "method": r.method,
        "group": format!("Z{m}"),
        "size": r.size,
        "certified_free": r.certified_free,
        "dim": r.dim,
        "base_m": r.base_m,
        "radius_sq": r.radius_sq,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cs_verify(
    cfg: &RunConfig,
    gs: &str,
    f: &Path,
    a: &Path,
    s: &Path,
    eps: f64,
    p: f64,
    mode: CsModeArg,
    seed: u64,
) -> Out {
    let g = group(gs)?;
    let l = read_set(&g, f)?;
    let inst = CsInstance {
        f: DensityFn::indicator(&l),
        a_set: read_set(&g, a)?,
        s_set: read_set(&g, s)?,
        p,
        epsilon: eps,
        seed,
    };
    let mode = match mode {
        CsModeArg::Sampled => CsMode::Sampled,
        CsModeArg::Exhaustive => CsMode::Exhaustive,
    };
    let r = cs_translates(&inst, mode, cfg)?;
    // re-check every translate against a freshly smoothed function
    let h = smoothed(&inst.f, &inst.a_set)?;
    let n = h.len();
    let verified = r
        .t
        .iter()
        .filter(|&&t| {
            let u = g.sub(t, r.s);
            let sum: f64 = (0..n).map(|y| (h[g.add(y, u)] - h[y]).abs().powf(p)).sum();
            (sum / n as f64).powf(1.0 / p) <= r.limit + 1e-9
        })
        .count();
    Ok(json!({
        "K": r.k_ratio,
        "k_samples": r.k_samples,
        "s": g.coords(r.s),
        "T_size": r.t.len(),
        "mu_S_T": r.mu_s_t,
        "bound": r.log_bound.exp(),
        "log_bound": r.log_bound,
        "worst_norm": r.worst_norm,
        "limit": r.limit,
        "verified": verified,
        "mode": r.mode,
        "draws": r.draws,
        "C_cs": r.c_cs,
        "log_bound_two_over_k_pow": r.log_bound_two_over_k_pow,
        "log_bound_two_k_pow": r.log_bound_two_k_pow,
        "T": r.t.iter().map(|&t| g.coords(t)).collect::<Vec<_>>(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn kk_run(
    cfg: &RunConfig,
    head: &Value,
    gs: &str,
    a: &Path,
    aprime: &Path,
    bohr: &Path,
    rho: f64,
    log: &LogArg,
) -> Out {
    let g = group(gs)?;
    let base = load_bohr(bohr, &g)?;
    let b = RegularBohr::find(&base, cfg)?.set;
    let bpp = RegularBohr::find(&b.dilate(rho)?, cfg)?.set;
    let bm = b.members(1.0)?;
    let a_set = read_set(&g, a)?.intersect(&bm)?;
    let ap_set: Subset = read_set(&g, aprime)?.intersect(&bm)?;
    let kk = Kk::new(KkSetup {
        b: b.clone(),
        bp: b,
        bpp,
        a: a_set,
        ap: ap_set,
        dimension: None,
        rho_prime: None,
    })?;
    let mut lg = Log::open(log, head)?;
    let run = kk.iterate(cfg)?;
    for r in &run.trace {
        lg.line(&json!({ "i": r.i, "lambda": r.lambda, "sigma": r.sigma, "case": r.case, "x": r.x }))?;
    }
    let outcome = match &run.outcome {
        KkOutcome::Pair(p) => json!({
            "outcome": "pair",
            "steps": p.steps,
            "lambda": p.lambda,
            "sigma": p.sigma,
            "domination_constant": p.domination_constant,
            "sigma_exponent": p.sigma_exponent,
            "L_size": p.l.len(),
            "S_size": p.s.len(),
        }),
        KkOutcome::Increment(inc) => json!({
            "outcome": "increment",
            "steps": run.trace.len() - 1,
            "increment": inc.report,
            "bohr": inc.b2.to_spec(),
        }),
    };
    let mut v = outcome;
    v["alpha"] = json!(run.alpha);
    v["alpha_prime"] = json!(run.alpha_prime);
    v["init_average"] = json!(run.init_average);
    Ok(v)
}

fn set_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BOHRLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("BOHRLAB_THREADS must be a non-negative integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = set_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok((head, body, text)) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", serde_json::to_string(&head).expect("serialisable"));
            if cli.json {
                let _ = writeln!(out, "{}", serde_json::to_string(&body).expect("serialisable"));
            } else {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serialisable"));
                if let Some(t) = text {
                    let _ = write!(out, "{t}");
                }
            }
            let strict_fail = matches!(cli.cmd, Cmd::VerifySuite { strict: true, .. })
                && body["passed"] != body["total"];
            if strict_fail {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            let err = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{}", serde_json::to_string(&err).expect("serialisable"));
            ExitCode::from(1)
        }
    }
}
