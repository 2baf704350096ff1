use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bessel_fpt::harness::{
    parse_grid, run_suite, run_sweep, Suite, SweepFormat, SweepSpec, ValidateOptions, XScaling,
};
use bessel_fpt::{
    density, distribution_estimate, EvalOptions, FptError, FptQuery, InversionConfig, McConfig,
    Method,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod config;

use config::Config;

/// First-passage times of Bessel diffusions: evaluations, sweeps and
/// validation suites.
#[derive(Parser, Debug)]
#[command(name = "bessel-fpt", version)]
struct Cli {
    /// Plain `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one density or distribution value.
    Eval(EvalArgs),
    /// Tabulate evaluators over a grid.
    Sweep(SweepArgs),
    /// Run a validation suite: anchors, asymptotics, oracles, distributions or all.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Root seed for Monte Carlo.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long)]
    paths: Option<u64>,
    /// Gaver-Stehfest order (even, 4 to 18).
    #[arg(long)]
    gs_terms: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// auto, exact, thm1, thm2, thm3, cor5, lemma5, thm6, thm7, cor6,
    /// inversion-gs, inversion-bromwich or mc
    #[arg(long)]
    method: Option<String>,
    /// Evaluate P[sigma <= t] instead of the density.
    #[arg(long)]
    dist: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated orders.
    #[arg(long, allow_hyphen_values = true)]
    orders: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// `1.5,2,4` or `log:lo:hi:n`.
    #[arg(long)]
    x_grid: Option<String>,
    /// Multiply grid x by `sqrt-t`, `t` or nothing (`none`).
    #[arg(long)]
    x_scale: Option<String>,
    #[arg(long)]
    t_grid: Option<String>,
    /// Comma-separated methods; the first oracle listed fills the ratio column.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    dist: bool,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override `group=value`, repeatable.
    #[arg(long = "tol", value_name = "GROUP=VALUE")]
    tol: Vec<String>,
    /// text (tables and summary) or json (the report).
    #[arg(long)]
    format: Option<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<FptError> for Fail {
    fn from(e: FptError) -> Self {
        Fail(if e.is_numerical() { 3 } else { 2 }, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(2, msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let cfg = match &cli.config {
            Some(p) => Config::load(p).map_err(usage)?,
            None => Config::default(),
        };
        match cli.command {
            Command::Eval(a) => cmd_eval(a, &cfg),
            Command::Sweep(a) => cmd_sweep(a, &cfg),
            Command::Validate(a) => cmd_validate(a, &cfg),
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Fail> {
    v.ok_or_else(|| usage(format!("--{name} is required (flag or config key)")))
}

fn eval_options(common: &Common, cfg: &Config, method: Method) -> Result<EvalOptions, Fail> {
    let mut inv = InversionConfig::default();
    if let Some(n) = cfg.pick(common.gs_terms, "gs-terms").map_err(usage)? {
        inv.gs_terms = n;
    }
    inv.validate()?;
    let mut mc = McConfig::default();
    if let Some(s) = cfg.pick(common.seed, "seed").map_err(usage)? {
        mc.seed = s;
    }
    if let Some(p) = cfg.pick(common.paths, "paths").map_err(usage)? {
        mc.paths = p;
    }
    Ok(EvalOptions {
        method,
        inversion: inv,
        mc,
        ..Default::default()
    })
}

#[derive(Serialize)]
struct EvalOutput {
    nu: f64,
    a: f64,
    x: f64,
    t: f64,
    quantity: &'static str,
    value: f64,
    method: Method,
    regime: String,
    err_bound: Option<f64>,
    warnings: Vec<String>,
}

fn cmd_eval(args: EvalArgs, cfg: &Config) -> Result<u8, Fail> {
    let nu = required(cfg.pick(args.nu, "nu").map_err(usage)?, "nu")?;
    let a = required(cfg.pick(args.a, "a").map_err(usage)?, "a")?;
    let x = required(cfg.pick(args.x, "x").map_err(usage)?, "x")?;
    let t = required(cfg.pick(args.t, "t").map_err(usage)?, "t")?;
    let method: Method = cfg
        .pick(args.method, "method")
        .map_err(usage)?
        .unwrap_or_else(|| "auto".into())
        .parse()?;
    let dist = cfg.flag(args.dist, "dist").map_err(usage)?;
    let opts = eval_options(&args.common, cfg, method)?;
    let q = FptQuery::new(nu, x, a, t)?;
    let e = if dist {
        distribution_estimate(&q, &opts)?
    } else {
        density(&q, &opts)?
    };
    let out = EvalOutput {
        nu,
        a,
        x,
        t,
        quantity: if dist { "distribution" } else { "density" },
        value: e.value,
        method: e.method,
        regime: e.regime.to_string(),
        err_bound: e.err_bound,
        warnings: e.warnings,
    };
    println!(
        "{}",
        serde_json::to_string(&out).expect("output serializes")
    );
    Ok(0)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Fail>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<T>()
                .map_err(|e| usage(format!("bad {what} '{p}': {e}")))
        })
        .collect()
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), Fail> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Fail(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .map_err(|e| Fail(1, e.to_string()))
        }
    }
}

fn cmd_sweep(args: SweepArgs, cfg: &Config) -> Result<u8, Fail> {
    let d = SweepSpec::default();
    let pick = |flag: Option<String>, key: &str| cfg.pick(flag, key).map_err(usage);
    let orders = match pick(args.orders, "orders")? {
        Some(s) => parse_list::<f64>(&s, "order")?,
        None => d.orders.clone(),
    };
    let methods = match pick(args.methods, "methods")? {
        Some(s) => parse_list::<Method>(&s, "method")?,
        None => d.methods.clone(),
    };
    let x_grid = match pick(args.x_grid, "x-grid")? {
        Some(s) => parse_grid(&s)?,
        None => d.x_grid.clone(),
    };
    let t_grid = match pick(args.t_grid, "t-grid")? {
        Some(s) => parse_grid(&s)?,
        None => d.t_grid.clone(),
    };
    let x_scaling: XScaling = pick(args.x_scale, "x-scale")?
        .unwrap_or_else(|| "none".into())
        .parse()?;
    let format: SweepFormat = pick(args.format, "format")?
        .unwrap_or_else(|| "csv".into())
        .parse()?;
    let opts = eval_options(&args.common, cfg, Method::Auto)?;
    let spec = SweepSpec {
        orders,
        a: cfg.pick(args.a, "a").map_err(usage)?.unwrap_or(d.a),
        x_grid,
        x_scaling,
        t_grid,
        methods,
        distribution: cfg.flag(args.dist, "dist").map_err(usage)?,
        seed: opts.mc.seed,
        paths: opts.mc.paths,
        gs_terms: opts.inversion.gs_terms,
    };
    let table = run_sweep(&spec)?;
    let out = args.out.or(cfg.raw("out").map(PathBuf::from));
    write_output(out.as_ref(), &table.render(format))?;
    if table.all_failed() {
        return Err(Fail(1, "every row failed; see the error column".into()));
    }
    Ok(0)
}

fn cmd_validate(args: ValidateArgs, cfg: &Config) -> Result<u8, Fail> {
    let suite: Suite = args
        .suite
        .parse()
        .map_err(|e: FptError| usage(e.to_string()))?;
    let mut tolerances = BTreeMap::new();
    for spec in &args.tol {
        let (g, v) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--tol expects GROUP=VALUE, got '{spec}'")))?;
        let v: f64 = v
            .parse()
            .map_err(|e| usage(format!("bad tolerance '{v}': {e}")))?;
        tolerances.insert(g.trim().to_string(), v);
    }
    let opts = ValidateOptions {
        seed: cfg
            .pick(args.seed, "seed")
            .map_err(usage)?
            .unwrap_or(ValidateOptions::default().seed),
        tolerances,
        timing: cfg.flag(args.timing, "timing").map_err(usage)?,
    };
    let format = cfg
        .pick(args.format, "format")
        .map_err(usage)?
        .unwrap_or_else(|| "text".into());
    if format != "text" && format != "json" {
        return Err(usage(format!("unknown format '{format}' (text, json)")));
    }
    let report = run_suite(suite, &opts);
    let json = report.to_json() + "\n";
    if let Some(p) = args.out.or(cfg.raw("out").map(PathBuf::from)) {
        write_output(Some(&p), &json)?;
    }
    if format == "json" {
        write_output(None, &json)?;
    } else {
        write_output(None, &(report.tables() + "\n" + &report.human_summary()))?;
    }
    Ok(if report.all_pass() { 0 } else { 1 })
}
