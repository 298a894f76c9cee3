//! `zenoctl` command line: argument parsing, config files and exit codes.
//!
//! Exit codes: 0 success, 1 configuration error (nothing written),
//! 2 runtime invariant violation (partial outputs plus a `FAILED` marker).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use zenoctl::experiments::{
    execute, key_kind, prepare, registry, Execution, Mode, ParamValue, Resolution, RunParams, RunReport,
};
use zenoctl::zeno::zeno_check;
use zenoctl::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Largest deviation `zeno-check` accepts between the derived and hand-written models.
pub const ZENO_CHECK_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "zenoctl", version, about = "Zeno-limit Rydberg-pair simulations with accelerated feedback control")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Root output directory; results go to <out>/<scenario>/.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = ResolutionArg::Full)]
    resolution: ResolutionArg,

    /// Parameter override, e.g. --set mu1=0.3 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// TOML file of parameter overrides; --set wins over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Also report times in microseconds for a coupling g/2π given in MHz.
    #[arg(long = "report-physical", global = true, value_name = "g_MHz=VALUE")]
    report_physical: Option<String>,

    /// Run sweep points one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario's trajectories (primary and variants).
    Simulate { scenario: String },
    /// Run the scenario's parameter grid.
    Sweep { scenario: String },
    /// Compare the projected effective dynamics with the hand-written model.
    ZenoCheck,
    /// Print the registered scenarios.
    List,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResolutionArg {
    Full,
    Ci,
}

impl From<ResolutionArg> for Resolution {
    fn from(r: ResolutionArg) -> Self {
        match r {
            ResolutionArg::Full => Resolution::Full,
            ResolutionArg::Ci => Resolution::Ci,
        }
    }
}

/// Problems with the input that are caught before anything runs.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Overrides keyed by parameter name, in application order.
pub type Overrides = Vec<(String, ParamValue)>;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, ParamValue>) -> Result<(), ConfigError> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let value = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::Float(x) => ParamValue::Float(*x),
            toml::Value::Integer(n) => ParamValue::Int(*n),
            toml::Value::Boolean(b) => ParamValue::Bool(*b),
            toml::Value::String(s) => ParamValue::Text(s.clone()),
            other => return Err(config_err(format!("`{key}`: unsupported value type {}", other.type_str()))),
        };
        // `a.b = 1` next to `[a] b = 2` cannot happen in valid TOML, but a
        // quoted "a.b" key can collide with a table entry
        if out.insert(key.clone(), value).is_some() {
            return Err(config_err(format!("`{key}` is set twice")));
        }
    }
    Ok(())
}

/// Parse a TOML config file into dotted-key overrides.
pub fn load_config(path: &Path) -> Result<Overrides, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| config_err(format!("{}:{e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<Overrides, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        config_err(format!("{line}:{col}: {}", e.message()))
    })?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat)?;
    let overrides: Overrides = flat.into_iter().collect();
    check_keys(&overrides)?;
    Ok(overrides)
}

/// `--set key=value` arguments; repeating a key is an error.
pub fn parse_sets(sets: &[String]) -> Result<Overrides, ConfigError> {
    let mut out: Overrides = Vec::new();
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got `{s}`")))?;
        let k = k.trim();
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(config_err(format!("--set {k} given more than once")));
        }
        out.push((k.to_string(), ParamValue::Text(v.trim().to_string())));
    }
    check_keys(&out)?;
    Ok(out)
}

fn check_keys(overrides: &Overrides) -> Result<(), ConfigError> {
    for (k, _) in overrides {
        if key_kind(k).is_none() {
            return Err(config_err(Error::UnknownKey { key: k.clone() }.to_string()));
        }
    }
    let has = |k: &str| overrides.iter().any(|(seen, _)| seen == k);
    if has("C") && (has("gamma") || has("kappa")) {
        return Err(config_err("`C` fixes gamma = kappa = 1/sqrt(C); do not also set gamma or kappa"));
    }
    Ok(())
}

/// File overrides first, then `--set`, so the command line wins.
pub fn merge(file: Overrides, argv: Overrides) -> Overrides {
    let mut out: Overrides = file
        .into_iter()
        .filter(|(k, _)| !argv.iter().any(|(a, _)| a == k))
        .collect();
    // argv C replaces file gamma/kappa, argv gamma/kappa replace file C
    let argv_has = |k: &str| argv.iter().any(|(a, _)| a == k);
    if argv_has("C") {
        out.retain(|(k, _)| k != "gamma" && k != "kappa");
    }
    if argv_has("gamma") || argv_has("kappa") {
        out.retain(|(k, _)| k != "C");
    }
    out.extend(argv);
    out
}

/// `g_MHz=VALUE`, returning g/2π in MHz.
pub fn parse_physical(arg: &str) -> Result<f64, ConfigError> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| config_err(format!("--report-physical expects g_MHz=VALUE, got `{arg}`")))?;
    if k.trim() != "g_MHz" {
        return Err(config_err(format!("--report-physical: unknown quantity `{}`", k.trim())));
    }
    let g: f64 = v
        .trim()
        .parse()
        .map_err(|_| config_err(format!("--report-physical: `{}` is not a number", v.trim())))?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(config_err("--report-physical: g_MHz must be positive"));
    }
    Ok(g)
}

/// Microseconds per dimensionless time unit (times are measured in 1/g).
pub fn us_per_unit(g_mhz: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * g_mhz)
}

fn annotate_manifest(report: &RunReport, g_mhz: f64) -> std::io::Result<()> {
    let us = us_per_unit(g_mhz);
    let path = report.dir.join("manifest.json");
    let text = fs::read_to_string(&path)?;
    let mut m: serde_json::Value = serde_json::from_str(&text)?;
    let t_final = report.trajectories.first().and_then(|(_, t)| t.times.last().copied());
    m["physical"] = serde_json::json!({
        "g_MHz": g_mhz,
        "us_per_time_unit": us,
        "t_final_us": t_final.map(|t| t * us),
    });
    fs::write(path, serde_json::to_string_pretty(&m)?)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_invariant_violation() {
        EXIT_RUNTIME
    } else {
        EXIT_CONFIG
    }
}

/// Run with the given arguments (including the program name) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };

    let overrides = match collect_overrides(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let physical = match cli.report_physical.as_deref().map(parse_physical).transpose() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    match &cli.command {
        Command::List => {
            for s in registry() {
                let kind = if s.sweep.is_some() { "sweep" } else { "simulate" };
                println!("{:<8} {:<9} {}", s.name, kind, s.description);
            }
            EXIT_OK
        }
        Command::ZenoCheck => {
            let mut p = RunParams::default();
            for (k, v) in &overrides {
                if let Err(e) = p.set(k, v) {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            }
            match zeno_check(&p.model) {
                Ok(check) => {
                    println!("sector dimension: {}", check.sector_dim);
                    println!("max |H_derived - H_effective| = {:.3e}", check.max_deviation);
                    if check.max_deviation <= ZENO_CHECK_TOL {
                        println!("zeno-check PASS (tolerance {ZENO_CHECK_TOL:.0e})");
                        EXIT_OK
                    } else {
                        println!("zeno-check FAIL (tolerance {ZENO_CHECK_TOL:.0e})");
                        EXIT_RUNTIME
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Simulate { scenario } | Command::Sweep { scenario } => {
            let mode = match cli.command {
                Command::Simulate { .. } => Mode::Simulate,
                _ => Mode::Sweep,
            };
            let prepared = match prepare(scenario, mode, &overrides, cli.resolution.into()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let execution = if cli.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            match execute(&prepared, &cli.out, execution) {
                Ok(report) => {
                    for (name, traj) in &report.trajectories {
                        let (t, f) = (traj.times.last().copied(), traj.fidelity.last().copied());
                        if let (Some(t), Some(f)) = (t, f) {
                            match physical {
                                Some(g) => println!("{name}: F({t}) = {f:.6}  (t = {:.4} us)", t * us_per_unit(g)),
                                None => println!("{name}: F({t}) = {f:.6}"),
                            }
                        }
                    }
                    if let Some(g) = physical {
                        if let Err(e) = annotate_manifest(&report, g) {
                            eprintln!("error: {e}");
                            return EXIT_CONFIG;
                        }
                    }
                    println!("wrote {}", report.dir.display());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}

fn collect_overrides(cli: &Cli) -> Result<Overrides, ConfigError> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => Vec::new(),
    };
    Ok(merge(file, parse_sets(&cli.set)?))
}
