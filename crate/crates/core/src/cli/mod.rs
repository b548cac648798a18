//! Command-line front end. [`run`] parses arguments and returns the exit status.
//!
//! Exit status 0 means success, 1 an inadmissible channel, 2 a usage, I/O or
//! parameter error.

mod output;

use std::error::Error;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::channel::{ConditionReport, DiscreteChannel};
use crate::codingsim::{
    self, delta_average, delta_registry, run_trials, sample_codebooks, size_targets,
    timesharing_sequence, DeltaSettings, Hypothesis, SchemeConfig, TypicalityReference,
    DEFAULT_DELTA_METHOD, DEFAULT_ENUMERATION_CAP,
};
use crate::probability::{DenomMode, Pmf};
use crate::region::{
    optimizer_registry, CurveMode, RegionModel, SearchOptions, Solver, TimeSharingInput,
    DEFAULT_OPTIMIZER,
};
use output::{num, Metadata};

type CliResult = Result<i32, Box<dyn Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "covert-mac",
    version,
    about = "Covert multiple-access channel regions and coding simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the admissibility conditions of a channel file.
    Check(CheckArgs),
    /// Trace the (r2, r1) frontier at a fixed key budget.
    Region(RegionArgs),
    /// Trace r1 against the key budget, optimized and with constant x2.
    SweepKey(SweepKeyArgs),
    /// Simulate the coding scheme and compute the warden divergence.
    Simulate(SimulateArgs),
    /// List the registered optimizers and divergence estimators.
    Strategies,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = DenomMode::First)]
    denom_mode: DenomMode,
}

#[derive(Debug, Args)]
struct Common {
    /// Channel JSON file.
    #[arg(long)]
    channel: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DenomMode::First)]
    denom_mode: DenomMode,
    /// Number of time-sharing classes (1, 2 or 4).
    #[arg(long, default_value_t = 2)]
    card_t: usize,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    #[arg(long, default_value = DEFAULT_OPTIMIZER)]
    optimizer: String,
    /// Coarse grid points per scalar dimension.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Golden-section iterations per line search.
    #[arg(long)]
    golden_iters: Option<usize>,
    /// Number of grid cells refined.
    #[arg(long)]
    starts: Option<usize>,
}

impl OptimizerArgs {
    fn options(&self) -> SearchOptions {
        let mut o = SearchOptions::default();
        if let Some(v) = self.grid_points {
            o.grid_points = v;
        }
        if let Some(v) = self.golden_iters {
            o.golden_iters = v;
        }
        if let Some(v) = self.starts {
            o.starts = v;
        }
        o
    }

    fn config(&self) -> serde_json::Value {
        let o = self.options();
        json!({
            "optimizer": self.optimizer,
            "grid_points": o.grid_points,
            "golden_iters": o.golden_iters,
            "sweeps": o.sweeps,
            "pair_iters": o.pair_iters,
            "starts": o.starts,
            "grid_budget": o.grid_budget,
        })
    }
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opt: OptimizerArgs,
    #[arg(long)]
    k_budget: f64,
    /// Evenly spaced r2 targets from 0 to the largest attainable r2.
    #[arg(long, default_value_t = 21)]
    r2_points: usize,
}

#[derive(Debug, Args)]
struct SweepKeyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opt: OptimizerArgs,
    /// Explicit key budgets; overrides --k-max and --k-points.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    k_max: f64,
    #[arg(long, default_value_t = 21)]
    k_points: usize,
    /// Curves to trace: `optimized`, `x2=<a>`, or `constant` for every x2 symbol.
    #[arg(long, value_delimiter = ',', default_value = "optimized,constant")]
    modes: Vec<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 2)]
    m1: usize,
    #[arg(long, default_value_t = 4)]
    m2: usize,
    #[arg(long, default_value_t = 4)]
    key_size: usize,
    /// P_T as comma-separated weights; uniform when omitted.
    #[arg(long)]
    p_t: Option<String>,
    /// P_{X2|T} rows separated by ';'; uniform when omitted.
    #[arg(long)]
    p_x2: Option<String>,
    /// Intensity per class; all ones when omitted.
    #[arg(long)]
    eps: Option<String>,
    /// omega = c · n^{-1/4}.
    #[arg(long, default_value_t = 1.0)]
    omega_c: f64,
    /// Fixed omega for every n; overrides --omega-c.
    #[arg(long)]
    omega: Option<f64>,
    /// Fixed typicality slack; n^{-1/3} when omitted.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, default_value_t = 0.5)]
    xi1: f64,
    #[arg(long, default_value_t = 0.5)]
    xi2: f64,
    #[arg(long, default_value_t = TypicalityReference::Asymptotic)]
    reference: TypicalityReference,
    /// Fixed W1 decoder threshold.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value = DEFAULT_DELTA_METHOD)]
    delta_method: String,
    #[arg(long, default_value_t = 20_000)]
    delta_samples: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    delta_cap: u64,
}

/// Runs the tool on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Check(a) => check(&a),
        Command::Region(a) => region(&a),
        Command::SweepKey(a) => sweep_key(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Strategies => strategies(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

struct LoadedChannel {
    channel: DiscreteChannel,
    sha256: String,
}

fn load(path: &Path) -> Result<LoadedChannel, Box<dyn Error>> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| format!("{} is not UTF-8: {e}", path.display()))?;
    let channel = DiscreteChannel::from_json(text)
        .map_err(|e| format!("invalid channel {}: {e}", path.display()))?;
    Ok(LoadedChannel {
        channel,
        sha256: output::sha256_hex(&bytes),
    })
}

fn refuse(path: &Path, report: &ConditionReport) -> i32 {
    eprintln!("channel {} is not admissible:\n{report}", path.display());
    1
}

/// Where human-readable summaries go: stdout unless it carries the CSV.
fn summary_sink(out: &Option<PathBuf>) -> Box<dyn Write> {
    if out.is_some() {
        Box::new(io::stdout())
    } else {
        Box::new(io::stderr())
    }
}

fn admissible_model(
    common: &Common,
) -> Result<Result<(LoadedChannel, RegionModel), i32>, Box<dyn Error>> {
    let loaded = load(&common.channel)?;
    let report = loaded.channel.check_conditions();
    if !report.admissible {
        return Ok(Err(refuse(&common.channel, &report)));
    }
    let model = RegionModel::new(&loaded.channel, common.denom_mode)?;
    Ok(Ok((loaded, model)))
}

fn solver(
    common: &Common,
    opt: &OptimizerArgs,
    model: RegionModel,
) -> Result<Solver, Box<dyn Error>> {
    let optimizer = optimizer_registry().create(&opt.optimizer, &opt.options())?;
    Ok(Solver::new(model, common.card_t, optimizer)?)
}

fn metadata<'a>(
    command: &'static str,
    common: &'a Common,
    loaded: &LoadedChannel,
    config: &'a serde_json::Value,
) -> Metadata<'a, serde_json::Value> {
    Metadata {
        command,
        channel_path: &common.channel,
        channel_sha256: loaded.sha256.clone(),
        denom_mode: common.denom_mode.as_str(),
        seed: common.seed,
        config,
    }
}

fn check(a: &CheckArgs) -> CliResult {
    let loaded = load(&a.channel)?;
    let ch = &loaded.channel;
    let report = ch.check_conditions();
    println!("{report}");
    if !report.admissible {
        return Ok(1);
    }
    let stats = ch.x2_stats(a.denom_mode)?;
    println!("x2,D_Y,D_Z,chi2_Y,chi2_Z (denom_mode={})", a.denom_mode);
    for x in 0..stats.x2_size() {
        println!(
            "{x},{},{},{},{}",
            num(stats.d_y[x]),
            num(stats.d_z[x]),
            num(stats.chi2_y[x]),
            num(stats.chi2_z[x])
        );
    }
    println!("eta0: {}", num(ch.eta0()));
    Ok(0)
}

fn region(a: &RegionArgs) -> CliResult {
    if a.r2_points < 2 {
        return Err("--r2-points must be at least 2".into());
    }
    let (loaded, model) = match admissible_model(&a.common)? {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let s = solver(&a.common, &a.opt, model)?;
    let top = s.max_r2().value;
    let last = (a.r2_points - 1) as f64;
    let grid: Vec<f64> = (0..a.r2_points).map(|i| top * i as f64 / last).collect();
    let frontier = s.frontier(a.k_budget, &grid)?;
    let rows: Vec<Vec<String>> = frontier
        .iter()
        .map(|p| {
            vec![
                num(p.r2),
                num(p.r1),
                num(a.k_budget),
                a.common.card_t.to_string(),
            ]
        })
        .collect();
    let config = json!({
        "card_t": a.common.card_t,
        "k_budget": a.k_budget,
        "r2_points": a.r2_points,
        "r2_max": top,
        "search": a.opt.config(),
    });
    output::write_csv(
        output::open(a.common.out.as_deref())?,
        &metadata("region", &a.common, &loaded, &config),
        &["r2", "r1", "k_budget", "card_t"],
        &rows,
    )?;
    let mut log = summary_sink(&a.common.out);
    let (first, end) = (&frontier[0], &frontier[frontier.len() - 1]);
    writeln!(log, "max r1 = {} at r2 = {}", num(first.r1), num(first.r2))?;
    writeln!(log, "max r2 = {} with r1 = {}", num(end.r2), num(end.r1))?;
    Ok(0)
}

fn parse_modes(specs: &[String], x2_size: usize) -> Result<Vec<CurveMode>, Box<dyn Error>> {
    let mut modes = Vec::new();
    for item in specs {
        match item.trim() {
            "optimized" => modes.push(CurveMode::Optimized),
            "constant" => modes.extend((0..x2_size).map(CurveMode::ConstantX2)),
            other => {
                let a = other
                    .strip_prefix("x2=")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown curve mode '{other}'"))?;
                if a >= x2_size {
                    return Err(format!("x2 symbol {a} outside alphabet of size {x2_size}").into());
                }
                modes.push(CurveMode::ConstantX2(a));
            }
        }
    }
    if modes.is_empty() {
        return Err("no curve modes given".into());
    }
    Ok(modes)
}

fn sweep_key(a: &SweepKeyArgs) -> CliResult {
    let k_grid = match &a.k_grid {
        Some(g) => g.clone(),
        None => {
            if a.k_points < 2 {
                return Err("--k-points must be at least 2".into());
            }
            let last = (a.k_points - 1) as f64;
            (0..a.k_points).map(|i| a.k_max * i as f64 / last).collect()
        }
    };
    if k_grid.is_empty() {
        return Err("empty key grid".into());
    }
    let (loaded, model) = match admissible_model(&a.common)? {
        Ok(v) => v,
        Err(code) => return Ok(code),
    };
    let modes = parse_modes(&a.modes, model.x2_size())?;
    let s = solver(&a.common, &a.opt, model)?;
    let mut rows = Vec::new();
    let mut log = summary_sink(&a.common.out);
    for mode in &modes {
        let curve = s.r1_vs_key_curve(&k_grid, *mode)?;
        let label = mode.label();
        let best = curve.iter().map(|p| p.r1).fold(f64::NEG_INFINITY, f64::max);
        writeln!(log, "{label}: max r1 = {}", num(best))?;
        rows.extend(
            curve
                .iter()
                .map(|p| vec![num(p.k), num(p.r1), label.clone()]),
        );
    }
    let config = json!({
        "card_t": a.common.card_t,
        "k_grid": k_grid,
        "modes": modes.iter().map(CurveMode::label).collect::<Vec<_>>(),
        "search": a.opt.config(),
    });
    output::write_csv(
        output::open(a.common.out.as_deref())?,
        &metadata("sweep-key", &a.common, &loaded, &config),
        &["k", "r1", "mode"],
        &rows,
    )?;
    Ok(0)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Box<dyn Error>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad {what} entry '{v}': {e}").into())
        })
        .collect()
}

fn scheme_input(a: &SimulateArgs, x2_size: usize) -> Result<TimeSharingInput, Box<dyn Error>> {
    let card_t = a.common.card_t;
    let p_t = match &a.p_t {
        Some(s) => Pmf::new(parse_list(s, "--p-t")?)?,
        None => Pmf::uniform(card_t),
    };
    if p_t.len() != card_t {
        return Err(format!("--p-t has {} entries, --card-t is {card_t}", p_t.len()).into());
    }
    let conds = match &a.p_x2 {
        Some(s) => s
            .split(';')
            .map(|row| Ok(Pmf::new(parse_list(row, "--p-x2")?)?))
            .collect::<Result<Vec<_>, Box<dyn Error>>>()?,
        None => vec![Pmf::uniform(x2_size); card_t],
    };
    let eps = match &a.eps {
        Some(s) => parse_list(s, "--eps")?,
        None => vec![1.0; card_t],
    };
    Ok(TimeSharingInput::new(p_t, conds, eps)?)
}

fn simulate(a: &SimulateArgs) -> CliResult {
    if a.n_list.is_empty() {
        return Err("empty --n-list".into());
    }
    let loaded = load(&a.common.channel)?;
    let ch = &loaded.channel;
    let report = ch.check_conditions();
    if !report.admissible {
        return Ok(refuse(&a.common.channel, &report));
    }
    let model = RegionModel::new(ch, a.common.denom_mode)?;
    let stats = model.stats().clone();
    let input = scheme_input(a, ch.x2_size())?;
    if input.card_t() != a.common.card_t {
        return Err(format!(
            "--p-x2 has {} rows, --card-t is {}",
            input.card_t(),
            a.common.card_t
        )
        .into());
    }
    if a.trials == 0 {
        return Err(codingsim::SimError::ZeroTrials.into());
    }
    let settings = DeltaSettings {
        cap: a.delta_cap,
        samples: a.delta_samples,
        seed: a.common.seed,
    };
    let estimator = delta_registry().create(&a.delta_method, &settings)?;

    let configs = a
        .n_list
        .iter()
        .map(|&n| {
            let mut cfg = SchemeConfig::new(n, a.m1, a.m2, a.key_size, a.common.seed);
            if n > 0 {
                cfg.omega = a
                    .omega
                    .unwrap_or_else(|| codingsim::default_omega(n, a.omega_c));
                cfg.mu = a.mu.unwrap_or(cfg.mu);
            }
            cfg.xi1 = a.xi1;
            cfg.reference = a.reference;
            cfg.eta_override = a.eta;
            cfg.check_input(&input)?;
            timesharing_sequence(n, input.p_t(), cfg.mu)?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, codingsim::SimError>>()?;

    let mut rows = Vec::new();
    let mut log = summary_sink(&a.common.out);
    for cfg in &configs {
        let cb = sample_codebooks(cfg, &input)?;
        let delta = delta_average(&cb, ch, estimator.as_ref())?;
        let theory = codingsim::delta_theory(cfg, &input, &stats);
        let eta = codingsim::eta_threshold(cfg, &input, &stats);
        let sizes = size_targets(cfg, &input, &model, a.xi, cfg.xi1, a.xi2);
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let st = run_trials(cfg, &input, ch, &cb, h, a.trials)?;
            let (pe, se) = (num(st.pe_hat()), num(st.pe_se()));
            let (pe0, pe1) = match h {
                Hypothesis::H0 => ((pe, se), (String::new(), String::new())),
                Hypothesis::H1 => ((String::new(), String::new()), (pe, se)),
            };
            writeln!(
                log,
                "n={} H{}: pe = {} (se {})",
                cfg.n,
                h.index(),
                num(st.pe_hat()),
                num(st.pe_se())
            )?;
            rows.push(vec![
                cfg.n.to_string(),
                a.trials.to_string(),
                pe0.0,
                pe0.1,
                pe1.0,
                pe1.1,
                num(delta.mean),
                delta.method.as_str().to_string(),
                num(theory),
                num(eta),
                num(sizes.log_m1),
                num(sizes.log_m2),
                num(sizes.log_m1k),
                a.common.seed.to_string(),
            ]);
        }
        writeln!(
            log,
            "n={}: delta = {} ({}), leading term {}",
            cfg.n,
            num(delta.mean),
            delta.method.as_str(),
            num(theory)
        )?;
    }
    let config = json!({
        "card_t": a.common.card_t,
        "n_list": a.n_list,
        "trials": a.trials,
        "m1": a.m1,
        "m2": a.m2,
        "key_size": a.key_size,
        "p_t": input.p_t().weights(),
        "p_x2_given_t": input.p_x2_given_t().iter().map(Pmf::weights).collect::<Vec<_>>(),
        "eps": input.eps(),
        "omega": configs.iter().map(|c| c.omega).collect::<Vec<_>>(),
        "mu": configs.iter().map(|c| c.mu).collect::<Vec<_>>(),
        "xi": a.xi,
        "xi1": a.xi1,
        "xi2": a.xi2,
        "reference": a.reference.as_str(),
        "eta_override": a.eta,
        "delta_method": a.delta_method,
        "delta_samples": a.delta_samples,
        "delta_cap": a.delta_cap,
    });
    output::write_csv(
        output::open(a.common.out.as_deref())?,
        &metadata("simulate", &a.common, &loaded, &config),
        &[
            "n",
            "trials",
            "pe0_hat",
            "pe0_se",
            "pe1_hat",
            "pe1_se",
            "delta_avg",
            "delta_method",
            "delta_theory",
            "eta",
            "logM1_target",
            "logM2_target",
            "logM1K_target",
            "seed",
        ],
        &rows,
    )?;
    Ok(0)
}

fn strategies() -> CliResult {
    println!("optimizers:");
    for (name, summary) in optimizer_registry().describe() {
        println!("  {name:<12} {summary}");
    }
    println!("delta methods:");
    for (name, summary) in delta_registry().describe() {
        println!("  {name:<12} {summary}");
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parsing() {
        let specs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let m = parse_modes(&specs(&["optimized", "constant"]), 2).unwrap();
        assert_eq!(
            m,
            vec![
                CurveMode::Optimized,
                CurveMode::ConstantX2(0),
                CurveMode::ConstantX2(1)
            ]
        );
        assert_eq!(
            parse_modes(&specs(&["x2=1"]), 2).unwrap(),
            vec![CurveMode::ConstantX2(1)]
        );
        assert!(parse_modes(&specs(&["x2=2"]), 2).is_err());
        assert!(parse_modes(&specs(&["best"]), 2).is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
