//! `realization`: optimal realization policies, trading statistics, table
//! reproduction and Monte Carlo checks from a JSON configuration.
//!
//! Exit codes: 0 success, 1 computation error, 2 transversality failure,
//! 3 no participation, 4 bad configuration or input.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use realization_core::{
    check_transversality, critical_lambda, gains_only_stats, optimize_policy, poisson_stats, representative_odean,
    simulate_accounts, simulate_poisson_run, simulate_threshold_run, smooth_pasting_residuals, table,
    threshold_stats, write_ledger, write_table_csv, Config, EmpiricalStats, Error, Estimate, MaybeInfinite,
    OdeanStats, Regime, SimRun, StockProfile, TableId, TableInputs, TradingRule, TRADING_DAYS_PER_YEAR,
};

#[derive(Parser)]
#[command(name = "realization", version, about = "Realization-utility trading policies and disposition statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults to csv for `table` and json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set utility.lambda=2.56`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY.PATH=VALUE")]
    set: Vec<String>,
    /// Print warnings and progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal thresholds for the configured utility.
    Policy,
    /// Episode statistics for `policy` thresholds (or the optimal ones).
    Stats,
    /// Statistics of Poisson random selling.
    Poisson,
    /// PGR, PLR and the disposition measure.
    Aggregate,
    /// Reproduce a calibration table.
    Table {
        #[arg(value_enum)]
        id: TableArg,
    },
    /// Monte Carlo estimates beside the closed forms.
    Simulate {
        /// Per-episode ledger CSV.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Critical loss aversion separating two-point and gains-only policies.
    LambdaStar,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    T1,
    T2,
    T3,
}

impl From<TableArg> for TableId {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::T1 => TableId::T1,
            TableArg::T2 => TableId::T2,
            TableArg::T3 => TableId::T3,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Transversality(_) | Error::NonpositiveDelta(_) => 2,
        Error::NoParticipation(_) => 3,
        Error::ConfigParse(_)
        | Error::Io(_)
        | Error::InvalidSigma(_)
        | Error::InvalidDrift(_)
        | Error::InvalidCosts(_)
        | Error::InvalidUtility(_)
        | Error::InvalidPopulation(_)
        | Error::InvalidSimConfig(_) => 4,
        _ => 1,
    }
}

/// A rendered result: JSON report plus a CSV table.
struct Output {
    report: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Output {
    /// One CSV row from `(column, cell)` pairs.
    fn single(report: Value, cells: Vec<(&str, String)>) -> Self {
        let (header, row) = cells.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
        Output { report, header, rows: vec![row] }
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn days(years: f64) -> String {
    format!("{:.0}", years * TRADING_DAYS_PER_YEAR)
}

fn inf(v: MaybeInfinite, digits: usize) -> String {
    match v {
        MaybeInfinite::Finite(x) => format!("{x:.digits$}"),
        MaybeInfinite::Infinite => "inf".into(),
    }
}

fn odean_json(o: &OdeanStats) -> Value {
    let mut v = serde_json::to_value(o).expect("serializable");
    v["mean_duration_days"] = json!(o.mean_duration * TRADING_DAYS_PER_YEAR);
    v
}

fn odean_cells(o: &OdeanStats) -> Vec<(&'static str, String)> {
    vec![
        ("pgr_pct", pct(o.pgr)),
        ("plr_pct", pct(o.plr)),
        ("o", inf(o.o, 2)),
    ]
}

fn warn(verbose: u8, msg: impl AsRef<str>) {
    if verbose > 0 {
        eprintln!("warning: {}", msg.as_ref());
    }
}

fn cmd_policy(cfg: &Config, verbose: u8) -> Result<Output, Error> {
    let (u, asset, costs) = (cfg.utility()?, cfg.asset()?, cfg.costs()?);
    let tr = check_transversality(&u, &asset, &costs);
    if !tr.ok {
        return Err(Error::Transversality(tr));
    }
    let p = optimize_policy(&u, &asset, &costs)?;
    let sp = smooth_pasting_residuals(&p, &u, &asset, &costs)?;
    for w in &p.warnings {
        warn(verbose, &w.message);
    }
    let two_point = p.regime == Regime::TwoPoint;
    let theta = two_point.then_some(p.theta);
    let report = json!({
        "regime": p.regime,
        "theta": theta,
        "theta_big": p.theta_big,
        "theta_minus_1": theta.map(|t| t - 1.0),
        "theta_big_minus_1": p.theta_big - 1.0,
        "v1": p.v1,
        "coefficients": p.coefficients,
        "smooth_pasting": sp,
        "transversality": tr,
        "warnings": p.warnings,
    });
    Ok(Output::single(
        report,
        vec![
            ("regime", format!("{:?}", p.regime)),
            ("theta", theta.map_or("never".into(), num)),
            ("theta_big", num(p.theta_big)),
            ("theta_minus_1_pct", theta.map_or("never".into(), |t| pct(t - 1.0))),
            ("theta_big_minus_1_pct", pct(p.theta_big - 1.0)),
            ("v1", num(p.v1)),
        ],
    ))
}

/// Thresholds from `policy`, else the optimal ones. `theta = 0` is gains-only.
fn thresholds(cfg: &Config) -> Result<(f64, f64), Error> {
    if cfg.policy.is_some() {
        return cfg.thresholds();
    }
    let p = optimize_policy(&cfg.utility()?, &cfg.asset()?, &cfg.costs()?)?;
    Ok(match p.regime {
        Regime::TwoPoint => (p.theta, p.theta_big),
        Regime::GainsOnly => (0.0, p.theta_big),
    })
}

fn cmd_stats(cfg: &Config) -> Result<Output, Error> {
    let asset = cfg.asset()?;
    let (theta, big) = thresholds(cfg)?;
    let st = if theta == 0.0 { gains_only_stats(big, &asset)? } else { threshold_stats(theta, big, &asset)? };
    let profile = TradingRule::Threshold { theta, theta_big: big }.profile(&asset)?;
    let o = representative_odean(&profile, &cfg.accounts)?;
    let mut report = serde_json::to_value(st).expect("serializable");
    report["theta"] = json!(theta);
    report["theta_big"] = json!(big);
    report["mean_duration_days"] = json!(st.mean_duration_days());
    report["odean"] = odean_json(&o);
    let mut cells = vec![
        ("theta_big_minus_1_pct", pct(big - 1.0)),
        ("theta_minus_1_pct", if theta == 0.0 { "never".into() } else { pct(theta - 1.0) }),
        ("q_gain_pct", pct(st.q_gain)),
        ("phi_gain_pct", pct(st.phi_gain)),
        ("e_tau_years", num(st.mean_duration)),
        ("e_tau_days", days(st.mean_duration)),
    ];
    cells.extend(odean_cells(&o));
    Ok(Output::single(report, cells))
}

fn cmd_poisson(cfg: &Config) -> Result<Output, Error> {
    let asset = cfg.asset()?;
    let rho = cfg.rho()?;
    let p = poisson_stats(rho, &asset)?;
    let profile = TradingRule::Poisson { rho }.profile(&asset)?;
    let o = representative_odean(&profile, &cfg.accounts)?;
    let mut report = serde_json::to_value(p).expect("serializable");
    report["mean_duration_days"] = json!(p.mean_duration_days());
    report["odean"] = odean_json(&o);
    let mut cells = vec![
        ("rho", num(rho)),
        ("theta_big_minus_1_pct", match p.mean_gain_multiple {
            MaybeInfinite::Finite(g) => pct(g - 1.0),
            MaybeInfinite::Infinite => "inf".into(),
        }),
        ("theta_minus_1_pct", pct(p.mean_loss_fraction - 1.0)),
        ("q_gain_pct", pct(p.q_gain)),
        ("phi_gain_pct", pct(p.phi_gain)),
        ("e_tau_years", num(p.mean_duration)),
        ("e_tau_days", days(p.mean_duration)),
    ];
    cells.extend(odean_cells(&o));
    Ok(Output::single(report, cells))
}

fn cmd_aggregate(cfg: &Config) -> Result<Output, Error> {
    let asset = cfg.asset()?;
    let o = match &cfg.population {
        Some(pop) => pop.closed_form(&asset)?,
        None => {
            let rule = if cfg.policy.is_some() || cfg.poisson.is_some() {
                cfg.rule()?
            } else {
                let (theta, theta_big) = thresholds(cfg)?;
                TradingRule::Threshold { theta, theta_big }
            };
            representative_odean(&rule.profile(&asset)?, &cfg.accounts)?
        }
    };
    let mut cells = vec![
        ("theta_big_minus_1_pct", match o.mean_gain_multiple {
            MaybeInfinite::Finite(g) => pct(g - 1.0),
            MaybeInfinite::Infinite => "inf".into(),
        }),
        ("theta_minus_1_pct", o.mean_loss_fraction.map_or("never".into(), |l| pct(l - 1.0))),
        ("q_gain_pct", pct(o.q_gain)),
        ("phi_gain_pct", o.phi_gain.map_or(String::new(), pct)),
        ("e_tau_days", days(o.mean_duration)),
    ];
    cells.extend(odean_cells(&o));
    Ok(Output::single(odean_json(&o), cells))
}

fn cmd_table(cfg: &Config, id: TableId) -> Result<(Value, Vec<u8>), Error> {
    let inp = TableInputs { asset: cfg.asset()?, costs: cfg.costs()?, accounts: cfg.accounts.clone() };
    let rows = table(id, &inp)?;
    let mut csv = Vec::new();
    write_table_csv(&rows, &mut csv)?;
    Ok((json!({ "table": id, "rows": rows }), csv))
}

struct Comparison {
    name: &'static str,
    estimate: Option<Estimate>,
    exact: f64,
}

fn compare_rows(run_count: u64, rows: Vec<Comparison>) -> Output {
    let kept: Vec<Comparison> = rows.into_iter().filter(|c| c.estimate.is_some()).collect();
    let report = json!({
        "count": run_count,
        "rows": kept.iter().map(|c| {
            let e = c.estimate.unwrap();
            json!({"statistic": c.name, "estimate": e.value, "closed_form": c.exact, "se": e.se, "z": e.z(c.exact)})
        }).collect::<Vec<_>>(),
    });
    let header = ["statistic", "estimate", "closed_form", "se", "z"].map(String::from).to_vec();
    let rows = kept
        .iter()
        .map(|c| {
            let e = c.estimate.unwrap();
            vec![c.name.to_string(), num(e.value), num(c.exact), num(e.se), format!("{:.3}", e.z(c.exact))]
        })
        .collect();
    Output { report, header, rows }
}

fn episode_comparisons(s: &EmpiricalStats, q: f64, phi: f64, years: f64) -> Vec<Comparison> {
    vec![
        Comparison { name: "q_gain", estimate: Some(s.q_gain), exact: q },
        Comparison { name: "phi_gain", estimate: s.phi_gain, exact: phi },
        Comparison { name: "mean_duration_years", estimate: Some(s.mean_duration), exact: years },
    ]
}

fn cmd_simulate(cfg: &Config, ledger: Option<&PathBuf>, verbose: u8) -> Result<Output, Error> {
    let asset = cfg.asset()?;
    if let Some(pop) = &cfg.population {
        if ledger.is_some() {
            warn(verbose, "account runs have no episode ledger; --ledger ignored");
        }
        let exact = pop.closed_form(&asset)?;
        let s = simulate_accounts(pop, &asset, &cfg.sim)?;
        let mut rows = vec![
            Comparison { name: "pgr", estimate: s.pgr, exact: exact.pgr },
            Comparison { name: "plr", estimate: s.plr, exact: exact.plr },
            Comparison { name: "q_gain", estimate: Some(s.q_gain), exact: exact.q_gain },
            Comparison { name: "mean_duration_years", estimate: Some(s.mean_duration), exact: exact.mean_duration },
        ];
        if let MaybeInfinite::Finite(o) = exact.o {
            rows.insert(2, Comparison { name: "o", estimate: s.o, exact: o });
        }
        if let Some(phi) = exact.phi_gain {
            rows.push(Comparison { name: "phi_gain", estimate: s.phi_gain, exact: phi });
        }
        return Ok(compare_rows(s.count, rows));
    }
    let rule = if cfg.policy.is_some() || cfg.poisson.is_some() {
        cfg.rule()?
    } else {
        let (theta, theta_big) = thresholds(cfg)?;
        TradingRule::Threshold { theta, theta_big }
    };
    let (run, rows): (SimRun, Vec<Comparison>) = match rule {
        TradingRule::Threshold { theta, theta_big } => {
            let exact = TradingRule::Threshold { theta, theta_big }.profile(&asset)?;
            let run = simulate_threshold_run(theta, theta_big, &asset, &cfg.sim)?;
            let rows = episode_comparisons(&run.stats, exact.q_gain, exact.phi_gain, exact.mean_duration);
            (run, rows)
        }
        TradingRule::Poisson { rho } => {
            let exact = poisson_stats(rho, &asset)?;
            let run = simulate_poisson_run(rho, &asset, &cfg.sim)?;
            let mut rows = episode_comparisons(&run.stats, exact.q_gain, exact.phi_gain, exact.mean_duration);
            if let MaybeInfinite::Finite(g) = exact.mean_gain_multiple {
                rows.push(Comparison { name: "mean_gain_multiple", estimate: run.stats.mean_gain_multiple, exact: g });
            }
            rows.push(Comparison {
                name: "mean_loss_fraction",
                estimate: run.stats.mean_loss_fraction,
                exact: exact.mean_loss_fraction,
            });
            (run, rows)
        }
        TradingRule::Profile(StockProfile { .. }) => {
            return Err(Error::ConfigParse("simulation needs a threshold or Poisson rule".into()))
        }
    };
    if let Some(path) = ledger {
        write_ledger(&run.episodes, fs::File::create(path)?)?;
    }
    Ok(compare_rows(run.stats.count, rows))
}

fn cmd_lambda_star(cfg: &Config) -> Result<Output, Error> {
    let (u, asset, costs) = (cfg.utility()?, cfg.asset()?, cfg.costs()?);
    let tr = check_transversality(&u, &asset, &costs);
    if !tr.ok {
        return Err(Error::Transversality(tr));
    }
    let c = critical_lambda(&u, &asset, &costs)?;
    Ok(Output::single(
        serde_json::to_value(c).expect("serializable"),
        vec![
            ("lambda_star", num(c.lambda_star)),
            ("theta_star", num(c.theta_star)),
            ("theta_big_star", num(c.theta_big_star)),
        ],
    ))
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(io::Error::from)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn run(cli: &Cli) -> Result<Vec<u8>, Error> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path, &cli.set)?,
        None => Config::from_json_str("", &cli.set)?,
    };
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    let format = cli.format.unwrap_or(match cli.command {
        Command::Table { .. } => Format::Csv,
        _ => Format::Json,
    });
    let out = match &cli.command {
        Command::Table { id } => {
            let (report, csv) = cmd_table(&cfg, (*id).into())?;
            if format == Format::Csv {
                return Ok(csv);
            }
            Output { report, header: Vec::new(), rows: Vec::new() }
        }
        Command::Policy => cmd_policy(&cfg, cli.verbose)?,
        Command::Stats => cmd_stats(&cfg)?,
        Command::Poisson => cmd_poisson(&cfg)?,
        Command::Aggregate => cmd_aggregate(&cfg)?,
        Command::Simulate { ledger } => cmd_simulate(&cfg, ledger.as_ref(), cli.verbose)?,
        Command::LambdaStar => cmd_lambda_star(&cfg)?,
    };
    match format {
        Format::Csv => csv_bytes(&out.header, &out.rows),
        Format::Json => {
            cfg.report = Some(out.report);
            let mut text = cfg.to_json_pretty();
            text.push('\n');
            Ok(text.into_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli).and_then(|bytes| {
        match &cli.out {
            Some(path) => fs::write(path, bytes)?,
            None => io::stdout().write_all(&bytes)?,
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
