//! Monte Carlo simulation of price paths under threshold and Poisson selling,
//! and of multi-stock accounts observed the way Odean counts them.
//!
//! Every episode (or stock, in account runs) draws from its own ChaCha8
//! substreams keyed by `(seed, index)`, so results do not depend on how
//! rayon schedules the work. Reductions run in index order.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{Population, TradingRule};
use crate::error::{Error, Result};
use crate::params::AssetParams;
use crate::stats::{gains_only_stats, threshold_stats};

const MAX_BATCHES: usize = 100;
/// Fewer post burn-in sales than this and PGR/PLR are not worth reporting.
pub const MIN_SALES: u64 = 100;
/// Burn-in as a multiple of the longest expected holding period.
pub const BURN_IN_FACTOR: f64 = 5.0;
/// `exp(-28)`: crossing probabilities below this are not sampled.
const BRIDGE_CUTOFF: f64 = 14.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Years between drawn increments.
    pub dt: f64,
    /// Each step is split into `2^refine` substeps by Brownian-bridge
    /// interpolation. Runs that differ only in `refine` share the coarse path.
    pub refine: u32,
    pub n_episodes: usize,
    /// Years simulated per account, burn-in included.
    pub horizon_years: f64,
    pub n_accounts: usize,
    pub antithetic: bool,
    /// Test for barrier crossings between grid points.
    pub bridge: bool,
    pub max_episode_years: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            dt: 1.0 / 2500.0,
            refine: 0,
            n_episodes: 100_000,
            horizon_years: 60.0,
            n_accounts: 200,
            antithetic: false,
            bridge: true,
            max_episode_years: 1000.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSimConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if self.refine > 12 {
            return bad(format!("refine = {} is above 12", self.refine));
        }
        if self.n_episodes < 2 {
            return bad("n_episodes must be at least 2".into());
        }
        if self.n_accounts == 0 {
            return bad("n_accounts must be at least 1".into());
        }
        if !(self.horizon_years > 0.0 && self.horizon_years.is_finite()) {
            return bad(format!("horizon_years = {} must be positive", self.horizon_years));
        }
        if !(self.max_episode_years > 0.0) {
            return bad(format!("max_episode_years = {} must be positive", self.max_episode_years));
        }
        Ok(())
    }

    /// Substep length in years.
    pub fn step(&self) -> f64 {
        self.dt / (1u64 << self.refine) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance from `truth` in standard errors.
    pub fn z(&self, truth: f64) -> f64 {
        (self.value - truth) / self.se
    }
}

/// Empirical counterparts of the closed-form statistics. Episode runs fill
/// the episode fields; account runs fill all that apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    /// Episodes, or post burn-in sales for account runs.
    pub count: u64,
    pub q_gain: Estimate,
    /// Years.
    pub mean_duration: Estimate,
    pub phi_gain: Option<Estimate>,
    pub mean_gain_multiple: Option<Estimate>,
    pub mean_loss_fraction: Option<Estimate>,
    pub pgr: Option<Estimate>,
    pub plr: Option<Estimate>,
    pub o: Option<Estimate>,
}

/// One line of the per-episode ledger. Episodes are laid end to end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub stream: u64,
    pub t_start: f64,
    pub t_end: f64,
    pub x_exit: f64,
    pub is_gain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub stats: EmpiricalStats,
    pub episodes: Vec<EpisodeRecord>,
}

pub fn write_ledger<W: Write>(records: &[EpisodeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Log-price increments for one path. Coarse normals, bridge refinements
/// and crossing coins come from separate substreams.
struct Path {
    coarse: ChaCha8Rng,
    fine: ChaCha8Rng,
    coin: ChaCha8Rng,
    sign: f64,
    drift: f64,
    sd: f64,
    bridge_sd: f64,
    levels: u32,
    buf: Vec<f64>,
    pos: usize,
}

impl Path {
    fn new(seed: u64, unit: u64, sign: f64, asset: &AssetParams, cfg: &SimConfig) -> Self {
        let sd = asset.sigma * cfg.dt.sqrt();
        Path {
            coarse: substream(seed, 3 * unit),
            fine: substream(seed, 3 * unit + 1),
            coin: substream(seed, 3 * unit + 2),
            sign,
            drift: asset.log_drift() * cfg.step(),
            sd,
            bridge_sd: 0.5 * sd,
            levels: cfg.refine,
            buf: Vec::with_capacity(1 << cfg.refine),
            pos: 0,
        }
    }

    fn fill(&mut self) {
        let z: f64 = self.coarse.sample(StandardNormal);
        self.buf.clear();
        self.buf.push(self.sign * self.sd * z);
        let mut c = self.bridge_sd;
        for _ in 0..self.levels {
            let len = self.buf.len();
            self.buf.resize(2 * len, 0.0);
            // back to front so unread entries are never overwritten
            for i in (0..len).rev() {
                let w = self.buf[i];
                let z: f64 = self.fine.sample(StandardNormal);
                let half = 0.5 * w + self.sign * c * z;
                self.buf[2 * i] = half;
                self.buf[2 * i + 1] = w - half;
            }
            c *= FRAC_1_SQRT_2;
        }
        self.pos = 0;
    }

    #[inline]
    fn next(&mut self) -> f64 {
        if self.pos == self.buf.len() {
            self.fill();
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        self.drift + w
    }

    fn uniform(&mut self) -> f64 {
        self.coin.random::<f64>()
    }
}

/// Log barriers; `lower = -inf` for gains-only selling.
#[derive(Clone, Copy)]
struct Barriers {
    lower: f64,
    upper: f64,
    var_step: f64,
    bridge: bool,
}

impl Barriers {
    /// Whether a step from `y0` to `y1` hits a barrier: `Some(true)` for the
    /// upper one.
    #[inline]
    fn hit(&self, y0: f64, y1: f64, path: &mut Path) -> Option<bool> {
        if y1 >= self.upper {
            return Some(true);
        }
        if y1 <= self.lower {
            return Some(false);
        }
        if !self.bridge {
            return None;
        }
        let up = (self.upper - y0) * (self.upper - y1);
        let down = (y0 - self.lower) * (y1 - self.lower);
        let cut = BRIDGE_CUTOFF * self.var_step;
        if up > cut && !(down < cut) {
            return None;
        }
        let p_up = (-2.0 * up / self.var_step).exp();
        let p_down = if down < cut { (-2.0 * down / self.var_step).exp() } else { 0.0 };
        let u = path.uniform();
        if u < p_up {
            Some(true)
        } else if u < p_up + p_down {
            Some(false)
        } else {
            None
        }
    }
}

struct Outcome {
    duration: f64,
    gain: bool,
    x_exit: f64,
    /// Time spent above the reference level.
    above: f64,
}

fn threshold_episode(path: &mut Path, b: &Barriers, h: f64, max_steps: u64) -> Result<Outcome> {
    let (mut y, mut steps, mut above) = (0.0f64, 0u64, 0.0);
    loop {
        if steps >= max_steps {
            return Err(Error::Degenerate(format!(
                "an episode outlived max_episode_years ({} steps)",
                max_steps
            )));
        }
        let y1 = y + path.next();
        steps += 1;
        if let Some(gain) = b.hit(y, y1, path) {
            // crossing taken at mid-step
            if y > 0.0 {
                above += 0.5 * h;
            }
            return Ok(Outcome {
                duration: (steps as f64 - 0.5) * h,
                gain,
                x_exit: if gain { b.upper.exp() } else { b.lower.exp() },
                above,
            });
        }
        above += 0.5 * h * ((y > 0.0) as u8 + (y1 > 0.0) as u8) as f64;
        y = y1;
    }
}

/// Stream unit and sign for episode `i`; antithetic pairs share a unit.
fn unit_of(i: usize, antithetic: bool) -> (u64, f64) {
    if antithetic {
        ((i / 2) as u64, if i % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (i as u64, 1.0)
    }
}

fn episode_count(cfg: &SimConfig) -> usize {
    if cfg.antithetic {
        cfg.n_episodes.div_ceil(2) * 2
    } else {
        cfg.n_episodes
    }
}

/// Sums `rows` into at most `MAX_BATCHES` contiguous batches of whole
/// groups (antithetic pairs stay together).
fn batch<const K: usize>(rows: &[[f64; K]], group: usize) -> Vec<[f64; K]> {
    let groups = rows.len() / group;
    let nb = MAX_BATCHES.min(groups).max(1);
    let mut out = vec![[0.0; K]; nb];
    for (i, r) in rows.iter().enumerate() {
        let b = ((i / group) * nb / groups.max(1)).min(nb - 1);
        for k in 0..K {
            out[b][k] += r[k];
        }
    }
    out
}

/// Delete-one-batch jackknife for a smooth function of the totals.
fn jackknife<const K: usize>(batches: &[[f64; K]], f: impl Fn(&[f64; K]) -> f64) -> Estimate {
    let mut total = [0.0; K];
    for b in batches {
        for k in 0..K {
            total[k] += b[k];
        }
    }
    let value = f(&total);
    let nb = batches.len() as f64;
    let loo: Vec<f64> = batches
        .iter()
        .map(|b| {
            let mut t = total;
            for k in 0..K {
                t[k] -= b[k];
            }
            f(&t)
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / nb;
    let var = (nb - 1.0) / nb * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    Estimate { value, se: var.sqrt() }
}

// Per-episode row layout shared by both episode simulators.
const N: usize = 0;
const GAINS: usize = 1;
const DUR: usize = 2;
const DUR2: usize = 3;
const ABOVE: usize = 4;
const X_GAIN: usize = 5;
const X_LOSS: usize = 6;

fn episode_row(o: &Outcome) -> [f64; 7] {
    let g = o.gain as u8 as f64;
    [1.0, g, o.duration, o.duration * o.duration, o.above, g * o.x_exit, (1.0 - g) * o.x_exit]
}

/// Binomial and sample-mean errors for independent episodes; jackknife over
/// batches when antithetic pairs are correlated.
fn episode_estimates(rows: &[[f64; 7]], antithetic: bool) -> (Estimate, Estimate, Estimate, Vec<[f64; 7]>) {
    let group = if antithetic { 2 } else { 1 };
    let batches = batch(rows, group);
    let q = |t: &[f64; 7]| t[GAINS] / t[N];
    let e = |t: &[f64; 7]| t[DUR] / t[N];
    let phi = jackknife(&batches, |t| t[ABOVE] / t[DUR]);
    if antithetic {
        return (jackknife(&batches, q), jackknife(&batches, e), phi, batches);
    }
    let mut t = [0.0; 7];
    for r in rows {
        for k in 0..7 {
            t[k] += r[k];
        }
    }
    let n = t[N];
    let qv = q(&t);
    let ev = e(&t);
    let var_dur = (t[DUR2] / n - ev * ev) * n / (n - 1.0);
    (
        Estimate { value: qv, se: (qv * (1.0 - qv) / n).sqrt() },
        Estimate { value: ev, se: (var_dur.max(0.0) / n).sqrt() },
        phi,
        batches,
    )
}

fn ledger(outcomes: &[Outcome], antithetic: bool) -> Vec<EpisodeRecord> {
    let mut t = 0.0;
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let r = EpisodeRecord {
                stream: unit_of(i, antithetic).0,
                t_start: t,
                t_end: t + o.duration,
                x_exit: o.x_exit,
                is_gain: o.gain,
            };
            t += o.duration;
            r
        })
        .collect()
}

/// Episodes of a `theta`/`Theta` rule started at `x = 1`. `theta = 0` sells
/// at gains only.
pub fn simulate_threshold_episodes(theta: f64, theta_big: f64, asset: &AssetParams, cfg: &SimConfig) -> Result<EmpiricalStats> {
    Ok(simulate_threshold_run(theta, theta_big, asset, cfg)?.stats)
}

pub fn simulate_threshold_run(theta: f64, theta_big: f64, asset: &AssetParams, cfg: &SimConfig) -> Result<SimRun> {
    cfg.validate()?;
    if theta == 0.0 {
        gains_only_stats(theta_big, asset)?;
    } else {
        threshold_stats(theta, theta_big, asset)?;
    }
    let h = cfg.step();
    let barriers = Barriers {
        lower: if theta == 0.0 { f64::NEG_INFINITY } else { theta.ln() },
        upper: theta_big.ln(),
        var_step: asset.variance() * h,
        bridge: cfg.bridge,
    };
    let max_steps = (cfg.max_episode_years / h).ceil() as u64;
    let outcomes: Vec<Outcome> = (0..episode_count(cfg))
        .into_par_iter()
        .map(|i| {
            let (unit, sign) = unit_of(i, cfg.antithetic);
            let mut path = Path::new(cfg.seed, unit, sign, asset, cfg);
            threshold_episode(&mut path, &barriers, h, max_steps)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<[f64; 7]> = outcomes.iter().map(episode_row).collect();
    let (q_gain, mean_duration, phi_gain, _) = episode_estimates(&rows, cfg.antithetic);
    Ok(SimRun {
        stats: EmpiricalStats {
            count: rows.len() as u64,
            q_gain,
            mean_duration,
            phi_gain: Some(phi_gain),
            mean_gain_multiple: None,
            mean_loss_fraction: None,
            pgr: None,
            plr: None,
            o: None,
        },
        episodes: ledger(&outcomes, cfg.antithetic),
    })
}

/// Exact Poisson episode: an exponential holding time, the lognormal price
/// at a uniform time inside it (for the time fraction at a gain), and the
/// price at the sale.
fn poisson_episode(path: &mut Path, rho: f64, asset: &AssetParams) -> Outcome {
    let tau = -(1.0 - path.uniform()).ln() / rho;
    let s = path.uniform() * tau;
    let m = asset.log_drift();
    let z1: f64 = path.coarse.sample(StandardNormal);
    let z2: f64 = path.coarse.sample(StandardNormal);
    let y_mid = m * s + asset.sigma * s.sqrt() * path.sign * z1;
    let y = y_mid + m * (tau - s) + asset.sigma * (tau - s).sqrt() * path.sign * z2;
    Outcome {
        duration: tau,
        gain: y > 0.0,
        x_exit: y.exp(),
        above: if y_mid > 0.0 { tau } else { 0.0 },
    }
}

/// Episodes ending at the first arrival of a rate-`rho` Poisson clock.
/// Exact in distribution, so `dt` is not used.
pub fn simulate_poisson_episodes(rho: f64, asset: &AssetParams, cfg: &SimConfig) -> Result<EmpiricalStats> {
    Ok(simulate_poisson_run(rho, asset, cfg)?.stats)
}

pub fn simulate_poisson_run(rho: f64, asset: &AssetParams, cfg: &SimConfig) -> Result<SimRun> {
    cfg.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Degenerate(format!("Poisson intensity must be positive, got {rho}")));
    }
    let outcomes: Vec<Outcome> = (0..episode_count(cfg))
        .into_par_iter()
        .map(|i| {
            let (unit, sign) = unit_of(i, cfg.antithetic);
            let mut path = Path::new(cfg.seed, unit, sign, asset, cfg);
            poisson_episode(&mut path, rho, asset)
        })
        .collect();
    let rows: Vec<[f64; 7]> = outcomes.iter().map(episode_row).collect();
    let (q_gain, mean_duration, phi_gain, batches) = episode_estimates(&rows, cfg.antithetic);
    let gains: f64 = batches.iter().map(|b| b[GAINS]).sum();
    let losses = rows.len() as f64 - gains;
    Ok(SimRun {
        stats: EmpiricalStats {
            count: rows.len() as u64,
            q_gain,
            mean_duration,
            phi_gain: Some(phi_gain),
            mean_gain_multiple: (gains > 0.0).then(|| jackknife(&batches, |t| t[X_GAIN] / t[GAINS])),
            mean_loss_fraction: (losses > 0.0).then(|| jackknife(&batches, |t| t[X_LOSS] / (t[N] - t[GAINS]))),
            pgr: None,
            plr: None,
            o: None,
        },
        episodes: ledger(&outcomes, cfg.antithetic),
    })
}

/// A simulated position inside an account.
struct Stock {
    path: Path,
    rule: Rule,
    y: f64,
    bought: u64,
    /// Poisson sale step.
    due: u64,
    /// Exact Poisson holding time.
    tau: f64,
}

#[derive(Clone, Copy)]
enum Rule {
    Threshold(Barriers),
    Poisson(f64),
}

impl Stock {
    fn restart(&mut self, now: u64, h: f64) {
        self.y = 0.0;
        self.bought = now;
        if let Rule::Poisson(rho) = self.rule {
            self.tau = -(1.0 - self.path.uniform()).ln() / rho;
            self.due = now + ((self.tau / h).ceil() as u64).max(1);
        }
    }
}

// Per-account counter layout.
const RG: usize = 0;
const RL: usize = 1;
const PG: usize = 2;
const PL: usize = 3;
const A_DUR: usize = 4;
const A_XG: usize = 5;
const A_XL: usize = 6;

fn simulate_account(
    rules: &[Rule],
    first_unit: u64,
    asset: &AssetParams,
    cfg: &SimConfig,
    steps: u64,
    burn: u64,
) -> [f64; 7] {
    let h = cfg.step();
    let mut stocks: Vec<Stock> = rules
        .iter()
        .enumerate()
        .map(|(j, &rule)| {
            let mut s = Stock {
                path: Path::new(cfg.seed, first_unit + j as u64, 1.0, asset, cfg),
                rule,
                y: 0.0,
                bought: 0,
                due: 0,
                tau: 0.0,
            };
            s.restart(0, h);
            s
        })
        .collect();
    let mut c = [0.0; 7];
    let mut sold: Vec<(usize, bool)> = Vec::new();
    for now in 1..=steps {
        sold.clear();
        for (j, s) in stocks.iter_mut().enumerate() {
            let y1 = s.y + s.path.next();
            let exit = match s.rule {
                Rule::Threshold(b) => b.hit(s.y, y1, &mut s.path),
                Rule::Poisson(_) => (now == s.due).then_some(y1 > 0.0),
            };
            s.y = y1;
            if let Some(gain) = exit {
                sold.push((j, gain));
            }
        }
        if sold.is_empty() {
            continue;
        }
        for &(j, gain) in &sold {
            let s = &stocks[j];
            if now > burn {
                let (duration, x) = match s.rule {
                    Rule::Threshold(b) => (
                        (now - s.bought) as f64 * h - 0.5 * h,
                        if gain { b.upper.exp() } else { b.lower.exp() },
                    ),
                    Rule::Poisson(_) => (s.tau, s.y.exp()),
                };
                c[A_DUR] += duration;
                if gain {
                    c[RG] += 1.0;
                    c[A_XG] += x;
                } else {
                    c[RL] += 1.0;
                    c[A_XL] += x;
                }
                for (k, other) in stocks.iter().enumerate() {
                    if k != j {
                        c[if other.y > 0.0 { PG } else { PL }] += 1.0;
                    }
                }
            }
        }
        for &(j, _) in &sold {
            stocks[j].restart(now, h);
        }
    }
    c
}

/// Split `n` accounts among fractions `pis` by largest remainder.
fn apportion(pis: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = pis.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..pis.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Accounts holding independent stocks, each following its own rule. At
/// every sale the sold position counts as realized and every other position
/// in that account as a paper gain or loss. The first
/// `BURN_IN_FACTOR` longest expected holding periods are discarded.
pub fn simulate_accounts(population: &Population, asset: &AssetParams, cfg: &SimConfig) -> Result<EmpiricalStats> {
    cfg.validate()?;
    population.closed_form(asset)?;
    let h = cfg.step();
    let mut longest: f64 = 0.0;
    let mut to_rule = |r: &TradingRule| -> Result<Rule> {
        longest = longest.max(r.profile(asset)?.mean_duration);
        match *r {
            TradingRule::Threshold { theta, theta_big } => Ok(Rule::Threshold(Barriers {
                lower: if theta == 0.0 { f64::NEG_INFINITY } else { theta.ln() },
                upper: theta_big.ln(),
                var_step: asset.variance() * h,
                bridge: cfg.bridge,
            })),
            TradingRule::Poisson { rho } => Ok(Rule::Poisson(rho)),
            TradingRule::Profile(_) => Err(Error::InvalidPopulation(
                "a rule given only by its statistics cannot be simulated".into(),
            )),
        }
    };
    let accounts: Vec<Vec<Rule>> = match population {
        Population::Investors { types } => {
            let pis: Vec<f64> = types.iter().map(|t| t.pi).collect();
            let counts = apportion(&pis, cfg.n_accounts);
            let mut out = Vec::with_capacity(cfg.n_accounts);
            for (t, &count) in types.iter().zip(&counts) {
                let rule = to_rule(&t.rule)?;
                out.extend(std::iter::repeat_n(vec![rule; t.n as usize], count));
            }
            out
        }
        Population::Holdings { groups } => {
            let mut rules = Vec::new();
            for g in groups {
                let rule = to_rule(&g.rule)?;
                rules.extend(std::iter::repeat_n(rule, g.n as usize));
            }
            vec![rules; cfg.n_accounts]
        }
    };
    let steps = (cfg.horizon_years / h).ceil() as u64;
    let burn = (BURN_IN_FACTOR * longest / h).ceil() as u64;
    let mut first_units = Vec::with_capacity(accounts.len());
    let mut next = 0u64;
    for a in &accounts {
        first_units.push(next);
        next += a.len() as u64;
    }
    let rows: Vec<[f64; 7]> = accounts
        .par_iter()
        .zip(first_units.par_iter())
        .map(|(rules, &first)| simulate_account(rules, first, asset, cfg, steps, burn))
        .collect();

    let batches = batch(&rows, 1);
    let mut t = [0.0; 7];
    for b in &batches {
        for k in 0..7 {
            t[k] += b[k];
        }
    }
    let sales = (t[RG] + t[RL]) as u64;
    if sales < MIN_SALES {
        return Err(Error::HorizonTooShort { sales, required: MIN_SALES });
    }
    let pgr = |t: &[f64; 7]| t[RG] / (t[RG] + t[PG]);
    let plr = |t: &[f64; 7]| t[RL] / (t[RL] + t[PL]);
    let has = |k: usize| t[k] > 0.0;
    Ok(EmpiricalStats {
        count: sales,
        q_gain: jackknife(&batches, |t| t[RG] / (t[RG] + t[RL])),
        mean_duration: jackknife(&batches, |t| t[A_DUR] / (t[RG] + t[RL])),
        phi_gain: (t[PG] + t[PL] > 0.0).then(|| jackknife(&batches, |t| t[PG] / (t[PG] + t[PL]))),
        mean_gain_multiple: has(RG).then(|| jackknife(&batches, |t| t[A_XG] / t[RG])),
        mean_loss_fraction: has(RL).then(|| jackknife(&batches, |t| t[A_XL] / t[RL])),
        pgr: has(RG).then(|| jackknife(&batches, pgr)),
        plr: has(RL).then(|| jackknife(&batches, plr)),
        o: has(RL).then(|| jackknife(&batches, |t| pgr(t) / plr(t))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{RuleGroup, RuleInvestor};
    use crate::stats::poisson_stats;

    fn asset() -> AssetParams {
        AssetParams::new(0.09, 0.30).unwrap()
    }

    fn cfg(n: usize) -> SimConfig {
        SimConfig { n_episodes: n, ..SimConfig::default() }
    }

    #[test]
    fn threshold_matches_closed_form() {
        let a = asset();
        let exact = threshold_stats(0.772, 1.277, &a).unwrap();
        let s = simulate_threshold_episodes(0.772, 1.277, &a, &cfg(20_000)).unwrap();
        assert!(s.q_gain.z(exact.q_gain).abs() < 3.0, "{s:?}");
        assert!(s.mean_duration.z(exact.mean_duration).abs() < 3.0, "{s:?}");
        assert!(s.phi_gain.unwrap().z(exact.phi_gain).abs() < 3.0, "{s:?}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = asset();
        let c = cfg(2_000);
        let r1 = simulate_threshold_run(0.8, 1.2, &a, &c).unwrap();
        let r2 = simulate_threshold_run(0.8, 1.2, &a, &c).unwrap();
        assert_eq!(r1, r2);
        let r3 = simulate_threshold_run(0.8, 1.2, &a, &SimConfig { seed: 2, ..c }).unwrap();
        assert_ne!(r1.stats, r3.stats);
    }

    #[test]
    fn symmetric_barriers_at_zero_log_drift() {
        let a = AssetParams::new(0.045, 0.30).unwrap();
        let s = simulate_threshold_episodes(1.0 / 1.3, 1.3, &a, &cfg(20_000)).unwrap();
        assert!(s.q_gain.z(0.5).abs() < 3.0, "{s:?}");
    }

    #[test]
    fn degenerate_policy_is_rejected() {
        let r = simulate_threshold_episodes(1.2, 1.2 - 1e-12, &asset(), &cfg(10));
        assert!(matches!(r, Err(Error::Degenerate(_))), "{r:?}");
    }

    #[test]
    fn poisson_matches_closed_form() {
        let a = asset();
        let exact = poisson_stats(1.16, &a).unwrap();
        let s = simulate_poisson_episodes(1.16, &a, &cfg(50_000)).unwrap();
        assert!(s.q_gain.z(exact.q_gain).abs() < 3.0, "{s:?}");
        assert!(s.phi_gain.unwrap().z(exact.phi_gain).abs() < 3.0, "{s:?}");
        assert!(s.mean_gain_multiple.unwrap().z(exact.mean_gain_multiple.value()).abs() < 3.0);
        assert!(s.mean_loss_fraction.unwrap().z(exact.mean_loss_fraction).abs() < 3.0);
        assert!(s.mean_duration.z(1.0 / 1.16).abs() < 3.0);
    }

    #[test]
    fn errors_shrink_like_root_n() {
        let a = asset();
        let s1 = simulate_poisson_episodes(1.0, &a, &cfg(20_000)).unwrap();
        let s2 = simulate_poisson_episodes(1.0, &a, &cfg(40_000)).unwrap();
        let ratio = s2.q_gain.se / s1.q_gain.se;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let a = asset();
        let c = SimConfig { antithetic: true, ..cfg(20_001) };
        let run = simulate_poisson_run(1.0, &a, &c).unwrap();
        assert_eq!(run.stats.count, 20_002);
        let exact = poisson_stats(1.0, &a).unwrap();
        assert!(run.stats.q_gain.z(exact.q_gain).abs() < 3.0);
        assert_eq!(run.episodes[0].stream, run.episodes[1].stream);
    }

    #[test]
    fn refinement_shares_the_coarse_path() {
        let a = asset();
        let coarse = simulate_threshold_episodes(0.772, 1.277, &a, &cfg(5_000)).unwrap();
        let fine = simulate_threshold_episodes(0.772, 1.277, &a, &SimConfig { refine: 2, ..cfg(5_000) }).unwrap();
        assert!((coarse.q_gain.value - fine.q_gain.value).abs() < coarse.q_gain.se);
        assert!((coarse.mean_duration.value - fine.mean_duration.value).abs() < coarse.mean_duration.se);
    }

    #[test]
    fn ledger_is_contiguous_csv() {
        let run = simulate_threshold_run(0.8, 1.25, &asset(), &cfg(10)).unwrap();
        for w in run.episodes.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
        }
        let mut buf = Vec::new();
        write_ledger(&run.episodes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stream,t_start,t_end,x_exit,is_gain\n"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn accounts_match_representative_investor() {
        let a = asset();
        let pop = Population::Investors {
            types: vec![RuleInvestor { pi: 1.0, n: 8, rule: TradingRule::Threshold { theta: 0.772, theta_big: 1.277 } }],
        };
        let exact = pop.closed_form(&a).unwrap();
        let c = SimConfig { n_accounts: 40, horizon_years: 40.0, ..SimConfig::default() };
        let s = simulate_accounts(&pop, &a, &c).unwrap();
        assert!(s.count > 10_000);
        assert!(s.pgr.unwrap().z(exact.pgr).abs() < 3.0, "{s:?}");
        assert!(s.plr.unwrap().z(exact.plr).abs() < 3.0, "{s:?}");
    }

    #[test]
    fn short_horizon_is_reported() {
        let pop = Population::Holdings {
            groups: vec![RuleGroup { n: 2, rule: TradingRule::Poisson { rho: 1.0 } }],
        };
        let c = SimConfig { n_accounts: 1, horizon_years: 6.0, ..SimConfig::default() };
        let r = simulate_accounts(&pop, &asset(), &c);
        assert!(matches!(r, Err(Error::HorizonTooShort { .. })), "{r:?}");
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(&[0.5, 0.5], 7).iter().sum::<usize>(), 7);
        assert_eq!(apportion(&[0.25, 0.75], 4), vec![1, 3]);
    }

    #[test]
    fn bad_config() {
        let c = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(matches!(c.validate(), Err(Error::InvalidSimConfig(_))));
    }
}
