//! Odean's pooled proportions of gains and losses realized (PGR, PLR) and
//! their ratio, for a representative investor and for mixtures of trading
//! rules across investors or across the stocks in one account.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::AssetParams;
use crate::policy::{Policy, Regime};
use crate::stats::{gains_only_stats, poisson_stats, threshold_stats, MaybeInfinite};

/// Population of account sizes. Only the multiplier
/// `m = n_bar + sigma_n^2 / n_bar = E[n^2] / E[n]` matters for a
/// representative investor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AccountSizeMix {
    Moments { n_bar: f64, sigma_n: f64 },
    Explicit { classes: Vec<AccountClass> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountClass {
    pub n: u32,
    pub pi: f64,
}

const FRACTION_TOL: f64 = 1e-9;

impl AccountSizeMix {
    /// Accounts of exactly `n` stocks.
    pub fn fixed(n: u32) -> Self {
        AccountSizeMix::Moments {
            n_bar: n as f64,
            sigma_n: 0.0,
        }
    }

    pub fn multiplier(&self) -> Result<f64> {
        match self {
            AccountSizeMix::Moments { n_bar, sigma_n } => {
                if !(n_bar.is_finite() && *n_bar >= 1.0) {
                    return Err(Error::InvalidPopulation(format!("n_bar = {n_bar} must be >= 1")));
                }
                if !(sigma_n.is_finite() && *sigma_n >= 0.0) {
                    return Err(Error::InvalidPopulation(format!("sigma_n = {sigma_n} must be >= 0")));
                }
                Ok(n_bar + sigma_n * sigma_n / n_bar)
            }
            AccountSizeMix::Explicit { classes } => {
                check_fractions(classes.iter().map(|c| c.pi))?;
                if classes.iter().any(|c| c.n == 0) {
                    return Err(Error::InvalidPopulation("account sizes must be >= 1".into()));
                }
                let m1: f64 = classes.iter().map(|c| c.pi * c.n as f64).sum();
                let m2: f64 = classes.iter().map(|c| c.pi * (c.n as f64).powi(2)).sum();
                Ok(m2 / m1)
            }
        }
    }
}

fn check_fractions(pis: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for pi in pis {
        if !(pi.is_finite() && pi >= 0.0) {
            return Err(Error::InvalidPopulation(format!("fraction {pi} must be >= 0")));
        }
        total += pi;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidPopulation("population is empty".into()));
    }
    if (total - 1.0).abs() > FRACTION_TOL {
        return Err(Error::InvalidPopulation(format!("fractions sum to {total}, not 1")));
    }
    Ok(())
}

/// Per-stock statistics that enter the aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StockProfile {
    /// Realized gain multiple (`Theta`, or its Poisson average).
    pub gain_multiple: MaybeInfinite,
    /// Realized loss fraction; `None` when losses are never realized.
    pub loss_fraction: Option<f64>,
    pub q_gain: f64,
    pub phi_gain: f64,
    /// Years.
    pub mean_duration: f64,
}

impl StockProfile {
    fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.q_gain)
            && (0.0..=1.0).contains(&self.phi_gain)
            && self.mean_duration > 0.0
            && self.mean_duration.is_finite();
        if !ok {
            return Err(Error::InvalidPopulation(format!(
                "stock profile out of range: q_gain = {}, phi_gain = {}, mean_duration = {}",
                self.q_gain, self.phi_gain, self.mean_duration
            )));
        }
        Ok(())
    }

    pub fn q_loss(&self) -> f64 {
        1.0 - self.q_gain
    }

    pub fn phi_loss(&self) -> f64 {
        1.0 - self.phi_gain
    }

    pub fn from_policy(p: &Policy, asset: &AssetParams) -> Result<Self> {
        let rule = match p.regime {
            Regime::TwoPoint => TradingRule::Threshold {
                theta: p.theta,
                theta_big: p.theta_big,
            },
            Regime::GainsOnly => TradingRule::Threshold {
                theta: 0.0,
                theta_big: p.theta_big,
            },
        };
        rule.profile(asset)
    }
}

/// How a stock is traded. `theta = 0` means losses are never realized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TradingRule {
    Threshold { theta: f64, theta_big: f64 },
    Poisson { rho: f64 },
    /// Statistics supplied directly.
    Profile(StockProfile),
}

impl TradingRule {
    pub fn profile(&self, asset: &AssetParams) -> Result<StockProfile> {
        let p = match *self {
            TradingRule::Threshold { theta, theta_big } if theta == 0.0 => {
                let st = gains_only_stats(theta_big, asset)?;
                StockProfile {
                    gain_multiple: MaybeInfinite::Finite(theta_big),
                    loss_fraction: None,
                    q_gain: st.q_gain,
                    phi_gain: st.phi_gain,
                    mean_duration: st.mean_duration,
                }
            }
            TradingRule::Threshold { theta, theta_big } => {
                let st = threshold_stats(theta, theta_big, asset)?;
                StockProfile {
                    gain_multiple: MaybeInfinite::Finite(theta_big),
                    loss_fraction: Some(theta),
                    q_gain: st.q_gain,
                    phi_gain: st.phi_gain,
                    mean_duration: st.mean_duration,
                }
            }
            TradingRule::Poisson { rho } => {
                let st = poisson_stats(rho, asset)?;
                StockProfile {
                    gain_multiple: st.mean_gain_multiple,
                    loss_fraction: Some(st.mean_loss_fraction),
                    q_gain: st.q_gain,
                    phi_gain: st.phi_gain,
                    mean_duration: st.mean_duration,
                }
            }
            TradingRule::Profile(p) => p,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestorType {
    pub pi: f64,
    pub n: u32,
    pub profile: StockProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingGroup {
    pub n: u32,
    pub profile: StockProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeanStats {
    pub pgr: f64,
    pub plr: f64,
    /// `pgr / plr`, infinite when no losses are realized.
    pub o: MaybeInfinite,
    /// Trade-weighted realized gain multiple.
    pub mean_gain_multiple: MaybeInfinite,
    /// Trade-weighted realized loss fraction, with gains-only types counted
    /// at 0; `None` if no type realizes losses.
    pub mean_loss_fraction: Option<f64>,
    pub q_gain: f64,
    /// Years.
    pub mean_duration: f64,
    /// Fraction of paper gains among the other stocks at a sale; `None` when
    /// no account holds a second stock.
    pub phi_gain: Option<f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn disposition(pgr: f64, plr: f64) -> MaybeInfinite {
    if plr > 0.0 {
        MaybeInfinite::Finite(pgr / plr)
    } else {
        MaybeInfinite::Infinite
    }
}

/// Trade-weighted averages of the realized statistics.
fn realized(profiles: &[StockProfile], weights: &[f64]) -> (MaybeInfinite, Option<f64>, f64, f64) {
    let total: f64 = weights.iter().sum();
    let (mut gain, mut loss) = (0.0, 0.0);
    let (mut q, mut e) = (0.0, 0.0);
    for (p, w) in profiles.iter().zip(weights) {
        let w = w / total;
        gain += w * p.gain_multiple.value();
        // a type that never sells at a loss enters at its lower threshold, 0
        loss += w * p.loss_fraction.unwrap_or(0.0);
        q += w * p.q_gain;
        e += w * p.mean_duration;
    }
    let any_losses = profiles.iter().any(|p| p.loss_fraction.is_some());
    (MaybeInfinite::from_f64(gain), any_losses.then_some(loss), q, e)
}

/// PGR, PLR and the disposition measure for one stock type held in accounts
/// drawn from `mix`.
pub fn representative_odean(profile: &StockProfile, mix: &AccountSizeMix) -> Result<OdeanStats> {
    profile.validate()?;
    let m = mix.multiplier()?;
    let pgr = ratio(profile.q_gain, profile.q_gain + (m - 1.0) * profile.phi_gain);
    let plr = ratio(profile.q_loss(), profile.q_loss() + (m - 1.0) * profile.phi_loss());
    Ok(OdeanStats {
        pgr,
        plr,
        o: disposition(pgr, plr),
        mean_gain_multiple: profile.gain_multiple,
        mean_loss_fraction: profile.loss_fraction,
        q_gain: profile.q_gain,
        mean_duration: profile.mean_duration,
        phi_gain: (m > 1.0).then_some(profile.phi_gain),
    })
}

/// Investors of different types, each trading all `n` of their stocks by
/// one rule.
pub fn heterogeneous_investors(types: &[InvestorType]) -> Result<OdeanStats> {
    check_fractions(types.iter().map(|t| t.pi))?;
    for t in types {
        if t.n == 0 {
            return Err(Error::InvalidPopulation("stocks per investor must be >= 1".into()));
        }
        t.profile.validate()?;
    }
    let profiles: Vec<StockProfile> = types.iter().map(|t| t.profile).collect();
    let trades: Vec<f64> = types
        .iter()
        .map(|t| t.pi * t.n as f64 / t.profile.mean_duration)
        .collect();
    let (gain, loss, q, e) = realized(&profiles, &trades);

    let (mut phi_num, mut phi_den) = (0.0, 0.0);
    let (mut g_num, mut g_den, mut l_num, mut l_den) = (0.0, 0.0, 0.0, 0.0);
    for (t, rate) in types.iter().zip(&trades) {
        let others = t.n as f64 - 1.0;
        let p = &t.profile;
        phi_num += rate * others * p.phi_gain;
        phi_den += rate * others;
        g_num += rate * p.q_gain;
        g_den += rate * (p.q_gain + others * p.phi_gain);
        l_num += rate * p.q_loss();
        l_den += rate * (p.q_loss() + others * p.phi_loss());
    }
    let (pgr, plr) = (ratio(g_num, g_den), ratio(l_num, l_den));
    Ok(OdeanStats {
        pgr,
        plr,
        o: disposition(pgr, plr),
        mean_gain_multiple: gain,
        mean_loss_fraction: loss,
        q_gain: q,
        mean_duration: e,
        phi_gain: (phi_den > 0.0).then(|| phi_num / phi_den),
    })
}

/// One representative account whose stocks fall into groups traded by
/// different rules.
pub fn heterogeneous_holdings(groups: &[HoldingGroup]) -> Result<OdeanStats> {
    if groups.is_empty() {
        return Err(Error::InvalidPopulation("no holding groups".into()));
    }
    for g in groups {
        g.profile.validate()?;
    }
    let total: u32 = groups.iter().map(|g| g.n).sum();
    if total < 2 {
        return Err(Error::InvalidPopulation(format!(
            "an account needs at least 2 stocks to observe paper gains, got {total}"
        )));
    }
    let profiles: Vec<StockProfile> = groups.iter().map(|g| g.profile).collect();
    let trades: Vec<f64> = groups
        .iter()
        .map(|g| g.n as f64 / g.profile.mean_duration)
        .collect();
    let (gain, loss, q, e) = realized(&profiles, &trades);

    // expected paper gains across the whole account
    let paper_gains: f64 = groups.iter().map(|g| g.n as f64 * g.profile.phi_gain).sum();
    let paper_losses = total as f64 - paper_gains;
    let (mut phi_num, mut rate_sum) = (0.0, 0.0);
    let (mut g_num, mut g_den, mut l_num, mut l_den) = (0.0, 0.0, 0.0, 0.0);
    for (g, rate) in groups.iter().zip(&trades) {
        let p = &g.profile;
        let gains_elsewhere = paper_gains - p.phi_gain;
        let losses_elsewhere = paper_losses - p.phi_loss();
        phi_num += rate * gains_elsewhere;
        rate_sum += rate;
        g_num += rate * p.q_gain;
        g_den += rate * (p.q_gain + gains_elsewhere);
        l_num += rate * p.q_loss();
        l_den += rate * (p.q_loss() + losses_elsewhere);
    }
    let (pgr, plr) = (ratio(g_num, g_den), ratio(l_num, l_den));
    Ok(OdeanStats {
        pgr,
        plr,
        o: disposition(pgr, plr),
        mean_gain_multiple: gain,
        mean_loss_fraction: loss,
        q_gain: q,
        mean_duration: e,
        phi_gain: Some(phi_num / ((total as f64 - 1.0) * rate_sum)),
    })
}

/// A population described by the rules its stocks are traded by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Population {
    /// Fraction `pi` of accounts hold `n` stocks, all traded by `rule`.
    Investors { types: Vec<RuleInvestor> },
    /// Every account holds all groups.
    Holdings { groups: Vec<RuleGroup> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleInvestor {
    pub pi: f64,
    pub n: u32,
    pub rule: TradingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleGroup {
    pub n: u32,
    pub rule: TradingRule,
}

impl Population {
    pub fn closed_form(&self, asset: &AssetParams) -> Result<OdeanStats> {
        match self {
            Population::Investors { types } => {
                let types = types
                    .iter()
                    .map(|t| Ok(InvestorType { pi: t.pi, n: t.n, profile: t.rule.profile(asset)? }))
                    .collect::<Result<Vec<_>>>()?;
                heterogeneous_investors(&types)
            }
            Population::Holdings { groups } => {
                let groups = groups
                    .iter()
                    .map(|g| Ok(HoldingGroup { n: g.n, profile: g.rule.profile(asset)? }))
                    .collect::<Result<Vec<_>>>()?;
                heterogeneous_holdings(&groups)
            }
        }
    }

    pub fn rules(&self) -> Vec<TradingRule> {
        match self {
            Population::Investors { types } => types.iter().map(|t| t.rule).collect(),
            Population::Holdings { groups } => groups.iter().map(|g| g.rule).collect(),
        }
    }
}
