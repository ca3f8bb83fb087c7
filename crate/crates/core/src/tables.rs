//! End-to-end reproduction of the calibration tables: optimize each
//! utility block, turn the policy into episode statistics, aggregate into
//! PGR/PLR, and print rows in the tables' column order.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{
    heterogeneous_holdings, heterogeneous_investors, representative_odean, AccountSizeMix, HoldingGroup,
    InvestorType, OdeanStats, StockProfile, TradingRule,
};
use crate::error::{Error, Result};
use crate::params::{serde_code, AssetParams, CostSpec, UtilitySpec, TRADING_DAYS_PER_YEAR};
use crate::policy::optimize_policy;
use crate::stats::{calibrate_poisson_rho, MaybeInfinite, PoissonTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    T1,
    T2,
    T3,
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(TableId::T1),
            "t2" => Ok(TableId::T2),
            "t3" => Ok(TableId::T3),
            _ => Err(Error::ConfigParse(format!("unknown table `{s}` (expected t1, t2 or t3)"))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableId::T1 => "t1",
            TableId::T2 => "t2",
            TableId::T3 => "t3",
        };
        f.write_str(s)
    }
}

/// Observed sale ratios used by the fit row and the Poisson calibration.
pub const ODEAN_GAIN_MULTIPLE: f64 = 1.277;
pub const ODEAN_LOSS_FRACTION: f64 = 0.772;
pub const ODEAN_Q_GAIN: f64 = 0.538;
pub const ODEAN_DAYS: f64 = 312.0;

/// Market inputs shared by every row.
#[derive(Debug, Clone, PartialEq)]
pub struct TableInputs {
    pub asset: AssetParams,
    pub costs: CostSpec,
    pub accounts: AccountSizeMix,
}

/// One output row. Fractions, not percentages; `loss = None` means losses
/// are never realized. Failed rows keep their labels and carry the error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub block: String,
    pub row: String,
    pub gain: Option<f64>,
    pub loss: Option<f64>,
    pub q_gain: Option<f64>,
    pub phi_gain: Option<f64>,
    pub mean_days: Option<f64>,
    pub pgr: Option<f64>,
    pub plr: Option<f64>,
    pub o: Option<MaybeInfinite>,
    pub note: String,
}

impl TableRow {
    fn failed(block: &str, row: &str, note: String) -> Self {
        TableRow {
            block: block.into(),
            row: row.into(),
            gain: None,
            loss: None,
            q_gain: None,
            phi_gain: None,
            mean_days: None,
            pgr: None,
            plr: None,
            o: None,
            note,
        }
    }

    fn from_odean(block: &str, row: &str, s: &OdeanStats, note: String) -> Self {
        TableRow {
            block: block.into(),
            row: row.into(),
            gain: Some(s.mean_gain_multiple.value() - 1.0),
            loss: s.mean_loss_fraction.map(|l| l - 1.0),
            q_gain: Some(s.q_gain),
            phi_gain: s.phi_gain,
            mean_days: Some(s.mean_duration * TRADING_DAYS_PER_YEAR),
            pgr: Some(s.pgr),
            plr: Some(s.plr),
            o: Some(s.o),
            note,
        }
    }
}

/// Profile of the optimal policy for `u`, with any warnings as a note.
fn optimal_profile(u: &UtilitySpec, inp: &TableInputs) -> Result<(StockProfile, String)> {
    let p = optimize_policy(u, &inp.asset, &inp.costs)?;
    let note = p
        .warnings
        .iter()
        .map(|w| serde_code(w.code))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((StockProfile::from_policy(&p, &inp.asset)?, note))
}

fn representative(block: &str, row: &str, profile: Result<(StockProfile, String)>, inp: &TableInputs) -> TableRow {
    match profile.and_then(|(p, note)| Ok((representative_odean(&p, &inp.accounts)?, note))) {
        Ok((s, note)) => TableRow::from_odean(block, row, &s, note),
        Err(e) => TableRow::failed(block, row, e.to_string()),
    }
}

fn fit_row(inp: &TableInputs) -> TableRow {
    let rule = TradingRule::Threshold { theta: ODEAN_LOSS_FRACTION, theta_big: ODEAN_GAIN_MULTIPLE };
    representative("fit", "fit to observed sale ratios", rule.profile(&inp.asset).map(|p| (p, String::new())), inp)
}

fn poisson_rows(inp: &TableInputs) -> Vec<TableRow> {
    [
        (PoissonTarget::MeanLossFraction(ODEAN_LOSS_FRACTION), "matches theta"),
        (PoissonTarget::MeanDuration(ODEAN_DAYS / TRADING_DAYS_PER_YEAR), "matches E[tau]"),
        (PoissonTarget::MeanGainMultiple(ODEAN_GAIN_MULTIPLE), "matches Theta"),
        (PoissonTarget::QGain(ODEAN_Q_GAIN), "matches Q_G"),
    ]
    .into_iter()
    .map(|(target, note)| match calibrate_poisson_rho(target, &inp.asset) {
        Ok(rho) => {
            let row = format!("rho={rho:.2}");
            let mut r = representative("poisson", &row, TradingRule::Poisson { rho }.profile(&inp.asset).map(|p| (p, String::new())), inp);
            r.note = format!("{note}; rho={rho:.5}");
            r
        }
        Err(e) => TableRow::failed("poisson", note, e.to_string()),
    })
    .collect()
}

fn utility_rows(inp: &TableInputs, block: &str, betas: &[f64], make: impl Fn(f64) -> Result<UtilitySpec>) -> Vec<TableRow> {
    betas
        .iter()
        .map(|&beta| {
            let row = format!("beta={beta}");
            representative(block, &row, make(beta).and_then(|u| optimal_profile(&u, inp)), inp)
        })
        .collect()
}

fn table1(inp: &TableInputs) -> Vec<TableRow> {
    let mut rows = vec![fit_row(inp)];
    rows.extend(poisson_rows(inp));
    // (alpha_g, alpha_l, delta, second beta)
    for (ag, al, delta, beta) in [
        (1.0, 1.0, 0.10, 0.53),
        (0.88, 0.88, 0.08, 0.88),
        (0.5, 0.88, 0.05, 0.3),
        (0.5, 1.0, 0.05, 0.3),
        (0.5, 0.5, 0.05, 0.3),
    ] {
        let block = format!("scaled_tk alpha_g={ag} alpha_l={al} delta={delta}");
        rows.extend(utility_rows(inp, &block, &[0.0, beta], |b| UtilitySpec::scaled_tk(ag, al, 2.0, b, delta)));
    }
    rows
}

fn table2(inp: &TableInputs) -> Vec<TableRow> {
    let mut rows = vec![fit_row(inp)];
    for al in [2.0, 4.0, 8.0, 30.0] {
        let block = format!("modified_tk alpha_g=0.5 alpha_l={al}");
        rows.extend(utility_rows(inp, &block, &[0.0, 0.3], |b| UtilitySpec::modified_tk(0.5, al, 2.0, b, 0.05)));
    }
    rows
}

fn table3(inp: &TableInputs) -> Result<Vec<TableRow>> {
    let m = inp.accounts.multiplier()?;
    if (m - m.round()).abs() > 1e-9 || m < 2.0 {
        return Err(Error::InvalidPopulation(format!(
            "mixed-population rows need a whole account size of at least 2, got {m}"
        )));
    }
    let n = m.round() as u32;
    let mut rows = vec![fit_row(inp)];
    for al in [2.0, 4.0, 8.0] {
        let block = format!("modified_tk alpha_g=0.5 alpha_l={al}");
        for beta in [0.0, 0.3] {
            let opt = UtilitySpec::modified_tk(0.5, al, 2.0, beta, 0.05).and_then(|u| optimal_profile(&u, inp));
            for rho in [1.5, 1.0] {
                let label = format!("beta={beta} rho={rho}");
                let both = opt.as_ref().map_err(|e| e.to_string()).and_then(|(p, note)| {
                    let mix = || -> Result<_> {
                        let poisson = TradingRule::Poisson { rho }.profile(&inp.asset)?;
                        let inv = heterogeneous_investors(&[
                            InvestorType { pi: 0.5, n, profile: *p },
                            InvestorType { pi: 0.5, n, profile: poisson },
                        ])?;
                        let hold = heterogeneous_holdings(&[
                            HoldingGroup { n: n / 2, profile: *p },
                            HoldingGroup { n: n - n / 2, profile: poisson },
                        ])?;
                        Ok((inv, hold, note.clone()))
                    };
                    mix().map_err(|e| e.to_string())
                });
                match both {
                    Ok((inv, hold, note)) => {
                        rows.push(TableRow::from_odean(&block, &format!("{label} investors"), &inv, note.clone()));
                        rows.push(TableRow::from_odean(&block, &format!("{label} holdings"), &hold, note));
                    }
                    Err(e) => {
                        rows.push(TableRow::failed(&block, &format!("{label} investors"), e.clone()));
                        rows.push(TableRow::failed(&block, &format!("{label} holdings"), e));
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn table(id: TableId, inp: &TableInputs) -> Result<Vec<TableRow>> {
    match id {
        TableId::T1 => Ok(table1(inp)),
        TableId::T2 => Ok(table2(inp)),
        TableId::T3 => table3(inp),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{:.1}", 100.0 * v))
}

/// CSV with percentages to one decimal, days to whole numbers and `O` to
/// two decimals, as printed in the tables.
pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "block", "row", "theta_big_minus_1_pct", "theta_minus_1_pct", "q_gain_pct", "phi_gain_pct",
        "e_tau_days", "pgr_pct", "plr_pct", "o", "note",
    ])
    .map_err(std::io::Error::from)?;
    for r in rows {
        let loss = match (r.loss, r.q_gain) {
            (Some(l), _) => pct(Some(l)),
            (None, Some(_)) => "never".into(),
            (None, None) => String::new(),
        };
        let o = match r.o {
            Some(MaybeInfinite::Finite(v)) => format!("{v:.2}"),
            Some(MaybeInfinite::Infinite) => "inf".into(),
            None => String::new(),
        };
        w.write_record([
            r.block.clone(),
            r.row.clone(),
            pct(r.gain),
            loss,
            pct(r.q_gain),
            pct(r.phi_gain),
            r.mean_days.map_or(String::new(), |d| format!("{d:.0}")),
            pct(r.pgr),
            pct(r.plr),
            o,
            r.note.clone(),
        ])
        .map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}
