//! Optimal realization policies for an investor who derives burst utility
//! from realized gains and losses, plus the trading statistics they imply.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod numerics;
pub mod params;
pub mod policy;
pub mod sim;
pub mod stats;
pub mod tables;
pub mod utility;

pub use error::{Error, Result};
pub use params::*;
pub use policy::{
    critical_lambda, evaluate_policy, optimize_policy, reduced_value, smooth_pasting_residuals,
    value_coefficients, CriticalLambda, Policy, Regime, SmoothPasting, ValueCoefficients,
};
pub use utility::{burst, burst_marginal, burst_value, full_burst, BurstValue, Side};
pub use stats::{
    calibrate_poisson_rho, gains_only_stats, poisson_stats, steady_state_cdf, steady_state_pdf,
    threshold_stats, EpisodeStats, MaybeInfinite, PoissonStats, PoissonTarget,
};
pub use aggregate::{
    heterogeneous_holdings, heterogeneous_investors, representative_odean, AccountClass,
    AccountSizeMix, HoldingGroup, InvestorType, OdeanStats, Population, RuleGroup, RuleInvestor,
    StockProfile, TradingRule,
};
pub use sim::{
    simulate_accounts, simulate_poisson_episodes, simulate_poisson_run, simulate_threshold_episodes,
    simulate_threshold_run, write_ledger, EmpiricalStats, EpisodeRecord, Estimate, SimConfig, SimRun,
};
pub use config::Config;
pub use tables::{table, write_table_csv, TableId, TableInputs, TableRow};
