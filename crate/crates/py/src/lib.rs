//! Python module `realization`. Parameter objects are classes; results come
//! back as plain dicts built from the core types' JSON form.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use realization_core as core;
use realization_core::{AccountSizeMix, Kappa, KappaPreset, TradingRule, UtilityFamily};

create_exception!(realization, RealizationError, PyException, "Carries the core error code as its message prefix.");

fn err(e: core::Error) -> PyErr {
    RealizationError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| RealizationError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, name = "AssetParams", module = "realization")]
pub struct Asset(core::AssetParams);

#[pymethods]
impl Asset {
    #[new]
    #[pyo3(signature = (mu = 0.09, sigma = 0.30))]
    fn new(mu: f64, sigma: f64) -> PyResult<Self> {
        core::AssetParams::new(mu, sigma).map(Asset).map_err(err)
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    fn __repr__(&self) -> String {
        format!("AssetParams(mu={}, sigma={})", self.0.mu, self.0.sigma)
    }
}

#[pyclass(frozen, name = "CostSpec", module = "realization")]
pub struct Costs(core::CostSpec);

#[pymethods]
impl Costs {
    /// `kappa` is a number or one of "round_trip", "sale_only", "ignore".
    #[new]
    #[pyo3(signature = (k_s = 0.01, k_p = 0.01, kappa = None))]
    fn new(k_s: f64, k_p: f64, kappa: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let kappa = match kappa {
            None => Kappa::default(),
            Some(k) => match k.extract::<f64>() {
                Ok(v) => Kappa::Value(v),
                Err(_) => match k.extract::<String>()?.as_str() {
                    "round_trip" => Kappa::Preset(KappaPreset::RoundTrip),
                    "sale_only" => Kappa::Preset(KappaPreset::SaleOnly),
                    "ignore" => Kappa::Preset(KappaPreset::Ignore),
                    other => return Err(RealizationError::new_err(format!("INVALID_COSTS: unknown kappa preset {other:?}"))),
                },
            },
        };
        core::CostSpec::new(k_s, k_p, kappa).map(Costs).map_err(err)
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn round_trip(&self) -> f64 {
        self.0.round_trip
    }

    fn __repr__(&self) -> String {
        format!("CostSpec(k_s={}, k_p={}, kappa={})", self.0.k_s, self.0.k_p, self.0.kappa)
    }
}

#[pyclass(frozen, name = "UtilitySpec", module = "realization")]
pub struct Utility(core::UtilitySpec);

#[pymethods]
impl Utility {
    /// `family` is "scaled_tk" or "modified_tk".
    #[new]
    #[pyo3(signature = (family, alpha_g, alpha_l, lambda_, delta, beta = 0.0))]
    fn new(family: &str, alpha_g: f64, alpha_l: f64, lambda_: f64, delta: f64, beta: f64) -> PyResult<Self> {
        let family = match family {
            "scaled_tk" => UtilityFamily::ScaledTk,
            "modified_tk" => UtilityFamily::ModifiedTk,
            other => return Err(RealizationError::new_err(format!("INVALID_UTILITY: unknown family {other:?}"))),
        };
        core::UtilitySpec::new(family, alpha_g, alpha_l, lambda_, beta, delta).map(Utility).map_err(err)
    }

    fn with_lambda(&self, lambda_: f64) -> Self {
        Utility(self.0.with_lambda(lambda_))
    }

    fn with_beta(&self, beta: f64) -> Self {
        Utility(self.0.with_beta(beta))
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    fn __repr__(&self) -> String {
        let u = &self.0;
        format!(
            "UtilitySpec({:?}, alpha_g={}, alpha_l={}, lambda_={}, delta={}, beta={})",
            u.family, u.alpha_g, u.alpha_l, u.lambda, u.delta, u.beta
        )
    }
}

#[pyclass(frozen, name = "Policy", module = "realization")]
pub struct Policy(core::Policy);

#[pymethods]
impl Policy {
    /// `None` for a gains-only policy.
    #[getter]
    fn theta(&self) -> Option<f64> {
        (self.0.regime == core::Regime::TwoPoint).then_some(self.0.theta)
    }

    #[getter]
    fn theta_big(&self) -> f64 {
        self.0.theta_big
    }

    /// "two_point" or "gains_only".
    #[getter]
    fn regime(&self) -> &'static str {
        match self.0.regime {
            core::Regime::TwoPoint => "two_point",
            core::Regime::GainsOnly => "gains_only",
        }
    }

    #[getter]
    fn v1(&self) -> f64 {
        self.0.v1
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings.iter().map(|w| w.message.clone()).collect()
    }

    /// Reduced value function at `x` inside the continuation region.
    fn value(&self, x: f64) -> PyResult<f64> {
        core::reduced_value(x, &self.0.coefficients).map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("Policy({}, theta={:?}, theta_big={})", self.regime(), self.theta(), self.0.theta_big)
    }
}

#[pyfunction]
fn burst(g: f64, u: PyRef<'_, Utility>) -> PyResult<f64> {
    core::burst(g, &u.0).map_err(err)
}

#[pyfunction]
fn check_transversality<'py>(
    py: Python<'py>,
    u: PyRef<'_, Utility>,
    asset: PyRef<'_, Asset>,
    costs: PyRef<'_, Costs>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core::check_transversality(&u.0, &asset.0, &costs.0))
}

#[pyfunction]
fn optimize_policy(u: PyRef<'_, Utility>, asset: PyRef<'_, Asset>, costs: PyRef<'_, Costs>) -> PyResult<Policy> {
    core::optimize_policy(&u.0, &asset.0, &costs.0).map(Policy).map_err(err)
}

/// `theta = None` evaluates the gains-only policy.
#[pyfunction]
fn evaluate_policy(
    theta: Option<f64>,
    theta_big: f64,
    u: PyRef<'_, Utility>,
    asset: PyRef<'_, Asset>,
    costs: PyRef<'_, Costs>,
) -> PyResult<Policy> {
    core::evaluate_policy(theta, theta_big, &u.0, &asset.0, &costs.0).map(Policy).map_err(err)
}

#[pyfunction]
fn critical_lambda<'py>(
    py: Python<'py>,
    u: PyRef<'_, Utility>,
    asset: PyRef<'_, Asset>,
    costs: PyRef<'_, Costs>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core::critical_lambda(&u.0, &asset.0, &costs.0).map_err(err)?)
}

/// Episode statistics; `theta = 0` sells at gains only.
#[pyfunction]
fn threshold_stats<'py>(py: Python<'py>, theta: f64, theta_big: f64, asset: PyRef<'_, Asset>) -> PyResult<Bound<'py, PyAny>> {
    let st = if theta == 0.0 {
        core::gains_only_stats(theta_big, &asset.0)
    } else {
        core::threshold_stats(theta, theta_big, &asset.0)
    };
    to_py(py, &st.map_err(err)?)
}

#[pyfunction]
fn poisson_stats<'py>(py: Python<'py>, rho: f64, asset: PyRef<'_, Asset>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core::poisson_stats(rho, &asset.0).map_err(err)?)
}

fn rule(theta: Option<f64>, theta_big: Option<f64>, rho: Option<f64>) -> PyResult<TradingRule> {
    match (theta_big, rho) {
        (Some(theta_big), None) => Ok(TradingRule::Threshold { theta: theta.unwrap_or(0.0), theta_big }),
        (None, Some(rho)) => Ok(TradingRule::Poisson { rho }),
        _ => Err(RealizationError::new_err("give either theta_big (with theta) or rho")),
    }
}

/// PGR, PLR and O for one rule held in accounts with multiplier
/// `m = n_bar + sigma_n^2 / n_bar`.
#[pyfunction]
#[pyo3(signature = (asset, theta = None, theta_big = None, rho = None, n_bar = 8.0, sigma_n = 0.0))]
fn odean_stats<'py>(
    py: Python<'py>,
    asset: PyRef<'_, Asset>,
    theta: Option<f64>,
    theta_big: Option<f64>,
    rho: Option<f64>,
    n_bar: f64,
    sigma_n: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let profile = rule(theta, theta_big, rho)?.profile(&asset.0).map_err(err)?;
    let o = core::representative_odean(&profile, &AccountSizeMix::Moments { n_bar, sigma_n }).map_err(err)?;
    to_py(py, &o)
}

/// Closed-form aggregates for a population given in the JSON config form.
#[pyfunction]
fn population_stats<'py>(py: Python<'py>, population_json: &str, asset: PyRef<'_, Asset>) -> PyResult<Bound<'py, PyAny>> {
    let pop: core::Population =
        serde_json::from_str(population_json).map_err(|e| err(core::Error::ConfigParse(e.to_string())))?;
    to_py(py, &pop.closed_form(&asset.0).map_err(err)?)
}

/// Monte Carlo episodes of a threshold (`theta_big`) or Poisson (`rho`) rule.
#[pyfunction]
#[pyo3(signature = (asset, theta = None, theta_big = None, rho = None, n_episodes = 100_000, seed = 1, dt = 1.0 / 2500.0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    asset: PyRef<'_, Asset>,
    theta: Option<f64>,
    theta_big: Option<f64>,
    rho: Option<f64>,
    n_episodes: usize,
    seed: u64,
    dt: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = core::SimConfig { seed, dt, n_episodes, ..Default::default() };
    let asset = asset.0;
    let rule = rule(theta, theta_big, rho)?;
    let stats = py
        .detach(|| match rule {
            TradingRule::Threshold { theta, theta_big } => core::simulate_threshold_episodes(theta, theta_big, &asset, &cfg),
            TradingRule::Poisson { rho } => core::simulate_poisson_episodes(rho, &asset, &cfg),
            TradingRule::Profile(_) => unreachable!("rule() builds threshold or Poisson rules only"),
        })
        .map_err(err)?;
    to_py(py, &stats)
}

/// CSV text of table `t1`, `t2` or `t3`.
#[pyfunction]
#[pyo3(signature = (id, asset = None, costs = None, n = 8))]
fn table(id: &str, asset: Option<PyRef<'_, Asset>>, costs: Option<PyRef<'_, Costs>>, n: u32) -> PyResult<String> {
    let id: core::TableId = id.parse().map_err(err)?;
    let inp = core::TableInputs {
        asset: asset.map_or_else(|| core::AssetParams::new(0.09, 0.30).map_err(err), |a| Ok(a.0))?,
        costs: costs.map_or_else(|| core::CostSpec::symmetric(0.01).map_err(err), |c| Ok(c.0))?,
        accounts: AccountSizeMix::fixed(n),
    };
    let rows = core::table(id, &inp).map_err(err)?;
    let mut buf = Vec::new();
    core::write_table_csv(&rows, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(|e| RealizationError::new_err(e.to_string()))
}

#[pymodule]
mod realization {
    #[pymodule_export]
    use super::{
        burst, check_transversality, critical_lambda, evaluate_policy, odean_stats, optimize_policy, poisson_stats,
        population_stats, simulate, table, threshold_stats, Asset, Costs, Policy, RealizationError, Utility,
    };
}
