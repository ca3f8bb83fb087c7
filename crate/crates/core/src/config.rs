//! JSON run configuration. Unknown keys are rejected with their location,
//! and `dotted.path=value` overrides are applied before validation.
//!
//! Reports written by the command line echo the resolved configuration
//! with an extra `report` section, so they load back as configurations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aggregate::{AccountSizeMix, Population, TradingRule};
use crate::error::{Error, Result};
use crate::params::{AssetParams, CostSpec, Kappa, UtilityFamily, UtilitySpec};
use crate::sim::SimConfig;
use crate::stats::{calibrate_poisson_rho, PoissonTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSection {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for AssetSection {
    fn default() -> Self {
        AssetSection { mu: 0.09, sigma: 0.30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    pub k_s: f64,
    pub k_p: f64,
    #[serde(default)]
    pub kappa: Kappa,
}

impl Default for CostsSection {
    fn default() -> Self {
        CostsSection { k_s: 0.01, k_p: 0.01, kappa: Kappa::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    pub family: UtilityFamily,
    pub alpha_g: f64,
    pub alpha_l: f64,
    pub lambda: f64,
    #[serde(default)]
    pub beta: f64,
    pub delta: f64,
}

/// Explicit thresholds; `theta = 0` sells at gains only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub theta: f64,
    pub theta_big: f64,
}

/// Either an intensity or a statistic to calibrate it to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<PoissonTarget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub asset: AssetSection,
    #[serde(default)]
    pub costs: CostsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<PoissonSection>,
    #[serde(default = "default_accounts")]
    pub accounts: AccountSizeMix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<Population>,
    #[serde(default)]
    pub sim: SimConfig,
    /// Results attached by the command line; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
}

fn default_accounts() -> AccountSizeMix {
    AccountSizeMix::fixed(8)
}

impl Default for Config {
    fn default() -> Self {
        Config {
            asset: AssetSection::default(),
            costs: CostsSection::default(),
            utility: None,
            policy: None,
            poisson: None,
            accounts: default_accounts(),
            population: None,
            sim: SimConfig::default(),
            report: None,
        }
    }
}

fn missing(section: &str) -> Error {
    Error::ConfigParse(format!("missing section `{section}`"))
}

impl Config {
    /// Parse `text` (empty means all defaults), then apply `overrides`.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?
        };
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        serde_path_to_error::deserialize(root).map_err(|e| {
            let path = e.path().to_string();
            Error::ConfigParse(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, overrides).map_err(|e| match e {
            Error::ConfigParse(m) => Error::ConfigParse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn asset(&self) -> Result<AssetParams> {
        AssetParams::new(self.asset.mu, self.asset.sigma)
    }

    pub fn costs(&self) -> Result<CostSpec> {
        CostSpec::new(self.costs.k_s, self.costs.k_p, self.costs.kappa)
    }

    pub fn utility(&self) -> Result<UtilitySpec> {
        let u = self.utility.as_ref().ok_or_else(|| missing("utility"))?;
        UtilitySpec::new(u.family, u.alpha_g, u.alpha_l, u.lambda, u.beta, u.delta)
    }

    pub fn thresholds(&self) -> Result<(f64, f64)> {
        let p = self.policy.as_ref().ok_or_else(|| missing("policy"))?;
        Ok((p.theta, p.theta_big))
    }

    /// The Poisson intensity, calibrating it first if a target is given.
    pub fn rho(&self) -> Result<f64> {
        let p = self.poisson.as_ref().ok_or_else(|| missing("poisson"))?;
        match (p.rho, p.target) {
            (Some(rho), None) => Ok(rho),
            (None, Some(t)) => calibrate_poisson_rho(t, &self.asset()?),
            _ => Err(Error::ConfigParse("`poisson` needs exactly one of `rho` and `target`".into())),
        }
    }

    /// The rule implied by whichever of `policy` and `poisson` is present.
    pub fn rule(&self) -> Result<TradingRule> {
        match (&self.policy, &self.poisson) {
            (Some(p), None) => Ok(TradingRule::Threshold { theta: p.theta, theta_big: p.theta_big }),
            (None, Some(_)) => Ok(TradingRule::Poisson { rho: self.rho()? }),
            (None, None) => Err(missing("policy` or `poisson")),
            (Some(_), Some(_)) => Err(Error::ConfigParse("give only one of `policy` and `poisson`".into())),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Apply `a.b.c=value`. The value is read as JSON when it parses, else as
/// a string. Missing intermediate objects are created.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{spec}` is not of the form key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::ConfigParse(format!("override `{spec}` has an empty key")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => {
                return Err(Error::ConfigParse(format!(
                    "override `{spec}`: `{}` is not an object",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("keys is never empty")
}
