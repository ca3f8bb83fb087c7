//! Closed-form episode statistics for a two-threshold rule and for Poisson
//! random selling, and the steady-state distribution of `x = X / R`.
//!
//! With `a = ln theta`, `b = ln Theta` and `eta = 1 - 2 mu / sigma^2`, every
//! expression is written through `r(y) = expm1(eta y) / eta` and
//! `s(y) = (expm1(eta y) - eta y) / eta^2`. Both have smooth limits `y` and
//! `y^2 / 2` at `eta = 0`, so no separate branch is needed there.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::brent_root;
use crate::params::{AssetParams, TRADING_DAYS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub q_gain: f64,
    pub q_loss: f64,
    pub phi_gain: f64,
    pub phi_loss: f64,
    /// Expected episode length in years.
    pub mean_duration: f64,
}

impl EpisodeStats {
    pub fn mean_duration_days(&self) -> f64 {
        self.mean_duration * TRADING_DAYS_PER_YEAR
    }
}

/// A positive quantity that may be infinite. Serializes as a number or the
/// string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaybeInfinite {
    Finite(f64),
    Infinite,
}

impl MaybeInfinite {
    pub fn value(self) -> f64 {
        match self {
            MaybeInfinite::Finite(v) => v,
            MaybeInfinite::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, MaybeInfinite::Finite(_))
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            MaybeInfinite::Finite(v)
        } else {
            MaybeInfinite::Infinite
        }
    }
}

impl fmt::Display for MaybeInfinite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaybeInfinite::Finite(v) => write!(f, "{v}"),
            MaybeInfinite::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for MaybeInfinite {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MaybeInfinite::Finite(v) => s.serialize_f64(*v),
            MaybeInfinite::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for MaybeInfinite {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(MaybeInfinite::Finite(v)),
            Raw::Text(t) if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") => {
                Ok(MaybeInfinite::Infinite)
            }
            Raw::Text(t) => Err(de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonStats {
    pub rho: f64,
    /// Average realized gain multiple, infinite when `rho <= mu`.
    pub mean_gain_multiple: MaybeInfinite,
    pub mean_loss_fraction: f64,
    pub q_gain: f64,
    pub q_loss: f64,
    pub phi_gain: f64,
    pub phi_loss: f64,
    pub mean_duration: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl PoissonStats {
    pub fn mean_duration_days(&self) -> f64 {
        self.mean_duration * TRADING_DAYS_PER_YEAR
    }

    pub fn as_episode(&self) -> EpisodeStats {
        EpisodeStats {
            q_gain: self.q_gain,
            q_loss: self.q_loss,
            phi_gain: self.phi_gain,
            phi_loss: self.phi_loss,
            mean_duration: self.mean_duration,
        }
    }
}

/// `expm1(eta y) / eta`.
#[inline]
fn r(eta: f64, y: f64) -> f64 {
    if eta == 0.0 {
        y
    } else {
        (eta * y).exp_m1() / eta
    }
}

/// `(expm1(eta y) - eta y) / eta^2`, by series when `eta y` is small.
#[inline]
fn s(eta: f64, y: f64) -> f64 {
    let z = eta * y;
    if z.abs() < 0.1 {
        // y^2 (1/2 + z/6 + z^2/24 + ...)
        let mut term = 0.5;
        let mut sum = 0.0;
        for k in 3..16 {
            sum += term;
            term *= z / k as f64;
        }
        y * y * sum
    } else {
        (z.exp_m1() - z) / (eta * eta)
    }
}

/// Shared pieces of the threshold formulas.
struct Thresholds {
    eta: f64,
    a: f64,
    b: f64,
    /// `a s(b) - b s(a)`, negative for valid thresholds.
    d: f64,
}

impl Thresholds {
    fn new(theta: f64, theta_big: f64, asset: &AssetParams) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) || !(theta_big > 1.0 && theta_big.is_finite()) {
            return Err(Error::Degenerate(format!(
                "thresholds need 0 < theta < 1 < Theta, got theta = {theta}, Theta = {theta_big}"
            )));
        }
        let eta = asset.eta();
        let (a, b) = (theta.ln(), theta_big.ln());
        let d = a * s(eta, b) - b * s(eta, a);
        Ok(Self { eta, a, b, d })
    }
}

/// Probabilities, steady-state paper-gain fraction and mean duration of an
/// episode that ends when `x` first reaches `theta` or `Theta`.
pub fn threshold_stats(theta: f64, theta_big: f64, asset: &AssetParams) -> Result<EpisodeStats> {
    let t = Thresholds::new(theta, theta_big, asset)?;
    let q_gain = r(t.eta, -t.a) / r(t.eta, t.b - t.a);
    let phi_gain = r(t.eta, t.a) * s(t.eta, t.b) / t.d;
    let mean_duration = -2.0 * t.d / (asset.variance() * (r(t.eta, t.b) - r(t.eta, t.a)));
    Ok(EpisodeStats {
        q_gain,
        q_loss: 1.0 - q_gain,
        phi_gain,
        phi_loss: 1.0 - phi_gain,
        mean_duration,
    })
}

/// Statistics when losses are never realized (`theta -> 0`). Needs a
/// positive log drift, otherwise the expected duration is infinite.
pub fn gains_only_stats(theta_big: f64, asset: &AssetParams) -> Result<EpisodeStats> {
    if !(theta_big > 1.0 && theta_big.is_finite()) {
        return Err(Error::Degenerate(format!("Theta = {theta_big} must exceed 1")));
    }
    let drift = asset.log_drift();
    if !(drift > 0.0) {
        return Err(Error::Degenerate(format!(
            "gains-only episodes have infinite mean duration when mu - sigma^2/2 = {drift} <= 0"
        )));
    }
    let b = theta_big.ln();
    let phi_gain = 1.0 - r(asset.eta(), b) / b;
    Ok(EpisodeStats {
        q_gain: 1.0,
        q_loss: 0.0,
        phi_gain,
        phi_loss: 1.0 - phi_gain,
        mean_duration: b / drift,
    })
}

fn check_support(x: f64, theta: f64, theta_big: f64) -> Result<()> {
    let tol = 1e-12;
    if !(x >= theta * (1.0 - tol) && x <= theta_big * (1.0 + tol)) {
        return Err(Error::OutOfSupport {
            x,
            lower: theta,
            upper: theta_big,
        });
    }
    Ok(())
}

/// Steady-state density of `x` over `[theta, Theta]`.
pub fn steady_state_pdf(x: f64, theta: f64, theta_big: f64, asset: &AssetParams) -> Result<f64> {
    let t = Thresholds::new(theta, theta_big, asset)?;
    check_support(x, theta, theta_big)?;
    let lx = x.ln();
    let f = if x <= 1.0 {
        r(t.eta, t.b) * r(t.eta, t.a - lx)
    } else {
        r(t.eta, t.a) * r(t.eta, t.b - lx)
    };
    Ok((f / (x * t.d)).max(0.0))
}

/// Steady-state distribution function of `x`, with `F(1) = phi_loss`.
pub fn steady_state_cdf(x: f64, theta: f64, theta_big: f64, asset: &AssetParams) -> Result<f64> {
    let t = Thresholds::new(theta, theta_big, asset)?;
    check_support(x, theta, theta_big)?;
    let lx = x.ln().clamp(t.a, t.b);
    let f = if x <= 1.0 {
        -r(t.eta, t.b) * s(t.eta, t.a - lx) / t.d
    } else {
        1.0 - r(t.eta, t.a) * s(t.eta, t.b - lx) / t.d
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Statistics of an investor who sells at the arrivals of a Poisson process
/// with intensity `rho` per year, regardless of price.
pub fn poisson_stats(rho: f64, asset: &AssetParams) -> Result<PoissonStats> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Degenerate(format!("Poisson intensity must be positive, got {rho}")));
    }
    let var = asset.variance();
    let m = asset.log_drift();
    let root = (m * m + 2.0 * rho * var).sqrt();
    // sign-matched roots of var/2 psi^2 + m psi - rho = 0
    let (psi_plus, psi_minus) = if m >= 0.0 {
        let psi_minus = (-m - root) / var;
        (-2.0 * rho / (var * psi_minus), psi_minus)
    } else {
        let psi_plus = (-m + root) / var;
        (psi_plus, -2.0 * rho / (var * psi_plus))
    };
    // E[x^psi-1] type ratios written as rho / (psi (sigma^2 psi / 2 + mu)),
    // which stay finite through rho = mu for the loss side.
    let mean_loss_fraction = rho / (psi_plus * (0.5 * var * psi_plus + asset.mu));
    let gain_den = psi_minus * (0.5 * var * psi_minus + asset.mu);
    let mean_gain_multiple = if rho > asset.mu && gain_den > 0.0 {
        MaybeInfinite::Finite(rho / gain_den)
    } else {
        MaybeInfinite::Infinite
    };
    let q_gain = psi_minus / (psi_minus - psi_plus);
    Ok(PoissonStats {
        rho,
        mean_gain_multiple,
        mean_loss_fraction,
        q_gain,
        q_loss: 1.0 - q_gain,
        phi_gain: q_gain,
        phi_loss: 1.0 - q_gain,
        mean_duration: 1.0 / rho,
        psi_plus,
        psi_minus,
    })
}

/// A Poisson statistic to match when backing out the intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PoissonTarget {
    MeanGainMultiple(f64),
    MeanLossFraction(f64),
    QGain(f64),
    /// Years.
    MeanDuration(f64),
}

/// Intensity `rho` whose Poisson statistics hit `target`.
pub fn calibrate_poisson_rho(target: PoissonTarget, asset: &AssetParams) -> Result<f64> {
    if let PoissonTarget::MeanDuration(years) = target {
        if !(years > 0.0 && years.is_finite()) {
            return Err(Error::Degenerate(format!("mean duration must be positive, got {years}")));
        }
        return Ok(1.0 / years);
    }
    let stat = |ln_rho: f64| -> f64 {
        let p = match poisson_stats(ln_rho.exp(), asset) {
            Ok(p) => p,
            Err(_) => return f64::NAN,
        };
        match target {
            PoissonTarget::MeanGainMultiple(v) => p.mean_gain_multiple.value().min(1e300) - v,
            PoissonTarget::MeanLossFraction(v) => p.mean_loss_fraction - v,
            PoissonTarget::QGain(v) => p.q_gain - v,
            PoissonTarget::MeanDuration(_) => unreachable!(),
        }
    };
    let lo = match target {
        PoissonTarget::MeanGainMultiple(_) => (asset.mu.max(1e-12) * (1.0 + 1e-9)).ln(),
        _ => (1e-8f64).ln(),
    };
    let hi = (1e6f64).ln();
    brent_root(stat, lo, hi, 1e-14)
        .map(f64::exp)
        .ok_or_else(|| Error::NoRoot(format!("no Poisson intensity reproduces {target:?}")))
}
