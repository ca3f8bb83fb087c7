//! Parameter containers shared by every other module: the asset process,
//! transaction costs, the burst-utility specification, the characteristic
//! roots of the valuation ODE, and transversality screening.
//!
//! All rates are decimals per year.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading days per year used when converting holding periods for display.
pub const TRADING_DAYS_PER_YEAR: f64 = 250.0;

/// Geometric Brownian motion `dX/X = mu dt + sigma dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetParams {
    pub mu: f64,
    pub sigma: f64,
}

impl AssetParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidDrift(mu));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { mu, sigma })
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Drift of `ln X`, `mu - sigma^2 / 2`.
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.variance()
    }

    /// `1 - 2 mu / sigma^2`, the exponent that governs two-barrier exit
    /// probabilities.
    pub fn eta(&self) -> f64 {
        1.0 - 2.0 * self.mu / self.variance()
    }

    /// The same asset with `mu` and `sigma^2` multiplied by `factor`, which is
    /// a change of time unit.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.mu * factor, self.sigma * factor.sqrt())
    }
}

/// How the investor nets transaction costs out of a realized gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaPreset {
    /// Both costs recognized, `kappa = K`.
    RoundTrip,
    /// Only the sale cost recognized, `kappa = 1 - k_s`.
    SaleOnly,
    /// Costs ignored, `kappa = 1`.
    Ignore,
}

/// Either an explicit subjective gain factor or one of the presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Kappa {
    Value(f64),
    Preset(KappaPreset),
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa::Preset(KappaPreset::RoundTrip)
    }
}

/// Proportional transaction costs together with the derived round-trip
/// factor `K = (1 - k_s) / (1 + k_p)` and the subjective gain factor `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSpec {
    pub k_s: f64,
    pub k_p: f64,
    pub kappa: f64,
    pub round_trip: f64,
}

impl CostSpec {
    pub fn new(k_s: f64, k_p: f64, kappa: Kappa) -> Result<Self> {
        let round_trip = round_trip_factor(k_s, k_p)?;
        let kappa = match kappa {
            Kappa::Value(v) => v,
            Kappa::Preset(KappaPreset::RoundTrip) => round_trip,
            Kappa::Preset(KappaPreset::SaleOnly) => 1.0 - k_s,
            Kappa::Preset(KappaPreset::Ignore) => 1.0,
        };
        // Presets are exact; explicit values get a little slack for printed K.
        let slack = 1e-12;
        if !(kappa.is_finite() && kappa >= round_trip - slack && kappa <= 1.0 + slack) {
            return Err(Error::InvalidCosts(format!(
                "kappa = {kappa} must lie in [K, 1] = [{round_trip}, 1]"
            )));
        }
        Ok(Self {
            k_s,
            k_p,
            kappa,
            round_trip,
        })
    }

    /// Symmetric costs with `kappa = K`.
    pub fn symmetric(k: f64) -> Result<Self> {
        Self::new(k, k, Kappa::default())
    }

    pub fn is_costless(&self) -> bool {
        self.k_s + self.k_p <= 0.0
    }

    /// Smallest upper threshold that still books a subjective gain.
    pub fn min_gain_multiple(&self) -> f64 {
        1.0 / self.kappa
    }
}

/// `(1 - k_s) / (1 + k_p)`.
pub fn round_trip_factor(k_s: f64, k_p: f64) -> Result<f64> {
    if !(k_s.is_finite() && (0.0..1.0).contains(&k_s)) {
        return Err(Error::InvalidCosts(format!("k_s = {k_s} must lie in [0, 1)")));
    }
    if !(k_p.is_finite() && k_p >= 0.0) {
        return Err(Error::InvalidCosts(format!("k_p = {k_p} must be >= 0")));
    }
    Ok((1.0 - k_s) / (1.0 + k_p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityFamily {
    /// Power utility in the gain ratio, `g^a_G` / `-lambda (-g)^a_L`.
    ScaledTk,
    /// Power utility in the gross return `1 + g`, bounded marginal utility at 0.
    ModifiedTk,
}

/// Burst utility `U(G, R) = R^beta u(G / R)` plus the discount rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilitySpec {
    pub family: UtilityFamily,
    pub alpha_g: f64,
    pub alpha_l: f64,
    pub lambda: f64,
    pub beta: f64,
    pub delta: f64,
}

impl UtilitySpec {
    /// Validates the family-specific curvature ranges.
    ///
    /// The sign of `delta` is not checked here; it is a transversality
    /// condition and is reported by [`check_transversality`].
    pub fn new(
        family: UtilityFamily,
        alpha_g: f64,
        alpha_l: f64,
        lambda: f64,
        beta: f64,
        delta: f64,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidUtility(msg));
        for (name, v) in [
            ("alpha_g", alpha_g),
            ("alpha_l", alpha_l),
            ("lambda", lambda),
            ("beta", beta),
            ("delta", delta),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if lambda < 0.0 {
            return bad(format!("lambda = {lambda} must be >= 0"));
        }
        if beta < 0.0 {
            return bad(format!("beta = {beta} must be >= 0"));
        }
        match family {
            UtilityFamily::ScaledTk => {
                if !(alpha_g > 0.0 && alpha_g <= 1.0) {
                    return bad(format!("scaled-TK alpha_g = {alpha_g} must lie in (0, 1]"));
                }
                if !(alpha_l > 0.0 && alpha_l <= 1.0) {
                    return bad(format!("scaled-TK alpha_l = {alpha_l} must lie in (0, 1]"));
                }
            }
            UtilityFamily::ModifiedTk => {
                if alpha_l <= 0.0 {
                    return bad(format!("modified-TK alpha_l = {alpha_l} must be > 0"));
                }
            }
        }
        Ok(Self {
            family,
            alpha_g,
            alpha_l,
            lambda,
            beta,
            delta,
        })
    }

    pub fn scaled_tk(alpha_g: f64, alpha_l: f64, lambda: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::new(UtilityFamily::ScaledTk, alpha_g, alpha_l, lambda, beta, delta)
    }

    pub fn modified_tk(alpha_g: f64, alpha_l: f64, lambda: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::new(UtilityFamily::ModifiedTk, alpha_g, alpha_l, lambda, beta, delta)
    }

    /// Same specification with a different loss aversion.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// Roots of `sigma^2/2 g (g - 1) + mu g - delta = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRoots {
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Characteristic exponents of `v(x) = C1 x^gamma1 + C2 x^gamma2`.
///
/// The larger-magnitude root comes from the sign-matched quadratic formula
/// and the other from the product of the roots, so neither suffers
/// cancellation.
pub fn gamma_roots(asset: &AssetParams, delta: f64) -> Result<GammaRoots> {
    if !(asset.sigma.is_finite() && asset.sigma > 0.0) {
        return Err(Error::InvalidSigma(asset.sigma));
    }
    if !(delta > 0.0) {
        return Err(Error::NonpositiveDelta(delta));
    }
    let a = 0.5 * asset.variance();
    let b = asset.log_drift();
    let c = -delta;
    let disc = (b * b - 4.0 * a * c).sqrt();
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc);
    let (r1, r2) = (q / a, c / q);
    let (gamma1, gamma2) = if r1 > r2 { (r1, r2) } else { (r2, r1) };
    Ok(GammaRoots { gamma1, gamma2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    NonpositiveDelta,
    BetaExceedsGamma1,
    AlphaGExceedsGamma1,
    ZeroCostsScaledTk,
    /// `beta == gamma1`: admissible, but losses are then never realized.
    BetaAtGamma1,
    /// `beta > min(alpha_g, alpha_l)` for scaled-TK: admissible, but |U| then
    /// grows with the reference level for a fixed dollar gain.
    BetaExceedsMinAlpha,
    /// Two-point and gains-only policies tie; reported as two-point.
    RegimeBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub ok: bool,
    pub violations: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
    pub gamma: Option<GammaRoots>,
}

impl TransversalityReport {
    pub fn has(&self, code: DiagnosticCode) -> bool {
        self.violations.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for TransversalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|d| format!("{}: {}", serde_code(d.code), d.message))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub(crate) fn serde_code(code: DiagnosticCode) -> String {
    serde_json::to_value(code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Conditions under which expected utility stays bounded: `delta > 0`,
/// `beta <= gamma1`, `alpha_g <= gamma1`, and nonzero costs for scaled-TK.
///
/// The `alpha_g` bound is applied to both families since the gains-only value
/// grows like `Theta^(alpha_g - gamma1)` for either one.
pub fn check_transversality(
    u: &UtilitySpec,
    asset: &AssetParams,
    costs: &CostSpec,
) -> TransversalityReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let diag = |code, message: String| Diagnostic { code, message };

    let gamma = if u.delta > 0.0 {
        gamma_roots(asset, u.delta).ok()
    } else {
        violations.push(diag(
            DiagnosticCode::NonpositiveDelta,
            format!("delta = {} must be > 0", u.delta),
        ));
        None
    };

    if let Some(g) = gamma {
        if u.beta > g.gamma1 {
            violations.push(diag(
                DiagnosticCode::BetaExceedsGamma1,
                format!("beta = {} exceeds gamma1 = {:.6}", u.beta, g.gamma1),
            ));
        } else if u.beta == g.gamma1 {
            warnings.push(diag(
                DiagnosticCode::BetaAtGamma1,
                format!("beta equals gamma1 = {:.6}; losses are never realized", g.gamma1),
            ));
        }
        if u.alpha_g > g.gamma1 {
            violations.push(diag(
                DiagnosticCode::AlphaGExceedsGamma1,
                format!(
                    "alpha_g = {} exceeds gamma1 = {:.6}; raise delta or lower mu",
                    u.alpha_g, g.gamma1
                ),
            ));
        }
    }

    if u.family == UtilityFamily::ScaledTk {
        if costs.is_costless() {
            violations.push(diag(
                DiagnosticCode::ZeroCostsScaledTk,
                "scaled-TK utility is unbounded without transaction costs".into(),
            ));
        }
        let min_alpha = u.alpha_g.min(u.alpha_l);
        if u.beta > min_alpha {
            warnings.push(diag(
                DiagnosticCode::BetaExceedsMinAlpha,
                format!("beta = {} exceeds min(alpha_g, alpha_l) = {min_alpha}", u.beta),
            ));
        }
    }

    TransversalityReport {
        ok: violations.is_empty(),
        violations,
        warnings,
        gamma,
    }
}
