//! Free-boundary problem for the realization policy.
//!
//! Inside the continuation region `theta < x < Theta` the reduced value is
//! `v(x) = C1 x^gamma1 + C2 x^gamma2`. At each sale point the investor
//! collects the burst utility and restarts with reference `K X`, so
//! `v(phi) = u(kappa phi - 1) + (K phi)^beta v(1)` for `phi` in `{theta, Theta}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{brent_max, grid_roots, local_max, log_space};
use crate::params::{
    check_transversality, AssetParams, CostSpec, Diagnostic, DiagnosticCode, GammaRoots,
    UtilityFamily, UtilitySpec,
};
use crate::utility::{burst_unchecked, marginal_on_side, unit_loss, Side};

/// Smallest offset of `Theta` above `1 / kappa` and of `theta` from 0 or 1.
const EDGE: f64 = 1e-6;
/// Value gap under which the two regimes count as tied.
const TIE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub gamma: GammaRoots,
    /// Lower edge of the continuation region, 0 for gains-only.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    TwoPoint,
    GainsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Policy {
    pub theta: f64,
    pub theta_big: f64,
    pub regime: Regime,
    pub v1: f64,
    pub coefficients: ValueCoefficients,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalLambda {
    pub lambda_star: f64,
    pub theta_star: f64,
    pub theta_big_star: f64,
}

/// Smooth-pasting mismatches `x v'(x) - [kappa x u'(kappa x - 1) + beta (K x)^beta v(1)]`.
/// `lower` is `None` for gains-only policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothPasting {
    pub upper: f64,
    pub lower: Option<f64>,
}

/// Everything needed to evaluate `v(1)` for candidate thresholds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Problem {
    pub u: UtilitySpec,
    pub gamma: GammaRoots,
    pub k: f64,
    pub kappa: f64,
}

impl Problem {
    pub fn new(u: &UtilitySpec, asset: &AssetParams, costs: &CostSpec) -> Result<Self> {
        let report = check_transversality(u, asset, costs);
        if !report.ok {
            return Err(Error::Transversality(report));
        }
        Ok(Self {
            u: *u,
            gamma: report.gamma.expect("gamma exists when delta > 0"),
            k: costs.round_trip,
            kappa: costs.kappa,
        })
    }

    #[inline]
    fn c(&self, gamma: f64, phi: f64) -> f64 {
        phi.powf(gamma) - (self.k * phi).powf(self.u.beta)
    }

    #[inline]
    fn payoff(&self, phi: f64) -> f64 {
        burst_unchecked(self.kappa * phi - 1.0, &self.u)
    }

    /// `C1` of the gains-only policy, which is also its `v(1)`.
    #[inline]
    pub fn corner_c1(&self, big: f64) -> f64 {
        self.payoff(big) / self.c(self.gamma.gamma1, big)
    }

    pub fn interior(&self, theta: f64, big: f64) -> Option<(f64, f64)> {
        let (g1, g2) = (self.gamma.gamma1, self.gamma.gamma2);
        let (c1_hi, c2_hi) = (self.c(g1, big), self.c(g2, big));
        let (c1_lo, c2_lo) = (self.c(g1, theta), self.c(g2, theta));
        let den = c1_hi * c2_lo - c1_lo * c2_hi;
        let scale = (c1_hi * c2_lo).abs().max((c1_lo * c2_hi).abs());
        if !(den.abs() > 1e-13 * scale) || !den.is_finite() {
            return None;
        }
        let (u_hi, u_lo) = (self.payoff(big), self.payoff(theta));
        let c1 = (c2_lo * u_hi - c2_hi * u_lo) / den;
        let c2 = (c1_hi * u_lo - c1_lo * u_hi) / den;
        Some((c1, c2))
    }

    #[inline]
    fn v1_interior(&self, theta: f64, big: f64) -> f64 {
        match self.interior(theta, big) {
            Some((c1, c2)) if (c1 + c2).is_finite() => c1 + c2,
            _ => f64::NEG_INFINITY,
        }
    }

    fn coefficients(&self, theta: Option<f64>, big: f64) -> Result<ValueCoefficients> {
        let (c1, c2, lower) = match theta {
            None => (self.corner_c1(big), 0.0, 0.0),
            Some(t) => {
                let (c1, c2) = self.interior(t, big).ok_or(Error::Singular {
                    theta: t,
                    theta_big: big,
                })?;
                (c1, c2, t)
            }
        };
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(Error::Singular {
                theta: lower,
                theta_big: big,
            });
        }
        Ok(ValueCoefficients {
            c1,
            c2,
            gamma: self.gamma,
            lower,
            upper: big,
        })
    }

    /// Upper search limit: double `Theta - 1/kappa` until the gains-only
    /// value has fallen twice in a row.
    fn theta_big_max(&self) -> f64 {
        let base = 1.0 / self.kappa;
        let mut span = 0.01;
        let mut prev = self.corner_c1(base + span);
        let mut falls = 0;
        while span < 1e6 {
            span *= 2.0;
            let v = self.corner_c1(base + span);
            if v < prev {
                falls += 1;
                if falls == 2 {
                    break;
                }
            } else {
                falls = 0;
            }
            prev = v;
        }
        base + span
    }

    /// Best gains-only threshold, searched over `ln(Theta - 1/kappa)`.
    fn best_corner(&self, big_max: f64) -> (f64, f64) {
        let base = 1.0 / self.kappa;
        let f = |s: f64| self.corner_c1(base + s.exp());
        let (lo, hi) = (EDGE.ln(), (big_max - base).ln());
        let n = 400;
        let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
        let best = (0..n)
            .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap_or(0);
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(n - 1)];
        let (s, v) = brent_max(f, a, b, 1e-13);
        if v >= vals[best] {
            (base + s.exp(), v)
        } else {
            (base + grid[best].exp(), vals[best])
        }
    }

    /// Local ascent on `(ln theta, ln(Theta - 1/kappa))` from one start:
    /// damped Newton steps with finite-difference derivatives, falling back
    /// to coordinate line searches where the Hessian is not negative
    /// definite, and finished with exact coordinate passes.
    fn ascend(&self, t0: f64, s0: f64, t_hi: f64, s_hi: f64) -> (f64, f64, f64) {
        let base = 1.0 / self.kappa;
        let (t_lo, s_lo) = (EDGE.ln(), EDGE.ln());
        let v = |t: f64, s: f64| {
            if t < t_lo || t > t_hi || s < s_lo || s > s_hi {
                f64::NEG_INFINITY
            } else {
                self.v1_interior(t.exp(), base + s.exp())
            }
        };
        let sweep = |t: f64, s: f64| {
            let (nt, _) = local_max(|x| v(x, s), t, t_lo, t_hi, 0.02, 1e-12);
            let (ns, nv) = local_max(|y| v(nt, y), s, s_lo, s_hi, 0.02, 1e-12);
            (nt, ns, nv)
        };
        let (mut t, mut s) = (t0, s0);
        let mut val = v(t, s);
        if !val.is_finite() {
            return (t.exp(), base + s.exp(), val);
        }
        let mut stalls = 0;
        for _ in 0..300 {
            if t <= t_lo + 1e-9 {
                break;
            }
            let (nt, ns, nv) = match newton_step(&v, t, s, val) {
                Some(step) => step,
                None => sweep(t, s),
            };
            let moved = (nt - t).abs().max((ns - s).abs());
            if nv > val {
                t = nt;
                s = ns;
                val = nv;
            }
            if nv - val <= 1e-15 * val.abs().max(1.0) && moved < 1e-9 {
                stalls += 1;
                if stalls == 2 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        for _ in 0..3 {
            let (nt, ns, nv) = sweep(t, s);
            if nv > val {
                t = nt;
                s = ns;
                val = nv;
            }
        }
        (t.exp(), base + s.exp(), val)
    }

    /// Newton iterations on the smooth-pasting conditions from a maximizer
    /// located by value, which pins the thresholds only to about the square
    /// root of machine precision. Kept only if the residuals shrink and the
    /// value does not drop.
    fn polish(&self, theta: Option<f64>, big: f64) -> (Option<f64>, f64) {
        let res = |t: Option<f64>, b: f64| -> Option<[f64; 2]> {
            let c = self.coefficients(t, b).ok()?;
            let hi = pasting_residual(self, &c, b, Side::Above);
            let lo = t.map_or(0.0, |t| pasting_residual(self, &c, t, Side::Below));
            (hi.is_finite() && lo.is_finite()).then_some([hi, lo])
        };
        let value = |t: Option<f64>, b: f64| self.coefficients(t, b).map_or(f64::NEG_INFINITY, |c| c.c1 + c.c2);
        let norm = |r: [f64; 2]| r[0].hypot(r[1]);
        let Some(r0) = res(theta, big) else { return (theta, big) };
        let (mut t, mut b, mut r) = (theta, big, r0);
        for _ in 0..30 {
            let hb = 1e-7 * b;
            let Some(rb) = res(t, b + hb) else { break };
            let (dt, db) = match t {
                None => (0.0, -r[0] / ((rb[0] - r[0]) / hb)),
                Some(tv) => {
                    let ht = 1e-7 * tv;
                    let Some(rt) = res(Some(tv + ht), b) else { break };
                    let (j00, j01) = ((rb[0] - r[0]) / hb, (rt[0] - r[0]) / ht);
                    let (j10, j11) = ((rb[1] - r[1]) / hb, (rt[1] - r[1]) / ht);
                    let det = j00 * j11 - j01 * j10;
                    (-(j00 * r[1] - j10 * r[0]) / det, -(j11 * r[0] - j01 * r[1]) / det)
                }
            };
            if !(dt.is_finite() && db.is_finite()) {
                break;
            }
            let nt = t.map(|tv| tv + dt);
            let nb = b + db;
            if nt.is_some_and(|tv| !(tv > 0.0 && tv < 1.0)) || !(nb > 1.0) {
                break;
            }
            let Some(nr) = res(nt, nb) else { break };
            if norm(nr) >= norm(r) {
                break;
            }
            (t, b, r) = (nt, nb, nr);
            if db.abs() < 1e-15 * b && dt.abs() < 1e-15 {
                break;
            }
        }
        let v0 = value(theta, big);
        if norm(r) < norm(r0) && value(t, b) >= v0 - 1e-12 * v0.abs() {
            (t, b)
        } else {
            (theta, big)
        }
    }

    fn policy(&self, theta: Option<f64>, big: f64, warnings: Vec<Diagnostic>) -> Result<Policy> {
        let coefficients = self.coefficients(theta, big)?;
        Ok(Policy {
            theta: theta.unwrap_or(0.0),
            theta_big: big,
            regime: if theta.is_some() { Regime::TwoPoint } else { Regime::GainsOnly },
            v1: coefficients.c1 + coefficients.c2,
            coefficients,
            warnings,
        })
    }
}

/// One damped Newton step for maximizing `f(t, s)`. `None` when the
/// Hessian is not negative definite or no improving step is found.
fn newton_step<F: Fn(f64, f64) -> f64>(f: &F, t: f64, s: f64, f0: f64) -> Option<(f64, f64, f64)> {
    let hg = 1e-6;
    let gt = (f(t + hg, s) - f(t - hg, s)) / (2.0 * hg);
    let gs = (f(t, s + hg) - f(t, s - hg)) / (2.0 * hg);
    let h = 1e-4;
    let htt = (f(t + h, s) - 2.0 * f0 + f(t - h, s)) / (h * h);
    let hss = (f(t, s + h) - 2.0 * f0 + f(t, s - h)) / (h * h);
    let hts = (f(t + h, s + h) - f(t + h, s - h) - f(t - h, s + h) + f(t - h, s - h)) / (4.0 * h * h);
    let det = htt * hss - hts * hts;
    if !(htt < 0.0 && det > 0.0 && gt.is_finite() && gs.is_finite()) {
        return None;
    }
    let dt = -(hss * gt - hts * gs) / det;
    let ds = -(htt * gs - hts * gt) / det;
    let mut step = 1.0;
    for _ in 0..40 {
        let (nt, ns) = (t + step * dt, s + step * ds);
        let nv = f(nt, ns);
        if nv >= f0 {
            return Some((nt, ns, nv));
        }
        step *= 0.5;
    }
    None
}

/// Coefficients of the reduced value for the policy `(theta, Theta)`; pass
/// `None` for `theta` to get the gains-only solution with `C2 = 0`.
pub fn value_coefficients(
    theta: Option<f64>,
    theta_big: f64,
    u: &UtilitySpec,
    asset: &AssetParams,
    costs: &CostSpec,
) -> Result<ValueCoefficients> {
    if !(theta_big > 1.0 && theta_big.is_finite()) {
        return Err(Error::OutOfRegion {
            x: theta_big,
            lower: 1.0,
            upper: f64::INFINITY,
        });
    }
    if let Some(t) = theta {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::OutOfRegion {
                x: t,
                lower: 0.0,
                upper: 1.0,
            });
        }
    }
    Problem::new(u, asset, costs)?.coefficients(theta, theta_big)
}

/// `C1 x^gamma1 + C2 x^gamma2` on the continuation region.
pub fn reduced_value(x: f64, coeffs: &ValueCoefficients) -> Result<f64> {
    let tol = 1e-12 * coeffs.upper;
    if !(x >= coeffs.lower - tol && x <= coeffs.upper + tol) {
        return Err(Error::OutOfRegion {
            x,
            lower: coeffs.lower,
            upper: coeffs.upper,
        });
    }
    if x == 0.0 {
        // gains-only: C2 = 0 and x^gamma1 -> 0
        return Ok(0.0);
    }
    let mut v = coeffs.c1 * x.powf(coeffs.gamma.gamma1);
    if coeffs.c2 != 0.0 {
        v += coeffs.c2 * x.powf(coeffs.gamma.gamma2);
    }
    Ok(v)
}

/// Policy for user-supplied thresholds, without optimizing.
pub fn evaluate_policy(
    theta: Option<f64>,
    theta_big: f64,
    u: &UtilitySpec,
    asset: &AssetParams,
    costs: &CostSpec,
) -> Result<Policy> {
    let coefficients = value_coefficients(theta, theta_big, u, asset, costs)?;
    Ok(Policy {
        theta: theta.unwrap_or(0.0),
        theta_big,
        regime: if theta.is_some() { Regime::TwoPoint } else { Regime::GainsOnly },
        v1: coefficients.c1 + coefficients.c2,
        coefficients,
        warnings: Vec::new(),
    })
}

/// Global maximizer of `v(1)` over the gains-only and two-point regimes.
pub fn optimize_policy(u: &UtilitySpec, asset: &AssetParams, costs: &CostSpec) -> Result<Policy> {
    let prob = Problem::new(u, asset, costs)?;
    let mut warnings = check_transversality(u, asset, costs).warnings;
    let base = 1.0 / prob.kappa;
    let big_max = prob.theta_big_max();
    let (corner_big, corner_v) = prob.best_corner(big_max);

    // interior search gets a wider window than the corner
    let s_hi = (8.0 * (big_max - base)).ln();
    let t_hi = (1.0 - EDGE).ln();
    let starts: Vec<(f64, f64)> = log_space(0.01, 0.95, 8)
        .into_iter()
        .flat_map(|t| {
            log_space(1e-3, big_max - base, 8)
                .into_iter()
                .map(move |s| (t.ln(), s.ln()))
        })
        .collect();
    let candidates: Vec<(f64, f64, f64)> = starts
        .par_iter()
        .map(|&(t, s)| prob.ascend(t, s, t_hi, s_hi))
        .collect();
    let interior = candidates
        .into_iter()
        .filter(|&(t, _, v)| t > 1.5 * EDGE && v.is_finite())
        .max_by(|a, b| a.2.total_cmp(&b.2));

    let best = interior.map_or(corner_v, |c| c.2.max(corner_v));
    if !(best > 0.0) {
        return Err(Error::NoParticipation(best));
    }
    match interior {
        Some((t, big, v)) if v > corner_v - TIE => {
            if (v - corner_v).abs() <= TIE {
                warnings.push(Diagnostic {
                    code: DiagnosticCode::RegimeBoundary,
                    message: format!(
                        "two-point and gains-only values agree within {TIE:e}; at the critical loss aversion"
                    ),
                });
            }
            let (t, big) = prob.polish(Some(t), big);
            prob.policy(t, big, warnings)
        }
        _ => {
            let (_, big) = prob.polish(None, corner_big);
            prob.policy(None, big, warnings)
        }
    }
}

fn pasting_residual(prob: &Problem, coeffs: &ValueCoefficients, x: f64, side: Side) -> f64 {
    let (g1, g2) = (prob.gamma.gamma1, prob.gamma.gamma2);
    let xv = g1 * coeffs.c1 * x.powf(g1) + g2 * coeffs.c2 * x.powf(g2);
    let v1 = coeffs.c1 + coeffs.c2;
    let g = prob.kappa * x - 1.0;
    let du = marginal_on_side(g, &prob.u, side);
    xv - (prob.kappa * x * du + prob.u.beta * (prob.k * x).powf(prob.u.beta) * v1)
}

/// First-order optimality check at the sale points of `p`. The coefficients
/// are rebuilt from the thresholds, so a hand-edited policy is checked
/// against its own value function.
pub fn smooth_pasting_residuals(
    p: &Policy,
    u: &UtilitySpec,
    asset: &AssetParams,
    costs: &CostSpec,
) -> Result<SmoothPasting> {
    let prob = Problem::new(u, asset, costs)?;
    let theta = (p.regime == Regime::TwoPoint).then_some(p.theta);
    let coeffs = prob.coefficients(theta, p.theta_big)?;
    Ok(SmoothPasting {
        upper: pasting_residual(&prob, &coeffs, p.theta_big, Side::Above),
        lower: theta.map(|t| pasting_residual(&prob, &coeffs, t, Side::Below)),
    })
}

/// Loss aversion at which realizing a loss at `theta` is exactly as good as
/// holding on under the gains-only policy with value `c1`.
pub(crate) fn indifference_lambda(prob: &Problem, c1: f64, theta: f64) -> f64 {
    let b = prob.u.beta;
    c1 * ((prob.k * theta).powf(b) - theta.powf(prob.gamma.gamma1))
        / unit_loss(prob.kappa * theta - 1.0, &prob.u)
}

/// Stationarity conditions for the critical thresholds. The same function
/// serves `Theta*` (with `alpha_g`) and `theta*` (with `alpha_l`).
fn critical_equation(prob: &Problem, alpha: f64, x: f64) -> f64 {
    let (g1, b, k, kap) = (prob.gamma.gamma1, prob.u.beta, prob.k, prob.kappa);
    let kb = k.powf(b);
    match prob.u.family {
        UtilityFamily::ScaledTk => {
            (alpha - g1) * kap * x.powf(g1 + 1.0 - b) + g1 * x.powf(g1 - b)
                - (alpha - b) * kb * kap * x
                - b * kb
        }
        UtilityFamily::ModifiedTk => {
            (alpha - g1) * kap.powf(alpha) * x.powf(g1 + alpha - b) + g1 * x.powf(g1 - b)
                - (alpha - b) * kb * (kap * x).powf(alpha)
                - b * kb
        }
    }
}

fn critical_formula(prob: &Problem, theta: f64, big: f64) -> f64 {
    let u = &prob.u;
    let (g1, b, kap) = (prob.gamma.gamma1, u.beta, prob.kappa);
    let (ag, al) = (u.alpha_g, u.alpha_l);
    match u.family {
        UtilityFamily::ScaledTk => {
            (kap * big - 1.0).powf(ag - 1.0) * theta.powf(b)
                / ((1.0 - kap * theta).powf(al - 1.0) * big.powf(b))
                * ((ag - g1) * kap * big + g1)
                / ((al - g1) * kap * theta + g1)
        }
        UtilityFamily::ModifiedTk => {
            (al / ag) * (theta / big).powf(b)
                * ((ag - g1) * (kap * big).powf(ag) + g1)
                / ((al - g1) * (kap * theta).powf(al) + g1)
        }
    }
}

/// Critical loss aversion: below it the investor realizes losses at
/// `theta*`, above it losses are never realized. The loss aversion in `u`
/// is ignored.
pub fn critical_lambda(u: &UtilitySpec, asset: &AssetParams, costs: &CostSpec) -> Result<CriticalLambda> {
    let prob = Problem::new(&u.with_lambda(1.0), asset, costs)?;
    let base = 1.0 / prob.kappa;
    let big_max = prob.theta_big_max();
    let (corner_big, _) = prob.best_corner(big_max);

    if prob.u.beta >= prob.gamma.gamma1 {
        return Ok(CriticalLambda {
            lambda_star: 0.0,
            theta_star: 0.0,
            theta_big_star: corner_big,
        });
    }

    // With alpha_g = 0 the modified-TK upper equation vanishes identically,
    // so fall back to maximizing over the thresholds directly.
    let degenerate = prob.u.family == UtilityFamily::ModifiedTk && prob.u.alpha_g.abs() < 1e-9;

    let big = if degenerate {
        corner_big
    } else {
        let grid: Vec<f64> = log_space(1e-10, 10.0 * (big_max - base), 3000)
            .into_iter()
            .map(|s| base + s)
            .collect();
        grid_roots(|x| critical_equation(&prob, prob.u.alpha_g, x), &grid, 1e-15)
            .into_iter()
            .max_by(|a, b| prob.corner_c1(*a).total_cmp(&prob.corner_c1(*b)))
            .ok_or_else(|| Error::NoRoot("no upper critical threshold above 1/kappa".into()))?
    };
    let c1 = prob.corner_c1(big);
    let lam = |t: f64| indifference_lambda(&prob, c1, t);

    let mut grid = log_space(1e-12, 0.5, 1500);
    grid.extend(log_space(0.5, 1e-12, 1500).into_iter().skip(1).map(|d| 1.0 - d));
    grid.retain(|&t| t < base);

    let (theta, lambda_star) = if degenerate {
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| lam(*a).total_cmp(&lam(*b)))
            .unwrap();
        let (lt, ln) = (best.ln() - 0.05, (best.ln() + 0.05).min(-1e-12));
        let (t, v) = brent_max(|s| lam(s.exp()), lt, ln, 1e-14);
        (t.exp(), v)
    } else {
        let root = grid_roots(|x| critical_equation(&prob, prob.u.alpha_l, x), &grid, 1e-15)
            .into_iter()
            .max_by(|a, b| lam(*a).total_cmp(&lam(*b)))
            .map(|t| (t, critical_formula(&prob, t, big)));
        // With beta = 0 the supremum can sit at theta -> 0 (sell only on a
        // total loss), where the indifference lambda is C1 / L(-1).
        let edge = (prob.u.beta == 0.0).then(|| (0.0, c1 / unit_loss(-1.0, &prob.u)));
        match (root, edge) {
            (Some(r), Some(e)) => if e.1 > r.1 { e } else { r },
            (Some(r), None) => r,
            (None, Some(e)) => e,
            (None, None) => {
                return Err(Error::NoRoot("no lower critical threshold in (0, 1)".into()))
            }
        }
    };

    Ok(CriticalLambda {
        lambda_star: lambda_star.max(0.0),
        theta_star: theta,
        theta_big_star: big,
    })
}
