//! Burst utility `u(g)` of a realized gain ratio `g = G / R` and the
//! homogeneous two-argument form `U(G, R) = R^beta u(G / R)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{UtilityFamily, UtilitySpec};

/// Curvatures this close to zero use the logarithmic limit.
const LOG_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurstValue {
    pub value: f64,
    pub derivative: Option<f64>,
}

/// Which one-sided limit to take at the kink `g = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// `((1 + g)^a - 1) / a`, or `ln(1 + g)` as `a -> 0`.
fn box_cox(gross: f64, a: f64) -> f64 {
    if a.abs() < LOG_LIMIT {
        gross.ln()
    } else {
        (a * gross.ln()).exp_m1() / a
    }
}

/// Disutility of the loss `g < 0` per unit of loss aversion (a positive
/// number).
pub(crate) fn unit_loss(g: f64, u: &UtilitySpec) -> f64 {
    match u.family {
        UtilityFamily::ScaledTk => (-g).powf(u.alpha_l),
        UtilityFamily::ModifiedTk => -box_cox(1.0 + g, u.alpha_l),
    }
}

fn check_domain(g: f64, u: &UtilitySpec) -> Result<()> {
    if g.is_nan() {
        return Err(Error::Domain(g));
    }
    if u.family == UtilityFamily::ModifiedTk && g < -1.0 {
        return Err(Error::Domain(g));
    }
    Ok(())
}

/// Reduced burst utility `u(g)`. The gain branch owns `g = 0`.
pub fn burst(g: f64, u: &UtilitySpec) -> Result<f64> {
    check_domain(g, u)?;
    Ok(burst_unchecked(g, u))
}

#[inline]
pub(crate) fn burst_unchecked(g: f64, u: &UtilitySpec) -> f64 {
    if g >= 0.0 {
        match u.family {
            UtilityFamily::ScaledTk => g.powf(u.alpha_g),
            UtilityFamily::ModifiedTk => box_cox(1.0 + g, u.alpha_g),
        }
    } else {
        -u.lambda * unit_loss(g, u)
    }
}

/// Derivative of [`burst`]. At `g = 0` a side is required; away from zero
/// the side is ignored.
pub fn burst_marginal(g: f64, u: &UtilitySpec, side: Option<Side>) -> Result<f64> {
    check_domain(g, u)?;
    let side = if g > 0.0 {
        Side::Above
    } else if g < 0.0 {
        Side::Below
    } else {
        side.ok_or(Error::Kink)?
    };
    Ok(marginal_on_side(g, u, side))
}

#[inline]
pub(crate) fn marginal_on_side(g: f64, u: &UtilitySpec, side: Side) -> f64 {
    match (u.family, side) {
        (UtilityFamily::ScaledTk, Side::Above) => u.alpha_g * g.powf(u.alpha_g - 1.0),
        (UtilityFamily::ScaledTk, Side::Below) => u.lambda * u.alpha_l * (-g).powf(u.alpha_l - 1.0),
        (UtilityFamily::ModifiedTk, Side::Above) => (1.0 + g).powf(u.alpha_g - 1.0),
        (UtilityFamily::ModifiedTk, Side::Below) => u.lambda * (1.0 + g).powf(u.alpha_l - 1.0),
    }
}

pub fn burst_value(g: f64, u: &UtilitySpec, with_derivative: bool) -> Result<BurstValue> {
    let value = burst(g, u)?;
    let derivative = if with_derivative && g != 0.0 {
        Some(burst_marginal(g, u, None)?)
    } else {
        None
    };
    Ok(BurstValue { value, derivative })
}

/// `U(G, R) = R^beta u(G / R)` for a dollar gain `G` against reference `R`.
pub fn full_burst(gain: f64, reference: f64, u: &UtilitySpec) -> Result<f64> {
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(Error::InvalidReference(reference));
    }
    Ok(reference.powf(u.beta) * burst(gain / reference, u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stk(a: f64, lambda: f64, beta: f64) -> UtilitySpec {
        UtilitySpec::scaled_tk(a, a, lambda, beta, 0.05).unwrap()
    }

    fn mtk(ag: f64, al: f64, lambda: f64) -> UtilitySpec {
        UtilitySpec::modified_tk(ag, al, lambda, 0.3, 0.05).unwrap()
    }

    #[test]
    fn scaled_unit_points() {
        for a in [0.3, 0.5, 0.88, 1.0] {
            let u = stk(a, 2.25, 0.0);
            assert_eq!(burst(0.0, &u).unwrap(), 0.0);
            assert_eq!(burst(1.0, &u).unwrap(), 1.0);
            assert_eq!(burst(-1.0, &u).unwrap(), -2.25);
        }
    }

    #[test]
    fn modified_examples() {
        assert_relative_eq!(burst(0.21, &mtk(0.5, 2.0, 2.0)).unwrap(), 0.2, epsilon = 1e-14);
        assert_relative_eq!(burst(-0.5, &mtk(0.5, 2.0, 2.0)).unwrap(), -0.75, epsilon = 1e-14);
        assert!(matches!(burst(-1.5, &mtk(0.5, 2.0, 2.0)), Err(Error::Domain(_))));
        // scaled-TK accepts losses beyond -1
        assert!(burst(-1.5, &stk(0.5, 2.0, 0.0)).is_ok());
    }

    #[test]
    fn modified_log_limit() {
        let u = mtk(0.0, 2.0, 2.0);
        assert_relative_eq!(burst(0.5, &u).unwrap(), 1.5f64.ln(), epsilon = 1e-15);
        let near = mtk(1e-9, 2.0, 2.0);
        assert_relative_eq!(burst(0.5, &near).unwrap(), 1.5f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn marginal_kink() {
        let u = mtk(0.5, 8.0, 2.5);
        assert_eq!(burst_marginal(0.0, &u, Some(Side::Above)).unwrap(), 1.0);
        assert_eq!(burst_marginal(0.0, &u, Some(Side::Below)).unwrap(), 2.5);
        assert!(matches!(burst_marginal(0.0, &u, None), Err(Error::Kink)));
        assert_relative_eq!(burst_marginal(0.25, &stk(0.5, 2.0, 0.0), None).unwrap(), 1.0);
    }

    #[test]
    fn full_burst_cases() {
        let u = stk(0.5, 2.0, 0.3);
        assert_eq!(full_burst(0.0, 7.0, &u).unwrap(), 0.0);
        assert!(matches!(full_burst(1.0, 0.0, &u), Err(Error::InvalidReference(_))));
        let u0 = stk(0.5, 2.0, 0.0);
        assert_relative_eq!(full_burst(3.0, 4.0, &u0).unwrap(), burst(0.75, &u0).unwrap());
    }

    #[test]
    fn modified_shape_signs() {
        // alpha_l > 1 convex over losses, alpha_g < 1 concave over gains
        let u = mtk(0.5, 4.0, 2.0);
        let h = 1e-3;
        for i in 1..99 {
            let g = -1.0 + 0.01 * i as f64;
            let d2 = burst(g + h, &u).unwrap() - 2.0 * burst(g, &u).unwrap() + burst(g - h, &u).unwrap();
            if g + h < 0.0 {
                assert!(d2 > 0.0, "g = {g}");
            }
        }
        for i in 1..300 {
            let g = 0.01 * i as f64;
            let d2 = burst(g + h, &u).unwrap() - 2.0 * burst(g, &u).unwrap() + burst(g - h, &u).unwrap();
            assert!(d2 < 0.0, "g = {g}");
        }
    }

    #[test]
    fn monotone_on_dense_grid() {
        for u in [stk(0.5, 2.0, 0.3), stk(1.0, 1.0, 0.0), mtk(0.5, 30.0, 2.0), mtk(-1.0, 0.5, 1.0)] {
            // alpha_l = 30 is flat to machine precision near total loss
            let lo = if u.family == UtilityFamily::ModifiedTk { -0.5 } else { -3.0 };
            let grid: Vec<f64> = (0..=4000).map(|i| lo + (4.0 - lo) * i as f64 / 4000.0).collect();
            for w in grid.windows(2) {
                assert!(burst(w[1], &u).unwrap() > burst(w[0], &u).unwrap(), "{:?} at {}", u.family, w[0]);
            }
        }
    }

    fn central_difference(g: f64, u: &UtilitySpec) -> f64 {
        let h = 1e-6 * g.abs().max(1e-3);
        (burst(g + h, u).unwrap() - burst(g - h, u).unwrap()) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn homogeneity(g in -0.99f64..3.0, r in 0.1f64..50.0, c in 0.1f64..10.0, beta in 0.0f64..1.0) {
            for u in [stk(0.5, 2.0, beta), UtilitySpec::modified_tk(0.5, 4.0, 2.0, beta, 0.05).unwrap()] {
                let base = full_burst(g * r, r, &u).unwrap();
                let scaled = full_burst(c * g * r, c * r, &u).unwrap();
                let expect = c.powf(beta) * base;
                prop_assert!((scaled - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
            }
        }

        #[test]
        fn marginal_matches_finite_difference(g in prop_oneof![-0.95f64..-0.02, 0.02f64..3.0]) {
            for u in [stk(0.5, 2.0, 0.3), stk(0.88, 2.25, 0.3), mtk(0.5, 8.0, 2.0), mtk(-0.5, 2.0, 1.5)] {
                let exact = burst_marginal(g, &u, None).unwrap();
                let fd = central_difference(g, &u);
                prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs() + 1e-9, "{:?} g={} {} vs {}", u.family, g, exact, fd);
            }
        }

        #[test]
        fn sign_follows_gain(g in -0.99f64..5.0) {
            for u in [stk(0.5, 2.0, 0.3), mtk(0.5, 8.0, 2.0)] {
                let v = burst(g, &u).unwrap();
                prop_assert_eq!(v.signum(), if g == 0.0 { v.signum() } else { g.signum() });
            }
        }
    }
}
