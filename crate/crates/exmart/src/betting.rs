//! Betting functions for both martingale families.
//!
//! A multiplicative-valid bet is non-negative and integrates to one over
//! [0,1]; an additive-valid bet integrates to zero. The families here:
//!
//! * power: `f(p) = ε·p^(ε−1)` (multiplicative)
//! * mixture power: a weighted grid of power martingales (multiplicative)
//! * shifted odd: `f(p) = g(p − 1/2)` for an odd `g` (additive)
//! * plug-in: `f(p) = ρ̂(p) − 1` with `ρ̂` the fitted Beta density of the
//!   p-values (additive)

use std::fmt;
use std::sync::Arc;

use crate::beta_stats::{beta_pdf, BetaParams};
use crate::error::{Error, Result};

/// Replaces an exact p = 0 before `p^(ε−1)` when ε < 1. θ-smoothed
/// p-values are zero only on a null set but floating-point ties can
/// produce an exact 0; any positive p is evaluated as-is so the bet
/// integrates to one over (0,1].
pub const POWER_P_FLOOR: f64 = 1e-12;

/// Power bet `ε·p^(ε−1)`, non-negative for ε ∈ (0,1].
pub fn power_bet(p: f64, epsilon: f64) -> f64 {
    let p = if epsilon < 1.0 && p == 0.0 {
        POWER_P_FLOOR
    } else {
        p
    };
    epsilon * p.powf(epsilon - 1.0)
}

/// An odd function on [−1/2, 1/2], shared and immutable.
#[derive(Clone)]
pub struct OddFunction {
    name: &'static str,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl OddFunction {
    /// The default `g(x) = −x`.
    pub fn neg_identity() -> Self {
        OddFunction {
            name: "neg_identity",
            f: Arc::new(|x| -x),
        }
    }

    /// Wraps a caller-supplied odd function. Oddness is the caller's
    /// responsibility; the integral-zero property is checked in tests by
    /// quadrature, not at runtime.
    pub fn custom(name: &'static str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        OddFunction {
            name,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn is_neg_identity(&self) -> bool {
        self.name == "neg_identity"
    }
}

impl fmt::Debug for OddFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OddFunction")
            .field("name", &self.name)
            .finish()
    }
}

impl Default for OddFunction {
    fn default() -> Self {
        Self::neg_identity()
    }
}

/// Shifted-odd bet `g(p − 1/2)`; integrates to zero for any odd `g`.
pub fn shifted_odd_bet(p: f64, g: &OddFunction) -> f64 {
    g.eval(p - 0.5)
}

/// Plug-in bet `ρ̂(p) − 1` for the fitted p-value density `ρ̂`.
pub fn plugin_bet(p: f64, params: BetaParams) -> f64 {
    beta_pdf(p, params) - 1.0
}

/// Quadrature grid over ε for the mixture power martingale: nodes in
/// (0,1] with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureGrid {
    epsilons: Vec<f64>,
    weights: Vec<f64>,
}

/// Node count of the default mixture grid.
pub const DEFAULT_MIXTURE_POINTS: usize = 20;

impl MixtureGrid {
    pub fn new(epsilons: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() || epsilons.len() != weights.len() {
            return Err(Error::InvalidConfig(
                "mixture grid needs matching, non-empty nodes and weights".into(),
            ));
        }
        if epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidConfig(
                "mixture grid epsilons must lie in (0,1]".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidConfig(
                "mixture grid weights must be positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(MixtureGrid { epsilons, weights })
    }

    /// Default grid: 20 equally spaced ε values in (0,1] with trapezoid
    /// weights, normalized to sum to one.
    pub fn default_trapezoid() -> Self {
        let n = DEFAULT_MIXTURE_POINTS;
        let epsilons: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
        let mut weights = vec![1.0; n];
        weights[0] = 0.5;
        weights[n - 1] = 0.5;
        MixtureGrid::new(epsilons, weights).expect("default grid is valid")
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }
}

/// Weighted-grid approximation of `∫ S_n^(ε) dε` from per-ε log products,
/// in log scale. Uses log-sum-exp so large products do not overflow.
pub fn mixture_power_log_value(grid: &MixtureGrid, log_products: &[f64]) -> f64 {
    assert_eq!(
        grid.len(),
        log_products.len(),
        "grid/product length mismatch"
    );
    let terms: Vec<f64> = grid
        .weights()
        .iter()
        .zip(log_products)
        .map(|(w, lp)| w.ln() + lp)
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Weighted-grid approximation of `∫ S_n^(ε) dε` from per-ε log products.
pub fn mixture_power_martingale_value(grid: &MixtureGrid, log_products: &[f64]) -> f64 {
    mixture_power_log_value(grid, log_products).exp()
}

/// A betting-function family plus its parameters. The plug-in family reads
/// its Beta parameters from the live density estimate at bet time, so it
/// carries no state here.
#[derive(Debug, Clone)]
pub enum BettingSpec {
    Power { epsilon: f64 },
    MixturePower { grid: MixtureGrid },
    ShiftedOdd { g: OddFunction },
    PluginBeta,
}

impl BettingSpec {
    /// Additive bets integrate to zero; multiplicative bets to one.
    pub fn is_additive(&self) -> bool {
        matches!(
            self,
            BettingSpec::ShiftedOdd { .. } | BettingSpec::PluginBeta
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BettingSpec::Power { epsilon } => {
                if !(*epsilon > 0.0 && *epsilon <= 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "power epsilon must lie in (0,1], got {epsilon}"
                    )));
                }
            }
            BettingSpec::MixturePower { .. } | BettingSpec::ShiftedOdd { .. } => {}
            BettingSpec::PluginBeta => {}
        }
        Ok(())
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            BettingSpec::Power { .. } => "power",
            BettingSpec::MixturePower { .. } => "mixture",
            BettingSpec::ShiftedOdd { .. } => "odd",
            BettingSpec::PluginBeta => "plugin",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_bet_constant_at_epsilon_one() {
        for &p in &[0.0, 0.1, 0.5, 1.0] {
            assert_eq!(power_bet(p, 1.0), 1.0);
        }
    }

    #[test]
    fn power_bet_direct_values() {
        assert!((power_bet(0.25, 0.5) - 1.0).abs() < 1e-15);
        assert!((power_bet(1.0, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn power_bet_zero_p_is_clamped_finite() {
        let bet = power_bet(0.0, 0.5);
        assert!(bet.is_finite());
        assert_eq!(bet, 0.5 * POWER_P_FLOOR.powf(-0.5));
    }

    #[test]
    fn shifted_odd_default_values() {
        let g = OddFunction::neg_identity();
        assert_eq!(shifted_odd_bet(0.5, &g), 0.0);
        assert_eq!(shifted_odd_bet(0.0, &g), 0.5);
        assert_eq!(shifted_odd_bet(1.0, &g), -0.5);
    }

    #[test]
    fn plugin_bet_uniform_is_zero() {
        for &p in &[0.0, 0.3, 0.5, 1.0] {
            assert!(plugin_bet(p, BetaParams::uniform()).abs() < 1e-12);
        }
    }

    #[test]
    fn plugin_bet_values() {
        let p22 = BetaParams::new(2.0, 2.0).unwrap();
        assert!((plugin_bet(0.5, p22) - 0.5).abs() < 1e-12);
        let p25 = BetaParams::new(2.0, 5.0).unwrap();
        assert!(plugin_bet(0.9, p25) < 0.0);
    }

    #[test]
    fn log_power_bet_integral_is_negative_below_epsilon_one() {
        // ∫ log(ε·p^(ε−1)) dp ≤ 0 for ε < 1: the log of the multiplicative
        // martingale drifts downward. Quadrature substitutes p = e^t to tame
        // the log singularity at 0; closed form is log ε + 1 − ε.
        let quad_log_bet = |epsilon: f64| {
            let f = |t: f64| (power_bet(t.exp(), epsilon)).ln() * t.exp();
            let (a, b, n) = (-40.0, 0.0, 40_000usize);
            let h = (b - a) / n as f64;
            let mut total = f(a) + f(b);
            for k in 1..n {
                total += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            total * h / 3.0
        };
        for k in 1..20 {
            let epsilon = k as f64 / 20.0;
            let integral = quad_log_bet(epsilon);
            assert!(integral < 0.0, "ε={epsilon}: ∫log f = {integral}");
            let closed_form = epsilon.ln() + 1.0 - epsilon;
            assert!(
                (integral - closed_form).abs() < 1e-4,
                "ε={epsilon}: {integral} vs {closed_form}"
            );
        }
        assert!(quad_log_bet(1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_value_with_no_steps_is_one() {
        let grid = MixtureGrid::default_trapezoid();
        let logs = vec![0.0; grid.len()];
        assert!((mixture_power_martingale_value(&grid, &logs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_single_point_at_one() {
        let grid = MixtureGrid::new(vec![1.0], vec![1.0]).unwrap();
        for &log_product in &[0.0, 0.0, 0.0] {
            assert!((mixture_power_martingale_value(&grid, &[log_product]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_two_point_hand_quadrature() {
        let grid = MixtureGrid::new(vec![0.5, 1.0], vec![0.5, 0.5]).unwrap();
        // one p-value of 0.25: S^(0.5) = 0.5·0.25^(−0.5) = 1, S^(1) = 1
        let logs = vec![power_bet(0.25, 0.5).ln(), power_bet(0.25, 1.0).ln()];
        assert!((mixture_power_martingale_value(&grid, &logs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_log_value_survives_huge_products() {
        let grid = MixtureGrid::new(vec![0.5, 1.0], vec![0.5, 0.5]).unwrap();
        let logs = vec![2000.0, 0.0];
        let log_value = mixture_power_log_value(&grid, &logs);
        assert!(log_value.is_finite());
        assert!((log_value - (2000.0 + 0.5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn default_grid_shape() {
        let grid = MixtureGrid::default_trapezoid();
        assert_eq!(grid.len(), DEFAULT_MIXTURE_POINTS);
        assert_eq!(*grid.epsilons().last().unwrap(), 1.0);
        assert!((grid.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(grid.epsilons().first().unwrap() > &0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(MixtureGrid::new(vec![], vec![]).is_err());
        assert!(MixtureGrid::new(vec![0.0], vec![1.0]).is_err());
        assert!(MixtureGrid::new(vec![1.1], vec![1.0]).is_err());
        assert!(MixtureGrid::new(vec![0.5], vec![0.0]).is_err());
        assert!(MixtureGrid::new(vec![0.5], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn betting_spec_validation() {
        assert!(BettingSpec::Power { epsilon: 0.0 }.validate().is_err());
        assert!(BettingSpec::Power { epsilon: 1.5 }.validate().is_err());
        assert!(BettingSpec::Power { epsilon: 0.92 }.validate().is_ok());
        assert!(BettingSpec::PluginBeta.validate().is_ok());
    }

    #[test]
    fn additive_families() {
        assert!(BettingSpec::ShiftedOdd {
            g: OddFunction::neg_identity()
        }
        .is_additive());
        assert!(BettingSpec::PluginBeta.is_additive());
        assert!(!BettingSpec::Power { epsilon: 0.5 }.is_additive());
        assert!(!BettingSpec::MixturePower {
            grid: MixtureGrid::default_trapezoid()
        }
        .is_additive());
    }
}
