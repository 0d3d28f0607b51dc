//! Level-dependent jump rates `a(j)` (up) and `b(j)` (down) of a walk on `Z`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Up and down jump rates as functions of the current level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpRates {
    /// Constant rates at every level.
    Homogeneous { up: f64, down: f64 },
    /// Rates repeating with period `up.len()` (both lists share the period);
    /// level `j` uses index `j mod period`.
    Periodic { up: Vec<f64>, down: Vec<f64> },
}

impl JumpRates {
    pub fn unit() -> Self {
        JumpRates::Homogeneous { up: 1.0, down: 1.0 }
    }

    /// Alternating rates `a = b = e^c` on even levels and `e^{-c}` on odd
    /// levels. They satisfy `a(j) b(j+1) = 1` and `|Xi(j+1) - Xi(j)| =
    /// 4 sinh(c)`.
    pub fn reversible_alternating(c: f64) -> Self {
        let hi = c.exp();
        let lo = (-c).exp();
        JumpRates::Periodic { up: vec![hi, lo], down: vec![hi, lo] }
    }

    /// The reversible alternating family whose total-rate increment bound is
    /// `kappa`.
    pub fn reversible_with_increment(kappa: f64) -> Self {
        Self::reversible_alternating((kappa / 4.0).asinh())
    }

    /// Alternating rates with constant total rate `Xi = 2`: `a = b = 1` on
    /// even levels, `a = 2 / (1 + rho)` and `b = 2 - a` on odd levels. The
    /// products `a(j) b(j+1)` then alternate between `2 / (1 + rho)` and
    /// `2 rho / (1 + rho)`, so their ratio is `rho`.
    pub fn constant_speed_alternating(rho: f64) -> Self {
        let a_odd = 2.0 / (1.0 + rho);
        JumpRates::Periodic { up: vec![1.0, a_odd], down: vec![1.0, 2.0 - a_odd] }
    }

    /// Checks that rates are finite, positive and consistently shaped.
    pub fn validate(&self) -> Result<()> {
        let all: Vec<f64> = match self {
            JumpRates::Homogeneous { up, down } => vec![*up, *down],
            JumpRates::Periodic { up, down } => {
                if up.is_empty() || up.len() != down.len() {
                    return Err(invalid("periodic rates need equal nonempty up and down lists"));
                }
                up.iter().chain(down).copied().collect()
            }
        };
        match all.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            Some(r) => Err(invalid(format!("jump rates must be positive and finite, got {r}"))),
            None => Ok(()),
        }
    }

    /// `a(level)`.
    pub fn up(&self, level: i64) -> f64 {
        match self {
            JumpRates::Homogeneous { up, .. } => *up,
            JumpRates::Periodic { up, .. } => up[level.rem_euclid(up.len() as i64) as usize],
        }
    }

    /// `b(level)`.
    pub fn down(&self, level: i64) -> f64 {
        match self {
            JumpRates::Homogeneous { down, .. } => *down,
            JumpRates::Periodic { down, .. } => down[level.rem_euclid(down.len() as i64) as usize],
        }
    }

    /// Total jump rate `Xi(level) = a(level) + b(level)`.
    pub fn total(&self, level: i64) -> f64 {
        self.up(level) + self.down(level)
    }

    /// `a(level)` checked to be positive.
    pub(crate) fn checked_up(&self, level: i64) -> Result<f64> {
        positive(self.up(level), level)
    }

    pub(crate) fn checked_down(&self, level: i64) -> Result<f64> {
        positive(self.down(level), level)
    }

    /// Whether every level has rate 1 in both directions.
    pub fn is_unit(&self) -> bool {
        match self {
            JumpRates::Homogeneous { up, down } => *up == 1.0 && *down == 1.0,
            JumpRates::Periodic { up, down } => up.iter().chain(down).all(|r| *r == 1.0),
        }
    }

    /// Bounds `(nu, mu)` on the reciprocal products `a(j) b(j+1)` over all
    /// levels.
    pub fn product_range(&self) -> (f64, f64) {
        let period = match self {
            JumpRates::Homogeneous { .. } => 1,
            JumpRates::Periodic { up, .. } => up.len() as i64,
        };
        (0..period)
            .map(|j| self.up(j) * self.down(j + 1))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)))
    }

    /// Largest `|Xi(j+1) - Xi(j)|` over all levels.
    pub fn total_increment_bound(&self) -> f64 {
        let period = match self {
            JumpRates::Homogeneous { .. } => 1,
            JumpRates::Periodic { up, .. } => up.len() as i64,
        };
        (0..period).map(|j| (self.total(j + 1) - self.total(j)).abs()).fold(0.0, f64::max)
    }
}

fn positive(rate: f64, level: i64) -> Result<f64> {
    if rate.is_finite() && rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::NonPositiveRate { level, rate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_indexing_handles_negative_levels() {
        let r = JumpRates::Periodic { up: vec![1.0, 2.0, 3.0], down: vec![4.0, 5.0, 6.0] };
        assert_eq!(r.up(-1), 3.0);
        assert_eq!(r.down(-4), 6.0);
        assert_eq!(r.total(4), 7.0);
    }

    #[test]
    fn reversible_family_has_unit_products_and_target_increment() {
        let r = JumpRates::reversible_with_increment(0.5);
        let (nu, mu) = r.product_range();
        assert!((nu - 1.0).abs() < 1e-15 && (mu - 1.0).abs() < 1e-15);
        assert!((r.total_increment_bound() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_speed_family() {
        let r = JumpRates::constant_speed_alternating(2.0);
        for j in -3..3 {
            assert!((r.total(j) - 2.0).abs() < 1e-15);
        }
        let (nu, mu) = r.product_range();
        assert!((nu - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu - 4.0 / 3.0).abs() < 1e-15);
        assert!((mu / nu - 2.0).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(JumpRates::unit().validate().is_ok());
        assert!(JumpRates::Homogeneous { up: 0.0, down: 1.0 }.validate().is_err());
        assert!(JumpRates::Periodic { up: vec![1.0], down: vec![] }.validate().is_err());
        assert!(matches!(
            JumpRates::Homogeneous { up: -1.0, down: 1.0 }.checked_up(3),
            Err(Error::NonPositiveRate { level: 3, .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let r = JumpRates::constant_speed_alternating(2.0);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"kind\":\"periodic\""));
        assert_eq!(serde_json::from_str::<JumpRates>(&text).unwrap(), r);
    }
}
