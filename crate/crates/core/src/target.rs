//! Polynomial target information functions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::irt::{AbilityGrid, Curve};

/// LSAT target, ascending by degree.
const LSAT_ASCENDING: [f64; 7] = [13.328, 3.5254, -1.6408, -0.6154, 0.0093, 0.0303, 0.0046];

/// Polynomial target `J(theta) = sum_k coefficients[k] * theta^k`.
///
/// Coefficients are stored in ascending degree order. Positivity is checked
/// only when the target is tabulated, because it depends on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    coefficients: Vec<f64>,
}

impl TargetSpec {
    pub fn from_ascending(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Domain("a target needs at least one coefficient".into()));
        }
        if let Some(c) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("target coefficient {c} is not finite")));
        }
        Ok(Self { coefficients })
    }

    /// Highest degree first, as polynomials are usually written.
    pub fn from_descending(mut coefficients: Vec<f64>) -> Result<Self> {
        coefficients.reverse();
        Self::from_ascending(coefficients)
    }

    /// The LSAT information target,
    /// `0.0046 t^6 + 0.0303 t^5 + 0.0093 t^4 - 0.6154 t^3 - 1.6408 t^2 + 3.5254 t + 13.328`.
    pub fn lsat() -> Self {
        Self { coefficients: LSAT_ASCENDING.to_vec() }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn descending(&self) -> Vec<f64> {
        self.coefficients.iter().rev().copied().collect()
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|c| c * factor).collect() }
    }

    /// Horner evaluation.
    pub fn eval(&self, theta: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * theta + c)
    }

    /// Tabulates the target, rejecting any node where it is not positive.
    pub fn tabulate(&self, grid: &AbilityGrid) -> Result<Curve> {
        let mut values = Vec::with_capacity(grid.len());
        for theta in grid.nodes() {
            let value = self.eval(theta);
            if !(value > 0.0) {
                return Err(Error::TargetDomain { theta, value });
            }
            values.push(value);
        }
        Curve::new(*grid, values)
    }
}

/// Accepts `lsat` or a comma-separated coefficient list, highest degree first.
impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lsat") {
            return Ok(Self::lsat());
        }
        let coefficients = s
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad target coefficient {tok:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_descending(coefficients)
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::lsat() {
            return f.write_str("lsat");
        }
        let parts: Vec<String> = self.descending().iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lsat_values() {
        let j = TargetSpec::lsat();
        assert_eq!(j.eval(0.0), 13.328);
        // Sum of the seven coefficients.
        assert_relative_eq!(j.eval(1.0), 14.6414, epsilon = 1e-12);
        assert!(j.eval(-3.0).is_finite() && j.eval(3.0).is_finite());
    }

    #[test]
    fn lsat_coefficients_as_printed() {
        assert_eq!(TargetSpec::lsat().coefficients(), &[13.328, 3.5254, -1.6408, -0.6154, 0.0093, 0.0303, 0.0046]);
        let parsed: TargetSpec = "0.0046,0.0303,0.0093,-0.6154,-1.6408,3.5254,13.328".parse().unwrap();
        assert_eq!(parsed, TargetSpec::lsat());
        assert_eq!("LSAT".parse::<TargetSpec>().unwrap(), TargetSpec::lsat());
    }

    #[test]
    fn lsat_positive_on_default_grid() {
        let curve = TargetSpec::lsat().tabulate(&AbilityGrid::default()).unwrap();
        assert!(curve.values().iter().all(|&v| v > 0.0));
        assert_eq!(curve.values()[60], 13.328);
    }

    #[test]
    fn constant_target() {
        let five = TargetSpec::from_ascending(vec![5.0]).unwrap();
        assert_eq!(five.eval(-2.7), 5.0);
        let grid = AbilityGrid::standard(3).unwrap();
        let one = TargetSpec::from_ascending(vec![1.0]).unwrap().tabulate(&grid).unwrap();
        assert_eq!(one.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn nonpositive_target_rejected() {
        let neg = TargetSpec::from_ascending(vec![-1.0]).unwrap();
        assert!(matches!(neg.tabulate(&AbilityGrid::default()), Err(Error::TargetDomain { .. })));
        // theta^2 touches zero at the middle node.
        let sq = TargetSpec::from_ascending(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(sq.tabulate(&AbilityGrid::default()).is_err());
        assert!(TargetSpec::from_ascending(vec![]).is_err());
        assert!("1,x".parse::<TargetSpec>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for spec in [TargetSpec::lsat(), TargetSpec::lsat().scaled(0.25)] {
            assert_eq!(spec.to_string().parse::<TargetSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn tabulation_matches_pointwise_eval() {
        let grid = AbilityGrid::default();
        let spec = TargetSpec::lsat();
        let curve = spec.tabulate(&grid).unwrap();
        for (k, &v) in curve.values().iter().enumerate() {
            assert_eq!(v, spec.eval(grid.node(k)));
        }
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(theta in -3.0f64..3.0) {
            let spec = TargetSpec::lsat();
            let naive: f64 = spec
                .coefficients()
                .iter()
                .enumerate()
                .map(|(k, c)| c * theta.powi(k as i32))
                .sum();
            let horner = spec.eval(theta);
            prop_assert!((horner - naive).abs() <= 1e-10 * naive.abs());
        }
    }
}
