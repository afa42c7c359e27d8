//! Distances, areas and the three ways a test curve can fit a target.
//!
//! All integrals use the composite trapezoid rule on the shared ability grid.
//! [`TargetFit`] holds the precomputed target data used in the sampling,
//! enumeration and annealing loops. The free functions below are thin
//! curve-level wrappers around the same slice kernels, so every caller
//! classifies a test identically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::irt::{ensure_same_grid, Curve};

#[inline]
fn trapezoid(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

#[inline]
fn weighted_sq_distance(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(weights)
        .map(|((a, b), w)| {
            let d = a - b;
            w * d * d
        })
        .sum()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// L2 distance `sqrt(int (f - g)^2)`.
pub fn l2_distance(f: &Curve, g: &Curve) -> Result<f64> {
    ensure_same_grid(f, g)?;
    let w = f.grid().trapezoid_weights();
    Ok(weighted_sq_distance(f.values(), g.values(), &w).sqrt())
}

/// Area under `f` over the grid range.
pub fn area_under(f: &Curve) -> f64 {
    trapezoid(f.values(), &f.grid().trapezoid_weights())
}

/// Scale factor `s_target / s_test` for relative target meeting.
pub fn lambda_of(s_target: f64, s_test: f64) -> Result<f64> {
    if !(s_test > 0.0) {
        return Err(Error::Domain(format!("test information area must be positive, got {s_test}")));
    }
    Ok(s_target / s_test)
}

/// Integrated shortfall of the test curve below the target: trapezoid of
/// `max(J - I, 0)`. Zero iff `I >= J` at every node.
pub fn deficiency_energy(test: &Curve, target: &Curve) -> Result<f64> {
    ensure_same_grid(test, target)?;
    let w = test.grid().trapezoid_weights();
    Ok(energy_kernel(test.values(), target.values(), &w))
}

#[inline]
fn energy_kernel(test: &[f64], target: &[f64], weights: &[f64]) -> f64 {
    test.iter().zip(target).zip(weights).map(|((i, j), w)| w * (j - i).max(0.0)).sum()
}

#[inline]
fn exceeds_kernel(test: &[f64], target: &[f64]) -> bool {
    test.iter().zip(target).all(|(i, j)| i > j)
}

/// Strict exceeding: `I > J` at every node.
pub fn is_exceeding(test: &Curve, target: &Curve) -> Result<bool> {
    ensure_same_grid(test, target)?;
    Ok(exceeds_kernel(test.values(), target.values()))
}

/// Absolute target meeting: `||I - J|| < epsilon`.
pub fn is_absolute_meeting(test: &Curve, target: &Curve, epsilon: f64) -> Result<bool> {
    check_epsilon(epsilon)?;
    Ok(l2_distance(test, target)? < epsilon)
}

/// Relative target meeting: `lambda < 1` and `||lambda I - J|| < epsilon`
/// with `lambda` the ratio of the target area to the test area.
pub fn is_relative_meeting(test: &Curve, target: &Curve, epsilon: f64) -> Result<(bool, f64)> {
    check_epsilon(epsilon)?;
    ensure_same_grid(test, target)?;
    let fit = TargetFit::new(target.clone());
    let w = &fit.weights;
    let lambda = lambda_of(fit.target_area, trapezoid(test.values(), w))?;
    let hit = lambda < 1.0 && fit.scaled_distance(test.values(), lambda) < epsilon;
    Ok((hit, lambda))
}

/// Every fit measure of one test against one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(rename = "l2")]
    pub l2_distance: f64,
    pub lambda: f64,
    pub energy: f64,
    pub exceeding: bool,
    #[serde(rename = "absolute")]
    pub absolute_meeting: bool,
    #[serde(rename = "relative")]
    pub relative_meeting: bool,
}

pub fn fit_report(test: &Curve, target: &Curve, epsilon: f64) -> Result<FitReport> {
    let (relative_meeting, lambda) = is_relative_meeting(test, target, epsilon)?;
    Ok(FitReport {
        l2_distance: l2_distance(test, target)?,
        lambda,
        energy: deficiency_energy(test, target)?,
        exceeding: is_exceeding(test, target)?,
        absolute_meeting: is_absolute_meeting(test, target, epsilon)?,
        relative_meeting,
    })
}

/// A tabulated target with its trapezoid weights and area, for evaluating
/// many raw test curves on the same grid.
#[derive(Debug, Clone)]
pub struct TargetFit {
    target: Curve,
    weights: Vec<f64>,
    target_area: f64,
}

impl TargetFit {
    pub fn new(target: Curve) -> Self {
        let weights = target.grid().trapezoid_weights();
        let target_area = trapezoid(target.values(), &weights);
        Self { target, weights, target_area }
    }

    pub fn target(&self) -> &Curve {
        &self.target
    }

    pub fn target_area(&self) -> f64 {
        self.target_area
    }

    pub fn exceeds(&self, test: &[f64]) -> bool {
        exceeds_kernel(test, self.target.values())
    }

    pub fn energy(&self, test: &[f64]) -> f64 {
        energy_kernel(test, self.target.values(), &self.weights)
    }

    pub fn distance(&self, test: &[f64]) -> f64 {
        weighted_sq_distance(test, self.target.values(), &self.weights).sqrt()
    }

    pub fn absolute_meeting(&self, test: &[f64], epsilon: f64) -> bool {
        self.distance(test) < epsilon
    }

    /// Relative meeting on a raw curve. Returns `(hit, lambda)`; a
    /// nonpositive test area yields `lambda = inf` and no hit.
    pub fn relative_meeting(&self, test: &[f64], epsilon: f64) -> (bool, f64) {
        let s_test = trapezoid(test, &self.weights);
        if !(s_test > 0.0) {
            return (false, f64::INFINITY);
        }
        let lambda = self.target_area / s_test;
        if lambda >= 1.0 {
            return (false, lambda);
        }
        (self.scaled_distance(test, lambda) < epsilon, lambda)
    }

    fn scaled_distance(&self, test: &[f64], lambda: f64) -> f64 {
        test.iter()
            .zip(self.target.values())
            .zip(&self.weights)
            .map(|((i, j), w)| {
                let d = lambda * i - j;
                w * d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irt::{AbilityGrid, BankCurves, ItemBank, ItemParams};
    use crate::target::TargetSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> AbilityGrid {
        AbilityGrid::default()
    }

    fn lsat() -> Curve {
        TargetSpec::lsat().tabulate(&grid()).unwrap()
    }

    fn shift(c: &Curve, d: f64) -> Curve {
        Curve::new(*c.grid(), c.values().iter().map(|v| v + d).collect()).unwrap()
    }

    #[test]
    fn l2_examples() {
        let j = lsat();
        assert_eq!(l2_distance(&j, &j).unwrap(), 0.0);
        assert_relative_eq!(l2_distance(&shift(&j, 2.0), &j).unwrap(), 2.0 * 6f64.sqrt(), max_relative = 1e-12);
        let theta = Curve::from_fn(grid(), |t| t).unwrap();
        let zero = Curve::zeros(grid());
        assert!((l2_distance(&theta, &zero).unwrap() - 18f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = Curve::zeros(grid());
        let b = Curve::zeros(AbilityGrid::standard(61).unwrap());
        assert!(matches!(l2_distance(&a, &b), Err(Error::GridMismatch)));
        assert!(matches!(deficiency_energy(&a, &b), Err(Error::GridMismatch)));
        assert!(matches!(is_exceeding(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn area_examples() {
        let c = Curve::from_fn(grid(), |_| 2.5).unwrap();
        assert_relative_eq!(area_under(&c), 15.0, max_relative = 1e-12);
        assert_eq!(area_under(&Curve::zeros(grid())), 0.0);
        // Exact integral of the LSAT polynomial on [-3, 3] is 54.2119.
        assert!((area_under(&lsat()) - 54.212).abs() < 0.01);
        // The trapezoid rule is exact on linear functions.
        let line = Curve::from_fn(grid(), |t| 3.0 * t + 7.0).unwrap();
        assert_relative_eq!(area_under(&line), 42.0, max_relative = 1e-12);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_of(54.212, 54.212).unwrap(), 1.0);
        assert_eq!(lambda_of(54.212, 108.424).unwrap(), 0.5);
        assert_eq!(lambda_of(6.0, 3.0).unwrap(), 2.0);
        assert!(lambda_of(1.0, 0.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let j = lsat();
        assert_eq!(deficiency_energy(&shift(&j, 0.5), &j).unwrap(), 0.0);
        assert!((deficiency_energy(&Curve::zeros(grid()), &j).unwrap() - 54.212).abs() < 0.01);
        assert_relative_eq!(deficiency_energy(&shift(&j, -0.75), &j).unwrap(), 6.0 * 0.75, max_relative = 1e-12);
    }

    #[test]
    fn exceeding_examples() {
        let j = lsat();
        assert!(is_exceeding(&shift(&j, 0.001), &j).unwrap());
        assert!(!is_exceeding(&j, &j).unwrap());
        let mut v = shift(&j, 0.5).values().to_vec();
        v[37] = j.values()[37] - 0.1;
        assert!(!is_exceeding(&Curve::new(grid(), v).unwrap(), &j).unwrap());
        // Equality everywhere: E = 0 but not exceeding.
        assert_eq!(deficiency_energy(&j, &j).unwrap(), 0.0);
    }

    #[test]
    fn absolute_examples() {
        let j = lsat();
        assert!(is_absolute_meeting(&j, &j, 0.1).unwrap());
        assert!(!is_absolute_meeting(&shift(&j, 1.0), &j, 1.225).unwrap());
        assert!(is_absolute_meeting(&shift(&j, 0.4), &j, 1.225).unwrap());
        assert!(is_absolute_meeting(&j, &j, 0.0).is_err());
        assert!(is_absolute_meeting(&j, &j, -1.0).is_err());
    }

    #[test]
    fn relative_examples() {
        let j = lsat();
        assert_eq!(is_relative_meeting(&j.scaled(2.0), &j, 1e-9).unwrap(), (true, 0.5));
        assert_eq!(is_relative_meeting(&j.scaled(0.5), &j, 1.225).unwrap(), (false, 2.0));
        assert_eq!(is_relative_meeting(&j, &j, 1.225).unwrap(), (false, 1.0));
        assert!(is_relative_meeting(&Curve::zeros(grid()), &j, 1.225).is_err());
    }

    #[test]
    fn report_serializes_with_short_keys() {
        let j = lsat();
        let report = fit_report(&j.scaled(2.0), &j, 1.225).unwrap();
        assert!(report.exceeding && report.relative_meeting && !report.absolute_meeting);
        assert_eq!(report.energy, 0.0);
        let text = serde_json::to_string(&report).unwrap();
        for key in ["\"l2\"", "\"lambda\"", "\"energy\"", "\"exceeding\"", "\"absolute\"", "\"relative\""] {
            assert!(text.contains(key), "{text}");
        }
    }

    #[test]
    fn energy_monotone_under_item_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let items = (0..60)
            .map(|_| ItemParams::new(rng.random_range(1.0..=3.0), rng.random_range(-3.0..=3.0), 0.2).unwrap())
            .collect();
        let bank = ItemBank::new(items).unwrap();
        let table = BankCurves::new(&bank, &grid());
        let fit = TargetFit::new(lsat());
        let mut buf = vec![0.0; grid().len()];
        for _ in 0..1000 {
            let n = rng.random_range(1..40);
            let ids = rand::seq::index::sample(&mut rng, bank.len(), n + 1).into_vec();
            table.sum_into(&ids[..n], &mut buf);
            let before = fit.energy(&buf);
            table.sum_into(&ids, &mut buf);
            assert!(fit.energy(&buf) <= before + 1e-12);
        }
    }

    fn arb_curve() -> impl Strategy<Value = Curve> {
        prop::collection::vec(-50.0f64..50.0, 21)
            .prop_map(|v| Curve::new(AbilityGrid::standard(21).unwrap(), v).unwrap())
    }

    proptest! {
        #[test]
        fn l2_is_a_metric(f in arb_curve(), g in arb_curve(), h in arb_curve()) {
            let fg = l2_distance(&f, &g).unwrap();
            prop_assert_eq!(fg, l2_distance(&g, &f).unwrap());
            let fh = l2_distance(&f, &h).unwrap();
            let hg = l2_distance(&h, &g).unwrap();
            prop_assert!(fg <= fh + hg + 1e-12);
        }

        #[test]
        fn exceeding_implies_zero_energy(f in arb_curve(), g in arb_curve()) {
            if is_exceeding(&f, &g).unwrap() {
                prop_assert_eq!(deficiency_energy(&f, &g).unwrap(), 0.0);
            }
            prop_assert!(deficiency_energy(&f, &g).unwrap() >= 0.0);
        }

        #[test]
        fn relative_meeting_implies_lambda_below_one(f in arb_curve()) {
            let target = Curve::from_fn(AbilityGrid::standard(21).unwrap(), |t| 10.0 + t).unwrap();
            let test = Curve::new(*f.grid(), f.values().iter().map(|v| v.abs() + 0.01).collect()).unwrap();
            let (hit, lambda) = is_relative_meeting(&test, &target, 5.0).unwrap();
            prop_assert!(!hit || lambda < 1.0);
        }
    }
}
