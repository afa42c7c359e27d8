//! Three-parameter logistic item model, ability grids and information curves.
//!
//! Every downstream metric works on dense tabulations over an [`AbilityGrid`].
//! [`BankCurves`] caches one information row per bank item so that a test's
//! curve is just a sum of rows.

use crate::error::{Error, Result};

/// Numerically stable logistic `1 / (1 + exp(-x))`.
#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// 3PL parameters of a single item. Valid by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemParams {
    a: f64,
    b: f64,
    c: f64,
}

impl ItemParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Parameter(format!("discrimination a = {a} must be finite and > 0")));
        }
        if !b.is_finite() {
            return Err(Error::Parameter(format!("difficulty b = {b} must be finite")));
        }
        if !(0.0..1.0).contains(&c) {
            return Err(Error::Parameter(format!("guessing c = {c} must lie in [0, 1)")));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Probability of a correct response, `c + (1 - c) / (1 + exp(-a (theta - b)))`.
    pub fn prob_correct(&self, theta: f64) -> f64 {
        self.c + (1.0 - self.c) * logistic(self.a * (theta - self.b))
    }

    /// Item information
    /// `(a (p - c) / (1 - c))^2 * (1 - p) / p`.
    ///
    /// Evaluated through the logistic `s` and its complement `1 - s` (both
    /// computed directly) so the far tails neither overflow nor cancel.
    pub fn information(&self, theta: f64) -> f64 {
        let x = self.a * (theta - self.b);
        let s = logistic(x);
        let s_comp = logistic(-x);
        let p = self.c + (1.0 - self.c) * s;
        if p <= 0.0 {
            // c = 0 and s underflowed; the limit is a^2 s (1 - s) = 0.
            return 0.0;
        }
        // (p - c) / (1 - c) = s and 1 - p = (1 - c)(1 - s).
        let scaled = self.a * s;
        scaled * scaled * (1.0 - self.c) * s_comp / p
    }
}

/// Ordered item collection; an item's id is its index.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemBank {
    items: Vec<ItemParams>,
}

impl ItemBank {
    pub fn new(items: Vec<ItemParams>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Domain("an item bank needs at least one item".into()));
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[ItemParams] {
        &self.items
    }

    pub fn get(&self, id: usize) -> Result<&ItemParams> {
        self.items.get(id).ok_or(Error::Membership { id, m: self.items.len() })
    }
}

/// A fixed-form test: sorted, distinct item ids of one bank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestForm {
    ids: Vec<usize>,
}

impl TestForm {
    /// Validates `ids` against `bank`. Order of `ids` is irrelevant.
    pub fn new(mut ids: Vec<usize>, bank: &ItemBank) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Domain("a test needs at least one item".into()));
        }
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("item {} appears twice in the test", w[0])));
        }
        let m = bank.len();
        if let Some(&id) = ids.iter().find(|&&id| id >= m) {
            return Err(Error::Membership { id, m });
        }
        Ok(Self { ids })
    }

    /// Caller guarantees the ids are sorted, distinct and nonempty.
    pub(crate) fn from_sorted(ids: Vec<usize>) -> Self {
        debug_assert!(!ids.is_empty());
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self { ids }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

/// Uniform mesh on `[lo, hi]` including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbilityGrid {
    lo: f64,
    hi: f64,
    num_points: usize,
}

impl AbilityGrid {
    pub const DEFAULT_POINTS: usize = 121;

    pub fn new(lo: f64, hi: f64, num_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("grid bounds [{lo}, {hi}] are not an interval")));
        }
        if num_points < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 points, got {num_points}")));
        }
        Ok(Self { lo, hi, num_points })
    }

    /// `num_points` nodes on the conventional ability range [-3, 3].
    pub fn standard(num_points: usize) -> Result<Self> {
        Self::new(-3.0, 3.0, num_points)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.num_points - 1) as f64
    }

    /// Node `k`; the endpoints are reproduced exactly.
    pub fn node(&self, k: usize) -> f64 {
        assert!(k < self.num_points, "grid node {k} out of range");
        let last = (self.num_points - 1) as f64;
        self.lo + (self.hi - self.lo) * (k as f64) / last
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.num_points).map(move |k| self.node(k))
    }

    /// Composite trapezoid weights: `step / 2` at the ends, `step` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.num_points];
        w[0] = 0.5 * h;
        w[self.num_points - 1] = 0.5 * h;
        w
    }
}

impl Default for AbilityGrid {
    fn default() -> Self {
        Self { lo: -3.0, hi: 3.0, num_points: Self::DEFAULT_POINTS }
    }
}

/// Function values tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: AbilityGrid,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: AbilityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("curve has {} values for a {}-point grid", values.len(), grid.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("curve value {v} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: AbilityGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Tabulates `f` at every node.
    pub fn from_fn(grid: AbilityGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &AbilityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Curve {
        Curve { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Nodewise sum.
    pub fn add(&self, other: &Curve) -> Result<Curve> {
        ensure_same_grid(self, other)?;
        Ok(Curve { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub(crate) fn from_raw(grid: AbilityGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }
}

pub(crate) fn ensure_same_grid(f: &Curve, g: &Curve) -> Result<()> {
    if f.grid == g.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Information curve of `item` on `grid`.
pub fn item_curve(item: &ItemParams, grid: &AbilityGrid) -> Curve {
    Curve::from_raw(*grid, grid.nodes().map(|t| item.information(t)).collect())
}

/// Test information: nodewise sum of the item information curves.
pub fn test_information(bank: &ItemBank, test: &TestForm, grid: &AbilityGrid) -> Result<Curve> {
    sum_item_curves(bank, test.ids(), grid)
}

/// Sum over an arbitrary id list; an empty list yields the zero curve.
pub(crate) fn sum_item_curves(bank: &ItemBank, ids: &[usize], grid: &AbilityGrid) -> Result<Curve> {
    let nodes: Vec<f64> = grid.nodes().collect();
    let mut acc = vec![0.0; grid.len()];
    for &id in ids {
        let item = bank.get(id)?;
        for (slot, &t) in acc.iter_mut().zip(&nodes) {
            *slot += item.information(t);
        }
    }
    Ok(Curve::from_raw(*grid, acc))
}

/// Standard error of the ability estimate, `info^(-1/2)`.
pub fn standard_error(info: f64) -> Result<f64> {
    if !(info > 0.0) {
        return Err(Error::Domain(format!("standard error needs positive information, got {info}")));
    }
    Ok(info.powf(-0.5))
}

/// Every bank item's information curve, tabulated once on a shared grid.
#[derive(Debug, Clone)]
pub struct BankCurves {
    grid: AbilityGrid,
    m: usize,
    // Row-major, one row of `grid.len()` values per item.
    table: Vec<f64>,
}

impl BankCurves {
    pub fn new(bank: &ItemBank, grid: &AbilityGrid) -> Self {
        let g = grid.len();
        let mut table = Vec::with_capacity(bank.len() * g);
        for item in bank.items() {
            table.extend(grid.nodes().map(|t| item.information(t)));
        }
        Self { grid: *grid, m: bank.len(), table }
    }

    pub fn grid(&self) -> &AbilityGrid {
        &self.grid
    }

    /// Number of bank items.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, id: usize) -> &[f64] {
        let g = self.grid.len();
        &self.table[id * g..(id + 1) * g]
    }

    /// Overwrites `out` with the sum of the rows in `ids`, in the given order.
    pub(crate) fn sum_into(&self, ids: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for &id in ids {
            for (o, v) in out.iter_mut().zip(self.row(id)) {
                *o += v;
            }
        }
    }

    /// Information curve of `test`; ids must belong to this bank.
    pub fn test_curve(&self, test: &TestForm) -> Result<Curve> {
        if let Some(&id) = test.ids().iter().find(|&&id| id >= self.m) {
            return Err(Error::Membership { id, m: self.m });
        }
        let mut acc = vec![0.0; self.grid.len()];
        self.sum_into(test.ids(), &mut acc);
        Ok(Curve::from_raw(self.grid, acc))
    }

    /// Integral of each item's information over the grid (trapezoid).
    pub fn item_areas(&self) -> Vec<f64> {
        let w = self.grid.trapezoid_weights();
        (0..self.m).map(|id| self.row(id).iter().zip(&w).map(|(v, w)| v * w).sum()).collect()
    }
}
