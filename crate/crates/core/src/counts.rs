//! Test counts: the binomial total, extrapolation of class counts from an
//! estimated ratio curve, and exact enumeration for small banks.
//!
//! Counts grow past 10^80 for ordinary banks, so they are carried as base-10
//! logarithms. Exact integers are available only when they fit in `u128`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::TargetFit;
use crate::irt::BankCurves;
use crate::sampler::FitMode;

/// Largest number of subsets [`enumerate_exact`] will visit.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomCount {
    pub log10: f64,
    pub exact: Option<u128>,
}

/// `C(m, n)` exactly, or `None` if an intermediate product overflows `u128`.
pub fn exact_binomial(m: usize, n: usize) -> Option<u128> {
    if n > m {
        return Some(0);
    }
    let k = n.min(m - n) as u128;
    let m = m as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        // c = C(m, i) here, and C(m, i) (m - i) is divisible by i + 1.
        c = c.checked_mul(m - i)? / (i + 1);
    }
    Some(c)
}

fn ln_binomial(m: usize, n: usize) -> f64 {
    libm::lgamma(m as f64 + 1.0) - libm::lgamma(n as f64 + 1.0) - libm::lgamma((m - n) as f64 + 1.0)
}

/// Number of distinct tests of length `n` from `m` items.
pub fn binom_total(m: usize, n: usize) -> Result<BinomCount> {
    if n > m {
        return Err(Error::Domain(format!("cannot choose {n} of {m} items")));
    }
    let exact = exact_binomial(m, n);
    let log10 = match exact {
        Some(c) => (c as f64).log10(),
        None => ln_binomial(m, n) / std::f64::consts::LN_10,
    };
    Ok(BinomCount { log10, exact })
}

/// Count curve in log10 space; `None` marks test lengths without an estimate
/// (ratio zero), which the extrapolation cannot divide by.
#[derive(Debug, Clone, PartialEq)]
pub struct CountCurve {
    pub n_values: Vec<usize>,
    pub log10_counts: Vec<Option<f64>>,
    pub anchor: (usize, f64),
}

impl CountCurve {
    pub fn get(&self, n: usize) -> Option<f64> {
        let k = self.n_values.iter().position(|&v| v == n)?;
        self.log10_counts[k]
    }

    /// Test length with the largest count.
    pub fn argmax(&self) -> Option<usize> {
        self.n_values
            .iter()
            .zip(&self.log10_counts)
            .filter_map(|(&n, c)| c.map(|c| (n, c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(n, _)| n)
    }
}

/// Extends a known count `N_X(anchor_n)` to every test length in `mu_curve`:
///
/// `N_X(n0 + k) / N_X(n0) = mu(n0 + k) / mu(n0) * prod_{j<k} (m - n0 - j) / (n0 + j + 1)`
///
/// and, going down,
///
/// `N_X(n0 - k) / N_X(n0) = mu(n0 - k) / mu(n0) * prod_{j<k} (n0 - j) / (m - n0 + j + 1)`.
pub fn extrapolate_counts(
    anchor_n: usize,
    anchor_count_log10: f64,
    mu_curve: &BTreeMap<usize, f64>,
    m: usize,
) -> Result<CountCurve> {
    let anchor_mu = *mu_curve
        .get(&anchor_n)
        .ok_or_else(|| Error::Domain(format!("anchor n = {anchor_n} is not in the ratio curve")))?;
    if !(anchor_mu > 0.0) {
        let usable: Vec<String> = mu_curve.iter().filter(|(_, &mu)| mu > 0.0).map(|(n, _)| n.to_string()).collect();
        return Err(Error::Domain(format!(
            "ratio at anchor n = {anchor_n} is {anchor_mu}; choose an anchor with a nonzero ratio (candidates: {})",
            if usable.is_empty() { "none".to_string() } else { usable.join(", ") }
        )));
    }
    if let Some((&n, _)) = mu_curve.iter().find(|(&n, _)| n > m) {
        return Err(Error::Domain(format!("test length {n} exceeds bank size {m}")));
    }
    if let Some((&n, &mu)) = mu_curve.iter().find(|(_, &mu)| !(0.0..=1.0).contains(&mu)) {
        return Err(Error::Domain(format!("ratio {mu} at n = {n} is not in [0, 1]")));
    }

    let lg = |x: usize| (x as f64).log10();
    let log_mu0 = anchor_mu.log10();
    let mut n_values = Vec::with_capacity(mu_curve.len());
    let mut log10_counts = Vec::with_capacity(mu_curve.len());

    // Lengths above the anchor, in increasing order, accumulating the product.
    let mut product = 0.0;
    let mut reached = anchor_n;
    let mut above = Vec::new();
    for (&n, &mu) in mu_curve.range(anchor_n + 1..) {
        while reached < n {
            product += lg(m - reached) - lg(reached + 1);
            reached += 1;
        }
        above.push((n, (mu > 0.0).then(|| anchor_count_log10 + mu.log10() - log_mu0 + product)));
    }

    // Lengths below the anchor, walking down.
    let mut product = 0.0;
    let mut reached = anchor_n;
    let mut below = Vec::new();
    for (&n, &mu) in mu_curve.range(..anchor_n).rev() {
        while reached > n {
            product += lg(reached) - lg(m - reached + 1);
            reached -= 1;
        }
        below.push((n, (mu > 0.0).then(|| anchor_count_log10 + mu.log10() - log_mu0 + product)));
    }

    for (n, c) in below.into_iter().rev() {
        n_values.push(n);
        log10_counts.push(c);
    }
    n_values.push(anchor_n);
    log10_counts.push(Some(anchor_count_log10));
    for (n, c) in above {
        n_values.push(n);
        log10_counts.push(c);
    }

    Ok(CountCurve { n_values, log10_counts, anchor: (anchor_n, anchor_count_log10) })
}

/// Exact class counts over every test of one length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactCounts {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub total: u64,
    #[serde(rename = "N_A")]
    pub absolute: u64,
    #[serde(rename = "N_R")]
    pub relative: u64,
    #[serde(rename = "N_E")]
    pub exceeding: u64,
}

impl ExactCounts {
    pub fn count(&self, mode: FitMode) -> u64 {
        match mode {
            FitMode::Absolute => self.absolute,
            FitMode::Relative => self.relative,
            FitMode::Exceeding => self.exceeding,
        }
    }

    pub fn ratio(&self, mode: FitMode) -> f64 {
        self.count(mode) as f64 / self.total as f64
    }

    fn merge(mut self, other: Self) -> Self {
        self.total += other.total;
        self.absolute += other.absolute;
        self.relative += other.relative;
        self.exceeding += other.exceeding;
        self
    }
}

struct Enumerator<'a> {
    table: &'a BankCurves,
    fit: &'a TargetFit,
    epsilon: f64,
    n: usize,
    // partial[d] holds the sum of the first d chosen rows.
    partial: Vec<Vec<f64>>,
    counts: ExactCounts,
}

impl Enumerator<'_> {
    fn visit(&mut self, depth: usize, start: usize) {
        let m = self.table.m();
        // Leave room for the remaining n - depth - 1 picks.
        let last = m - (self.n - depth);
        for id in start..=last {
            let (done, rest) = self.partial.split_at_mut(depth + 1);
            let next = &mut rest[0];
            for ((o, p), r) in next.iter_mut().zip(&done[depth]).zip(self.table.row(id)) {
                *o = p + r;
            }
            if depth + 1 == self.n {
                self.classify(depth + 1);
            } else {
                self.visit(depth + 1, id + 1);
            }
        }
    }

    fn classify(&mut self, level: usize) {
        let curve = &self.partial[level];
        let c = &mut self.counts;
        c.total += 1;
        c.exceeding += u64::from(self.fit.exceeds(curve));
        c.absolute += u64::from(self.fit.absolute_meeting(curve, self.epsilon));
        c.relative += u64::from(self.fit.relative_meeting(curve, self.epsilon).0);
    }
}

/// Classifies every `n`-subset of the bank (lexicographic order) with the same
/// predicates the estimators use. Refuses when `C(m, n)` exceeds
/// [`ENUMERATION_BUDGET`].
pub fn enumerate_exact(table: &BankCurves, fit: &TargetFit, n: usize, epsilon: f64) -> Result<ExactCounts> {
    let m = table.m();
    if n == 0 || n > m {
        return Err(Error::Domain(format!("test length n = {n} must lie in 1..={m}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if table.grid() != fit.target().grid() {
        return Err(Error::GridMismatch);
    }
    let total = binom_total(m, n)?;
    match total.exact {
        Some(c) if c <= ENUMERATION_BUDGET as u128 => {}
        exact => {
            return Err(Error::Budget {
                m,
                n,
                count: exact.map_or_else(|| format!("{:.3e}", 10f64.powf(total.log10)), |c| c.to_string()),
                budget: ENUMERATION_BUDGET,
            })
        }
    }

    let g = table.grid().len();
    let empty = ExactCounts { m, n, total: 0, absolute: 0, relative: 0, exceeding: 0 };
    // Split by first item; each branch is an independent depth-first walk.
    let counts = (0..=m - n)
        .into_par_iter()
        .map(|first| {
            let mut e = Enumerator { table, fit, epsilon, n, partial: vec![vec![0.0; g]; n + 1], counts: empty };
            for (o, r) in e.partial[1].iter_mut().zip(table.row(first)) {
                *o = 0.0 + r;
            }
            if n == 1 {
                e.classify(1);
            } else {
                e.visit(1, first + 1);
            }
            e.counts
        })
        .reduce(|| empty, ExactCounts::merge);
    Ok(counts)
}

pub const COUNTS_HEADER: &str = "n,log10_N,log10_N_A,log10_N_R,log10_N_E,flags";

#[derive(Debug, Clone, PartialEq)]
pub struct CountRow {
    pub n: usize,
    pub log10_total: f64,
    /// Absolute, relative, exceeding; `None` when the mode was not requested
    /// or has no estimate at this length.
    pub log10_counts: [Option<f64>; 3],
    pub flags: Vec<String>,
}

/// Joins per-mode count curves into rows over the union of their lengths.
pub fn count_table(m: usize, curves: &[(FitMode, CountCurve)]) -> Result<Vec<CountRow>> {
    let mut lengths: Vec<usize> = curves.iter().flat_map(|(_, c)| c.n_values.iter().copied()).collect();
    lengths.sort_unstable();
    lengths.dedup();
    lengths
        .into_iter()
        .map(|n| {
            let mut log10_counts = [None; 3];
            let mut flags = Vec::new();
            for (mode, curve) in curves {
                let idx = FitMode::ALL.iter().position(|m| m == mode).expect("known mode");
                if let Some(k) = curve.n_values.iter().position(|&v| v == n) {
                    match curve.log10_counts[k] {
                        Some(v) => log10_counts[idx] = Some(v),
                        None => flags.push(format!("no_estimate_{}", mode.letter())),
                    }
                }
            }
            Ok(CountRow { n, log10_total: binom_total(m, n)?.log10, log10_counts, flags })
        })
        .collect()
}

pub fn write_counts_csv<W: Write>(rows: &[CountRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COUNTS_HEADER}")?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            r.log10_total,
            cell(r.log10_counts[0]),
            cell(r.log10_counts[1]),
            cell(r.log10_counts[2]),
            r.flags.join(";")
        )?;
    }
    out.flush()
}
