//! Importance-sampling search for a target-exceeding test.
//!
//! The chain walks over tests of fixed length by single-item swaps. The energy
//! of a test is its deficiency below the target (see
//! [`crate::fit::deficiency_energy`]); proposals are accepted with the
//! Metropolis rule `min(1, exp(-(E_new - E_old) / T))`, and `T` is multiplied
//! by `alpha` after every `iters_per_temp` proposals. The run stops at the
//! first test with zero energy whose curve, recomputed from scratch, lies
//! strictly above the target at every node, or when the proposal budget is
//! spent.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::TargetFit;
use crate::irt::{BankCurves, ItemBank, TestForm};
use crate::rng::stream_rng;
use crate::sampler::SubsetSampler;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub t0: f64,
    pub alpha: f64,
    pub iters_per_temp: u64,
    pub max_proposals: u64,
    pub seed: u64,
    /// Start from the `n` items with the largest information area instead of
    /// a random test.
    pub greedy_init: bool,
    /// Record the energy every this many proposals.
    pub trace_every: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            t0: 0.05,
            alpha: 0.9,
            iters_per_temp: 1_000,
            max_proposals: 100_000,
            seed: 0,
            greedy_init: false,
            trace_every: 100,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("initial temperature must be > 0, got {}", self.t0)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("cooling factor must lie in (0, 1), got {}", self.alpha)));
        }
        if self.iters_per_temp == 0 || self.max_proposals == 0 || self.trace_every == 0 {
            return Err(Error::Config("iters_per_temp, max_proposals and trace_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub proposal: u64,
    pub energy: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    pub test: TestForm,
    pub energy: f64,
    pub succeeded: bool,
    pub proposals: u64,
    pub accepted: u64,
    pub energy_trace: Vec<TracePoint>,
    pub final_t: f64,
}

/// Metropolis acceptance probability.
pub fn acceptance_probability(e_old: f64, e_new: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be > 0, got {temperature}")));
    }
    Ok(acceptance(e_old, e_new, temperature))
}

#[inline]
fn acceptance(e_old: f64, e_new: f64, temperature: f64) -> f64 {
    if e_new <= e_old {
        1.0
    } else {
        (-(e_new - e_old) / temperature).exp()
    }
}

/// Metropolis decision. Downhill moves are accepted without drawing from `rng`.
pub fn metropolis_accept<R: Rng + ?Sized>(e_old: f64, e_new: f64, temperature: f64, rng: &mut R) -> bool {
    if e_new <= e_old {
        return true;
    }
    rng.random::<f64>() < acceptance(e_old, e_new, temperature)
}

/// Test members and their complement, for O(1) uniform swaps.
#[derive(Debug, Clone)]
struct SwapState {
    members: Vec<usize>,
    outside: Vec<usize>,
}

impl SwapState {
    fn new(members: Vec<usize>, m: usize) -> Self {
        let mut inside = vec![false; m];
        for &id in &members {
            inside[id] = true;
        }
        let outside = (0..m).filter(|&id| !inside[id]).collect();
        Self { members, outside }
    }

    /// Positions of the outgoing member and the incoming outsider, each
    /// uniform over its set.
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let i = rng.random_range(0..self.members.len());
        let j = rng.random_range(0..self.outside.len());
        (i, j)
    }

    fn apply(&mut self, (i, j): (usize, usize)) {
        std::mem::swap(&mut self.members[i], &mut self.outside[j]);
    }

    fn sorted_members(&self) -> Vec<usize> {
        let mut ids = self.members.clone();
        ids.sort_unstable();
        ids
    }
}

/// Replaces one uniformly chosen item of `test` with one uniformly chosen
/// bank item not already in it.
pub fn propose_swap<R: Rng + ?Sized>(test: &TestForm, bank: &ItemBank, rng: &mut R) -> Result<TestForm> {
    let m = bank.len();
    if let Some(&id) = test.ids().iter().find(|&&id| id >= m) {
        return Err(Error::Membership { id, m });
    }
    if test.len() >= m {
        return Err(Error::NoMove);
    }
    let mut state = SwapState::new(test.ids().to_vec(), m);
    let mv = state.propose(rng);
    state.apply(mv);
    Ok(TestForm::from_sorted(state.sorted_members()))
}

/// Searches for a test of length `n` whose information curve exceeds the
/// target. Exhausting the budget is not an error: the result reports
/// `succeeded = false` with the last test visited.
pub fn anneal(table: &BankCurves, fit: &TargetFit, n: usize, config: &AnnealConfig) -> Result<AnnealResult> {
    config.validate()?;
    let m = table.m();
    if n == 0 || n >= m {
        return Err(Error::Domain(format!("annealing needs 1 <= n < m, got n = {n} with m = {m}")));
    }
    if table.grid() != fit.target().grid() {
        return Err(Error::GridMismatch);
    }

    let mut rng = stream_rng(config.seed, 0);
    let initial = if config.greedy_init {
        let areas = table.item_areas();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| areas[b].total_cmp(&areas[a]).then(a.cmp(&b)));
        order.truncate(n);
        order
    } else {
        SubsetSampler::new(m).draw(n, &mut rng).to_vec()
    };
    let mut state = SwapState::new(initial, m);

    let g = table.grid().len();
    let mut curve = vec![0.0; g];
    table.sum_into(&state.sorted_members(), &mut curve);
    let mut candidate = vec![0.0; g];
    let mut energy = fit.energy(&curve);

    let mut temperature = config.t0;
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    let mut trace = vec![TracePoint { proposal: 0, energy, temperature }];
    let mut succeeded = false;

    loop {
        if energy == 0.0 {
            // Confirm on a fresh sum so incremental drift can't fake a success.
            table.sum_into(&state.sorted_members(), &mut curve);
            energy = fit.energy(&curve);
            if energy == 0.0 && fit.exceeds(&curve) {
                succeeded = true;
                break;
            }
        }
        if proposals >= config.max_proposals {
            break;
        }

        let mv = state.propose(&mut rng);
        let (out_row, in_row) = (table.row(state.members[mv.0]), table.row(state.outside[mv.1]));
        for (((c, cur), o), i) in candidate.iter_mut().zip(&curve).zip(out_row).zip(in_row) {
            *c = cur - o + i;
        }
        let e_new = fit.energy(&candidate);
        proposals += 1;

        if metropolis_accept(energy, e_new, temperature, &mut rng) {
            state.apply(mv);
            std::mem::swap(&mut curve, &mut candidate);
            energy = e_new;
            accepted += 1;
        }
        if proposals.is_multiple_of(config.trace_every) {
            trace.push(TracePoint { proposal: proposals, energy, temperature });
        }
        if proposals.is_multiple_of(config.iters_per_temp) {
            temperature *= config.alpha;
        }
    }

    if trace.last().map(|p| p.proposal) != Some(proposals) {
        trace.push(TracePoint { proposal: proposals, energy, temperature });
    }

    Ok(AnnealResult {
        test: TestForm::from_sorted(state.sorted_members()),
        energy,
        succeeded,
        proposals,
        accepted,
        energy_trace: trace,
        final_t: temperature,
    })
}

pub const TRACE_HEADER: &str = "proposal,energy,temperature";

pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for p in trace {
        writeln!(out, "{},{},{}", p.proposal, p.energy, p.temperature)?;
    }
    out.flush()
}
