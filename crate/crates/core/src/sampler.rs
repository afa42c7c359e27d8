//! Random-sampling estimates of the fraction of tests that meet or exceed a
//! target.
//!
//! Draws are grouped into fixed chunks of [`CHUNK_DRAWS`]; chunk `i` of a run
//! with seed `s` uses ChaCha8 stream `i` of `s` (see [`crate::rng`]). Hit counts
//! are summed over chunks, so the estimate is bit-identical for any number of
//! worker threads.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::TargetFit;
use crate::irt::{BankCurves, ItemBank, TestForm};
use crate::rng::{derive_seed, stream_rng};

pub const CHUNK_DRAWS: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Absolute,
    Relative,
    Exceeding,
}

impl FitMode {
    pub const ALL: [FitMode; 3] = [FitMode::Absolute, FitMode::Relative, FitMode::Exceeding];

    fn seed_tag(self) -> u64 {
        match self {
            FitMode::Absolute => 1,
            FitMode::Relative => 2,
            FitMode::Exceeding => 3,
        }
    }

    /// Column suffix in sweep and count files.
    pub fn letter(self) -> &'static str {
        match self {
            FitMode::Absolute => "A",
            FitMode::Relative => "R",
            FitMode::Exceeding => "E",
        }
    }
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Absolute => "absolute",
            FitMode::Relative => "relative",
            FitMode::Exceeding => "exceeding",
        })
    }
}

impl FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absolute" | "a" => Ok(FitMode::Absolute),
            "relative" | "r" => Ok(FitMode::Relative),
            "exceeding" | "e" => Ok(FitMode::Exceeding),
            other => Err(Error::Config(format!("unknown mode {other:?}; expected absolute, relative or exceeding"))),
        }
    }
}

/// Test length, number of draws, seed and thread count for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub n: usize,
    pub draws: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub n: usize,
    pub draws: u64,
    pub hits: u64,
    pub mu_hat: f64,
    pub std_err: f64,
    pub mode: FitMode,
    pub epsilon: Option<f64>,
    pub seed: u64,
}

impl EstimateResult {
    fn new(plan: &SamplingPlan, hits: u64, mode: FitMode, epsilon: Option<f64>) -> Self {
        let k = plan.draws as f64;
        let mu_hat = hits as f64 / k;
        Self {
            n: plan.n,
            draws: plan.draws,
            hits,
            mu_hat,
            std_err: (mu_hat * (1.0 - mu_hat) / k).sqrt(),
            mode,
            epsilon,
            seed: plan.seed,
        }
    }
}

/// Uniform `n`-subsets of `0..m` by partial Fisher-Yates.
///
/// The permutation buffer is not reset between draws: whatever its current
/// order, the first `n` positions after the shuffle are a uniformly random
/// subset, independent of earlier draws.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    perm: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(m: usize) -> Self {
        Self { perm: (0..m).collect() }
    }

    /// Returns the drawn ids (unordered).
    pub fn draw<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> &[usize] {
        let m = self.perm.len();
        assert!(n <= m, "cannot draw {n} of {m} items");
        for i in 0..n {
            let j = rng.random_range(i..m);
            self.perm.swap(i, j);
        }
        &self.perm[..n]
    }
}

/// One uniformly random test of length `n`.
pub fn draw_random_test<R: Rng + ?Sized>(bank: &ItemBank, n: usize, rng: &mut R) -> Result<TestForm> {
    check_length(n, bank.len())?;
    let mut ids = SubsetSampler::new(bank.len()).draw(n, rng).to_vec();
    ids.sort_unstable();
    Ok(TestForm::from_sorted(ids))
}

fn check_length(n: usize, m: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::Domain(format!("test length n = {n} must lie in 1..={m}")));
    }
    Ok(())
}

fn check_plan(table: &BankCurves, fit: &TargetFit, plan: &SamplingPlan) -> Result<()> {
    check_length(plan.n, table.m())?;
    if plan.draws == 0 {
        return Err(Error::Config("number of draws K must be at least 1".into()));
    }
    if table.grid() != fit.target().grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn check_epsilon(epsilon: Option<f64>, mode: FitMode) -> Result<f64> {
    match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(Error::Config(format!("epsilon must be positive, got {e}"))),
        None => Err(Error::Config(format!("{mode} mode requires epsilon"))),
    }
}

/// Counts draws whose information curve satisfies `hit`.
fn count_hits<F>(table: &BankCurves, plan: &SamplingPlan, hit: F) -> Result<u64>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let chunks = plan.draws.div_ceil(CHUNK_DRAWS);
    let run_chunk = |chunk: u64| -> u64 {
        let mut rng = stream_rng(plan.seed, chunk);
        let len = CHUNK_DRAWS.min(plan.draws - chunk * CHUNK_DRAWS);
        let mut sampler = SubsetSampler::new(table.m());
        let mut ids = Vec::with_capacity(plan.n);
        let mut curve = vec![0.0; table.grid().len()];
        let mut hits = 0;
        for _ in 0..len {
            ids.clear();
            ids.extend_from_slice(sampler.draw(plan.n, &mut rng));
            // Summing in id order makes the curve a function of the subset alone.
            ids.sort_unstable();
            table.sum_into(&ids, &mut curve);
            if hit(&curve) {
                hits += 1;
            }
        }
        hits
    };

    if plan.workers <= 1 {
        return Ok((0..chunks).map(run_chunk).sum());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", plan.workers)))?;
    Ok(pool.install(|| (0..chunks).into_par_iter().map(run_chunk).sum()))
}

/// Random-sampling estimate of the exceeding or absolute-meeting fraction.
/// `epsilon` is required for [`FitMode::Absolute`]; relative meeting has its
/// own estimator, [`estimate_mu_relative`].
pub fn estimate_mu(
    table: &BankCurves,
    fit: &TargetFit,
    mode: FitMode,
    epsilon: Option<f64>,
    plan: &SamplingPlan,
) -> Result<EstimateResult> {
    check_plan(table, fit, plan)?;
    match mode {
        FitMode::Exceeding => {
            let hits = count_hits(table, plan, |c| fit.exceeds(c))?;
            Ok(EstimateResult::new(plan, hits, mode, None))
        }
        FitMode::Absolute => {
            let eps = check_epsilon(epsilon, mode)?;
            let hits = count_hits(table, plan, |c| fit.absolute_meeting(c, eps))?;
            Ok(EstimateResult::new(plan, hits, mode, Some(eps)))
        }
        FitMode::Relative => Err(Error::Config("relative meeting is estimated by estimate_mu_relative".into())),
    }
}

/// Random-sampling estimate of the relative-meeting fraction: per draw the
/// scale `lambda` is the target area over the test area, and the draw counts
/// when `lambda < 1` and `||lambda I - J|| < epsilon`.
pub fn estimate_mu_relative(
    table: &BankCurves,
    fit: &TargetFit,
    epsilon: f64,
    plan: &SamplingPlan,
) -> Result<EstimateResult> {
    check_plan(table, fit, plan)?;
    let eps = check_epsilon(Some(epsilon), FitMode::Relative)?;
    let hits = count_hits(table, plan, |c| fit.relative_meeting(c, eps).0)?;
    Ok(EstimateResult::new(plan, hits, FitMode::Relative, Some(eps)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub modes: Vec<FitMode>,
    /// Draws per test length for absolute and relative meeting.
    pub k_meeting: u64,
    /// Draws per test length for exceeding.
    pub k_exceeding: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub absolute: Option<EstimateResult>,
    pub relative: Option<EstimateResult>,
    pub exceeding: Option<EstimateResult>,
}

impl SweepRow {
    pub fn get(&self, mode: FitMode) -> Option<&EstimateResult> {
        match mode {
            FitMode::Absolute => self.absolute.as_ref(),
            FitMode::Relative => self.relative.as_ref(),
            FitMode::Exceeding => self.exceeding.as_ref(),
        }
    }
}

/// Seed used for `(n, mode)` within a sweep with master seed `master`.
pub fn sweep_sub_seed(master: u64, n: usize, mode: FitMode) -> u64 {
    derive_seed(master, &[n as u64, mode.seed_tag()])
}

/// Estimates every requested mode at every test length.
pub fn sweep(table: &BankCurves, fit: &TargetFit, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.n_values.is_empty() {
        return Err(Error::Config("sweep needs at least one test length".into()));
    }
    if config.modes.is_empty() {
        return Err(Error::Config("sweep needs at least one mode".into()));
    }
    for &n in &config.n_values {
        check_length(n, table.m())?;
    }
    let plan = |n: usize, mode: FitMode, draws: u64| SamplingPlan {
        n,
        draws,
        seed: sweep_sub_seed(config.seed, n, mode),
        workers: config.workers,
    };
    let wants = |mode| config.modes.contains(&mode);

    config
        .n_values
        .iter()
        .map(|&n| {
            let absolute = wants(FitMode::Absolute)
                .then(|| {
                    let p = plan(n, FitMode::Absolute, config.k_meeting);
                    estimate_mu(table, fit, FitMode::Absolute, Some(config.epsilon), &p)
                })
                .transpose()?;
            let relative = wants(FitMode::Relative)
                .then(|| {
                    let p = plan(n, FitMode::Relative, config.k_meeting);
                    estimate_mu_relative(table, fit, config.epsilon, &p)
                })
                .transpose()?;
            let exceeding = wants(FitMode::Exceeding)
                .then(|| {
                    let p = plan(n, FitMode::Exceeding, config.k_exceeding);
                    estimate_mu(table, fit, FitMode::Exceeding, None, &p)
                })
                .transpose()?;
            Ok(SweepRow { n, absolute, relative, exceeding })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "n,mu_A,se_A,mu_R,se_R,mu_E,se_E,K_meeting,K_exceeding,seed";

/// One line of a sweep CSV. Missing modes are `None` (empty fields).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub mu: [Option<f64>; 3],
    pub se: [Option<f64>; 3],
    pub k_meeting: Option<u64>,
    pub k_exceeding: Option<u64>,
    pub seed: u64,
}

fn mode_index(mode: FitMode) -> usize {
    match mode {
        FitMode::Absolute => 0,
        FitMode::Relative => 1,
        FitMode::Exceeding => 2,
    }
}

impl SweepRecord {
    pub fn from_row(row: &SweepRow, master_seed: u64) -> Self {
        let mut mu = [None; 3];
        let mut se = [None; 3];
        for mode in FitMode::ALL {
            if let Some(est) = row.get(mode) {
                mu[mode_index(mode)] = Some(est.mu_hat);
                se[mode_index(mode)] = Some(est.std_err);
            }
        }
        Self {
            n: row.n,
            mu,
            se,
            k_meeting: row.absolute.as_ref().or(row.relative.as_ref()).map(|e| e.draws),
            k_exceeding: row.exceeding.as_ref().map(|e| e.draws),
            seed: master_seed,
        }
    }

    pub fn mu(&self, mode: FitMode) -> Option<f64> {
        self.mu[mode_index(mode)]
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            opt(r.mu[0]),
            opt(r.se[0]),
            opt(r.mu[1]),
            opt(r.se[1]),
            opt(r.mu[2]),
            opt(r.se[2]),
            opt(r.k_meeting),
            opt(r.k_exceeding),
            r.seed
        )?;
    }
    out.flush()
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
        return Err(parse_err(1, format!("expected header `{SWEEP_HEADER}`")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let opt_f64 = |k: usize| -> Result<Option<f64>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| parse_err(line, format!("bad number {s:?} in column {}", k + 1)))
        };
        let opt_u64 = |k: usize| -> Result<Option<u64>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| parse_err(line, format!("bad count {s:?} in column {}", k + 1)))
        };
        let n = field(0).parse().map_err(|_| parse_err(line, format!("bad test length {:?}", field(0))))?;
        out.push(SweepRecord {
            n,
            mu: [opt_f64(1)?, opt_f64(3)?, opt_f64(5)?],
            se: [opt_f64(2)?, opt_f64(4)?, opt_f64(6)?],
            k_meeting: opt_u64(7)?,
            k_exceeding: opt_u64(8)?,
            seed: opt_u64(9)?.unwrap_or(0),
        });
    }
    Ok(out)
}
