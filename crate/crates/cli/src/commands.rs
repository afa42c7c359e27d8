use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use infotarget::anneal::write_trace_csv;
use infotarget::bank_io::write_bank;
use infotarget::counts::{count_table, write_counts_csv};
use infotarget::fit::fit_report;
use infotarget::sampler::{read_sweep_csv, write_sweep_csv, SweepRecord};
use infotarget::{
    AbilityGrid, AnnealConfig, BankCurves, BankGenSpec, FitMode, FitReport, ItemBank, SweepConfig, TargetFit,
    TargetSpec,
};
use serde::Serialize;
use serde_json::json;

use crate::args::Command;
use crate::params::{
    resolve, AssembleParams, CountsParams, EnumerateParams, Failure, GenBankParams, InputDigest, Manifest, SweepParams,
};

/// Successful runs either finish or, for `assemble`, exhaust their budget.
pub enum Status {
    Done,
    Exhausted,
}

pub fn run(command: Command) -> Result<Status, Failure> {
    let name = command.name();
    match command {
        Command::GenBank(args) => gen_bank(resolve(name, &args, args.output.config.as_deref())?),
        Command::Sweep(args) => sweep(resolve(name, &args, args.output.config.as_deref())?),
        Command::Assemble(args) => assemble(resolve(name, &args, args.output.config.as_deref())?),
        Command::Counts(args) => counts(resolve(name, &args, args.output.config.as_deref())?),
        Command::Enumerate(args) => enumerate(resolve(name, &args, args.output.config.as_deref())?),
    }
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    value.as_ref().ok_or_else(|| Failure::usage(format!("missing required {flag}")))
}

fn fill_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s} (generated; pass --seed {s} to repeat this run)");
        s
    })
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text.into_bytes()
}

/// Writes JSON to `out`, or to stdout when no output path was given.
fn emit_json<T: Serialize>(out: Option<&PathBuf>, value: &T) -> Result<(), Failure> {
    let bytes = to_json(value);
    match out {
        Some(path) => write_output(path, &bytes),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            eprintln!("note: no -o given, so no manifest was written");
            Ok(())
        }
    }
}

/// Bank, grid and target shared by the scoring commands.
struct Scoring {
    bank: ItemBank,
    bank_input: InputDigest,
    target: TargetSpec,
    table: BankCurves,
    fit: TargetFit,
}

fn scoring(bank: &Option<PathBuf>, grid_points: usize, epsilon: f64, target: &str) -> Result<Scoring, Failure> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Failure::usage(format!("--epsilon must be > 0, got {epsilon}")));
    }
    let target: TargetSpec = target.parse()?;
    let grid = AbilityGrid::standard(grid_points)?;
    let tabulated = target.tabulate(&grid)?;
    let path = required(bank, "--bank")?;
    let bank = infotarget::load_bank(path)?;
    let bank_input = InputDigest::of("bank", path)?;
    let table = BankCurves::new(&bank, &grid);
    Ok(Scoring { bank, bank_input, target, table, fit: TargetFit::new(tabulated) })
}

fn scoring_resolved(s: &Scoring, grid_points: usize) -> serde_json::Value {
    json!({
        "m": s.bank.len(),
        "grid": { "lo": -3.0, "hi": 3.0, "points": grid_points },
        "target_coefficients_descending": s.target.descending(),
    })
}

fn gen_bank(mut p: GenBankParams) -> Result<Status, Failure> {
    let out = required(&p.out, "-o/--out")?.clone();
    let mut spec =
        BankGenSpec { m: p.m, a_range: (p.a_min, p.a_max), b_range: (p.b_min, p.b_max), c_fixed: p.c, seed: 0 };
    spec.validate()?;
    spec.seed = fill_seed(&mut p.seed);
    let bank = infotarget::generate_bank(&spec)?;
    let mut bytes = Vec::new();
    write_bank(&bank, &mut bytes).map_err(|e| Failure::io(&out, e))?;
    write_output(&out, &bytes)?;
    let mut manifest = Manifest::new("gen-bank", &p);
    manifest.inputs.clear();
    manifest.resolved = json!({ "output_sha256": InputDigest::of("bank", &out)?.sha256 });
    manifest.write_next_to(&out)?;
    eprintln!("wrote {} items to {}", bank.len(), out.display());
    Ok(Status::Done)
}

fn sweep(mut p: SweepParams) -> Result<Status, Failure> {
    let out = required(&p.out, "-o/--out")?.clone();
    if p.n_from == 0 {
        return Err(Failure::usage("--n-from must be at least 1"));
    }
    if p.n_step == 0 {
        return Err(Failure::usage("--n-step must be at least 1"));
    }
    if p.n_to < p.n_from {
        return Err(Failure::usage(format!("--n-to {} is below --n-from {}", p.n_to, p.n_from)));
    }
    if p.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let meeting = p.modes.iter().any(|m| *m != FitMode::Exceeding);
    let exceeding = p.modes.contains(&FitMode::Exceeding);
    if (meeting && p.k_meeting == 0) || (exceeding && p.k_exceeding == 0) {
        return Err(Failure::usage("draw counts must be at least 1"));
    }
    let s = scoring(&p.bank, p.grid_points, p.epsilon, &p.target)?;
    let seed = fill_seed(&mut p.seed);
    let config = SweepConfig {
        n_values: (p.n_from..=p.n_to).step_by(p.n_step).collect(),
        modes: p.modes.clone(),
        k_meeting: p.k_meeting,
        k_exceeding: p.k_exceeding,
        epsilon: p.epsilon,
        seed,
        workers: p.workers,
    };
    let rows = infotarget::sweep(&s.table, &s.fit, &config)?;
    let records: Vec<SweepRecord> = rows.iter().map(|r| SweepRecord::from_row(r, seed)).collect();
    let mut bytes = Vec::new();
    write_sweep_csv(&records, &mut bytes).map_err(|e| Failure::io(&out, e))?;
    write_output(&out, &bytes)?;

    let mut manifest = Manifest::new("sweep", &p);
    manifest.resolved = scoring_resolved(&s, p.grid_points);
    manifest.inputs.push(s.bank_input.clone());
    manifest.write_next_to(&out)?;
    eprintln!("wrote {} rows to {}", records.len(), out.display());
    Ok(Status::Done)
}

#[derive(Serialize)]
struct AssembleOutput<'a> {
    items: &'a [usize],
    energy: f64,
    succeeded: bool,
    proposals: u64,
    accepted: u64,
    #[serde(rename = "final_T")]
    final_t: f64,
    fit: FitReport,
}

fn assemble(mut p: AssembleParams) -> Result<Status, Failure> {
    let n = *required(&p.n, "--n")?;
    let s = scoring(&p.bank, p.grid_points, p.epsilon, &p.target)?;
    if n == 0 || n >= s.bank.len() {
        return Err(Failure::usage(format!("--n must satisfy 1 <= n < m = {}, got {n}", s.bank.len())));
    }
    let mut config = AnnealConfig {
        t0: p.t0,
        alpha: p.alpha,
        iters_per_temp: p.iters_per_temp,
        max_proposals: p.max_proposals,
        seed: 0,
        greedy_init: p.greedy_init,
        trace_every: p.trace_every,
    };
    config.validate()?;
    config.seed = fill_seed(&mut p.seed);
    let result = infotarget::anneal(&s.table, &s.fit, n, &config)?;
    let curve = s.table.test_curve(&result.test)?;
    let output = AssembleOutput {
        items: result.test.ids(),
        energy: result.energy,
        succeeded: result.succeeded,
        proposals: result.proposals,
        accepted: result.accepted,
        final_t: result.final_t,
        fit: fit_report(&curve, s.fit.target(), p.epsilon)?,
    };
    if let Some(trace) = &p.trace {
        let mut bytes = Vec::new();
        write_trace_csv(&result.energy_trace, &mut bytes).map_err(|e| Failure::io(trace, e))?;
        write_output(trace, &bytes)?;
    }
    emit_json(p.out.as_ref(), &output)?;
    if let Some(out) = &p.out {
        let mut manifest = Manifest::new("assemble", &p);
        manifest.resolved = scoring_resolved(&s, p.grid_points);
        manifest.inputs.push(s.bank_input.clone());
        manifest.write_next_to(out)?;
    }
    eprintln!(
        "{} after {} proposals, energy {}",
        if result.succeeded { "succeeded" } else { "budget exhausted" },
        result.proposals,
        result.energy
    );
    Ok(if result.succeeded { Status::Done } else { Status::Exhausted })
}

fn counts(p: CountsParams) -> Result<Status, Failure> {
    let out = required(&p.out, "-o/--out")?.clone();
    let sweep_path = required(&p.sweep, "--sweep")?;
    let records = read_sweep_csv(sweep_path)?;
    if records.is_empty() {
        return Err(Failure::usage(format!("{}: sweep has no rows", sweep_path.display())));
    }
    let mut inputs = vec![InputDigest::of("sweep", sweep_path)?];
    let m = match (p.m, &p.bank) {
        (Some(m), None) => m,
        (m, Some(path)) => {
            let bank_m = infotarget::load_bank(path)?.len();
            inputs.push(InputDigest::of("bank", path)?);
            if m.is_some_and(|m| m != bank_m) {
                return Err(Failure::usage(format!("--m {} disagrees with the bank size {bank_m}", m.unwrap())));
            }
            bank_m
        }
        (None, None) => return Err(Failure::usage("counts needs --m or --bank for the bank size")),
    };

    let explicit = p.modes.is_some();
    let modes = p.modes.clone().unwrap_or_else(|| {
        FitMode::ALL.into_iter().filter(|&mode| records.iter().any(|r| r.mu(mode).is_some())).collect()
    });
    let mut curves = Vec::new();
    let mut anchors = serde_json::Map::new();
    for mode in modes {
        let mu: BTreeMap<usize, f64> = records.iter().filter_map(|r| Some((r.n, r.mu(mode)?))).collect();
        if mu.is_empty() {
            return Err(Failure::usage(format!("sweep has no {mode} estimates")));
        }
        let anchor_n = match p.anchor_n {
            Some(n) => n,
            None => {
                // Largest ratio; the first such length on ties.
                let (&n, &best) = mu.iter().rev().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
                if best == 0.0 {
                    if explicit {
                        return Err(Failure::usage(format!(
                            "every {mode} estimate in the sweep is zero; nothing to anchor on"
                        )));
                    }
                    eprintln!("warning: every {mode} estimate is zero, skipping that mode");
                    continue;
                }
                n
            }
        };
        let anchor_mu = mu.get(&anchor_n).copied().unwrap_or(0.0);
        let anchor_log10 =
            if anchor_mu > 0.0 { anchor_mu.log10() + infotarget::binom_total(m, anchor_n)?.log10 } else { f64::NAN };
        let curve = infotarget::extrapolate_counts(anchor_n, anchor_log10, &mu, m)?;
        anchors.insert(mode.to_string(), json!({ "n": anchor_n, "log10_count": anchor_log10 }));
        curves.push((mode, curve));
    }
    if curves.is_empty() {
        return Err(Failure::usage("no mode in the sweep has a nonzero estimate"));
    }
    let rows = count_table(m, &curves)?;
    let mut bytes = Vec::new();
    write_counts_csv(&rows, &mut bytes).map_err(|e| Failure::io(&out, e))?;
    write_output(&out, &bytes)?;

    let mut manifest = Manifest::new("counts", &p);
    manifest.resolved = json!({ "m": m, "anchors": anchors });
    manifest.inputs = inputs;
    manifest.write_next_to(&out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(Status::Done)
}

fn enumerate(p: EnumerateParams) -> Result<Status, Failure> {
    let n = *required(&p.n, "--n")?;
    let s = scoring(&p.bank, p.grid_points, p.epsilon, &p.target)?;
    let exact = infotarget::enumerate_exact(&s.table, &s.fit, n, p.epsilon)?;
    let mut output = serde_json::to_value(exact).expect("counts serialize");
    output["epsilon"] = json!(p.epsilon);
    emit_json(p.out.as_ref(), &output)?;
    if let Some(out) = &p.out {
        let mut manifest = Manifest::new("enumerate", &p);
        manifest.resolved = scoring_resolved(&s, p.grid_points);
        manifest.inputs.push(s.bank_input.clone());
        manifest.write_next_to(out)?;
    }
    Ok(Status::Done)
}
