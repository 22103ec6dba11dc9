//! Command-line front end. Each subcommand loads its inputs, calls the
//! library and writes the result.
//!
//! Exit codes: 0 on success, 1 when an attack is infeasible or a strategy
//! fails verification, 2 on bad input.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::eval::{
    aggregate_to_csv, evaluate_target, report_to_csv, sweep_with_windows, target_trials_to_csv, AttackKind, EvalConfig,
    NoiseModel, SweepAxis, TrialSettings,
};
use crate::orbit::{load_contact_windows, scenario_windows, windows_to_csv, ContactWindow};
use crate::pipeline::{analyze_with_windows, Analysis};
use crate::planner::{
    check_attackable, parse_strategy_csv, plan_delay, plan_overflow, strategy_to_csv, verify_delay, verify_overflow,
    AttackStrategy, DelayPlanRequest, OverflowPlanRequest, PlanError,
};
use crate::queue::{evolve, trace_events_csv, trace_to_csv};
use crate::scenario::{load_scenario, ConstellationScenario, Slot};
use crate::scheduler::attackability_to_csv;
use crate::{Error, Result};

pub const SEED_ENV: &str = "ORBITSIEGE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "orbitsiege",
    version,
    about = "Constellation downlink simulator and attack planner"
)]
pub struct Cli {
    /// Progress messages on standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Contact windows CSV; skips propagation.
    #[arg(long)]
    pub windows: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TargetOverride {
    /// Target unit ids in capture order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Slot the last target must still be onboard after.
    #[arg(long)]
    pub target_slot: Option<Slot>,
    /// Maximum total attack cost.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MonteCarlo {
    /// delay or overflow
    #[arg(long, value_parser = parse_kind, default_value = "delay")]
    pub kind: AttackKind,
    /// Trials per replicate
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Master seed; falls back to ORBITSIEGE_SEED, then the scenario seed.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Maximum total attack cost per trial
    #[arg(long)]
    pub budget: Option<u64>,
    /// Extra units targeted on each side of the chosen ones
    #[arg(long, default_value_t = 0)]
    pub extra_m: usize,
    /// Standard deviation ratio of sizes and rates; jitter scales with it.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Delay goal in hours past the unattacked downlink.
    #[arg(long, default_value_t = 1.0)]
    pub duration_hours: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contact windows at slot midpoints.
    Windows {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Transmissible and attackable slots of the target satellite.
    Schedule {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Queue evolution of the target under an optional strategy.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Strategy CSV (`slot,...`); no attack when absent.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
        /// Also write per-unit transmit/drop events here.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Minimum-cost strategy keeping the targets onboard past a slot.
    PlanDelay {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        target: TargetOverride,
    },
    /// Strategy that gets the targets dropped by overflow.
    PlanOverflow {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        target: TargetOverride,
    },
    /// Checks a strategy against the scenario's goal.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Strategy CSV as written by plan-delay or plan-overflow
        #[arg(long)]
        strategy: PathBuf,
        /// delay or overflow
        #[arg(long, value_parser = parse_kind)]
        kind: AttackKind,
        #[command(flatten)]
        target: TargetOverride,
    },
    /// Monte-Carlo trials on the scenario's own target.
    Evaluate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        run: MonteCarlo,
        /// Overrides the scenario's delay deadline
        #[arg(long)]
        target_slot: Option<Slot>,
    },
    /// Success ratios over one varied parameter with random targets.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        run: MonteCarlo,
        /// n_high, budget, noise_ratio, extra_m, image_size, data_rate or target_duration
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Independent master seeds per value.
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        /// Aggregate CSV path; printed to standard output when absent.
        #[arg(long)]
        aggregate: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<AttackKind, String> {
    s.parse()
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse()
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// A legitimate negative result: infeasible attack, over budget, or a
    /// strategy that misses its goal.
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::Negative => 1,
        }
    }
}

/// Parses `args`, runs the command, prints diagnostics, returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    let verbose = cli.verbose;
    match &cli.command {
        Command::Windows { input, output } => {
            let (_, windows) = load(input, verbose)?;
            let text = match output.format {
                Format::Csv => windows_to_csv(&windows),
                Format::Json => json(&windows),
            };
            emit(&text, output.out.as_deref(), stdout)?;
            Ok(Outcome::Done)
        }
        Command::Schedule { input, output } => {
            let (_, a) = analyzed(input, None, verbose)?;
            let text = match output.format {
                Format::Csv => attackability_to_csv(&a.records),
                Format::Json => json(&a.records),
            };
            emit(&text, output.out.as_deref(), stdout)?;
            Ok(Outcome::Done)
        }
        Command::Simulate {
            input,
            output,
            strategy,
            targets,
            events,
        } => {
            let (scenario, a) = analyzed(input, None, verbose)?;
            let slots = match strategy {
                Some(p) => read_strategy(p)?,
                None => BTreeSet::new(),
            };
            let ids = targets
                .clone()
                .unwrap_or_else(|| scenario.target.target_unit_ids.clone());
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let trace = evolve(&a.surface.model, &slots, &refs)?;
            let text = match output.format {
                Format::Csv => trace_to_csv(&trace),
                Format::Json => json(&trace),
            };
            emit(&text, output.out.as_deref(), stdout)?;
            if let Some(p) = events {
                write_atomic(p, &trace_events_csv(&trace))?;
            }
            Ok(Outcome::Done)
        }
        Command::PlanDelay { input, output, target } => {
            let (scenario, a) = analyzed(input, Some(target), verbose)?;
            let t_star = scenario
                .target
                .target_downlink_slot
                .ok_or_else(|| Error::Config("plan-delay needs --target-slot or target.target_downlink_slot".into()))?;
            let request = DelayPlanRequest {
                targets: scenario.target.target_unit_ids.clone(),
                target_downlink_slot: t_star,
            };
            let planned = plan_delay(&a.surface, &request);
            finish_plan(planned, &scenario, &a, output, stdout)
        }
        Command::PlanOverflow { input, output, target } => {
            let (scenario, a) = analyzed(input, Some(target), verbose)?;
            let request = OverflowPlanRequest {
                targets: scenario.target.target_unit_ids.clone(),
            };
            let planned = plan_overflow(&a.surface, &request);
            finish_plan(planned, &scenario, &a, output, stdout)
        }
        Command::Verify {
            input,
            strategy,
            kind,
            target,
        } => {
            let (scenario, a) = analyzed(input, Some(target), verbose)?;
            let slots = read_strategy(strategy)?;
            check_attackable(&a.surface, &slots)?;
            let targets = &scenario.target.target_unit_ids;
            let success = match kind {
                AttackKind::Delay => {
                    let t_star = scenario
                        .target
                        .target_downlink_slot
                        .ok_or_else(|| Error::Config("delay verification needs --target-slot".into()))?;
                    let v = verify_delay(&a.surface, &slots, targets, t_star)?;
                    writeln!(stdout, "unit {}: {} (deadline {t_star})", v.unit_id, v.evacuation).map_err(stdout_err)?;
                    v.success
                }
                AttackKind::Overflow => {
                    let v = verify_overflow(&a.surface, &slots, targets)?;
                    for u in &v.units {
                        writeln!(stdout, "unit {}: {}", u.unit_id, u.evacuation).map_err(stdout_err)?;
                    }
                    v.success
                }
            };
            writeln!(stdout, "{}", if success { "success" } else { "failure" }).map_err(stdout_err)?;
            Ok(if success { Outcome::Done } else { Outcome::Negative })
        }
        Command::Evaluate {
            input,
            output,
            run,
            target_slot,
        } => {
            let overrides = TargetOverride {
                targets: None,
                target_slot: *target_slot,
                budget: None,
            };
            let (scenario, a) = analyzed(input, Some(&overrides), verbose)?;
            let settings = TrialSettings {
                kind: run.kind,
                noise: noise(run.noise)?,
                cost_budget: run.budget.or(scenario.target.cost_budget),
                extra_m: run.extra_m,
                duration_slots: 0,
                targets_per_trial: scenario.target.target_unit_ids.len(),
            };
            if run.trials == 0 {
                return Err(Error::Config("--trials must be at least 1".into()));
            }
            let seed = run.seed.unwrap_or(scenario.seed);
            let records = evaluate_target(&scenario, &a.records, &settings, run.trials, seed);
            let text = match output.format {
                Format::Csv => target_trials_to_csv(&records),
                Format::Json => json(&records),
            };
            emit(&text, output.out.as_deref(), stdout)?;
            if output.out.is_some() {
                let ok = records.iter().filter(|r| r.success).count();
                writeln!(stdout, "success_ratio: {}", ratio(ok, records.len())).map_err(stdout_err)?;
            }
            Ok(Outcome::Done)
        }
        Command::Sweep {
            input,
            output,
            run,
            axis,
            values,
            replicates,
            aggregate,
        } => {
            let (scenario, windows) = load(input, verbose)?;
            let config = EvalConfig {
                axis: *axis,
                values: values.clone(),
                trials: run.trials,
                replicates: *replicates,
                kind: run.kind,
                cost_budget: run.budget,
                extra_m: run.extra_m,
                noise: noise(run.noise)?,
                target_duration_hours: run.duration_hours,
                targets_per_trial: EvalConfig::default().targets_per_trial,
                master_seed: run.seed.unwrap_or(scenario.seed),
            };
            if verbose {
                eprintln!("sweeping {} over {:?}", axis, values);
            }
            let report = sweep_with_windows(&config, &scenario, &windows)?;
            for e in &report.errors {
                eprintln!("warning: {} = {}: {}", axis, e.value, e.message);
            }
            match output.format {
                Format::Csv => {
                    if let Some(p) = &output.out {
                        write_atomic(p, &report_to_csv(&report))?;
                    }
                    emit(&aggregate_to_csv(&report), aggregate.as_deref(), stdout)?;
                }
                Format::Json => emit(&json(&report), output.out.as_deref(), stdout)?,
            }
            Ok(Outcome::Done)
        }
    }
}

fn noise(ratio: f64) -> Result<NoiseModel> {
    let n = NoiseModel::with_ratio(ratio);
    n.validate().map_err(Error::Config)?;
    Ok(n)
}

fn ratio(k: usize, n: usize) -> String {
    let r = if n == 0 { 0.0 } else { k as f64 / n as f64 };
    crate::orbit::round_significant(r, 6).to_string()
}

fn load(input: &Input, verbose: bool) -> Result<(ConstellationScenario, Vec<ContactWindow>)> {
    let scenario = load_scenario(&input.scenario)?;
    let windows = match &input.windows {
        Some(p) => load_contact_windows(p, &scenario)?,
        None => scenario_windows(&scenario)?,
    };
    if verbose {
        eprintln!("{}: {} contact windows", input.scenario.display(), windows.len());
    }
    Ok((scenario, windows))
}

fn analyzed(
    input: &Input,
    overrides: Option<&TargetOverride>,
    verbose: bool,
) -> Result<(ConstellationScenario, Analysis)> {
    let (mut scenario, windows) = load(input, verbose)?;
    if let Some(o) = overrides {
        if let Some(t) = &o.targets {
            scenario.target.target_unit_ids = t.clone();
        }
        if let Some(t) = o.target_slot {
            scenario.target.target_downlink_slot = Some(t);
        }
        if let Some(b) = o.budget {
            scenario.target.cost_budget = Some(b);
        }
        scenario.validate()?;
    }
    let a = analyze_with_windows(&scenario, windows)?;
    Ok((scenario, a))
}

fn finish_plan(
    planned: std::result::Result<AttackStrategy, PlanError>,
    scenario: &ConstellationScenario,
    a: &Analysis,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<Outcome> {
    let strategy = match planned {
        Ok(s) => s,
        Err(PlanError::AttackFail(f)) => {
            writeln!(stdout, "infeasible: {f}").map_err(stdout_err)?;
            if !f.partial.is_empty() {
                writeln!(stdout, "partial: {}", slot_set(&f.partial)).map_err(stdout_err)?;
            }
            return Ok(Outcome::Negative);
        }
        Err(e) => return Err(e.into()),
    };
    writeln!(stdout, "strategy: {}", slot_set(&strategy.slots)).map_err(stdout_err)?;
    writeln!(stdout, "cost: {}", strategy.total_cost).map_err(stdout_err)?;
    for u in &strategy.outcomes {
        match u.drop_slot() {
            Some(t) => writeln!(stdout, "unit {}: dropped at slot {t}", u.unit_id),
            None => writeln!(stdout, "unit {}: {}", u.unit_id, u.evacuation),
        }
        .map_err(stdout_err)?;
    }
    if let Some(path) = &output.out {
        let text = match output.format {
            Format::Csv => strategy_to_csv(&strategy, &a.surface),
            Format::Json => json(&strategy),
        };
        write_atomic(path, &text)?;
    }
    if let Some(b) = scenario.target.cost_budget {
        if strategy.total_cost > b {
            writeln!(stdout, "over budget: cost {} > {b}", strategy.total_cost).map_err(stdout_err)?;
            return Ok(Outcome::Negative);
        }
    }
    Ok(Outcome::Done)
}

fn slot_set(slots: &BTreeSet<Slot>) -> String {
    let items: Vec<String> = slots.iter().map(|t| t.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn read_strategy(path: &Path) -> Result<BTreeSet<Slot>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(parse_strategy_csv(&text)?)
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Write {
        path: "<stdout>".into(),
        source: e,
    }
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text),
        None => stdout.write_all(text.as_bytes()).map_err(stdout_err),
    }
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let err = |source| Error::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(text.as_bytes()).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
