//! Command-line interface. JSON goes to `--out` (or stdout), a human summary
//! to stdout (or stderr when stdout carries the JSON).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use stairwalk_core::bounds::{product_limit_check, DEFAULT_TRUNCATION};
use stairwalk_core::kernel::kernel_equivalence_check;
use stairwalk_core::oracle::{transient_law_sequence, transient_laws_at, LawArithmetic, TransientLaw, DEFAULT_HORIZON_BUDGET};
use stairwalk_core::scalar::{parse_rational, rational_string};
use stairwalk_core::schedule::{
    build_paper_schedule_with, check_schedule_feasibility, log_growth_template, paper_a, M0Method,
    PaperScheduleOptions,
};
use stairwalk_core::simulator::{run_replication, ControlMode, SimConfig};
use stairwalk_core::verifier::{audit_single, AuditParams, AuditReport, ClaimResult};
use stairwalk_core::rng::ReplicationSeed;
use stairwalk_core::{BigRational, ConstantsProfile, PhaseSchedule, ScheduleMode};

use crate::config::{load_phases, load_profile, load_schedule, schedule_hash, Metadata};
use crate::error::{AppError, AppResult};
use crate::{csv_out, json, parallel};

#[derive(Debug, Parser)]
#[command(name = "stairwalk", version, about = "Random walk on stairs: schedules, simulation, exact laws, bounds and claim audit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, env = "STAIRWALK_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Embed version, profile and generator identifiers in the JSON.
    #[arg(long, global = true)]
    pub metadata: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a phase schedule and write it as JSON.
    Schedule(ScheduleCmd),
    /// Check the construction's claims on a paper-literal schedule.
    Audit(AuditCmd),
    /// Monte Carlo estimate of the per-phase success frequencies.
    Simulate(SimulateCmd),
    /// Certified enclosure of the divergence lower bound over a list of M.
    Bound(BoundCmd),
    /// Exact transient law of S_n by dynamic programming.
    Dp(DpCmd),
    /// Per-phase drift, gain and height conditions of a schedule.
    Feasibility(FeasibilityCmd),
    /// Domination margins of Z_i against the step law.
    Domination(DominationCmd),
    /// Constant-a and fast-growth control experiments.
    Control(ControlCmd),
    /// Compare the two-dimensional kernel against the flattened one.
    KernelCheck(KernelCheckCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    PaperLiteral,
    UserDesigned,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    /// a_i = max(8, 4 ln(i+2)), L_i = scale i^3.
    LogGrowth,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum M0MethodArg {
    ExactBinomial,
    HoeffdingConservative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Arithmetic {
    Float,
    Rational,
}

/// Where a command gets its schedule.
#[derive(Debug, Clone, Args)]
pub struct ScheduleSource {
    /// Schedule JSON written by `stairwalk schedule`.
    #[arg(long, conflicts_with_all = ["sigma", "profile", "template"])]
    pub schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// `paper`, `scaled`, or a profile JSON file.
    #[arg(long, default_value = "paper")]
    pub profile: String,
    /// Build a user-designed schedule from a template instead.
    #[arg(long, value_enum)]
    pub template: Option<TemplateArg>,
    /// Phases generated by the template.
    #[arg(long, default_value_t = 100)]
    pub template_phases: u64,
    /// Phase-length multiplier of the template.
    #[arg(long, default_value_t = 100)]
    pub scale: u64,
}

impl ScheduleSource {
    pub fn resolve(&self) -> AppResult<PhaseSchedule> {
        check_sigma(self.sigma)?;
        if let Some(path) = &self.schedule {
            return load_schedule(path);
        }
        let profile = load_profile(&self.profile)?;
        match self.template {
            Some(TemplateArg::LogGrowth) => {
                Ok(log_growth_template(self.sigma, &profile, self.template_phases.max(2), self.scale)?)
            }
            None => Ok(build_paper_schedule_with(self.sigma, &profile, PaperScheduleOptions::default())?),
        }
    }
}

fn check_sigma(sigma: f64) -> AppResult<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(AppError::Usage(format!("--sigma must lie in (0, 1), got {sigma}")))
    }
}

#[derive(Debug, Args)]
pub struct ScheduleCmd {
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// `paper`, `scaled`, or a profile JSON file.
    #[arg(long, default_value = "paper")]
    pub profile: String,
    #[arg(long, value_enum, default_value = "paper-literal")]
    pub mode: ModeArg,
    /// Phase file (JSON list of {length, a, threshold}); required for user-designed mode.
    #[arg(long)]
    pub phases: Option<PathBuf>,
    /// Failure budget of phase 1 (default sigma/2).
    #[arg(long)]
    pub sigma_phase1: Option<f64>,
    #[arg(long, value_enum, default_value = "hoeffding-conservative")]
    pub m0_method: M0MethodArg,
    /// Generate a user-designed schedule from a template.
    #[arg(long, value_enum, conflicts_with = "phases")]
    pub template: Option<TemplateArg>,
    #[arg(long, default_value_t = 100)]
    pub i_max: u64,
    #[arg(long, default_value_t = 100)]
    pub scale: u64,
    /// Also write the (i, N_i, a_i, T_i) table for the first phases.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditCmd {
    #[command(flatten)]
    pub source: ScheduleSource,
    #[arg(long, default_value_t = 10_000)]
    pub i_max: u64,
    #[arg(long, default_value_t = 1_000)]
    pub x_depth: u64,
    /// Range for C7 (heights) and C8 (positions); default covers the C5 grid.
    #[arg(long)]
    pub x_max: Option<u64>,
    /// Run a single claim (C1..C8).
    #[arg(long)]
    pub claim: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub source: ScheduleSource,
    /// Number of phases to simulate.
    #[arg(long, default_value_t = 5)]
    pub phases: u64,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep simulating after a failed phase event.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Per-phase statistics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Dump (replication, n, s) checkpoints of the first replications as CSV.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub trajectory_count: u64,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Upper limit on simulated steps (replications times N_phases).
    #[arg(long, default_value_t = 20_000_000_000)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct BoundCmd {
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Values of M, comma separated.
    #[arg(long = "m", value_delimiter = ',', default_values_t = [100u64, 1_000, 10_000, 100_000])]
    pub m: Vec<u64>,
    #[arg(long = "k", default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    pub truncation: u64,
}

#[derive(Debug, Args)]
pub struct DpCmd {
    #[command(flatten)]
    pub source: ScheduleSource,
    #[arg(long)]
    pub horizon: u64,
    #[arg(long, value_enum, default_value = "float")]
    pub arithmetic: Arithmetic,
    /// Law dump as CSV (n, s, mass).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Dump only the laws at phase boundaries N_i <= horizon (and the horizon).
    #[arg(long)]
    pub boundaries_only: bool,
    #[arg(long, default_value_t = DEFAULT_HORIZON_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct FeasibilityCmd {
    #[command(flatten)]
    pub source: ScheduleSource,
    #[arg(long, default_value_t = 100)]
    pub i_max: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DominationCmd {
    #[command(flatten)]
    pub source: ScheduleSource,
    #[arg(long, default_value_t = 2)]
    pub i: u64,
    /// Last phase checked (default: same as --i).
    #[arg(long)]
    pub i_hi: Option<u64>,
    #[arg(long, default_value_t = 1_000)]
    pub x_depth: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ControlCmd {
    /// Constant parameter a (>= 8).
    #[arg(long, conflicts_with = "fast_growth")]
    pub a: Option<f64>,
    /// a_n = n^2 + 8.
    #[arg(long)]
    pub fast_growth: bool,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct KernelCheckCmd {
    #[arg(long, default_value_t = 1_000)]
    pub x_max: u64,
    /// Values of a as decimals or p/q; `a2` stands for the paper's a_2.
    #[arg(long = "a", value_delimiter = ',', default_values = ["8", "a2", "100", "1000000"])]
    pub a: Vec<String>,
}

/// Writes the JSON result and the human summary.
fn emit(global: &GlobalArgs, value: &impl Serialize, summary: &str) -> AppResult<()> {
    let text = json::to_string(value).map_err(|source| AppError::Parse { path: "<output>".into(), source })?;
    match &global.out {
        Some(path) => {
            std::fs::write(path, text).map_err(AppError::io(path))?;
            print!("{summary}");
        }
        None => {
            print!("{text}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(AppError::io(path))?))
}

fn with_metadata<T: Serialize>(global: &GlobalArgs, body: T, meta: Metadata) -> serde_json::Value {
    let mut value = serde_json::to_value(body).expect("outputs serialize");
    if global.metadata {
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("metadata".into(), serde_json::to_value(meta).expect("metadata serializes"));
        }
    }
    value
}

pub fn run(cli: Cli) -> AppResult<()> {
    let threads = cli.global.threads;
    parallel::with_threads(threads, || match &cli.command {
        Command::Schedule(c) => cmd_schedule(&cli.global, c),
        Command::Audit(c) => cmd_audit(&cli.global, c),
        Command::Simulate(c) => cmd_simulate(&cli.global, c),
        Command::Bound(c) => cmd_bound(&cli.global, c),
        Command::Dp(c) => cmd_dp(&cli.global, c),
        Command::Feasibility(c) => cmd_feasibility(&cli.global, c),
        Command::Domination(c) => cmd_domination(&cli.global, c),
        Command::Control(c) => cmd_control(&cli.global, c),
        Command::KernelCheck(c) => cmd_kernel_check(&cli.global, c),
    })
}

pub fn build_schedule(c: &ScheduleCmd) -> AppResult<PhaseSchedule> {
    check_sigma(c.sigma)?;
    let profile = load_profile(&c.profile)?;
    if let Some(TemplateArg::LogGrowth) = c.template {
        return Ok(log_growth_template(c.sigma, &profile, c.i_max.max(2), c.scale)?);
    }
    match c.mode {
        ModeArg::PaperLiteral => {
            if c.phases.is_some() {
                return Err(AppError::Usage("--phases only applies to --mode user-designed".into()));
            }
            let options = PaperScheduleOptions {
                sigma_phase1: c.sigma_phase1,
                m0_method: match c.m0_method {
                    M0MethodArg::ExactBinomial => M0Method::ExactBinomial,
                    M0MethodArg::HoeffdingConservative => M0Method::HoeffdingConservative,
                },
            };
            Ok(build_paper_schedule_with(c.sigma, &profile, options)?)
        }
        ModeArg::UserDesigned => {
            let path = c
                .phases
                .as_ref()
                .ok_or_else(|| AppError::Usage("--mode user-designed requires --phases <FILE>".into()))?;
            let phases = load_phases(path)?;
            let sigma_phase1 = c.sigma_phase1.unwrap_or(c.sigma / 2.0);
            Ok(PhaseSchedule::user_designed(c.sigma, sigma_phase1, &profile, phases)?)
        }
    }
}

fn schedule_summary(s: &PhaseSchedule, rows: u64) -> AppResult<String> {
    let mut out = format!(
        "mode {:?}, sigma {}, M = {}, M0 = {}, hash {}\n   i          N_i                    a_i        T_i\n",
        s.mode,
        s.sigma,
        s.big_m,
        s.m0,
        &schedule_hash(s)[..16]
    );
    let last = s.phase_count().map_or(rows, |c| c.min(rows));
    for i in 1..=last {
        out += &format!(
            "{:>4} {:>12} {:>22} {:>10}\n",
            i,
            s.boundary(i)?,
            json::real(s.a_of_phase(i)?),
            s.threshold(i)?
        );
    }
    Ok(out)
}

fn cmd_schedule(global: &GlobalArgs, c: &ScheduleCmd) -> AppResult<()> {
    let schedule = build_schedule(c)?;
    if let Some(path) = &c.csv {
        csv_out::schedule_table(create(path)?, &schedule, 10)?;
    }
    let summary = schedule_summary(&schedule, 10)?;
    if global.metadata {
        let doc = json!({ "schedule": schedule, "metadata": Metadata::for_schedule(&schedule) });
        emit(global, &doc, &summary)
    } else {
        emit(global, &schedule, &summary)
    }
}

fn audit_table(claims: &[ClaimResult]) -> String {
    let mut out = format!("{:<5} {:<12} {:<10} {}\n", "claim", "verdict", "witness", "range");
    for c in claims {
        let witness = c.witness.as_ref().map_or("-".to_string(), |w| w.index.to_string());
        out += &format!("{:<5} {:<12} {:<10} {}\n", c.claim_id, c.verdict.to_string(), witness, c.range_checked);
    }
    out
}

fn cmd_audit(global: &GlobalArgs, c: &AuditCmd) -> AppResult<()> {
    let schedule = c.source.resolve()?;
    if schedule.mode != ScheduleMode::PaperLiteral {
        return Err(AppError::Usage("audit expects a paper-literal schedule".into()));
    }
    if c.i_max < 2 {
        return Err(AppError::Usage("--i-max must be at least 2".into()));
    }
    let meta = Metadata::for_schedule(&schedule);
    if let Some(id) = &c.claim {
        let mut params = AuditParams::new(c.i_max, c.x_depth);
        if let Some(x) = c.x_max {
            params.x_max = x;
        }
        let result = audit_single(id, &schedule, &params).map_err(|e| match e {
            stairwalk_core::Error::UnknownClaim(id) => AppError::Usage(format!("unknown claim {id}; expected C1..C8")),
            e => e.into(),
        })?;
        let summary = audit_table(std::slice::from_ref(&result));
        let doc = with_metadata(global, json!({ "claims": [result] }), meta);
        return emit(global, &doc, &summary);
    }
    let report: AuditReport = match c.x_max {
        None => parallel::audit_all(&schedule, c.i_max, c.x_depth)?,
        Some(x_max) => {
            let params = AuditParams { i_max: c.i_max, x_depth: c.x_depth, x_max };
            let claims = stairwalk_core::verifier::CLAIM_IDS
                .iter()
                .map(|id| audit_single(id, &schedule, &params))
                .collect::<Result<Vec<_>, _>>()?;
            let consistency = stairwalk_core::verifier::c2_c3_consistency(&schedule, c.i_max)?;
            stairwalk_core::verifier::assemble_report(claims, consistency)
        }
    };
    let mut summary = audit_table(&report.claims);
    let k = &report.c2_c3_consistency;
    summary += &format!(
        "C2/C3 consistency: upeq holds at {} indices, consistent = {}\n",
        k.upeq_holds_at, k.consistent
    );
    emit(global, &with_metadata(global, &report, meta), &summary)
}

fn cmd_simulate(global: &GlobalArgs, c: &SimulateCmd) -> AppResult<()> {
    let schedule = c.source.resolve()?;
    if c.phases < 1 || c.reps < 1 {
        return Err(AppError::Usage("--phases and --reps must be positive".into()));
    }
    if let Some(count) = schedule.phase_count() {
        if c.phases > count {
            return Err(AppError::Usage(format!("the schedule defines only {count} phases")));
        }
    }
    let horizon = schedule.boundary(c.phases)?;
    let steps = horizon.saturating_mul(c.reps);
    if steps > c.max_steps {
        return Err(AppError::Resource(format!(
            "{} replications through N_{} = {horizon} need {steps} steps, above --max-steps {}; \
             try --profile scaled or fewer phases",
            c.reps, c.phases, c.max_steps
        )));
    }
    let config = SimConfig { early_stop: !c.no_early_stop, checkpoint_every: c.checkpoint_every };
    let stats = parallel::run_experiment(&schedule, c.phases, c.reps, c.seed, &config)?;
    if let Some(path) = &c.csv {
        csv_out::phase_stats(create(path)?, &stats)?;
    }
    if let Some(path) = &c.trajectories {
        let dump: Vec<_> = (0..c.trajectory_count.min(c.reps))
            .map(|r| run_replication(&schedule, c.phases, ReplicationSeed::new(c.seed, r), &config))
            .collect::<Result<_, _>>()?;
        csv_out::trajectories(create(path)?, &dump)?;
    }
    let mut summary = String::from("   i   attempts  successes     frequency  wilson99\n");
    for p in &stats.per_phase {
        summary += &format!(
            "{:>4} {:>10} {:>10} {:>13.6} [{:.6}, {:.6}]\n",
            p.i, p.attempts, p.successes, p.frequency, p.wilson99.lo, p.wilson99.hi
        );
    }
    summary += &format!("all phases: {:.6}\n", stats.product_estimate);
    let doc = json!({
        "schedule_hash": schedule_hash(&schedule),
        "replications": stats.replications,
        "phases": stats.max_phase,
        "per_phase": stats.per_phase,
        "product_estimate": stats.product_estimate,
        "product_wilson99": stats.product_wilson99,
        "product_standard_error": stats.product_standard_error,
        "metadata": Metadata::for_schedule(&schedule).with_seed(c.seed),
    });
    emit(global, &doc, &summary)
}

fn cmd_bound(global: &GlobalArgs, c: &BoundCmd) -> AppResult<()> {
    check_sigma(c.sigma)?;
    if c.m.is_empty() {
        return Err(AppError::Usage("--m needs at least one value".into()));
    }
    let report = if c.truncation == DEFAULT_TRUNCATION {
        product_limit_check(c.sigma, c.k, &c.m)?
    } else {
        let mut r = product_limit_check(c.sigma, c.k, &c.m)?;
        for e in &mut r.entries {
            e.bound = stairwalk_core::bounds::divergence_lower_bound_truncated(c.sigma, e.big_m, c.k, c.truncation)?;
        }
        r
    };
    let mut summary = format!("sigma {}, K {}, supremum {}\n", c.sigma, c.k, report.supremum);
    for e in &report.entries {
        summary += &format!(
            "M = {:>10}  bound in [{}, {}]  > sigma: {}\n",
            e.big_m,
            json::real(e.bound.lo),
            json::real(e.bound.hi),
            e.exceeds_sigma
        );
    }
    emit(global, &with_metadata(global, &report, Metadata::new()), &summary)
}

/// Phase events evaluated on exact laws: `(i, N_i, T_i, strict, probability)`.
fn phase_events<T: LawArithmetic>(schedule: &PhaseSchedule, laws: &[TransientLaw<T>]) -> AppResult<Vec<(u64, u64, u64, bool, T)>> {
    let mut events = Vec::new();
    let mut i = 1;
    loop {
        if schedule.phase_count().is_some_and(|c| i > c) {
            break;
        }
        let n = schedule.boundary(i)?;
        let Some(law) = laws.iter().find(|l| l.n == n) else { break };
        let t = schedule.threshold(i)?;
        events.push((i, n, t, i == 1, law.tail(t as i64, i == 1)));
        i += 1;
    }
    Ok(events)
}

fn boundaries_up_to(schedule: &PhaseSchedule, horizon: u64) -> AppResult<Vec<u64>> {
    let mut points = vec![horizon];
    let mut i = 1;
    while schedule.phase_count().is_none_or(|c| i <= c) {
        let n = schedule.boundary(i)?;
        if n > horizon {
            break;
        }
        points.push(n);
        i += 1;
    }
    points.sort_unstable();
    points.dedup();
    Ok(points)
}

fn dp_typed<T: LawArithmetic + csv_out::MassCell>(
    c: &DpCmd,
    schedule: &PhaseSchedule,
    render: impl Fn(&T) -> serde_json::Value,
) -> AppResult<(serde_json::Value, String)> {
    let points = boundaries_up_to(schedule, c.horizon)?;
    let laws: Vec<TransientLaw<T>> = if c.boundaries_only || c.csv.is_none() {
        transient_laws_at(&points, schedule, c.budget)?
    } else {
        transient_law_sequence(c.horizon, schedule, c.budget)?
    };
    if let Some(path) = &c.csv {
        let dump: Vec<_> = if c.boundaries_only {
            laws.clone()
        } else {
            laws.iter().filter(|l| l.n <= c.horizon).cloned().collect()
        };
        csv_out::laws(create(path)?, &dump)?;
    }
    let events = phase_events(schedule, &laws)?;
    let last = laws.iter().find(|l| l.n == c.horizon).expect("horizon law is computed");
    let mut summary = format!("horizon {}, total mass {}\n", c.horizon, last.total().to_f64());
    for (i, n, t, strict, p) in &events {
        summary += &format!(
            "phase {i}: P(S_{n} {} {t}) = {}\n",
            if *strict { ">" } else { ">=" },
            json::real(p.to_f64())
        );
    }
    let doc = json!({
        "horizon": c.horizon,
        "total_mass": render(&last.total()),
        "events": events.iter().map(|(i, n, t, strict, p)| json!({
            "i": i, "n": n, "threshold": t, "strict": strict, "probability": render(p),
            "probability_f64": p.to_f64(),
        })).collect::<Vec<_>>(),
        "final_law": last.mass.iter().map(&render).collect::<Vec<_>>(),
    });
    Ok((doc, summary))
}

fn cmd_dp(global: &GlobalArgs, c: &DpCmd) -> AppResult<()> {
    let schedule = c.source.resolve()?;
    let (mut doc, summary) = match c.arithmetic {
        Arithmetic::Float => dp_typed::<f64>(c, &schedule, |x| json!(x))?,
        Arithmetic::Rational => dp_typed::<BigRational>(c, &schedule, |x| json!(rational_string(x)))?,
    };
    doc["arithmetic"] = json!(match c.arithmetic {
        Arithmetic::Float => "float",
        Arithmetic::Rational => "rational",
    });
    emit(global, &with_metadata(global, doc, Metadata::for_schedule(&schedule)), &summary)
}

fn cmd_feasibility(global: &GlobalArgs, c: &FeasibilityCmd) -> AppResult<()> {
    let schedule = c.source.resolve()?;
    let i_max = match schedule.phase_count() {
        Some(count) => c.i_max.min(count),
        None => c.i_max,
    };
    if i_max < 2 {
        return Err(AppError::Usage("feasibility needs at least two phases".into()));
    }
    let report = check_schedule_feasibility(&schedule, i_max)?;
    if let Some(path) = &c.csv {
        csv_out::feasibility(create(path)?, &report)?;
    }
    let summary = match &report.first_violation {
        Some(v) => format!("first violation at phase {}: {}\n", v.i, v.reason),
        None => format!("all {} phases ok\n", report.phases.len()),
    };
    emit(global, &with_metadata(global, &report, Metadata::for_schedule(&schedule)), &summary)
}

fn cmd_domination(global: &GlobalArgs, c: &DominationCmd) -> AppResult<()> {
    let schedule = c.source.resolve()?;
    let i_hi = c.i_hi.unwrap_or(c.i);
    if c.i < 2 || i_hi < c.i {
        return Err(AppError::Usage("need 2 <= --i <= --i-hi".into()));
    }
    let rows = parallel::domination_rows(&schedule, c.i, i_hi, c.x_depth)?;
    if let Some(path) = &c.csv {
        csv_out::domination(create(path)?, &rows)?;
    }
    let mut per_phase = Vec::new();
    for i in c.i..=i_hi {
        let phase: Vec<_> = rows.iter().filter(|r| r.i == i).collect();
        let min_c = phase.iter().map(|r| r.c_margin).fold(f64::INFINITY, f64::min);
        let min_b = phase.iter().map(|r| r.b_margin).fold(f64::INFINITY, f64::min);
        let holds = min_c >= -stairwalk_core::domination::MARGIN_GUARD
            && min_b >= -stairwalk_core::domination::MARGIN_GUARD;
        per_phase.push(json!({ "i": i, "min_c_margin": min_c, "min_b_margin": min_b, "holds": holds }));
    }
    let violations = per_phase.iter().filter(|p| p["holds"] == json!(false)).count();
    let summary = format!("{} phases checked, {} with violations\n", per_phase.len(), violations);
    let doc = json!({ "x_depth": c.x_depth, "phases": per_phase });
    emit(global, &with_metadata(global, doc, Metadata::for_schedule(&schedule)), &summary)
}

fn cmd_control(global: &GlobalArgs, c: &ControlCmd) -> AppResult<()> {
    let mode = match (c.a, c.fast_growth) {
        (Some(a), false) => ControlMode::Constant { a },
        (None, true) => ControlMode::FastGrowth,
        _ => return Err(AppError::Usage("pass exactly one of --a <A> or --fast-growth".into())),
    };
    let summary_doc = parallel::run_control(mode, c.horizon, c.reps, c.seed)?;
    let summary = format!(
        "drift {:.6}, final S quantiles {:?}, monotone {:.4}, tail mode {}, low-state fraction {:.4}\n",
        summary_doc.mean_drift,
        summary_doc.final_s_quantiles,
        summary_doc.monotone_fraction,
        summary_doc.tail_mode,
        summary_doc.tail_low_fraction
    );
    emit(global, &with_metadata(global, &summary_doc, Metadata::new().with_seed(c.seed)), &summary)
}

fn cmd_kernel_check(global: &GlobalArgs, c: &KernelCheckCmd) -> AppResult<()> {
    let values = c
        .a
        .iter()
        .map(|s| match s.as_str() {
            "a2" => Ok(paper_a::<BigRational>(2, &ConstantsProfile::paper())),
            text => parse_rational(text).ok_or_else(|| AppError::Usage(format!("cannot parse a = {text}"))),
        })
        .collect::<AppResult<Vec<_>>>()?;
    let report = kernel_equivalence_check(c.x_max, &values)?;
    let mut summary = String::new();
    for v in &report.variants {
        summary += &format!("{:?}: {} states, {} mismatches\n", v.variant, v.states_checked, v.mismatches.len());
    }
    emit(global, &with_metadata(global, &report, Metadata::new()), &summary)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
