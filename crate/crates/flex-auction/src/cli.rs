//! Configuration ingestion and the `flexauction` command-line interface:
//! model validation, auction runs on explicit profiles, the verification
//! suite, oracle cross-checks and revenue estimation, all reproducible
//! under an explicit seed.
//!
//! Exit codes: 0 = all checks passed, 1 = a check failed, 2 = bad input
//! (malformed config/profile, oracle capacity exceeded).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{ConsumerTypeModel, ModelFile};
use crate::error::{Error, Result};
use crate::flex::{DemandProfile, FlexibilityStructure};
use crate::mechanism::{
    allocate, critical_bid, run_auction, run_auction_seeded_ties, AuctionOutcome, TypeProfile,
};
use crate::oracle::{
    brute_force_allocation, brute_force_allocation_matrices, brute_force_removals,
    payment_by_integral,
};
use crate::verify::{
    check_bic, check_interim_boundary, check_ir_expost, check_monotonicity,
    check_payment_identity, digest_of, estimate_revenue, gen, Mechanism, OptimalMechanism,
    ReserveOnlyPayments, VerificationReport,
};

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// One consumer in a config: either inline or a path to a model file,
/// resolved relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConsumerSource {
    File { file: String },
    Inline(ModelFile),
}

/// Experiment configuration: the flexibility structure, the consumer
/// models and defaults for the stochastic commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub structure: StructureSpec,
    pub consumers: Vec<ConsumerSource>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub tie_break: Option<TieBreakMode>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureSpec {
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakMode {
    Index,
    Random,
}

/// A reported type profile, one entry per consumer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub theta: Vec<f64>,
    pub b: Vec<usize>,
}

/// Fully loaded and validated experiment: structure plus one model per
/// consumer, all sharing the structure's level count.
#[derive(Debug)]
pub struct Economy {
    pub config: ExperimentConfig,
    pub structure: FlexibilityStructure,
    pub models: Vec<ConsumerTypeModel>,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// Load a config file and every model it references.
pub fn load_economy(config_path: &Path) -> Result<Economy> {
    let config: ExperimentConfig =
        parse_json(&read_to_string(config_path)?, &config_path.display().to_string())?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported schema version {}, expected {SCHEMA_VERSION}",
            config.schema_version
        )));
    }
    let structure = FlexibilityStructure::new(config.structure.m.clone())?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let mut models = Vec::with_capacity(config.consumers.len());
    for (i, source) in config.consumers.iter().enumerate() {
        let spec = match source {
            ConsumerSource::Inline(spec) => spec.clone(),
            ConsumerSource::File { file } => {
                let path = base.join(file);
                parse_json(&read_to_string(&path)?, &path.display().to_string())?
            }
        };
        let model = ConsumerTypeModel::from_file_spec(&spec)
            .map_err(|e| Error::Parse(format!("consumer {i}: {e}")))?;
        if model.k() != structure.k() {
            return Err(Error::Parse(format!(
                "consumer {i} has {} levels but the structure has {}",
                model.k(),
                structure.k()
            )));
        }
        models.push(model);
    }
    Ok(Economy { config, structure, models })
}

pub fn load_profile(path: &Path) -> Result<TypeProfile> {
    let file: ProfileFile = parse_json(&read_to_string(path)?, &path.display().to_string())?;
    TypeProfile::new(file.theta, file.b)
}

#[derive(Parser, Debug)]
#[command(
    name = "flexauction",
    about = "Optimal auctions for flexible consumers with nested flexibility sets",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate the distributional assumptions of every consumer model.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Hazard grid resolution.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Run the auction on a reported type profile.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        tie_break: Option<TieBreakMode>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the verification suite against the configured economy.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Verify the verifier: swap in the broken charge-the-reserve
        /// payment rule, which must fail the incentive check.
        #[arg(long)]
        negative_control: bool,
    },
    /// Cross-check the engine against brute-force oracles on random
    /// small instances.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random instances.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also cross-check against direct allocation-matrix enumeration
        /// on the smallest instances.
        #[arg(long)]
        matrices: bool,
    },
    /// Estimate expected revenue and the virtual-surplus identity.
    Revenue {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point for the binary: parse, dispatch, map errors to exit codes.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Validate { config, grid } => cmd_validate(&config, grid),
        Command::Run { config, profile, out, tie_break, seed } => {
            cmd_run(&config, &profile, out.as_deref(), tie_break, seed)
        }
        Command::Verify { config, seed, samples, trials, out, workers, negative_control } => {
            cmd_verify(&config, seed, samples, trials, out.as_deref(), workers, negative_control)
        }
        Command::OracleCheck { config, seed, trials, out, matrices } => {
            cmd_oracle_check(&config, seed, trials, out.as_deref(), matrices)
        }
        Command::Revenue { config, seed, trials, out } => {
            cmd_revenue(&config, seed, trials, out.as_deref())
        }
    }
}

fn require_seed(flag: Option<u64>, config: &ExperimentConfig) -> Result<u64> {
    flag.or(config.seed).ok_or_else(|| {
        Error::Parse("a seed is required for stochastic commands (--seed or config)".into())
    })
}

fn write_output<T: Serialize>(value: &T, out: Option<&Path>) -> Result<String> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing output: {e}")))?;
    json.push('\n');
    if let Some(path) = out {
        std::fs::write(path, &json).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(json)
}

/// Report emitted by `validate`.
#[derive(Debug, Serialize)]
struct ValidateReport {
    schema_version: u32,
    consumers: Vec<ConsumerValidation>,
    weak_hazard_ok: bool,
    strict_hazard_ok: bool,
    negative_reserve_ok: bool,
}

#[derive(Debug, Serialize)]
struct ConsumerValidation {
    consumer: usize,
    hazard: crate::dist::HazardReport,
    negative_reserve: Vec<bool>,
}

fn cmd_validate(config_path: &Path, grid: usize) -> Result<i32> {
    let economy = load_economy(config_path)?;
    let mut consumers = Vec::new();
    let mut weak_ok = true;
    let mut strict_ok = true;
    let mut reserve_ok = true;
    for (i, model) in economy.models.iter().enumerate() {
        let hazard = model.validate_hazard(grid)?;
        let negative_reserve = model.validate_negative_reserve();
        weak_ok &= hazard.weak_ok;
        strict_ok &= hazard.strict_ok;
        reserve_ok &= negative_reserve.iter().all(|&ok| ok);
        println!(
            "consumer {i}: weak hazard {}, strict hazard {}, negative reserve {}",
            if hazard.weak_ok { "ok" } else { "VIOLATED" },
            if hazard.strict_ok { "ok" } else { "violated" },
            if negative_reserve.iter().all(|&ok| ok) { "ok" } else { "VIOLATED" },
        );
        consumers.push(ConsumerValidation { consumer: i, hazard, negative_reserve });
    }
    if !strict_ok {
        eprintln!(
            "warning: strict hazard ordering does not hold; thresholds may tie across levels"
        );
    }
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        consumers,
        weak_hazard_ok: weak_ok,
        strict_hazard_ok: strict_ok,
        negative_reserve_ok: reserve_ok,
    };
    if let Some(out) = &economy.config.out {
        write_output(&report, Some(&config_path.parent().unwrap_or(Path::new(".")).join(out)))?;
    }
    Ok(if weak_ok && reserve_ok { 0 } else { 1 })
}

/// Outcome document emitted by `run`.
#[derive(Debug, Serialize)]
struct RunOutput {
    schema_version: u32,
    n_consumers: usize,
    n_goods: usize,
    profile: TypeProfile,
    /// `(consumer, good)` pairs, goods 1-based.
    assignments: Vec<(usize, usize)>,
    payments: Vec<f64>,
    winner_thresholds: Vec<(usize, f64)>,
    trace: crate::mechanism::AllocationTrace,
    w_thr: Vec<f64>,
}

fn run_output(outcome: &AuctionOutcome, profile: &TypeProfile, n_goods: usize) -> RunOutput {
    RunOutput {
        schema_version: SCHEMA_VERSION,
        n_consumers: profile.len(),
        n_goods,
        profile: profile.clone(),
        assignments: outcome.assignment.pairs.clone(),
        payments: outcome.payments.clone(),
        winner_thresholds: outcome.winner_thresholds.clone(),
        trace: outcome.trace.clone(),
        w_thr: outcome.thresholds.w_thr.clone(),
    }
}

fn cmd_run(
    config_path: &Path,
    profile_path: &Path,
    out: Option<&Path>,
    tie_break: Option<TieBreakMode>,
    seed: Option<u64>,
) -> Result<i32> {
    let economy = load_economy(config_path)?;
    let profile = load_profile(profile_path)?;
    let mode = tie_break.or(economy.config.tie_break).unwrap_or(TieBreakMode::Index);
    let outcome = match mode {
        TieBreakMode::Index => run_auction(&economy.models, &economy.structure, &profile)?,
        TieBreakMode::Random => {
            let seed = require_seed(seed, &economy.config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_auction_seeded_ties(&economy.models, &economy.structure, &profile, &mut rng)?
        }
    };
    let output = run_output(&outcome, &profile, economy.structure.total_goods());
    let json = write_output(&output, out)?;
    print!("{json}");
    Ok(0)
}

/// Full document emitted by `verify` and `oracle-check`.
#[derive(Debug, Serialize)]
struct SuiteReport {
    schema_version: u32,
    mechanism: String,
    seed: u64,
    samples: u64,
    trials: u64,
    grid: usize,
    config_digest: String,
    checks: Vec<VerificationReport>,
    passed: bool,
}

fn print_checks(checks: &[VerificationReport]) {
    for check in checks {
        println!(
            "{} {} (worst margin {:.6}{})",
            if check.passed { "PASS" } else { "FAIL" },
            check.check,
            check.worst_margin,
            check
                .worst_z
                .map(|z| format!(", z {z:.2}"))
                .unwrap_or_default(),
        );
        for line in &check.details {
            println!("     {line}");
        }
    }
}

fn economy_config_digest(economy: &Economy) -> String {
    let specs: Vec<_> = economy.models.iter().map(|m| m.to_file_spec()).collect();
    digest_of(&(economy.structure.increments(), specs))
}

/// Oracle-equivalence battery on profiles sampled from the economy itself:
/// the engine's winners must attain the brute-force optimum, and every
/// winner's payment must match the integral rule and its critical bid.
fn oracle_battery_on_economy(
    economy: &Economy,
    instances: u64,
    payment_instances: u64,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let digest = economy_config_digest(economy);
    if economy.models.len() > 19 {
        return Err(Error::Capacity(format!(
            "{} consumers is beyond the brute-force winner-set oracle; \
             use a smaller N/M configuration for verification",
            economy.models.len()
        )));
    }
    let mut alloc_worst: f64 = 0.0;
    let mut alloc_details = Vec::new();
    let mut pay_worst: f64 = 0.0;
    let mut pay_details = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX); // keep instance sampling apart from trial streams
    for instance in 0..instances {
        let profile = TypeProfile::sample_truthful(&economy.models, &mut rng);
        let allocation = allocate(&economy.models, &economy.structure, &profile)?;
        let engine_objective: f64 =
            allocation.winners.iter().map(|&i| allocation.virtual_values[i]).sum();
        let oracle = brute_force_allocation(
            &allocation.virtual_values,
            &profile.b,
            &economy.structure,
        )?;
        let gap = (oracle.objective - engine_objective).abs();
        if alloc_worst < gap {
            alloc_worst = gap;
        }
        if gap > 1e-12 && alloc_details.len() < 10 {
            alloc_details.push(format!(
                "instance {instance}: engine {engine_objective:.15} vs oracle {:.15}",
                oracle.objective
            ));
        }
        if instance < payment_instances {
            let outcome = run_auction(&economy.models, &economy.structure, &profile)?;
            for &(winner, payment) in &outcome.winner_thresholds {
                let integral =
                    payment_by_integral(&economy.models, &economy.structure, &profile, winner)?;
                let bid = critical_bid(&economy.models, &economy.structure, &profile, winner)?;
                let gap = (payment - integral).abs().max((payment - bid.theta).abs());
                if pay_worst < gap {
                    pay_worst = gap;
                }
                if gap > 1e-8 && pay_details.len() < 10 {
                    pay_details.push(format!(
                        "instance {instance} winner {winner}: payment {payment:.12}, \
                         integral {integral:.12}, critical bid {:.12}",
                        bid.theta
                    ));
                }
            }
        }
    }
    Ok(vec![
        VerificationReport {
            check: "oracle-allocation-equivalence".into(),
            passed: alloc_details.is_empty(),
            worst_margin: -alloc_worst,
            worst_z: None,
            samples: instances,
            seed,
            config_digest: digest.clone(),
            details: alloc_details,
        },
        VerificationReport {
            check: "payment-vs-integral-and-critical-bid".into(),
            passed: pay_details.is_empty(),
            worst_margin: -pay_worst,
            worst_z: None,
            samples: payment_instances,
            seed,
            config_digest: digest,
            details: pay_details,
        },
    ])
}

/// Exhaustive removal-optimality check over every demand/supply pair with
/// the given level count and per-level entries up to `max_entry`.
fn removal_grid_report(k: usize, max_entry: usize, digest: String) -> Result<VerificationReport> {
    let base = max_entry + 1;
    let combos = (base as u64).pow(k as u32);
    let mut mismatches = Vec::new();
    let mut checked = 0u64;
    for ncode in 0..combos {
        for mcode in 0..combos {
            let decode = |mut code: u64| -> Vec<usize> {
                (0..k)
                    .map(|_| {
                        let digit = (code % base as u64) as usize;
                        code /= base as u64;
                        digit
                    })
                    .collect()
            };
            let n = DemandProfile::new(decode(ncode));
            let m = decode(mcode);
            if m.iter().sum::<usize>() == 0 {
                continue;
            }
            let structure = FlexibilityStructure::new(m)?;
            let closed = crate::flex::minimal_removals(&n, &structure)?.total;
            let brute = brute_force_removals(&n, &structure)?;
            checked += 1;
            if closed != brute && mismatches.len() < 10 {
                mismatches.push(format!(
                    "n = {:?}, m = {:?}: closed form {closed}, brute force {brute}",
                    n.counts(),
                    structure.increments()
                ));
            }
        }
    }
    Ok(VerificationReport {
        check: "removal-optimality-grid".into(),
        passed: mismatches.is_empty(),
        worst_margin: if mismatches.is_empty() { 0.0 } else { -1.0 },
        worst_z: None,
        samples: checked,
        seed: 0,
        config_digest: digest,
        details: mismatches,
    })
}

fn with_worker_pool<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(f),
        _ => f(),
    }
}

fn cmd_verify(
    config_path: &Path,
    seed: Option<u64>,
    samples: Option<u64>,
    trials: Option<u64>,
    out: Option<&Path>,
    workers: Option<usize>,
    negative_control: bool,
) -> Result<i32> {
    let economy = load_economy(config_path)?;
    let seed = require_seed(seed, &economy.config)?;
    let samples = samples.or(economy.config.samples).unwrap_or(20_000);
    let trials = trials.or(economy.config.trials).unwrap_or(10_000);
    let grid = economy.config.grid.unwrap_or(9);
    let workers = workers.or(economy.config.workers);
    let digest = economy_config_digest(&economy);

    let optimal = OptimalMechanism;
    let broken = ReserveOnlyPayments;
    let mechanism: &dyn Mechanism =
        if negative_control { &broken } else { &optimal };

    let checks = with_worker_pool(workers, || -> Result<Vec<VerificationReport>> {
        let mut checks = Vec::new();
        checks.extend(oracle_battery_on_economy(&economy, 200, 50, seed)?);
        checks.push(removal_grid_report(
            economy.structure.k().min(3),
            4,
            digest.clone(),
        )?);
        for consumer in 0..economy.models.len() {
            checks.push(check_bic(
                mechanism,
                &economy.models,
                &economy.structure,
                consumer,
                grid,
                samples,
                seed,
            )?);
            checks.push(check_monotonicity(
                mechanism,
                &economy.models,
                &economy.structure,
                consumer,
                grid,
                samples,
                seed,
            )?);
            // The zero-payment boundary identity and the payment-integral
            // identity are only claimed when the virtual valuation is
            // negative at the bottom of the support; a consumer violating
            // that can win (and pay) at its lowest valuation, so both
            // checks are out of scope for it.
            if economy.models[consumer].validate_negative_reserve().iter().all(|&ok| ok) {
                checks.push(check_interim_boundary(
                    mechanism,
                    &economy.models,
                    &economy.structure,
                    consumer,
                    samples,
                    seed,
                )?);
                checks.push(check_payment_identity(
                    mechanism,
                    &economy.models,
                    &economy.structure,
                    consumer,
                    grid,
                    samples,
                    seed,
                )?);
            } else {
                eprintln!(
                    "note: consumer {consumer} violates the negative-reserve assumption; \
                     skipping its interim-boundary and payment-identity checks"
                );
            }
        }
        checks.push(check_ir_expost(
            mechanism,
            &economy.models,
            &economy.structure,
            trials,
            seed,
        )?);
        let revenue = estimate_revenue(&economy.models, &economy.structure, trials, seed)?;
        checks.push(revenue.identity_report(seed, digest.clone()));
        Ok(checks)
    })?;

    let passed = checks.iter().all(|c| c.passed);
    print_checks(&checks);
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        mechanism: mechanism.label().into(),
        seed,
        samples,
        trials,
        grid,
        config_digest: digest,
        checks,
        passed,
    };
    write_output(&report, out)?;
    println!("{}", if passed { "VERIFY PASS" } else { "VERIFY FAIL" });
    Ok(if passed { 0 } else { 1 })
}

fn cmd_oracle_check(
    config_path: &Path,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<&Path>,
    matrices: bool,
) -> Result<i32> {
    let economy = load_economy(config_path)?;
    let seed = require_seed(seed, &economy.config)?;
    let instances = trials.or(economy.config.trials).unwrap_or(300);
    let digest = economy_config_digest(&economy);

    let mut checks = Vec::new();
    // Battery on the configured economy itself.
    checks.extend(oracle_battery_on_economy(&economy, instances, instances.min(50), seed)?);
    checks.push(removal_grid_report(economy.structure.k().min(3), 4, digest.clone())?);

    // Battery on randomly generated small economies.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap: f64 = 0.0;
    let mut details = Vec::new();
    let mut matrix_worst: f64 = 0.0;
    let mut matrix_details = Vec::new();
    let mut matrix_checked = 0u64;
    for instance in 0..instances {
        let (structure, models) = gen::random_small_economy(&mut rng, gen::InstanceCaps::default());
        let profile = TypeProfile::sample_truthful(&models, &mut rng);
        let allocation = allocate(&models, &structure, &profile)?;
        let engine: f64 = allocation.winners.iter().map(|&i| allocation.virtual_values[i]).sum();
        let oracle = brute_force_allocation(&allocation.virtual_values, &profile.b, &structure)?;
        let gap = (oracle.objective - engine).abs();
        if worst_gap < gap {
            worst_gap = gap;
        }
        if gap > 1e-12 && details.len() < 10 {
            details.push(format!(
                "random instance {instance}: engine {engine:.15} vs oracle {:.15}",
                oracle.objective
            ));
        }
        if matrices {
            let m = structure.total_goods();
            let combos = ((m + 1) as u64).checked_pow(profile.len() as u32);
            if combos.map_or(false, |c| c <= 1_000_000) {
                let direct = brute_force_allocation_matrices(
                    &allocation.virtual_values,
                    &profile.b,
                    &structure,
                )?;
                let gap = (oracle.objective - direct).abs();
                matrix_checked += 1;
                if matrix_worst < gap {
                    matrix_worst = gap;
                }
                if gap > 1e-12 && matrix_details.len() < 10 {
                    matrix_details.push(format!(
                        "random instance {instance}: subset oracle {:.15} vs matrix oracle {direct:.15}",
                        oracle.objective
                    ));
                }
            }
        }
    }
    checks.push(VerificationReport {
        check: "oracle-allocation-random-instances".into(),
        passed: details.is_empty(),
        worst_margin: -worst_gap,
        worst_z: None,
        samples: instances,
        seed,
        config_digest: digest.clone(),
        details,
    });
    if matrices {
        checks.push(VerificationReport {
            check: "oracle-matrix-enumeration-cross-check".into(),
            passed: matrix_details.is_empty(),
            worst_margin: -matrix_worst,
            worst_z: None,
            samples: matrix_checked,
            seed,
            config_digest: digest.clone(),
            details: matrix_details,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    print_checks(&checks);
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        mechanism: "optimal-threshold".into(),
        seed,
        samples: instances,
        trials: instances,
        grid: 0,
        config_digest: digest,
        checks,
        passed,
    };
    write_output(&report, out)?;
    println!("{}", if passed { "ORACLE-CHECK PASS" } else { "ORACLE-CHECK FAIL" });
    Ok(if passed { 0 } else { 1 })
}

/// Document emitted by `revenue`.
#[derive(Debug, Serialize)]
struct RevenueOutput {
    schema_version: u32,
    seed: u64,
    trials: u64,
    estimate: crate::verify::RevenueEstimate,
    identity: VerificationReport,
}

fn cmd_revenue(
    config_path: &Path,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<&Path>,
) -> Result<i32> {
    let economy = load_economy(config_path)?;
    let seed = require_seed(seed, &economy.config)?;
    let trials = trials.or(economy.config.trials).unwrap_or(100_000);
    let digest = economy_config_digest(&economy);
    let estimate = estimate_revenue(&economy.models, &economy.structure, trials, seed)?;
    let identity = estimate.identity_report(seed, digest);
    let passed = identity.passed;
    println!(
        "revenue {:.6} +- {:.6}  virtual surplus {:.6} +- {:.6}  ({} trials)",
        estimate.revenue_mean,
        estimate.revenue_stderr,
        estimate.surplus_mean,
        estimate.surplus_stderr,
        trials
    );
    print_checks(std::slice::from_ref(&identity));
    let output = RevenueOutput { schema_version: SCHEMA_VERSION, seed, trials, estimate, identity };
    write_output(&output, out)?;
    Ok(if passed { 0 } else { 1 })
}
