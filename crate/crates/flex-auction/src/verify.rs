//! Monte Carlo verification of the auction's claimed properties: interim
//! allocation/payment estimates, Bayesian incentive compatibility, ex post
//! individual rationality, monotonicity, and the revenue/virtual-surplus
//! identity.
//!
//! All statistical checks use common random numbers: estimates being
//! compared share the exact same opponent draws, so their difference is
//! evaluated per trial and tested at three standard errors of that
//! difference. Trials run on independent derived rng streams
//! (seed, trial-index), so results are bit-identical for a fixed seed
//! regardless of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dist::ConsumerTypeModel;
use crate::error::{Error, Result};
use crate::flex::FlexibilityStructure;
use crate::mechanism::{run_auction, TypeProfile};

/// Trials per deterministic accumulation chunk. Fixed so that merged
/// statistics do not depend on the number of workers.
const CHUNK: u64 = 4096;

/// Statistical acceptance threshold, in standard errors.
const Z_LIMIT: f64 = 3.0;

/// What one consumer got out of one auction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumerOutcome {
    pub won: bool,
    pub payment: f64,
}

/// An auction rule under test: maps models, structure and a report profile
/// to per-consumer outcomes. The optimal mechanism implements this, and so
/// do the deliberately broken baselines used as negative controls.
pub trait Mechanism: Sync {
    fn label(&self) -> &'static str;
    fn execute(
        &self,
        models: &[ConsumerTypeModel],
        structure: &FlexibilityStructure,
        profile: &TypeProfile,
    ) -> Result<Vec<ConsumerOutcome>>;
}

/// The revenue-maximizing threshold auction.
pub struct OptimalMechanism;

impl Mechanism for OptimalMechanism {
    fn label(&self) -> &'static str {
        "optimal-threshold"
    }

    fn execute(
        &self,
        models: &[ConsumerTypeModel],
        structure: &FlexibilityStructure,
        profile: &TypeProfile,
    ) -> Result<Vec<ConsumerOutcome>> {
        let outcome = run_auction(models, structure, profile)?;
        Ok((0..profile.len())
            .map(|i| ConsumerOutcome { won: outcome.won(i), payment: outcome.payments[i] })
            .collect())
    }
}

/// Negative control: optimal allocation but every winner is charged its
/// reserve price instead of its threshold. Incentive compatibility breaks
/// because overbidding then raises the win probability at no cost.
pub struct ReserveOnlyPayments;

impl Mechanism for ReserveOnlyPayments {
    fn label(&self) -> &'static str {
        "reserve-only-payments"
    }

    fn execute(
        &self,
        models: &[ConsumerTypeModel],
        structure: &FlexibilityStructure,
        profile: &TypeProfile,
    ) -> Result<Vec<ConsumerOutcome>> {
        let outcome = run_auction(models, structure, profile)?;
        (0..profile.len())
            .map(|i| {
                let won = outcome.won(i);
                let payment =
                    if won { models[i].reserve_price(profile.b[i])? } else { 0.0 };
                Ok(ConsumerOutcome { won, payment })
            })
            .collect()
    }
}

/// Documented non-incentive-compatible baseline: the highest reported
/// valuation wins a good from its reported flexibility set and pays the
/// second-highest report; everyone else receives a good from their
/// reported set when one is left and pays a flat reserve. Kept as a
/// negative fixture for the incentive checks; never use this to sell
/// anything.
pub struct SecondPriceFlexible {
    pub reserve: f64,
}

impl Mechanism for SecondPriceFlexible {
    fn label(&self) -> &'static str {
        "naive-second-price"
    }

    fn execute(
        &self,
        _models: &[ConsumerTypeModel],
        structure: &FlexibilityStructure,
        profile: &TypeProfile,
    ) -> Result<Vec<ConsumerOutcome>> {
        let n = profile.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            profile.theta[b].partial_cmp(&profile.theta[a]).unwrap().then(a.cmp(&b))
        });
        let mut taken = vec![false; structure.total_goods() + 1];
        let mut outcomes = vec![ConsumerOutcome { won: false, payment: 0.0 }; n];
        let second_highest =
            order.get(1).map(|&i| profile.theta[i]).unwrap_or(self.reserve);
        for (rank, &i) in order.iter().enumerate() {
            let set_size = structure.set_size(profile.b[i]);
            let good = (1..=set_size).find(|&g| !taken[g]);
            if let Some(g) = good {
                taken[g] = true;
                let payment = if rank == 0 { second_highest } else { self.reserve };
                outcomes[i] = ConsumerOutcome { won: true, payment };
            }
        }
        Ok(outcomes)
    }
}

/// Streaming mean/variance accumulator with deterministic pairwise merge.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        }
    }
}

/// Short hex digest of any serializable configuration, for report headers.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("digest input must serialize");
    let hash = Sha256::digest(json.as_bytes());
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn economy_digest(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    extra: &impl Serialize,
) -> String {
    let specs: Vec<_> = models.iter().map(|m| m.to_file_spec()).collect();
    digest_of(&(specs, structure.increments(), serde_json::to_string(extra).unwrap()))
}

/// Rng stream for one trial: same seed, per-trial stream id.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Evaluate `mech` for `consumer` at every report in `points`, reusing one
/// opponent draw per trial across all points (common random numbers), and
/// reduce each trial to `stat_dim` statistics via `stat`. Returns one
/// accumulator per statistic.
fn grid_monte_carlo<M, F>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    points: &[(f64, usize)],
    samples: u64,
    seed: u64,
    stat_dim: usize,
    stat: F,
) -> Result<Vec<Welford>>
where
    M: Mechanism + ?Sized,
    F: Fn(&[ConsumerOutcome], &mut [f64]) + Sync,
{
    if consumer >= models.len() {
        return Err(Error::Domain(format!("consumer {consumer} outside the economy")));
    }
    let chunk_bounds: Vec<(u64, u64)> = (0..samples)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(samples)))
        .collect();
    let per_chunk: Vec<Result<Vec<Welford>>> = chunk_bounds
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = vec![Welford::default(); stat_dim];
            let mut phi = vec![0.0; stat_dim];
            let mut outcomes: Vec<ConsumerOutcome> = Vec::with_capacity(points.len());
            let lo = models[consumer].support().0;
            for trial in start..end {
                let mut rng = trial_rng(seed, trial);
                let mut theta = Vec::with_capacity(models.len());
                let mut b = Vec::with_capacity(models.len());
                for (j, model) in models.iter().enumerate() {
                    if j == consumer {
                        theta.push(lo);
                        b.push(1);
                    } else {
                        let (t, level) = model.sample(&mut rng);
                        theta.push(t);
                        b.push(level);
                    }
                }
                let mut profile = TypeProfile::new(theta, b)?;
                outcomes.clear();
                for &(r, c) in points {
                    profile.theta[consumer] = r;
                    profile.b[consumer] = c;
                    let result = mech.execute(models, structure, &profile)?;
                    outcomes.push(result[consumer]);
                }
                stat(&outcomes, &mut phi);
                for (w, &x) in acc.iter_mut().zip(phi.iter()) {
                    w.push(x);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut merged = vec![Welford::default(); stat_dim];
    for chunk in per_chunk {
        for (m, w) in merged.iter_mut().zip(chunk?) {
            *m = m.merge(w);
        }
    }
    Ok(merged)
}

/// Monte Carlo estimate of a consumer's interim win probability and
/// expected payment for one fixed report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterimEstimate {
    pub q_bar: f64,
    pub t_bar: f64,
    pub q_stderr: f64,
    pub t_stderr: f64,
    pub samples: u64,
}

/// Estimate the interim quantities of `consumer` reporting
/// `(valuation, level)` while everyone else reports truthfully.
pub fn estimate_interim<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    report: (f64, usize),
    samples: u64,
    seed: u64,
) -> Result<InterimEstimate> {
    let stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &[report],
        samples,
        seed,
        2,
        |outcomes, phi| {
            phi[0] = outcomes[0].won as u8 as f64;
            phi[1] = outcomes[0].payment;
        },
    )?;
    Ok(InterimEstimate {
        q_bar: stats[0].mean,
        t_bar: stats[1].mean,
        q_stderr: stats[0].stderr(),
        t_stderr: stats[1].stderr(),
        samples,
    })
}

/// Outcome of one verification check. `worst_z` is present for statistical
/// checks; deterministic checks report only the margin (fail iff negative).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_z: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub config_digest: String,
    pub details: Vec<String>,
}

/// Interior decile-style report grid: `grid_points` equally spaced
/// valuations strictly inside the support, per flexibility level.
pub fn report_grid(model: &ConsumerTypeModel, grid_points: usize) -> Vec<(f64, usize)> {
    let (lo, hi) = model.support();
    let span = hi - lo;
    let mut points = Vec::with_capacity(grid_points * model.k());
    for level in 1..=model.k() {
        for j in 1..=grid_points {
            points.push((lo + span * j as f64 / (grid_points + 1) as f64, level));
        }
    }
    points
}

fn statistical_verdict(mean: f64, stderr: f64) -> (bool, f64) {
    if stderr == 0.0 {
        (mean >= 0.0, if mean >= 0.0 { 0.0 } else { f64::NEG_INFINITY })
    } else {
        let z = mean / stderr;
        (z >= -Z_LIMIT, z)
    }
}

/// Check Bayesian incentive compatibility for `consumer` on a report grid:
/// for every true type on the grid and every misreport with a weakly lower
/// flexibility level, truthful interim utility must not fall short of the
/// misreport's by more than three standard errors of the paired
/// difference.
pub fn check_bic<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    grid_points: usize,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let points = report_grid(&models[consumer], grid_points);
    // Enumerate (true type, misreport) index pairs with c <= b.
    let pairs: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(a, &(_, b_level))| {
            points
                .iter()
                .enumerate()
                .filter(move |&(_, &(_, c_level))| c_level <= b_level)
                .map(move |(d, _)| (a, d))
        })
        .collect();
    let stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &points,
        samples,
        seed,
        pairs.len(),
        |outcomes, phi| {
            for (slot, &(a, d)) in phi.iter_mut().zip(&pairs) {
                let theta = points[a].0;
                let truth =
                    theta * outcomes[a].won as u8 as f64 - outcomes[a].payment;
                let deviation =
                    theta * outcomes[d].won as u8 as f64 - outcomes[d].payment;
                *slot = truth - deviation;
            }
        },
    )?;

    let mut passed = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_z = f64::INFINITY;
    let mut details = Vec::new();
    for (w, &(a, d)) in stats.iter().zip(&pairs) {
        let (ok, z) = statistical_verdict(w.mean, w.stderr());
        worst_margin = worst_margin.min(w.mean);
        worst_z = worst_z.min(z);
        if !ok {
            passed = false;
            if details.len() < 20 {
                details.push(format!(
                    "true ({:.6}, {}) gains {:.6} (z = {:.2}) by reporting ({:.6}, {})",
                    points[a].0, points[a].1, -w.mean, z, points[d].0, points[d].1
                ));
            }
        }
    }
    Ok(VerificationReport {
        check: format!("bic[{}][consumer {consumer}]", mech.label()),
        passed,
        worst_margin,
        worst_z: Some(worst_z),
        samples,
        seed,
        config_digest: economy_digest(models, structure, &(consumer, grid_points, samples, seed)),
        details,
    })
}

/// Check that the interim win probability is nondecreasing in the reported
/// valuation at each level, and in the reported level at each valuation,
/// via adjacent grid comparisons under common random numbers.
pub fn check_monotonicity<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    grid_points: usize,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let points = report_grid(&models[consumer], grid_points);
    let k = models[consumer].k();
    let idx = |level: usize, j: usize| (level - 1) * grid_points + j;
    // (higher point, lower point) pairs whose win-rate difference must be
    // nonnegative.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for level in 1..=k {
        for j in 1..grid_points {
            pairs.push((idx(level, j), idx(level, j - 1)));
        }
    }
    for level in 1..k {
        for j in 0..grid_points {
            pairs.push((idx(level + 1, j), idx(level, j)));
        }
    }
    let stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &points,
        samples,
        seed,
        pairs.len(),
        |outcomes, phi| {
            for (slot, &(hi, lo)) in phi.iter_mut().zip(&pairs) {
                *slot = outcomes[hi].won as u8 as f64 - outcomes[lo].won as u8 as f64;
            }
        },
    )?;

    let mut passed = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_z = f64::INFINITY;
    let mut details = Vec::new();
    for (w, &(hi, lo)) in stats.iter().zip(&pairs) {
        let (ok, z) = statistical_verdict(w.mean, w.stderr());
        worst_margin = worst_margin.min(w.mean);
        worst_z = worst_z.min(z);
        if !ok {
            passed = false;
            if details.len() < 20 {
                details.push(format!(
                    "win rate drops {:.6} (z = {:.2}) from ({:.6}, {}) to ({:.6}, {})",
                    -w.mean, z, points[lo].0, points[lo].1, points[hi].0, points[hi].1
                ));
            }
        }
    }
    Ok(VerificationReport {
        check: format!("monotonicity[{}][consumer {consumer}]", mech.label()),
        passed,
        worst_margin,
        worst_z: Some(worst_z),
        samples,
        seed,
        config_digest: economy_digest(models, structure, &(consumer, grid_points, samples, seed)),
        details,
    })
}

/// Check that the expected payment at the bottom of the support is zero for
/// every reportable level (no winner, no charge).
pub fn check_interim_boundary<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let lo = models[consumer].support().0;
    let points: Vec<(f64, usize)> = (1..=models[consumer].k()).map(|c| (lo, c)).collect();
    let dim = points.len();
    let stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &points,
        samples,
        seed,
        dim,
        |outcomes, phi| {
            for (slot, outcome) in phi.iter_mut().zip(outcomes) {
                *slot = outcome.payment;
            }
        },
    )?;
    let mut passed = true;
    let mut worst_margin = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut details = Vec::new();
    for (w, &(_, c)) in stats.iter().zip(&points) {
        // Two-sided: the mean payment must be indistinguishable from zero.
        let (ok, z) = if w.stderr() == 0.0 {
            (w.mean == 0.0, if w.mean == 0.0 { 0.0 } else { f64::INFINITY })
        } else {
            let z = w.mean / w.stderr();
            (z.abs() <= Z_LIMIT, z)
        };
        if worst_margin < w.mean {
            worst_margin = w.mean;
            worst_z = z;
        }
        if !ok {
            passed = false;
            details.push(format!(
                "expected payment {:.6} (z = {:.2}) at bottom valuation, level {c}",
                w.mean, z
            ));
        }
    }
    Ok(VerificationReport {
        check: format!("interim-boundary[{}][consumer {consumer}]", mech.label()),
        passed,
        worst_margin: -worst_margin,
        worst_z: Some(worst_z),
        samples,
        seed,
        config_digest: economy_digest(models, structure, &(consumer, samples, seed)),
        details,
    })
}

/// Check the interim payment identity on the report grid: expected payment
/// equals report times win rate minus the trapezoid integral of the win
/// rate below the report, within three standard errors plus the trapezoid
/// error bound for a monotone integrand.
pub fn check_payment_identity<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    consumer: usize,
    grid_points: usize,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let (lo, hi) = models[consumer].support();
    let k = models[consumer].k();
    let step = (hi - lo) / (grid_points + 1) as f64;
    // Trapezoid nodes: bottom of support plus the interior grid.
    let mut points: Vec<(f64, usize)> = Vec::new();
    for level in 1..=k {
        points.push((lo, level));
        for j in 1..=grid_points {
            points.push((lo + step * j as f64, level));
        }
    }
    let per_level = grid_points + 1;
    // One statistic per interior grid point: the identity residual.
    let mut labels = Vec::new();
    for level in 1..=k {
        for j in 1..=grid_points {
            labels.push((level, j));
        }
    }
    let dim = labels.len();
    let stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &points,
        samples,
        seed,
        dim,
        |outcomes, phi| {
            for (slot, &(level, j)) in phi.iter_mut().zip(&labels) {
                let base = (level - 1) * per_level;
                let at = |idx: usize| outcomes[base + idx].won as u8 as f64;
                let r = lo + step * j as f64;
                // Trapezoid over nodes 0..=j of the win indicator.
                let mut integral = 0.5 * (at(0) + at(j));
                for i in 1..j {
                    integral += at(i);
                }
                integral *= step;
                *slot = outcomes[base + j].payment - (r * at(j) - integral);
            }
        },
    )?;
    // Win-rate means at the nodes, for the quadrature error bound.
    let rate_stats = grid_monte_carlo(
        mech,
        models,
        structure,
        consumer,
        &points,
        samples,
        seed,
        points.len(),
        |outcomes, phi| {
            for (slot, outcome) in phi.iter_mut().zip(outcomes) {
                *slot = outcome.won as u8 as f64;
            }
        },
    )?;

    let mut passed = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_z: f64 = 0.0;
    let mut details = Vec::new();
    for (w, &(level, j)) in stats.iter().zip(&labels) {
        let base = (level - 1) * per_level;
        // For a monotone integrand the trapezoid error is at most half the
        // node spacing times the total rise.
        let rise = (rate_stats[base + j].mean - rate_stats[base].mean).max(0.0);
        let slack = Z_LIMIT * w.stderr() + 0.5 * step * rise;
        let margin = slack - w.mean.abs();
        let z = if w.stderr() > 0.0 { w.mean / w.stderr() } else { 0.0 };
        if margin <= worst_margin {
            worst_margin = margin;
            worst_z = z;
        }
        if margin < 0.0 {
            passed = false;
            if details.len() < 20 {
                details.push(format!(
                    "identity residual {:.6} exceeds slack {slack:.6} at ({:.6}, {level})",
                    w.mean,
                    lo + step * j as f64
                ));
            }
        }
    }
    Ok(VerificationReport {
        check: format!("payment-identity[{}][consumer {consumer}]", mech.label()),
        passed,
        worst_margin,
        worst_z: Some(worst_z),
        samples,
        seed,
        config_digest: economy_digest(models, structure, &(consumer, grid_points, samples, seed)),
        details,
    })
}

/// Ex post individual rationality over sampled truthful profiles: every
/// consumer's realized utility must be nonnegative and every non-winner's
/// payment exactly zero, in exact arithmetic.
pub fn check_ir_expost<M: Mechanism + ?Sized>(
    mech: &M,
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    trials: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let chunk_bounds: Vec<(u64, u64)> = (0..trials)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(trials)))
        .collect();
    let per_chunk: Vec<Result<(f64, Vec<String>)>> = chunk_bounds
        .par_iter()
        .map(|&(start, end)| {
            let mut worst = f64::INFINITY;
            let mut violations = Vec::new();
            for trial in start..end {
                let mut rng = trial_rng(seed, trial);
                let profile = TypeProfile::sample_truthful(models, &mut rng);
                let outcomes = mech.execute(models, structure, &profile)?;
                for (i, outcome) in outcomes.iter().enumerate() {
                    let utility =
                        profile.theta[i] * outcome.won as u8 as f64 - outcome.payment;
                    worst = worst.min(utility);
                    if utility < 0.0 {
                        violations.push(format!(
                            "trial {trial}: consumer {i} utility {utility:.9}"
                        ));
                    }
                    if !outcome.won && outcome.payment != 0.0 {
                        violations.push(format!(
                            "trial {trial}: loser {i} pays {}",
                            outcome.payment
                        ));
                    }
                }
            }
            Ok((worst, violations))
        })
        .collect();

    let mut worst_margin = f64::INFINITY;
    let mut details = Vec::new();
    for chunk in per_chunk {
        let (worst, violations) = chunk?;
        worst_margin = worst_margin.min(worst);
        for v in violations {
            if details.len() < 20 {
                details.push(v);
            }
        }
    }
    Ok(VerificationReport {
        check: format!("ir-expost[{}]", mech.label()),
        passed: details.is_empty(),
        worst_margin,
        worst_z: None,
        samples: trials,
        seed,
        config_digest: economy_digest(models, structure, &(trials, seed)),
        details,
    })
}

/// Monte Carlo revenue and virtual-surplus estimates for the optimal
/// mechanism under truthful play, with the statistics of their per-trial
/// difference (the two must agree in expectation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevenueEstimate {
    pub revenue_mean: f64,
    pub revenue_stderr: f64,
    pub surplus_mean: f64,
    pub surplus_stderr: f64,
    pub diff_mean: f64,
    pub diff_stderr: f64,
    pub trials: u64,
}

pub fn estimate_revenue(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    trials: u64,
    seed: u64,
) -> Result<RevenueEstimate> {
    let chunk_bounds: Vec<(u64, u64)> = (0..trials)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(trials)))
        .collect();
    let per_chunk: Vec<Result<[Welford; 3]>> = chunk_bounds
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = [Welford::default(); 3];
            for trial in start..end {
                let mut rng = trial_rng(seed, trial);
                let profile = TypeProfile::sample_truthful(models, &mut rng);
                let outcome = run_auction(models, structure, &profile)?;
                let revenue: f64 = outcome.payments.iter().sum();
                let surplus = outcome.virtual_surplus();
                acc[0].push(revenue);
                acc[1].push(surplus);
                acc[2].push(revenue - surplus);
            }
            Ok(acc)
        })
        .collect();
    let mut merged = [Welford::default(); 3];
    for chunk in per_chunk {
        let chunk = chunk?;
        for (m, w) in merged.iter_mut().zip(chunk) {
            *m = m.merge(w);
        }
    }
    Ok(RevenueEstimate {
        revenue_mean: merged[0].mean,
        revenue_stderr: merged[0].stderr(),
        surplus_mean: merged[1].mean,
        surplus_stderr: merged[1].stderr(),
        diff_mean: merged[2].mean,
        diff_stderr: merged[2].stderr(),
        trials,
    })
}

impl RevenueEstimate {
    /// Report on the revenue = virtual-surplus identity, judged on the
    /// paired per-trial difference.
    pub fn identity_report(&self, seed: u64, digest: String) -> VerificationReport {
        let (passed, z) = if self.diff_stderr == 0.0 {
            (self.diff_mean == 0.0, 0.0)
        } else {
            let z = self.diff_mean / self.diff_stderr;
            (z.abs() <= Z_LIMIT, z)
        };
        VerificationReport {
            check: "revenue-surplus-identity".into(),
            passed,
            worst_margin: -self.diff_mean.abs(),
            worst_z: Some(z),
            samples: self.trials,
            seed,
            config_digest: digest,
            details: vec![format!(
                "revenue {:.6} +- {:.6}, virtual surplus {:.6} +- {:.6}",
                self.revenue_mean, self.revenue_stderr, self.surplus_mean, self.surplus_stderr
            )],
        }
    }
}

/// Fixture economies used by the verification suites and the examples.
pub mod fixtures {
    use super::*;
    use crate::dist::PiecewiseLinearDensity;

    /// Two goods, two levels. Consumer 0's type is concentrated near
    /// valuation 1 at the outer level; consumer 1 is uniform over
    /// `[0.5, 2]` and over both levels. On this economy the naive
    /// second-price baseline is profitably manipulable (misreporting a low
    /// valuation drops the price to the flat reserve), which makes it the
    /// standard negative control for the incentive checks.
    pub fn naive_counterexample_economy() -> (FlexibilityStructure, Vec<ConsumerTypeModel>) {
        let structure = FlexibilityStructure::new(vec![1, 1]).unwrap();
        let narrow = PiecewiseLinearDensity::uniform(0.95, 1.05).unwrap();
        let anchored = ConsumerTypeModel::new(
            0,
            (0.95, 1.05),
            vec![0.0, 1.0],
            vec![narrow.clone(), narrow],
        )
        .unwrap();
        let wide = PiecewiseLinearDensity::uniform(0.5, 2.0).unwrap();
        let flexible = ConsumerTypeModel::new(
            1,
            (0.5, 2.0),
            vec![0.5, 0.5],
            vec![wide.clone(), wide],
        )
        .unwrap();
        (structure, vec![anchored, flexible])
    }

    /// Identical consumers, level-independent uniform valuations on
    /// `[0, 1]`, two levels with equal mass, one good per level tier.
    pub fn iid_uniform_economy(consumers: usize) -> (FlexibilityStructure, Vec<ConsumerTypeModel>) {
        let structure = FlexibilityStructure::new(vec![1, 1]).unwrap();
        let models = (0..consumers)
            .map(|i| ConsumerTypeModel::uniform(i, 2, 0.0, 1.0).unwrap())
            .collect();
        (structure, models)
    }

    /// Three levels with strictly hazard-ordered linear-ramp densities:
    /// more flexible levels have stochastically smaller valuations.
    pub fn strict_ramp_economy() -> (FlexibilityStructure, Vec<ConsumerTypeModel>) {
        let structure = FlexibilityStructure::new(vec![1, 1, 1]).unwrap();
        let models = (0..3)
            .map(|i| {
                ConsumerTypeModel::linear_ramp_family(
                    i,
                    0.0,
                    1.0,
                    &[-0.5, 0.0, 0.5],
                    vec![0.4, 0.3, 0.3],
                )
                .unwrap()
            })
            .collect();
        (structure, models)
    }

    /// One uniform `[0, 1]` consumer and a single good; the closed-form
    /// expected revenue is 0.25.
    pub fn single_uniform_economy() -> (FlexibilityStructure, Vec<ConsumerTypeModel>) {
        let structure = FlexibilityStructure::new(vec![1]).unwrap();
        (structure, vec![ConsumerTypeModel::uniform(0, 1, 0.0, 1.0).unwrap()])
    }
}

/// Random generation of small, assumption-satisfying economies for the
/// oracle-equivalence batteries.
pub mod gen {
    use super::*;

    /// Size caps for generated instances, sized for the brute-force oracles.
    #[derive(Debug, Clone, Copy)]
    pub struct InstanceCaps {
        pub max_consumers: usize,
        pub max_goods: usize,
        pub max_levels: usize,
    }

    impl Default for InstanceCaps {
        fn default() -> Self {
            Self { max_consumers: 5, max_goods: 5, max_levels: 3 }
        }
    }

    /// Draw a random economy: a nested structure within the caps and one
    /// model per consumer from families that satisfy the weak hazard-order
    /// condition by construction (supports bottom out at zero, so the
    /// negative-reserve assumption holds automatically).
    pub fn random_small_economy<R: Rng + ?Sized>(
        rng: &mut R,
        caps: InstanceCaps,
    ) -> (FlexibilityStructure, Vec<ConsumerTypeModel>) {
        let k = rng.gen_range(1..=caps.max_levels);
        let m = loop {
            let m: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=2)).collect();
            let total: usize = m.iter().sum();
            if total >= 1 && total <= caps.max_goods {
                break m;
            }
        };
        let structure = FlexibilityStructure::new(m).unwrap();
        let n = rng.gen_range(1..=caps.max_consumers);
        let models = (0..n)
            .map(|i| {
                let hi = 0.5 + 1.5 * rng.gen::<f64>();
                let mass = random_masses(rng, k);
                match rng.gen_range(0..3u8) {
                    0 => ConsumerTypeModel::uniform(i, k, 0.0, hi).unwrap(),
                    1 => {
                        // Nondecreasing ramp parameters across levels keep
                        // the hazard order intact.
                        let mut lambda: f64 = rng.gen_range(-1.0..0.7);
                        let lambdas: Vec<f64> = (0..k)
                            .map(|_| {
                                let current = lambda;
                                lambda = (lambda + rng.gen_range(0.0..0.3)).min(0.95);
                                current
                            })
                            .collect();
                        ConsumerTypeModel::linear_ramp_family(i, 0.0, hi, &lambdas, mass)
                            .unwrap()
                    }
                    _ => increasing_multiknot(rng, i, k, hi, mass),
                }
            })
            .collect();
        (structure, models)
    }

    fn random_masses<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    /// Identical-across-levels density with several knots and increasing
    /// values; an increasing density always has an increasing hazard.
    fn increasing_multiknot<R: Rng + ?Sized>(
        rng: &mut R,
        id: usize,
        k: usize,
        hi: f64,
        mass: Vec<f64>,
    ) -> ConsumerTypeModel {
        let mut interior: Vec<f64> = (0..2).map(|_| rng.gen_range(0.2..0.8) * hi).collect();
        interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if interior[1] - interior[0] < 0.05 * hi {
            interior[1] = interior[0] + 0.05 * hi;
        }
        let knots = vec![0.0, interior[0], interior[1], hi];
        let mut values: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..2.0)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let total: f64 = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
            .sum();
        let normalized: Vec<f64> = values.iter().map(|v| v / total).collect();
        let density = crate::dist::PiecewiseLinearDensity::new(knots, normalized).unwrap();
        ConsumerTypeModel::new(id, (0.0, hi), mass, vec![density; k]).unwrap()
    }
}
