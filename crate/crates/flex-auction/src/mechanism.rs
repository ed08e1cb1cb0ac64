//! The optimal auction engine: threshold allocation over nested flexibility
//! classes, threshold payments, and a critical-bid probe used to verify the
//! payment rule.
//!
//! Allocation works on reported types. Preconditions on the type models
//! (weak hazard order, negative virtual valuation at the support bottom)
//! are the caller's responsibility and are checked by the validators in
//! [`crate::dist`], not here; the engine itself only enforces mechanical
//! domain constraints.

use rand::Rng;
use serde::Serialize;

use crate::dist::ConsumerTypeModel;
use crate::error::{Error, Result};
use crate::flex::{
    assign_goods, minimal_removals, DemandProfile, FlexibilityStructure, GoodAssignment,
    RemovalPlan,
};

/// Reported valuations and flexibility levels for `N` consumers. Consumer
/// `i`'s entries live at index `i`; levels are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeProfile {
    pub theta: Vec<f64>,
    pub b: Vec<usize>,
}

impl TypeProfile {
    pub fn new(theta: Vec<f64>, b: Vec<usize>) -> Result<Self> {
        if theta.len() != b.len() {
            return Err(Error::Domain(format!(
                "{} valuations but {} levels",
                theta.len(),
                b.len()
            )));
        }
        Ok(Self { theta, b })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Draw a truthful profile, one type per model.
    pub fn sample_truthful<R: Rng + ?Sized>(models: &[ConsumerTypeModel], rng: &mut R) -> Self {
        let mut theta = Vec::with_capacity(models.len());
        let mut b = Vec::with_capacity(models.len());
        for model in models {
            let (t, level) = model.sample(rng);
            theta.push(t);
            b.push(level);
        }
        Self { theta, b }
    }

    /// Copy of the profile with consumer `i`'s report replaced.
    pub fn with_report(&self, i: usize, theta: f64, level: usize) -> Self {
        let mut out = self.clone();
        out.theta[i] = theta;
        out.b[i] = level;
        out
    }
}

/// Per-iteration virtual-valuation cutoffs: entry `i-1` is the virtual
/// valuation of the last consumer removed at iteration `i`, or 0 when that
/// iteration removed nobody.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTrace {
    pub w_thr: Vec<f64>,
}

/// One line of the allocation trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// Iteration number = flexibility class joining the pool (1-based).
    pub level: usize,
    /// Consumers eligible at this iteration, ascending by id.
    pub pool: Vec<usize>,
    /// Consumers removed at this iteration, in removal order.
    pub removed: Vec<usize>,
    pub w_thr: f64,
}

/// Everything the allocation pass decided and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationTrace {
    /// Consumers dropped up front for non-positive virtual valuation.
    pub below_reserve: Vec<usize>,
    /// Per-class counts of consumers with positive virtual valuation.
    pub n_plus: Vec<usize>,
    pub removals: RemovalPlan,
    pub iterations: Vec<IterationRecord>,
}

/// Result of the allocation pass: who wins, at which virtual-valuation
/// cutoffs, and the full iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    /// Winning consumers, ascending by id.
    pub winners: Vec<usize>,
    /// Virtual valuation of every consumer's report.
    pub virtual_values: Vec<f64>,
    pub thresholds: ThresholdTrace,
    pub trace: AllocationTrace,
}

impl Allocation {
    pub fn won(&self, consumer: usize) -> bool {
        self.winners.binary_search(&consumer).is_ok()
    }
}

/// A valuation threshold; when `attainable` is false the consumer cannot
/// win at any valuation and `theta` is pinned to the top of the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub theta: f64,
    pub attainable: bool,
}

fn check_inputs(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
) -> Result<()> {
    if models.len() != profile.len() {
        return Err(Error::Domain(format!(
            "{} models but {} reports",
            models.len(),
            profile.len()
        )));
    }
    let k = structure.k();
    for (i, model) in models.iter().enumerate() {
        if model.k() != k {
            return Err(Error::Domain(format!(
                "consumer {i} model has {} levels, structure has {k}",
                model.k()
            )));
        }
    }
    for (i, (&theta, &level)) in profile.theta.iter().zip(&profile.b).enumerate() {
        if level == 0 || level > k {
            return Err(Error::Domain(format!("consumer {i}: level {level} outside 1..={k}")));
        }
        let (lo, hi) = models[i].support();
        if !(lo..=hi).contains(&theta) {
            return Err(Error::Domain(format!(
                "consumer {i}: valuation {theta} outside support [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

fn allocate_impl(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    priority: &[u64],
) -> Result<Allocation> {
    check_inputs(models, structure, profile)?;
    let k = structure.k();

    let virtual_values: Vec<f64> = profile
        .theta
        .iter()
        .zip(&profile.b)
        .enumerate()
        .map(|(i, (&theta, &level))| models[i].virtual_valuation(level, theta))
        .collect::<Result<_>>()?;

    // Step 1: drop non-positive virtual valuations, tally the rest by class.
    let mut below_reserve = Vec::new();
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &w) in virtual_values.iter().enumerate() {
        if w > 0.0 {
            classes[profile.b[i] - 1].push(i);
        } else {
            below_reserve.push(i);
        }
    }
    let n_plus = DemandProfile::new(classes.iter().map(Vec::len).collect());
    let removals = minimal_removals(&n_plus, structure)?;

    // Iterations: grow the pool one class at a time, removing the lowest
    // virtual valuations whenever the removal plan says so.
    let mut pool: Vec<usize> = Vec::new();
    let mut w_thr = Vec::with_capacity(k);
    let mut iterations = Vec::with_capacity(k);
    for i in 0..k {
        pool.extend(&classes[i]);
        let mut record_pool = pool.clone();
        record_pool.sort_unstable();
        let removed = if removals.r[i] > 0 {
            // Ascending virtual valuation; ties: higher priority goes first.
            pool.sort_by(|&a, &b| {
                virtual_values[a]
                    .partial_cmp(&virtual_values[b])
                    .unwrap()
                    .then(priority[b].cmp(&priority[a]))
            });
            pool.drain(..removals.r[i]).collect::<Vec<_>>()
        } else {
            Vec::new()
        };
        let cutoff = removed.last().map_or(0.0, |&c| virtual_values[c]);
        w_thr.push(cutoff);
        iterations.push(IterationRecord {
            level: i + 1,
            pool: record_pool,
            removed,
            w_thr: cutoff,
        });
    }
    pool.sort_unstable();

    Ok(Allocation {
        winners: pool,
        virtual_values,
        thresholds: ThresholdTrace { w_thr },
        trace: AllocationTrace { below_reserve, n_plus: n_plus.counts().to_vec(), removals, iterations },
    })
}

/// Run the optimal allocation with deterministic index tie-breaking.
pub fn allocate(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
) -> Result<Allocation> {
    let priority: Vec<u64> = (0..profile.len() as u64).collect();
    allocate_impl(models, structure, profile, &priority)
}

/// Run the optimal allocation breaking virtual-valuation ties by seeded
/// random priorities drawn from `rng`.
pub fn allocate_seeded_ties<R: Rng + ?Sized>(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    rng: &mut R,
) -> Result<Allocation> {
    let priority: Vec<u64> = (0..profile.len()).map(|_| rng.gen()).collect();
    allocate_impl(models, structure, profile, &priority)
}

/// Valuation threshold for `consumer` reporting class `level`: the smallest
/// valuation whose virtual valuation clears zero and every cutoff from that
/// class's iteration onward. Targets above the attainable range come back
/// as an unattainable sentinel at the top of the support.
pub fn valuation_threshold(
    models: &[ConsumerTypeModel],
    trace: &ThresholdTrace,
    consumer: usize,
    level: usize,
) -> Result<Threshold> {
    let model = &models[consumer];
    if level == 0 || level > trace.w_thr.len() {
        return Err(Error::Domain(format!(
            "level {level} outside 1..={}",
            trace.w_thr.len()
        )));
    }
    let target = trace.w_thr[level - 1..].iter().fold(0.0f64, |acc, &w| acc.max(w));
    match model.inverse_virtual_valuation(level, target) {
        Ok(theta) => Ok(Threshold { theta, attainable: true }),
        Err(Error::Range { .. }) => {
            Ok(Threshold { theta: model.support().1, attainable: false })
        }
        Err(e) => Err(e),
    }
}

/// Full auction outcome: a feasible assignment, payments, per-winner
/// valuation thresholds and the allocation trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub assignment: GoodAssignment,
    /// Payment per consumer; exactly 0 for non-winners.
    pub payments: Vec<f64>,
    /// `(consumer, valuation threshold)` per winner, ascending by consumer.
    pub winner_thresholds: Vec<(usize, f64)>,
    pub virtual_values: Vec<f64>,
    pub thresholds: ThresholdTrace,
    pub trace: AllocationTrace,
}

impl AuctionOutcome {
    pub fn won(&self, consumer: usize) -> bool {
        self.assignment.good_of(consumer).is_some()
    }

    pub fn winners(&self) -> Vec<usize> {
        self.winner_thresholds.iter().map(|&(c, _)| c).collect()
    }

    /// Sum of winners' virtual valuations (the allocation objective).
    pub fn virtual_surplus(&self) -> f64 {
        self.winner_thresholds.iter().map(|&(c, _)| self.virtual_values[c]).sum()
    }
}

fn outcome_from_allocation(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    allocation: Allocation,
) -> Result<AuctionOutcome> {
    let survivors: Vec<(usize, usize)> =
        allocation.winners.iter().map(|&i| (i, profile.b[i])).collect();
    let assignment = assign_goods(&survivors, structure)?;
    let mut payments = vec![0.0; profile.len()];
    let mut winner_thresholds = Vec::with_capacity(allocation.winners.len());
    for &winner in &allocation.winners {
        let threshold =
            valuation_threshold(models, &allocation.thresholds, winner, profile.b[winner])?;
        if !threshold.attainable {
            return Err(Error::Contract(format!(
                "winner {winner} has an unattainable threshold"
            )));
        }
        payments[winner] = threshold.theta;
        winner_thresholds.push((winner, threshold.theta));
    }
    Ok(AuctionOutcome {
        assignment,
        payments,
        winner_thresholds,
        virtual_values: allocation.virtual_values,
        thresholds: allocation.thresholds,
        trace: allocation.trace,
    })
}

/// Run the full auction: allocate, assign goods, and charge each winner its
/// valuation threshold. Non-winners pay exactly 0, so the outcome is ex
/// post individually rational.
pub fn run_auction(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
) -> Result<AuctionOutcome> {
    let allocation = allocate(models, structure, profile)?;
    outcome_from_allocation(models, structure, profile, allocation)
}

/// [`run_auction`] with seeded random tie-breaking.
pub fn run_auction_seeded_ties<R: Rng + ?Sized>(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    rng: &mut R,
) -> Result<AuctionOutcome> {
    let allocation = allocate_seeded_ties(models, structure, profile, rng)?;
    outcome_from_allocation(models, structure, profile, allocation)
}

/// Find the valuation at which `consumer`'s allocation flips from losing to
/// winning, holding every other report fixed, by bisection to 1e-9.
/// Allocation is nondecreasing in the consumer's own report, so the flip
/// point is unique. Returns an unattainable sentinel at the top of the
/// support if the consumer loses everywhere.
pub fn critical_bid(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    consumer: usize,
) -> Result<Threshold> {
    check_inputs(models, structure, profile)?;
    if consumer >= profile.len() {
        return Err(Error::Domain(format!("consumer {consumer} outside profile")));
    }
    let (lo, hi) = models[consumer].support();
    let wins_at = |s: f64| -> Result<bool> {
        let probe = profile.with_report(consumer, s, profile.b[consumer]);
        Ok(allocate(models, structure, &probe)?.won(consumer))
    };
    if wins_at(lo)? {
        return Ok(Threshold { theta: lo, attainable: true });
    }
    if !wins_at(hi)? {
        return Ok(Threshold { theta: hi, attainable: false });
    }
    let mut losing = lo;
    let mut winning = hi;
    while winning - losing > 1e-9 {
        let mid = 0.5 * (losing + winning);
        if wins_at(mid)? {
            winning = mid;
        } else {
            losing = mid;
        }
    }
    Ok(Threshold { theta: winning, attainable: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ConsumerTypeModel;

    fn uniform_models(n: usize, k: usize) -> Vec<ConsumerTypeModel> {
        (0..n).map(|i| ConsumerTypeModel::uniform(i, k, 0.0, 1.0).unwrap()).collect()
    }

    fn structure(m: &[usize]) -> FlexibilityStructure {
        FlexibilityStructure::new(m.to_vec()).unwrap()
    }

    #[test]
    fn both_win_when_supply_adequate() {
        let models = uniform_models(2, 2);
        let s = structure(&[1, 1]);
        let profile = TypeProfile::new(vec![0.9, 0.8], vec![1, 2]).unwrap();
        let allocation = allocate(&models, &s, &profile).unwrap();
        assert_eq!(allocation.winners, vec![0, 1]);
        assert!((allocation.virtual_values[0] - 0.8).abs() < 1e-12);
        assert!((allocation.virtual_values[1] - 0.6).abs() < 1e-12);
        assert_eq!(allocation.trace.n_plus, vec![1, 1]);
        assert_eq!(allocation.trace.removals.total, 0);
        assert_eq!(allocation.thresholds.w_thr, vec![0.0, 0.0]);
    }

    #[test]
    fn below_reserve_nobody_wins() {
        let models = uniform_models(2, 2);
        let s = structure(&[1, 1]);
        let profile = TypeProfile::new(vec![0.4, 0.4], vec![1, 2]).unwrap();
        let outcome = run_auction(&models, &s, &profile).unwrap();
        assert!(outcome.winners().is_empty());
        assert_eq!(outcome.payments, vec![0.0, 0.0]);
        assert_eq!(outcome.trace.below_reserve, vec![0, 1]);
    }

    #[test]
    fn three_way_contest_single_good() {
        let models = uniform_models(3, 1);
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.9, 0.8, 0.7], vec![1, 1, 1]).unwrap();
        let outcome = run_auction(&models, &s, &profile).unwrap();
        assert_eq!(outcome.winners(), vec![0]);
        // Two removals, lowest virtual valuations first, cutoff at w(0.8).
        assert_eq!(outcome.trace.iterations[0].removed, vec![2, 1]);
        assert!((outcome.thresholds.w_thr[0] - 0.6).abs() < 1e-12);
        assert!((outcome.payments[0] - 0.8).abs() < 1e-8);
        assert_eq!(outcome.payments[1], 0.0);
        assert_eq!(outcome.payments[2], 0.0);
    }

    #[test]
    fn thresholds_default_to_reserve() {
        let models = uniform_models(2, 2);
        let s = structure(&[1, 1]);
        let profile = TypeProfile::new(vec![0.9, 0.8], vec![1, 2]).unwrap();
        let outcome = run_auction(&models, &s, &profile).unwrap();
        assert!((outcome.payments[0] - 0.5).abs() < 1e-8);
        assert!((outcome.payments[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn valuation_threshold_examples() {
        let models = uniform_models(1, 1);
        let zero = ThresholdTrace { w_thr: vec![0.0] };
        let t = valuation_threshold(&models, &zero, 0, 1).unwrap();
        assert!(t.attainable && (t.theta - 0.5).abs() < 1e-9);

        let busy = ThresholdTrace { w_thr: vec![0.6] };
        let t = valuation_threshold(&models, &busy, 0, 1).unwrap();
        assert!(t.attainable && (t.theta - 0.8).abs() < 1e-9);

        let unreachable = ThresholdTrace { w_thr: vec![2.0] };
        let t = valuation_threshold(&models, &unreachable, 0, 1).unwrap();
        assert!(!t.attainable);
        assert_eq!(t.theta, 1.0);
    }

    #[test]
    fn critical_bid_matches_threshold() {
        let models = uniform_models(3, 1);
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.9, 0.8, 0.7], vec![1, 1, 1]).unwrap();
        let bid = critical_bid(&models, &s, &profile, 0).unwrap();
        assert!(bid.attainable);
        assert!((bid.theta - 0.8).abs() < 1e-8);
    }

    #[test]
    fn critical_bid_reserve_in_empty_market() {
        let models = uniform_models(1, 1);
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.3], vec![1]).unwrap();
        let bid = critical_bid(&models, &s, &profile, 0).unwrap();
        assert!(bid.attainable);
        assert!((bid.theta - 0.5).abs() < 1e-8);
    }

    #[test]
    fn critical_bid_sentinel_when_unwinnable() {
        // Competitor's virtual valuation exceeds 1 everywhere relevant, and
        // there is a single good.
        let mut models = uniform_models(1, 1);
        models.push(ConsumerTypeModel::uniform(1, 1, 3.0, 4.0).unwrap());
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.9, 3.9], vec![1, 1]).unwrap();
        let bid = critical_bid(&models, &s, &profile, 0).unwrap();
        assert!(!bid.attainable);
        assert_eq!(bid.theta, 1.0);
    }

    #[test]
    fn empty_profile_empty_outcome() {
        let outcome = run_auction(&[], &structure(&[1, 1]), &TypeProfile::new(vec![], vec![]).unwrap())
            .unwrap();
        assert!(outcome.winners().is_empty());
        assert!(outcome.payments.is_empty());
    }

    #[test]
    fn rejects_out_of_support_report() {
        let models = uniform_models(1, 1);
        let profile = TypeProfile::new(vec![1.4], vec![1]).unwrap();
        let err = run_auction(&models, &structure(&[1]), &profile).unwrap_err();
        assert!(matches!(err, Error::Domain(ref msg) if msg.contains("consumer 0")));
    }

    #[test]
    fn counting_invariant_and_adequacy() {
        let models = uniform_models(5, 2);
        let s = structure(&[1, 1]);
        let profile =
            TypeProfile::new(vec![0.9, 0.85, 0.7, 0.65, 0.6], vec![1, 1, 2, 2, 1]).unwrap();
        let allocation = allocate(&models, &s, &profile).unwrap();
        let removed: usize =
            allocation.trace.iterations.iter().map(|it| it.removed.len()).sum();
        assert_eq!(removed, allocation.trace.removals.total);
        let survivor_levels = allocation.winners.iter().map(|&i| profile.b[i]);
        let survivors = DemandProfile::from_levels(survivor_levels, s.k()).unwrap();
        assert!(crate::flex::is_adequate(&survivors, &s).unwrap());
    }

    #[test]
    fn ex_post_ir_on_examples() {
        let models = uniform_models(3, 1);
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.9, 0.8, 0.7], vec![1, 1, 1]).unwrap();
        let outcome = run_auction(&models, &s, &profile).unwrap();
        for i in 0..3 {
            let won = outcome.won(i) as u8 as f64;
            assert!(profile.theta[i] * won - outcome.payments[i] >= 0.0);
        }
    }

    #[test]
    fn tie_break_by_index_removes_higher_id_first() {
        let models = uniform_models(2, 1);
        let s = structure(&[1]);
        let profile = TypeProfile::new(vec![0.8, 0.8], vec![1, 1]).unwrap();
        let allocation = allocate(&models, &s, &profile).unwrap();
        assert_eq!(allocation.winners, vec![0]);
        assert_eq!(allocation.trace.iterations[0].removed, vec![1]);
    }
}
