//! Brute-force reference implementations of the allocation program, the
//! removal program and the integral payment rule. These exist purely for
//! verification at desk scale; every routine carries an explicit capacity
//! guard and should never sit on a hot path.

use crate::dist::ConsumerTypeModel;
use crate::error::{Error, Result};
use crate::flex::{is_adequate, DemandProfile, FlexibilityStructure};
use crate::mechanism::{allocate, critical_bid, TypeProfile};

/// Enumeration guard shared by the oracles.
const MAX_CANDIDATES: u64 = 1_000_000;

/// Result of an exhaustive search over winner sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Maximum of the summed virtual valuations over feasible winner sets.
    pub objective: f64,
    /// Every winner set within 1e-12 of the optimum, each ascending by id.
    pub argmax_sets: Vec<Vec<usize>>,
    /// Number of candidate sets examined.
    pub enumerated: usize,
}

/// Exhaustively maximize the summed virtual valuation over all winner sets
/// whose demand profile the supply can serve. Feasibility of a set reduces
/// to prefix-sum adequacy because the flexibility sets are nested.
pub fn brute_force_allocation(
    w: &[f64],
    b: &[usize],
    structure: &FlexibilityStructure,
) -> Result<OracleResult> {
    if w.len() != b.len() {
        return Err(Error::Domain(format!("{} weights but {} levels", w.len(), b.len())));
    }
    let n = w.len();
    if (1u64 << n.min(63)) > MAX_CANDIDATES {
        return Err(Error::Capacity(format!(
            "2^{n} winner subsets exceed the {MAX_CANDIDATES} enumeration guard"
        )));
    }
    let k = structure.k();
    let mut best = 0.0f64; // the empty set is always feasible
    let mut argmax: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    for mask in 1u64..(1 << n) {
        let mut counts = vec![0usize; k];
        let mut objective = 0.0;
        let mut set = Vec::new();
        for (i, (&wi, &bi)) in w.iter().zip(b).enumerate() {
            if mask & (1 << i) != 0 {
                counts[bi - 1] += 1;
                objective += wi;
                set.push(i);
            }
        }
        if !is_adequate(&DemandProfile::new(counts), structure)? {
            continue;
        }
        if objective > best + 1e-12 {
            best = objective;
            argmax.clear();
        }
        if objective >= best - 1e-12 {
            best = best.max(objective);
            argmax.push((objective, set));
        }
    }
    // Re-filter: sets collected before a later, higher optimum may linger.
    let argmax_sets = argmax
        .into_iter()
        .filter(|(obj, _)| (obj - best).abs() <= 1e-12)
        .map(|(_, set)| set)
        .collect();
    Ok(OracleResult { objective: best, argmax_sets, enumerated: 1 << n })
}

/// Matrix-level cross-check of [`brute_force_allocation`]: enumerate every
/// feasible 0/1 allocation matrix directly (each consumer takes one good or
/// none, no good twice) and maximize the same objective, counting a
/// consumer only when its good lies inside its reported flexibility set.
/// Exponentially more expensive; intended for tiny instances only.
pub fn brute_force_allocation_matrices(
    w: &[f64],
    b: &[usize],
    structure: &FlexibilityStructure,
) -> Result<f64> {
    let n = w.len();
    let m = structure.total_goods();
    let candidates = ((m + 1) as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if candidates > MAX_CANDIDATES {
        return Err(Error::Capacity(format!(
            "({} goods + none)^{n} assignments exceed the {MAX_CANDIDATES} guard",
            m
        )));
    }
    // Odometer over per-consumer choices: 0 = no good, j = good j.
    let mut choice = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        let mut taken = vec![false; m + 1];
        let mut feasible = true;
        let mut objective = 0.0;
        for (i, &g) in choice.iter().enumerate() {
            if g == 0 {
                continue;
            }
            if taken[g] {
                feasible = false;
                break;
            }
            taken[g] = true;
            if structure.good_in_set(g, b[i]) {
                objective += w[i];
            }
        }
        if feasible && objective > best {
            best = objective;
        }
        // Advance the odometer.
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(best);
            }
            choice[pos] += 1;
            if choice[pos] <= m {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive minimum number of removals restoring adequacy: search every
/// reduced demand profile below `n`.
pub fn brute_force_removals(
    n: &DemandProfile,
    structure: &FlexibilityStructure,
) -> Result<usize> {
    let counts = n.counts();
    let candidates: u64 = counts.iter().map(|&c| c as u64 + 1).product();
    if candidates > MAX_CANDIDATES {
        return Err(Error::Capacity(format!(
            "{candidates} reduced profiles exceed the {MAX_CANDIDATES} enumeration guard"
        )));
    }
    let k = counts.len();
    let mut reduced = vec![0usize; k];
    let mut best = usize::MAX;
    loop {
        if is_adequate(&DemandProfile::new(reduced.clone()), structure)? {
            let removed = n.total() - reduced.iter().sum::<usize>();
            best = best.min(removed);
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(best);
            }
            reduced[pos] += 1;
            if reduced[pos] <= counts[pos] {
                break;
            }
            reduced[pos] = 0;
            pos += 1;
        }
    }
}

/// Payment of `consumer` evaluated through the integral rule: valuation
/// times the win indicator, minus the integral of the win indicator over
/// valuations up to the report. The indicator is a single 0/1 step in the
/// consumer's own valuation, so locating the step via [`critical_bid`]
/// integrates it exactly.
pub fn payment_by_integral(
    models: &[ConsumerTypeModel],
    structure: &FlexibilityStructure,
    profile: &TypeProfile,
    consumer: usize,
) -> Result<f64> {
    let wins = allocate(models, structure, profile)?.won(consumer);
    if !wins {
        // The indicator is identically zero below a losing report.
        return Ok(0.0);
    }
    let theta = profile.theta[consumer];
    let flip = critical_bid(models, structure, profile, consumer)?;
    if !flip.attainable || flip.theta > theta {
        return Err(Error::Contract(format!(
            "winner {consumer} reported {theta} below its critical bid {:?}",
            flip
        )));
    }
    let indicator_integral = theta - flip.theta;
    Ok(theta - indicator_integral)
}
