//! Nested flexibility structure and the combinatorics of serving it:
//! supply/demand profiles, adequacy via prefix-sum dominance, the
//! closed-form minimal removal counts, and the level-ordered feasible
//! assignment of goods to surviving consumers.
//!
//! Everything here is pure integer arithmetic on immutable inputs; which
//! consumers get removed (an economic question) is decided by the
//! mechanism, this module only counts and assigns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `k` nested flexibility sets, encoded by incremental sizes: `m[0]`
/// goods form the innermost set, the next `m[1]` goods extend it, and so
/// on. Goods are numbered `1..=M` so that good `j` belongs to level-`l`'s
/// set iff `j <= m[0] + ... + m[l-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlexibilityStructure {
    m: Vec<usize>,
}

impl FlexibilityStructure {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Domain("flexibility structure needs at least one level".into()));
        }
        if m.iter().sum::<usize>() == 0 {
            return Err(Error::Domain("flexibility structure has no goods".into()));
        }
        Ok(Self { m })
    }

    /// Number of flexibility levels `k`.
    pub fn k(&self) -> usize {
        self.m.len()
    }

    /// Total number of goods `M`.
    pub fn total_goods(&self) -> usize {
        self.m.iter().sum()
    }

    /// Incremental set sizes.
    pub fn increments(&self) -> &[usize] {
        &self.m
    }

    /// Size of the level-`level` flexibility set (1-based level).
    pub fn set_size(&self, level: usize) -> usize {
        self.m[..level].iter().sum()
    }

    /// Whether good `good` (1-based) lies in the level-`level` set.
    pub fn good_in_set(&self, good: usize, level: usize) -> bool {
        good >= 1 && good <= self.set_size(level)
    }
}

/// Per-level consumer counts `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandProfile {
    n: Vec<usize>,
}

impl DemandProfile {
    pub fn new(n: Vec<usize>) -> Self {
        Self { n }
    }

    /// Tally the demand profile of `(consumer, level)` pairs.
    pub fn from_levels(levels: impl IntoIterator<Item = usize>, k: usize) -> Result<Self> {
        let mut n = vec![0usize; k];
        for level in levels {
            if level == 0 || level > k {
                return Err(Error::Domain(format!("flexibility level {level} outside 1..={k}")));
            }
            n[level - 1] += 1;
        }
        Ok(Self { n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.n
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn total(&self) -> usize {
        self.n.iter().sum()
    }
}

/// Per-iteration removal counts restoring adequacy, with the smallest
/// possible total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalPlan {
    pub r: Vec<usize>,
    pub total: usize,
}

fn check_lengths(n: &DemandProfile, structure: &FlexibilityStructure) -> Result<()> {
    if n.k() != structure.k() {
        return Err(Error::Domain(format!(
            "demand profile has {} levels, structure has {}",
            n.k(),
            structure.k()
        )));
    }
    Ok(())
}

/// Whether the supply profile can serve every consumer in the demand
/// profile: true iff every prefix sum of `n` is at most the matching
/// prefix sum of `m`.
pub fn is_adequate(n: &DemandProfile, structure: &FlexibilityStructure) -> Result<bool> {
    check_lengths(n, structure)?;
    let mut dn = 0usize;
    let mut dm = 0usize;
    for (a, b) in n.counts().iter().zip(structure.increments()) {
        dn += a;
        dm += b;
        if dn > dm {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fewest removals restoring adequacy, as per-iteration counts:
/// `r[0] = (n1 - m1)+` and then each `r[j]` clears whatever the `j`-th
/// prefix inequality still lacks after earlier removals. The total matches
/// the optimum of the exhaustive removal program.
pub fn minimal_removals(n: &DemandProfile, structure: &FlexibilityStructure) -> Result<RemovalPlan> {
    check_lengths(n, structure)?;
    let mut r = Vec::with_capacity(n.k());
    let mut deficit: i64 = 0; // prefix(n) - prefix(m)
    let mut removed: i64 = 0;
    for (&ni, &mi) in n.counts().iter().zip(structure.increments()) {
        deficit += ni as i64 - mi as i64;
        let rj = (deficit - removed).max(0) as usize;
        removed += rj as i64;
        r.push(rj);
    }
    Ok(RemovalPlan { total: r.iter().sum(), r })
}

/// A feasible allocation: each listed consumer holds exactly one distinct
/// good. Constructed only through operations that preserve row/column
/// feasibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodAssignment {
    /// `(consumer, good)` pairs; goods are 1-based and pairwise distinct.
    pub pairs: Vec<(usize, usize)>,
}

impl GoodAssignment {
    /// Good held by `consumer`, if any.
    pub fn good_of(&self, consumer: usize) -> Option<usize> {
        self.pairs.iter().find(|(c, _)| *c == consumer).map(|(_, g)| *g)
    }

    /// Dense 0/1 allocation matrix with `n_consumers` rows and `n_goods`
    /// columns; row `i`, column `j-1` is 1 iff consumer `i` holds good `j`.
    pub fn to_matrix(&self, n_consumers: usize, n_goods: usize) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; n_goods]; n_consumers];
        for &(c, g) in &self.pairs {
            a[c][g - 1] = 1;
        }
        a
    }
}

/// Assign goods to survivors by nondecreasing flexibility level (ties by
/// consumer id): the `i`-th consumer in that order receives good `i`.
/// Because goods are numbered innermost-set-first, adequacy of the
/// survivors' demand profile guarantees each consumer's good lies inside
/// its flexibility set.
pub fn assign_goods(
    survivors: &[(usize, usize)],
    structure: &FlexibilityStructure,
) -> Result<GoodAssignment> {
    let profile =
        DemandProfile::from_levels(survivors.iter().map(|&(_, level)| level), structure.k())?;
    if !is_adequate(&profile, structure)? {
        return Err(Error::Contract(format!(
            "survivor demand profile {:?} is not adequate for supply {:?}",
            profile.counts(),
            structure.increments()
        )));
    }
    let mut ordered = survivors.to_vec();
    ordered.sort_by_key(|&(consumer, level)| (level, consumer));
    let pairs = ordered
        .into_iter()
        .enumerate()
        .map(|(i, (consumer, _))| (consumer, i + 1))
        .collect();
    Ok(GoodAssignment { pairs })
}
