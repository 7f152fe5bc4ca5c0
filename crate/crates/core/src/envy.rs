//! Envy measures on a fixed allocation: pairwise envy, degree of envy,
//! approval counts, K-approval envy, and the weighted envy graph.
//!
//! All measures derive from the n×n matrix of bundle values `u_k(π_i)`
//! ([`BundleValues`]), computed once per allocation on the integer-scaled
//! utilities.

use std::fmt;

use crate::error::{argument, Result};
use crate::model::{validate_allocation, Allocation, NormalizedInstance, Rational};

/// How much approval the worst envy of an allocation gathers.
///
/// The allocation is (K-app envy)-free exactly for `K >= level`; `Ef` stands
/// for K = 1 and `Unanimous` means no K in `1..=n` works.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AllocationLevel {
    Ef,
    Level(usize),
    Unanimous,
}

impl AllocationLevel {
    /// Level implied by the largest approval count over envious pairs
    /// (0 when nobody envies).
    pub fn from_max_approval(max_approval: usize, agents: usize) -> Self {
        match max_approval {
            0 => AllocationLevel::Ef,
            c if c >= agents => AllocationLevel::Unanimous,
            c => AllocationLevel::Level(c + 1),
        }
    }

    /// The smallest K for which the allocation is (K-app envy)-free.
    pub fn k(self) -> Option<usize> {
        match self {
            AllocationLevel::Ef => Some(1),
            AllocationLevel::Level(k) => Some(k),
            AllocationLevel::Unanimous => None,
        }
    }

    pub fn is_free_at(self, k: usize) -> bool {
        self.k().is_some_and(|level| k >= level)
    }
}

impl fmt::Display for AllocationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationLevel::Ef => write!(f, "envy-free"),
            AllocationLevel::Level(k) => write!(f, "({k}-app envy)-free"),
            AllocationLevel::Unanimous => write!(f, "unanimous envy"),
        }
    }
}

/// `values[k * n + i]` is agent k's scaled utility for agent i's bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleValues {
    n: usize,
    values: Vec<i64>,
}

impl BundleValues {
    /// Assumes `alloc` is valid for `norm`.
    pub fn compute(norm: &NormalizedInstance, alloc: &Allocation) -> Self {
        let n = norm.agents();
        let mut values = vec![0i64; n * n];
        for (item, &owner) in alloc.owner().iter().enumerate() {
            for k in 0..n {
                values[k * n + owner] += norm.value(k, item);
            }
        }
        Self { n, values }
    }

    pub(crate) fn from_raw(n: usize, values: Vec<i64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    /// Agent `judge`'s value for the bundle of `holder`.
    #[inline]
    pub fn get(&self, judge: usize, holder: usize) -> i64 {
        self.values[judge * self.n + holder]
    }

    #[inline]
    pub fn envies(&self, i: usize, j: usize) -> bool {
        self.get(i, i) < self.get(i, j)
    }

    /// Number of agents k with `u_k(π_i) < u_k(π_j)`.
    #[inline]
    pub fn approval_count(&self, i: usize, j: usize) -> usize {
        (0..self.n).filter(|&k| self.get(k, i) < self.get(k, j)).count()
    }

    /// Largest approval count over envious pairs, 0 if nobody envies.
    pub fn max_approval(&self) -> usize {
        let mut best = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.envies(i, j) {
                    best = best.max(self.approval_count(i, j));
                    if best == self.n {
                        return best;
                    }
                }
            }
        }
        best
    }

    pub fn level(&self) -> AllocationLevel {
        AllocationLevel::from_max_approval(self.max_approval(), self.n)
    }

    /// Whether the level is strictly better than `bound`, stopping as soon
    /// as an envy with enough approval shows it is not.
    pub fn level_below(&self, bound: AllocationLevel) -> bool {
        // Level < bound  <=>  max approval < threshold.
        let threshold = match bound {
            AllocationLevel::Ef => return false,
            AllocationLevel::Level(k) => k - 1,
            AllocationLevel::Unanimous => self.n,
        };
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.envies(i, j) && self.approval_count(i, j) >= threshold {
                    return false;
                }
            }
        }
        true
    }

    /// Whether no agent K-app envies another (`k >= 1`).
    pub fn is_free_at(&self, k: usize) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.envies(i, j) && self.approval_count(i, j) >= k {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [i64] {
        &mut self.values
    }

    pub fn is_envy_free(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| !self.envies(i, j)))
    }

    /// Scaled pairwise envy `max(0, u_i(π_j) - u_i(π_i))`.
    pub fn pairwise_envy_scaled(&self, i: usize, j: usize) -> i64 {
        (self.get(i, j) - self.get(i, i)).max(0)
    }

    pub fn degree_of_envy_scaled(&self) -> i128 {
        let mut total = 0i128;
        for i in 0..self.n {
            for j in 0..self.n {
                total += self.pairwise_envy_scaled(i, j) as i128;
            }
        }
        total
    }

    pub fn envy_graph(&self) -> WeightedEnvyGraph {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.envies(i, j) {
                    edges.push(EnvyEdge { envier: i, envied: j, weight: self.approval_count(i, j) });
                }
            }
        }
        WeightedEnvyGraph { n: self.n, edges }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvyEdge {
    pub envier: usize,
    pub envied: usize,
    /// Number of agents, the envier included, approving the envy.
    pub weight: usize,
}

/// Envy edges of one allocation, sorted by (envier, envied).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedEnvyGraph {
    pub n: usize,
    pub edges: Vec<EnvyEdge>,
}

impl WeightedEnvyGraph {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weight(&self, envier: usize, envied: usize) -> Option<usize> {
        self.edges
            .iter()
            .find(|e| e.envier == envier && e.envied == envied)
            .map(|e| e.weight)
    }

    pub fn level(&self) -> AllocationLevel {
        let max = self.edges.iter().map(|e| e.weight).max().unwrap_or(0);
        AllocationLevel::from_max_approval(max, self.n)
    }
}

fn checked_values(norm: &NormalizedInstance, alloc: &Allocation) -> Result<BundleValues> {
    validate_allocation(norm.base(), alloc).map_err(|violations| {
        let msgs: Vec<String> = violations.iter().map(ToString::to_string).collect();
        argument(format!("invalid allocation: {}", msgs.join("; ")))
    })?;
    Ok(BundleValues::compute(norm, alloc))
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(argument(format!("agent pair ({i}, {j}) out of range (n = {n})")));
    }
    if i == j {
        return Err(argument(format!("envy is defined between two different agents, got ({i}, {i})")));
    }
    Ok(())
}

pub fn pairwise_envy(norm: &NormalizedInstance, alloc: &Allocation, i: usize, j: usize) -> Result<Rational> {
    check_pair(norm.agents(), i, j)?;
    let values = checked_values(norm, alloc)?;
    Ok(norm.unscale(values.pairwise_envy_scaled(i, j)))
}

/// Sum of all pairwise envies; zero exactly on envy-free allocations.
pub fn degree_of_envy(norm: &NormalizedInstance, alloc: &Allocation) -> Result<Rational> {
    let values = checked_values(norm, alloc)?;
    let total = i64::try_from(values.degree_of_envy_scaled())
        .map_err(|_| crate::error::Error::Capacity { bits: 128 })?;
    Ok(norm.unscale(total))
}

pub fn approval_count(norm: &NormalizedInstance, alloc: &Allocation, i: usize, j: usize) -> Result<usize> {
    check_pair(norm.agents(), i, j)?;
    Ok(checked_values(norm, alloc)?.approval_count(i, j))
}

/// Whether `i` envies `j` with at least `k` agents (including `i`) agreeing.
pub fn k_app_envies(norm: &NormalizedInstance, alloc: &Allocation, i: usize, j: usize, k: usize) -> Result<bool> {
    check_pair(norm.agents(), i, j)?;
    check_k(norm.agents(), k)?;
    let values = checked_values(norm, alloc)?;
    Ok(values.envies(i, j) && values.approval_count(i, j) >= k)
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(argument(format!("K = {k} outside [1, {n}]")));
    }
    Ok(())
}

pub fn allocation_level(norm: &NormalizedInstance, alloc: &Allocation) -> Result<AllocationLevel> {
    Ok(checked_values(norm, alloc)?.level())
}

pub fn is_k_app_envy_free(norm: &NormalizedInstance, alloc: &Allocation, k: usize) -> Result<bool> {
    check_k(norm.agents(), k)?;
    Ok(allocation_level(norm, alloc)?.is_free_at(k))
}

pub fn weighted_envy_graph(norm: &NormalizedInstance, alloc: &Allocation) -> Result<WeightedEnvyGraph> {
    Ok(checked_values(norm, alloc)?.envy_graph())
}

/// Strict-majority approval envy-freeness: level at most ⌈n/2⌉.
pub fn is_sm_app_ef(norm: &NormalizedInstance, alloc: &Allocation) -> Result<bool> {
    let level = allocation_level(norm, alloc)?;
    Ok(level_is_sm_app_ef(level, norm.agents()))
}

pub fn level_is_sm_app_ef(level: AllocationLevel, agents: usize) -> bool {
    level.is_free_at(agents.div_ceil(2).max(1))
}
