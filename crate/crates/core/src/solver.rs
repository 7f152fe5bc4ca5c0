//! Exact minimum-K search over all n^m allocations.
//!
//! Items are assigned in index order and agents tried in index order,
//! depth first, with bundle values maintained incrementally. Only complete
//! allocations are compared with the incumbent: adding items can remove
//! envy, so the level of a partial allocation says nothing about its
//! completions. The search stops early as soon as an envy-free allocation
//! shows up.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use crate::envy::{check_k, AllocationLevel, BundleValues};
use crate::error::{Error, Result};
use crate::model::{Allocation, NormalizedInstance};

/// Default number of complete allocations a search may examine.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Maximum number of complete allocations to examine; `None` = unlimited.
    pub budget: Option<u64>,
    pub timeout: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { budget: Some(DEFAULT_BUDGET), timeout: None }
    }
}

impl SolveOptions {
    pub fn unlimited() -> Self {
        Self { budget: None, timeout: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveKind {
    /// Smallest K admitting a (K-app envy)-free allocation, with a witness.
    MinK { k: usize, witness: Allocation },
    /// No allocation is (K-app envy)-free for any K.
    UnanimousEnvyInstance,
}

impl SolveKind {
    pub fn k(&self) -> Option<usize> {
        match self {
            SolveKind::MinK { k, .. } => Some(*k),
            SolveKind::UnanimousEnvyInstance => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub kind: SolveKind,
    pub explored: u64,
    pub elapsed: Duration,
}

/// The search stopped before proving optimality.
#[derive(Debug, Clone)]
pub struct BudgetExceeded {
    /// Best allocation seen so far and its level.
    pub best: Option<(AllocationLevel, Allocation)>,
    pub explored: u64,
    pub elapsed: Duration,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Visitor,
    Budget,
    Timeout,
}

/// Outcome of a walk over allocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Walk {
    pub visited: u64,
    /// The visitor returned `Break`.
    pub stopped_by_visitor: bool,
    pub exhausted_budget: bool,
    pub timed_out: bool,
}

impl Walk {
    pub fn complete(&self) -> bool {
        !self.stopped_by_visitor && !self.exhausted_budget && !self.timed_out
    }
}

struct Walker<'a, F> {
    norm: &'a NormalizedInstance,
    n: usize,
    m: usize,
    owner: Vec<usize>,
    values: BundleValues,
    visited: u64,
    budget: u64,
    deadline: Option<Instant>,
    visit: F,
}

impl<F> Walker<'_, F>
where
    F: FnMut(&[usize], &BundleValues) -> ControlFlow<()>,
{
    fn descend(&mut self, item: usize) -> ControlFlow<Stop> {
        if item == self.m {
            if self.visited >= self.budget {
                return ControlFlow::Break(Stop::Budget);
            }
            self.visited += 1;
            if self.visited & 0xFFFF == 0 {
                if let Some(deadline) = self.deadline {
                    if Instant::now() >= deadline {
                        return ControlFlow::Break(Stop::Timeout);
                    }
                }
            }
            return match (self.visit)(&self.owner, &self.values) {
                ControlFlow::Continue(()) => ControlFlow::Continue(()),
                ControlFlow::Break(()) => ControlFlow::Break(Stop::Visitor),
            };
        }
        let (n, norm) = (self.n, self.norm);
        for agent in 0..n {
            self.owner[item] = agent;
            let raw = self.values.raw_mut();
            for k in 0..n {
                raw[k * n + agent] += norm.value(k, item);
            }
            let flow = self.descend(item + 1);
            let raw = self.values.raw_mut();
            for k in 0..n {
                raw[k * n + agent] -= norm.value(k, item);
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Calls `visit` on every allocation (owner vector and bundle values) in
/// search order until it breaks or the limits in `opts` are hit.
pub fn for_each_allocation<F>(norm: &NormalizedInstance, opts: &SolveOptions, visit: F) -> Walk
where
    F: FnMut(&[usize], &BundleValues) -> ControlFlow<()>,
{
    let n = norm.agents();
    let m = norm.items();
    let mut walker = Walker {
        norm,
        n,
        m,
        owner: vec![0; m],
        values: BundleValues::from_raw(n, vec![0; n * n]),
        visited: 0,
        budget: opts.budget.unwrap_or(u64::MAX),
        deadline: opts.timeout.map(|t| Instant::now() + t),
        visit,
    };
    let flow = walker.descend(0);
    let stop = match flow {
        ControlFlow::Continue(()) => None,
        ControlFlow::Break(stop) => Some(stop),
    };
    Walk {
        visited: walker.visited,
        stopped_by_visitor: stop == Some(Stop::Visitor),
        exhausted_budget: stop == Some(Stop::Budget),
        timed_out: stop == Some(Stop::Timeout),
    }
}

/// Finds the smallest K for which a (K-app envy)-free allocation exists.
pub fn solve_min_k(norm: &NormalizedInstance, opts: &SolveOptions) -> std::result::Result<SolveResult, BudgetExceeded> {
    let start = Instant::now();
    let mut best: Option<(AllocationLevel, Vec<usize>)> = None;
    let walk = for_each_allocation(norm, opts, |owner, values| {
        let improves = match &best {
            None => true,
            Some((level, _)) => values.level_below(*level),
        };
        if improves {
            let level = values.level();
            best = Some((level, owner.to_vec()));
            if level == AllocationLevel::Ef {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    let elapsed = start.elapsed();
    let best = best.map(|(level, owner)| (level, Allocation::new(owner)));
    if walk.exhausted_budget || walk.timed_out {
        return Err(BudgetExceeded { best, explored: walk.visited, elapsed, timed_out: walk.timed_out });
    }
    let (level, witness) = best.expect("at least one allocation exists");
    let kind = match level.k() {
        Some(k) => SolveKind::MinK { k, witness },
        None => SolveKind::UnanimousEnvyInstance,
    };
    Ok(SolveResult { kind, explored: walk.visited, elapsed })
}

/// Returns the first allocation (in search order) that is (K-app envy)-free.
pub fn exists_k_app_ef(norm: &NormalizedInstance, k: usize, opts: &SolveOptions) -> Result<Option<Allocation>> {
    check_k(norm.agents(), k)?;
    let mut found = None;
    let walk = for_each_allocation(norm, opts, |owner, values| {
        if values.is_free_at(k) {
            found = Some(Allocation::new(owner.to_vec()));
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if found.is_none() && (walk.exhausted_budget || walk.timed_out) {
        return Err(Error::BudgetExceeded { explored: walk.visited });
    }
    Ok(found)
}
