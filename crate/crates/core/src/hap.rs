//! House allocation: n agents, n items, one item each.
//!
//! With one item per bundle, whether agent i may hold item j without
//! exceeding a given approval count no longer depends on the rest of the
//! allocation: every other item is held by somebody. Minimizing K becomes a
//! bottleneck perfect matching, solved by binary search on the threshold.

use crate::error::{argument, Result};
use crate::model::{Allocation, NormalizedInstance};

fn require_hap(norm: &NormalizedInstance) -> Result<()> {
    if norm.agents() != norm.items() {
        return Err(argument(format!(
            "house allocation needs as many items as agents (n = {}, m = {})",
            norm.agents(),
            norm.items()
        )));
    }
    Ok(())
}

/// Returns an item pair `(j, j')` such that every agent strictly prefers
/// `j'` to `j`, if one exists. Such a pair makes the holder of `j` envy the
/// holder of `j'` unanimously in every allocation.
pub fn is_unanimous_envy_hap(norm: &NormalizedInstance) -> Result<Option<(usize, usize)>> {
    require_hap(norm)?;
    let (n, m) = (norm.agents(), norm.items());
    for j in 0..m {
        for jp in 0..m {
            if j != jp && (0..n).all(|k| norm.value(k, jp) > norm.value(k, j)) {
                return Ok(Some((j, jp)));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxEnvyMatrix {
    /// `prec_counts[j][j']`: agents strictly preferring `j'` to `j`.
    pub prec_counts: Vec<Vec<usize>>,
    /// `max_envy[i][j]`: largest `prec_counts[j][j']` over the items `j'`
    /// agent i strictly prefers to `j`; 0 for her top items.
    pub max_envy: Vec<Vec<usize>>,
}

impl MaxEnvyMatrix {
    pub fn agents(&self) -> usize {
        self.max_envy.len()
    }
}

pub fn compute_max_envy(norm: &NormalizedInstance) -> Result<MaxEnvyMatrix> {
    require_hap(norm)?;
    let n = norm.agents();
    let mut prec_counts = vec![vec![0usize; n]; n];
    for (j, row) in prec_counts.iter_mut().enumerate() {
        for (jp, count) in row.iter_mut().enumerate() {
            *count = (0..n).filter(|&k| norm.value(k, jp) > norm.value(k, j)).count();
        }
    }
    let max_envy = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .filter(|&jp| norm.value(i, jp) > norm.value(i, j))
                        .map(|jp| prec_counts[j][jp])
                        .max()
                        .unwrap_or(0)
                })
                .collect()
        })
        .collect();
    Ok(MaxEnvyMatrix { prec_counts, max_envy })
}

/// Perfect matching using only edges with `max_envy <= t`, by augmenting
/// paths from agents in index order, items tried in index order.
pub fn threshold_matching(matrix: &MaxEnvyMatrix, t: usize) -> Option<Allocation> {
    let n = matrix.agents();
    let mut holder: Vec<Option<usize>> = vec![None; n];

    fn augment(agent: usize, matrix: &MaxEnvyMatrix, t: usize, seen: &mut [bool], holder: &mut [Option<usize>]) -> bool {
        for item in 0..seen.len() {
            if matrix.max_envy[agent][item] > t || seen[item] {
                continue;
            }
            seen[item] = true;
            let free = match holder[item] {
                None => true,
                Some(other) => augment(other, matrix, t, seen, holder),
            };
            if free {
                holder[item] = Some(agent);
                return true;
            }
        }
        false
    }

    for agent in 0..n {
        let mut seen = vec![false; n];
        if !augment(agent, matrix, t, &mut seen, &mut holder) {
            return None;
        }
    }
    Some(Allocation::new(holder.into_iter().map(|h| h.expect("perfect matching")).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HapKind {
    Solved { k: usize, matching: Allocation },
    UnanimousEnvyInstance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HapResult {
    pub kind: HapKind,
    pub matchings_solved: usize,
}

impl HapResult {
    pub fn k(&self) -> Option<usize> {
        match self.kind {
            HapKind::Solved { k, .. } => Some(k),
            HapKind::UnanimousEnvyInstance => None,
        }
    }
}

/// Smallest K for which some one-item-per-agent allocation is
/// (K-app envy)-free. The threshold t = n always admits a matching, so it is
/// never tested: reaching it means unanimous envy.
pub fn solve_hap(norm: &NormalizedInstance) -> Result<HapResult> {
    let matrix = compute_max_envy(norm)?;
    let n = norm.agents();
    let (mut low, mut high) = (0usize, n);
    let mut best = None;
    let mut matchings_solved = 0;
    while low < high {
        let mid = (low + high) / 2;
        matchings_solved += 1;
        match threshold_matching(&matrix, mid) {
            Some(matching) => {
                best = Some(matching);
                high = mid;
            }
            None => low = mid + 1,
        }
    }
    let kind = match best {
        Some(matching) if low < n => HapKind::Solved { k: low + 1, matching },
        _ => HapKind::UnanimousEnvyInstance,
    };
    Ok(HapResult { kind, matchings_solved })
}
