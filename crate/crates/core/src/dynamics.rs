//! Bundle swaps between two agents.
//!
//! A swap is weakly improving when both agents like the other's bundle at
//! least as much as their own and one of them strictly more. Such a swap
//! always lowers the degree of envy.
//!
//! Starting from a (2-app envy)-free allocation, the first envious agent
//! swaps with the holder of the bundle she values most. The envied agent
//! never agrees with that envy, so she weakly gains; the envier ends up
//! envying nobody; and any envy of the envied agent after the swap was
//! already present, with no more approval, before it. The allocation thus
//! stays (2-app envy)-free while the degree of envy strictly drops, until
//! no envy is left.
//!
//! Swapping with an arbitrary envied agent does not keep the level: see
//! `arbitrary_envious_swap_can_raise_level` in the tests.

use crate::envy::{AllocationLevel, BundleValues};
use crate::error::{argument, Error, Result};
use crate::model::{validate_allocation, Allocation, NormalizedInstance, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapStep {
    pub agent_a: usize,
    pub agent_b: usize,
    pub de_before: Rational,
    pub de_after: Rational,
    pub level_before: AllocationLevel,
    pub level_after: AllocationLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapTrace {
    pub allocation: Allocation,
    pub steps: Vec<SwapStep>,
}

fn values_for(norm: &NormalizedInstance, alloc: &Allocation) -> Result<BundleValues> {
    validate_allocation(norm.base(), alloc)
        .map_err(|v| argument(format!("invalid allocation ({} violations)", v.len())))?;
    Ok(BundleValues::compute(norm, alloc))
}

pub fn is_weakly_improving(values: &BundleValues, p: usize, q: usize) -> bool {
    let p_gain = values.get(p, q) - values.get(p, p);
    let q_gain = values.get(q, p) - values.get(q, q);
    p_gain >= 0 && q_gain >= 0 && (p_gain > 0 || q_gain > 0)
}

/// Lexicographically smallest pair `p < q` whose swap is weakly improving.
pub fn find_weakly_improving_swap(norm: &NormalizedInstance, alloc: &Allocation) -> Result<Option<(usize, usize)>> {
    let values = values_for(norm, alloc)?;
    let n = norm.agents();
    for p in 0..n {
        for q in p + 1..n {
            if is_weakly_improving(&values, p, q) {
                return Ok(Some((p, q)));
            }
        }
    }
    Ok(None)
}

/// Exchanges the whole bundles of `p` and `q`.
pub fn apply_swap(alloc: &Allocation, p: usize, q: usize) -> Result<Allocation> {
    if p == q {
        return Err(argument(format!("cannot swap agent {p} with itself")));
    }
    let owner = alloc
        .owner()
        .iter()
        .map(|&o| if o == p { q } else if o == q { p } else { o })
        .collect();
    Ok(Allocation::new(owner))
}

/// Swaps `p` and `q` and records the effect on degree of envy and level.
pub fn swap_step(norm: &NormalizedInstance, alloc: &Allocation, p: usize, q: usize) -> Result<(Allocation, SwapStep)> {
    if p >= norm.agents() || q >= norm.agents() {
        return Err(argument(format!("agent pair ({p}, {q}) out of range")));
    }
    let before = values_for(norm, alloc)?;
    let next = apply_swap(alloc, p, q)?;
    let after = BundleValues::compute(norm, &next);
    let step = SwapStep {
        agent_a: p,
        agent_b: q,
        de_before: unscale_wide(norm, before.degree_of_envy_scaled())?,
        de_after: unscale_wide(norm, after.degree_of_envy_scaled())?,
        level_before: before.level(),
        level_after: after.level(),
    };
    Ok((next, step))
}

fn unscale_wide(norm: &NormalizedInstance, scaled: i128) -> Result<Rational> {
    let scaled = i64::try_from(scaled).map_err(|_| Error::Capacity { bits: 128 })?;
    Ok(norm.unscale(scaled))
}

/// Turns a (2-app envy)-free allocation into an envy-free one.
///
/// Each step takes the smallest-index envious agent and swaps her bundle
/// with the one she values most (smallest index among ties).
pub fn ef_from_two_app_ef(norm: &NormalizedInstance, alloc: &Allocation) -> Result<SwapTrace> {
    let values = values_for(norm, alloc)?;
    let level = values.level();
    if !level.is_free_at(2) {
        return Err(argument(format!(
            "allocation must be (2-app envy)-free, it is {level}"
        )));
    }
    // Scaled utilities are integers, so each swap lowers de by at least 1.
    let max_steps = values.degree_of_envy_scaled();
    let mut current = alloc.clone();
    let mut current_values = values;
    let mut steps = Vec::new();
    while let Some((p, q)) = repair_pair(&current_values) {
        if steps.len() as i128 >= max_steps {
            return Err(argument("swap sequence failed to terminate; degree of envy did not decrease"));
        }
        let (next, step) = swap_step(norm, &current, p, q)?;
        debug_assert!(step.de_after < step.de_before);
        debug_assert!(step.level_after.is_free_at(2));
        steps.push(step);
        current_values = BundleValues::compute(norm, &next);
        current = next;
    }
    Ok(SwapTrace { allocation: current, steps })
}

fn repair_pair(values: &BundleValues) -> Option<(usize, usize)> {
    let n = values.agents();
    let p = (0..n).find(|&i| (0..n).any(|j| values.envies(i, j)))?;
    let favourite = (0..n).fold(p, |best, j| if values.get(p, j) > values.get(p, best) { j } else { best });
    Some((p, favourite))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envy::{allocation_level, degree_of_envy};
    use crate::model::{normalize, Instance};
    use proptest::prelude::*;

    fn norm(rows: &[Vec<i64>]) -> NormalizedInstance {
        normalize(&Instance::from_integer_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn no_swap_when_everyone_strictly_prefers_own() {
        let inst = norm(&[vec![5, 1], vec![1, 5]]);
        assert_eq!(find_weakly_improving_swap(&inst, &Allocation::new(vec![0, 1])).unwrap(), None);
    }

    #[test]
    fn mutual_preference_swap() {
        let inst = norm(&[vec![1, 5], vec![5, 1]]);
        let alloc = Allocation::new(vec![0, 1]);
        assert_eq!(find_weakly_improving_swap(&inst, &alloc).unwrap(), Some((0, 1)));
        let (next, step) = swap_step(&inst, &alloc, 0, 1).unwrap();
        assert_eq!(next, Allocation::new(vec![1, 0]));
        assert!(step.de_after < step.de_before);
        assert_eq!(step.level_after, AllocationLevel::Ef);
    }

    #[test]
    fn swap_is_an_involution() {
        let alloc = Allocation::new(vec![2, 0, 1, 1, 0, 3]);
        let back = apply_swap(&apply_swap(&alloc, 0, 1).unwrap(), 0, 1).unwrap();
        assert_eq!(back, alloc);
        assert_eq!(apply_swap(&alloc, 0, 1).unwrap(), Allocation::new(vec![2, 1, 0, 0, 1, 3]));
        // Agents 4 and 5 hold nothing.
        assert_eq!(apply_swap(&alloc, 4, 5).unwrap(), alloc);
        assert!(apply_swap(&alloc, 2, 2).is_err());
    }

    #[test]
    fn ef_input_needs_no_steps() {
        let inst = norm(&[vec![5, 1], vec![1, 5]]);
        let alloc = Allocation::new(vec![0, 1]);
        let trace = ef_from_two_app_ef(&inst, &alloc).unwrap();
        assert_eq!(trace.allocation, alloc);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn one_swap_fixes_two_agent_envy() {
        // a1 envies a2 (1 < 4); a2 is indifferent between the bundles, so
        // only a1 approves: level 2.
        let inst = norm(&[vec![1, 4], vec![3, 3]]);
        let alloc = Allocation::new(vec![0, 1]);
        assert_eq!(allocation_level(&inst, &alloc).unwrap(), AllocationLevel::Level(2));
        let trace = ef_from_two_app_ef(&inst, &alloc).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.allocation, Allocation::new(vec![1, 0]));
        assert_eq!(degree_of_envy(&inst, &trace.allocation).unwrap(), Rational::from_integer(0));
    }

    #[test]
    fn rejects_allocations_above_level_two() {
        let inst = normalize(&crate::model::fixtures::example_one()).unwrap();
        let err = ef_from_two_app_ef(&inst, &crate::model::fixtures::example_one_allocation());
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    #[test]
    fn arbitrary_envious_swap_can_raise_level() {
        // o1 -> a1, o2 -> a3, o3 -> a2: only a1 envies (a2 and a3), nobody
        // agrees, so the level is 2. a3 is indifferent between o1 and o2, so
        // swapping a1 and a3 is weakly improving, yet afterwards a2 agrees
        // that a1 (now holding o2) should envy a2's o3.
        let inst = norm(&[vec![0, 1, 2], vec![4, 0, 4], vec![4, 4, 0]]);
        let alloc = Allocation::new(vec![0, 2, 1]);
        let values = BundleValues::compute(&inst, &alloc);
        assert_eq!(values.level(), AllocationLevel::Level(2));
        assert!(is_weakly_improving(&values, 0, 2));
        let (_, step) = swap_step(&inst, &alloc, 0, 2).unwrap();
        assert_eq!(step.level_after, AllocationLevel::Level(3));
        assert!(step.de_after < step.de_before);

        // The repair swaps a1 with a2 instead, whose bundle a1 values most.
        assert_eq!(repair_pair(&values), Some((0, 1)));
        let trace = ef_from_two_app_ef(&inst, &alloc).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].level_after, AllocationLevel::Ef);
    }

    fn instance_and_allocation() -> impl Strategy<Value = (NormalizedInstance, Allocation)> {
        (2usize..5, 1usize..7).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(proptest::collection::vec(0i64..5, m), n),
                proptest::collection::vec(0..n, m),
            )
                .prop_map(|(rows, owner)| (norm(&rows), Allocation::new(owner)))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn weakly_improving_swaps_lower_degree_of_envy((inst, alloc) in instance_and_allocation()) {
            let values = BundleValues::compute(&inst, &alloc);
            let n = inst.agents();
            for p in 0..n {
                for q in p + 1..n {
                    if is_weakly_improving(&values, p, q) {
                        let (_, step) = swap_step(&inst, &alloc, p, q).unwrap();
                        prop_assert!(step.de_after < step.de_before);
                    }
                }
            }
        }

        #[test]
        fn favourite_swap_keeps_two_app_envy_freeness((inst, _) in instance_and_allocation()) {
            let opts = crate::solver::SolveOptions::unlimited();
            let mut failures = Vec::new();
            crate::solver::for_each_allocation(&inst, &opts, |owner, values| {
                if values.level().is_free_at(2) {
                    if let Some((p, q)) = repair_pair(values) {
                        let alloc = Allocation::new(owner.to_vec());
                        let (_, step) = swap_step(&inst, &alloc, p, q).unwrap();
                        if !is_weakly_improving(values, p, q)
                            || !step.level_after.is_free_at(2)
                            || step.de_after >= step.de_before
                        {
                            failures.push(owner.to_vec());
                        }
                    }
                }
                std::ops::ControlFlow::Continue(())
            });
            prop_assert!(failures.is_empty(), "{:?}", failures);
        }

        #[test]
        fn repair_reaches_envy_freeness((inst, alloc) in instance_and_allocation()) {
            let level = allocation_level(&inst, &alloc).unwrap();
            match ef_from_two_app_ef(&inst, &alloc) {
                Ok(trace) => {
                    prop_assert!(level.is_free_at(2));
                    prop_assert_eq!(allocation_level(&inst, &trace.allocation).unwrap(), AllocationLevel::Ef);
                    for step in &trace.steps {
                        prop_assert!(step.de_after < step.de_before);
                        prop_assert!(step.level_after.is_free_at(2));
                    }
                }
                Err(_) => prop_assert!(!level.is_free_at(2)),
            }
        }
    }
}
