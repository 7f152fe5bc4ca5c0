//! Instances, allocations and integer normalization.
//!
//! An [`Instance`] holds one nonnegative rational utility per (agent, item)
//! pair and bundle utilities are additive. Agents and items are identified
//! by position; names are carried along for I/O only.
//!
//! Every envy computation in the crate runs on a [`NormalizedInstance`], in
//! which all utilities have been multiplied by the least common multiple of
//! their denominators. Comparisons between bundle utilities are unchanged by
//! this positive scaling, so strict and non-strict preferences are decided
//! exactly on 64-bit integers.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{argument, Error, Result};

/// Exact nonnegative utility value, always kept in lowest terms.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    agent_names: Vec<String>,
    item_names: Vec<String>,
    utilities: Vec<Vec<Rational>>,
}

impl Instance {
    pub fn new(
        agent_names: Vec<String>,
        item_names: Vec<String>,
        utilities: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if agent_names.is_empty() {
            return Err(Error::Validation("an instance needs at least one agent".into()));
        }
        if utilities.len() != agent_names.len() {
            return Err(Error::Validation(format!(
                "{} agents declared but the utility matrix has {} rows",
                agent_names.len(),
                utilities.len()
            )));
        }
        for (i, row) in utilities.iter().enumerate() {
            if row.len() != item_names.len() {
                return Err(Error::Validation(format!(
                    "{} items declared but row {} ({}) has {} entries",
                    item_names.len(),
                    i + 1,
                    agent_names[i],
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|u| u.is_negative()) {
                return Err(Error::Validation(format!(
                    "negative utility {} for agent {} on item {}",
                    row[j], agent_names[i], item_names[j]
                )));
            }
        }
        Ok(Self { agent_names, item_names, utilities })
    }

    /// Builds an instance with default names `a1..an` and `o1..om`.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Self::new(default_names('a', n), default_names('o', m), rows)
    }

    pub fn from_integer_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&u| Rational::from_integer(u)).collect())
                .collect(),
        )
    }

    pub fn agents(&self) -> usize {
        self.agent_names.len()
    }

    pub fn items(&self) -> usize {
        self.item_names.len()
    }

    pub fn utility(&self, agent: usize, item: usize) -> Rational {
        self.utilities[agent][item]
    }

    pub fn utilities(&self) -> &[Vec<Rational>] {
        &self.utilities
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agent_names
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    /// True when every agent has exactly the same utility row.
    pub fn has_identical_preferences(&self) -> bool {
        self.utilities.windows(2).all(|w| w[0] == w[1])
    }
}

pub(crate) fn default_names(prefix: char, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

/// A total assignment of items to agents: `owner[j]` holds item `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    owner: Vec<usize>,
}

impl Allocation {
    pub fn new(owner: Vec<usize>) -> Self {
        Self { owner }
    }

    /// Builds an allocation from per-agent bundles. Every item in `0..items`
    /// must appear in exactly one bundle.
    pub fn from_bundles(bundles: &[Vec<usize>], items: usize) -> Result<Self> {
        let mut owner = vec![usize::MAX; items];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &item in bundle {
                if item >= items {
                    return Err(argument(format!("item {item} out of range (m = {items})")));
                }
                if owner[item] != usize::MAX {
                    return Err(argument(format!("item {item} assigned twice")));
                }
                owner[item] = agent;
            }
        }
        if let Some(item) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(argument(format!("item {item} is not assigned")));
        }
        Ok(Self { owner })
    }

    /// The allocation giving item `i` to agent `i` (house allocation identity).
    pub fn identity(n: usize) -> Self {
        Self { owner: (0..n).collect() }
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn owner_of(&self, item: usize) -> usize {
        self.owner[item]
    }

    pub fn items(&self) -> usize {
        self.owner.len()
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter(|&(_, &o)| o == agent)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn bundles(&self, agents: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); agents];
        for (j, &o) in self.owner.iter().enumerate() {
            if o < agents {
                out[o].push(j);
            }
        }
        out
    }

    /// True when every agent in `0..agents` holds exactly one item.
    pub fn is_house_allocation(&self, agents: usize) -> bool {
        let mut seen = vec![false; agents];
        self.owner.len() == agents
            && self.owner.iter().all(|&o| o < agents && !std::mem::replace(&mut seen[o], true))
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, o) in self.owner.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch { expected: usize, found: usize },
    OwnerOutOfRange { item: usize, owner: usize, agents: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: {found} owners for {expected} items")
            }
            Violation::OwnerOutOfRange { item, owner, agents } => {
                write!(f, "owner out of range: item {item} given to agent {owner} (n = {agents})")
            }
        }
    }
}

/// Checks that `alloc` assigns each of the instance's items to exactly one
/// in-range agent. Returns every violated condition.
pub fn validate_allocation(inst: &Instance, alloc: &Allocation) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if alloc.items() != inst.items() {
        violations.push(Violation::LengthMismatch { expected: inst.items(), found: alloc.items() });
    }
    for (item, &owner) in alloc.owner().iter().enumerate() {
        if owner >= inst.agents() {
            violations.push(Violation::OwnerOutOfRange { item, owner, agents: inst.agents() });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Exact additive utility of `bundle` for `agent`.
pub fn bundle_utility(inst: &Instance, agent: usize, bundle: &[usize]) -> Result<Rational> {
    if agent >= inst.agents() {
        return Err(argument(format!("agent {agent} out of range (n = {})", inst.agents())));
    }
    let mut seen = HashSet::with_capacity(bundle.len());
    let mut total = BigRational::zero();
    for &item in bundle {
        if item >= inst.items() {
            return Err(argument(format!("item {item} out of range (m = {})", inst.items())));
        }
        if !seen.insert(item) {
            return Err(argument(format!("item {item} listed twice in bundle")));
        }
        let u = inst.utility(agent, item);
        total += BigRational::new(BigInt::from(*u.numer()), BigInt::from(*u.denom()));
    }
    to_small_rational(&total)
}

fn to_small_rational(value: &BigRational) -> Result<Rational> {
    match (value.numer().to_i64(), value.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Rational::new(n, d)),
        _ => Err(Error::Capacity { bits: value.numer().bits().max(value.denom().bits()) + 1 }),
    }
}

/// Integer-scaled copy of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedInstance {
    base: Instance,
    scale: i64,
    int_utilities: Vec<i64>,
    row_sums: Vec<i64>,
}

impl NormalizedInstance {
    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn agents(&self) -> usize {
        self.base.agents()
    }

    pub fn items(&self) -> usize {
        self.base.items()
    }

    /// Scaled utility of `item` for `agent`.
    #[inline]
    pub fn value(&self, agent: usize, item: usize) -> i64 {
        self.int_utilities[agent * self.items() + item]
    }

    pub fn row(&self, agent: usize) -> &[i64] {
        let m = self.items();
        &self.int_utilities[agent * m..(agent + 1) * m]
    }

    pub fn int_utilities(&self) -> Vec<Vec<i64>> {
        (0..self.agents()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Scaled utility of the whole item set for `agent`.
    pub fn row_sum(&self, agent: usize) -> i64 {
        self.row_sums[agent]
    }

    pub fn max_row_sum(&self) -> i64 {
        self.row_sums.iter().copied().max().unwrap_or(0)
    }

    /// Converts a scaled quantity back to the instance's rational units.
    pub fn unscale(&self, scaled: i64) -> Rational {
        Rational::new(scaled, self.scale)
    }
}

/// Multiplies every utility by the lcm of all denominators.
///
/// Fails with [`Error::Capacity`] when the scale, a scaled entry, or a
/// scaled row sum plus one does not fit in an `i64`.
pub fn normalize(inst: &Instance) -> Result<NormalizedInstance> {
    let mut scale = BigInt::one();
    for row in inst.utilities() {
        for u in row {
            scale = scale.lcm(&BigInt::from(*u.denom()));
        }
    }
    let mut needed_bits = scale.bits();
    let mut int_utilities = Vec::with_capacity(inst.agents() * inst.items());
    let mut big_rows = Vec::with_capacity(inst.agents());
    for row in inst.utilities() {
        let mut sum = BigInt::zero();
        for u in row {
            let scaled = BigInt::from(*u.numer()) * (&scale / BigInt::from(*u.denom()));
            sum += &scaled;
            int_utilities.push(scaled);
        }
        // Row sum + 1 bounds every bundle difference and the MIP's big-M.
        needed_bits = needed_bits.max((sum.clone() + 1u32).bits());
        big_rows.push(sum);
    }
    if needed_bits > 63 {
        return Err(Error::Capacity { bits: needed_bits + 1 });
    }
    let as_i64 = |b: &BigInt| b.to_i64().expect("checked against 63 bits");
    Ok(NormalizedInstance {
        base: inst.clone(),
        scale: as_i64(&scale),
        int_utilities: int_utilities.iter().map(as_i64).collect(),
        row_sums: big_rows.iter().map(as_i64).collect(),
    })
}
