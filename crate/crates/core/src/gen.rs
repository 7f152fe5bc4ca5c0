//! Instance generators: random cultures and the two adversarial families
//! used in the hierarchy and swap arguments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{argument, Error, Result};
use crate::hap::{solve_hap, HapResult};
use crate::model::{normalize, Instance, Rational};
use crate::solver::{solve_min_k, BudgetExceeded, SolveKind, SolveOptions, SolveResult};

/// Largest utility drawn by the random cultures (inclusive; smallest is 0).
pub const MAX_UTILITY: i64 = 100;

/// Attempts allowed when regenerating until an instance is not envy-free.
pub const MAX_FILTER_ATTEMPTS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Culture {
    Uniform,
    /// Mixture of a shared reference row and private rows;
    /// `f64::INFINITY` makes all rows equal.
    Correlated(f64),
    /// Uniform with m = n.
    HapUniform,
}

impl std::fmt::Display for Culture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Culture::Uniform => write!(f, "uniform"),
            Culture::Correlated(c) if c.is_infinite() => write!(f, "correlated(inf)"),
            Culture::Correlated(c) => write!(f, "correlated({c})"),
            Culture::HapUniform => write!(f, "hap"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub culture: Culture,
    pub seed: u64,
    /// Regenerate until the instance admits no envy-free allocation.
    pub filter_non_ef: bool,
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<i64>> {
    (0..n).map(|_| (0..m).map(|_| rng.gen_range(0..=MAX_UTILITY)).collect()).collect()
}

fn check_agents(n: usize) -> Result<()> {
    if n == 0 {
        return Err(argument("at least one agent is required"));
    }
    Ok(())
}

fn check_concentration(c: f64) -> Result<()> {
    if c.is_nan() || c < 0.0 {
        return Err(argument(format!("concentration must be nonnegative, got {c}")));
    }
    Ok(())
}

fn correlated_rows(rng: &mut ChaCha8Rng, n: usize, m: usize, concentration: f64) -> Vec<Vec<i64>> {
    let private = uniform_rows(rng, n, m);
    let reference: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=MAX_UTILITY)).collect();
    let lambda = if concentration.is_infinite() { 1.0 } else { concentration / (1.0 + concentration) };
    private
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&reference)
                .map(|(p, &r)| (lambda * r as f64 + (1.0 - lambda) * p as f64).round() as i64)
                .collect()
        })
        .collect()
}

/// Utilities drawn i.i.d. uniformly from {0, ..., 100}.
pub fn gen_uniform(n: usize, m: usize, seed: u64) -> Result<Instance> {
    check_agents(n)?;
    Instance::from_integer_rows(&uniform_rows(&mut ChaCha8Rng::seed_from_u64(seed), n, m))
}

/// Each row is `round(λ r + (1 - λ) p)` for a shared reference row `r` and a
/// private uniform row `p`, with `λ = c / (1 + c)`. The private rows are
/// drawn first, so `c = 0` reproduces [`gen_uniform`] for the same seed.
pub fn gen_correlated(n: usize, m: usize, concentration: f64, seed: u64) -> Result<Instance> {
    check_agents(n)?;
    check_concentration(concentration)?;
    let rows = correlated_rows(&mut ChaCha8Rng::seed_from_u64(seed), n, m, concentration);
    Instance::from_integer_rows(&rows)
}

/// A uniform instance where every agent values item 1 above all her other
/// items together, so whoever gets it is envied by everybody else.
pub fn gen_unanimous_seed(n: usize, m: usize, seed: u64) -> Result<Instance> {
    check_agents(n)?;
    if m == 0 {
        return Err(argument("at least one item is required"));
    }
    let mut rows = uniform_rows(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
    for row in &mut rows {
        row[0] = row[1..].iter().sum::<i64>() + 1;
    }
    Instance::from_integer_rows(&rows)
}

/// The n x n instance whose optimum is exactly h + 1, attained by the
/// identity allocation; `2 <= h <= n - 1`.
pub fn gen_hierarchy_instance(n: usize, h: usize) -> Result<Instance> {
    if h < 2 || h + 1 > n {
        return Err(argument(format!("hierarchy instance needs 2 <= h <= n - 1, got n = {n}, h = {h}")));
    }
    let denom = n as i64 + 1;
    let eps = Rational::new(1, 2 * denom);
    let half = Rational::new(1, 2);
    let one = Rational::from_integer(1);
    let mut rows = vec![vec![eps; n]; n];
    rows[0][0] = one;
    for (i, row) in rows.iter_mut().enumerate().take(h - 1).skip(1) {
        row[0] = half;
        row[i] = half;
    }
    for (i, row) in rows.iter_mut().enumerate().take(n - 1).skip(h - 1) {
        row[i] = one;
    }
    let last = &mut rows[n - 1];
    last.fill(Rational::new(1, denom));
    last[0] = Rational::new(2, denom);
    Instance::from_rows(rows)
}

/// The n x n instance where the weakly improving swap of a1's and a2's
/// identity bundles raises the allocation level; `0 <= h <= n - 3`.
/// Agents 4..=h+3 form one group and agents h+4..=n the other.
pub fn gen_swap_worsens_instance(n: usize, h: usize) -> Result<Instance> {
    if n < 4 || h + 3 > n {
        return Err(argument(format!("swap instance needs n >= 4 and 0 <= h <= n - 3, got n = {n}, h = {h}")));
    }
    let mut rows = vec![vec![0i64; n]; n];
    rows[0][..3].copy_from_slice(&[1, 2, 7]);
    rows[1][..2].copy_from_slice(&[2, 2]);
    rows[2][2] = 10;
    for (l, row) in rows.iter_mut().enumerate().skip(3) {
        if l < h + 3 {
            row[0] = 5;
            row[2] = 5;
        } else {
            row[1] = 4;
            row[2] = 5;
        }
        row[3..].fill(6);
    }
    Instance::from_integer_rows(&rows)
}

/// Outcome of the solve that certified a filtered instance.
#[derive(Debug, Clone)]
pub enum Certificate {
    General(std::result::Result<SolveResult, BudgetExceeded>),
    House(HapResult),
}

impl Certificate {
    /// The instance is known to admit an envy-free allocation.
    pub fn is_envy_free(&self) -> bool {
        match self {
            Certificate::General(Ok(r)) => matches!(r.kind, SolveKind::MinK { k: 1, .. }),
            Certificate::General(Err(_)) => false,
            Certificate::House(r) => r.k() == Some(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub attempts: u64,
    /// Present when `filter_non_ef` was set: the solve of the kept instance.
    pub certificate: Option<Certificate>,
}

/// Certifies envy-freeness with the solver matching the culture: the house
/// allocation algorithm for `HapUniform`, exhaustive search otherwise.
pub fn certify(instance: &Instance, culture: Culture, opts: &SolveOptions) -> Result<Certificate> {
    let norm = normalize(instance)?;
    Ok(match culture {
        Culture::HapUniform => Certificate::House(solve_hap(&norm)?),
        _ => Certificate::General(solve_min_k(&norm, opts)),
    })
}

/// Draws an instance from `cfg`. With `filter_non_ef`, successive draws from
/// the same seeded stream are made until one is not certified envy-free; an
/// instance whose solve runs out of budget is kept.
pub fn generate(cfg: &GenConfig, opts: &SolveOptions) -> Result<Generated> {
    check_agents(cfg.n)?;
    let m = match cfg.culture {
        Culture::HapUniform if cfg.m != cfg.n => {
            return Err(argument(format!("house allocation culture needs m = n, got n = {}, m = {}", cfg.n, cfg.m)));
        }
        Culture::Correlated(c) => {
            check_concentration(c)?;
            cfg.m
        }
        _ => cfg.m,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let rows = match cfg.culture {
            Culture::Uniform | Culture::HapUniform => uniform_rows(&mut rng, cfg.n, m),
            Culture::Correlated(c) => correlated_rows(&mut rng, cfg.n, m, c),
        };
        let instance = Instance::from_integer_rows(&rows)?;
        if !cfg.filter_non_ef {
            return Ok(Generated { instance, attempts, certificate: None });
        }
        let certificate = certify(&instance, cfg.culture, opts)?;
        if !certificate.is_envy_free() {
            return Ok(Generated { instance, attempts, certificate: Some(certificate) });
        }
        if attempts >= MAX_FILTER_ATTEMPTS {
            return Err(Error::Validation(format!(
                "no instance without an envy-free allocation after {attempts} draws (n = {}, m = {m})",
                cfg.n
            )));
        }
    }
}
