//! Batch experiments: draw instances per (n, m), solve each, summarize.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{argument, Error, Result};
use crate::gen::{certify, generate, Certificate, Culture, GenConfig};
use crate::solver::{SolveKind, SolveOptions};

/// Item counts to pair with each agent count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemSpec {
    /// The same list for every n.
    List(Vec<usize>),
    /// m = n + offset.
    Offset(usize),
}

impl ItemSpec {
    pub fn for_agents(&self, n: usize) -> Vec<usize> {
        match self {
            ItemSpec::List(ms) => ms.clone(),
            ItemSpec::Offset(k) => vec![n + k],
        }
    }
}

impl FromStr for ItemSpec {
    type Err = Error;

    /// Accepts `7`, `5,6,7` or `n+2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(offset) = s.strip_prefix("n+") {
            return offset.trim().parse().map(ItemSpec::Offset).map_err(|_| argument(format!("bad item offset `{s}`")));
        }
        if s == "n" {
            return Ok(ItemSpec::Offset(0));
        }
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| argument(format!("bad item count `{p}`"))))
            .collect::<Result<Vec<_>>>()
            .map(ItemSpec::List)
    }
}

/// Parses `3..6` (inclusive), `3,4,6` or `5`.
pub fn parse_agent_range(s: &str) -> Result<Vec<usize>> {
    let bad = || argument(format!("bad agent range `{s}`"));
    let ns: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(bad());
    }
    Ok(ns)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub culture: Culture,
    pub agents: Vec<usize>,
    pub items: ItemSpec,
    pub count: usize,
    pub seed: u64,
    pub filter_non_ef: bool,
    pub solve: SolveOptions,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    EnvyFree,
    MinK(usize),
    Unanimous,
    /// Budget or timeout hit before optimality was proven.
    Unsolved,
}

impl Outcome {
    fn label(self) -> &'static str {
        match self {
            Outcome::EnvyFree => "ef",
            Outcome::MinK(_) => "min_k",
            Outcome::Unanimous => "unanimous",
            Outcome::Unsolved => "unsolved",
        }
    }

    fn k(self) -> Option<usize> {
        match self {
            Outcome::EnvyFree => Some(1),
            Outcome::MinK(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub n: usize,
    pub m: usize,
    pub culture: String,
    pub index: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub m: usize,
    pub culture: String,
    pub count: usize,
    pub solved: usize,
    pub envy_free: usize,
    pub finite_k: usize,
    pub unanimous: usize,
    pub pct_opt: f64,
    pub pct_uei: f64,
    pub pct_smaef: f64,
    /// Mean of K/n over solved instances with 1 < K <= n.
    pub mean_k_over_n: Option<f64>,
    pub mean_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub instances: Vec<InstanceRecord>,
}

pub const SUMMARY_HEADER: [&str; 9] =
    ["n", "m", "culture", "count", "pct_opt", "pct_uei", "pct_smaef", "mean_k_over_n", "mean_time_s"];

pub const INSTANCE_HEADER: [&str; 10] = ["n", "m", "m_over_n", "culture", "index", "seed", "outcome", "k", "k_over_n", "time_s"];

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        f64::NAN
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.digits$}"),
        _ => "NaN".into(),
    }
}

impl ReportRow {
    fn from_records(records: &[&InstanceRecord]) -> Self {
        let first = records[0];
        let n = first.n;
        let solved: Vec<&&InstanceRecord> = records.iter().filter(|r| r.outcome != Outcome::Unsolved).collect();
        let count_of = |pred: &dyn Fn(Outcome) -> bool| solved.iter().filter(|r| pred(r.outcome)).count();
        let envy_free = count_of(&|o| o == Outcome::EnvyFree);
        let finite_k = count_of(&|o| matches!(o, Outcome::MinK(_)));
        let unanimous = count_of(&|o| o == Outcome::Unanimous);
        let majority = n.div_ceil(2).max(1);
        let smaef = count_of(&|o| o.k().is_some_and(|k| k <= majority));
        let ratios: Vec<f64> = solved.iter().filter_map(|r| match r.outcome {
            Outcome::MinK(k) => Some(k as f64 / n as f64),
            _ => None,
        }).collect();
        let times: Vec<f64> = solved.iter().map(|r| r.time_s).collect();
        ReportRow {
            n,
            m: first.m,
            culture: first.culture.clone(),
            count: records.len(),
            solved: solved.len(),
            envy_free,
            finite_k,
            unanimous,
            pct_opt: percent(solved.len(), records.len()),
            pct_uei: percent(unanimous, solved.len()),
            pct_smaef: percent(smaef, solved.len()),
            mean_k_over_n: mean(&ratios),
            mean_time_s: mean(&times),
        }
    }

    fn csv_fields(&self) -> [String; 9] {
        [
            self.n.to_string(),
            self.m.to_string(),
            self.culture.clone(),
            self.count.to_string(),
            fmt_opt(Some(self.pct_opt), 2),
            fmt_opt(Some(self.pct_uei), 2),
            fmt_opt(Some(self.pct_smaef), 2),
            fmt_opt(self.mean_k_over_n, 4),
            fmt_opt(self.mean_time_s, 6),
        ]
    }
}

impl ExperimentReport {
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SUMMARY_HEADER).map_err(csv_error)?;
        for row in &self.rows {
            out.write_record(row.csv_fields()).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One line per instance with its K/n, for plotting against n or m/n.
    pub fn write_instances_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(INSTANCE_HEADER).map_err(csv_error)?;
        for r in &self.instances {
            let k = r.outcome.k();
            out.write_record([
                r.n.to_string(),
                r.m.to_string(),
                format!("{:.4}", r.m as f64 / r.n as f64),
                r.culture.clone(),
                r.index.to_string(),
                r.seed.to_string(),
                r.outcome.label().to_string(),
                k.map_or_else(String::new, |k| k.to_string()),
                fmt_opt(k.map(|k| k as f64 / r.n as f64), 4),
                format!("{:.6}", r.time_s),
            ])
            .map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn outcome_of(certificate: &Certificate) -> Outcome {
    match certificate {
        Certificate::General(Ok(r)) => match r.kind {
            SolveKind::MinK { k: 1, .. } => Outcome::EnvyFree,
            SolveKind::MinK { k, .. } => Outcome::MinK(k),
            SolveKind::UnanimousEnvyInstance => Outcome::Unanimous,
        },
        Certificate::General(Err(_)) => Outcome::Unsolved,
        Certificate::House(r) => match r.k() {
            Some(1) => Outcome::EnvyFree,
            Some(k) => Outcome::MinK(k),
            None => Outcome::Unanimous,
        },
    }
}

struct Slot {
    n: usize,
    m: usize,
    index: usize,
    seed: u64,
}

fn run_slot(cfg: &ExperimentConfig, slot: &Slot) -> Result<InstanceRecord> {
    let gen_cfg = GenConfig { n: slot.n, m: slot.m, culture: cfg.culture, seed: slot.seed, filter_non_ef: cfg.filter_non_ef };
    let generated = generate(&gen_cfg, &cfg.solve)?;
    // The filtering solve already decided the kept instance; reuse it.
    let (certificate, time_s) = match generated.certificate {
        Some(Certificate::General(result)) => {
            let time = match &result {
                Ok(r) => r.elapsed.as_secs_f64(),
                Err(e) => e.elapsed.as_secs_f64(),
            };
            (Certificate::General(result), time)
        }
        _ => {
            let start = Instant::now();
            let c = certify(&generated.instance, cfg.culture, &cfg.solve)?;
            (c, start.elapsed().as_secs_f64())
        }
    };
    Ok(InstanceRecord {
        n: slot.n,
        m: slot.m,
        culture: cfg.culture.to_string(),
        index: slot.index,
        seed: slot.seed,
        outcome: outcome_of(&certificate),
        time_s,
    })
}

/// Per-instance seeds come from a stream keyed by (n, m), so a
/// configuration's instances do not depend on which others are run.
fn slots(cfg: &ExperimentConfig) -> Vec<Slot> {
    let mut out = Vec::new();
    for &n in &cfg.agents {
        let ms = match cfg.culture {
            Culture::HapUniform => vec![n],
            _ => cfg.items.for_agents(n),
        };
        for m in ms {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((n as u64) << 32) | m as u64);
            for index in 0..cfg.count {
                out.push(Slot { n, m, index, seed: rng.next_u64() });
            }
        }
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.count == 0 {
        return Err(argument("count must be positive"));
    }
    let slots = slots(cfg);
    let work = || slots.par_iter().map(|s| run_slot(cfg, s)).collect::<Result<Vec<_>>>();
    let mut instances = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| argument(format!("cannot start {t} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    instances.sort_by(|a, b| (a.n, a.m, &a.culture, a.index).cmp(&(b.n, b.m, &b.culture, b.index)));
    let mut rows = Vec::new();
    for group in instances.chunk_by(|a, b| (a.n, a.m, &a.culture) == (b.n, b.m, &b.culture)) {
        let refs: Vec<&InstanceRecord> = group.iter().collect();
        rows.push(ReportRow::from_records(&refs));
    }
    Ok(ExperimentReport { rows, instances })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(culture: Culture, agents: Vec<usize>, items: ItemSpec, count: usize, filter: bool) -> ExperimentConfig {
        ExperimentConfig {
            culture,
            agents,
            items,
            count,
            seed: 2024,
            filter_non_ef: filter,
            solve: SolveOptions::default(),
            threads: Some(2),
        }
    }

    fn without_time(csv: &str, column: usize) -> Vec<Vec<String>> {
        csv.lines()
            .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != column).map(|(_, f)| f.to_string()).collect())
            .collect()
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(parse_agent_range("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_agent_range("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_agent_range("4,6").unwrap(), vec![4, 6]);
        assert!(parse_agent_range("0..2").is_err());
        assert!(parse_agent_range("5..3").is_err());
        assert_eq!("n+2".parse::<ItemSpec>().unwrap().for_agents(4), vec![6]);
        assert_eq!("5,7".parse::<ItemSpec>().unwrap().for_agents(4), vec![5, 7]);
        assert!("x".parse::<ItemSpec>().is_err());
    }

    #[test]
    fn filtered_small_n_has_no_majority_envy_freeness() {
        let cfg = config(Culture::Uniform, vec![3, 4], ItemSpec::Offset(2), 12, true);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.count, 12);
            assert_eq!(row.envy_free, 0);
            assert_eq!(row.pct_smaef, 0.0);
            assert_eq!(row.unanimous + row.finite_k + row.envy_free, row.solved);
            if let Some(mean) = row.mean_k_over_n {
                assert!(mean > 0.0 && mean <= 1.0);
            }
        }
        // With three agents the only non-envy-free finite value is K = 3.
        assert!(report.rows[0].finite_k > 0);
        assert_eq!(report.rows[0].mean_k_over_n, Some(1.0));
    }

    #[test]
    fn csv_is_deterministic_except_time() {
        let cfg = config(Culture::Correlated(1.0), vec![3], ItemSpec::List(vec![4, 5]), 6, false);
        let render = |threads| {
            let report = run_experiment(&ExperimentConfig { threads, ..cfg.clone() }).unwrap();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            report.write_summary_csv(&mut a).unwrap();
            report.write_instances_csv(&mut b).unwrap();
            (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap())
        };
        let (s1, i1) = render(Some(1));
        let (s2, i2) = render(Some(3));
        assert_eq!(s1.lines().next().unwrap(), "n,m,culture,count,pct_opt,pct_uei,pct_smaef,mean_k_over_n,mean_time_s");
        assert_eq!(without_time(&s1, 8), without_time(&s2, 8));
        assert_eq!(without_time(&i1, 9), without_time(&i2, 9));
        assert_eq!(s1.lines().count(), 3);
        assert_eq!(i1.lines().count(), 13);
    }

    #[test]
    fn house_culture_forces_square() {
        let cfg = config(Culture::HapUniform, vec![5], ItemSpec::List(vec![9]), 20, false);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].m, 5);
        assert_eq!(report.rows[0].pct_opt, 100.0);
    }

    #[test]
    fn budget_exhaustion_counts_as_unsolved() {
        let mut cfg = config(Culture::Uniform, vec![3], ItemSpec::List(vec![6]), 4, false);
        cfg.solve = SolveOptions { budget: Some(1), timeout: None };
        let report = run_experiment(&cfg).unwrap();
        let row = &report.rows[0];
        // An envy-free allocation can still be found on the first leaf.
        assert_eq!(row.solved, row.envy_free);
        assert!(report.instances.iter().all(|r| matches!(r.outcome, Outcome::Unsolved | Outcome::EnvyFree)));
    }
}
