//! Mixed-integer model of the minimum-K problem and its LP-format export.
//!
//! Variables (1-based in their LP names):
//!
//! * `z_i_j` — agent i receives item j;
//! * `e_k_i_h` — by agent k's utilities, i's bundle is worth strictly less
//!   than h's;
//! * `x_i_h` — switch that activates the approval quota of pair (i, h);
//! * `K` — the quota, an integer in `[1, n]`, minimized.
//!
//! Constraint families, over integer-scaled utilities `u` and a constant
//! `M` above every agent's total utility:
//!
//! 1. `Σ_i z_i_j = 1` for each item j;
//! 2. `M e_k_i_h >= Σ_j u(k,j) (z_h_j - z_i_j)`;
//! 3. `Σ_j u(k,j) (z_h_j - z_i_j) >= 1 - M (1 - e_k_i_h)`;
//! 4. `e_i_i_h <= x_i_h`;
//! 5. `Σ_k e_k_i_h <= K - 1 + n (1 - x_i_h)`.
//!
//! Constants are moved to the right-hand side on export. The crate does not
//! solve the model itself; [`ExternalSolver`] runs any LP-format solver
//! named by the `APPROVAL_ENVY_MIP_SOLVER` environment variable.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::process::Command;

use crate::error::{argument, Error, Result};
use crate::model::{validate_allocation, Allocation, NormalizedInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Z { agent: usize, item: usize },
    E { judge: usize, envier: usize, envied: usize },
    X { envier: usize, envied: usize },
    K,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Z { agent, item } => write!(f, "z_{}_{}", agent + 1, item + 1),
            Var::E { judge, envier, envied } => write!(f, "e_{}_{}_{}", judge + 1, envier + 1, envied + 1),
            Var::X { envier, envied } => write!(f, "x_{}_{}", envier + 1, envied + 1),
            Var::K => write!(f, "K"),
        }
    }
}

impl Var {
    pub fn parse(name: &str) -> Option<Var> {
        if name == "K" {
            return Some(Var::K);
        }
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let idx: Vec<usize> = parts
            .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1))
            .collect::<Option<_>>()?;
        match (kind, idx.as_slice()) {
            ("z", &[agent, item]) => Some(Var::Z { agent, item }),
            ("e", &[judge, envier, envied]) => Some(Var::E { judge, envier, envied }),
            ("x", &[envier, envied]) => Some(Var::X { envier, envied }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Assignment,
    EnvyUpper,
    EnvyLower,
    Switch,
    Quota,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Assignment, Family::EnvyUpper, Family::EnvyLower, Family::Switch, Family::Quota];

    pub fn number(self) -> usize {
        self as usize + 1
    }

    fn from_name(name: &str) -> Option<Family> {
        let digit = name.strip_prefix('c')?.split('_').next()?;
        match digit {
            "1" => Some(Family::Assignment),
            "2" => Some(Family::EnvyUpper),
            "3" => Some(Family::EnvyLower),
            "4" => Some(Family::Switch),
            "5" => Some(Family::Quota),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn holds(self, lhs: i128, rhs: i128) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(i64, Var)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    fn lhs(&self, assignment: &Assignment) -> i128 {
        self.terms.iter().map(|&(c, v)| c as i128 * assignment.get(v) as i128).sum()
    }

    pub fn is_satisfied(&self, assignment: &Assignment) -> bool {
        self.sense.holds(self.lhs(assignment), self.rhs as i128)
    }
}

/// Everything an LP file states: objective, constraints, bounds on K and
/// the variable type sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpDocument {
    pub objective: Vec<(i64, Var)>,
    pub constraints: Vec<Constraint>,
    pub k_bounds: (i64, i64),
    pub binaries: Vec<Var>,
    pub generals: Vec<Var>,
}

impl LpDocument {
    /// Names of the constraints violated by `assignment`, in file order.
    pub fn violations(&self, assignment: &Assignment) -> Vec<String> {
        let mut out: Vec<String> = self
            .constraints
            .iter()
            .filter(|c| !c.is_satisfied(assignment))
            .map(|c| c.name.clone())
            .collect();
        let k = assignment.get(Var::K);
        if k < self.k_bounds.0 || k > self.k_bounds.1 {
            out.push("bounds_K".into());
        }
        for &var in &self.binaries {
            if !matches!(assignment.get(var), 0 | 1) {
                out.push(format!("binary_{var}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipModel {
    pub n: usize,
    pub m: usize,
    pub big_m: i64,
    utilities: Vec<Vec<i64>>,
    document: LpDocument,
}

impl MipModel {
    pub fn constraints(&self) -> &[Constraint] {
        &self.document.constraints
    }

    pub fn document(&self) -> &LpDocument {
        &self.document
    }

    pub fn constraint_count(&self, family: Family) -> usize {
        self.constraints().iter().filter(|c| c.family == family).count()
    }

    pub fn binaries(&self) -> &[Var] {
        &self.document.binaries
    }

    /// Scaled utilities the model was built from.
    pub fn utilities(&self) -> &[Vec<i64>] {
        &self.utilities
    }

    /// Σ_j u(k, j) (z_h_j - z_i_j) for the allocation behind `owner`.
    fn bundle_gap(&self, owner: &[usize], judge: usize, envier: usize, envied: usize) -> i64 {
        owner
            .iter()
            .enumerate()
            .map(|(j, &o)| {
                let u = self.utilities[judge][j];
                (o == envied) as i64 * u - (o == envier) as i64 * u
            })
            .sum()
    }
}

/// Builds the model for integer-scaled utilities.
pub fn build_model(norm: &NormalizedInstance) -> MipModel {
    let n = norm.agents();
    let m = norm.items();
    let big_m = norm.max_row_sum() + 1;
    let utilities = norm.int_utilities();
    let mut constraints = Vec::with_capacity(m + 2 * n * n * n + 2 * n * n);

    for j in 0..m {
        constraints.push(Constraint {
            name: format!("c1_{}", j + 1),
            family: Family::Assignment,
            terms: (0..n).map(|i| (1, Var::Z { agent: i, item: j })).collect(),
            sense: Sense::Eq,
            rhs: 1,
        });
    }

    // Σ_j u(k,j) (z_h_j - z_i_j) with zero coefficients dropped.
    let gap_terms = |k: usize, i: usize, h: usize, sign: i64| -> Vec<(i64, Var)> {
        let mut terms = Vec::new();
        if i == h {
            return terms;
        }
        for (j, &u) in utilities[k].iter().enumerate() {
            if u != 0 {
                terms.push((sign * u, Var::Z { agent: h, item: j }));
                terms.push((-sign * u, Var::Z { agent: i, item: j }));
            }
        }
        terms
    };

    for k in 0..n {
        for i in 0..n {
            for h in 0..n {
                let e = Var::E { judge: k, envier: i, envied: h };
                let mut terms = vec![(big_m, e)];
                terms.extend(gap_terms(k, i, h, -1));
                constraints.push(Constraint {
                    name: format!("c2_{}_{}_{}", k + 1, i + 1, h + 1),
                    family: Family::EnvyUpper,
                    terms,
                    sense: Sense::Ge,
                    rhs: 0,
                });
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for h in 0..n {
                let e = Var::E { judge: k, envier: i, envied: h };
                let mut terms = gap_terms(k, i, h, 1);
                terms.push((-big_m, e));
                constraints.push(Constraint {
                    name: format!("c3_{}_{}_{}", k + 1, i + 1, h + 1),
                    family: Family::EnvyLower,
                    terms,
                    sense: Sense::Ge,
                    rhs: 1 - big_m,
                });
            }
        }
    }
    for i in 0..n {
        for h in 0..n {
            constraints.push(Constraint {
                name: format!("c4_{}_{}", i + 1, h + 1),
                family: Family::Switch,
                terms: vec![(1, Var::E { judge: i, envier: i, envied: h }), (-1, Var::X { envier: i, envied: h })],
                sense: Sense::Le,
                rhs: 0,
            });
        }
    }
    let n_coef = n as i64;
    for i in 0..n {
        for h in 0..n {
            let mut terms: Vec<(i64, Var)> = (0..n).map(|k| (1, Var::E { judge: k, envier: i, envied: h })).collect();
            terms.push((n_coef, Var::X { envier: i, envied: h }));
            terms.push((-1, Var::K));
            constraints.push(Constraint {
                name: format!("c5_{}_{}", i + 1, h + 1),
                family: Family::Quota,
                terms,
                sense: Sense::Le,
                rhs: n_coef - 1,
            });
        }
    }

    let mut binaries = Vec::with_capacity(n * m + n * n * n + n * n);
    for i in 0..n {
        for j in 0..m {
            binaries.push(Var::Z { agent: i, item: j });
        }
    }
    for k in 0..n {
        for i in 0..n {
            for h in 0..n {
                binaries.push(Var::E { judge: k, envier: i, envied: h });
            }
        }
    }
    for i in 0..n {
        for h in 0..n {
            binaries.push(Var::X { envier: i, envied: h });
        }
    }

    MipModel {
        n,
        m,
        big_m,
        utilities,
        document: LpDocument {
            objective: vec![(1, Var::K)],
            constraints,
            k_bounds: (1, n_coef),
            binaries,
            generals: vec![Var::K],
        },
    }
}

const MAX_LINE: usize = 200;

fn write_terms(out: &mut String, line_start: &mut usize, terms: &[(i64, Var)]) {
    for (idx, &(coef, var)) in terms.iter().enumerate() {
        let mut piece = String::new();
        match (idx, coef) {
            (0, 1) => {}
            (0, -1) => piece.push_str("- "),
            (0, c) if c < 0 => write!(piece, "- {} ", -c).unwrap(),
            (0, c) => write!(piece, "{c} ").unwrap(),
            (_, 1) => piece.push_str(" + "),
            (_, -1) => piece.push_str(" - "),
            (_, c) if c < 0 => write!(piece, " - {} ", -c).unwrap(),
            (_, c) => write!(piece, " + {c} ").unwrap(),
        }
        write!(piece, "{var}").unwrap();
        if idx > 0 && out.len() - *line_start + piece.len() > MAX_LINE {
            out.push('\n');
            *line_start = out.len();
            out.push_str("  ");
            out.push_str(piece.trim_start());
        } else {
            out.push_str(&piece);
        }
    }
}

fn write_names(out: &mut String, vars: &[Var]) {
    for chunk in vars.chunks(10) {
        out.push(' ');
        let names: Vec<String> = chunk.iter().map(ToString::to_string).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
}

/// Renders the model in LP format. The output depends only on the model.
pub fn export_lp(model: &MipModel) -> String {
    let doc = &model.document;
    let mut out = String::new();
    writeln!(
        out,
        "\\ minimum K-approval envy: n = {} agents, m = {} items, M = {}",
        model.n, model.m, model.big_m
    )
    .unwrap();
    out.push_str("Minimize\n obj: ");
    let mut line_start = out.rfind('\n').unwrap() + 1;
    write_terms(&mut out, &mut line_start, &doc.objective);
    out.push_str("\nSubject To\n");
    for c in &doc.constraints {
        line_start = out.len();
        write!(out, " {}: ", c.name).unwrap();
        write_terms(&mut out, &mut line_start, &c.terms);
        writeln!(out, " {} {}", c.sense.symbol(), c.rhs).unwrap();
    }
    writeln!(out, "Bounds\n {} <= K <= {}", doc.k_bounds.0, doc.k_bounds.1).unwrap();
    out.push_str("Binaries\n");
    write_names(&mut out, &doc.binaries);
    out.push_str("Generals\n");
    write_names(&mut out, &doc.generals);
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { location: format!("line {line}"), message: message.into() }
}

fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(i64, Var)>> {
    let mut terms = Vec::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1,
            "-" => sign = -1,
            _ => {
                if let Ok(c) = tok.parse::<i64>() {
                    coef = Some(c);
                } else {
                    let var = Var::parse(tok).ok_or_else(|| parse_error(line, format!("unknown variable `{tok}`")))?;
                    terms.push((sign * coef.take().unwrap_or(1), var));
                    sign = 1;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(parse_error(line, "dangling coefficient"));
    }
    Ok(terms)
}

fn parse_constraint(text: &str, line: usize) -> Result<Constraint> {
    let (name, body) = text.split_once(':').ok_or_else(|| parse_error(line, "constraint without a name"))?;
    let name = name.trim().to_string();
    let family = Family::from_name(&name).ok_or_else(|| parse_error(line, format!("unknown constraint family `{name}`")))?;
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let pos = tokens
        .iter()
        .position(|t| matches!(*t, "<=" | ">=" | "=" | "=<" | "=>"))
        .ok_or_else(|| parse_error(line, format!("constraint `{name}` has no relation")))?;
    let sense = match tokens[pos] {
        "<=" | "=<" => Sense::Le,
        ">=" | "=>" => Sense::Ge,
        _ => Sense::Eq,
    };
    let rhs_tokens = &tokens[pos + 1..];
    let rhs = match rhs_tokens {
        [value] => value.parse::<i64>(),
        ["-", value] => value.parse::<i64>().map(|v| -v),
        _ => return Err(parse_error(line, format!("constraint `{name}` has a malformed right-hand side"))),
    }
    .map_err(|e| parse_error(line, format!("constraint `{name}`: {e}")))?;
    Ok(Constraint { name, family, terms: parse_terms(&tokens[..pos], line)?, sense, rhs })
}

/// Reads back the LP subset produced by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<LpDocument> {
    let mut section = Section::Preamble;
    let mut objective = Vec::new();
    let mut pending: Option<(String, usize)> = None;
    let mut constraints = Vec::new();
    let mut k_bounds = None;
    let mut binaries = Vec::new();
    let mut generals = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let keyword = line.to_ascii_lowercase();
        let next_section = match keyword.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "st" | "s.t." | "such that" => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "generals" | "general" | "gen" => Some(Section::Generals),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = next_section {
            if let Some((text, at)) = pending.take() {
                constraints.push(parse_constraint(&text, at)?);
            }
            section = next;
            continue;
        }
        match section {
            Section::Preamble | Section::End => {
                return Err(parse_error(line_no, format!("unexpected content `{line}`")));
            }
            Section::Objective => {
                let body = line.split_once(':').map_or(line, |(_, b)| b);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                objective.extend(parse_terms(&tokens, line_no)?);
            }
            Section::Constraints => {
                if line.contains(':') {
                    if let Some((text, at)) = pending.take() {
                        constraints.push(parse_constraint(&text, at)?);
                    }
                    pending = Some((line.to_string(), line_no));
                } else if let Some((text, _)) = pending.as_mut() {
                    text.push(' ');
                    text.push_str(line);
                } else {
                    return Err(parse_error(line_no, "continuation line without a constraint"));
                }
            }
            Section::Bounds => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    [lo, "<=", "K", "<=", hi] => {
                        let lo = lo.parse().map_err(|e| parse_error(line_no, format!("{e}")))?;
                        let hi = hi.parse().map_err(|e| parse_error(line_no, format!("{e}")))?;
                        k_bounds = Some((lo, hi));
                    }
                    _ => return Err(parse_error(line_no, format!("unsupported bound `{line}`"))),
                }
            }
            Section::Binaries | Section::Generals => {
                for name in line.split_whitespace() {
                    let var = Var::parse(name).ok_or_else(|| parse_error(line_no, format!("unknown variable `{name}`")))?;
                    if section == Section::Binaries {
                        binaries.push(var);
                    } else {
                        generals.push(var);
                    }
                }
            }
        }
    }
    if let Some((text, at)) = pending.take() {
        constraints.push(parse_constraint(&text, at)?);
    }
    if section != Section::End {
        return Err(parse_error(text.lines().count(), "missing End"));
    }
    let k_bounds = k_bounds.ok_or_else(|| parse_error(0, "missing bounds on K"))?;
    Ok(LpDocument { objective, constraints, k_bounds, binaries, generals })
}

/// Integer values for model variables; absent variables read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<Var, i64>,
}

impl Assignment {
    pub fn get(&self, var: Var) -> i64 {
        self.values.get(&var).copied().unwrap_or(0)
    }

    pub fn set(&mut self, var: Var, value: i64) {
        self.values.insert(var, value);
    }
}

/// The assignment an allocation and a quota induce: `e` from its
/// definition and `x_i_h = e_i_i_h`.
pub fn derive_assignment(model: &MipModel, alloc: &Allocation, k: usize) -> Assignment {
    let n = model.n;
    let owner = alloc.owner();
    let mut a = Assignment::default();
    for (j, &o) in owner.iter().enumerate() {
        for i in 0..n {
            a.set(Var::Z { agent: i, item: j }, (i == o) as i64);
        }
    }
    for judge in 0..n {
        for envier in 0..n {
            for envied in 0..n {
                let e = (model.bundle_gap(owner, judge, envier, envied) >= 1) as i64;
                a.set(Var::E { judge, envier, envied }, e);
                if judge == envier {
                    a.set(Var::X { envier, envied }, e);
                }
            }
        }
    }
    a.set(Var::K, k as i64);
    a
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Violated(Vec<String>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    fn from_violations(v: Vec<String>) -> Self {
        if v.is_empty() {
            Feasibility::Feasible
        } else {
            Feasibility::Violated(v)
        }
    }
}

/// Whether `(alloc, k)` extends to a feasible point of the model.
pub fn check_assignment(model: &MipModel, alloc: &Allocation, k: usize) -> Result<Feasibility> {
    check_assignment_in(model, model.document(), alloc, k)
}

/// Same as [`check_assignment`], against constraints read back from a file.
pub fn check_assignment_in(model: &MipModel, doc: &LpDocument, alloc: &Allocation, k: usize) -> Result<Feasibility> {
    if k == 0 || k > model.n {
        return Err(argument(format!("K = {k} outside [1, {}]", model.n)));
    }
    if alloc.items() != model.m || alloc.owner().iter().any(|&o| o >= model.n) {
        return Err(argument("allocation does not match the model's dimensions"));
    }
    Ok(Feasibility::from_violations(doc.violations(&derive_assignment(model, alloc, k))))
}

/// Parses a solver solution listing `name value` pairs, one per line.
/// Lines starting with `#` and lines not naming a model variable are
/// skipped; values must be within 1e-6 of an integer.
pub fn parse_solution(text: &str) -> Result<Assignment> {
    let mut assignment = Assignment::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some(pos) = tokens.iter().position(|t| Var::parse(t).is_some()) else {
            continue;
        };
        let Some(raw) = tokens.get(pos + 1) else {
            continue;
        };
        let Ok(value) = raw.parse::<f64>() else {
            continue;
        };
        let rounded = value.round();
        if (value - rounded).abs() > 1e-6 {
            return Err(Error::Parse {
                location: format!("solution line {}", idx + 1),
                message: format!("{} = {value} is not integral", tokens[pos]),
            });
        }
        assignment.set(Var::parse(tokens[pos]).unwrap(), rounded as i64);
    }
    Ok(assignment)
}

/// Reads the allocation and K out of a solver assignment.
pub fn decode_solution(model: &MipModel, assignment: &Assignment) -> Result<(Allocation, usize)> {
    let mut owner = Vec::with_capacity(model.m);
    for j in 0..model.m {
        let holders: Vec<usize> = (0..model.n).filter(|&i| assignment.get(Var::Z { agent: i, item: j }) == 1).collect();
        match holders.as_slice() {
            [i] => owner.push(*i),
            _ => return Err(Error::Solver(format!("item {} has {} holders in the solution", j + 1, holders.len()))),
        }
    }
    let k = assignment.get(Var::K);
    if k < 1 || k > model.n as i64 {
        return Err(Error::Solver(format!("K = {k} outside [1, {}]", model.n)));
    }
    Ok((Allocation::new(owner), k as usize))
}

pub const SOLVER_ENV: &str = "APPROVAL_ENVY_MIP_SOLVER";

/// An external LP-format solver run as a shell command. `{lp}` and `{sol}`
/// in the template are replaced by the model and solution file paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    template: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExternalOutcome {
    Solved { allocation: Allocation, k: usize, feasibility: Feasibility },
    /// The solver wrote no variable values: the model is infeasible.
    NoSolution,
}

impl ExternalSolver {
    pub fn new(template: impl Into<String>) -> Self {
        Self { template: template.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty()).map(Self::new)
    }

    pub fn solve(&self, model: &MipModel, workdir: &Path) -> Result<ExternalOutcome> {
        let lp_path = workdir.join("model.lp");
        let sol_path = workdir.join("model.sol");
        std::fs::write(&lp_path, export_lp(model))?;
        if sol_path.exists() {
            std::fs::remove_file(&sol_path)?;
        }
        let command = self
            .template
            .replace("{lp}", &shell_quote(&lp_path))
            .replace("{sol}", &shell_quote(&sol_path));
        let status = Command::new("sh").arg("-c").arg(&command).status()?;
        if !status.success() {
            return Err(Error::Solver(format!("`{command}` exited with {status}")));
        }
        let text = match std::fs::read_to_string(&sol_path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ExternalOutcome::NoSolution),
            Err(e) => return Err(e.into()),
        };
        let assignment = parse_solution(&text)?;
        if assignment == Assignment::default() {
            return Ok(ExternalOutcome::NoSolution);
        }
        let (allocation, k) = decode_solution(model, &assignment)?;
        let feasibility = Feasibility::from_violations(model.document().violations(&assignment));
        Ok(ExternalOutcome::Solved { allocation, k, feasibility })
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', "'\\''"))
}

/// Validates `alloc` against the instance behind `norm` before checking.
pub fn check_allocation(norm: &NormalizedInstance, model: &MipModel, alloc: &Allocation, k: usize) -> Result<Feasibility> {
    validate_allocation(norm.base(), alloc).map_err(|v| argument(format!("invalid allocation ({} violations)", v.len())))?;
    check_assignment(model, alloc, k)
}
