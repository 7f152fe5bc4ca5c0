//! JSON instance and allocation files.
//!
//! ```json
//! {
//!   "agents": ["a1", "a2"],
//!   "items": ["o1", "o2", "o3"],
//!   "utilities": [[3, "7/2", 0], [1, 1, "1/3"]]
//! }
//! ```
//!
//! An allocation file is a JSON array holding the 0-based owner of each
//! item, e.g. `[1, 0, 0]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    agents: Vec<String>,
    items: Vec<String>,
    utilities: Vec<Vec<Entry>>,
}

fn json_error(what: &str, e: serde_json::Error) -> Error {
    Error::Parse { location: format!("{what} line {} column {}", e.line(), e.column()), message: e.to_string() }
}

fn parse_entry(entry: &Entry, agent: usize, item: usize) -> Result<Rational> {
    let location = || format!("utilities[{agent}][{item}]");
    match entry {
        Entry::Int(v) => Ok(Rational::from_integer(*v)),
        Entry::Text(s) => {
            let s = s.trim();
            let (num, den) = s.split_once('/').unwrap_or((s, "1"));
            let parse = |t: &str| t.trim().parse::<i64>();
            match (parse(num), parse(den)) {
                (Ok(_), Ok(0)) => Err(Error::Parse { location: location(), message: format!("zero denominator in `{s}`") }),
                (Ok(p), Ok(q)) => Ok(Rational::new(p, q)),
                _ => Err(Error::Parse { location: location(), message: format!("`{s}` is not an integer or p/q fraction") }),
            }
        }
    }
}

/// Parses an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| json_error("instance", e))?;
    let (n, m) = (file.agents.len(), file.items.len());
    if file.utilities.len() != n {
        return Err(Error::Validation(format!("{} utility rows for {n} declared agents", file.utilities.len())));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, row) in file.utilities.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Validation(format!("utility row {i} has {} entries for {m} declared items", row.len())));
        }
        rows.push(row.iter().enumerate().map(|(j, e)| parse_entry(e, i, j)).collect::<Result<Vec<_>>>()?);
    }
    Instance::new(file.agents, file.items, rows)
}

/// Renders an instance document; integers are written as numbers and other
/// rationals as `"p/q"` strings.
pub fn instance_to_string(inst: &Instance) -> String {
    let file = InstanceFile {
        agents: inst.agent_names().to_vec(),
        items: inst.item_names().to_vec(),
        utilities: inst
            .utilities()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|u| if u.is_integer() { Entry::Int(*u.numer()) } else { Entry::Text(u.to_string()) })
                    .collect()
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
    out.push('\n');
    out
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(inst: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_string(inst))?;
    Ok(())
}

pub fn parse_allocation(text: &str) -> Result<Allocation> {
    let owner: Vec<usize> = serde_json::from_str(text).map_err(|e| json_error("allocation", e))?;
    Ok(Allocation::new(owner))
}

pub fn allocation_to_string(alloc: &Allocation) -> String {
    format!("{}\n", serde_json::to_string(alloc.owner()).expect("allocation serializes"))
}

pub fn read_allocation(path: &Path) -> Result<Allocation> {
    parse_allocation(&std::fs::read_to_string(path)?)
}

pub fn write_allocation(alloc: &Allocation, path: &Path) -> Result<()> {
    std::fs::write(path, allocation_to_string(alloc))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use proptest::prelude::*;

    #[test]
    fn example_round_trip() {
        let inst = example_one();
        assert_eq!(parse_instance(&instance_to_string(&inst)).unwrap(), inst);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.json");
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }

    #[test]
    fn fraction_entries() {
        let inst = parse_instance(r#"{"agents": ["x"], "items": ["a", "b"], "utilities": [["7/2", " 4 / 6 "]]}"#).unwrap();
        assert_eq!(inst.utility(0, 0), r(7, 2));
        assert_eq!(inst.utility(0, 1), r(2, 3));
        assert!(instance_to_string(&inst).contains("\"7/2\""));
    }

    #[test]
    fn dimension_and_key_errors() {
        let wide = r#"{"agents": ["a", "b", "c"], "items": ["1", "2", "3", "4"],
            "utilities": [[1,2,3,4,5],[1,2,3,4,5],[1,2,3,4,5]]}"#;
        assert!(matches!(parse_instance(wide), Err(Error::Validation(_))));
        let extra = r#"{"agents": ["a"], "items": [], "utilities": [[]], "weights": [1]}"#;
        match parse_instance(extra) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("weights"), "{message}"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"agents": ["a"], "items": ["o"], "utilities": [["x/2"]]}"#;
        match parse_instance(bad) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "utilities[0][0]"),
            other => panic!("{other:?}"),
        }
        let zero = r#"{"agents": ["a"], "items": ["o"], "utilities": [["1/0"]]}"#;
        assert!(matches!(parse_instance(zero), Err(Error::Parse { .. })));
        let negative = r#"{"agents": ["a"], "items": ["o"], "utilities": [[-1]]}"#;
        assert!(matches!(parse_instance(negative), Err(Error::Validation(_))));
    }

    #[test]
    fn allocation_files() {
        let alloc = example_one_allocation();
        assert_eq!(parse_allocation(&allocation_to_string(&alloc)).unwrap(), alloc);
        assert!(parse_allocation("[1, -1]").is_err());
    }

    proptest! {
        #[test]
        fn rational_round_trip(rows in (1usize..4, 0usize..5).prop_flat_map(|(n, m)|
            proptest::collection::vec(proptest::collection::vec((0i64..50, 1i64..12), m), n)))
        {
            let rows: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&(p, q)| Rational::new(p, q)).collect()).collect();
            let inst = Instance::from_rows(rows).unwrap();
            prop_assert_eq!(parse_instance(&instance_to_string(&inst)).unwrap(), inst);
        }
    }
}
