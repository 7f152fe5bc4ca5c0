use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approval_envy::io::{allocation_to_string, instance_to_string};
use approval_envy::mip::{build_model, derive_assignment, parse_lp};
use approval_envy::model::{normalize, Allocation, Instance};

const BIN: &str = env!("CARGO_BIN_EXE_approval-envy");

fn example_one() -> Instance {
    Instance::from_integer_rows(&[vec![0, 3, 3, 1, 3, 2], vec![2, 0, 7, 2, 1, 0], vec![0, 3, 5, 0, 1, 3]]).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("APPROVAL_ENVY_MIP_SOLVER").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let out = run(&["solve", s(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("min K = 3\nwitness: ["), "{text}");

    let out = run(&["solve", s(&inst), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"], "min_k");
    assert_eq!(v["k"], 3);
    assert_eq!(v["explored"], 729);
}

#[test]
fn solve_budget_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let out = run(&["solve", s(&inst), "--budget", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("best allocation found"));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"agents": ["a", "b", "c"], "items": ["1", "2", "3", "4"], "utilities": [[1,2,3,4,5],[1,2,3,4,5],[1,2,3,4,5]]}"#,
    );
    let out = run(&["solve", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let alloc = write(dir.path(), "a.json", "[0, 1, 5, 0, 0, 0]");
    let out = run(&["check", s(&inst), "--alloc", s(&alloc)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("owner out of range"));

    let missing = run(&["solve", s(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn check_worked_example_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let alloc = write(dir.path(), "a.json", &allocation_to_string(&Allocation::new(vec![1, 0, 2, 1, 1, 0])));
    let out = run(&["check", s(&inst), "--alloc", s(&alloc), "--k", "3", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["level"], 3);
    assert_eq!(v["degree_of_envy"], "3");
    assert_eq!(v["sm_app_ef"], false);
    assert_eq!(v["k_app_envy_free"], true);
    assert_eq!(v["envy_graph"], serde_json::json!([[1, 2, 2], [2, 0, 2]]));

    let out = run(&["check", s(&inst), "--alloc", s(&alloc), "--k", "2"]);
    let text = stdout(&out);
    assert!(text.contains("(2-app envy)-free: no"), "{text}");
    assert!(text.contains("a2 envies a3 (approved by 2)"), "{text}");
}

#[test]
fn hap_common_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![vec![5, 4, 3, 2, 1]; 5];
    let inst = write(dir.path(), "h.json", &instance_to_string(&Instance::from_integer_rows(&rows).unwrap()));
    let out = run(&["hap", s(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "unanimous envy instance\n");

    let ex = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    assert_eq!(run(&["hap", s(&ex)]).status.code(), Some(2));
}

#[test]
fn gen_families_and_cultures() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("g.json");
    let out = run(&["gen", "--family", "hierarchy", "--n", "5", "--h", "3", "-o", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let solved = run(&["solve", s(&out_path), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&solved.stdout).unwrap();
    assert_eq!(v["k"], 4);

    assert_eq!(run(&["gen", "--family", "swap", "--n", "4", "--h", "2", "-o", s(&out_path)]).status.code(), Some(2));

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = run(&["gen", "--culture", "correlated", "--concentration", "3", "--n", "3", "--m", "5", "--seed", "9", "-o", s(p)]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = run(&["gen", "--culture", "uniform", "--n", "3", "--m", "4", "--filter-ef", "--seed", "1", "-o", s(&a)]);
    assert_eq!(out.status.code(), Some(0));
    let solved = run(&["solve", s(&a), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&solved.stdout).unwrap();
    assert_ne!(v["k"], 1);
}

#[test]
fn experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let per = dir.path().join("k.csv");
    let out = run(&[
        "experiment", "--culture", "uniform", "--n-range", "3..4", "--m", "n+1", "--count", "8", "--seed", "5", "--filter-ef",
        "-o", s(&report), "--instances-out", s(&per),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,culture,count,pct_opt,pct_uei,pct_smaef,mean_k_over_n,mean_time_s"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..4], &["3", "4", "uniform", "8"]);
    assert_eq!(&rows[1][..4], &["4", "5", "uniform", "8"]);
    for row in &rows {
        assert_eq!(row[6], "0.00");
    }
    assert_eq!(std::fs::read_to_string(&per).unwrap().lines().count(), 17);
}

#[test]
fn ef_from_two_app_repairs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::from_integer_rows(&[vec![0, 1, 2], vec![4, 0, 4], vec![4, 4, 0]]).unwrap();
    let inst_path = write(dir.path(), "i.json", &instance_to_string(&inst));
    let alloc = write(dir.path(), "a.json", "[0, 2, 1]");
    let out_alloc = dir.path().join("out.json");
    let out = run(&["ef-from-2app", s(&inst_path), "--alloc", s(&alloc), "-o", s(&out_alloc)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("step 1: swap a1 and a2"));
    let fixed = std::fs::read_to_string(&out_alloc).unwrap();
    let check = run(&["check", s(&inst_path), "--alloc", s(&out_alloc), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(v["envy_free"], true, "{fixed}");

    let ex = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let level3 = write(dir.path(), "l3.json", "[1, 0, 2, 1, 1, 0]");
    assert_eq!(run(&["ef-from-2app", s(&ex), "--alloc", s(&level3)]).status.code(), Some(2));
}

#[test]
fn emit_lp_writes_parseable_model() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let lp = dir.path().join("m.lp");
    let out = run(&["emit-lp", s(&inst), "-o", s(&lp)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc = parse_lp(&std::fs::read_to_string(&lp).unwrap()).unwrap();
    assert_eq!(doc.constraints.len(), 78);
}

fn solution_text(owner: &[usize], k: usize) -> String {
    let norm = normalize(&example_one()).unwrap();
    let model = build_model(&norm);
    let assignment = derive_assignment(&model, &Allocation::new(owner.to_vec()), k);
    let mut text = String::from("# fake solver output\n");
    for var in model.binaries() {
        text.push_str(&format!("{var} {}\n", assignment.get(*var)));
    }
    text.push_str(&format!("K {k}\n"));
    text
}

#[test]
fn emit_lp_runs_external_solver() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", &instance_to_string(&example_one()));
    let lp = dir.path().join("m.lp");
    let canned = write(dir.path(), "canned.sol", &solution_text(&[1, 0, 2, 1, 1, 0], 3));
    let with_solver = |template: String| {
        Command::new(BIN)
            .args(["emit-lp", s(&inst), "-o", s(&lp)])
            .env("APPROVAL_ENVY_MIP_SOLVER", template)
            .output()
            .unwrap()
    };

    let out = with_solver(format!("test -s {{lp}} && cp '{}' {{sol}}", s(&canned)));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "min K = 3\nwitness: [1, 0, 2, 1, 1, 0]\n");

    // A claimed K that the allocation does not meet is rejected.
    let wrong = write(dir.path(), "wrong.sol", &solution_text(&[1, 0, 2, 1, 1, 0], 2));
    let out = with_solver(format!("cp '{}' {{sol}}", s(&wrong)));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c5_"));

    let out = with_solver("true".into());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "unanimous envy instance\n");

    assert_eq!(with_solver("exit 4".into()).status.code(), Some(1));
}
