use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use treelike::model::Model;

const SUBCOMMANDS: [&str; 14] = [
    "parse",
    "check",
    "valid-in-model",
    "treelike-check",
    "partition",
    "filtrate",
    "extract",
    "sat",
    "valid",
    "prove",
    "soundness",
    "unfold",
    "build-oracle",
    "build-stream",
];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treelike")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fig1() -> String {
    fixture("fig1.json").display().to_string()
}

#[test]
fn check_prints_truth_value() {
    let o = run(&["check", "--model", &fig1(), "--point", "q1", "--open", "top", "<>K Q1"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "true\n"));
    let o = run(&["check", "--model", &fig1(), "--point", "q1", "--open", "top", "K Q1"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "false\n"));
}

#[test]
fn unfold_matches_the_golden_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let frame = fixture("fig2.json").display().to_string();
    let o = run(&["unfold", "--frame", &frame, "--root", "r1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let got = Model::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let golden = Model::from_json(&std::fs::read_to_string(fixture("fig3.json")).unwrap()).unwrap();
    assert!(got.isomorphic(&golden));
}

#[test]
fn soundness_suite_reports_no_violations() {
    let o = run(&["soundness", "--max-points", "3", "--schemes", "1-12", "--atoms", "2", "--depth", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("0 violations\n"));
}

#[test]
fn soundness_finds_the_converse_counterexample() {
    let o = run(&["soundness", "--schemes", "", "--custom", "[]K phi -> K[]phi", "--atoms", "1", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("scheme custom1"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["check", "--model", &fig1(), "--point", "q1"]).status.code(), Some(2));
    assert_eq!(run(&["parse", "A &"]).status.code(), Some(2));
    assert_eq!(run(&["parse", "A", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["treelike-check", "--model", "/nonexistent.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"points":["a","b"],"opens":[{"name":"top","members":["a","b"]},{"name":"U","members":["a"]},{"name":"V","members":["a","c"]}]}"#).unwrap();
    assert_eq!(run(&["treelike-check", "--model", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, r#"{"points":["a","b","c"],"opens":[{"name":"top","members":["a","b","c"]},{"name":"U","members":["a","b"]},{"name":"V","members":["b","c"]}]}"#).unwrap();
    let o = run(&["treelike-check", "--model", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "not treelike: U and V overlap without nesting\n");
    assert_eq!(run(&["valid-in-model", "--model", &fig1(), "Q1 -> []Q1"]).status.code(), Some(0));
    assert_eq!(run(&["valid-in-model", "--model", &fig1(), "K Q1"]).status.code(), Some(1));
}

#[test]
fn search_verdicts_and_exit_codes() {
    let o = run(&["sat", "L A & L ~A"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "sat at (p1, top) with 2 points, 1 open\n");
    let o = run(&["sat", "--use-bound", "K A & ~A"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "unsat_proved\n"));
    let o = run(&["sat", "--max-points", "2", "--max-opens", "2", "K A & ~A"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(2), "unsat_within points<=2 opens<=2\n"));
    let o = run(&["valid", "A -> K A"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("countermodel at"));
    let o = run(&["valid", "--use-bound", "[]<>A -> <>[]A"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "valid\n"));
    assert_eq!(run(&["sat", "--max-points", "0", "A"]).status.code(), Some(2));
    assert_eq!(run(&["sat", "--use-bound", "--max-points", "3", "A"]).status.code(), Some(2));
}

#[test]
fn witness_files_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let f = "L<>K A & L<>K ~A";
    assert_eq!(run(&["sat", f, "-o", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["--jobs", "1", "sat", f, "-o", b.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m = Model::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!((m.space.num_points(), m.space.opens().len()), (2, 3));

    let args = ["--json", "soundness", "--schemes", "13,15", "--random", "30", "--seed", "7"];
    let (x, y) = (run(&args), run(&args));
    assert_eq!(x.stdout, y.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_treelike")).args(args).env("TREELIKE_JOBS", "2").output().unwrap();
    assert_eq!(x.stdout, env.stdout);
}

#[test]
fn model_pipeline_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let report = dir.path().join("r.json");
    let o = run(&["extract", "--model", &fig1(), "<>K Q1", "-o", out.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!((r["output_points"].as_u64(), r["output_opens"].as_u64()), (Some(2), Some(2)));
    assert!(r["family_sizes"].is_object() && r["bound_points"].is_u64());
    let o = run(&["filtrate", "--model", &fig1(), "K Q1"]);
    let m = Model::from_json(&stdout(&o)).unwrap();
    assert_eq!(m.space.opens().len(), 2);
    let o = run(&["partition", "--model", &fig1(), "K Q1"]);
    assert!(stdout(&o).contains("{q1, q2} remainder [Q1] true at {q1, q2}"));
    let o = run(&["build-oracle", "--points", "q1,q2,q3,q4", "--question", "Q1=q1,q2", "--question", "Q2=q1,q2,q3"]);
    let built = Model::from_json(&stdout(&o)).unwrap();
    assert!(built.space.is_treelike());
    let o = run(&["build-stream", "--depth", "2"]);
    assert_eq!(Model::from_json(&stdout(&o)).unwrap().space.opens().len(), 7);
}

#[test]
fn parse_and_formula_files() {
    let o = run(&["parse", "[](([]A -> B)) | []([]B -> A)"]);
    assert_eq!(stdout(&o), "[]([]A -> B) | []([]B -> A)\n");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    std::fs::write(&f, "K A ->\n  A\n").unwrap();
    let o = run(&["--json", "parse", "--formula-file", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formula"], "K A -> A");
}

#[test]
fn prove_accepts_the_fixture_and_reports_rejections() {
    let proof = fixture("axiom12_gives_axiom10.json").display().to_string();
    let o = run(&["prove", "--proof", &proof]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "accepted: K[]A -> []K A\n"));
    // scheme 12 is not part of the smaller system
    let o = run(&["prove", "--proof", &proof, "--system", "mp"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(1), "rejected at line 4: scheme 12 is not an axiom of mp\n"));
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help")
}

#[test]
fn help_text_matches_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut names = vec![None];
    names.extend(SUBCOMMANDS.iter().map(Some));
    for name in names {
        let args: Vec<&str> = name.into_iter().copied().chain(["--help"]).collect();
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0));
        let path = golden_dir().join(format!("{}.txt", name.unwrap_or(&"treelike")));
        if update {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &o.stdout).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(stdout(&o), golden, "{}", path.display());
    }
}

#[test]
fn help_lists_every_flag() {
    let o = run(&["sat", "--help"]);
    let text = stdout(&o);
    for flag in ["--max-points", "--max-opens", "--use-bound", "--cap-points", "--cap-opens", "--non-treelike", "--output", "--formula-file", "--json", "--jobs"] {
        assert!(text.contains(flag), "{flag}");
    }
    let text = stdout(&run(&["soundness", "--help"]));
    for flag in ["--max-points", "--max-opens", "--schemes", "--custom", "--atoms", "--depth", "--non-treelike", "--random", "--seed", "--witnesses"] {
        assert!(text.contains(flag), "{flag}");
    }
}
