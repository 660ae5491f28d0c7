use serde_json::Value;
use treelike_web::{explore, extract, search};

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn explore_reports_every_neighborhood() {
    let v = json(explore("q1,q2,q3,q4", "Q1=q1,q2\nQ2=q1,q2,q3", "<>K Q1"));
    let rows = v["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    let top_q1 = rows.iter().find(|r| r["point"] == "q1" && r["open"] == "top").unwrap();
    assert_eq!(top_q1["value"], true);
    assert_eq!(v["valid"], false);
}

#[test]
fn errors_come_back_as_json() {
    assert!(json(explore("a", "Q1", "A")).get("error").is_some());
    assert!(json(search("A &", 2, 2, true)).get("error").is_some());
    assert!(json(search("A", 0, 2, true)).get("error").is_some());
}

#[test]
fn extract_round_trips_a_model() {
    let m = json(explore("q1,q2,q3,q4", "Q1=q1,q2\nQ2=q1,q2,q3", "Q1"))["model"].to_string();
    let v = json(extract(&m, "<>K Q1"));
    assert_eq!(v["report"]["output_points"], 2);
    assert_eq!(v["report"]["output_opens"], 2);
}

#[test]
fn search_verdicts() {
    let v = json(search("L A & L ~A", 3, 3, true));
    assert_eq!(v["verdict"], "sat");
    assert_eq!(v["at"], "(p1, top)");
    assert_eq!(json(search("K A & ~A", 2, 2, true))["verdict"], "unsat_within");
}
