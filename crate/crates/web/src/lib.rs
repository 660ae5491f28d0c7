//! Browser bindings. Every entry point takes plain strings and returns a JSON
//! string, so the page needs no generated type glue.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use treelike::decide::{satisfiable, Budget, SearchOptions, Sizes, Verdict};
use treelike::formula::parse;
use treelike::model::{build_question_tree, Model};
use treelike::partition::extract_finite_model;

#[derive(Serialize)]
struct Row {
    point: String,
    open: String,
    value: bool,
}

fn names(list: &str) -> Vec<String> {
    list.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// `Q1=q1,q2` per line.
fn questions(text: &str) -> Result<Vec<(String, Vec<String>)>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (name, members) = l.split_once('=').ok_or_else(|| format!("expected NAME=points in `{l}`"))?;
            Ok((name.trim().to_string(), names(members)))
        })
        .collect()
}

fn table(m: &Model, f: &treelike::formula::Formula) -> Result<Vec<Row>, String> {
    m.neighborhoods()
        .map(|n| {
            Ok(Row {
                point: m.space.points()[n.point].clone(),
                open: m.space.opens()[n.open].name.clone(),
                value: m.satisfies(n, f).map_err(|e| e.to_string())?,
            })
        })
        .collect()
}

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn explore_inner(points: &str, qs: &str, formula: &str) -> Result<Value, String> {
    let m = build_question_tree(&names(points), &questions(qs)?).map_err(|e| e.to_string())?;
    let f = parse(formula).map_err(|e| e.to_string())?;
    Ok(json!({
        "model": m.to_file(),
        "valid": m.valid(&f),
        "rows": table(&m, &f)?,
    }))
}

/// Builds the question tree over `points` and evaluates `formula` at every neighborhood.
#[wasm_bindgen]
pub fn explore(points: &str, questions: &str, formula: &str) -> String {
    respond(explore_inner(points, questions, formula))
}

fn extract_inner(model_json: &str, formula: &str) -> Result<Value, String> {
    let m = Model::from_json(model_json).map_err(|e| e.to_string())?;
    let f = parse(formula).map_err(|e| e.to_string())?;
    let ext = extract_finite_model(&m, &f).map_err(|e| e.to_string())?;
    Ok(json!({
        "report": ext.report,
        "model": ext.model().to_file(),
        "rows": table(ext.model(), &f)?,
    }))
}

/// Shrinks a model to a finite one that agrees on `formula`'s subformulas.
#[wasm_bindgen]
pub fn extract(model_json: &str, formula: &str) -> String {
    respond(extract_inner(model_json, formula))
}

fn search_inner(formula: &str, max_points: usize, max_opens: usize, treelike: bool) -> Result<Value, String> {
    let f = parse(formula).map_err(|e| e.to_string())?;
    let opts = SearchOptions {
        budget: Budget::Sizes(Sizes { max_points, max_opens }),
        treelike,
        ..Default::default()
    };
    let out = satisfiable(&f, &opts).map_err(|e| e.to_string())?;
    let mut v = json!({ "verdict": out.label(), "models_checked": out.models_checked });
    if let Verdict::Sat { model, at } = &out.verdict {
        v["at"] = json!(model.describe(*at));
        v["model"] = json!(model.to_file());
    }
    Ok(v)
}

/// Bounded satisfiability search.
#[wasm_bindgen]
pub fn search(formula: &str, max_points: usize, max_opens: usize, treelike: bool) -> String {
    respond(search_inner(formula, max_points, max_opens, treelike))
}
