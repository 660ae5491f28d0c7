//! Hilbert-style proof checking and the exhaustive scheme soundness suite.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decide::{families, space_from_masks, valuations};
use crate::formula::{parse, render, Formula};
use crate::model::{Model, ModelFile};
use crate::schemes::{mp_schemes, mp_star_schemes, mpt_schemes, SchemaTemplate, Substitution, FORMULA_METAVARS};
use crate::tautology::is_tautology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum System {
    Mp,
    MpStar,
    #[default]
    Mpt,
}

impl System {
    pub fn schemes(self) -> Vec<u8> {
        match self {
            System::Mp => mp_schemes(),
            System::MpStar => mp_star_schemes(),
            System::Mpt => mpt_schemes(),
        }
    }
}

impl FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mp" => Ok(System::Mp),
            "mp*" | "mpstar" => Ok(System::MpStar),
            "mpt" => Ok(System::Mpt),
            other => Err(format!("unknown system `{other}` (expected mp, mp* or mpt)")),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Mp => "mp",
            System::MpStar => "mp*",
            System::Mpt => "mpt",
        })
    }
}

/// Line references are 1-based, as in proof files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Axiom { scheme: u8, subst: Substitution },
    Mp(usize, usize),
    NecK(usize),
    NecBox(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofLine {
    pub formula: Formula,
    pub by: Justification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Proof {
    pub lines: Vec<ProofLine>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct Rejection {
    /// 1-based; 0 for a proof with no lines.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum ProofFormatError {
    #[error("proof file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Formula { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProofFile {
    lines: Vec<LineFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineFile {
    formula: String,
    by: ByFile,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ByFile {
    Axiom {
        axiom: u8,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        subst: BTreeMap<String, String>,
    },
    Mp {
        mp: [usize; 2],
    },
    NecK {
        neck: usize,
    },
    NecBox {
        necbox: usize,
    },
}

impl Proof {
    pub fn from_json(text: &str) -> Result<Proof, ProofFormatError> {
        let file: ProofFile = serde_json::from_str(text)?;
        let mut lines = Vec::new();
        for (i, l) in file.lines.into_iter().enumerate() {
            let bad = |e: crate::formula::ParseError| ProofFormatError::Formula { line: i + 1, message: e.to_string() };
            let formula = parse(&l.formula).map_err(bad)?;
            let by = match l.by {
                ByFile::Axiom { axiom, subst } => {
                    let mut s = Substitution::new();
                    for (k, v) in subst {
                        s.insert(&k, parse(&v).map_err(bad)?);
                    }
                    Justification::Axiom { scheme: axiom, subst: s }
                }
                ByFile::Mp { mp: [a, b] } => Justification::Mp(a, b),
                ByFile::NecK { neck } => Justification::NecK(neck),
                ByFile::NecBox { necbox } => Justification::NecBox(necbox),
            };
            lines.push(ProofLine { formula, by });
        }
        Ok(Proof { lines })
    }

    pub fn to_json(&self) -> String {
        let lines = self
            .lines
            .iter()
            .map(|l| LineFile {
                formula: render(&l.formula),
                by: match &l.by {
                    Justification::Axiom { scheme, subst } => ByFile::Axiom {
                        axiom: *scheme,
                        subst: subst.iter().map(|(k, v)| (k.clone(), render(v))).collect(),
                    },
                    Justification::Mp(a, b) => ByFile::Mp { mp: [*a, *b] },
                    Justification::NecK(i) => ByFile::NecK { neck: *i },
                    Justification::NecBox(i) => ByFile::NecBox { necbox: *i },
                },
            })
            .collect();
        serde_json::to_string_pretty(&ProofFile { lines }).expect("proof serializes")
    }

    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }
}

/// Checks every line in order and returns the conclusion.
pub fn check_proof(proof: &Proof, system: System) -> Result<Formula, Rejection> {
    let allowed = system.schemes();
    if proof.lines.is_empty() {
        return Err(Rejection { line: 0, reason: "empty proof".into() });
    }
    for (k, line) in proof.lines.iter().enumerate() {
        let n = k + 1;
        let reject = |reason: String| Rejection { line: n, reason };
        let earlier = |i: usize| -> Result<&Formula, Rejection> {
            if i == 0 || i >= n {
                Err(reject(format!("bad index {i}")))
            } else {
                Ok(&proof.lines[i - 1].formula)
            }
        };
        match &line.by {
            Justification::Axiom { scheme, subst } => {
                if !allowed.contains(scheme) {
                    return Err(reject(format!("scheme {scheme} is not an axiom of {system}")));
                }
                let template = SchemaTemplate::builtin(*scheme).map_err(|e| reject(e.to_string()))?;
                if template.body.is_none() {
                    if !is_tautology(&line.formula) {
                        return Err(reject("not a tautology".into()));
                    }
                    continue;
                }
                let inst = template.instantiate(subst).map_err(|e| reject(e.to_string()))?;
                if inst != line.formula {
                    return Err(reject(format!("substitution mismatch: instance is `{inst}`")));
                }
            }
            Justification::Mp(i, j) => {
                let (f, imp) = (earlier(*i)?, earlier(*j)?);
                if *imp != Formula::implies(f.clone(), line.formula.clone()) {
                    return Err(reject(format!("modus ponens mismatch: line {j} is not line {i} -> this line")));
                }
            }
            Justification::NecK(i) => {
                if line.formula != Formula::know(earlier(*i)?.clone()) {
                    return Err(reject("necessitation mismatch".into()));
                }
            }
            Justification::NecBox(i) => {
                if line.formula != Formula::effort(earlier(*i)?.clone()) {
                    return Err(reject("necessitation mismatch".into()));
                }
            }
        }
    }
    Ok(proof.lines.last().expect("nonempty").formula.clone())
}

// ---------------------------------------------------------------------------
// Soundness suite

/// Schematic tautologies standing in for scheme 1.
const TAUTOLOGY_TEMPLATES: [&str; 4] = ["phi -> phi", "phi | ~phi", "phi & psi -> psi", "(phi -> psi) -> ~psi -> ~phi"];

#[derive(Clone, Debug)]
pub struct SoundnessConfig {
    pub max_points: usize,
    pub max_opens: usize,
    pub atoms: usize,
    pub depth: usize,
    pub schemes: Vec<SchemaTemplate>,
    /// Restrict to treelike families.
    pub treelike: bool,
    /// Witnesses kept in the report; the count is always exact.
    pub keep_witnesses: usize,
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        SoundnessConfig {
            max_points: 3,
            max_opens: usize::MAX,
            atoms: 2,
            depth: 1,
            schemes: mpt_schemes().into_iter().map(|i| SchemaTemplate::builtin(i).expect("built-in")).collect(),
            treelike: true,
            keep_witnesses: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub scheme: String,
    pub instance: String,
    pub point: String,
    pub open: String,
    pub model: ModelFile,
}

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    pub models: u64,
    pub instances: u64,
    pub checks: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

/// Atom names `A`, `B`, ... then `P5`, `P6`, ...
pub fn atom_names(n: usize) -> Vec<String> {
    (0..n).map(|i| if i < 4 { ["A", "B", "C", "D"][i].to_string() } else { format!("P{}", i + 1) }).collect()
}

/// Atoms, closed `depth` times under `~`, `[]`, `K` and `&`.
pub fn formula_pool(atoms: &[String], depth: usize) -> Vec<Formula> {
    let mut pool: Vec<Formula> = atoms.iter().map(Formula::atom).collect();
    for _ in 0..depth {
        let mut next = pool.clone();
        for f in &pool {
            next.push(Formula::not(f.clone()));
            next.push(Formula::effort(f.clone()));
            next.push(Formula::know(f.clone()));
        }
        for l in &pool {
            for r in &pool {
                next.push(Formula::and(l.clone(), r.clone()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        next.retain(|f| seen.insert(f.clone()));
        pool = next;
    }
    pool
}

/// Every instance of `template` over the pool; scheme 1 uses a few schematic
/// tautologies.
pub fn scheme_instances(template: &SchemaTemplate, atoms: &[String], pool: &[Formula]) -> Vec<Formula> {
    let Some(_) = template.body else {
        return TAUTOLOGY_TEMPLATES
            .iter()
            .flat_map(|t| scheme_instances(&SchemaTemplate::custom("1", t).expect("template parses"), atoms, pool))
            .collect();
    };
    let vars = template.metavariables();
    let mut out = Vec::new();
    let choices: Vec<Vec<Formula>> = vars
        .iter()
        .map(|v| if FORMULA_METAVARS.contains(&v.as_str()) { pool.to_vec() } else { atoms.iter().map(Formula::atom).collect() })
        .collect();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let subst: Substitution = vars.iter().zip(&idx).zip(&choices).map(|((v, &i), c)| (v.clone(), c[i].clone())).collect();
        out.push(template.instantiate(&subst).expect("all metavariables bound"));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Checks every scheme instance on every enumerated model. Models are
/// visited in enumeration order; witnesses come out in that order however
/// the work is scheduled.
pub fn soundness_suite(cfg: &SoundnessConfig) -> SoundnessReport {
    let atoms = atom_names(cfg.atoms);
    let pool = formula_pool(&atoms, cfg.depth);
    let insts: Vec<(String, Formula)> = cfg
        .schemes
        .iter()
        .flat_map(|t| scheme_instances(t, &atoms, &pool).into_iter().map(move |f| (t.name.clone(), f)))
        .collect();
    let mut spaces = Vec::new();
    for n in 1..=cfg.max_points {
        for fam in families(n, cfg.max_opens, cfg.treelike) {
            spaces.push(space_from_masks(n, &fam));
        }
    }
    let models: Vec<Model> = spaces
        .iter()
        .flat_map(|s| valuations(s.num_points(), &atoms).map(move |v| Model::new(s.clone(), v).expect("valuation fits")))
        .collect();
    let check = |m: &Model| -> (u64, Vec<Violation>) {
        let mut count = 0;
        let mut kept = Vec::new();
        for (scheme, f) in &insts {
            if let Some(nb) = m.counterexample(f) {
                count += 1;
                if kept.len() < cfg.keep_witnesses {
                    let file = m.to_file();
                    kept.push(Violation {
                        scheme: scheme.clone(),
                        instance: render(f),
                        point: m.space.points()[nb.point].clone(),
                        open: m.space.opens()[nb.open].name.clone(),
                        model: file,
                    });
                }
            }
        }
        (count, kept)
    };
    let results: Vec<(u64, Vec<Violation>)> = map_ordered(&models, check);
    let mut report = SoundnessReport {
        models: models.len() as u64,
        instances: insts.len() as u64,
        checks: models.len() as u64 * insts.len() as u64,
        violation_count: 0,
        violations: Vec::new(),
    };
    for (count, kept) in results {
        report.violation_count += count;
        for v in kept {
            if report.violations.len() < cfg.keep_witnesses {
                report.violations.push(v);
            }
        }
    }
    report
}

#[cfg(feature = "parallel")]
fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_ordered<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}
