//! Axiom schemes and explicit substitutions.
//!
//! Scheme bodies are ordinary formulas whose atoms are the metavariables
//! `phi`, `psi`, `chi` (any formula) and `A` (atoms only). Scheme 1, "all
//! propositional tautologies", has no body and is decided by
//! [`crate::tautology`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse, Formula};

pub const FORMULA_METAVARS: [&str; 3] = ["phi", "psi", "chi"];
pub const ATOM_METAVAR: &str = "A";

/// Scheme numbering: 1-12 are the treelike system, 13 and 14 the lattice
/// extras, 15 the treelike corollary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemeId(pub u8);

impl SchemeId {
    pub const TAUTOLOGY: SchemeId = SchemeId(1);
    pub const MAX: u8 = 15;
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 12 {
            write!(f, "S{}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn body_text(id: u8) -> Option<&'static str> {
    Some(match id {
        2 => "(A -> []A) & (~A -> []~A)",
        3 => "[](phi -> psi) -> ([]phi -> []psi)",
        4 => "[]phi -> phi",
        5 => "[]phi -> [][]phi",
        6 => "K(phi -> psi) -> (K phi -> K psi)",
        7 => "K phi -> phi",
        8 => "K phi -> K K phi",
        9 => "phi -> K L phi",
        10 => "K[]phi -> []K phi",
        11 => "[]([]phi -> psi) | []([]psi -> phi)",
        12 => "[]K phi & K([]phi -> []psi) -> []K([]phi -> []psi)",
        13 => "<>[]phi -> []<>phi",
        14 => "<>(K phi & psi) & L<>(K phi & chi) -> <>(K<>phi & <>psi & L<>chi)",
        15 => "[]<>phi -> <>[]phi",
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaTemplate {
    pub name: String,
    pub id: Option<SchemeId>,
    /// `None` only for scheme 1.
    pub body: Option<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("unknown axiom scheme {0}")]
    UnknownScheme(u8),
    #[error("no binding for metavariable `{0}`")]
    MissingBinding(String),
    #[error("metavariable `A` must be bound to an atom, got `{0}`")]
    NonAtomicBinding(String),
    #[error("scheme 1 has no template; it is checked as a tautology")]
    NoTemplate,
    #[error("custom scheme uses `{0}`, which is not a metavariable (phi, psi, chi, A)")]
    NotAMetavariable(String),
    #[error(transparent)]
    Parse(#[from] crate::formula::ParseError),
}

impl SchemaTemplate {
    pub fn builtin(id: u8) -> Result<SchemaTemplate, SchemeError> {
        if id == 1 {
            return Ok(SchemaTemplate { name: "1".into(), id: Some(SchemeId(1)), body: None });
        }
        let text = body_text(id).ok_or(SchemeError::UnknownScheme(id))?;
        let body = parse(text).expect("built-in scheme bodies parse");
        Ok(SchemaTemplate { name: SchemeId(id).to_string(), id: Some(SchemeId(id)), body: Some(body) })
    }

    /// A user scheme written over `phi`, `psi`, `chi` and `A`.
    pub fn custom(name: impl Into<String>, text: &str) -> Result<SchemaTemplate, SchemeError> {
        let body = parse(text)?;
        for atom in body.atoms() {
            if atom != ATOM_METAVAR && !FORMULA_METAVARS.contains(&atom.as_str()) {
                return Err(SchemeError::NotAMetavariable(atom));
            }
        }
        Ok(SchemaTemplate { name: name.into(), id: None, body: Some(body) })
    }

    pub fn metavariables(&self) -> Vec<String> {
        self.body.as_ref().map(|b| b.atoms().into_iter().collect()).unwrap_or_default()
    }

    pub fn instantiate(&self, subst: &Substitution) -> Result<Formula, SchemeError> {
        let body = self.body.as_ref().ok_or(SchemeError::NoTemplate)?;
        for var in body.atoms() {
            let bound = subst.get(&var).ok_or_else(|| SchemeError::MissingBinding(var.clone()))?;
            if var == ATOM_METAVAR && !matches!(bound, Formula::Atom(_)) {
                return Err(SchemeError::NonAtomicBinding(bound.to_string()));
            }
        }
        Ok(body.substitute(&|name| subst.get(name).cloned()))
    }
}

/// Schemes 1-10.
pub fn mp_schemes() -> Vec<u8> {
    (1..=10).collect()
}

/// Schemes 1-10 plus the two lattice schemes.
pub fn mp_star_schemes() -> Vec<u8> {
    (1..=10).chain([13, 14]).collect()
}

/// Schemes 1-12.
pub fn mpt_schemes() -> Vec<u8> {
    (1..=12).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<String, Formula>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, f: Formula) -> Self {
        self.0.insert(var.to_string(), f);
        self
    }

    pub fn insert(&mut self, var: &str, f: Formula) {
        self.0.insert(var.to_string(), f);
    }

    pub fn get(&self, var: &str) -> Option<&Formula> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Formula)> {
        self.0.iter()
    }
}

impl FromIterator<(String, Formula)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (String, Formula)>>(iter: T) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

/// Parses a scheme list such as `1-12`, `13,15` or `1-10,13-14`.
pub fn parse_scheme_list(text: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| -> Result<u8, String> {
            let s = s.trim().trim_start_matches(['S', 's']);
            s.parse::<u8>().map_err(|_| format!("bad scheme number `{s}`"))
        };
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(part)?, num(part)?),
        };
        if lo == 0 || hi > SchemeId::MAX || lo > hi {
            return Err(format!("scheme range `{part}` outside 1-{}", SchemeId::MAX));
        }
        out.extend(lo..=hi);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
