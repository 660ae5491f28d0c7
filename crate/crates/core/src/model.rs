//! Finite subset spaces and models.
//!
//! A model is a point set `X`, a family of named opens containing `X`, and a
//! point-based valuation. Formulas are evaluated at neighborhoods `(x, U)`
//! with `x ∈ U`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{is_valid_atom_name, Formula};
use crate::pointset::PointSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model has no points")]
    EmptySpace,
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("unknown open `{0}`")]
    UnknownOpen(String),
    #[error("duplicate open name `{0}`")]
    DuplicateOpenName(String),
    #[error("opens `{0}` and `{1}` have the same members")]
    DuplicateOpen(String, String),
    #[error("the full point set is not among the opens")]
    MissingTop,
    #[error("point `{point}` is not in open `{open}`")]
    InvalidNeighborhood { point: String, open: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("`{0}` is not a valid atom name")]
    BadAtomName(String),
    #[error("stream depth must be at least 1")]
    ZeroDepth,
    #[error("question `{0}` mentions points outside the space")]
    QuestionOutsideSpace(String),
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Open {
    pub name: String,
    pub members: PointSet,
}

#[derive(Clone, Debug)]
pub struct SubsetSpace {
    points: Vec<String>,
    opens: Vec<Open>,
    top: usize,
    /// `below[u]` lists every open contained in open `u`, `u` included.
    below: Vec<Vec<usize>>,
}

impl SubsetSpace {
    pub fn new(points: Vec<String>, opens: Vec<Open>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptySpace);
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p.as_str()) {
                return Err(ModelError::DuplicatePoint(p.clone()));
            }
        }
        let full = PointSet::full(points.len());
        let mut names = BTreeSet::new();
        let mut by_members: HashMap<&PointSet, &str> = HashMap::new();
        for o in &opens {
            if !names.insert(o.name.as_str()) {
                return Err(ModelError::DuplicateOpenName(o.name.clone()));
            }
            if !o.members.is_subset(&full) {
                let stray = o.members.difference(&full).first().unwrap_or(0);
                return Err(ModelError::UnknownPoint(format!("#{stray}")));
            }
            if let Some(first) = by_members.insert(&o.members, &o.name) {
                return Err(ModelError::DuplicateOpen(first.to_string(), o.name.clone()));
            }
        }
        let top = opens.iter().position(|o| o.members == full).ok_or(ModelError::MissingTop)?;
        let below = opens
            .iter()
            .map(|u| (0..opens.len()).filter(|&v| opens[v].members.is_subset(&u.members)).collect())
            .collect();
        Ok(SubsetSpace { points, opens, top, below })
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn opens(&self) -> &[Open] {
        &self.opens
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn full(&self) -> &PointSet {
        &self.opens[self.top].members
    }

    pub fn members(&self, open: usize) -> &PointSet {
        &self.opens[open].members
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn open_index(&self, name: &str) -> Option<usize> {
        self.opens.iter().position(|o| o.name == name)
    }

    pub fn open_by_members(&self, members: &PointSet) -> Option<usize> {
        self.opens.iter().position(|o| &o.members == members)
    }

    /// Opens contained in `open`, including itself.
    pub fn down_set(&self, open: usize) -> &[usize] {
        &self.below[open]
    }

    /// First pair of opens that is neither nested nor disjoint.
    pub fn treelike_violation(&self) -> Option<(usize, usize)> {
        for (i, u) in self.opens.iter().enumerate() {
            for (j, v) in self.opens.iter().enumerate().skip(i + 1) {
                let (u, v) = (&u.members, &v.members);
                if !(u.is_subset(v) || v.is_subset(u) || u.is_disjoint(v)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_treelike(&self) -> bool {
        self.treelike_violation().is_none()
    }

    pub fn names_of(&self, set: &PointSet) -> Vec<String> {
        set.iter().map(|i| self.points[i].clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Neighborhood {
    pub point: usize,
    pub open: usize,
}

/// `table[u]` is the set of points `x ∈ U` with `x, U ⊨ f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable(pub Vec<PointSet>);

impl TruthTable {
    pub fn at(&self, open: usize) -> &PointSet {
        &self.0[open]
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub space: SubsetSpace,
    valuation: BTreeMap<String, PointSet>,
}

impl Model {
    pub fn new(space: SubsetSpace, valuation: BTreeMap<String, PointSet>) -> Result<Self, ModelError> {
        for (atom, set) in &valuation {
            if !is_valid_atom_name(atom) {
                return Err(ModelError::BadAtomName(atom.clone()));
            }
            if !set.is_subset(space.full()) {
                return Err(ModelError::UnknownPoint(format!("in valuation of {atom}")));
            }
        }
        Ok(Model { space, valuation })
    }

    pub fn valuation(&self) -> &BTreeMap<String, PointSet> {
        &self.valuation
    }

    /// Unknown atoms are empty.
    /// Equal up to renaming points and opens. Backtracks over point
    /// bijections that respect each point's atoms and open count.
    pub fn isomorphic(&self, other: &Model) -> bool {
        let n = self.space.num_points();
        if n != other.space.num_points()
            || self.space.opens().len() != other.space.opens().len()
            || !self.valuation.keys().eq(other.valuation.keys())
        {
            return false;
        }
        let sig = |m: &Model, x: usize| {
            let atoms: Vec<bool> = m.valuation.values().map(|v| v.contains(x)).collect();
            (atoms, m.space.opens().iter().filter(|o| o.members.contains(x)).count())
        };
        let theirs: BTreeSet<PointSet> = other.space.opens().iter().map(|o| o.members.clone()).collect();
        let mut image = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn assign(
            x: usize,
            a: &Model,
            b: &Model,
            sig: &dyn Fn(&Model, usize) -> (Vec<bool>, usize),
            theirs: &BTreeSet<PointSet>,
            image: &mut [usize],
            used: &mut [bool],
        ) -> bool {
            if x == image.len() {
                return a.space.opens().iter().all(|o| theirs.contains(&o.members.iter().map(|p| image[p]).collect()));
            }
            for y in 0..image.len() {
                if !used[y] && sig(a, x) == sig(b, y) {
                    image[x] = y;
                    used[y] = true;
                    if assign(x + 1, a, b, sig, theirs, image, used) {
                        return true;
                    }
                    used[y] = false;
                }
            }
            false
        }
        assign(0, self, other, &sig, &theirs, &mut image, &mut used)
    }

    pub fn atom_set(&self, atom: &str) -> PointSet {
        self.valuation.get(atom).cloned().unwrap_or_default()
    }

    pub fn check_atoms(&self, f: &Formula) -> Result<(), ModelError> {
        match f.atoms().into_iter().find(|a| !self.valuation.contains_key(a)) {
            Some(a) => Err(ModelError::UnknownAtom(a)),
            None => Ok(()),
        }
    }

    pub fn neighborhood(&self, point: &str, open: &str) -> Result<Neighborhood, ModelError> {
        let p = self.space.point_index(point).ok_or_else(|| ModelError::UnknownPoint(point.into()))?;
        let o = self.space.open_index(open).ok_or_else(|| ModelError::UnknownOpen(open.into()))?;
        let n = Neighborhood { point: p, open: o };
        self.check_neighborhood(n)?;
        Ok(n)
    }

    fn check_neighborhood(&self, n: Neighborhood) -> Result<(), ModelError> {
        let valid = n.open < self.space.opens.len() && self.space.members(n.open).contains(n.point);
        if valid {
            Ok(())
        } else {
            Err(ModelError::InvalidNeighborhood {
                point: self.space.points.get(n.point).cloned().unwrap_or_else(|| format!("#{}", n.point)),
                open: self.space.opens.get(n.open).map(|o| o.name.clone()).unwrap_or_else(|| format!("#{}", n.open)),
            })
        }
    }

    /// All neighborhoods, open-major.
    pub fn neighborhoods(&self) -> impl Iterator<Item = Neighborhood> + '_ {
        (0..self.space.opens.len())
            .flat_map(move |u| self.space.members(u).iter().map(move |x| Neighborhood { point: x, open: u }))
    }

    /// Direct recursive evaluation of the satisfaction clauses.
    pub fn satisfies(&self, n: Neighborhood, f: &Formula) -> Result<bool, ModelError> {
        self.check_neighborhood(n)?;
        Ok(self.holds(n.point, n.open, f))
    }

    fn holds(&self, x: usize, u: usize, f: &Formula) -> bool {
        match f {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Atom(a) => self.valuation.get(a).is_some_and(|s| s.contains(x)),
            Formula::Not(g) => !self.holds(x, u, g),
            Formula::And(l, r) => self.holds(x, u, l) && self.holds(x, u, r),
            Formula::Know(g) => self.space.members(u).iter().all(|y| self.holds(y, u, g)),
            Formula::Effort(g) => self.space.below[u]
                .iter()
                .filter(|&&v| self.space.members(v).contains(x))
                .all(|&v| self.holds(x, v, g)),
        }
    }

    /// Bottom-up evaluation of `f` at every neighborhood at once.
    pub fn truth_table(&self, f: &Formula) -> TruthTable {
        TruthTable(self.table(f))
    }

    fn table(&self, f: &Formula) -> Vec<PointSet> {
        let opens = &self.space.opens;
        match f {
            Formula::Top => opens.iter().map(|o| o.members.clone()).collect(),
            Formula::Bottom => vec![PointSet::new(); opens.len()],
            Formula::Atom(a) => {
                let set = self.atom_set(a);
                opens.iter().map(|o| o.members.intersection(&set)).collect()
            }
            Formula::Not(g) => {
                let t = self.table(g);
                opens.iter().zip(t).map(|(o, s)| o.members.difference(&s)).collect()
            }
            Formula::And(l, r) => {
                let (a, b) = (self.table(l), self.table(r));
                a.iter().zip(&b).map(|(x, y)| x.intersection(y)).collect()
            }
            Formula::Know(g) => {
                let t = self.table(g);
                opens.iter().zip(t).map(|(o, s)| if s == o.members { s } else { PointSet::new() }).collect()
            }
            Formula::Effort(g) => {
                let t = self.table(g);
                let full = self.space.full();
                (0..opens.len())
                    .map(|u| {
                        self.space.below[u].iter().fold(opens[u].members.clone(), |acc, &v| {
                            // points of V must satisfy g at V; points outside V are unconstrained
                            acc.intersection(&t[v].union(&full.difference(&opens[v].members)))
                        })
                    })
                    .collect()
            }
        }
    }

    /// `{x ∈ U : x, U ⊨ f}`.
    pub fn truth_set(&self, open: usize, f: &Formula) -> Result<PointSet, ModelError> {
        if open >= self.space.opens.len() {
            return Err(ModelError::UnknownOpen(format!("#{open}")));
        }
        Ok(self.table(f).swap_remove(open))
    }

    /// First neighborhood (open-major) where `f` fails.
    pub fn counterexample(&self, f: &Formula) -> Option<Neighborhood> {
        let t = self.table(f);
        self.neighborhoods().find(|n| !t[n.open].contains(n.point))
    }

    /// First neighborhood (open-major) where `f` holds.
    pub fn witness(&self, f: &Formula) -> Option<Neighborhood> {
        let t = self.table(f);
        self.neighborhoods().find(|n| t[n.open].contains(n.point))
    }

    pub fn valid(&self, f: &Formula) -> bool {
        let t = self.table(f);
        t.iter().zip(&self.space.opens).all(|(s, o)| *s == o.members)
    }

    pub fn describe(&self, n: Neighborhood) -> String {
        format!("({}, {})", self.space.points[n.point], self.space.opens[n.open].name)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            points: self.space.points.clone(),
            opens: self
                .space
                .opens
                .iter()
                .map(|o| OpenFile { name: o.name.clone(), members: self.space.names_of(&o.members) })
                .collect(),
            valuation: self.valuation.iter().map(|(a, s)| (a.clone(), self.space.names_of(s))).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        file.into_model()
    }
}

/// On-disk model format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub points: Vec<String>,
    pub opens: Vec<OpenFile>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenFile {
    pub name: String,
    pub members: Vec<String>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model, ModelError> {
        let index: HashMap<&str, usize> = self.points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let lookup = |names: &[String]| -> Result<PointSet, ModelError> {
            names
                .iter()
                .map(|n| index.get(n.as_str()).copied().ok_or_else(|| ModelError::UnknownPoint(n.clone())))
                .collect()
        };
        let opens = self
            .opens
            .iter()
            .map(|o| Ok(Open { name: o.name.clone(), members: lookup(&o.members)? }))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let valuation = self
            .valuation
            .iter()
            .map(|(a, names)| Ok((a.clone(), lookup(names)?)))
            .collect::<Result<BTreeMap<_, _>, ModelError>>()?;
        let space = SubsetSpace::new(self.points.clone(), opens)?;
        Model::new(space, valuation)
    }
}

/// Refines `X` by each yes/no question in turn, keeping every cell (empty
/// ones included) as an open. Each question name becomes an atom.
pub fn build_question_tree(points: &[String], questions: &[(String, Vec<String>)]) -> Result<Model, ModelError> {
    let index: HashMap<&str, usize> = points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let full = PointSet::full(points.len());
    let mut opens = vec![Open { name: "top".into(), members: full.clone() }];
    let mut level = vec![("".to_string(), full)];
    let mut valuation = BTreeMap::new();
    for (q, yes) in questions {
        if !is_valid_atom_name(q) {
            return Err(ModelError::BadAtomName(q.clone()));
        }
        let yes_set = yes
            .iter()
            .map(|p| index.get(p.as_str()).copied().ok_or_else(|| ModelError::QuestionOutsideSpace(q.clone())))
            .collect::<Result<PointSet, _>>()?;
        let mut next = Vec::new();
        for (path, cell) in &level {
            let sep = if path.is_empty() { "" } else { "." };
            next.push((format!("{path}{sep}{q}"), cell.intersection(&yes_set)));
            next.push((format!("{path}{sep}~{q}"), cell.difference(&yes_set)));
        }
        for (name, members) in &next {
            if !opens.iter().any(|o| &o.members == members) {
                opens.push(Open { name: name.clone(), members: members.clone() });
            }
        }
        valuation.insert(q.clone(), yes_set);
        level = next;
    }
    Model::new(SubsetSpace::new(points.to_vec(), opens)?, valuation)
}

/// Binary strings of length `depth` with one cylinder open per prefix.
pub fn build_stream_space(depth: usize) -> Result<Model, ModelError> {
    if depth == 0 {
        return Err(ModelError::ZeroDepth);
    }
    let width = 1usize << depth;
    let word = |i: usize| format!("{:0depth$b}", i, depth = depth);
    let points: Vec<String> = (0..width).map(word).collect();
    let mut opens = vec![Open { name: "top".into(), members: PointSet::full(width) }];
    for len in 1..=depth {
        for prefix in 0..(1usize << len) {
            let shift = depth - len;
            let members = (prefix << shift..(prefix + 1) << shift).collect();
            opens.push(Open { name: format!("[{:0len$b}]", prefix, len = len), members });
        }
    }
    Model::new(SubsetSpace::new(points, opens)?, BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    pub(crate) fn figure1() -> Model {
        let pts: Vec<String> = ["q1", "q2", "q3", "q4"].iter().map(|s| s.to_string()).collect();
        let qs = vec![
            ("Q1".to_string(), vec!["q1".to_string(), "q2".to_string()]),
            ("Q2".to_string(), vec!["q1".to_string(), "q2".to_string(), "q3".to_string()]),
        ];
        build_question_tree(&pts, &qs).unwrap()
    }

    fn set(m: &Model, names: &[&str]) -> PointSet {
        names.iter().map(|n| m.space.point_index(n).unwrap()).collect()
    }

    fn open(m: &Model, names: &[&str]) -> usize {
        m.space.open_by_members(&set(m, names)).unwrap()
    }

    fn nb(m: &Model, p: &str, o: &[&str]) -> Neighborhood {
        Neighborhood { point: m.space.point_index(p).unwrap(), open: open(m, o) }
    }

    #[test]
    fn figure1_family() {
        let m = figure1();
        let fams: BTreeSet<Vec<String>> = m.space.opens().iter().map(|o| m.space.names_of(&o.members)).collect();
        let expected: BTreeSet<Vec<String>> = [
            vec!["q1", "q2", "q3", "q4"],
            vec!["q1", "q2"],
            vec!["q3", "q4"],
            vec!["q3"],
            vec!["q4"],
            vec![],
        ]
        .iter()
        .map(|v| v.iter().map(|s| s.to_string()).collect())
        .collect();
        assert_eq!(fams, expected);
        assert!(m.space.is_treelike());
        assert_eq!(m.atom_set("Q1"), set(&m, &["q1", "q2"]));
    }

    #[test]
    fn treelike_checks() {
        let pts: Vec<String> = ["q1", "q2", "q3"].iter().map(|s| s.to_string()).collect();
        let mk = |sets: &[&[usize]]| {
            let opens = sets
                .iter()
                .enumerate()
                .map(|(i, s)| Open { name: format!("o{i}"), members: s.iter().copied().collect() })
                .collect();
            SubsetSpace::new(pts.clone(), opens).unwrap()
        };
        assert!(!mk(&[&[0, 1, 2], &[0, 1], &[1, 2]]).is_treelike());
        assert!(mk(&[&[0, 1, 2]]).is_treelike());
        assert!(mk(&[&[0, 1, 2], &[], &[0]]).is_treelike());
    }

    #[test]
    fn down_sets() {
        let m = figure1();
        let d: BTreeSet<Vec<String>> = m
            .space
            .down_set(open(&m, &["q3", "q4"]))
            .iter()
            .map(|&v| m.space.names_of(m.space.members(v)))
            .collect();
        assert_eq!(d.len(), 4);
        assert!(d.contains(&vec![]));
        assert!(d.contains(&vec!["q3".to_string()]));
        assert_eq!(m.space.down_set(m.space.top()).len(), m.space.opens().len());
        let empty = open(&m, &[]);
        assert_eq!(m.space.down_set(empty), &[empty]);
    }

    #[test]
    fn figure1_satisfaction() {
        let m = figure1();
        let kq1 = parse("K Q1").unwrap();
        assert!(!m.satisfies(nb(&m, "q1", &["q1", "q2", "q3", "q4"]), &kq1).unwrap());
        assert!(m.satisfies(nb(&m, "q1", &["q1", "q2"]), &kq1).unwrap());
        assert!(m.satisfies(nb(&m, "q1", &["q1", "q2", "q3", "q4"]), &parse("<>K Q1").unwrap()).unwrap());
        assert!(m.satisfies(nb(&m, "q3", &["q3", "q4"]), &parse("[]L Q2").unwrap()).unwrap());
    }

    #[test]
    fn invalid_neighborhood_is_an_error() {
        let m = figure1();
        let n = Neighborhood { point: m.space.point_index("q3").unwrap(), open: open(&m, &["q1", "q2"]) };
        assert!(matches!(m.satisfies(n, &Formula::Top), Err(ModelError::InvalidNeighborhood { .. })));
        assert!(m.neighborhood("q3", "Q1").is_err());
    }

    #[test]
    fn validity_and_truth_sets() {
        let m = figure1();
        assert!(m.valid(&parse("Q1 -> []Q1").unwrap()));
        assert!(!m.valid(&parse("K Q1").unwrap()));
        assert_eq!(m.counterexample(&parse("K Q1").unwrap()).map(|n| m.describe(n)), Some("(q1, top)".into()));
        assert!(m.valid(&Formula::Top));
        let top = m.space.top();
        assert_eq!(m.truth_set(top, &parse("Q1").unwrap()).unwrap(), set(&m, &["q1", "q2"]));
        assert_eq!(m.truth_set(top, &parse("K Q1").unwrap()).unwrap(), PointSet::new());
        let u = open(&m, &["q1", "q2"]);
        assert_eq!(m.truth_set(u, &parse("K Q1").unwrap()).unwrap(), set(&m, &["q1", "q2"]));
    }

    #[test]
    fn unknown_atoms_are_false() {
        let m = figure1();
        let f = parse("Z").unwrap();
        assert!(m.truth_set(m.space.top(), &f).unwrap().is_empty());
        assert_eq!(m.check_atoms(&f), Err(ModelError::UnknownAtom("Z".into())));
    }

    #[test]
    fn question_tree_edge_cases() {
        let pts = vec!["a".to_string(), "b".to_string()];
        let m = build_question_tree(&pts, &[]).unwrap();
        assert_eq!(m.space.opens().len(), 1);
        let single = vec!["p".to_string()];
        let m = build_question_tree(&single, &[("Q".into(), vec!["p".into()])]).unwrap();
        let sizes: Vec<usize> = m.space.opens().iter().map(|o| o.members.len()).collect();
        assert_eq!(sizes, vec![1, 0]);
        let err = build_question_tree(&single, &[("Q".into(), vec!["zz".into()])]).unwrap_err();
        assert_eq!(err, ModelError::QuestionOutsideSpace("Q".into()));
    }

    #[test]
    fn stream_spaces() {
        let m = build_stream_space(2).unwrap();
        assert_eq!(m.space.points(), &["00", "01", "10", "11"]);
        let fams: BTreeSet<Vec<String>> = m.space.opens().iter().map(|o| m.space.names_of(&o.members)).collect();
        assert_eq!(fams.len(), 7);
        assert!(fams.contains(&vec!["00".to_string(), "01".to_string()]));
        let m1 = build_stream_space(1).unwrap();
        assert_eq!(m1.space.opens().len(), 3);
        assert_eq!(build_stream_space(0).unwrap_err(), ModelError::ZeroDepth);
        for d in 1..=6 {
            assert!(build_stream_space(d).unwrap().space.is_treelike());
        }
    }

    #[test]
    fn loader_checks() {
        let ok = r#"{ "points": ["q1","q2"], "opens": [ {"name":"top","members":["q1","q2"]},
                      {"name":"U1","members":["q1"]} ], "valuation": { "Q1": ["q1"] } }"#;
        let m = Model::from_json(ok).unwrap();
        assert_eq!(Model::from_json(&m.to_json()).unwrap().to_file(), m.to_file());
        let no_top = r#"{ "points": ["q1","q2"], "opens": [ {"name":"U1","members":["q1"]} ] }"#;
        assert_eq!(Model::from_json(no_top).unwrap_err(), ModelError::MissingTop);
        let dup = r#"{ "points": ["q1"], "opens": [ {"name":"a","members":["q1"]}, {"name":"b","members":["q1"]} ] }"#;
        assert_eq!(Model::from_json(dup).unwrap_err(), ModelError::DuplicateOpen("a".into(), "b".into()));
        let stray = r#"{ "points": ["q1"], "opens": [ {"name":"a","members":["q1","q9"]} ] }"#;
        assert_eq!(Model::from_json(stray).unwrap_err(), ModelError::UnknownPoint("q9".into()));
        let reserved = r#"{ "points": ["q1"], "opens": [ {"name":"a","members":["q1"]} ], "valuation": {"K": []} }"#;
        assert_eq!(Model::from_json(reserved).unwrap_err(), ModelError::BadAtomName("K".into()));
        assert!(matches!(Model::from_json("{").unwrap_err(), ModelError::Format(_)));
    }
}
