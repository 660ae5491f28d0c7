//! Finite stable partitions and the filtration of a treelike model.
//!
//! Families are sets of point sets (not necessarily opens). A family `F`
//! partitions the opens below it into remainders; a family is stable for a
//! formula when no point changes the formula's value across one remainder.
//! [`filtrate`] collapses each remainder into finitely many opens, and
//! [`point_quotient`] then merges indistinguishable points.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::decide::{complexity_bound, BoundValue};
use crate::formula::Formula;
use crate::model::{Model, ModelError, Neighborhood, Open, SubsetSpace};
use crate::pointset::PointSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("model is not treelike: opens `{0}` and `{1}` overlap without nesting")]
    NotTreelike(String, String),
    #[error("set is not a member of the family")]
    NotAMember,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn require_treelike(m: &Model) -> Result<(), PartitionError> {
    match m.space.treelike_violation() {
        Some((a, b)) => {
            let name = |i: usize| m.space.opens()[i].name.clone();
            Err(PartitionError::NotTreelike(name(a), name(b)))
        }
        None => Ok(()),
    }
}

/// Smallest superset of `family` closed under pairwise intersection.
/// Input order is kept; new sets are appended.
pub fn closure_intersection(family: &[PointSet]) -> Vec<PointSet> {
    let mut out: Vec<PointSet> = Vec::new();
    for s in family {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    let mut i = 0;
    while i < out.len() {
        for j in 0..i {
            let meet = out[i].intersection(&out[j]);
            if !out.contains(&meet) {
                out.push(meet);
            }
        }
        i += 1;
    }
    out
}

/// Opens below `family[member]` and below no member that does not contain it.
pub fn remainder(m: &Model, family: &[PointSet], member: usize) -> Result<Vec<usize>, PartitionError> {
    let u = family.get(member).ok_or(PartitionError::NotAMember)?;
    let opens = m.space.opens();
    Ok((0..opens.len())
        .filter(|&v| {
            let v = &opens[v].members;
            v.is_subset(u) && !family.iter().any(|w| !u.is_subset(w) && v.is_subset(w))
        })
        .collect())
}

pub fn remainders(m: &Model, family: &[PointSet]) -> Vec<Vec<usize>> {
    (0..family.len()).map(|i| remainder(m, family, i).expect("index in range")).collect()
}

/// No point changes the value of `f` across the opens of `g` containing it.
pub fn is_stable(m: &Model, g: &[usize], f: &Formula) -> bool {
    let table = m.truth_table(f);
    stable_in(m, g, &table.0)
}

fn stable_in(m: &Model, g: &[usize], table: &[PointSet]) -> bool {
    m.space.full().iter().all(|x| {
        let mut values = g.iter().filter(|&&v| m.space.members(v).contains(x)).map(|&v| table[v].contains(x));
        match values.next() {
            Some(first) => values.all(|b| b == first),
            None => true,
        }
    })
}

/// One subformula's row of the partition construction.
#[derive(Clone, Debug)]
pub struct Stage {
    pub formula: Formula,
    pub family: Vec<PointSet>,
    /// Remainder of each member, as open indices.
    pub remainders: Vec<Vec<usize>>,
    /// Points of each member's remainder where the formula holds.
    pub truth: Vec<PointSet>,
}

#[derive(Clone, Debug)]
pub struct PartitionTable {
    /// One stage per distinct subformula, children first.
    pub stages: Vec<Stage>,
}

impl PartitionTable {
    pub fn stage(&self, f: &Formula) -> Option<&Stage> {
        self.stages.iter().find(|s| &s.formula == f)
    }

    pub fn last(&self) -> &Stage {
        self.stages.last().expect("every formula has a stage")
    }

    /// Stages whose remainders are not stable for their formula.
    pub fn unstable(&self, m: &Model) -> Vec<(Formula, usize)> {
        let mut out = Vec::new();
        for st in &self.stages {
            let table = m.truth_table(&st.formula);
            for (i, rem) in st.remainders.iter().enumerate() {
                if !stable_in(m, rem, &table.0) {
                    out.push((st.formula.clone(), i));
                }
            }
        }
        out
    }
}

fn remainder_truth(rem: &[usize], table: &[PointSet]) -> PointSet {
    rem.iter().fold(PointSet::new(), |acc, &v| acc.union(&table[v]))
}

/// Families for every subformula of `phi`: atoms and constants get `{X}`,
/// negation and `[]` inherit the child's family, conjunction closes the
/// union, and `K` closes the child's family together with the child's
/// remainder truth sets.
pub fn build_stable_partitions(m: &Model, phi: &Formula) -> Result<PartitionTable, PartitionError> {
    require_treelike(m)?;
    let full = m.space.full().clone();
    let mut families: HashMap<Formula, Vec<PointSet>> = HashMap::new();
    let mut stages = Vec::new();
    for psi in phi.subformulas() {
        let family = match &psi {
            Formula::Top | Formula::Bottom | Formula::Atom(_) => vec![full.clone()],
            Formula::Not(g) | Formula::Effort(g) => families[g.as_ref()].clone(),
            Formula::And(l, r) => {
                let mut both = families[l.as_ref()].clone();
                both.extend(families[r.as_ref()].iter().cloned());
                closure_intersection(&both)
            }
            Formula::Know(g) => {
                let child = &families[g.as_ref()];
                let table = m.truth_table(g);
                let mut gens = child.clone();
                gens.extend(remainders(m, child).iter().map(|rem| remainder_truth(rem, &table.0)));
                closure_intersection(&gens)
            }
        };
        let rems = remainders(m, &family);
        let table = m.truth_table(&psi);
        let truth = rems.iter().map(|rem| remainder_truth(rem, &table.0)).collect();
        families.insert(psi.clone(), family.clone());
        stages.push(Stage { formula: psi, family, remainders: rems, truth });
    }
    Ok(PartitionTable { stages })
}

#[derive(Clone, Debug)]
pub struct FiltrationResult {
    pub table: PartitionTable,
    pub family: Vec<PointSet>,
    pub remainders: Vec<Vec<usize>>,
    /// Union of each member's remainder.
    pub bars: Vec<PointSet>,
    /// Members with a nonempty bar.
    pub surviving: Vec<usize>,
    /// `lt[i][j]` iff member `i` < member `j`.
    pub lt: Vec<Vec<bool>>,
    /// `(member, point) ↦` output open `[x]_i`.
    pub classes: BTreeMap<(usize, usize), usize>,
    pub model: Model,
}

impl FiltrationResult {
    pub fn le(&self, i: usize, j: usize) -> bool {
        i == j || self.lt[i][j]
    }

    /// Member whose remainder contains open `v` of the source model.
    pub fn member_of(&self, v: usize) -> Option<usize> {
        self.remainders.iter().position(|r| r.contains(&v))
    }

    /// The output neighborhood `(x, [x]_i)` standing for `(x, V)`.
    pub fn image(&self, n: Neighborhood) -> Option<Neighborhood> {
        let i = self.member_of(n.open)?;
        self.classes.get(&(i, n.point)).map(|&open| Neighborhood { point: n.point, open })
    }

    /// Checks the order and class lemmas of the construction, returning a
    /// description of each violation.
    pub fn lemma_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let s = &self.surviving;
        let meets = |i: usize, j: usize| !self.bars[i].is_disjoint(&self.bars[j]);
        for &i in s {
            if self.lt[i][i] {
                out.push(format!("< is reflexive at member {i}"));
            }
            for &j in s {
                if i != j && self.lt[i][j] && self.lt[j][i] {
                    out.push(format!("< is symmetric on members {i}, {j}"));
                }
                if meets(i, j) && !self.le(i, j) && !self.le(j, i) {
                    out.push(format!("overlapping members {i}, {j} are incomparable"));
                }
                if !meets(i, j) {
                    continue;
                }
                for x in self.bars[i].intersection(&self.bars[j]).iter() {
                    let (ci, cj) = (self.class_set(i, x), self.class_set(j, x));
                    if self.le(i, j) && !ci.is_subset(cj) {
                        out.push(format!("[x{x}]_{i} not inside [x{x}]_{j} although {i} <= {j}"));
                    }
                    if self.lt[i][j] && ci == cj {
                        out.push(format!("[x{x}]_{i} equals [x{x}]_{j} although {i} < {j}"));
                    }
                    if ci.is_proper_subset(cj) && !self.lt[i][j] {
                        out.push(format!("[x{x}]_{i} strictly inside [x{x}]_{j} but not {i} < {j}"));
                    }
                }
                for &k in s {
                    let triple = self.bars[i].intersection(&self.bars[j]).intersection(&self.bars[k]);
                    if self.le(i, j) && self.le(j, k) && !triple.is_empty() && !self.le(i, k) {
                        out.push(format!("{i} <= {j} <= {k} on a common point but not {i} <= {k}"));
                    }
                }
            }
        }
        if let Some((a, b)) = self.model.space.treelike_violation() {
            out.push(format!("output opens {a}, {b} overlap without nesting"));
        }
        out
    }

    fn class_set(&self, i: usize, x: usize) -> &PointSet {
        self.model.space.members(self.classes[&(i, x)])
    }

    /// Neighborhoods `(x, V)` of the source model and subformulas whose value
    /// differs at `(x, [x]_i)` in the output.
    pub fn equivalence_mismatches(&self, source: &Model, phi: &Formula) -> Vec<(Formula, Neighborhood)> {
        let mut out = Vec::new();
        for psi in phi.subformulas() {
            let before = source.truth_table(&psi);
            let after = self.model.truth_table(&psi);
            for n in source.neighborhoods() {
                let img = self.image(n).expect("every neighborhood has an image");
                if before.at(n.open).contains(n.point) != after.at(img.open).contains(img.point) {
                    out.push((psi.clone(), n));
                }
            }
        }
        out
    }
}

/// Replaces the opens of `m` by the finitely many classes `[x]_i` built from
/// the stable family of `phi`. Points and valuation are unchanged.
pub fn filtrate(m: &Model, phi: &Formula) -> Result<FiltrationResult, PartitionError> {
    let table = build_stable_partitions(m, phi)?;
    let family = table.last().family.clone();
    let rems = table.last().remainders.clone();
    let opens = m.space.opens();
    let bars: Vec<PointSet> =
        rems.iter().map(|r| r.iter().fold(PointSet::new(), |acc, &v| acc.union(&opens[v].members))).collect();
    let surviving: Vec<usize> = (0..family.len()).filter(|&i| !bars[i].is_empty()).collect();

    let n = family.len();
    let mut lt = vec![vec![false; n]; n];
    for &i in &surviving {
        for &j in &surviving {
            let common = bars[i].intersection(&bars[j]);
            lt[i][j] = !common.is_empty()
                && common.iter().all(|x| {
                    let holding = |r: &Vec<usize>| -> Vec<usize> {
                        r.iter().copied().filter(|&v| opens[v].members.contains(x)).collect()
                    };
                    let (a, b) = (holding(&rems[i]), holding(&rems[j]));
                    a.iter().all(|&v1| b.iter().all(|&v2| opens[v1].members.is_proper_subset(&opens[v2].members)))
                });
        }
    }

    let le = |i: usize, j: usize| i == j || lt[i][j];
    let mut out_opens: Vec<Open> = Vec::new();
    let mut classes = BTreeMap::new();
    let point_name = |x: usize| m.space.points()[x].clone();
    for &i in &surviving {
        let above: Vec<usize> = surviving.iter().copied().filter(|&j| le(i, j)).collect();
        let pattern = |x: usize| -> Vec<bool> { above.iter().map(|&j| bars[j].contains(x)).collect() };
        let mut groups: Vec<(Vec<bool>, PointSet)> = Vec::new();
        for x in bars[i].iter() {
            let p = pattern(x);
            match groups.iter_mut().find(|(q, _)| *q == p) {
                Some((_, set)) => set.insert(x),
                None => groups.push((p, PointSet::singleton(x))),
            }
        }
        for (_, members) in groups {
            let idx = match out_opens.iter().position(|o| o.members == members) {
                Some(idx) => idx,
                None => {
                    let min = members.first().expect("classes are nonempty");
                    let name = if members == *m.space.full() {
                        "top".to_string()
                    } else {
                        format!("F{i}/{}", point_name(min))
                    };
                    out_opens.push(Open { name, members: members.clone() });
                    out_opens.len() - 1
                }
            };
            for x in members.iter() {
                classes.insert((i, x), idx);
            }
        }
    }
    let space = SubsetSpace::new(m.space.points().to_vec(), out_opens)?;
    let model = Model::new(space, m.valuation().clone())?;
    Ok(FiltrationResult { table, family, remainders: rems, bars, surviving, lt, classes, model })
}

#[derive(Clone, Debug)]
pub struct Quotient {
    pub model: Model,
    /// Output point of each input point.
    pub class_of: Vec<usize>,
}

/// Merges points that lie in the same opens and agree on `atoms`. Atoms
/// outside `atoms` are dropped from the valuation.
pub fn point_quotient(m: &Model, atoms: &BTreeSet<String>) -> Quotient {
    let opens = m.space.opens();
    let kept: Vec<(&String, PointSet)> = atoms.iter().map(|a| (a, m.atom_set(a))).collect();
    let key = |x: usize| -> (Vec<bool>, Vec<bool>) {
        (opens.iter().map(|o| o.members.contains(x)).collect(), kept.iter().map(|(_, s)| s.contains(x)).collect())
    };
    let mut reps: Vec<usize> = Vec::new();
    let mut keys = Vec::new();
    let mut class_of = Vec::with_capacity(m.space.num_points());
    for x in 0..m.space.num_points() {
        let k = key(x);
        match keys.iter().position(|q| *q == k) {
            Some(c) => class_of.push(c),
            None => {
                keys.push(k);
                reps.push(x);
                class_of.push(reps.len() - 1);
            }
        }
    }
    let image = |s: &PointSet| -> PointSet { s.iter().map(|x| class_of[x]).collect() };
    let points = reps.iter().map(|&x| m.space.points()[x].clone()).collect();
    let out_opens = opens.iter().map(|o| Open { name: o.name.clone(), members: image(&o.members) }).collect();
    let space = SubsetSpace::new(points, out_opens).expect("classes respect open membership");
    let valuation = kept.iter().map(|(a, s)| ((*a).clone(), image(s))).collect();
    let model = Model::new(space, valuation).expect("image valuation stays inside the space");
    Quotient { model, class_of }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub family_sizes: BTreeMap<String, usize>,
    pub output_points: usize,
    pub output_opens: usize,
    pub bound_points: BoundValue,
    pub bound_opens: BoundValue,
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub filtration: FiltrationResult,
    pub quotient: Quotient,
    pub report: SizeReport,
}

impl Extraction {
    pub fn model(&self) -> &Model {
        &self.quotient.model
    }

    /// Where a neighborhood of the source model lands in the finite model.
    pub fn image(&self, n: Neighborhood) -> Option<Neighborhood> {
        let mid = self.filtration.image(n)?;
        Some(Neighborhood { point: self.quotient.class_of[mid.point], open: mid.open })
    }
}

/// Stable partitions, filtration, then the point quotient over `phi`'s atoms.
pub fn extract_finite_model(m: &Model, phi: &Formula) -> Result<Extraction, PartitionError> {
    let filtration = filtrate(m, phi)?;
    let quotient = point_quotient(&filtration.model, &phi.atoms());
    let bound = complexity_bound(phi);
    let report = SizeReport {
        family_sizes: filtration.table.stages.iter().map(|s| (s.formula.to_string(), s.family.len())).collect(),
        output_points: quotient.model.space.num_points(),
        output_opens: quotient.model.space.opens().len(),
        bound_points: bound.max_points,
        bound_opens: bound.max_opens,
    };
    Ok(Extraction { filtration, quotient, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::build_question_tree;
    use crate::random::{random_formula, random_treelike_model, seeded, RandomModelConfig};
    use proptest::prelude::*;

    fn m1() -> Model {
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

    fn open_sets(m: &Model, opens: &[usize]) -> BTreeSet<Vec<String>> {
        opens.iter().map(|&v| m.space.names_of(m.space.members(v))).collect()
    }

    fn names(sets: &[&[&str]]) -> BTreeSet<Vec<String>> {
        sets.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn closure_examples() {
        let m = m1();
        let fam = vec![m.space.full().clone(), set(&m, &["q1", "q2"]), set(&m, &["q3", "q4"])];
        let cl = closure_intersection(&fam);
        assert_eq!(cl.len(), 4);
        assert!(cl.contains(&PointSet::new()));
        assert_eq!(closure_intersection(&fam[..1]), fam[..1].to_vec());
        let chain = vec![m.space.full().clone(), set(&m, &["q1", "q2"]), set(&m, &["q1"])];
        assert_eq!(closure_intersection(&chain), chain);
    }

    #[test]
    fn remainder_examples() {
        let m = m1();
        let fam = closure_intersection(&[m.space.full().clone(), set(&m, &["q1", "q2"]), set(&m, &["q3", "q4"])]);
        assert_eq!(open_sets(&m, &remainder(&m, &fam, 0).unwrap()), names(&[&["q1", "q2", "q3", "q4"]]));
        assert_eq!(open_sets(&m, &remainder(&m, &fam, 2).unwrap()), names(&[&["q3", "q4"], &["q3"], &["q4"]]));
        assert_eq!(open_sets(&m, &remainder(&m, &fam, 3).unwrap()), names(&[&[]]));
        assert_eq!(remainder(&m, &fam, 9), Err(PartitionError::NotAMember));
    }

    #[test]
    fn stability_examples() {
        let m = m1();
        let kq1 = parse("K Q1").unwrap();
        let fam = closure_intersection(&[m.space.full().clone(), set(&m, &["q1", "q2"]), set(&m, &["q3", "q4"])]);
        assert!(is_stable(&m, &remainder(&m, &fam, 0).unwrap(), &kq1));
        let top = m.space.top();
        let q12 = m.space.open_by_members(&set(&m, &["q1", "q2"])).unwrap();
        assert!(!is_stable(&m, &[top, q12], &kq1));
        assert!(is_stable(&m, &[q12], &kq1));
    }

    #[test]
    fn stable_partition_examples() {
        let m = m1();
        let t = build_stable_partitions(&m, &parse("K Q1").unwrap()).unwrap();
        let st = t.last();
        assert_eq!(st.family, vec![m.space.full().clone(), set(&m, &["q1", "q2"])]);
        assert_eq!(open_sets(&m, &st.remainders[0]), names(&[&["q1", "q2", "q3", "q4"], &["q3", "q4"], &["q3"], &["q4"]]));
        assert_eq!(open_sets(&m, &st.remainders[1]), names(&[&["q1", "q2"], &[]]));
        assert!(t.unstable(&m).is_empty());
        let a = build_stable_partitions(&m, &parse("Q1").unwrap()).unwrap();
        assert_eq!(a.last().family, vec![m.space.full().clone()]);
        let d = build_stable_partitions(&m, &parse("<>K Q1").unwrap()).unwrap();
        assert_eq!(d.last().family, st.family);
    }

    #[test]
    fn filtration_examples() {
        let m = m1();
        let f = filtrate(&m, &parse("K Q1").unwrap()).unwrap();
        let got: BTreeSet<Vec<String>> = f.model.space.opens().iter().map(|o| f.model.space.names_of(&o.members)).collect();
        assert_eq!(got, names(&[&["q1", "q2", "q3", "q4"], &["q1", "q2"]]));
        assert!(f.lemma_violations().is_empty());
        let g = filtrate(&m, &parse("Q1").unwrap()).unwrap();
        assert_eq!(g.model.space.opens().len(), 1);
    }

    #[test]
    fn quotient_examples() {
        let m = m1();
        let f = filtrate(&m, &parse("K Q1").unwrap()).unwrap();
        let q = point_quotient(&f.model, &BTreeSet::from(["Q1".to_string()]));
        assert_eq!(q.model.space.num_points(), 2);
        assert_eq!(q.class_of, vec![0, 0, 1, 1]);
        let none = point_quotient(&m, &BTreeSet::new());
        // q1, q2 share every open; q3 and q4 are told apart by their singletons
        assert_eq!(none.class_of, vec![0, 0, 1, 2]);
        let ident = point_quotient(&m, &BTreeSet::from(["Q1".to_string(), "Q2".to_string()]));
        assert_eq!(ident.model.space.num_points(), 3);
    }

    #[test]
    fn extraction_examples() {
        let m = m1();
        let phi = parse("<>K Q1").unwrap();
        let e = extract_finite_model(&m, &phi).unwrap();
        assert_eq!((e.report.output_points, e.report.output_opens), (2, 2));
        let n = m.neighborhood("q1", "top").unwrap();
        assert!(e.model().satisfies(e.image(n).unwrap(), &phi).unwrap());

        let s = crate::model::build_stream_space(4).unwrap();
        let e = extract_finite_model(&s, &parse("<>K true").unwrap()).unwrap();
        assert_eq!((e.report.output_points, e.report.output_opens), (1, 1));

        let e = extract_finite_model(&m, &parse("Q2").unwrap()).unwrap();
        assert!(e.report.output_points <= 2);
        assert_eq!(e.report.output_opens, 1);
    }

    #[test]
    fn non_treelike_is_rejected() {
        let text = r#"{ "points": ["a","b","c"], "opens": [ {"name":"X","members":["a","b","c"]},
            {"name":"U","members":["a","b"]}, {"name":"V","members":["b","c"]} ] }"#;
        let m = Model::from_json(text).unwrap();
        assert_eq!(filtrate(&m, &Formula::Top).unwrap_err(), PartitionError::NotTreelike("U".into(), "V".into()));
    }

    fn corpus(seed: u64, count: usize) -> Vec<(Model, Formula)> {
        let mut rng = seeded(seed);
        let cfg = RandomModelConfig::default();
        (0..count)
            .map(|_| {
                let m = random_treelike_model(&mut rng, &cfg);
                let f = random_formula(&mut rng, &cfg.atoms, 3);
                (m, f)
            })
            .collect()
    }

    #[test]
    fn partition_laws_on_random_families() {
        let mut rng = seeded(5);
        let cfg = RandomModelConfig::default();
        for _ in 0..150 {
            let m = random_treelike_model(&mut rng, &cfg);
            // random intersection-closed family built from opens and unions of opens
            let mut gens = vec![m.space.full().clone()];
            for o in m.space.opens() {
                if rand::Rng::gen_bool(&mut rng, 0.4) {
                    gens.push(o.members.clone());
                }
            }
            let fam = closure_intersection(&gens);
            let rems = remainders(&m, &fam);
            let opens = m.space.opens();
            let mut seen = BTreeSet::new();
            for (i, r) in rems.iter().enumerate() {
                for &v in r {
                    assert!(seen.insert(v), "remainders overlap");
                }
                // convexity: V1 ⊆ V ⊆ V2 with V1, V2 in the remainder
                for &v1 in r {
                    for &v2 in r {
                        for v in 0..opens.len() {
                            let (a, b, c) = (&opens[v1].members, &opens[v].members, &opens[v2].members);
                            if a.is_subset(b) && b.is_subset(c) && !a.is_empty() {
                                assert!(r.contains(&v), "remainder not convex");
                            }
                        }
                    }
                }
                let union = r.iter().fold(PointSet::new(), |acc, &v| acc.union(&opens[v].members));
                assert!(union.is_subset(&fam[i]));
                // remainders are the classes of "same members of the family above"
                for &v in r {
                    for w in 0..opens.len() {
                        let pattern = |s: &PointSet| fam.iter().map(|u| s.is_subset(u)).collect::<Vec<_>>();
                        if pattern(&opens[v].members) == pattern(&opens[w].members) {
                            assert!(r.contains(&w));
                        }
                    }
                }
            }
            // coverage of ↓F, which is all of O because X is a member
            assert_eq!(seen.len(), opens.len());
        }
    }

    #[test]
    fn refinement_and_intersection_keep_stability() {
        let mut rng = seeded(9);
        for (m, f) in corpus(3, 120) {
            let t = build_stable_partitions(&m, &f).unwrap();
            let fam = &t.last().family;
            let extra = m.space.opens()[rand::Rng::gen_range(&mut rng, 0..m.space.opens().len())].members.clone();
            let mut gens = fam.clone();
            gens.push(extra);
            let refined = closure_intersection(&gens);
            for r in remainders(&m, &refined) {
                assert!(is_stable(&m, &r, &f));
            }
            let g = random_formula(&mut rng, &["A".to_string(), "B".to_string()], 2);
            let tg = build_stable_partitions(&m, &g).unwrap();
            let conj = Formula::and(f.clone(), g.clone());
            for r1 in &t.last().remainders {
                for r2 in &tg.last().remainders {
                    let meet: Vec<usize> = r1.iter().copied().filter(|v| r2.contains(v)).collect();
                    assert!(is_stable(&m, &meet, &conj));
                }
            }
        }
    }

    #[test]
    fn random_corpus_filtration() {
        for (m, f) in corpus(21, 150) {
            let t = build_stable_partitions(&m, &f).unwrap();
            for st in &t.stages {
                assert!(st.family.contains(m.space.full()));
                assert_eq!(closure_intersection(&st.family).len(), st.family.len());
            }
            assert!(t.unstable(&m).is_empty(), "{f}");
            let fr = filtrate(&m, &f).unwrap();
            assert!(fr.lemma_violations().is_empty(), "{f}: {:?}", fr.lemma_violations());
            assert!(fr.equivalence_mismatches(&m, &f).is_empty(), "{f}");
            let e = extract_finite_model(&m, &f).unwrap();
            for n in m.neighborhoods() {
                let img = e.image(n).unwrap();
                for psi in f.subformulas() {
                    assert_eq!(m.satisfies(n, &psi).unwrap(), e.model().satisfies(img, &psi).unwrap());
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn corollary_holds_on_random_treelike_models(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let m = random_treelike_model(&mut rng, &RandomModelConfig::default());
            let phi = random_formula(&mut rng, &["A".to_string(), "B".to_string()], 2);
            let corollary = Formula::implies(
                Formula::effort(Formula::diamond(phi.clone())),
                Formula::diamond(Formula::effort(phi)),
            );
            prop_assert!(m.valid(&corollary));
        }
    }
}
