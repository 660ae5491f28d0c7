//! Finite birelational frames and their unfolding into treelike models.
//!
//! A frame has an effort relation `→□` (a preorder that should be a
//! connected partial order) and a knowledge relation `→K` (an equivalence).
//! [`unfold`] turns a frame generated from a root into a treelike subset
//! space whose points are the root's K-class.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::model::{Model, ModelError, Neighborhood, Open, SubsetSpace};
use crate::pointset::PointSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame has no states")]
    Empty,
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("malformed frame file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnfoldError {
    #[error("frame fails its structural checks: {0}")]
    FrameCheck(String),
    #[error("unknown root `{0}`")]
    UnknownRoot(String),
    #[error("root class is not the greatest class; `{0}` is not below it")]
    RootNotMaximal(String),
    #[error("point `{point}` has {count} representatives in the class of `{class}`")]
    Representation { point: String, class: String, count: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct BiFrame {
    states: Vec<String>,
    /// `box_succ[s]` is `{t : s →□ t}`.
    box_succ: Vec<PointSet>,
    k_succ: Vec<PointSet>,
    valuation: BTreeMap<String, PointSet>,
}

impl BiFrame {
    /// Takes the relations as given, without closing them.
    pub fn new(
        states: Vec<String>,
        box_succ: Vec<PointSet>,
        k_succ: Vec<PointSet>,
        valuation: BTreeMap<String, PointSet>,
    ) -> Result<Self, FrameError> {
        if states.is_empty() {
            return Err(FrameError::Empty);
        }
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.as_str(), i).is_some() {
                return Err(FrameError::DuplicateState(s.clone()));
            }
        }
        let all = PointSet::full(states.len());
        let rows_ok = |rows: &[PointSet]| rows.len() == states.len() && rows.iter().all(|r| r.is_subset(&all));
        if !rows_ok(&box_succ) || !rows_ok(&k_succ) || !valuation.values().all(|v| v.is_subset(&all)) {
            return Err(FrameError::UnknownState("relation or valuation outside the state set".into()));
        }
        Ok(BiFrame { states, box_succ, k_succ, valuation })
    }

    /// Builds a frame from generating arrows: `→□` is closed reflexively and
    /// transitively, `→K` to an equivalence.
    pub fn from_generators(
        states: Vec<String>,
        box_pairs: &[(usize, usize)],
        k_pairs: &[(usize, usize)],
        valuation: BTreeMap<String, PointSet>,
    ) -> Result<Self, FrameError> {
        let n = states.len();
        let mut b = vec![PointSet::new(); n];
        let mut k = vec![PointSet::new(); n];
        for &(s, t) in box_pairs {
            b[s].insert(t);
        }
        for &(s, t) in k_pairs {
            k[s].insert(t);
            k[t].insert(s);
        }
        for s in 0..n {
            b[s].insert(s);
            k[s].insert(s);
        }
        transitive_closure(&mut b);
        transitive_closure(&mut k);
        BiFrame::new(states, b, k, valuation)
    }

    /// The frame of neighborhoods of a model: `(x,U) →□ (x,V)` for `V ⊆ U`,
    /// `(x,U) →K (y,U)`.
    pub fn from_model(m: &Model) -> BiFrame {
        let nbhds: Vec<Neighborhood> = m.neighborhoods().collect();
        let index: HashMap<Neighborhood, usize> = nbhds.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let states = nbhds
            .iter()
            .map(|n| format!("{}@{}", m.space.points()[n.point], m.space.opens()[n.open].name))
            .collect();
        let box_succ = nbhds
            .iter()
            .map(|n| {
                m.space
                    .down_set(n.open)
                    .iter()
                    .filter_map(|&v| index.get(&Neighborhood { point: n.point, open: v }).copied())
                    .collect()
            })
            .collect();
        let k_succ = nbhds
            .iter()
            .map(|n| {
                m.space.members(n.open).iter().map(|y| index[&Neighborhood { point: y, open: n.open }]).collect()
            })
            .collect();
        let valuation = m
            .valuation()
            .iter()
            .map(|(a, set)| (a.clone(), nbhds.iter().enumerate().filter(|(_, n)| set.contains(n.point)).map(|(i, _)| i).collect()))
            .collect();
        BiFrame { states, box_succ, k_succ, valuation }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn box_succ(&self, s: usize) -> &PointSet {
        &self.box_succ[s]
    }

    pub fn k_succ(&self, s: usize) -> &PointSet {
        &self.k_succ[s]
    }

    pub fn valuation(&self) -> &BTreeMap<String, PointSet> {
        &self.valuation
    }

    pub fn from_json(text: &str) -> Result<BiFrame, FrameError> {
        let file: FrameFile = serde_json::from_str(text).map_err(|e| FrameError::Format(e.to_string()))?;
        file.into_frame()
    }

    /// States satisfying `f`.
    pub fn truth_set(&self, f: &Formula) -> PointSet {
        let all = PointSet::full(self.states.len());
        match f {
            Formula::Top => all,
            Formula::Bottom => PointSet::new(),
            Formula::Atom(a) => self.valuation.get(a).cloned().unwrap_or_default(),
            Formula::Not(g) => all.difference(&self.truth_set(g)),
            Formula::And(l, r) => self.truth_set(l).intersection(&self.truth_set(r)),
            Formula::Effort(g) => {
                let t = self.truth_set(g);
                all.iter().filter(|&s| self.box_succ[s].is_subset(&t)).collect()
            }
            Formula::Know(g) => {
                let t = self.truth_set(g);
                all.iter().filter(|&s| self.k_succ[s].is_subset(&t)).collect()
            }
        }
    }

    /// Pointwise evaluation at one state.
    pub fn satisfies(&self, s: usize, f: &Formula) -> bool {
        match f {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Atom(a) => self.valuation.get(a).is_some_and(|v| v.contains(s)),
            Formula::Not(g) => !self.satisfies(s, g),
            Formula::And(l, r) => self.satisfies(s, l) && self.satisfies(s, r),
            Formula::Effort(g) => self.box_succ[s].iter().all(|t| self.satisfies(t, g)),
            Formula::Know(g) => self.k_succ[s].iter().all(|t| self.satisfies(t, g)),
        }
    }

    /// States reachable from `root` along `→□ ∪ →K`.
    pub fn generated(&self, root: usize) -> PointSet {
        let mut seen = PointSet::singleton(root);
        let mut stack = vec![root];
        while let Some(s) = stack.pop() {
            for t in self.box_succ[s].union(&self.k_succ[s]).iter() {
                if !seen.contains(t) {
                    seen.insert(t);
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// The subframe on `keep`, states renumbered in their original order.
    pub fn restrict(&self, keep: &PointSet) -> BiFrame {
        let old: Vec<usize> = keep.iter().collect();
        let new_of: HashMap<usize, usize> = old.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let remap = |set: &PointSet| -> PointSet { set.iter().filter_map(|s| new_of.get(&s).copied()).collect() };
        BiFrame {
            states: old.iter().map(|&s| self.states[s].clone()).collect(),
            box_succ: old.iter().map(|&s| remap(&self.box_succ[s])).collect(),
            k_succ: old.iter().map(|&s| remap(&self.k_succ[s])).collect(),
            valuation: self.valuation.iter().map(|(a, v)| (a.clone(), remap(v))).collect(),
        }
    }
}

fn transitive_closure(rows: &mut [PointSet]) {
    let n = rows.len();
    for k in 0..n {
        for i in 0..n {
            if rows[i].contains(k) {
                let via = rows[k].clone();
                rows[i] = rows[i].union(&via);
            }
        }
    }
}

/// On-disk frame format; relations are generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub states: Vec<String>,
    #[serde(rename = "box", default)]
    pub box_pairs: Vec<(String, String)>,
    #[serde(rename = "k", default)]
    pub k_pairs: Vec<(String, String)>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
}

impl FrameFile {
    pub fn into_frame(self) -> Result<BiFrame, FrameError> {
        let index: HashMap<&str, usize> = self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let idx = |s: &str| index.get(s).copied().ok_or_else(|| FrameError::UnknownState(s.to_string()));
        let pairs = |ps: &[(String, String)]| -> Result<Vec<(usize, usize)>, FrameError> {
            ps.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect()
        };
        let b = pairs(&self.box_pairs)?;
        let k = pairs(&self.k_pairs)?;
        let valuation = self
            .valuation
            .iter()
            .map(|(a, ss)| Ok((a.clone(), ss.iter().map(|s| idx(s)).collect::<Result<PointSet, _>>()?)))
            .collect::<Result<BTreeMap<_, _>, FrameError>>()?;
        BiFrame::from_generators(self.states.clone(), &b, &k, valuation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Offending states (and atom, for persistence) on failure.
    pub witness: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameReport {
    pub checks: Vec<PropertyCheck>,
}

impl FrameReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

pub fn check_frame(f: &BiFrame) -> FrameReport {
    let n = f.states.len();
    let b = &f.box_succ;
    let k = &f.k_succ;
    let name = |s: usize| f.states[s].clone();
    let triples = || (0..n).flat_map(move |s| (0..n).flat_map(move |t| (0..n).map(move |u| (s, t, u))));
    let pairs = || (0..n).flat_map(move |s| (0..n).map(move |t| (s, t)));

    let mut checks = Vec::new();
    let mut push = |name: &'static str, w: Option<Vec<String>>| {
        checks.push(PropertyCheck { name, passed: w.is_none(), witness: w });
    };

    push("box-reflexive", (0..n).find(|&s| !b[s].contains(s)).map(|s| vec![name(s)]));
    push(
        "box-transitive",
        triples().find(|&(s, t, u)| b[s].contains(t) && b[t].contains(u) && !b[s].contains(u)).map(|(s, t, u)| {
            vec![name(s), name(t), name(u)]
        }),
    );
    push(
        "box-connected",
        triples()
            .find(|&(s, t, u)| b[s].contains(t) && b[s].contains(u) && !b[t].contains(u) && !b[u].contains(t))
            .map(|(s, t, u)| vec![name(s), name(t), name(u)]),
    );
    push(
        "box-antisymmetric",
        pairs().find(|&(s, t)| s != t && b[s].contains(t) && b[t].contains(s)).map(|(s, t)| vec![name(s), name(t)]),
    );
    let equivalence = (0..n)
        .find(|&s| !k[s].contains(s))
        .map(|s| vec![name(s)])
        .or_else(|| pairs().find(|&(s, t)| k[s].contains(t) && !k[t].contains(s)).map(|(s, t)| vec![name(s), name(t)]))
        .or_else(|| {
            triples()
                .find(|&(s, t, u)| k[s].contains(t) && k[t].contains(u) && !k[s].contains(u))
                .map(|(s, t, u)| vec![name(s), name(t), name(u)])
        });
    push("k-equivalence", equivalence);
    push(
        "cross",
        triples()
            .find(|&(s, s1, t)| {
                b[s].contains(s1) && k[s1].contains(t) && !k[s].iter().any(|t1| b[t1].contains(t))
            })
            .map(|(s, s1, t)| vec![name(s), name(s1), name(t)]),
    );
    push(
        "k-box-disjoint",
        pairs().find(|&(s, t)| s != t && k[s].contains(t) && b[s].contains(t)).map(|(s, t)| vec![name(s), name(t)]),
    );
    let persistence = pairs().find_map(|(s, t)| {
        if !b[s].contains(t) {
            return None;
        }
        f.valuation
            .iter()
            .find(|(_, v)| v.contains(s) != v.contains(t))
            .map(|(a, _)| vec![name(s), name(t), a.clone()])
    });
    push("atom-persistence", persistence);
    FrameReport { checks }
}

/// K-classes and the induced order on them.
#[derive(Clone, Debug)]
pub struct ClassOrder {
    pub classes: Vec<PointSet>,
    pub class_of: Vec<usize>,
    /// `leq[c]` is the set of classes `d` with `c ≤ d`.
    pub leq: Vec<PointSet>,
}

impl ClassOrder {
    /// Classes are numbered by their least state. `[t1] ≤ [t2]` iff some
    /// state of `[t2]` reaches some state of `[t1]` along `→□`.
    pub fn new(f: &BiFrame) -> ClassOrder {
        let n = f.states.len();
        let mut classes: Vec<PointSet> = Vec::new();
        let mut class_of = vec![usize::MAX; n];
        for s in 0..n {
            if class_of[s] == usize::MAX {
                let c = classes.len();
                for t in f.k_succ[s].iter() {
                    class_of[t] = c;
                }
                classes.push(f.k_succ[s].clone());
            }
        }
        let mut leq = vec![PointSet::new(); classes.len()];
        for s2 in 0..n {
            for s1 in f.box_succ[s2].iter() {
                leq[class_of[s1]].insert(class_of[s2]);
            }
        }
        ClassOrder { classes, class_of, leq }
    }

    pub fn le(&self, c: usize, d: usize) -> bool {
        self.leq[c].contains(d)
    }

    pub fn is_partial_order(&self) -> bool {
        let m = self.classes.len();
        (0..m).all(|c| self.le(c, c))
            && (0..m).all(|c| (0..m).all(|d| c == d || !(self.le(c, d) && self.le(d, c))))
            && (0..m).all(|c| (0..m).all(|d| !self.le(c, d) || self.leq[d].is_subset(&self.leq[c])))
    }
}

/// A treelike model built from a frame, with the bookkeeping needed to map
/// frame states to neighborhoods.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub model: Model,
    /// The generated subframe the model was built from.
    pub frame: BiFrame,
    pub order: ClassOrder,
    /// Frame state behind each point of the model.
    pub point_state: Vec<usize>,
    /// `opens_of_class[c]` maps a point (by index) to the open `[t]_s`, `s ∈ c`.
    opens_of_class: Vec<HashMap<usize, usize>>,
    /// Source class of each output open.
    pub open_source: Vec<usize>,
}

impl Unfolding {
    /// The neighborhood `(t, [t]_s)` for frame states `t →□ s` with `t` in the
    /// root class (indices into [`Unfolding::frame`]).
    pub fn neighborhood(&self, t: usize, s: usize) -> Option<Neighborhood> {
        if !self.frame.box_succ[t].contains(s) {
            return None;
        }
        let point = self.point_state.iter().position(|&p| p == t)?;
        let open = *self.opens_of_class[self.order.class_of[s]].get(&point)?;
        Some(Neighborhood { point, open })
    }
}

/// Unfolds the frame generated by `root` into a treelike model over the
/// root's K-class.
pub fn unfold(frame: &BiFrame, root: &str) -> Result<Unfolding, UnfoldError> {
    let report = check_frame(frame);
    if !report.all_pass() {
        return Err(UnfoldError::FrameCheck(report.failures().join(", ")));
    }
    let r = frame.state_index(root).ok_or_else(|| UnfoldError::UnknownRoot(root.into()))?;
    let sub = frame.restrict(&frame.generated(r));
    let r = sub.state_index(root).expect("root survives restriction");
    let order = ClassOrder::new(&sub);
    let root_class = order.class_of[r];
    if let Some(c) = (0..order.classes.len()).find(|&c| !order.le(c, root_class)) {
        let s = order.classes[c].first().expect("classes are nonempty");
        return Err(UnfoldError::RootNotMaximal(sub.states[s].clone()));
    }

    let point_state: Vec<usize> = order.classes[root_class].iter().collect();
    let points: Vec<String> = point_state.iter().map(|&s| sub.states[s].clone()).collect();
    // ⟦c⟧: points reaching class c along →□
    let reach: Vec<PointSet> = order
        .classes
        .iter()
        .map(|cls| (0..point_state.len()).filter(|&i| !sub.box_succ[point_state[i]].is_disjoint(cls)).collect())
        .collect();

    let mut opens: Vec<Open> = Vec::new();
    let mut open_source = Vec::new();
    let mut opens_of_class = Vec::new();
    for (c, cls) in order.classes.iter().enumerate() {
        let above: Vec<usize> = order.leq[c].iter().collect();
        let mut classes: Vec<(Vec<bool>, PointSet)> = Vec::new();
        for i in reach[c].iter() {
            let pattern: Vec<bool> = above.iter().map(|&d| reach[d].contains(i)).collect();
            match classes.iter_mut().find(|(p, _)| *p == pattern) {
                Some((_, members)) => members.insert(i),
                None => classes.push((pattern, PointSet::singleton(i))),
            }
        }
        let source = cls.first().expect("classes are nonempty");
        let mut map = HashMap::new();
        for (_, members) in classes {
            for i in members.iter() {
                let reps = sub.box_succ[point_state[i]].intersection(cls).len();
                if reps != 1 {
                    return Err(UnfoldError::Representation {
                        point: points[i].clone(),
                        class: sub.states[source].clone(),
                        count: reps,
                    });
                }
            }
            let idx = match opens.iter().position(|o| o.members == members) {
                Some(idx) => idx,
                None => {
                    let min = members.first().expect("classes are nonempty");
                    opens.push(Open {
                        name: format!("cls({},{})", sub.states[source], points[min]),
                        members: members.clone(),
                    });
                    open_source.push(c);
                    opens.len() - 1
                }
            };
            for i in members.iter() {
                map.insert(i, idx);
            }
        }
        opens_of_class.push(map);
    }

    let valuation = sub
        .valuation
        .iter()
        .map(|(a, v)| (a.clone(), (0..point_state.len()).filter(|&i| v.contains(point_state[i])).collect()))
        .collect();
    let model = Model::new(SubsetSpace::new(points, opens)?, valuation)?;
    Ok(Unfolding { model, frame: sub, order, point_state, opens_of_class, open_source })
}
