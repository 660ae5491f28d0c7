//! Size bounds from the filtration and bounded satisfiability search.
//!
//! Treelike search does not enumerate raw families. After dropping `∅` and
//! merging points with the same smallest open and the same atom values, a
//! finite treelike model is a rooted tree of opens in which each node owns a
//! set of valuation types. [`satisfiable`] enumerates those trees by point
//! count, then node count. The general (non-treelike) search enumerates
//! families directly.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use itertools::Itertools;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::formula::Formula;
use crate::model::{Model, Neighborhood, Open, SubsetSpace};
use crate::pointset::PointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundValue {
    Finite(u64),
    /// Too large to represent.
    Astronomical,
}

impl BoundValue {
    pub fn finite(self) -> Option<u64> {
        match self {
            BoundValue::Finite(n) => Some(n),
            BoundValue::Astronomical => None,
        }
    }

    fn mul(self, other: BoundValue) -> BoundValue {
        match (self, other) {
            (BoundValue::Finite(a), BoundValue::Finite(b)) => a.checked_mul(b).map_or(BoundValue::Astronomical, BoundValue::Finite),
            _ => BoundValue::Astronomical,
        }
    }

    fn add(self, other: u64) -> BoundValue {
        match self {
            BoundValue::Finite(a) => a.checked_add(other).map_or(BoundValue::Astronomical, BoundValue::Finite),
            BoundValue::Astronomical => BoundValue::Astronomical,
        }
    }

    fn pow2(self) -> BoundValue {
        match self {
            BoundValue::Finite(e) if e < 63 => BoundValue::Finite(1 << e),
            _ => BoundValue::Astronomical,
        }
    }

    /// `self ≤ n`, with astronomical values never fitting.
    pub fn fits(self, n: usize) -> bool {
        self.finite().is_some_and(|v| v <= n as u64)
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(n) => write!(f, "{n}"),
            BoundValue::Astronomical => f.write_str("astronomical"),
        }
    }
}

impl Serialize for BoundValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BoundValue::Finite(n) => s.serialize_u64(*n),
            BoundValue::Astronomical => s.serialize_str("astronomical"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bound {
    pub max_family: BoundValue,
    pub max_opens: BoundValue,
    pub max_points: BoundValue,
}

fn family_bound(f: &Formula) -> BoundValue {
    match f {
        Formula::Top | Formula::Bottom | Formula::Atom(_) => BoundValue::Finite(1),
        Formula::Not(g) | Formula::Effort(g) => family_bound(g),
        Formula::And(l, r) => family_bound(l).mul(family_bound(r)),
        Formula::Know(g) => {
            let b = family_bound(g);
            b.mul(b.pow2())
        }
    }
}

/// Family size `f`, opens `f·2^f`, points `2^(opens + #atoms)`.
pub fn complexity_bound(phi: &Formula) -> Bound {
    let max_family = family_bound(phi);
    let max_opens = max_family.mul(max_family.pow2());
    let max_points = max_opens.add(phi.atoms().len() as u64).pow2();
    Bound { max_family, max_opens, max_points }
}

/// Limits that suffice for the treelike search: the open bound, and at most
/// one point per (smallest open, valuation type) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchLimits {
    pub max_opens: BoundValue,
    pub max_points: BoundValue,
}

pub fn search_limits(phi: &Formula) -> SearchLimits {
    let b = complexity_bound(phi);
    let types = BoundValue::Finite(phi.atoms().len() as u64).pow2();
    SearchLimits { max_opens: b.max_opens, max_points: b.max_opens.mul(types) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sizes {
    pub max_points: usize,
    pub max_opens: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Sizes(Sizes),
    /// Search up to the formula's limits when they are under the cap.
    UseBound,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub budget: Budget,
    pub treelike: bool,
    pub cap: Sizes,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: Budget::Sizes(Sizes { max_points: 4, max_opens: 4 }),
            treelike: true,
            cap: Sizes { max_points: 8, max_opens: 8 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("search budget must allow at least one point and one open")]
    ZeroBudget,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Sat { model: Model, at: Neighborhood },
    /// Nothing found, but the searched sizes do not cover the bound.
    UnsatWithin,
    /// Nothing found and the searched sizes cover the bound.
    UnsatProved,
}

#[derive(Clone, Debug)]
pub struct SatOutcome {
    pub verdict: Verdict,
    pub searched: Sizes,
    pub models_checked: u64,
    pub elapsed: Duration,
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self.verdict, Verdict::Sat { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.verdict {
            Verdict::Sat { .. } => "sat",
            Verdict::UnsatWithin => "unsat_within",
            Verdict::UnsatProved => "unsat_proved",
        }
    }
}

// wasm32-unknown-unknown has no clock; searches report zero elapsed time there
#[cfg(not(target_arch = "wasm32"))]
mod clock {
    use std::time::{Duration, Instant};
    pub fn start() -> Instant {
        Instant::now()
    }
    pub fn since(t: Instant) -> Duration {
        t.elapsed()
    }
}

#[cfg(target_arch = "wasm32")]
mod clock {
    use std::time::Duration;
    pub fn start() {}
    pub fn since(_: ()) -> Duration {
        Duration::ZERO
    }
}

pub fn satisfiable(phi: &Formula, opts: &SearchOptions) -> Result<SatOutcome, DecideError> {
    let start = clock::start();
    let (sizes, proves) = plan(phi, opts);
    if sizes.max_points == 0 || sizes.max_opens == 0 {
        return Err(DecideError::ZeroBudget);
    }
    let atoms: Vec<String> = phi.atoms().into_iter().collect();
    let counter = AtomicU64::new(0);
    let found = if opts.treelike {
        search_trees(phi, &atoms, sizes, &counter)
    } else {
        search_families(phi, &atoms, sizes, &counter)
    };
    let verdict = match found {
        Some((model, at)) => {
            assert!(model.satisfies(at, phi).unwrap_or(false), "search returned a witness that does not verify");
            Verdict::Sat { model, at }
        }
        None if proves => Verdict::UnsatProved,
        None => Verdict::UnsatWithin,
    };
    Ok(SatOutcome { verdict, searched: sizes, models_checked: counter.into_inner(), elapsed: clock::since(start) })
}

fn plan(phi: &Formula, opts: &SearchOptions) -> (Sizes, bool) {
    let limits = search_limits(phi);
    let covered = |s: Sizes| opts.treelike && limits.max_opens.fits(s.max_opens) && limits.max_points.fits(s.max_points);
    match opts.budget {
        Budget::Sizes(s) => (s, covered(s)),
        Budget::UseBound => match (limits.max_opens.finite(), limits.max_points.finite()) {
            // tree search enumerates opens; the point count follows from them
            (Some(o), Some(p)) if opts.treelike && o <= opts.cap.max_opens as u64 => {
                (Sizes { max_points: p as usize, max_opens: o as usize }, true)
            }
            _ => (opts.cap, false),
        },
    }
}

#[derive(Clone, Debug)]
pub enum ValidVerdict {
    Valid,
    ValidWithin,
    Countermodel { model: Model, at: Neighborhood },
}

#[derive(Clone, Debug)]
pub struct ValidOutcome {
    pub verdict: ValidVerdict,
    pub searched: Sizes,
    pub models_checked: u64,
    pub elapsed: Duration,
}

impl ValidOutcome {
    pub fn label(&self) -> &'static str {
        match self.verdict {
            ValidVerdict::Valid => "valid",
            ValidVerdict::ValidWithin => "valid_within",
            ValidVerdict::Countermodel { .. } => "countermodel",
        }
    }
}

/// Searches for a model of `¬phi`.
pub fn valid(phi: &Formula, opts: &SearchOptions) -> Result<ValidOutcome, DecideError> {
    let out = satisfiable(&Formula::not(phi.clone()), opts)?;
    let verdict = match out.verdict {
        Verdict::Sat { model, at } => ValidVerdict::Countermodel { model, at },
        Verdict::UnsatWithin => ValidVerdict::ValidWithin,
        Verdict::UnsatProved => ValidVerdict::Valid,
    };
    Ok(ValidOutcome { verdict, searched: out.searched, models_checked: out.models_checked, elapsed: out.elapsed })
}

// ---------------------------------------------------------------------------
// Tree-shaped search

/// A node owns the valuation types in `own` (bit `τ` set: one point of type
/// `τ`), and its open is those points plus its children's.
#[derive(Debug)]
struct Shape {
    own: u64,
    children: Vec<Arc<Shape>>,
}

/// All shapes grouped by (nodes, points); `by_size[k][p]`.
struct Catalog {
    types: usize,
    by_size: Vec<Vec<Vec<Arc<Shape>>>>,
}

impl Catalog {
    fn new(types: usize) -> Catalog {
        Catalog { types, by_size: vec![Vec::new()] }
    }

    fn max_points(&self, k: usize) -> usize {
        k * self.types
    }

    /// Extends the catalog to trees of up to `k` nodes and `p` points.
    fn grow(&mut self, k: usize, p: usize) {
        for nodes in 1..=k {
            if self.by_size.len() <= nodes {
                self.by_size.push(Vec::new());
            }
            let cap = p.min(self.max_points(nodes));
            while self.by_size[nodes].len() <= cap {
                let points = self.by_size[nodes].len();
                let trees = self.build(nodes, points);
                self.by_size[nodes].push(trees);
            }
        }
    }

    fn get(&self, k: usize, p: usize) -> &[Arc<Shape>] {
        self.by_size.get(k).and_then(|row| row.get(p)).map_or(&[], |v| v.as_slice())
    }

    fn build(&self, nodes: usize, points: usize) -> Vec<Arc<Shape>> {
        let mut out = Vec::new();
        for own in 0..(1u64 << self.types) {
            let c = own.count_ones() as usize;
            if c > points {
                continue;
            }
            if nodes == 1 {
                if own != 0 && c == points {
                    out.push(Arc::new(Shape { own, children: Vec::new() }));
                }
                continue;
            }
            let min_children = if own == 0 { 2 } else { 1 };
            let mut acc = Vec::new();
            self.forests(nodes - 1, points - c, (usize::MAX, usize::MAX, usize::MAX), &mut acc, &mut |kids| {
                if kids.len() >= min_children {
                    out.push(Arc::new(Shape { own, children: kids.to_vec() }));
                }
            });
        }
        out
    }

    /// Multisets of trees with `n` nodes and `q` points in total, listed as
    /// non-increasing sequences of (nodes, points, index) keys.
    fn forests(
        &self,
        n: usize,
        q: usize,
        below: (usize, usize, usize),
        acc: &mut Vec<Arc<Shape>>,
        emit: &mut dyn FnMut(&[Arc<Shape>]),
    ) {
        if n == 0 {
            if q == 0 {
                emit(acc);
            }
            return;
        }
        for k in (1..=n.min(below.0)).rev() {
            for p in (1..=q.min(self.max_points(k))).rev() {
                if (k, p) > (below.0, below.1) {
                    continue;
                }
                let trees = self.get(k, p);
                let top = if (k, p) == (below.0, below.1) { below.2.min(trees.len()) } else { trees.len() };
                for i in (0..top).rev() {
                    acc.push(trees[i].clone());
                    // equal keys allowed: the bound is exclusive, so pass i + 1
                    self.forests(n - k, q - p, (k, p, i + 1), acc, emit);
                    acc.pop();
                }
            }
        }
    }
}

fn shape_model(shape: &Shape, atoms: &[String]) -> Model {
    let mut points = Vec::new();
    let mut point_types = Vec::new();
    let mut opens = Vec::new();
    fn walk(s: &Shape, points: &mut Vec<String>, types: &mut Vec<u64>, opens: &mut Vec<Open>) -> PointSet {
        let slot = opens.len();
        opens.push(Open { name: String::new(), members: PointSet::new() });
        let mut members = PointSet::new();
        for t in 0..64 {
            if s.own >> t & 1 == 1 {
                members.insert(points.len());
                points.push(format!("p{}", points.len() + 1));
                types.push(t);
            }
        }
        for c in &s.children {
            members = members.union(&walk(c, points, types, opens));
        }
        opens[slot] = Open { name: if slot == 0 { "top".into() } else { format!("U{slot}") }, members: members.clone() };
        members
    }
    walk(shape, &mut points, &mut point_types, &mut opens);
    let valuation = atoms
        .iter()
        .enumerate()
        .map(|(j, a)| (a.clone(), (0..points.len()).filter(|&x| point_types[x] >> j & 1 == 1).collect()))
        .collect();
    Model::new(SubsetSpace::new(points, opens).expect("shapes give well-formed spaces"), valuation)
        .expect("shape valuation is well formed")
}

/// Preorder opens of a shape as bitmasks, with each open's descendants.
struct Flat {
    opens: Vec<u64>,
    below: Vec<Vec<usize>>,
    atoms: Vec<u64>,
}

impl Flat {
    fn new(shape: &Shape, n_atoms: usize) -> Flat {
        let mut flat = Flat { opens: Vec::new(), below: Vec::new(), atoms: vec![0; n_atoms] };
        let mut next_point = 0;
        flat.walk(shape, &mut next_point);
        flat
    }

    fn walk(&mut self, s: &Shape, next_point: &mut usize) -> u64 {
        let slot = self.opens.len();
        self.opens.push(0);
        self.below.push(Vec::new());
        let mut members = 0u64;
        for t in 0..64 {
            if s.own >> t & 1 == 1 {
                members |= 1 << *next_point;
                for (j, mask) in self.atoms.iter_mut().enumerate() {
                    if t >> j & 1 == 1 {
                        *mask |= 1 << *next_point;
                    }
                }
                *next_point += 1;
            }
        }
        for c in &s.children {
            members |= self.walk(c, next_point);
        }
        let end = self.opens.len();
        self.opens[slot] = members;
        self.below[slot] = (slot..end).collect();
        members
    }

    fn eval(&self, f: &Formula, atoms: &[String]) -> Vec<u64> {
        let n = self.opens.len();
        match f {
            Formula::Top => self.opens.clone(),
            Formula::Bottom => vec![0; n],
            Formula::Atom(a) => {
                let mask = atoms.iter().position(|x| x == a).map_or(0, |j| self.atoms[j]);
                self.opens.iter().map(|u| u & mask).collect()
            }
            Formula::Not(g) => self.eval(g, atoms).iter().zip(&self.opens).map(|(t, u)| u & !t).collect(),
            Formula::And(l, r) => self.eval(l, atoms).iter().zip(self.eval(r, atoms)).map(|(a, b)| a & b).collect(),
            Formula::Effort(g) => {
                let t = self.eval(g, atoms);
                (0..n)
                    .map(|i| self.below[i].iter().fold(self.opens[i], |acc, &v| acc & (t[v] | !self.opens[v])))
                    .collect()
            }
            Formula::Know(g) => self.eval(g, atoms).iter().zip(&self.opens).map(|(t, u)| if t == u { *u } else { 0 }).collect(),
        }
    }
}

fn search_trees(phi: &Formula, atoms: &[String], sizes: Sizes, counter: &AtomicU64) -> Option<(Model, Neighborhood)> {
    let types = 1usize << atoms.len();
    let mut catalog = Catalog::new(types);
    for p in 1..=sizes.max_points.min(sizes.max_opens * types) {
        catalog.grow(sizes.max_opens, p);
        for k in 1..=sizes.max_opens {
            let trees = catalog.get(k, p);
            let check = |s: &Arc<Shape>| {
                counter.fetch_add(1, Ordering::Relaxed);
                if p <= 64 && Flat::new(s, atoms.len()).eval(phi, atoms).iter().all(|&t| t == 0) {
                    return None;
                }
                let m = shape_model(s, atoms);
                m.witness(phi).map(|n| (m, n))
            };
            if let Some(hit) = first_hit(trees, check) {
                return Some(hit);
            }
        }
    }
    None
}

#[cfg(feature = "parallel")]
fn first_hit<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Option<R> + Sync + Send) -> Option<R> {
    use rayon::prelude::*;
    items.par_iter().find_map_first(f)
}

#[cfg(not(feature = "parallel"))]
fn first_hit<T, R>(items: &[T], f: impl Fn(&T) -> Option<R>) -> Option<R> {
    items.iter().find_map(f)
}

// ---------------------------------------------------------------------------
// Direct family enumeration

fn permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

fn permute_mask(mask: u64, perm: &[usize]) -> u64 {
    perm.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).fold(0, |acc, (_, &j)| acc | 1 << j)
}

/// Least sorted mask list over all relabelings of the points.
pub fn canonical_form(masks: &[u64], n: usize) -> Vec<u64> {
    permutations(n)
        .iter()
        .map(|perm| {
            let mut v: Vec<u64> = masks.iter().map(|&m| permute_mask(m, perm)).collect();
            v.sort_unstable();
            v
        })
        .min()
        .unwrap_or_default()
}

fn nested_or_disjoint(a: u64, b: u64) -> bool {
    a & b == a || a & b == b || a & b == 0
}

/// Families over `n` points (as sorted masks, `X` included) with at most
/// `max_opens` members, one per isomorphism class when `n ≤ 4`.
pub fn families(n: usize, max_opens: usize, treelike: bool) -> Vec<Vec<u64>> {
    assert!(n < 64, "families are enumerated over fewer than 64 points");
    let full = (1u64 << n) - 1;
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        next: u64,
        full: u64,
        room: usize,
        treelike: bool,
        chosen: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        let mut fam = chosen.clone();
        fam.push(full);
        out.push(fam);
        if room == 0 {
            return;
        }
        for m in next..full {
            if treelike && !chosen.iter().all(|&c| nested_or_disjoint(c, m)) {
                continue;
            }
            chosen.push(m);
            rec(m + 1, full, room - 1, treelike, chosen, out);
            chosen.pop();
        }
    }
    if max_opens == 0 {
        return out;
    }
    rec(0, full, max_opens - 1, treelike, &mut chosen, &mut out);
    if n <= 4 {
        let perms = permutations(n);
        out.retain(|fam| {
            perms.iter().all(|perm| {
                let mut v: Vec<u64> = fam.iter().map(|&m| permute_mask(m, perm)).collect();
                v.sort_unstable();
                v >= *fam
            })
        });
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

pub fn point_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("p{i}")).collect()
}

/// Space over `p1..pn` with opens named by their members.
pub fn space_from_masks(n: usize, masks: &[u64]) -> SubsetSpace {
    let full = (1u64 << n) - 1;
    let opens = masks
        .iter()
        .map(|&m| {
            let name = if m == full {
                "top".to_string()
            } else if m == 0 {
                "empty".to_string()
            } else {
                format!("U{}", (0..n).filter(|i| m >> i & 1 == 1).map(|i| i + 1).join("_"))
            };
            Open { name, members: PointSet::from_mask(m) }
        })
        .collect();
    SubsetSpace::new(point_names(n), opens).expect("mask families are well formed")
}

/// All spaces with at most `max_points` points and `max_opens` opens, by
/// increasing points, then opens, then family.
pub fn enumerate_spaces(max_points: usize, max_opens: usize, treelike: bool) -> Vec<SubsetSpace> {
    (1..=max_points)
        .flat_map(|n| families(n, max_opens, treelike).into_iter().map(move |f| space_from_masks(n, &f)))
        .collect()
}

/// Every valuation of `atoms` over `n` points.
pub fn valuations(n: usize, atoms: &[String]) -> impl Iterator<Item = std::collections::BTreeMap<String, PointSet>> + '_ {
    let per = 1u64 << n;
    let total = per.checked_pow(atoms.len() as u32).expect("valuation count fits in u64");
    (0..total).map(move |mut v| {
        atoms
            .iter()
            .map(|a| {
                let mask = v % per;
                v /= per;
                (a.clone(), PointSet::from_mask(mask))
            })
            .collect()
    })
}

/// Treelike spaces paired with every valuation of `atoms`.
pub fn enumerate_treelike(max_points: usize, max_opens: usize, atoms: &[String]) -> impl Iterator<Item = Model> + '_ {
    enumerate_spaces(max_points, max_opens, true).into_iter().flat_map(move |space| {
        let n = space.num_points();
        valuations(n, atoms).map(move |val| Model::new(space.clone(), val).expect("valuation fits the space"))
    })
}

fn search_families(phi: &Formula, atoms: &[String], sizes: Sizes, counter: &AtomicU64) -> Option<(Model, Neighborhood)> {
    for n in 1..=sizes.max_points {
        let spaces: Vec<SubsetSpace> =
            families(n, sizes.max_opens, false).iter().map(|f| space_from_masks(n, f)).collect();
        let vals: Vec<_> = valuations(n, atoms).collect();
        let jobs: Vec<(usize, usize)> = (0..spaces.len()).flat_map(|s| (0..vals.len()).map(move |v| (s, v))).collect();
        let hit = first_hit(&jobs, |&(s, v)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let m = Model::new(spaces[s].clone(), vals[v].clone()).expect("valuation fits the space");
            m.witness(phi).map(|nb| (m, nb))
        });
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Atom names used by a formula, in order.
pub fn atom_list(phi: &Formula) -> Vec<String> {
    phi.atoms().into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}
