//! Seeded random models and formulas for property tests and CLI suites.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Formula;
use crate::model::{Model, Open, SubsetSpace};
use crate::pointset::PointSet;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct RandomModelConfig {
    pub max_points: usize,
    pub max_opens: usize,
    pub atoms: Vec<String>,
    /// Occasionally add `∅` to the family.
    pub allow_empty: bool,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig { max_points: 6, max_opens: 10, atoms: vec!["A".into(), "B".into()], allow_empty: true }
    }
}

/// A random treelike model: opens are grown by carving random subsets out of
/// existing opens, keeping only candidates nested-or-disjoint with the family.
pub fn random_treelike_model<R: Rng>(rng: &mut R, cfg: &RandomModelConfig) -> Model {
    let n = rng.gen_range(1..=cfg.max_points.max(1));
    let points: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let full = PointSet::full(n);
    let mut family = vec![full.clone()];
    let target = rng.gen_range(1..=cfg.max_opens.max(1));
    let mut tries = 0;
    while family.len() < target && tries < 20 * cfg.max_opens {
        tries += 1;
        let parent = family.choose(rng).expect("family is nonempty").clone();
        if parent.is_empty() {
            continue;
        }
        let cand: PointSet = parent.iter().filter(|_| rng.gen_bool(0.5)).collect();
        if cand.is_empty() && !(cfg.allow_empty && rng.gen_bool(0.2)) {
            continue;
        }
        let fits = family.iter().all(|u| cand.is_subset(u) || u.is_subset(&cand) || cand.is_disjoint(u));
        if fits && !family.contains(&cand) {
            family.push(cand);
        }
    }
    let opens = family.into_iter().enumerate().map(|(i, members)| Open { name: format!("U{i}"), members }).collect();
    let space = SubsetSpace::new(points, opens).expect("generated family is well formed");
    let valuation = random_valuation(rng, &cfg.atoms, n);
    Model::new(space, valuation).expect("generated valuation is well formed")
}

pub fn random_valuation<R: Rng>(rng: &mut R, atoms: &[String], n: usize) -> BTreeMap<String, PointSet> {
    atoms.iter().map(|a| (a.clone(), (0..n).filter(|_| rng.gen_bool(0.5)).collect())).collect()
}

/// Random formula of modal/boolean depth at most `depth`, sugar included.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..12) {
            0 => Formula::Top,
            1 => Formula::Bottom,
            _ => Formula::atom(atoms.choose(rng).cloned().unwrap_or_else(|| "A".into())),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::effort(sub(rng)),
        5 => Formula::diamond(sub(rng)),
        6 => Formula::know(sub(rng)),
        7 => Formula::possible(sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn models_are_treelike_and_reproducible() {
        let cfg = RandomModelConfig::default();
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..200 {
            let m = random_treelike_model(&mut a, &cfg);
            assert!(m.space.is_treelike());
            assert!(m.space.num_points() <= 6 && m.space.opens().len() <= 10);
            assert_eq!(m.to_json(), random_treelike_model(&mut b, &cfg).to_json());
        }
    }

    #[test]
    fn formula_depth_is_bounded() {
        let mut rng = seeded(1);
        let atoms = vec!["A".to_string(), "B".to_string()];
        for _ in 0..200 {
            let f = random_formula(&mut rng, &atoms, 3);
            // each surface connective expands to at most four primitive layers
            assert!(f.depth() <= 3 * 4);
        }
    }
}
