use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::{index, SliceRandom};

use super::recipe::Recipe;
use crate::rng::{self, Stream};

pub const DEFAULT_PER_GROUP: usize = 10;

/// The `k` most frequent trigger functions; ties break lexicographically.
pub fn top_k_functions(dataset: &[Recipe], k: usize) -> BTreeSet<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for recipe in dataset {
        *counts.entry(recipe.trigger_function.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(f, _)| f.to_string())
        .collect()
}

/// Keeps every recipe whose trigger function is in `majority` and samples
/// `min(per_minority, available)` recipes for every other trigger function.
pub fn build_skewed(
    dataset: &[Recipe],
    majority: &BTreeSet<String>,
    per_minority: usize,
    seed: u64,
) -> Vec<Recipe> {
    partition_sample(dataset, |f| majority.contains(f), per_minority, seed)
}

/// The inverse of [`build_skewed`]: samples `per_majority` recipes for each
/// trigger function in `majority` and keeps every other recipe.
pub fn build_rebalanced(
    dataset: &[Recipe],
    majority: &BTreeSet<String>,
    per_majority: usize,
    seed: u64,
) -> Vec<Recipe> {
    partition_sample(dataset, |f| !majority.contains(f), per_majority, seed)
}

fn partition_sample<F>(dataset: &[Recipe], keep_all: F, per_group: usize, seed: u64) -> Vec<Recipe>
where
    F: Fn(&str) -> bool,
{
    let mut groups: BTreeMap<&str, Vec<&Recipe>> = BTreeMap::new();
    for recipe in dataset {
        groups
            .entry(recipe.trigger_function.as_str())
            .or_default()
            .push(recipe);
    }
    let mut rng = rng::stream(seed, Stream::Sampling);
    let mut out: Vec<Recipe> = Vec::with_capacity(dataset.len());
    for (function, members) in groups {
        if keep_all(function) || members.len() <= per_group {
            out.extend(members.into_iter().cloned());
        } else {
            let mut picked = index::sample(&mut rng, members.len(), per_group).into_vec();
            picked.sort_unstable();
            out.extend(picked.into_iter().map(|i| members[i].clone()));
        }
    }
    out.shuffle(&mut rng);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(trigger: &str, n: usize) -> Recipe {
        Recipe {
            description: format!("recipe {n}"),
            trigger_channel: "C".into(),
            trigger_function: format!("C.{trigger}"),
            action_channel: "D".into(),
            action_function: "D.act".into(),
            args: None,
        }
    }

    fn dataset(spec: &[(&str, usize)]) -> Vec<Recipe> {
        let mut n = 0;
        let mut out = Vec::new();
        for (f, count) in spec {
            for _ in 0..*count {
                out.push(recipe(f, n));
                n += 1;
            }
        }
        out
    }

    fn count(recipes: &[Recipe], f: &str) -> usize {
        recipes
            .iter()
            .filter(|r| r.trigger_function == format!("C.{f}"))
            .count()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|f| format!("C.{f}")).collect()
    }

    #[test]
    fn top_k_clear_margin() {
        let d = dataset(&[("f", 5), ("g", 5), ("h", 1)]);
        assert_eq!(top_k_functions(&d, 2), set(&["f", "g"]));
    }

    #[test]
    fn top_k_ties_lexicographic() {
        let d = dataset(&[("h", 5), ("g", 5), ("f", 5)]);
        assert_eq!(top_k_functions(&d, 2), set(&["f", "g"]));
        assert_eq!(top_k_functions(&d, 10).len(), 3);
    }

    #[test]
    fn skew_with_all_majority_is_permutation() {
        let d = dataset(&[("f", 20), ("g", 3)]);
        let out = build_skewed(&d, &set(&["f", "g"]), 10, 1);
        assert_eq!(out.len(), d.len());
        let mut a: Vec<_> = out.iter().map(|r| r.description.clone()).collect();
        let mut b: Vec<_> = d.iter().map(|r| r.description.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn skew_samples_minority() {
        let d = dataset(&[("f", 50), ("g", 30), ("h", 4)]);
        let out = build_skewed(&d, &set(&["f"]), 10, 3);
        assert_eq!(count(&out, "f"), 50);
        assert_eq!(count(&out, "g"), 10);
        assert_eq!(count(&out, "h"), 4);
    }

    #[test]
    fn rebalance_samples_majority() {
        let d = dataset(&[("f", 500), ("g", 3), ("h", 7)]);
        let out = build_rebalanced(&d, &set(&["f", "g"]), 10, 3);
        assert_eq!(count(&out, "f"), 10);
        assert_eq!(count(&out, "g"), 3);
        assert_eq!(count(&out, "h"), 7);
        assert_eq!(build_rebalanced(&d, &BTreeSet::new(), 10, 3).len(), d.len());
    }

    #[test]
    fn role_symmetry() {
        let d = dataset(&[("f", 40), ("g", 25), ("h", 12), ("k", 2)]);
        let s = set(&["f", "k"]);
        let complement = set(&["g", "h"]);
        assert_eq!(
            build_skewed(&d, &s, 10, 9),
            build_rebalanced(&d, &complement, 10, 9)
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let d = dataset(&[("f", 40), ("g", 25)]);
        let s = set(&["f"]);
        assert_eq!(build_skewed(&d, &s, 10, 5), build_skewed(&d, &s, 10, 5));
        assert_ne!(build_skewed(&d, &s, 10, 5), build_skewed(&d, &s, 10, 6));
    }
}
