use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Args, Recipe, Slot};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub const SERVICE_NAMES: [&str; 26] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett",
    "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
    "uniform", "victor", "whiskey", "xray", "yankee", "zulu",
];

/// `{T}` marks the trigger service and `{A}` the action service. Each
/// template has its own set of filler words, so the word multiset of a
/// description identifies its template.
pub const DEFAULT_TEMPLATES: [&str; 6] = [
    "save {T} photos to {A}",
    "when {T} posts something , send a copy to {A}",
    "post to {A} every new {T} upload",
    "let {A} know whenever {T} changes",
    "archive new items from {T} in {A}",
    "if {T} updates then notify {A}",
];

const TAGS: [&str; 3] = ["news", "family", "work"];
const FOLDERS: [&str; 3] = ["inbox", "archive", "shared"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub services: usize,
    pub templates: Vec<String>,
    pub n: usize,
    /// Attach `tag` / `folder` arguments, occasionally omitted.
    pub with_args: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            services: 8,
            templates: DEFAULT_TEMPLATES.iter().map(|t| t.to_string()).collect(),
            n: 1200,
            with_args: false,
        }
    }
}

fn capitalized(name: &str) -> String {
    let mut c = name.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

pub fn service_name(i: usize) -> &'static str {
    SERVICE_NAMES[i]
}

pub fn trigger_function(i: usize) -> String {
    format!("{}.new_item", capitalized(SERVICE_NAMES[i]))
}

pub fn action_function(i: usize) -> String {
    format!("{}.send_copy", capitalized(SERVICE_NAMES[i]))
}

/// Generates `spec.n` recipes as consecutive mirrored pairs: recipes `2k`
/// and `2k + 1` share a template with the two services swapped, so their
/// descriptions have the same word multiset but different triggers. Pair
/// `k` uses services `a = k mod S` and `b = a + 1 + (k / S) mod (S - 1)`
/// (mod S), which spreads every label evenly across the corpus; the
/// template is drawn from the seed.
pub fn gen_synthetic_corpus(spec: &SyntheticSpec, seed: u64) -> Result<Vec<Recipe>> {
    let s = spec.services;
    if !(2..=SERVICE_NAMES.len()).contains(&s) {
        return Err(Error::Config(format!(
            "services must be in 2..={}, got {s}",
            SERVICE_NAMES.len()
        )));
    }
    if spec.templates.is_empty() {
        return Err(Error::Config("at least one template is required".into()));
    }
    for t in &spec.templates {
        if t.matches("{T}").count() != 1 || t.matches("{A}").count() != 1 {
            return Err(Error::Config(format!(
                "template {t:?} needs exactly one {{T}} and one {{A}}"
            )));
        }
    }
    let mut rng = stream(seed, Stream::Synthetic);
    let mut out = Vec::with_capacity(spec.n + 1);
    let mut k = 0usize;
    while out.len() < spec.n {
        let a = k % s;
        let b = (a + 1 + (k / s) % (s - 1)) % s;
        let template = &spec.templates[rng.gen_range(0..spec.templates.len())];
        for (trig, act) in [(a, b), (b, a)] {
            let description = template
                .replace("{T}", SERVICE_NAMES[trig])
                .replace("{A}", SERVICE_NAMES[act]);
            let args = spec.with_args.then(|| {
                let mut args = Args::new();
                let mut pick = |slot: Slot, name: &str, values: &[&str], svc: usize| {
                    let entry = args.entry(slot).or_default();
                    if rng.gen_bool(0.8) {
                        let shift = if rng.gen_bool(0.7) {
                            0
                        } else {
                            rng.gen_range(0..values.len())
                        };
                        entry.insert(
                            name.to_string(),
                            values[(svc + shift) % values.len()].to_string(),
                        );
                    }
                };
                pick(Slot::Trigger, "tag", &TAGS, trig);
                pick(Slot::Action, "folder", &FOLDERS, act);
                args
            });
            out.push(Recipe {
                description,
                trigger_channel: capitalized(SERVICE_NAMES[trig]),
                trigger_function: trigger_function(trig),
                action_channel: capitalized(SERVICE_NAMES[act]),
                action_function: action_function(act),
                args,
            });
        }
        k += 1;
    }
    out.truncate(spec.n);
    Ok(out)
}

/// Splits recipes into `(train, valid, test)` by sorted word multiset, so
/// both members of every mirrored pair land in the same part and no test
/// description also occurs in training. Distinct multisets are taken in
/// sorted order; group `g` goes to test when `g % folds == 0`, to validation
/// when `g % folds == 1`, and to training otherwise.
pub fn split_by_word_bag(
    recipes: &[Recipe],
    folds: usize,
) -> Result<(Vec<Recipe>, Vec<Recipe>, Vec<Recipe>)> {
    if folds < 3 {
        return Err(Error::Config(format!(
            "folds must be at least 3, got {folds}"
        )));
    }
    let mut groups: BTreeMap<Vec<String>, Vec<&Recipe>> = BTreeMap::new();
    for r in recipes {
        let mut bag = tokenize(&r.description);
        bag.sort();
        groups.entry(bag).or_default().push(r);
    }
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (g, members) in groups.into_values().enumerate() {
        let dst = match g % folds {
            0 => &mut test,
            1 => &mut valid,
            _ => &mut train,
        };
        dst.extend(members.into_iter().cloned());
    }
    Ok((train, valid, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_and_size() {
        let spec = SyntheticSpec {
            services: 4,
            templates: DEFAULT_TEMPLATES[..2]
                .iter()
                .map(|t| t.to_string())
                .collect(),
            n: 100,
            with_args: false,
        };
        let rs = gen_synthetic_corpus(&spec, 3).unwrap();
        assert_eq!(rs.len(), 100);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &rs {
            r.validate().unwrap();
            *counts.entry(&r.trigger_function).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        let (lo, hi) = (
            counts.values().min().unwrap(),
            counts.values().max().unwrap(),
        );
        assert!(hi - lo <= 2, "{counts:?}");
    }

    #[test]
    fn mirrored_pairs_share_multiset() {
        let rs = gen_synthetic_corpus(&SyntheticSpec::default(), 1).unwrap();
        for pair in rs.chunks(2) {
            let mut x = tokenize(&pair[0].description);
            let mut y = tokenize(&pair[1].description);
            x.sort();
            y.sort();
            assert_eq!(x, y);
            assert_ne!(pair[0].trigger_function, pair[1].trigger_function);
        }
    }

    #[test]
    fn templates_have_distinct_word_bags() {
        let bags: Vec<Vec<String>> = DEFAULT_TEMPLATES
            .iter()
            .map(|t| {
                let mut b = tokenize(&t.replace("{T}", "").replace("{A}", ""));
                b.sort();
                b
            })
            .collect();
        for i in 0..bags.len() {
            for j in i + 1..bags.len() {
                assert_ne!(bags[i], bags[j]);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSpec {
            with_args: true,
            ..SyntheticSpec::default()
        };
        assert_eq!(
            gen_synthetic_corpus(&spec, 5).unwrap(),
            gen_synthetic_corpus(&spec, 5).unwrap()
        );
        assert_ne!(
            gen_synthetic_corpus(&spec, 5).unwrap(),
            gen_synthetic_corpus(&spec, 6).unwrap()
        );
    }

    #[test]
    fn bag_split_keeps_pairs_together() {
        let rs = gen_synthetic_corpus(&SyntheticSpec::default(), 2).unwrap();
        let (train, valid, test) = split_by_word_bag(&rs, 5).unwrap();
        assert_eq!(train.len() + valid.len() + test.len(), rs.len());
        let bag = |r: &Recipe| {
            let mut b = tokenize(&r.description);
            b.sort();
            b
        };
        let seen: std::collections::BTreeSet<Vec<String>> = train.iter().map(bag).collect();
        assert!(test.iter().all(|r| !seen.contains(&bag(r))));
        let mut per_bag: BTreeMap<Vec<String>, BTreeMap<&str, usize>> = BTreeMap::new();
        for r in &test {
            *per_bag
                .entry(bag(r))
                .or_default()
                .entry(&r.trigger_function)
                .or_default() += 1;
        }
        for counts in per_bag.values() {
            assert_eq!(counts.len(), 2);
            let v: Vec<&usize> = counts.values().collect();
            assert_eq!(v[0], v[1]);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = SyntheticSpec {
            services: 1,
            ..SyntheticSpec::default()
        };
        assert!(gen_synthetic_corpus(&spec, 0).is_err());
        spec.services = 4;
        spec.templates = vec!["no slots".into()];
        assert!(gen_synthetic_corpus(&spec, 0).is_err());
    }
}
