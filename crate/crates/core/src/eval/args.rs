use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Args, Recipe, Slot};

/// Printed form of an absent argument.
pub const MISSING: &str = "<MISSING>";

/// An argument value, or the reserved marker for an argument the function
/// usually carries but this recipe omits. `Missing` orders before every
/// present value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgValue {
    Missing,
    Present(String),
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Missing => f.write_str(MISSING),
            ArgValue::Present(v) => f.write_str(v),
        }
    }
}

/// Predicted arguments for one recipe: slot -> (name -> value).
pub type ArgPrediction = BTreeMap<Slot, BTreeMap<String, ArgValue>>;

/// Value counts per (slot, function, argument name).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArgFreqModel {
    table: BTreeMap<Slot, BTreeMap<String, BTreeMap<String, BTreeMap<ArgValue, usize>>>>,
}

impl ArgFreqModel {
    pub fn count(&self, slot: Slot, function: &str, arg: &str, value: &ArgValue) -> usize {
        self.values(slot, function, arg)
            .and_then(|v| v.get(value))
            .copied()
            .unwrap_or(0)
    }

    pub fn values(
        &self,
        slot: Slot,
        function: &str,
        arg: &str,
    ) -> Option<&BTreeMap<ArgValue, usize>> {
        self.table.get(&slot)?.get(function)?.get(arg)
    }

    /// Argument names recorded for a function.
    pub fn arg_names(&self, slot: Slot, function: &str) -> Vec<&str> {
        self.table
            .get(&slot)
            .and_then(|t| t.get(function))
            .map(|m| m.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Counts argument values over recipes that carry argument annotations.
/// Recipes without annotations are ignored. When a recipe lacks an argument
/// that other recipes of the same function carry, `Missing` is counted.
pub fn fit_arg_model(recipes: &[Recipe]) -> ArgFreqModel {
    let annotated: Vec<(&Recipe, &Args)> = recipes
        .iter()
        .filter_map(|r| r.args.as_ref().map(|a| (r, a)))
        .collect();
    let mut known: BTreeMap<(Slot, &str), BTreeSet<&str>> = BTreeMap::new();
    for (r, args) in &annotated {
        for slot in [Slot::Trigger, Slot::Action] {
            let names = known.entry((slot, r.function(slot))).or_default();
            if let Some(m) = args.get(&slot) {
                names.extend(m.keys().map(String::as_str));
            }
        }
    }
    let mut model = ArgFreqModel::default();
    for (r, args) in &annotated {
        for slot in [Slot::Trigger, Slot::Action] {
            let function = r.function(slot);
            let given = args.get(&slot);
            for &name in &known[&(slot, function)] {
                let value = match given.and_then(|m| m.get(name)) {
                    Some(v) => ArgValue::Present(v.clone()),
                    None => ArgValue::Missing,
                };
                *model
                    .table
                    .entry(slot)
                    .or_default()
                    .entry(function.to_string())
                    .or_default()
                    .entry(name.to_string())
                    .or_default()
                    .entry(value)
                    .or_insert(0) += 1;
            }
        }
    }
    model
}

/// Most frequent value for each argument of `function`. Ties go to the
/// smallest value, with `Missing` smallest of all. Unseen functions yield an
/// empty map.
pub fn predict_args(
    model: &ArgFreqModel,
    slot: Slot,
    function: &str,
) -> BTreeMap<String, ArgValue> {
    let mut out = BTreeMap::new();
    if let Some(per_arg) = model.table.get(&slot).and_then(|t| t.get(function)) {
        for (name, counts) in per_arg {
            // BTreeMap iterates in ascending value order, so keeping the first
            // strict maximum implements the tie rule.
            let mut best: Option<(&ArgValue, usize)> = None;
            for (value, &n) in counts {
                if best.is_none_or(|(_, b)| n > b) {
                    best = Some((value, n));
                }
            }
            if let Some((value, _)) = best {
                out.insert(name.clone(), value.clone());
            }
        }
    }
    out
}

/// Micro-averaged F1 over exact (recipe, slot, name, value) matches.
/// `Missing` predictions are not counted as emitted. Returns 1.0 when both
/// sides are empty.
pub fn arg_f1(predictions: &[ArgPrediction], gold: &[Args]) -> f64 {
    let mut emitted = 0usize;
    let mut expected = 0usize;
    let mut hits = 0usize;
    for (i, g) in gold.iter().enumerate() {
        expected += g.values().map(BTreeMap::len).sum::<usize>();
        let Some(p) = predictions.get(i) else {
            continue;
        };
        for (slot, names) in p {
            for (name, value) in names {
                let ArgValue::Present(v) = value else {
                    continue;
                };
                emitted += 1;
                if g.get(slot).and_then(|m| m.get(name)) == Some(v) {
                    hits += 1;
                }
            }
        }
    }
    for p in predictions.iter().skip(gold.len()) {
        emitted += p
            .values()
            .flat_map(|m| m.values())
            .filter(|v| matches!(v, ArgValue::Present(_)))
            .count();
    }
    if emitted == 0 && expected == 0 {
        return 1.0;
    }
    if hits == 0 {
        return 0.0;
    }
    let precision = hits as f64 / emitted as f64;
    let recall = hits as f64 / expected as f64;
    2.0 * precision * recall / (precision + recall)
}
