use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ensemble::Classifier;
use crate::corpus::{EncodedExample, LabelSpace};
use crate::error::Result;
use crate::models::predict_label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetMetrics {
    pub function_accuracy: f64,
    pub channel_accuracy: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub function_accuracy: f64,
    pub channel_accuracy: f64,
    pub count: usize,
    /// Examples whose gold function is in the subset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub majority: Option<SubsetMetrics>,
    /// Examples whose gold function is outside the subset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minority: Option<SubsetMetrics>,
}

#[derive(Default)]
struct Tally {
    function: usize,
    channel: usize,
    count: usize,
}

impl Tally {
    fn add(&mut self, function_ok: bool, channel_ok: bool) {
        self.count += 1;
        self.function += function_ok as usize;
        self.channel += channel_ok as usize;
    }

    fn finish(&self) -> SubsetMetrics {
        let frac = |n: usize| {
            if self.count == 0 {
                0.0
            } else {
                n as f64 / self.count as f64
            }
        };
        SubsetMetrics {
            function_accuracy: frac(self.function),
            channel_accuracy: frac(self.channel),
            count: self.count,
        }
    }
}

/// Function and channel accuracy. The channel prediction is always the
/// channel that owns the predicted function. With `subset`, examples are
/// also split by whether their gold function belongs to it.
pub fn evaluate<C: Classifier + ?Sized>(
    classifier: &C,
    examples: &[EncodedExample],
    labels: &LabelSpace,
    subset: Option<&BTreeSet<String>>,
) -> Result<Metrics> {
    let mut all = Tally::default();
    let mut inside = Tally::default();
    let mut outside = Tally::default();
    for ex in examples {
        let predicted = predict_label(&classifier.predict_proba(&ex.ids)?);
        let function_ok = predicted == ex.target;
        let channel_ok = labels.channel_id(predicted)? == labels.channel_id(ex.target)?;
        all.add(function_ok, channel_ok);
        if let Some(s) = subset {
            if s.contains(labels.function(ex.target)?) {
                inside.add(function_ok, channel_ok);
            } else {
                outside.add(function_ok, channel_ok);
            }
        }
    }
    let total = all.finish();
    Ok(Metrics {
        function_accuracy: total.function_accuracy,
        channel_accuracy: total.channel_accuracy,
        count: total.count,
        majority: subset.map(|_| inside.finish()),
        minority: subset.map(|_| outside.finish()),
    })
}
