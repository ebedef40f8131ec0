use crate::corpus::EncodedExample;
use crate::error::{Error, Result};
use crate::models::{predict_label, Model};

/// Anything that maps an encoded description to a label distribution.
pub trait Classifier {
    fn predict_proba(&self, ids: &[usize]) -> Result<Vec<f64>>;

    /// `(input length, number of classes)`.
    fn shape(&self) -> (usize, usize);
}

impl Classifier for Model {
    fn predict_proba(&self, ids: &[usize]) -> Result<Vec<f64>> {
        Model::predict_proba(self, ids)
    }

    fn shape(&self) -> (usize, usize) {
        (self.config().seq_len, self.config().classes)
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn predict_proba(&self, ids: &[usize]) -> Result<Vec<f64>> {
        (**self).predict_proba(ids)
    }

    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
}

/// Averages the softmax outputs of its members.
#[derive(Clone, Debug)]
pub struct Ensemble<C> {
    members: Vec<C>,
}

impl<C: Classifier> Ensemble<C> {
    /// Members must agree on input length and label count.
    pub fn new(members: Vec<C>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Config("ensemble needs at least one model".into()))?;
        let shape = first.shape();
        if members.iter().any(|x| x.shape() != shape) {
            return Err(Error::Config(
                "ensemble members disagree on input length or label count".into(),
            ));
        }
        Ok(Ensemble { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl<C: Classifier> Classifier for Ensemble<C> {
    fn shape(&self) -> (usize, usize) {
        self.members[0].shape()
    }

    fn predict_proba(&self, ids: &[usize]) -> Result<Vec<f64>> {
        let mut mean = vec![0.0; self.shape().1];
        for member in &self.members {
            for (acc, p) in mean.iter_mut().zip(member.predict_proba(ids)?) {
                *acc += p;
            }
        }
        let k = self.members.len() as f64;
        mean.iter_mut().for_each(|p| *p /= k);
        Ok(mean)
    }
}

pub fn function_accuracy<C: Classifier + ?Sized>(
    classifier: &C,
    examples: &[EncodedExample],
) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for ex in examples {
        correct += (predict_label(&classifier.predict_proba(&ex.ids)?) == ex.target) as usize;
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Candidate indices with their validation function accuracy, best first;
/// equal accuracies keep the lower seed first.
pub fn rank_by_validation<C: Classifier>(
    candidates: &[(u64, C)],
    valid: &[EncodedExample],
) -> Result<Vec<(usize, f64)>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for (i, (_, model)) in candidates.iter().enumerate() {
        scored.push((i, function_accuracy(model, valid)?));
    }
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(candidates[a.0].0.cmp(&candidates[b.0].0))
    });
    Ok(scored)
}

/// Indices of the `k` best candidates by validation function accuracy.
pub fn select_best_k<C: Classifier>(
    candidates: &[(u64, C)],
    valid: &[EncodedExample],
    k: usize,
) -> Result<Vec<usize>> {
    Ok(rank_by_validation(candidates, valid)?
        .into_iter()
        .take(k)
        .map(|(i, _)| i)
        .collect())
}
