use serde::{Deserialize, Serialize};

use super::labels::{LabelSpace, Target};
use super::recipe::Recipe;
use super::tokenize::tokenize;
use super::vocab::{Vocab, PAD_ID};
use crate::error::{Error, Result};

pub const DEFAULT_SEQ_LEN: usize = 25;

/// A description encoded to exactly `J` ids, paired with its label id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub ids: Vec<usize>,
    pub target: usize,
}

/// Fits `ids` to length `seq_len`: short inputs are padded at the end, long
/// inputs keep the first `seq_len / 2` and the last `seq_len - seq_len / 2`
/// ids (12 + 13 for the default length of 25).
pub fn clip_and_pad(ids: &[usize], seq_len: usize) -> Result<Vec<usize>> {
    if seq_len < 2 {
        return Err(Error::Config(format!(
            "sequence length must be at least 2, got {seq_len}"
        )));
    }
    if ids.len() <= seq_len {
        let mut out = ids.to_vec();
        out.resize(seq_len, PAD_ID);
        return Ok(out);
    }
    let head = seq_len / 2;
    let tail = seq_len - head;
    let mut out = Vec::with_capacity(seq_len);
    out.extend_from_slice(&ids[..head]);
    out.extend_from_slice(&ids[ids.len() - tail..]);
    Ok(out)
}

pub fn encode(tokens: &[String], vocab: &Vocab, seq_len: usize) -> Result<Vec<usize>> {
    let ids: Vec<usize> = tokens.iter().map(|t| vocab.id(t)).collect();
    clip_and_pad(&ids, seq_len)
}

/// Encodes recipes against a label space; every gold label must be known.
pub fn encode_recipes(
    recipes: &[Recipe],
    vocab: &Vocab,
    labels: &LabelSpace,
    target: Target,
    seq_len: usize,
) -> Result<Vec<EncodedExample>> {
    recipes
        .iter()
        .map(|recipe| {
            let function = target.function(recipe);
            let target_id = labels
                .id(function)
                .ok_or_else(|| Error::Data(format!("label {function:?} not in label space")))?;
            let ids = encode(&tokenize(&recipe.description), vocab, seq_len)?;
            Ok(EncodedExample {
                ids,
                target: target_id,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_input_keeps_head_and_tail() {
        let ids: Vec<usize> = (1..=30).collect();
        let out = clip_and_pad(&ids, 25).unwrap();
        let expected: Vec<usize> = (1..=12).chain(18..=30).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn short_input_is_padded() {
        let out = clip_and_pad(&[5, 6, 7, 8, 9], 25).unwrap();
        assert_eq!(&out[..5], &[5, 6, 7, 8, 9]);
        assert!(out[5..].iter().all(|&id| id == PAD_ID));
        assert_eq!(out.len(), 25);
    }

    #[test]
    fn exact_length_unchanged() {
        let ids: Vec<usize> = (2..27).collect();
        assert_eq!(clip_and_pad(&ids, 25).unwrap(), ids);
    }

    #[test]
    fn even_length_splits_evenly() {
        let ids: Vec<usize> = (0..10).collect();
        assert_eq!(clip_and_pad(&ids, 4).unwrap(), vec![0, 1, 8, 9]);
    }

    #[test]
    fn too_short_sequence_length() {
        assert!(matches!(clip_and_pad(&[1], 1), Err(Error::Config(_))));
    }

    #[test]
    fn encodes_unknown_tokens_as_unk() {
        let vocab = Vocab::from_tokens(["save", "photos"]).unwrap();
        let tokens = tokenize("Save new photos");
        assert_eq!(encode(&tokens, &vocab, 4).unwrap(), vec![2, 1, 3, 0]);
    }
}
