use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::corpus::{LabelSpace, Target, Vocab};
use crate::error::Result;
use crate::tensor::{read_checkpoint, write_checkpoint};

/// A trained model together with what is needed to use it on raw recipes.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub model: Model,
    pub vocab: Vocab,
    pub labels: LabelSpace,
    pub target: Target,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: ModelConfig,
    target: Target,
    seed: u64,
    labels: LabelSpace,
    vocab: Vec<String>,
}

impl Bundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = Meta {
            config: self.model.config().clone(),
            target: self.target,
            seed: self.seed,
            labels: self.labels.clone(),
            vocab: self.vocab.content_tokens().to_vec(),
        };
        let file = std::fs::File::create(path)?;
        write_checkpoint(
            BufWriter::new(file),
            &serde_json::to_value(meta)?,
            self.model.params(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let checkpoint = read_checkpoint(BufReader::new(file))?;
        let meta: Meta = serde_json::from_value(checkpoint.meta)?;
        let model = Model::from_parts(meta.config, checkpoint.params)?;
        Ok(Bundle {
            model,
            vocab: Vocab::from_tokens(meta.vocab)?,
            labels: meta.labels,
            target: meta.target,
            seed: meta.seed,
        })
    }
}
