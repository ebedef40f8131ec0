//! Recipe ingestion, tokenization, vocabulary construction, fixed-length
//! encoding and the skewed/rebalanced one-shot datasets.

mod encode;
mod labels;
mod recipe;
mod skew;
mod tokenize;
mod vocab;

pub use encode::{clip_and_pad, encode, encode_recipes, EncodedExample, DEFAULT_SEQ_LEN};
pub use labels::{LabelSpace, Target};
pub use recipe::{load_recipes, parse_recipes, write_recipes, Args, Recipe, Slot};
pub use skew::{build_rebalanced, build_skewed, top_k_functions, DEFAULT_PER_GROUP};
pub use tokenize::tokenize;
pub use vocab::{build_vocab, Vocab, DEFAULT_MAX_WORDS, PAD_ID, UNK_ID};
