use std::collections::BTreeSet;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use lattn_core::corpus::{
    build_vocab as rank_vocab, encode_recipes, load_recipes, tokenize, write_recipes,
    EncodedExample, LabelSpace, Recipe, Target, Vocab,
};
use lattn_core::eval::{gen_synthetic_corpus, split_by_word_bag, SyntheticSpec};
use lattn_core::Error;

use crate::cli::{BuildVocabArgs, EncodeArgs, GenSynthArgs};
use crate::manifest::{create_dir, write_json};

/// Folds for the synthetic split: one test, one validation, rest training.
const SPLIT_FOLDS: usize = 5;

pub fn read_recipes(path: &Path) -> anyhow::Result<Vec<Recipe>> {
    load_recipes(path).with_context(|| format!("reading recipes from {}", path.display()))
}

pub fn vocab_from(recipes: &[Recipe], max_words: usize) -> Vocab {
    let tokens: Vec<Vec<String>> = recipes.iter().map(|r| tokenize(&r.description)).collect();
    rank_vocab(tokens.iter().map(Vec::as_slice), max_words)
}

pub fn save_recipes(path: &Path, recipes: &[Recipe]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_recipes(recipes, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn build_vocab(args: BuildVocabArgs) -> anyhow::Result<()> {
    let recipes = read_recipes(&args.input)?;
    let vocab = vocab_from(&recipes, args.max_words);
    vocab
        .save(&args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!(
        "{} tokens ({} including PAD and UNK) -> {}",
        vocab.content_tokens().len(),
        vocab.size(),
        args.output.display()
    );
    Ok(())
}

pub fn encode_corpus(args: EncodeArgs) -> anyhow::Result<()> {
    let recipes = read_recipes(&args.input)?;
    let vocab = Vocab::load(&args.vocab)
        .with_context(|| format!("reading vocabulary {}", args.vocab.display()))?;
    let labels = match &args.labels {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<LabelSpace>(&text).map_err(Error::from)?
        }
        None => LabelSpace::from_recipes(&recipes, args.target),
    };
    let encoded = encode_recipes(&recipes, &vocab, &labels, args.target, args.seq_len)?;
    let file = std::fs::File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    let mut out = BufWriter::new(file);
    for ex in &encoded {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if let Some(path) = &args.labels_out {
        write_json(path, &labels)?;
    }
    Ok(())
}

pub fn gen_synth(args: GenSynthArgs) -> anyhow::Result<()> {
    let mut spec = SyntheticSpec {
        services: args.services,
        n: args.n,
        with_args: args.with_args,
        ..SyntheticSpec::default()
    };
    if let Some(path) = &args.templates {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        spec.templates = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
    }
    let recipes = gen_synthetic_corpus(&spec, args.seed)?;
    if let Some(path) = &args.output {
        save_recipes(path, &recipes)?;
    }
    if let Some(dir) = &args.split_dir {
        let (train, valid, test) = split_by_word_bag(&recipes, SPLIT_FOLDS)?;
        create_dir(dir)?;
        save_recipes(&dir.join("train.jsonl"), &train)?;
        save_recipes(&dir.join("valid.jsonl"), &valid)?;
        save_recipes(&dir.join("test.jsonl"), &test)?;
        eprintln!(
            "split: {} train, {} valid, {} test",
            train.len(),
            valid.len(),
            test.len()
        );
    }
    Ok(())
}

/// Encodes the recipes whose gold label is in `labels`; returns the
/// examples and the number skipped.
pub fn encode_known(
    recipes: &[Recipe],
    vocab: &Vocab,
    labels: &LabelSpace,
    target: Target,
    seq_len: usize,
) -> anyhow::Result<(Vec<EncodedExample>, usize)> {
    let known: Vec<Recipe> = recipes
        .iter()
        .filter(|r| labels.id(target.function(r)).is_some())
        .cloned()
        .collect();
    let encoded = encode_recipes(&known, vocab, labels, target, seq_len)?;
    Ok((encoded, recipes.len() - known.len()))
}

/// Reads one function name per line, ignoring blanks and `#` comments.
pub fn read_subset(path: &Path) -> anyhow::Result<BTreeSet<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
