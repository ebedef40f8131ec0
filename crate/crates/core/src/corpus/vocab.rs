use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const DEFAULT_MAX_WORDS: usize = 4000;

/// Token to id table. Ids 0 and 1 are reserved for padding and unknown
/// tokens; content tokens occupy `2..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    table: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from content tokens in id order (first gets id 2).
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab {
            tokens: Vec::new(),
            table: HashMap::new(),
        };
        for token in tokens {
            let token = token.into();
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("invalid vocabulary token {token:?}")));
            }
            if vocab.table.contains_key(&token) {
                return Err(Error::Data(format!("duplicate vocabulary token {token:?}")));
            }
            vocab.table.insert(token.clone(), vocab.tokens.len() + 2);
            vocab.tokens.push(token);
        }
        Ok(vocab)
    }

    pub fn size(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn pad_id(&self) -> usize {
        PAD_ID
    }

    pub fn unk_id(&self) -> usize {
        UNK_ID
    }

    pub fn id(&self, token: &str) -> usize {
        self.table.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        match id {
            PAD_ID => Some("<PAD>"),
            UNK_ID => Some("<UNK>"),
            _ => self.tokens.get(id - 2).map(String::as_str),
        }
    }

    /// Content tokens in id order, starting at id 2.
    pub fn content_tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line; line `k` (0-based) holds the token with id `k + 2`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for token in &self.tokens {
            writeln!(out, "{token}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "empty vocabulary line".into(),
                });
            }
            tokens.push(line);
        }
        Self::from_tokens(tokens)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }
}

/// Keeps the `max_words` most frequent tokens; ties break lexicographically.
pub fn build_vocab<'a, I>(token_lists: I, max_words: usize) -> Vocab
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tokens in token_lists {
        for token in tokens {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_words);
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string()))
        .expect("tokenizer output is whitespace-free and deduplicated")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lists(spec: &[(&str, usize)]) -> Vec<Vec<String>> {
        spec.iter()
            .flat_map(|(t, n)| std::iter::repeat(vec![t.to_string()]).take(*n))
            .collect()
    }

    #[test]
    fn keeps_most_frequent() {
        let corpus = lists(&[("a", 5), ("b", 3), ("c", 1)]);
        let vocab = build_vocab(corpus.iter().map(Vec::as_slice), 2);
        assert_eq!(vocab.size(), 4);
        assert_eq!(vocab.id("a"), 2);
        assert_eq!(vocab.id("b"), 3);
        assert_eq!(vocab.id("c"), UNK_ID);
    }

    #[test]
    fn empty_corpus_has_only_reserved_ids() {
        let vocab = build_vocab(std::iter::empty(), DEFAULT_MAX_WORDS);
        assert_eq!(vocab.size(), 2);
        assert_eq!(vocab.token(PAD_ID), Some("<PAD>"));
        assert_eq!(vocab.token(UNK_ID), Some("<UNK>"));
    }

    #[test]
    fn ties_break_lexicographically() {
        let corpus = lists(&[("zeta", 2), ("alpha", 2), ("mid", 2)]);
        let vocab = build_vocab(corpus.iter().map(Vec::as_slice), 2);
        assert_eq!(vocab.content_tokens(), ["alpha", "mid"]);
    }

    #[test]
    fn file_round_trip() {
        let vocab = Vocab::from_tokens(["x", "y", "!"]).unwrap();
        let mut buf = Vec::new();
        vocab.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x\ny\n!\n");
        assert_eq!(Vocab::read(buf.as_slice()).unwrap(), vocab);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(Vocab::from_tokens(["a", "a"]).is_err());
    }
}
