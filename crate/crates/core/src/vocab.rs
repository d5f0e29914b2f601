use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};

pub type TokenId = usize;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Bijective token/index mapping with four reserved entries at 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new(std::iter::empty::<String>()).expect("reserved tokens are distinct")
    }
}

impl Vocabulary {
    /// Build from ordinary tokens; they are assigned indices 4, 5, ...
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in RESERVED.iter().map(|s| s.to_string()).chain(tokens.into_iter().map(Into::into)) {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(CoreError::Parse(format!("invalid vocabulary token {t:?}")));
            }
            if vocab.index.contains_key(&t) {
                return Err(CoreError::Parse(format!("duplicate vocabulary token {t:?}")));
            }
            vocab.index.insert(t.clone(), vocab.tokens.len());
            vocab.tokens.push(t);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn lookup(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Ordinary (non-reserved) tokens in index order.
    pub fn ordinary_tokens(&self) -> &[String] {
        &self.tokens[RESERVED.len()..]
    }

    pub fn encode(&self, line: &str) -> Vec<TokenId> {
        line.split_whitespace().map(|t| self.id(t)).collect()
    }

    /// Encode and append EOS.
    pub fn encode_target(&self, line: &str) -> Vec<TokenId> {
        let mut ids = self.encode(line);
        ids.push(EOS);
        ids
    }

    /// Render ids as a space-joined string, skipping PAD, BOS and EOS.
    pub fn render(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&i| !matches!(i, PAD | BOS | EOS))
            .map(|&i| self.token(i).unwrap_or(RESERVED[UNK as usize]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// One ordinary token per line; line `k` holds index `k + 4`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for t in self.ordinary_tokens() {
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::new(text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().to_string()))
    }
}

/// Check every id is below `size`.
pub fn check_tokens(seq: &[TokenId], size: usize) -> Result<()> {
    match seq.iter().find(|&&t| t >= size) {
        Some(&index) => Err(CoreError::InvalidToken { index, size }),
        None => Ok(()),
    }
}

/// Drop a trailing EOS if present.
pub fn strip_eos(seq: &[TokenId]) -> &[TokenId] {
    match seq.last() {
        Some(&EOS) => &seq[..seq.len() - 1],
        _ => seq,
    }
}
