//! Tokens, vocabularies and language codes.
//!
//! Vocabularies here are whitespace-tokenized word lists. Subword models stay
//! with the external scorer that owns them, see [`crate::protocol`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

/// A vocabulary entry paired with its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
}

/// Lowercase ASCII language identifier such as `de` or `zu`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let valid = !code.is_empty()
            && code.starts_with(|c: char| c.is_ascii_lowercase())
            && code
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-');
        if valid {
            Ok(Self(code))
        } else {
            Err(Error::InvalidLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl TryFrom<&str> for LanguageCode {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        Self::new(value)
    }
}

impl From<LanguageCode> for String {
    fn from(code: LanguageCode) -> Self {
        code.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub bos: TokenId,
    pub eos: TokenId,
    pub unk: TokenId,
    pub pad: TokenId,
}

impl SpecialTokens {
    pub fn contains(&self, id: TokenId) -> bool {
        id == self.bos || id == self.eos || id == self.unk || id == self.pad
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    #[serde(flatten)]
    special: SpecialTokens,
    #[serde(default)]
    language_indicators: BTreeMap<LanguageCode, TokenId>,
}

/// Ordered, duplicate-free list of token surfaces with designated special ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, TokenId>,
    special: SpecialTokens,
    language_indicators: BTreeMap<LanguageCode, TokenId>,
}

impl Vocabulary {
    pub fn new(
        entries: Vec<String>,
        special: SpecialTokens,
        language_indicators: BTreeMap<LanguageCode, TokenId>,
    ) -> Result<Self> {
        if entries.len() > TokenId::MAX as usize {
            return Err(Error::InvalidVocabulary("too many entries".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, surface) in entries.iter().enumerate() {
            if index.insert(surface.clone(), i as TokenId).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate entry {surface:?}")));
            }
        }
        let size = entries.len();
        let check = |what: &str, id: TokenId| {
            if (id as usize) < size {
                Ok(())
            } else {
                Err(Error::InvalidVocabulary(format!("{what} id {id} out of range for {size} entries")))
            }
        };
        check("bos", special.bos)?;
        check("eos", special.eos)?;
        check("unk", special.unk)?;
        check("pad", special.pad)?;
        for (lang, &id) in &language_indicators {
            check(&format!("language indicator {lang}"), id)?;
        }
        Ok(Self { entries, index, special, language_indicators })
    }

    /// Builds a vocabulary whose first four entries are `<s> </s> <unk> <pad>`,
    /// followed by `words` in order.
    pub fn with_default_specials<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut entries: Vec<String> =
            ["<s>", "</s>", "<unk>", "<pad>"].iter().map(|s| s.to_string()).collect();
        entries.extend(words.into_iter().map(Into::into));
        Self::new(entries, SpecialTokens { bos: 0, eos: 1, unk: 2, pad: 3 }, BTreeMap::new())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn special(&self) -> SpecialTokens {
        self.special
    }

    pub fn bos(&self) -> TokenId {
        self.special.bos
    }

    pub fn eos(&self) -> TokenId {
        self.special.eos
    }

    pub fn unk(&self) -> TokenId {
        self.special.unk
    }

    pub fn language_indicators(&self) -> &BTreeMap<LanguageCode, TokenId> {
        &self.language_indicators
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Result<&str> {
        self.entries
            .get(id as usize)
            .map(String::as_str)
            .ok_or(Error::TokenOutOfRange { id, size: self.entries.len() })
    }

    pub fn token(&self, id: TokenId) -> Result<Token> {
        Ok(Token { id, surface: self.surface(id)?.to_string() })
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// Whitespace tokenization; words missing from the vocabulary become UNK.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace()
            .map(|word| self.id_of(word).unwrap_or(self.special.unk))
            .collect()
    }

    /// Joins surfaces with single spaces. BOS, EOS, PAD and language
    /// indicators are dropped; UNK is kept.
    pub fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let mut words = Vec::with_capacity(tokens.len());
        for &id in tokens {
            let surface = self.surface(id)?;
            if self.is_hidden(id) {
                continue;
            }
            words.push(surface);
        }
        Ok(words.join(" "))
    }

    fn is_hidden(&self, id: TokenId) -> bool {
        let s = self.special;
        if id == s.unk {
            return false;
        }
        id == s.bos || id == s.eos || id == s.pad || self.language_indicators.values().any(|&l| l == id)
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(repr: VocabularyRepr) -> Result<Self> {
        Self::new(repr.tokens, repr.special, repr.language_indicators)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr { tokens: v.entries, special: v.special, language_indicators: v.language_indicators }
    }
}

/// Free-function form of [`Vocabulary::tokenize`].
pub fn tokenize(vocab: &Vocabulary, text: &str) -> Vec<TokenId> {
    vocab.tokenize(text)
}

/// Free-function form of [`Vocabulary::detokenize`].
pub fn detokenize(vocab: &Vocabulary, tokens: &[TokenId]) -> Result<String> {
    vocab.detokenize(tokens)
}
