use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_prefix, Scorer, ScorerDescriptor, StepDistribution, TextRole, VocabInfo};
use crate::context::ConditioningContext;
use crate::error::{Error, Result};
use crate::vocab::{LanguageCode, TokenId, Vocabulary};

const DEFAULT_MAX_CONTEXT_LEN: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
struct ContextKey {
    source_text: String,
    target_lang: LanguageCode,
}

impl ContextKey {
    fn of(ctx: &ConditioningContext) -> Self {
        Self { source_text: ctx.source_text.clone(), target_lang: ctx.target_lang.clone() }
    }
}

/// Exact lookup table from (context, prefix) to a distribution, with a
/// fallback for anything not listed. Contexts are keyed by source text and
/// target language.
#[derive(Debug, Clone)]
pub struct TableScorer {
    descriptor: ScorerDescriptor,
    vocab: Vocabulary,
    table: HashMap<ContextKey, HashMap<Vec<TokenId>, StepDistribution>>,
    default: StepDistribution,
}

impl TableScorer {
    /// Empty table whose fallback is uniform.
    pub fn new(vocab: Vocabulary) -> Self {
        let default = StepDistribution::uniform(vocab.len());
        Self {
            descriptor: ScorerDescriptor {
                vocab: VocabInfo::from(&vocab),
                supports_language_indicators: true,
                supports_llm_prompting: false,
                max_context_len: DEFAULT_MAX_CONTEXT_LEN,
            },
            vocab,
            table: HashMap::new(),
            default,
        }
    }

    pub fn with_default(mut self, default: StepDistribution) -> Result<Self> {
        self.check_len(&default)?;
        self.default = default;
        Ok(self)
    }

    pub fn with_max_context_len(mut self, max: usize) -> Self {
        self.descriptor.max_context_len = max;
        self
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Registers the distribution for `prefix` under the context's source text
    /// and target language.
    pub fn insert(&mut self, ctx: &ConditioningContext, prefix: Vec<TokenId>, dist: StepDistribution) -> Result<()> {
        self.insert_keyed(ContextKey::of(ctx), prefix, dist)
    }

    fn insert_keyed(&mut self, key: ContextKey, prefix: Vec<TokenId>, dist: StepDistribution) -> Result<()> {
        self.check_len(&dist)?;
        if let Some(&id) = prefix.iter().find(|&&id| id as usize >= self.vocab.len()) {
            return Err(Error::TokenOutOfRange { id, size: self.vocab.len() });
        }
        self.table.entry(key).or_default().insert(prefix, dist);
        Ok(())
    }

    /// Number of stored (context, prefix) entries.
    pub fn len(&self) -> usize {
        self.table.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_len(&self, dist: &StepDistribution) -> Result<()> {
        if dist.len() != self.vocab.len() {
            return Err(Error::VocabMismatch { expected: self.vocab.len(), actual: dist.len() });
        }
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: TableDocument = serde_json::from_str(json)?;
        Self::from_document(doc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    fn from_document(doc: TableDocument) -> Result<Self> {
        let mut scorer = TableScorer::new(doc.vocabulary);
        if let Some(max) = doc.max_context_len {
            scorer = scorer.with_max_context_len(max);
        }
        if let Some(default) = doc.default {
            scorer = scorer.with_default(StepDistribution::new(default)?)?;
        }
        for (i, entry) in doc.entries.into_iter().enumerate() {
            let key = doc
                .contexts
                .get(&entry.context)
                .cloned()
                .ok_or_else(|| Error::Data(format!("entry {i} names unknown context {:?}", entry.context)))?;
            let dist = StepDistribution::new(entry.probs)
                .map_err(|e| Error::Data(format!("entry {i}: {e}")))?;
            scorer.insert_keyed(key, entry.prefix, dist)?;
        }
        Ok(scorer)
    }

    fn to_document(&self) -> TableDocument {
        let mut keys: Vec<&ContextKey> = self.table.keys().collect();
        keys.sort();
        let mut contexts = BTreeMap::new();
        let mut entries = Vec::new();
        for (i, key) in keys.into_iter().enumerate() {
            let id = format!("c{i}");
            contexts.insert(id.clone(), key.clone());
            let mut prefixes: Vec<_> = self.table[key].iter().collect();
            prefixes.sort_by(|a, b| a.0.cmp(b.0));
            for (prefix, dist) in prefixes {
                entries.push(TableEntry { context: id.clone(), prefix: prefix.clone(), probs: dist.probs().to_vec() });
            }
        }
        TableDocument {
            vocabulary: self.vocab.clone(),
            max_context_len: Some(self.descriptor.max_context_len),
            default: Some(self.default.probs().to_vec()),
            contexts,
            entries,
        }
    }
}

impl Scorer for TableScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn next_distribution(&self, ctx: &ConditioningContext, prefix: &[TokenId]) -> Result<StepDistribution> {
        check_prefix(&self.descriptor, prefix)?;
        let found = self.table.get(&ContextKey::of(ctx)).and_then(|rows| rows.get(prefix));
        Ok(found.unwrap_or(&self.default).clone())
    }

    fn tokenize(&self, text: &str, _role: TextRole) -> Result<Vec<TokenId>> {
        Ok(self.vocab.tokenize(text))
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        self.vocab.detokenize(tokens)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDocument {
    vocabulary: Vocabulary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_context_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<Vec<f64>>,
    contexts: BTreeMap<String, ContextKey>,
    entries: Vec<TableEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    context: String,
    prefix: Vec<TokenId>,
    probs: Vec<f64>,
}
