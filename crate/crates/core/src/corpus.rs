//! Text corpus loading and tokenization.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Identifier of the bundled stopword list; bump when the list changes.
pub const STOPWORDS_VERSION: &str = "en-1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("cannot read {}: {reason}", path.display())]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("invalid manifest {}: {reason}", path.display())]
    InvalidManifest { path: PathBuf, reason: String },
    #[error("no document produced any token")]
    EmptyVocabulary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: title.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Minimum token length in characters.
    pub min_len: usize,
    /// Compared case-insensitively.
    pub stopwords: BTreeSet<String>,
    /// Prepend each document's title to its text before tokenizing.
    pub include_titles: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_len: 3,
            stopwords: default_stopwords(),
            include_titles: true,
        }
    }
}

pub fn default_stopwords() -> BTreeSet<String> {
    BUNDLED_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Splits `text` into maximal runs of Unicode letters and digits, then
/// applies case folding, the length floor and the stopword filter.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= config.min_len)
        .filter_map(|t| {
            let lower = t.to_lowercase();
            if config.stopwords.contains(&lower) {
                None
            } else if config.lowercase {
                Some(lower)
            } else {
                Some(t.to_string())
            }
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct Manifest {
    documents: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    doc_id: String,
    path: PathBuf,
    #[serde(default)]
    title: String,
}

/// Loads a corpus from a directory of `.txt` files or from a JSON manifest.
///
/// In a directory, `doc_id` is the file stem, the first line is the title
/// and the remaining lines are the text. Documents come back sorted by id.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let meta = fs::metadata(path).map_err(|e| unreadable(path, e))?;
    let mut docs = if meta.is_dir() {
        load_directory(path)?
    } else {
        load_manifest(path)?
    };
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(dup) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(CorpusError::DuplicateDocId(dup[0].doc_id.clone()));
    }
    Ok(docs)
}

fn unreadable(path: &Path, err: impl ToString) -> CorpusError {
    CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        reason: err.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|e| unreadable(path, e))
}

fn load_directory(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| unreadable(dir, e))? {
        let entry = entry.map_err(|e| unreadable(dir, e))?;
        let path = entry.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let content = read_text(&path)?;
        let (title, text) = match content.split_once('\n') {
            Some((first, rest)) => (first.trim().to_string(), rest.to_string()),
            None => (content.trim().to_string(), String::new()),
        };
        docs.push(Document::new(stem, title, text));
    }
    Ok(docs)
}

fn load_manifest(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let raw = read_text(path)?;
    let manifest: Manifest = serde_json::from_str(&raw).map_err(|e| CorpusError::InvalidManifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest
        .documents
        .into_iter()
        .map(|entry| {
            let text = read_text(&base.join(&entry.path))?;
            Ok(Document::new(entry.doc_id, entry.title, text))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vec<String>,
    doc_tokens: Vec<Vec<usize>>,
    config: TokenizerConfig,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Sorted, duplicate-free.
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn doc_tokens(&self) -> &[Vec<usize>] {
        &self.doc_tokens
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_index(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.doc_index(doc_id).map(|i| &self.documents[i])
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn doc_ids(&self) -> BTreeSet<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    /// Documents that contributed no tokens. They are kept in the corpus.
    pub fn empty_documents(&self) -> Vec<&str> {
        self.documents
            .iter()
            .zip(&self.doc_tokens)
            .filter(|(_, toks)| toks.is_empty())
            .map(|(d, _)| d.doc_id.as_str())
            .collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.doc_tokens.iter().map(Vec::len).sum()
    }
}

fn modeled_text(doc: &Document, config: &TokenizerConfig) -> String {
    if config.include_titles && !doc.title.is_empty() {
        format!("{}\n{}", doc.title, doc.text)
    } else {
        doc.text.clone()
    }
}

/// Tokenizes every document and encodes it against the sorted vocabulary.
/// Document order is kept as given.
pub fn build_corpus(documents: Vec<Document>, config: TokenizerConfig) -> Result<Corpus, CorpusError> {
    let mut index = HashMap::with_capacity(documents.len());
    for (i, doc) in documents.iter().enumerate() {
        if index.insert(doc.doc_id.clone(), i).is_some() {
            return Err(CorpusError::DuplicateDocId(doc.doc_id.clone()));
        }
    }
    let token_lists: Vec<Vec<String>> = documents
        .iter()
        .map(|d| tokenize(&modeled_text(d, &config), &config))
        .collect();
    let vocabulary: Vec<String> = token_lists
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocabulary.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    let doc_tokens = token_lists
        .iter()
        .map(|toks| {
            toks.iter()
                .map(|t| vocabulary.binary_search(t).expect("every token is in the vocabulary"))
                .collect()
        })
        .collect();
    Ok(Corpus {
        documents,
        vocabulary,
        doc_tokens,
        config,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(stop: &[&str], min_len: usize) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: true,
            min_len,
            stopwords: stop.iter().map(|s| s.to_string()).collect(),
            include_titles: false,
        }
    }

    #[test]
    fn tokenize_basic_rule() {
        assert_eq!(tokenize("The cat; the CAT!", &cfg(&["the"], 2)), ["cat", "cat"]);
        assert!(tokenize("", &cfg(&[], 1)).is_empty());
    }

    #[test]
    fn tokenize_unicode_and_digits() {
        let toks = tokenize("Café-owner paid 500€ in 2014", &cfg(&[], 1));
        assert_eq!(toks, ["café", "owner", "paid", "500", "in", "2014"]);
    }

    #[test]
    fn stopwords_match_case_insensitively_without_lowercasing() {
        let mut c = cfg(&["the"], 1);
        c.lowercase = false;
        assert_eq!(tokenize("The Cat", &c), ["Cat"]);
    }

    #[test]
    fn build_small_corpus() {
        let docs = vec![
            Document::new("d1", "", "apple banana"),
            Document::new("d2", "", "banana"),
        ];
        let corpus = build_corpus(docs, cfg(&[], 1)).unwrap();
        assert_eq!(corpus.vocabulary(), ["apple", "banana"]);
        assert_eq!(corpus.doc_tokens(), [vec![0, 1], vec![1]]);
        assert_eq!(corpus.term_index("banana"), Some(1));
        assert_eq!(corpus.doc_index("d2"), Some(1));
    }

    #[test]
    fn all_stopwords_is_empty_vocabulary() {
        let docs = vec![Document::new("d1", "", "the and of")];
        assert!(matches!(
            build_corpus(docs, TokenizerConfig::default()),
            Err(CorpusError::EmptyVocabulary)
        ));
    }

    #[test]
    fn duplicate_ids_in_build() {
        let docs = vec![Document::new("d", "", "apple"), Document::new("d", "", "pear")];
        assert!(matches!(
            build_corpus(docs, cfg(&[], 1)),
            Err(CorpusError::DuplicateDocId(id)) if id == "d"
        ));
    }

    #[test]
    fn titles_included_when_configured() {
        let docs = vec![Document::new("d", "Harbor", "cargo"), Document::new("e", "", "crate")];
        let mut c = cfg(&[], 1);
        c.include_titles = true;
        let corpus = build_corpus(docs.clone(), c.clone()).unwrap();
        assert_eq!(corpus.vocabulary(), ["cargo", "crate", "harbor"]);
        c.include_titles = false;
        let corpus = build_corpus(docs, c).unwrap();
        assert_eq!(corpus.vocabulary(), ["cargo", "crate"]);
    }

    #[test]
    fn empty_text_documents_are_flagged() {
        let docs = vec![Document::new("a", "", ""), Document::new("b", "", "pear")];
        let corpus = build_corpus(docs, cfg(&[], 1)).unwrap();
        assert_eq!(corpus.empty_documents(), ["a"]);
    }

    #[test]
    fn bundled_stopwords_load() {
        let stop = default_stopwords();
        assert!(stop.contains("the"));
        assert!(!stop.iter().any(|s| s.starts_with('#')));
    }

    #[test]
    fn directory_loading_is_sorted_and_manifest_dupes_fail() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "Bee\nbuzzing").unwrap();
        fs::write(dir.path().join("a.txt"), "Ant\ncolony").unwrap();
        fs::write(dir.path().join("skip.md"), "ignored").unwrap();
        let docs = load_corpus(dir.path()).unwrap();
        let ids: Vec<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(docs[0].title, "Ant");
        assert_eq!(docs[0].text, "colony");

        let manifest = dir.path().join("manifest.json");
        fs::write(
            &manifest,
            r#"{"documents":[{"doc_id":"a","path":"a.txt","title":"A"},{"doc_id":"a","path":"b.txt","title":"B"}]}"#,
        )
        .unwrap();
        assert!(matches!(load_corpus(&manifest), Err(CorpusError::DuplicateDocId(_))));

        let empty = tempfile::tempdir().unwrap();
        assert!(load_corpus(empty.path()).unwrap().is_empty());

        let missing = dir.path().join("nope");
        let err = load_corpus(&missing).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
