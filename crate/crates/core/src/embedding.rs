//! FastText-format word vectors and mean-pooled document vectors.
//!
//! The `.vec` text format: an optional first line `<vocab_size> <dimension>`,
//! then one `word v1 … vd` line per word, space-separated decimal reals,
//! UTF-8, LF line endings. Header-less (GloVe-style) files are accepted with
//! the dimension inferred from the first line.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Identity of a loaded vector file: enough to detect mixing vector spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingFingerprint {
    pub path: String,
    pub vocab_size: usize,
    pub dimension: usize,
    /// SHA-256 of the file content, hex-encoded.
    pub checksum: String,
}

impl EmbeddingFingerprint {
    /// Two fingerprints describe the same vector space when content,
    /// dimension and vocabulary size agree; the path is informational.
    pub fn same_source(&self, other: &EmbeddingFingerprint) -> bool {
        self.checksum == other.checksum
            && self.dimension == other.dimension
            && self.vocab_size == other.vocab_size
    }
}

impl fmt::Display for EmbeddingFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} words, d={}, sha256 {})",
            self.path, self.vocab_size, self.dimension, self.checksum
        )
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read vectors: {0}")]
    Io(#[from] io::Error),
    #[error("vector file is not valid UTF-8")]
    Utf8,
    #[error("vector file is empty")]
    Empty,
    #[error("vector file line {line}: dimension must be positive")]
    ZeroDimension { line: usize },
    #[error("vector file line {line}: missing word")]
    MissingWord { line: usize },
    #[error("vector file line {line}: expected {expected} components, found {found}")]
    ComponentCount { line: usize, expected: usize, found: usize },
    #[error("vector file line {line}: component {index} is not a finite number: {value:?}")]
    BadComponent { line: usize, index: usize, value: String },
    #[error("vector file header declares {declared} words but {found} data lines follow")]
    VocabCountMismatch { declared: usize, found: usize },
}

/// Immutable word → d-dimensional vector table.
///
/// Duplicate words keep the first occurrence (later ones are logged and
/// skipped). Vectors are validated finite at load.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
    fingerprint: EmbeddingFingerprint,
}

impl EmbeddingTable {
    /// Load a `.vec` file from disk, fingerprinting its content.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        let content = std::str::from_utf8(&bytes).map_err(|_| EmbeddingError::Utf8)?;
        Self::parse(content, &path.display().to_string())
    }

    /// Parse `.vec` content; `origin` is recorded in the fingerprint.
    pub fn parse(content: &str, origin: &str) -> Result<Self, EmbeddingError> {
        let checksum = hex_digest(content.as_bytes());
        let mut lines = content.lines().enumerate();

        let (header, first_row) = match lines.next() {
            None => return Err(EmbeddingError::Empty),
            Some((idx, line)) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.is_empty() {
                    return Err(EmbeddingError::MissingWord { line: idx + 1 });
                }
                match (fields.first().and_then(|s| s.parse::<usize>().ok()), fields.get(1)) {
                    (Some(vocab), Some(dim)) if fields.len() == 2 => {
                        match dim.parse::<usize>() {
                            Ok(0) => return Err(EmbeddingError::ZeroDimension { line: idx + 1 }),
                            Ok(d) => (Some((vocab, d)), None),
                            Err(_) => (None, Some((idx, fields))),
                        }
                    }
                    _ => (None, Some((idx, fields))),
                }
            }
        };

        let mut dimension = header.map(|(_, d)| d);
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut values = Vec::new();
        let mut data_lines = 0usize;
        let mut duplicates = 0usize;

        let rows = first_row.into_iter().chain(
            lines.map(|(idx, line)| (idx, line.split_whitespace().collect::<Vec<&str>>())),
        );
        for (idx, fields) in rows {
            let line_no = idx + 1;
            if fields.is_empty() {
                return Err(EmbeddingError::MissingWord { line: line_no });
            }
            data_lines += 1;
            let word = fields[0];
            let components = &fields[1..];
            let expected = match dimension {
                Some(d) => d,
                None => {
                    if components.is_empty() {
                        return Err(EmbeddingError::ZeroDimension { line: line_no });
                    }
                    dimension = Some(components.len());
                    components.len()
                }
            };
            if components.len() != expected {
                return Err(EmbeddingError::ComponentCount {
                    line: line_no,
                    expected,
                    found: components.len(),
                });
            }
            if index.contains_key(word) {
                log::warn!("vector file line {line_no}: duplicate word {word:?}, keeping first");
                duplicates += 1;
                continue;
            }
            let start = values.len();
            for (i, component) in components.iter().enumerate() {
                match component.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => {
                        return Err(EmbeddingError::BadComponent {
                            line: line_no,
                            index: i + 1,
                            value: (*component).to_owned(),
                        })
                    }
                }
            }
            debug_assert_eq!(values.len() - start, expected);
            index.insert(word.to_owned(), words.len());
            words.push(word.to_owned());
        }

        if let Some((declared, _)) = header {
            if declared != data_lines {
                return Err(EmbeddingError::VocabCountMismatch { declared, found: data_lines });
            }
        }
        if words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if duplicates > 0 {
            log::warn!("vector file {origin}: skipped {duplicates} duplicate word(s)");
        }
        let dimension = dimension.expect("dimension set by first data row");
        let fingerprint = EmbeddingFingerprint {
            path: origin.to_owned(),
            vocab_size: words.len(),
            dimension,
            checksum,
        };
        Ok(Self { dimension, words, index, values, fingerprint })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn fingerprint(&self) -> &EmbeddingFingerprint {
        &self.fingerprint
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    fn row(&self, id: usize) -> &[f64] {
        &self.values[id * self.dimension..(id + 1) * self.dimension]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|id| self.row(id))
    }

    /// Write the table back in `.vec` format (header line included).
    /// Components use the shortest round-trip decimal representation, so
    /// re-loading reproduces the table bit-exactly.
    pub fn write_vec<W: Write>(&self, mut writer: W) -> io::Result<()> {
        writeln!(writer, "{} {}", self.words.len(), self.dimension)?;
        for (id, word) in self.words.iter().enumerate() {
            write!(writer, "{word}")?;
            for v in self.row(id) {
                write!(writer, " {v}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(digest.len() * 2);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Mean-pooled document vector with in/out-of-vocabulary bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub values: Vec<f64>,
    /// Number of in-vocabulary tokens that contributed to the mean.
    pub contributing: usize,
    /// Number of tokens skipped as out-of-vocabulary.
    pub oov_count: usize,
}

/// Unweighted arithmetic mean of the vectors of in-vocabulary tokens.
///
/// Out-of-vocabulary tokens are skipped and counted; a document with no
/// in-vocabulary token pools to the zero vector. Contributions are summed
/// in vocabulary-index order, making the result exactly permutation
/// invariant.
pub fn embed_doc<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> DocVector {
    let mut ids: Vec<usize> =
        tokens.iter().filter_map(|t| table.index_of(t.as_ref())).collect();
    let oov_count = tokens.len() - ids.len();
    ids.sort_unstable();

    let mut values = vec![0.0; table.dimension()];
    for &id in &ids {
        for (acc, v) in values.iter_mut().zip(table.row(id)) {
            *acc += v;
        }
    }
    if !ids.is_empty() {
        let n = ids.len() as f64;
        for v in &mut values {
            *v /= n;
        }
    }
    DocVector { values, contributing: ids.len(), oov_count }
}

/// Corpus-level out-of-vocabulary statistics from [`embed_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OovStats {
    pub documents: usize,
    pub total_tokens: usize,
    pub oov_tokens: usize,
    /// Indices of documents whose every token was out of vocabulary.
    pub all_oov_docs: Vec<usize>,
}

impl OovStats {
    pub fn oov_rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.oov_tokens as f64 / self.total_tokens as f64
        }
    }
}

/// Embed every document; row `i` of the matrix equals
/// `embed_doc(&docs[i], table)`. All-OOV documents are flagged, not rejected.
pub fn embed_corpus<S: AsRef<str>>(
    docs: &[Vec<S>],
    table: &EmbeddingTable,
) -> (Array2<f64>, OovStats) {
    let d = table.dimension();
    let mut matrix = Array2::zeros((docs.len(), d));
    let mut stats = OovStats { documents: docs.len(), ..Default::default() };
    for (i, tokens) in docs.iter().enumerate() {
        let doc = embed_doc(tokens, table);
        stats.total_tokens += tokens.len();
        stats.oov_tokens += doc.oov_count;
        if doc.contributing == 0 && !tokens.is_empty() {
            stats.all_oov_docs.push(i);
        }
        for (j, v) in doc.values.iter().enumerate() {
            matrix[[i, j]] = *v;
        }
    }
    (matrix, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TINY: &str = "2 3\nآب 0.1 0.2 0.3\nخاک 0.4 0.5 0.6\n";

    #[test]
    fn parses_a_headered_file() {
        let table = EmbeddingTable::parse(TINY, "tiny.vec").unwrap();
        assert_eq!(table.vocab_size(), 2);
        assert_eq!(table.dimension(), 3);
        assert_eq!(table.get("آب"), Some([0.1, 0.2, 0.3].as_slice()));
        assert_eq!(table.get("خاک"), Some([0.4, 0.5, 0.6].as_slice()));
        assert_eq!(table.get("باد"), None);
    }

    #[test]
    fn parses_a_headerless_file() {
        let table = EmbeddingTable::parse("a 1 2\nb 3 4\n", "glove.vec").unwrap();
        assert_eq!(table.dimension(), 2);
        assert_eq!(table.vocab_size(), 2);
    }

    #[test]
    fn rejects_inconsistent_component_counts() {
        let err = EmbeddingTable::parse("2 3\nآب 0.1 0.2 0.3\nخاک 0.4 0.5\n", "x").unwrap_err();
        match err {
            EmbeddingError::ComponentCount { line, expected, found } => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_numeric_and_non_finite_components() {
        let err = EmbeddingTable::parse("a x y\n", "x").unwrap_err();
        assert!(matches!(err, EmbeddingError::BadComponent { line: 1, index: 1, .. }));
        let err = EmbeddingTable::parse("a inf 1\n", "x").unwrap_err();
        assert!(matches!(err, EmbeddingError::BadComponent { .. }));
        let err = EmbeddingTable::parse("a NaN 1\n", "x").unwrap_err();
        assert!(matches!(err, EmbeddingError::BadComponent { .. }));
    }

    #[test]
    fn rejects_empty_and_zero_dimension() {
        assert!(matches!(EmbeddingTable::parse("", "x"), Err(EmbeddingError::Empty)));
        assert!(matches!(
            EmbeddingTable::parse("3 0\n", "x"),
            Err(EmbeddingError::ZeroDimension { line: 1 })
        ));
        assert!(matches!(
            EmbeddingTable::parse("word\n", "x"),
            Err(EmbeddingError::ZeroDimension { line: 1 })
        ));
    }

    #[test]
    fn rejects_header_vocab_mismatch() {
        let err = EmbeddingTable::parse("3 2\na 1 2\nb 3 4\n", "x").unwrap_err();
        assert!(matches!(err, EmbeddingError::VocabCountMismatch { declared: 3, found: 2 }));
    }

    #[test]
    fn duplicate_words_keep_the_first_vector() {
        let table = EmbeddingTable::parse("a 1 2\na 3 4\nb 5 6\n", "x").unwrap();
        assert_eq!(table.vocab_size(), 2);
        assert_eq!(table.get("a"), Some([1.0, 2.0].as_slice()));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let t1 = EmbeddingTable::parse(TINY, "a.vec").unwrap();
        let t2 = EmbeddingTable::parse(TINY, "b.vec").unwrap();
        assert!(t1.fingerprint().same_source(t2.fingerprint()));
        let t3 = EmbeddingTable::parse("1 3\nآب 0.1 0.2 0.3\n", "a.vec").unwrap();
        assert!(!t1.fingerprint().same_source(t3.fingerprint()));
    }

    #[test]
    fn write_then_reload_round_trips_exactly() {
        let table =
            EmbeddingTable::parse("a -0.5 1e-7 3.25\nb 0.1 -2.75 6.02e23\n", "x").unwrap();
        let mut buffer = Vec::new();
        table.write_vec(&mut buffer).unwrap();
        let reloaded = EmbeddingTable::parse(std::str::from_utf8(&buffer).unwrap(), "y").unwrap();
        assert_eq!(reloaded.dimension(), table.dimension());
        assert_eq!(reloaded.words().collect::<Vec<_>>(), table.words().collect::<Vec<_>>());
        for word in table.words() {
            assert_eq!(reloaded.get(word), table.get(word));
        }
    }

    #[test]
    fn single_token_doc_is_that_vector() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        let doc = embed_doc(&["آب"], &table);
        assert_eq!(doc.values, [0.1, 0.2, 0.3]);
        assert_eq!(doc.contributing, 1);
        assert_eq!(doc.oov_count, 0);
    }

    #[test]
    fn two_token_doc_is_the_componentwise_mean() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        let doc = embed_doc(&["آب", "خاک"], &table);
        assert_eq!(doc.values, [(0.1 + 0.4) / 2.0, (0.2 + 0.5) / 2.0, (0.3 + 0.6) / 2.0]);
    }

    #[test]
    fn all_oov_doc_is_zero() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        let doc = embed_doc(&["باد", "ابر"], &table);
        assert_eq!(doc.values, [0.0, 0.0, 0.0]);
        assert_eq!(doc.contributing, 0);
        assert_eq!(doc.oov_count, 2);
    }

    #[test]
    fn repeated_token_equals_single_token() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        assert_eq!(embed_doc(&["آب", "آب"], &table), embed_doc(&["آب"], &table));
    }

    #[test]
    fn pooled_norm_is_bounded_by_max_contributing_norm() {
        let table = EmbeddingTable::parse("a 3 4\nb -1 2\nc 0.5 -0.5\n", "x").unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let doc = embed_doc(&["a", "b", "c"], &table);
        let max_norm = ["a", "b", "c"]
            .iter()
            .map(|w| norm(table.get(w).unwrap()))
            .fold(0.0f64, f64::max);
        assert!(norm(&doc.values) <= max_norm + 1e-12);
    }

    #[test]
    fn corpus_rows_match_per_doc_embedding() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        let docs: Vec<Vec<&str>> = vec![
            vec!["آب"],
            vec!["خاک", "آب"],
            vec!["باد"],
            vec![],
            vec!["خاک", "خاک", "باد"],
        ];
        let (matrix, stats) = embed_corpus(&docs, &table);
        assert_eq!(matrix.nrows(), 5);
        for (i, doc) in docs.iter().enumerate() {
            let single = embed_doc(doc, &table);
            assert_eq!(matrix.row(i).to_vec(), single.values);
        }
        assert_eq!(stats.all_oov_docs, vec![2]);
        assert_eq!(stats.total_tokens, 7);
        assert_eq!(stats.oov_tokens, 2);
    }

    #[test]
    fn empty_corpus_embeds_to_zero_rows() {
        let table = EmbeddingTable::parse(TINY, "x").unwrap();
        let docs: Vec<Vec<&str>> = Vec::new();
        let (matrix, stats) = embed_corpus(&docs, &table);
        assert_eq!(matrix.shape(), [0, 3]);
        assert_eq!(stats.oov_rate(), 0.0);
    }

    proptest! {
        #[test]
        fn pooling_is_permutation_invariant(
            picks in proptest::collection::vec(0usize..4, 0..12),
            rotation in 0usize..12,
        ) {
            let table = EmbeddingTable::parse(
                "w0 1.5 -2 0.25\nw1 -0.125 3 7\nw2 9 0.5 -4\nw3 2 2 2\n",
                "x",
            ).unwrap();
            let tokens: Vec<String> = picks.iter().map(|i| format!("w{i}")).collect();
            let mut shuffled = tokens.clone();
            if !shuffled.is_empty() {
                shuffled.rotate_left(rotation % shuffled.len());
            }
            prop_assert_eq!(embed_doc(&tokens, &table), embed_doc(&shuffled, &table));
        }
    }
}
