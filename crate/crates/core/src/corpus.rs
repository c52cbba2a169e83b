//! Corpus ingestion and the collection funnel.
//!
//! A corpus is a UTF-8 file with one JSON record per line (fields `id`,
//! `text`, `likes`, `comments`, `retweets`, optional `lang`, `created_at`,
//! `user_id`). [`run_funnel`] filters it through five fixed stages — dedup,
//! language, engagement, keyword match, influence threshold — and reports
//! per-stage counts plus per-keyword frequencies.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{normalize, NormalizationConfig};

/// Common Persian function words, used by the language heuristic.
static PERSIAN_STOPWORDS: Lazy<HashSet<&'static str>> = Lazy::new(|| {
    include_str!("data/stopwords_fa.txt")
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .collect()
});

/// Letters used in Persian but absent from Arabic.
const PERSIAN_DISTINCTIVE: [char; 4] = ['\u{067E}', '\u{0686}', '\u{0698}', '\u{06AF}'];

/// One raw micro-blog post with engagement counts.
///
/// `likes`, `comments` and `retweets` default to zero when absent; records
/// with a missing `id`/`text`, a negative or non-integer count, or an empty
/// (or whitespace-only) `text` or `id` are rejected at parse time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub likes: u64,
    #[serde(default)]
    pub comments: u64,
    #[serde(default)]
    pub retweets: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
}

impl TweetRecord {
    /// Engagement-weighted influence score: `likes + 2·comments + 3·retweets`
    /// (saturating at `u64::MAX`).
    pub fn influence_score(&self) -> u64 {
        self.likes
            .saturating_add(self.comments.saturating_mul(2))
            .saturating_add(self.retweets.saturating_mul(3))
    }

    /// True iff the record has at least one like, comment or retweet.
    pub fn has_engagement(&self) -> bool {
        self.likes > 0 || self.comments > 0 || self.retweets > 0
    }

    /// Language heuristic over the raw text; see [`is_persian_text`].
    pub fn is_persian(&self) -> bool {
        is_persian_text(&self.text, self.lang.as_deref())
    }
}

/// True iff `lang` is `"fa"`, or at least 60% of the alphabetic codepoints
/// are Arabic-script and the text carries a Persian signal: one of the
/// distinctive letters پ چ ژ گ or a bundled Persian function word.
///
/// A deterministic proxy, not a language identifier; Arabic text containing
/// shared function words can slip through.
pub fn is_persian_text(text: &str, lang: Option<&str>) -> bool {
    if lang == Some("fa") {
        return true;
    }
    let mut alphabetic = 0u64;
    let mut arabic_script = 0u64;
    for c in text.chars() {
        if c.is_alphabetic() {
            alphabetic += 1;
            if is_arabic_script(c) {
                arabic_script += 1;
            }
        }
    }
    if alphabetic == 0 || (arabic_script as f64) < 0.6 * alphabetic as f64 {
        return false;
    }
    text.chars().any(|c| PERSIAN_DISTINCTIVE.contains(&c))
        || text.split_whitespace().any(|w| PERSIAN_STOPWORDS.contains(w))
}

fn is_arabic_script(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

/// How [`parse_corpus`] treats malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines, recording a warning per line.
    Lenient,
}

/// A malformed line skipped in lenient mode.
#[derive(Debug, Clone)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

/// Result of parsing a corpus stream.
#[derive(Debug, Default)]
pub struct CorpusParse {
    pub records: Vec<TweetRecord>,
    /// Lines skipped in lenient mode; always empty in strict mode.
    pub skipped: Vec<LineIssue>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] io::Error),
    #[error("corpus line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn parse_record(line: &str) -> Result<TweetRecord, String> {
    let record: TweetRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.id.trim().is_empty() {
        return Err("empty id".to_owned());
    }
    if record.text.trim().is_empty() {
        return Err("empty text".to_owned());
    }
    Ok(record)
}

/// Parse a line-delimited record stream, preserving input order.
/// Blank lines are ignored. Line numbers are 1-based.
pub fn parse_corpus<R: BufRead>(reader: R, mode: ParseMode) -> Result<CorpusParse, CorpusError> {
    let mut parse = CorpusParse::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(record) => parse.records.push(record),
            Err(message) => match mode {
                ParseMode::Strict => return Err(CorpusError::Malformed { line: line_no, message }),
                ParseMode::Lenient => {
                    log::warn!("skipping corpus line {line_no}: {message}");
                    parse.skipped.push(LineIssue { line: line_no, message });
                }
            },
        }
    }
    Ok(parse)
}

pub fn load_corpus(path: impl AsRef<Path>, mode: ParseMode) -> Result<CorpusParse, CorpusError> {
    parse_corpus(BufReader::new(File::open(path)?), mode)
}

/// Write records one JSON object per line, in order.
pub fn write_corpus<W: Write>(records: &[TweetRecord], mut writer: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum KeywordError {
    #[error("failed to read keywords: {0}")]
    Io(#[from] io::Error),
    #[error("keywords line {line}: keyword is empty after normalization")]
    Empty { line: usize },
    #[error("keywords line {line}: duplicate keyword {keyword:?}")]
    Duplicate { line: usize, keyword: String },
}

/// Ordered set of normalized keywords (one per line in the source file).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<String>,
}

impl KeywordSet {
    /// Parse a one-keyword-per-line stream, normalizing each keyword with
    /// the same configuration used for record text.
    pub fn parse<R: BufRead>(reader: R, config: &NormalizationConfig) -> Result<Self, KeywordError> {
        let mut keywords = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let keyword = normalize(&line, config);
            if keyword.is_empty() {
                return Err(KeywordError::Empty { line: line_no });
            }
            if !seen.insert(keyword.clone()) {
                return Err(KeywordError::Duplicate { line: line_no, keyword });
            }
            keywords.push(keyword);
        }
        Ok(Self { keywords })
    }

    pub fn load(path: impl AsRef<Path>, config: &NormalizationConfig) -> Result<Self, KeywordError> {
        Self::parse(BufReader::new(File::open(path)?), config)
    }

    pub fn from_words<I, S>(words: I, config: &NormalizationConfig) -> Result<Self, KeywordError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: String = words.into_iter().map(|w| format!("{}\n", w.as_ref())).collect();
        Self::parse(joined.as_bytes(), config)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Every keyword occurring as a substring of an already-normalized text,
    /// in keyword order.
    pub fn matches_normalized<'a>(&'a self, normalized_text: &str) -> Vec<&'a str> {
        self.keywords
            .iter()
            .filter(|k| normalized_text.contains(k.as_str()))
            .map(String::as_str)
            .collect()
    }
}

/// Keywords matching a record's text after normalization, in keyword order.
///
/// Substring matching on the normalized text, so compounds and
/// ZWNJ-attached forms still hit their base keyword.
pub fn match_keywords<'a>(
    record: &TweetRecord,
    keywords: &'a KeywordSet,
    config: &NormalizationConfig,
) -> Vec<&'a str> {
    keywords.matches_normalized(&normalize(&record.text, config))
}

/// Remove duplicate records: first by id, then by whitespace-collapsed
/// normalized text. Input order is preserved and the first occurrence wins.
pub fn dedup(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    dedup_with(records, &NormalizationConfig::default())
}

/// [`dedup`] with an explicit normalization configuration for the text key.
pub fn dedup_with(records: Vec<TweetRecord>, config: &NormalizationConfig) -> Vec<TweetRecord> {
    let mut seen_ids = HashSet::new();
    let mut seen_texts = HashSet::new();
    records
        .into_iter()
        .filter(|record| {
            if !seen_ids.insert(record.id.clone()) {
                return false;
            }
            seen_texts.insert(normalize(&record.text, config))
        })
        .collect()
}

/// Keep exactly the records with `influence_score() >= threshold`
/// (inclusive boundary), order preserved.
pub fn filter_influential(records: Vec<TweetRecord>, threshold: u64) -> Vec<TweetRecord> {
    records.into_iter().filter(|r| r.influence_score() >= threshold).collect()
}

/// One of the four opinion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpinionLabel {
    Gain,
    NonGain,
    NonLosses,
    Losses,
}

/// Super-category an opinion class belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuperCategory {
    Proactive,
    Preventive,
}

#[derive(Debug, Error)]
#[error("unknown label {0:?} (expected gain, non-gain, non-losses or losses)")]
pub struct UnknownLabel(pub String);

impl OpinionLabel {
    /// The fixed class order used everywhere: gain, non-gain, non-losses, losses.
    pub const ALL: [OpinionLabel; 4] =
        [Self::Gain, Self::NonGain, Self::NonLosses, Self::Losses];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gain => "gain",
            Self::NonGain => "non-gain",
            Self::NonLosses => "non-losses",
            Self::Losses => "losses",
        }
    }

    /// Index in [`OpinionLabel::ALL`].
    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|l| l == self).expect("label in ALL")
    }

    pub fn super_category(&self) -> SuperCategory {
        match self {
            Self::Gain | Self::NonGain => SuperCategory::Proactive,
            Self::NonLosses | Self::Losses => SuperCategory::Preventive,
        }
    }

    /// Class names in the fixed order, for model construction.
    pub fn class_names() -> Vec<String> {
        Self::ALL.iter().map(|l| l.as_str().to_owned()).collect()
    }
}

impl fmt::Display for OpinionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OpinionLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| UnknownLabel(s.to_owned()))
    }
}

/// Settings for [`run_funnel`].
#[derive(Debug, Clone)]
pub struct FunnelConfig {
    /// Inclusive minimum influence score; records scoring exactly the
    /// threshold are kept.
    pub influence_threshold: u64,
    pub normalization: NormalizationConfig,
}

impl Default for FunnelConfig {
    fn default() -> Self {
        Self { influence_threshold: 600, normalization: NormalizationConfig::default() }
    }
}

/// Input/output counts of one funnel stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunnelStage {
    pub name: &'static str,
    pub input: usize,
    pub output: usize,
}

/// Per-stage counts and per-keyword frequencies of a funnel run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunnelReport {
    pub stages: Vec<FunnelStage>,
    /// Keyword → number of surviving records matching it, in keyword order.
    /// A record counts once per keyword it matches.
    pub keyword_counts: Vec<(String, usize)>,
}

impl FunnelReport {
    pub fn initial_count(&self) -> usize {
        self.stages.first().map_or(0, |s| s.input)
    }

    pub fn final_count(&self) -> usize {
        self.stages.last().map_or(0, |s| s.output)
    }
}

impl fmt::Display for FunnelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "collection funnel")?;
        writeln!(f, "{:<12} {:>8} {:>8}", "stage", "in", "out")?;
        for stage in &self.stages {
            writeln!(f, "{:<12} {:>8} {:>8}", stage.name, stage.input, stage.output)?;
        }
        writeln!(f)?;
        writeln!(f, "keyword frequency (surviving records)")?;
        let total: usize = self.keyword_counts.iter().map(|(_, n)| n).sum();
        for (keyword, count) in &self.keyword_counts {
            writeln!(f, "{keyword}\t{count}")?;
        }
        writeln!(f, "total\t{total}")?;
        Ok(())
    }
}

/// Run the five-stage funnel in fixed order: dedup → language → engagement →
/// keyword → influence.
///
/// Records are normalized once up front; every predicate operates on the
/// normalized text, while the surviving records are returned unchanged. An
/// empty result is legal and only logged.
pub fn run_funnel(
    records: Vec<TweetRecord>,
    keywords: &KeywordSet,
    config: &FunnelConfig,
) -> (Vec<TweetRecord>, FunnelReport) {
    let mut stages = Vec::with_capacity(5);

    let mut current: Vec<(TweetRecord, String)> = records
        .into_iter()
        .map(|r| {
            let normalized = normalize(&r.text, &config.normalization);
            (r, normalized)
        })
        .collect();

    // dedup: by id, then by normalized text, first occurrence kept
    let input = current.len();
    let mut seen_ids = HashSet::new();
    let mut seen_texts = HashSet::new();
    current.retain(|(record, normalized)| {
        seen_ids.insert(record.id.clone()) && seen_texts.insert(normalized.clone())
    });
    stages.push(FunnelStage { name: "dedup", input, output: current.len() });

    // language
    let input = current.len();
    current.retain(|(record, normalized)| is_persian_text(normalized, record.lang.as_deref()));
    stages.push(FunnelStage { name: "language", input, output: current.len() });

    // engagement
    let input = current.len();
    current.retain(|(record, _)| record.has_engagement());
    stages.push(FunnelStage { name: "engagement", input, output: current.len() });

    // keyword relevance
    let input = current.len();
    current.retain(|(_, normalized)| !keywords.matches_normalized(normalized).is_empty());
    stages.push(FunnelStage { name: "keyword", input, output: current.len() });

    // influence threshold (inclusive)
    let input = current.len();
    current.retain(|(record, _)| record.influence_score() >= config.influence_threshold);
    stages.push(FunnelStage { name: "influence", input, output: current.len() });

    let keyword_counts = keywords
        .iter()
        .map(|keyword| {
            let count = current.iter().filter(|(_, n)| n.contains(keyword)).count();
            (keyword.to_owned(), count)
        })
        .collect();

    let survivors: Vec<TweetRecord> = current.into_iter().map(|(r, _)| r).collect();
    if survivors.is_empty() {
        log::warn!("funnel produced an empty corpus");
    }
    (survivors, FunnelReport { stages, keyword_counts })
}
