//! Persian-aware text normalization, tokenization and token-level
//! substitution.
//!
//! Everything here is deterministic: identical inputs produce identical
//! outputs, byte for byte. [`normalize`] applies its cleanup steps in a
//! fixed order, [`tokenize`] splits on whitespace (ZWNJ is token-internal),
//! and [`apply_lexicon`] performs a single substitution pass over tokens.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

/// Zero-width non-joiner (U+200C), the intra-word control character of
/// Persian orthography.
pub const ZWNJ: char = '\u{200C}';

static URL_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("static regex"));

/// Flags gating the individual normalization steps.
///
/// The flags are independent and all default to enabled. Punctuation and
/// symbols are always mapped to single spaces regardless of the flags:
/// every downstream consumer (tokenizer, keyword matcher, embedding lookup)
/// expects letter/digit content only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    /// Map Arabic codepoints to their Persian equivalents (ي→ی, ك→ک, ة→ه)
    /// and Arabic-Indic / Extended Arabic-Indic digits to ASCII digits.
    pub unify_arabic_chars: bool,
    /// Drop the Arabic diacritics U+064B..=U+065F.
    pub strip_diacritics: bool,
    /// Collapse ZWNJ runs to a single ZWNJ and drop word-boundary ZWNJ.
    pub normalize_zwnj: bool,
    /// Remove `http://`, `https://` and `www.` spans.
    pub strip_urls: bool,
    /// Remove `@handle` mentions.
    pub strip_mentions: bool,
    /// Strip `#` off hashtags, keeping the body.
    pub unwrap_hashtags: bool,
    /// Collapse whitespace runs to single ASCII spaces and trim the ends.
    pub collapse_whitespace: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            unify_arabic_chars: true,
            strip_diacritics: true,
            normalize_zwnj: true,
            strip_urls: true,
            strip_mentions: true,
            unwrap_hashtags: true,
            collapse_whitespace: true,
        }
    }
}

fn is_arabic_diacritic(c: char) -> bool {
    ('\u{064B}'..='\u{065F}').contains(&c)
}

/// Characters that survive the punctuation pass: letters, digits, ZWNJ and
/// Arabic combining marks (which `strip_diacritics` may remove earlier).
fn is_kept(c: char) -> bool {
    c.is_alphanumeric() || c == ZWNJ || is_arabic_diacritic(c) || c == '\u{0670}'
}

fn unify_char(c: char) -> char {
    match c {
        '\u{064A}' => '\u{06CC}', // Arabic yeh → Farsi yeh
        '\u{0643}' => '\u{06A9}', // Arabic kaf → keheh
        '\u{0629}' => '\u{0647}', // teh marbuta → heh
        '\u{0660}'..='\u{0669}' => char::from(b'0' + (c as u32 - 0x0660) as u8),
        '\u{06F0}'..='\u{06F9}' => char::from(b'0' + (c as u32 - 0x06F0) as u8),
        _ => c,
    }
}

fn strip_mentions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '@' {
            let mut handle_len = 0;
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    chars.next();
                    handle_len += 1;
                } else {
                    break;
                }
            }
            if handle_len > 0 {
                out.push(' ');
            } else {
                out.push('@'); // bare '@' falls through to the punctuation pass
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn unwrap_hashtags(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let followed = chars.get(i + 1).is_some_and(|n| !n.is_whitespace());
        if c == '#' && followed {
            continue;
        }
        out.push(c);
    }
    out
}

fn normalize_zwnj_runs(text: &str) -> String {
    // Collapse runs to a single ZWNJ.
    let mut collapsed = String::with_capacity(text.len());
    let mut prev_zwnj = false;
    for c in text.chars() {
        if c == ZWNJ {
            if !prev_zwnj {
                collapsed.push(c);
            }
            prev_zwnj = true;
        } else {
            collapsed.push(c);
            prev_zwnj = false;
        }
    }
    // Keep a ZWNJ only when both neighbours survive the punctuation pass;
    // anything else is a word boundary and the ZWNJ is trimmed.
    let chars: Vec<char> = collapsed.chars().collect();
    let mut out = String::with_capacity(collapsed.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ZWNJ {
            let prev_ok = i > 0 && is_kept(chars[i - 1]);
            let next_ok = chars.get(i + 1).is_some_and(|&n| is_kept(n));
            if !(prev_ok && next_ok) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn map_punctuation(text: &str) -> String {
    text.chars()
        .map(|c| if is_kept(c) || c.is_whitespace() { c } else { ' ' })
        .collect()
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalize `text`, applying the enabled steps in a fixed order:
/// URL removal, mention removal, hashtag unwrapping, Arabic→Persian
/// unification, diacritic stripping, ZWNJ normalization, punctuation to
/// spaces, whitespace collapsing.
///
/// Total and idempotent: `normalize(normalize(t, c), c) == normalize(t, c)`.
pub fn normalize(text: &str, config: &NormalizationConfig) -> String {
    let mut s = if config.strip_urls {
        URL_RE.replace_all(text, " ").into_owned()
    } else {
        text.to_owned()
    };
    if config.strip_mentions {
        s = strip_mentions(&s);
    }
    if config.unwrap_hashtags {
        s = unwrap_hashtags(&s);
    }
    if config.unify_arabic_chars {
        s = s.chars().map(unify_char).collect();
    }
    if config.strip_diacritics {
        s.retain(|c| !is_arabic_diacritic(c));
    }
    if config.normalize_zwnj {
        s = normalize_zwnj_runs(&s);
    }
    s = map_punctuation(&s);
    if config.collapse_whitespace {
        s = collapse_whitespace(&s);
    }
    s
}

/// Character-level normalization for single surface forms (lexicon keys):
/// the unification, diacritic and ZWNJ steps of [`normalize`] without the
/// span-removal and whitespace machinery.
pub fn normalize_word(word: &str, config: &NormalizationConfig) -> String {
    let mut s = word.to_owned();
    if config.unify_arabic_chars {
        s = s.chars().map(unify_char).collect();
    }
    if config.strip_diacritics {
        s.retain(|c| !is_arabic_diacritic(c));
    }
    if config.normalize_zwnj {
        s = normalize_zwnj_runs(&s);
    }
    s
}

/// One whitespace-delimited token of a normalized text, with its byte span
/// in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Range<usize>,
}

impl Token {
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// Split a normalized text on whitespace. ZWNJ is token-internal, so
/// "می‌شود" stays one token. Spans index into `normalized`.
pub fn tokenize(normalized: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in normalized.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token { text: normalized[s..i].to_owned(), span: s..i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: normalized[s..].to_owned(), span: s..normalized.len() });
    }
    tokens
}

/// Errors raised while loading a replacement lexicon.
#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon: {0}")]
    Io(#[from] io::Error),
    #[error("lexicon line {line}: expected two tab-separated columns")]
    Columns { line: usize },
    #[error("lexicon line {line}: empty surface form")]
    EmptySurface { line: usize },
    #[error("lexicon line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("lexicon line {line}: key {key:?} maps to itself")]
    SelfMapping { line: usize, key: String },
}

/// Surface-form → replacement-form substitution table, applied token-wise.
///
/// File format: UTF-8, tab-separated, two columns (surface, replacement);
/// `#`-prefixed lines and blank lines are ignored. Keys are stored after
/// [`normalize_word`] so they match tokens produced by the same
/// configuration; keys must be unique and must not map to themselves after
/// that normalization. An empty replacement deletes the token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementLexicon {
    entries: HashMap<String, String>,
}

impl ReplacementLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse<R: BufRead>(reader: R, config: &NormalizationConfig) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(2, '\t');
            let surface = cols.next().unwrap_or("").trim();
            let replacement = match cols.next() {
                Some(r) => r.trim(),
                None => return Err(LexiconError::Columns { line: line_no }),
            };
            if surface.is_empty() {
                return Err(LexiconError::EmptySurface { line: line_no });
            }
            let key = normalize_word(surface, config);
            if key.is_empty() {
                return Err(LexiconError::EmptySurface { line: line_no });
            }
            if key == normalize_word(replacement, config) {
                return Err(LexiconError::SelfMapping { line: line_no, key });
            }
            if entries.contains_key(&key) {
                return Err(LexiconError::DuplicateKey { line: line_no, key });
            }
            entries.insert(key, replacement.to_owned());
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>, config: &NormalizationConfig) -> Result<Self, LexiconError> {
        Self::parse(BufReader::new(File::open(path)?), config)
    }

    /// Build a lexicon from in-memory pairs, with the same validation as
    /// [`ReplacementLexicon::parse`].
    pub fn from_pairs<I, K, V>(pairs: I, config: &NormalizationConfig) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let tsv: String = pairs
            .into_iter()
            .map(|(k, v)| format!("{}\t{}\n", k.as_ref(), v.as_ref()))
            .collect();
        Self::parse(tsv.as_bytes(), config)
    }

    pub fn get(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Replace every token whose text equals a lexicon key by the mapped form.
///
/// Single pass: replacement output is never looked up again. A multi-word
/// replacement expands into several tokens, all carrying the source span of
/// the token they replaced; an empty replacement deletes the token.
pub fn apply_lexicon(tokens: Vec<Token>, lexicon: &ReplacementLexicon) -> Vec<Token> {
    if lexicon.is_empty() {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        match lexicon.get(&token.text) {
            None => out.push(token),
            Some(replacement) => {
                for piece in replacement.split_whitespace() {
                    out.push(Token { text: piece.to_owned(), span: token.span.clone() });
                }
            }
        }
    }
    out
}
