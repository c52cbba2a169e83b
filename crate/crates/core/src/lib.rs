//! Pipeline library turning a raw micro-blog corpus into a trained
//! four-class opinion classifier (gain / non-gain / non-losses / losses).
//!
//! The stages, each its own module:
//!
//! * [`corpus`] — line-delimited record ingestion and the collection funnel
//!   (dedup, language, engagement, keyword and influence filters).
//! * [`preprocess`] — deterministic Persian-aware normalization,
//!   tokenization and lexicon substitution.
//! * [`embedding`] — FastText-format `.vec` loading and mean pooling of
//!   token vectors into document vectors.
//! * [`classifier`] — L2-regularized multinomial logistic regression trained
//!   with a truncated-Newton (Newton-CG) optimizer, plus versioned model
//!   serialization.
//! * [`evaluation`] — stratified splitting, confusion-matrix metrics and the
//!   coding-reliability calculator.
//! * [`cli`] — the batch commands wiring everything together.

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod preprocess;
