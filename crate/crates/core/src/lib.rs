//! Corpus curation toolkit for web-archive data.
//!
//! `webcorpus` turns raw WARC/WET archive records into cleaned general-domain
//! text and domain-specific datasets (code, math, question answering). The
//! library is organized around small, pure building blocks that the pipeline
//! orchestrator composes into seven end-to-end pipelines:
//!
//! - `web_wet` / `web_warc` — general-domain text with paragraph
//!   deduplication (WET) or main-content extraction (WARC), language and
//!   quality-rule filtering, and MinHash-LSH document deduplication.
//! - `code` — pages carrying `<code>`/`<pre>` snippets, re-tagged into
//!   `<code-encode>` blocks interleaved with the surrounding prose.
//! - `math_html` / `math_ascii` — pages carrying tagged formulas (validated
//!   LaTeX / MathML) or plain-text math mined with a keyword gate plus a
//!   linear classifier.
//! - `open_qa` / `mcq` — question/answer pages mined with keyword grammars,
//!   and multiple-choice items re-rendered into a canonical block format.
//!
//! All filter thresholds live in [`filters::RuleThresholds`] and every stage
//! records auditable [`stats::StageStats`]. Processing is deterministic for a
//! fixed seed regardless of worker count.

pub mod classifier;
pub mod code;
pub mod dedup;
pub mod dom;
pub mod error;
pub mod extraction;
pub mod filters;
pub mod hashing;
pub mod math;
pub mod pipeline;
pub mod qa;
pub mod record;
pub mod stats;
pub mod store;
pub mod textutil;
pub mod warc;

pub use error::{Error, Result};
pub use record::{Document, DomainTag, RawRecord, RecordKind};
