//! Archive records and processed documents.

use serde::{Deserialize, Serialize};

use crate::textutil;

/// What a raw archive record holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    /// Raw HTML response body (WARC `response` record).
    Response,
    /// Pre-extracted plain text (WET `conversion` record).
    Conversion,
}

/// One record read from a WARC/WET shard.
///
/// `(snapshot_id, shard_id, offset)` uniquely identifies a record within a
/// corpus. For `Response` records the payload is the HTML body with any HTTP
/// envelope already stripped; for `Conversion` records it is plain text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub record_id: String,
    pub target_url: String,
    pub record_kind: RecordKind,
    pub payload: Vec<u8>,
    pub snapshot_id: String,
    pub shard_id: String,
    /// Byte offset of the record within the (decompressed) shard stream.
    pub offset: u64,
}

impl RawRecord {
    /// Payload decoded as UTF-8 with replacement characters.
    pub fn payload_text(&self) -> String {
        String::from_utf8_lossy(&self.payload).into_owned()
    }

    /// The document id derived from this record's position.
    pub fn doc_id(&self) -> String {
        doc_id_for(&self.shard_id, self.offset)
    }
}

/// Compose the positional document id `shard#offset`.
///
/// The offset is zero-padded so that lexicographic order on ids equals
/// numeric offset order within a shard.
pub fn doc_id_for(shard_id: &str, offset: u64) -> String {
    format!("{shard_id}#{offset:012}")
}

/// Which pipeline produced a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Web,
    Code,
    Math,
    OpenQa,
    Mcq,
}

/// A processed plain-text document with provenance.
///
/// `text` is the single source of truth: paragraphs are its newline-split
/// blocks and the character/word counts are derived, so the type cannot go
/// out of sync with itself. The serialized form (one JSON object per line)
/// carries exactly these six fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub url: String,
    pub snapshot_id: String,
    pub text: String,
    pub domain_tag: DomainTag,
    /// Names of the stages that transformed or passed this document,
    /// in execution order. Append-only.
    pub stage_trace: Vec<String>,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        url: impl Into<String>,
        snapshot_id: impl Into<String>,
        text: impl Into<String>,
        domain_tag: DomainTag,
    ) -> Self {
        Document {
            doc_id: doc_id.into(),
            url: url.into(),
            snapshot_id: snapshot_id.into(),
            text: text.into(),
            domain_tag,
            stage_trace: Vec::new(),
        }
    }

    /// Build a document directly from a record's payload text.
    pub fn from_record(record: &RawRecord, text: String, domain_tag: DomainTag) -> Self {
        Document {
            doc_id: record.doc_id(),
            url: record.target_url.clone(),
            snapshot_id: record.snapshot_id.clone(),
            text,
            domain_tag,
            stage_trace: Vec::new(),
        }
    }

    /// Newline-split blocks of `text`. `join("\n")` over these reconstructs
    /// `text` exactly.
    pub fn paragraphs(&self) -> impl Iterator<Item = &str> {
        self.text.split('\n')
    }

    /// Length of `text` in unicode scalar values.
    pub fn char_count(&self) -> usize {
        textutil::char_count(&self.text)
    }

    /// Whitespace-separated token count of `text`.
    pub fn word_count(&self) -> usize {
        textutil::token_count(&self.text)
    }

    pub fn push_stage(&mut self, stage: &str) {
        self.stage_trace.push(stage.to_string());
    }

    /// Corpus-position ordering key: `(snapshot_id, doc_id)`. Positional
    /// doc ids embed `shard#offset` (zero-padded), so this orders documents
    /// by (snapshot, shard, offset).
    pub fn order_key(&self) -> (&str, &str) {
        (&self.snapshot_id, &self.doc_id)
    }
}
