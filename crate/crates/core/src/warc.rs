//! Streaming reader for WARC/1.0 framed archives (WARC and WET).
//!
//! Records look like:
//!
//! ```text
//! WARC/1.0\r\n
//! WARC-Type: conversion\r\n
//! WARC-Target-URI: http://example.com/\r\n
//! Content-Length: 12\r\n
//! \r\n
//! <12 payload bytes>\r\n
//! \r\n
//! ```
//!
//! The reader is resilient: a record with an inconsistent `Content-Length`,
//! missing headers or truncated payload is skipped and counted, after which
//! the reader re-synchronizes on the next `WARC/` version line. Only an
//! unreadable file is fatal. At most one record payload is held in memory
//! at a time.
//!
//! Gzip shards (single-stream or the usual member-per-record layout) are
//! detected by magic bytes; offsets then refer to the decompressed stream.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::bufread::MultiGzDecoder;

use crate::error::{Error, Result};
use crate::hashing;
use crate::record::{RawRecord, RecordKind};
use crate::store::ShardManifest;

/// Counters accumulated while reading one shard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReadStats {
    /// Records yielded to the caller.
    pub yielded: u64,
    /// Records dropped because their framing was broken.
    pub malformed: u64,
    /// Well-framed records dropped by policy: wrong WARC-Type for the
    /// requested kind, or response records with a non-HTML content type.
    pub skipped: u64,
}

enum Input {
    Plain(BufReader<File>),
    Gzip(BufReader<MultiGzDecoder<BufReader<File>>>),
}

impl Input {
    fn as_bufread(&mut self) -> &mut dyn BufRead {
        match self {
            Input::Plain(r) => r,
            Input::Gzip(r) => r,
        }
    }
}

/// Streaming WARC/WET record reader. Iterate it to get [`RawRecord`]s of
/// the requested kind in byte-offset order.
pub struct WarcReader {
    input: Input,
    kind: RecordKind,
    snapshot_id: String,
    shard_id: String,
    path: PathBuf,
    /// Current byte offset in the (decompressed) stream.
    pos: u64,
    stats: ReadStats,
    payload_checksum: u64,
    input_bytes: u64,
    done: bool,
    /// Set when the underlying stream failed mid-iteration.
    pub io_error: Option<std::io::Error>,
}

impl WarcReader {
    /// Open a shard. `shard_id` defaults to the file stem and `snapshot_id`
    /// to the parent directory name (the conventional layout is
    /// `<snapshot>/<shard>.warc[.gz]`); both can be overridden.
    pub fn open(path: &Path, kind: RecordKind) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut head = BufReader::new(file);
        let magic = head.fill_buf().map_err(|e| Error::io(path, e))?;
        let is_gzip = magic.len() >= 2 && magic[0] == 0x1f && magic[1] == 0x8b;
        let input = if is_gzip {
            Input::Gzip(BufReader::new(MultiGzDecoder::new(head)))
        } else {
            Input::Plain(head)
        };
        let shard_id = shard_stem(path);
        let snapshot_id = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".to_string());
        Ok(WarcReader {
            input,
            kind,
            snapshot_id,
            shard_id,
            path: path.to_path_buf(),
            pos: 0,
            stats: ReadStats::default(),
            payload_checksum: hashing::FNV_OFFSET,
            input_bytes: std::fs::metadata(path).map(|m| m.len()).unwrap_or(0),
            done: false,
            io_error: None,
        })
    }

    pub fn with_snapshot_id(mut self, snapshot_id: impl Into<String>) -> Self {
        self.snapshot_id = snapshot_id.into();
        self
    }

    pub fn with_shard_id(mut self, shard_id: impl Into<String>) -> Self {
        self.shard_id = shard_id.into();
        self
    }

    pub fn stats(&self) -> &ReadStats {
        &self.stats
    }

    /// Manifest of what a full read yielded. Call after exhausting the
    /// iterator. The checksum is 64-bit FNV-1a over the concatenated
    /// payloads of the yielded records.
    pub fn manifest(&self) -> ShardManifest {
        ShardManifest {
            shard_id: self.shard_id.clone(),
            record_count: self.stats.yielded,
            input_bytes: self.input_bytes,
            checksum: self.payload_checksum,
        }
    }

    /// Read one line (through `\n`). Returns `None` at EOF.
    fn read_line(&mut self) -> std::io::Result<Option<Vec<u8>>> {
        let mut buf = Vec::with_capacity(128);
        let n = self.input.as_bufread().read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.pos += n as u64;
        Ok(Some(buf))
    }

    /// Advance to the next `WARC/` version line. Returns the offset of that
    /// line, or `None` at EOF.
    fn seek_version_line(&mut self) -> std::io::Result<Option<u64>> {
        loop {
            let at = self.pos;
            match self.read_line()? {
                None => return Ok(None),
                Some(line) => {
                    if line.starts_with(b"WARC/") {
                        return Ok(Some(at));
                    }
                    // Between-record junk or mid-payload garbage from a
                    // previous malformed record: keep scanning.
                }
            }
        }
    }

    /// Parse the record starting after a version line at `offset`.
    /// `Ok(None)` means "skip this record" (malformed/skipped counters are
    /// updated by the caller via the returned ParseOutcome).
    fn next_record(&mut self) -> std::io::Result<Option<RawRecord>> {
        'records: loop {
            let offset = match self.seek_version_line()? {
                None => return Ok(None),
                Some(at) => at,
            };

            // Header block.
            let mut warc_type = None;
            let mut url = String::new();
            let mut record_id = None;
            let mut content_length: Option<u64> = None;
            loop {
                let line = match self.read_line()? {
                    None => {
                        self.stats.malformed += 1; // truncated header block
                        return Ok(None);
                    }
                    Some(l) => l,
                };
                let trimmed = trim_line(&line);
                if trimmed.is_empty() {
                    break;
                }
                if let Some((name, value)) = split_header(trimmed) {
                    match name.to_ascii_lowercase().as_str() {
                        "warc-type" => warc_type = Some(value.to_string()),
                        "warc-target-uri" => url = strip_angle_brackets(value).to_string(),
                        "warc-record-id" => record_id = Some(strip_angle_brackets(value).to_string()),
                        "content-length" => content_length = value.parse().ok(),
                        _ => {}
                    }
                }
            }

            let len = match content_length {
                Some(l) => l,
                None => {
                    self.stats.malformed += 1;
                    continue 'records;
                }
            };

            // Payload: exactly `len` bytes.
            let mut payload = vec![0u8; len as usize];
            if let Err(e) = self.input.as_bufread().read_exact(&mut payload) {
                if e.kind() == std::io::ErrorKind::UnexpectedEof {
                    self.stats.malformed += 1; // truncated payload
                    return Ok(None);
                }
                return Err(e);
            }
            self.pos += len;

            // Two line terminators close the record. Anything else means the
            // declared Content-Length was inconsistent: drop the record and
            // resync on the next version line.
            let mut consistent = true;
            for _ in 0..2 {
                match self.read_line()? {
                    None => break, // EOF right after final record is fine
                    Some(line) => {
                        if !trim_line(&line).is_empty() {
                            consistent = false;
                            break;
                        }
                    }
                }
            }
            if !consistent {
                self.stats.malformed += 1;
                continue 'records;
            }

            let kind = match warc_type.as_deref() {
                Some(t) if t.eq_ignore_ascii_case("response") => RecordKind::Response,
                Some(t) if t.eq_ignore_ascii_case("conversion") => RecordKind::Conversion,
                _ => {
                    // warcinfo/request/metadata records are part of normal
                    // shards; they are skipped, not malformed.
                    self.stats.skipped += 1;
                    continue 'records;
                }
            };
            if kind != self.kind {
                self.stats.skipped += 1;
                continue 'records;
            }

            if kind == RecordKind::Response {
                match strip_http_envelope(payload) {
                    Some(body) => payload = body,
                    None => {
                        // non-HTML response
                        self.stats.skipped += 1;
                        continue 'records;
                    }
                }
            }

            self.stats.yielded += 1;
            self.payload_checksum = hashing::fnv1a64_extend(self.payload_checksum, &payload);
            let record_id =
                record_id.unwrap_or_else(|| format!("{}#{offset:012}", self.shard_id));
            return Ok(Some(RawRecord {
                record_id,
                target_url: url,
                record_kind: kind,
                payload,
                snapshot_id: self.snapshot_id.clone(),
                shard_id: self.shard_id.clone(),
                offset,
            }));
        }
    }
}

impl Iterator for WarcReader {
    type Item = RawRecord;

    fn next(&mut self) -> Option<RawRecord> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(r)) => Some(r),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.io_error = Some(e);
                self.done = true;
                None
            }
        }
    }
}

/// Convenience wrapper: collect all records of `kind` from a shard along
/// with read statistics and the shard manifest.
pub fn read_records(
    path: &Path,
    kind: RecordKind,
) -> Result<(Vec<RawRecord>, ReadStats, ShardManifest)> {
    let mut reader = WarcReader::open(path, kind)?;
    let mut records = Vec::new();
    for r in reader.by_ref() {
        records.push(r);
    }
    if let Some(e) = reader.io_error.take() {
        return Err(Error::io(&reader.path, e));
    }
    let stats = reader.stats().clone();
    let manifest = reader.manifest();
    Ok((records, stats, manifest))
}

/// File stem without `.warc`/`.wet`/`.gz` suffixes.
pub fn shard_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut stem = name.as_str();
    for suffix in [".gz", ".warc", ".wet", ".jsonl"] {
        if let Some(s) = stem.strip_suffix(suffix) {
            stem = s;
        }
    }
    stem.to_string()
}

fn trim_line(line: &[u8]) -> &[u8] {
    let mut l = line;
    while let Some((&last, rest)) = l.split_last() {
        if last == b'\n' || last == b'\r' {
            l = rest;
        } else {
            break;
        }
    }
    l
}

fn split_header(line: &[u8]) -> Option<(String, &str)> {
    let text = std::str::from_utf8(line).ok()?;
    let (name, value) = text.split_once(':')?;
    Some((name.trim().to_string(), value.trim()))
}

fn strip_angle_brackets(v: &str) -> &str {
    v.trim_start_matches('<').trim_end_matches('>')
}

/// If the payload carries an HTTP response envelope, check its content type
/// and return the body. `None` means "skip: explicitly non-HTML".
/// Payloads without an envelope are passed through unchanged.
fn strip_http_envelope(payload: Vec<u8>) -> Option<Vec<u8>> {
    if !payload.starts_with(b"HTTP/") {
        return Some(payload);
    }
    let header_end = find_double_newline(&payload);
    let (head, body_at) = match header_end {
        Some((at, sep_len)) => (&payload[..at], at + sep_len),
        None => return Some(Vec::new()), // headers only, empty body
    };
    let head_text = String::from_utf8_lossy(head);
    for line in head_text.lines().skip(1) {
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-type") {
                let v = value.trim().to_ascii_lowercase();
                if !(v.contains("html") || v.contains("xhtml")) {
                    return None;
                }
                break;
            }
        }
    }
    Some(payload[body_at..].to_vec())
}

fn find_double_newline(bytes: &[u8]) -> Option<(usize, usize)> {
    let crlf = bytes.windows(4).position(|w| w == b"\r\n\r\n");
    let lf = bytes.windows(2).position(|w| w == b"\n\n");
    match (crlf, lf) {
        (Some(c), Some(l)) if l + 1 < c => Some((l, 2)),
        (Some(c), _) => Some((c, 4)),
        (None, Some(l)) => Some((l, 2)),
        (None, None) => None,
    }
}
