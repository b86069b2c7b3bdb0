//! Line-oriented document persistence.
//!
//! Output shards are UTF-8 files with one JSON object per line carrying
//! exactly the [`Document`] fields. Each shard gets a `<shard>.manifest`
//! sidecar recording the record count, the byte size of the shard and a
//! 64-bit FNV-1a checksum of the concatenated document texts. Writes go
//! through a `.partial` file that is renamed into place only on success, so
//! an interrupted run leaves an obvious marker instead of a silently
//! truncated shard.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing;
use crate::record::Document;

/// Sidecar metadata for one shard file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub shard_id: String,
    pub record_count: u64,
    pub input_bytes: u64,
    /// 64-bit FNV-1a over the concatenated record payloads.
    pub checksum: u64,
}

pub fn manifest_path(shard_path: &Path) -> PathBuf {
    let mut name = shard_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest");
    shard_path.with_file_name(name)
}

pub fn write_manifest(shard_path: &Path, manifest: &ShardManifest) -> Result<()> {
    let path = manifest_path(shard_path);
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::format("manifest", &path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(shard_path: &Path) -> Result<ShardManifest> {
    let path = manifest_path(shard_path);
    let data = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&data).map_err(|e| Error::format("manifest", &path, e.to_string()))
}

/// A shard is complete when both file and manifest exist and the manifest's
/// byte count matches the file. Used for shard-granular resumption.
pub fn shard_is_complete(shard_path: &Path) -> bool {
    let Ok(meta) = std::fs::metadata(shard_path) else {
        return false;
    };
    match read_manifest(shard_path) {
        Ok(m) => m.input_bytes == meta.len(),
        Err(_) => false,
    }
}

/// Write documents to `out_path` (one JSON object per line) plus its
/// manifest sidecar. Returns the manifest.
pub fn write_documents<'a, I>(docs: I, out_path: &Path) -> Result<ShardManifest>
where
    I: IntoIterator<Item = &'a Document>,
{
    let partial = partial_path(out_path);
    let manifest = match write_lines(docs, &partial, out_path) {
        Ok(m) => m,
        Err(e) => {
            // Leave the .partial file in place as the cleanup marker.
            return Err(e);
        }
    };
    std::fs::rename(&partial, out_path).map_err(|e| Error::io(out_path, e))?;
    write_manifest(out_path, &manifest)?;
    Ok(manifest)
}

fn partial_path(out_path: &Path) -> PathBuf {
    let mut name = out_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".partial");
    out_path.with_file_name(name)
}

fn write_lines<'a, I>(docs: I, partial: &Path, out_path: &Path) -> Result<ShardManifest>
where
    I: IntoIterator<Item = &'a Document>,
{
    let file = File::create(partial).map_err(|e| Error::io(partial, e))?;
    let mut w = BufWriter::new(file);
    let mut count = 0u64;
    let mut bytes = 0u64;
    let mut checksum = hashing::FNV_OFFSET;
    for doc in docs {
        let line = serde_json::to_string(doc)
            .map_err(|e| Error::format("document", out_path, e.to_string()))?;
        w.write_all(line.as_bytes()).map_err(|e| Error::io(partial, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(partial, e))?;
        bytes += line.len() as u64 + 1;
        count += 1;
        checksum = hashing::fnv1a64_extend(checksum, doc.text.as_bytes());
    }
    w.flush().map_err(|e| Error::io(partial, e))?;
    Ok(ShardManifest {
        shard_id: crate::warc::shard_stem(out_path),
        record_count: count,
        input_bytes: bytes,
        checksum,
    })
}

/// Streaming reader over a document shard.
pub struct DocumentReader {
    lines: std::io::Lines<BufReader<File>>,
    path: PathBuf,
    line_no: u64,
}

impl DocumentReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(DocumentReader {
            lines: BufReader::new(file).lines(),
            path: path.to_path_buf(),
            line_no: 0,
        })
    }
}

impl Iterator for DocumentReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Err(e) => return Some(Err(Error::io(&self.path, e))),
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(serde_json::from_str(&line).map_err(|e| {
                        Error::format(
                            "document",
                            &self.path,
                            format!("line {}: {e}", self.line_no),
                        )
                    }));
                }
            }
        }
    }
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    DocumentReader::open(path)?.collect()
}
