//! Fuzzy document deduplication: MinHash signatures with LSH banding.
//!
//! 117 signature values from the universal family
//! `h_i(x) = (a_i*x + b_i) mod (2^61 - 1)` over 64-bit shingle hashes of
//! word 5-grams, banded as 9 bands of 13 rows. Collisions in any band make
//! a candidate pair; union-find closes the relation and the earliest
//! document of each cluster is kept. The banding characteristic threshold
//! `(1/9)^(1/13)` sits near 0.84 Jaccard similarity.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hashing::{self, LinearHash, MERSENNE_PRIME_61};
use crate::record::Document;
use crate::textutil;

pub const SIGNATURE_LEN: usize = 117;
pub const BANDS: usize = 9;
pub const BAND_ROWS: usize = 13;

/// Words per shingle.
pub const SHINGLE_WORDS: usize = 5;

/// Default seed for the permutation family.
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;

/// Shingle set of a document: 64-bit hashes of its consecutive word
/// 5-grams after lowercase/whitespace normalization (digits kept).
/// Documents with fewer than five words yield the singleton shingle of the
/// whole normalized text.
pub fn shingles(text: &str) -> Vec<u64> {
    let normalized = textutil::normalize(text, false);
    let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
    let mut set: Vec<u64> = if words.len() < SHINGLE_WORDS {
        vec![hashing::hash64(normalized.as_bytes())]
    } else {
        words
            .windows(SHINGLE_WORDS)
            .map(|w| hashing::hash64(w.join(" ").as_bytes()))
            .collect()
    };
    set.sort_unstable();
    set.dedup();
    set
}

/// One document's MinHash signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    pub doc_id: String,
    /// Exactly [`SIGNATURE_LEN`] values, each `< 2^61 - 1`.
    pub values: Vec<u64>,
}

/// LSH band key: which band, and the digest of its 13 signature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BandKey {
    pub band_index: u8,
    pub digest: u64,
}

/// The fixed permutation family for one seed.
#[derive(Debug, Clone)]
pub struct MinHasher {
    perms: Vec<LinearHash>,
}

impl MinHasher {
    /// Draw `a_i in [1, p-1]`, `b_i in [0, p-1]` from a seeded generator.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms = (0..SIGNATURE_LEN)
            .map(|_| LinearHash {
                a: rng.random_range(1..MERSENNE_PRIME_61),
                b: rng.random_range(0..MERSENNE_PRIME_61),
            })
            .collect();
        MinHasher { perms }
    }

    /// Signature of an explicit shingle set.
    pub fn signature_of_set(&self, doc_id: &str, set: &[u64]) -> Result<MinHashSignature> {
        if set.is_empty() {
            return Err(Error::InvalidInput(format!(
                "cannot sign empty shingle set for {doc_id}"
            )));
        }
        let values = self
            .perms
            .iter()
            .map(|h| set.iter().map(|&x| h.eval(x)).min().expect("nonempty"))
            .collect();
        Ok(MinHashSignature { doc_id: doc_id.to_string(), values })
    }

    /// Signature of a document's text.
    pub fn signature(&self, doc: &Document) -> Result<MinHashSignature> {
        if doc.text.is_empty() {
            return Err(Error::InvalidInput(format!("empty text in {}", doc.doc_id)));
        }
        self.signature_of_set(&doc.doc_id, &shingles(&doc.text))
    }
}

/// Fraction of equal positions between two signatures; an unbiased estimate
/// of the Jaccard similarity of the underlying sets.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> f64 {
    let equal = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    equal as f64 / a.values.len() as f64
}

/// The 9 band keys of a signature. Equal 13-value sub-vectors yield equal
/// digests.
pub fn band_keys(sig: &MinHashSignature) -> [BandKey; BANDS] {
    debug_assert_eq!(sig.values.len(), SIGNATURE_LEN);
    std::array::from_fn(|band| {
        let rows = &sig.values[band * BAND_ROWS..(band + 1) * BAND_ROWS];
        BandKey { band_index: band as u8, digest: hashing::hash64_values(rows) }
    })
}

/// The LSH characteristic threshold `(1/bands)^(1/rows)`.
pub fn exact_near_threshold() -> f64 {
    lsh_threshold(BANDS as u32, BAND_ROWS as u32)
}

pub fn lsh_threshold(bands: u32, rows: u32) -> f64 {
    (1.0 / bands as f64).powf(1.0 / rows as f64)
}

/// A group of mutually-duplicate documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DupCluster {
    /// The member kept by `deduplicate`: minimal under corpus position
    /// order `(snapshot_id, doc_id)`.
    pub representative: String,
    /// All members (representative included), sorted.
    pub member_doc_ids: Vec<String>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // deterministic: smaller index wins
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Union-find closure over collision pairs. The representative of each
/// cluster is its lexicographically minimal doc id (callers with richer
/// position information re-select afterwards).
pub fn cluster<I>(pairs: I) -> Vec<DupCluster>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (a, b) in pairs {
        let ia = *index.entry(a.clone()).or_insert_with(|| {
            ids.push(a);
            ids.len() - 1
        });
        let ib = *index.entry(b.clone()).or_insert_with(|| {
            ids.push(b);
            ids.len() - 1
        });
        edges.push((ia, ib));
    }
    let mut uf = UnionFind::new(ids.len());
    for (a, b) in edges {
        uf.union(a, b);
    }
    let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(id.clone());
    }
    let mut clusters: Vec<DupCluster> = groups
        .into_values()
        .filter(|members| members.len() > 1)
        .map(|mut members| {
            members.sort();
            DupCluster { representative: members[0].clone(), member_doc_ids: members }
        })
        .collect();
    clusters.sort_by(|a, b| a.representative.cmp(&b.representative));
    clusters
}

/// Full deduplication: sign every document, bucket band keys, close the
/// collision relation and keep one representative per cluster (the earliest
/// document by `(snapshot_id, doc_id)`). Documents outside any cluster are
/// all kept; input order is preserved in the output.
///
/// Within a bucket, pairs are emitted against the bucket's first member
/// rather than all-pairs; union-find produces the same final clustering in
/// linear output size.
pub fn deduplicate(docs: Vec<Document>, seed: u64) -> (Vec<Document>, Vec<DupCluster>) {
    let hasher = MinHasher::new(seed);
    let signatures: Vec<Option<MinHashSignature>> = docs
        .par_iter()
        .map(|d| hasher.signature(d).ok())
        .collect();

    let mut buckets: HashMap<BandKey, usize> = HashMap::new();
    let mut uf = UnionFind::new(docs.len());
    for (i, sig) in signatures.iter().enumerate() {
        let Some(sig) = sig else { continue };
        for key in band_keys(sig) {
            match buckets.entry(key) {
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert(i);
                }
                std::collections::hash_map::Entry::Occupied(o) => {
                    uf.union(*o.get(), i);
                }
            }
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..docs.len() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }

    let mut keep = vec![true; docs.len()];
    let mut clusters = Vec::new();
    for members in groups.into_values() {
        if members.len() < 2 {
            continue;
        }
        let rep = *members
            .iter()
            .min_by_key(|&&i| docs[i].order_key())
            .expect("nonempty group");
        for &i in &members {
            keep[i] = i == rep;
        }
        let mut member_ids: Vec<String> =
            members.iter().map(|&i| docs[i].doc_id.clone()).collect();
        member_ids.sort();
        clusters.push(DupCluster {
            representative: docs[rep].doc_id.clone(),
            member_doc_ids: member_ids,
        });
    }
    clusters.sort_by(|a, b| a.representative.cmp(&b.representative));

    let kept = docs
        .into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect();
    (kept, clusters)
}

/// Write signatures as `doc_id<TAB>117 space-separated decimal values`
/// lines, the resumable spill format.
pub fn write_signatures(sigs: &[MinHashSignature], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for sig in sigs {
        let values: Vec<String> = sig.values.iter().map(u64::to_string).collect();
        writeln!(w, "{}\t{}", sig.doc_id, values.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_signatures(path: &Path) -> Result<Vec<MinHashSignature>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |d: &str| Error::format("signature file", path, format!("line {}: {d}", no + 1));
        let (id, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
        let values: Vec<u64> = rest
            .split(' ')
            .map(|v| v.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("bad value"))?;
        if values.len() != SIGNATURE_LEN {
            return Err(bad(&format!("expected {SIGNATURE_LEN} values, got {}", values.len())));
        }
        out.push(MinHashSignature { doc_id: id.to_string(), values });
    }
    Ok(out)
}

/// Write `representative<TAB>member,member,...` lines.
pub fn write_cluster_report(clusters: &[DupCluster], path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in clusters {
        out.push_str(&c.representative);
        out.push('\t');
        out.push_str(&c.member_doc_ids.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
