//! End-to-end pipeline orchestration.
//!
//! Seven pipelines share one execution scheme:
//!
//! - **Phase A** runs per-shard work (reading, parsing, per-record
//!   extraction) on a worker pool, checkpointing each shard's intermediate
//!   documents under `<output_dir>/work/`. Completed shards are skipped on
//!   resume, which makes runs restartable at shard granularity.
//! - **Phase B** runs the cross-shard stages (paragraph deduplication,
//!   filtering, MinHash deduplication) single-threaded over the documents
//!   sorted by corpus position, then writes one output shard per input
//!   shard plus `run_report.json`.
//!
//! Outputs are byte-identical for a fixed (inputs, config, seed) regardless
//! of worker count: phase A is per-shard pure, phase B is ordered.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{NgramModel, ScoreFile, ScoreSource};
use crate::code::{self, CodeDocConfig};
use crate::dedup;
use crate::dom;
use crate::error::{Error, Result};
use crate::extraction::{self, DedupScope, MainContentConfig};
use crate::filters::{self, FilterReport, RuleThresholds, WebSource};
use crate::hashing;
use crate::math::{self, MathKeywordSets};
use crate::qa::{self, QaKeywordSets};
use crate::record::{Document, DomainTag, RawRecord, RecordKind};
use crate::stats::{RunReport, StageStats};
use crate::store;
use crate::warc::{self, WarcReader};

/// Default run seed (drives MinHash permutations).
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    WebWet,
    WebWarc,
    Code,
    MathHtml,
    MathAscii,
    OpenQa,
    Mcq,
}

impl PipelineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineKind::WebWet => "web_wet",
            PipelineKind::WebWarc => "web_warc",
            PipelineKind::Code => "code",
            PipelineKind::MathHtml => "math_html",
            PipelineKind::MathAscii => "math_ascii",
            PipelineKind::OpenQa => "open_qa",
            PipelineKind::Mcq => "mcq",
        }
    }
}

impl std::str::FromStr for PipelineKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "web_wet" => Ok(PipelineKind::WebWet),
            "web_warc" => Ok(PipelineKind::WebWarc),
            "code" => Ok(PipelineKind::Code),
            "math_html" => Ok(PipelineKind::MathHtml),
            "math_ascii" => Ok(PipelineKind::MathAscii),
            "open_qa" => Ok(PipelineKind::OpenQa),
            "mcq" => Ok(PipelineKind::Mcq),
            other => Err(format!(
                "unknown pipeline {other:?} (expected web_wet, web_warc, code, math_html, math_ascii, open_qa, mcq)"
            )),
        }
    }
}

/// Full run configuration. The TOML config file mirrors these field names;
/// command-line flags override file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub pipeline: PipelineKind,
    pub input_paths: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub dedup_scope: DedupScope,
    pub thresholds: RuleThresholds,
    /// role -> model or score file. Roles: `lang_id`, `quality`,
    /// `ascii_math`, `open_qa`, `code_lang`. Files are detected by
    /// content: the binary model magic, otherwise `doc_id<TAB>score`
    /// lines.
    pub model_paths: BTreeMap<String, PathBuf>,
    pub seed: u64,
    pub workers: usize,
    /// Override the snapshot id derived from each shard's parent
    /// directory name.
    pub snapshot_id: Option<String>,
    /// Emit per-document FilterReport sidecars (`<shard>.audit.jsonl`).
    pub audit: bool,
    /// Test hook: hard-exit the process after this many phase-A shards,
    /// simulating a crash for resume testing.
    pub abort_after_shards: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: Vec::new(),
            output_dir: PathBuf::from("out"),
            dedup_scope: DedupScope::Snapshot,
            thresholds: RuleThresholds::default(),
            model_paths: BTreeMap::new(),
            seed: DEFAULT_SEED,
            workers: 1,
            snapshot_id: None,
            audit: false,
            abort_after_shards: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format("config", path, e.to_string()))
    }

    /// Stable digest of the semantic configuration. Output location,
    /// worker count and test hooks are execution details and excluded, so
    /// replaying the same inputs elsewhere fingerprints identically.
    pub fn fingerprint(&self) -> u64 {
        let semantic = (
            self.pipeline.as_str(),
            self.input_paths.iter().map(|p| p.to_string_lossy().into_owned()).collect::<Vec<_>>(),
            format!("{:?}", self.dedup_scope),
            toml::to_string(&self.thresholds).unwrap_or_default(),
            self.model_paths
                .iter()
                .map(|(k, v)| format!("{k}={}", v.to_string_lossy()))
                .collect::<Vec<_>>(),
            self.seed,
            self.snapshot_id.clone().unwrap_or_default(),
        );
        let encoded = serde_json::to_string(&semantic).unwrap_or_default();
        hashing::hash64(encoded.as_bytes())
    }
}

/// A loaded scorer: trained model or imported score file.
pub enum RoleScorer {
    Model(NgramModel),
    Scores(ScoreFile),
}

impl RoleScorer {
    pub fn load(path: &Path) -> Result<RoleScorer> {
        let mut magic = [0u8; 4];
        {
            use std::io::Read;
            let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
            if n < 4 {
                return Err(Error::format("model/score file", path, "file too short"));
            }
        }
        if &magic == b"WCNG" {
            Ok(RoleScorer::Model(NgramModel::load(path)?))
        } else {
            Ok(RoleScorer::Scores(ScoreFile::load(path)?))
        }
    }

    fn source(&self) -> ScoreSource<'_> {
        match self {
            RoleScorer::Model(m) => ScoreSource::Model(m),
            RoleScorer::Scores(s) => ScoreSource::File(s),
        }
    }

    fn score_for(&self, doc: &Document) -> Option<f64> {
        self.source().score_for(doc)
    }
}

/// Check a config without running it. Empty result means runnable.
pub fn validate(cfg: &PipelineConfig) -> Vec<String> {
    let mut diags = Vec::new();
    if cfg.input_paths.is_empty() {
        diags.push("no input paths configured".into());
    }
    for p in &cfg.input_paths {
        if !p.exists() {
            diags.push(format!("input path does not exist: {}", p.display()));
        }
    }
    diags.extend(cfg.thresholds.diagnostics());
    if cfg.workers == 0 {
        diags.push("workers must be at least 1".into());
    }
    for (role, path) in &cfg.model_paths {
        match RoleScorer::load(path) {
            Ok(_) => {}
            Err(e) => diags.push(format!("model for role {role}: {e}")),
        }
    }
    if cfg.pipeline == PipelineKind::MathAscii && !cfg.model_paths.contains_key("ascii_math") {
        diags.push("model required for ascii path (role ascii_math)".into());
    }
    diags
}

/// Expand configured inputs (files or directories) into the sorted shard
/// list.
fn resolve_shards(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let mut shards = Vec::new();
    for input in &cfg.input_paths {
        if input.is_dir() {
            let entries = std::fs::read_dir(input).map_err(|e| Error::io(input, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| Error::io(input, e))?;
                let path = entry.path();
                if path.is_file() && !path.to_string_lossy().ends_with(".manifest") {
                    shards.push(path);
                }
            }
        } else {
            shards.push(input.clone());
        }
    }
    shards.sort_by_key(|p| (snapshot_of(p, cfg), warc::shard_stem(p)));
    Ok(shards)
}

fn snapshot_of(path: &Path, cfg: &PipelineConfig) -> String {
    cfg.snapshot_id.clone().unwrap_or_else(|| {
        path.parent()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".to_string())
    })
}

/// Per-shard result of phase A.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhaseAOutput {
    shard_stem: String,
    stats: Vec<StageStats>,
    #[serde(skip)]
    docs: Vec<Document>,
}

struct Loaded {
    scorers: BTreeMap<String, RoleScorer>,
    code_cfg: CodeDocConfig,
    math_sets: MathKeywordSets,
    qa_sets: QaKeywordSets,
    main_cfg: MainContentConfig,
}

fn read_shard_records(path: &Path, kind: RecordKind, cfg: &PipelineConfig) -> Result<(Vec<RawRecord>, StageStats)> {
    let mut reader = WarcReader::open(path, kind)?;
    if let Some(snapshot) = &cfg.snapshot_id {
        reader = reader.with_snapshot_id(snapshot.clone());
    }
    let mut records = Vec::new();
    for r in reader.by_ref() {
        records.push(r);
    }
    if let Some(e) = reader.io_error.take() {
        return Err(Error::io(path, e));
    }
    let mut stats = StageStats::new("read");
    let rs = reader.stats();
    for _ in 0..rs.malformed {
        stats.hit("malformed_record");
    }
    for _ in 0..rs.skipped {
        stats.hit("skipped_record");
    }
    Ok((records, stats))
}

/// Phase A for one shard: everything that only needs the shard itself.
fn phase_a_shard(path: &Path, cfg: &PipelineConfig, loaded: &Loaded) -> Result<PhaseAOutput> {
    let shard_stem = warc::shard_stem(path);
    let mut stages: Vec<StageStats> = Vec::new();

    let docs = match cfg.pipeline {
        PipelineKind::WebWet | PipelineKind::OpenQa => {
            let (records, mut read) = read_shard_records(path, RecordKind::Conversion, cfg)?;
            let mut docs = Vec::with_capacity(records.len());
            for r in &records {
                let doc = Document::from_record(r, r.payload_text(), DomainTag::Web);
                read.observe_in(&doc);
                read.observe_out(&doc);
                docs.push(doc);
            }
            stages.push(read);
            docs
        }
        PipelineKind::WebWarc => {
            let (records, mut read) = read_shard_records(path, RecordKind::Response, cfg)?;
            let mut main = StageStats::new("main_content");
            let mut docs = Vec::new();
            for r in &records {
                let doc = Document::from_record(r, r.payload_text(), DomainTag::Web);
                read.observe_in(&doc);
                read.observe_out(&doc);
                main.observe_in(&doc);
                let tree = dom::strip_hidden(&dom::parse_html(&r.payload, &r.target_url));
                match extraction::extract_main_content(&tree, &loaded.main_cfg) {
                    Some(text) => {
                        let mut doc = Document::from_record(r, text, DomainTag::Web);
                        doc.push_stage("main_content");
                        main.observe_out(&doc);
                        docs.push(doc);
                    }
                    None => main.hit("no_main_content"),
                }
            }
            stages.push(read);
            stages.push(main);
            docs
        }
        PipelineKind::Code => {
            let (records, mut read) = read_shard_records(path, RecordKind::Response, cfg)?;
            let mut pre = StageStats::new("code_prefilter");
            let mut extract = StageStats::new("code_extract");
            let lang_model = loaded.scorers.get("code_lang").and_then(|s| match s {
                RoleScorer::Model(m) => Some(m),
                RoleScorer::Scores(_) => None,
            });
            let lang_name = cfg
                .model_paths
                .get("code_lang")
                .and_then(|p| p.file_stem())
                .map(|s| {
                    let s = s.to_string_lossy();
                    let mut c = s.chars();
                    match c.next() {
                        Some(first) => first.to_uppercase().collect::<String>() + c.as_str(),
                        None => String::new(),
                    }
                })
                .unwrap_or_default();
            let tagger = lang_model.map(|model| code::LangTagger { model, lang_name });
            let mut docs = Vec::new();
            for r in &records {
                let raw = Document::from_record(r, r.payload_text(), DomainTag::Code);
                read.observe_in(&raw);
                read.observe_out(&raw);
                pre.observe_in(&raw);
                if !code::code_prefilter(r, &loaded.code_cfg) {
                    pre.hit("code_prefilter");
                    continue;
                }
                pre.observe_out(&raw);
                extract.observe_in(&raw);
                match code::extract_code_document(r, &loaded.code_cfg, tagger.as_ref()) {
                    Some(doc) => {
                        extract.observe_out(&doc);
                        docs.push(doc);
                    }
                    None => extract.hit("no_code_candidate"),
                }
            }
            stages.push(read);
            stages.push(pre);
            stages.push(extract);
            docs
        }
        PipelineKind::MathHtml => {
            let (records, mut read) = read_shard_records(path, RecordKind::Response, cfg)?;
            let mut pre = StageStats::new("math_prefilter");
            let mut extract = StageStats::new("math_extract");
            let mut docs = Vec::new();
            for r in &records {
                let raw = Document::from_record(r, r.payload_text(), DomainTag::Math);
                read.observe_in(&raw);
                read.observe_out(&raw);
                pre.observe_in(&raw);
                if !math::html_math_prefilter(r, &loaded.math_sets) {
                    pre.hit("math_prefilter");
                    continue;
                }
                pre.observe_out(&raw);
                extract.observe_in(&raw);
                match math::extract_math_document(r, math::MathPath::Html, None, &loaded.math_sets)? {
                    Some(doc) => {
                        extract.observe_out(&doc);
                        docs.push(doc);
                    }
                    None => extract.hit("no_valid_formula"),
                }
            }
            stages.push(read);
            stages.push(pre);
            stages.push(extract);
            docs
        }
        PipelineKind::MathAscii => {
            let (records, mut read) = read_shard_records(path, RecordKind::Response, cfg)?;
            let mut main = StageStats::new("main_content");
            let mut gate = StageStats::new("math_gate");
            let mut model_stage = StageStats::new("math_model");
            let scorer = loaded
                .scorers
                .get("ascii_math")
                .ok_or_else(|| Error::Config("model required for ascii path".into()))?;
            let mut docs = Vec::new();
            for r in &records {
                let raw = Document::from_record(r, r.payload_text(), DomainTag::Math);
                read.observe_in(&raw);
                read.observe_out(&raw);
                main.observe_in(&raw);
                let tree = dom::strip_hidden(&dom::parse_html(&r.payload, &r.target_url));
                let Some(text) = extraction::extract_main_content(&tree, &loaded.main_cfg) else {
                    main.hit("no_main_content");
                    continue;
                };
                let mut doc = Document::from_record(r, text, DomainTag::Math);
                doc.push_stage("main_content");
                main.observe_out(&doc);
                gate.observe_in(&doc);
                if !math::ascii_keyword_gate(&doc.text, &loaded.math_sets) {
                    gate.hit("math_gate");
                    continue;
                }
                gate.observe_out(&doc);
                model_stage.observe_in(&doc);
                match scorer.score_for(&doc) {
                    Some(s) if s > 0.5 => {
                        doc.push_stage("math_ascii");
                        model_stage.observe_out(&doc);
                        docs.push(doc);
                    }
                    Some(_) => model_stage.hit("model_score"),
                    None => model_stage.hit("score_missing"),
                }
            }
            stages.push(read);
            stages.push(main);
            stages.push(gate);
            stages.push(model_stage);
            docs
        }
        PipelineKind::Mcq => {
            // input is open-QA output in the document interchange format
            let mut read = StageStats::new("read");
            let mut extract = StageStats::new("mcq_extract");
            let mut docs = Vec::new();
            for doc in store::DocumentReader::open(path)? {
                let doc = doc?;
                read.observe_in(&doc);
                read.observe_out(&doc);
                extract.observe_in(&doc);
                match qa::mcq_document(&doc, &loaded.qa_sets) {
                    Some(out) => {
                        extract.observe_out(&out);
                        docs.push(out);
                    }
                    None => extract.hit("no_mcq"),
                }
            }
            stages.push(read);
            stages.push(extract);
            docs
        }
    };

    Ok(PhaseAOutput { shard_stem, stats: stages, docs })
}

fn work_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join("work")
}

fn checkpoint_paths(cfg: &PipelineConfig, stem: &str) -> (PathBuf, PathBuf) {
    let dir = work_dir(cfg);
    (dir.join(format!("{stem}.stageA.jsonl")), dir.join(format!("{stem}.stageA.stats.json")))
}

fn load_checkpoint(cfg: &PipelineConfig, stem: &str) -> Option<PhaseAOutput> {
    let (docs_path, stats_path) = checkpoint_paths(cfg, stem);
    if !store::shard_is_complete(&docs_path) {
        return None;
    }
    let docs = store::read_documents(&docs_path).ok()?;
    let stats_text = std::fs::read_to_string(&stats_path).ok()?;
    let stats: Vec<StageStats> = serde_json::from_str(&stats_text).ok()?;
    Some(PhaseAOutput { shard_stem: stem.to_string(), stats, docs })
}

fn save_checkpoint(cfg: &PipelineConfig, out: &PhaseAOutput) -> Result<()> {
    let (docs_path, stats_path) = checkpoint_paths(cfg, &out.shard_stem);
    let stats_json = serde_json::to_string_pretty(&out.stats)
        .map_err(|e| Error::format("checkpoint stats", &stats_path, e.to_string()))?;
    std::fs::write(&stats_path, stats_json).map_err(|e| Error::io(&stats_path, e))?;
    store::write_documents(out.docs.iter(), &docs_path)?;
    Ok(())
}

/// Scores for the language rule: binary English confidence mapped to a
/// two-entry language distribution so the argmax semantics hold.
fn lang_scores_for(doc: &Document, scorer: &RoleScorer) -> BTreeMap<String, f64> {
    match scorer.score_for(doc) {
        None => BTreeMap::new(),
        Some(s) => BTreeMap::from([("en".to_string(), s), ("und".to_string(), 1.0 - s)]),
    }
}

/// Run one pipeline to completion. See the module docs for the phase
/// structure; the returned report carries per-stage stats in execution
/// order.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport> {
    let started = std::time::Instant::now();
    let diags = validate(cfg);
    if !diags.is_empty() {
        return Err(Error::Config(diags.join("; ")));
    }

    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let wdir = work_dir(cfg);
    std::fs::create_dir_all(&wdir).map_err(|e| Error::io(&wdir, e))?;

    // invalidate checkpoints from a different configuration
    let fp_path = wdir.join("fingerprint.txt");
    let fp = format!("{:016x}", cfg.fingerprint());
    match std::fs::read_to_string(&fp_path) {
        Ok(old) if old == fp => {}
        _ => {
            for entry in std::fs::read_dir(&wdir).map_err(|e| Error::io(&wdir, e))? {
                let entry = entry.map_err(|e| Error::io(&wdir, e))?;
                let _ = std::fs::remove_file(entry.path());
            }
            std::fs::write(&fp_path, &fp).map_err(|e| Error::io(&fp_path, e))?;
        }
    }

    let mut scorers = BTreeMap::new();
    for (role, path) in &cfg.model_paths {
        scorers.insert(role.clone(), RoleScorer::load(path)?);
    }
    let loaded = Loaded {
        scorers,
        code_cfg: CodeDocConfig::default(),
        math_sets: MathKeywordSets::default(),
        qa_sets: QaKeywordSets::default(),
        main_cfg: MainContentConfig::default(),
    };

    let shards = resolve_shards(cfg)?;

    // ---- phase A: per-shard, parallel, checkpointed ----
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let completed = AtomicUsize::new(0);
    let phase_a: Vec<PhaseAOutput> = pool.install(|| {
        shards
            .par_iter()
            .map(|path| {
                let stem = warc::shard_stem(path);
                if let Some(loaded_out) = load_checkpoint(cfg, &stem) {
                    return Ok(loaded_out);
                }
                let out = phase_a_shard(path, cfg, &loaded)?;
                save_checkpoint(cfg, &out)?;
                if let Some(limit) = cfg.abort_after_shards {
                    let done = completed.fetch_add(1, Ordering::SeqCst) + 1;
                    if done >= limit {
                        // simulated crash for resume testing
                        std::process::exit(2);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut stage_list: Vec<StageStats> = Vec::new();
    let n_phase_a_stages = phase_a.first().map(|o| o.stats.len()).unwrap_or(0);
    for i in 0..n_phase_a_stages {
        let column: Vec<StageStats> = phase_a.iter().map(|o| o.stats[i].clone()).collect();
        stage_list.push(crate::stats::merge_stats(&column)?);
    }

    let mut docs: Vec<Document> = phase_a.into_iter().flat_map(|o| o.docs).collect();
    docs.sort_by(|a, b| a.order_key().cmp(&b.order_key()));

    // ---- phase B: cross-shard stages, single-threaded ----
    let mut audit_reports: Vec<FilterReport> = Vec::new();
    let mut clusters: Vec<dedup::DupCluster> = Vec::new();

    match cfg.pipeline {
        PipelineKind::WebWet | PipelineKind::OpenQa => {
            // paragraph dedup
            let mut pd = StageStats::new("paragraph_dedup");
            for d in &docs {
                pd.observe_in(d);
            }
            docs = extraction::paragraph_dedup(docs, cfg.dedup_scope);
            for d in &docs {
                pd.observe_out(d);
            }
            stage_list.push(pd);

            if cfg.pipeline == PipelineKind::WebWet {
                docs = web_filter_stages(
                    docs,
                    WebSource::Wet,
                    cfg,
                    &loaded,
                    &mut stage_list,
                    &mut audit_reports,
                );
                docs = minhash_stage(docs, cfg, &mut stage_list, &mut clusters);
            } else {
                // open-QA rule + model stages
                let mut rules = StageStats::new("qa_rules");
                let model = loaded.scorers.get("open_qa");
                let mut model_stage = StageStats::new("qa_model");
                let mut kept = Vec::with_capacity(docs.len());
                for mut doc in docs {
                    rules.observe_in(&doc);
                    if !qa::openqa_rule_filter(&doc.text) {
                        rules.hit("qa_rules");
                        continue;
                    }
                    doc.domain_tag = DomainTag::OpenQa;
                    doc.push_stage("qa_rules");
                    rules.observe_out(&doc);
                    match model {
                        None => kept.push(doc),
                        Some(scorer) => {
                            model_stage.observe_in(&doc);
                            match scorer.score_for(&doc) {
                                Some(s) if s > 0.5 => {
                                    doc.push_stage("qa_model");
                                    model_stage.observe_out(&doc);
                                    kept.push(doc);
                                }
                                Some(_) => model_stage.hit("model_score"),
                                None => model_stage.hit("score_missing"),
                            }
                        }
                    }
                }
                docs = kept;
                stage_list.push(rules);
                if model.is_some() {
                    stage_list.push(model_stage);
                }
            }
        }
        PipelineKind::WebWarc => {
            docs = web_filter_stages(
                docs,
                WebSource::Warc,
                cfg,
                &loaded,
                &mut stage_list,
                &mut audit_reports,
            );
            docs = minhash_stage(docs, cfg, &mut stage_list, &mut clusters);
        }
        PipelineKind::Code | PipelineKind::MathHtml | PipelineKind::MathAscii | PipelineKind::Mcq => {}
    }

    // ---- write outputs, one shard per input shard ----
    let mut write = StageStats::new("write");
    let mut by_shard: BTreeMap<String, Vec<&Document>> = BTreeMap::new();
    for path in &shards {
        by_shard.insert(warc::shard_stem(path), Vec::new());
    }
    for doc in &docs {
        write.observe_in(doc);
        write.observe_out(doc);
        let stem = doc.doc_id.rsplit_once('#').map(|(s, _)| s).unwrap_or(&doc.doc_id);
        by_shard.entry(stem.to_string()).or_default().push(doc);
    }
    for (stem, shard_docs) in &by_shard {
        let out_path = cfg.output_dir.join(format!("{stem}.jsonl"));
        store::write_documents(shard_docs.iter().copied(), &out_path)?;
    }
    if cfg.audit && !audit_reports.is_empty() {
        let audit_path = cfg.output_dir.join("filter_audit.jsonl");
        let mut out = String::new();
        for report in &audit_reports {
            out.push_str(&serde_json::to_string(report).map_err(|e| {
                Error::format("audit report", &audit_path, e.to_string())
            })?);
            out.push('\n');
        }
        std::fs::write(&audit_path, out).map_err(|e| Error::io(&audit_path, e))?;
    }
    if matches!(cfg.pipeline, PipelineKind::WebWet | PipelineKind::WebWarc) {
        dedup::write_cluster_report(&clusters, &cfg.output_dir.join("clusters.tsv"))?;
    }
    stage_list.push(write);

    let report = RunReport {
        pipeline: cfg.pipeline.as_str().to_string(),
        per_stage: stage_list,
        wall_time_s: started.elapsed().as_secs_f64(),
        config_fingerprint: cfg.fingerprint(),
    };
    report.write(&cfg.output_dir.join("run_report.json"))?;
    Ok(report)
}

/// Language + rule + optional model-filter stages shared by the web paths.
fn web_filter_stages(
    docs: Vec<Document>,
    source: WebSource,
    cfg: &PipelineConfig,
    loaded: &Loaded,
    stage_list: &mut Vec<StageStats>,
    audit: &mut Vec<FilterReport>,
) -> Vec<Document> {
    let lang = loaded.scorers.get("lang_id");

    // language stage (only when a scorer is configured)
    let mut docs = docs;
    if let Some(scorer) = lang {
        let mut stage = StageStats::new("language");
        let mut kept = Vec::with_capacity(docs.len());
        for mut doc in docs {
            stage.observe_in(&doc);
            let scores = lang_scores_for(&doc, scorer);
            let verdict = filters::language_filter(&scores, &cfg.thresholds);
            if verdict.passed {
                doc.push_stage("language");
                stage.observe_out(&doc);
                kept.push(doc);
            } else {
                stage.hit(&verdict.rule_id);
            }
        }
        docs = kept;
        stage_list.push(stage);
    }

    // rule stage
    let stage_name = match source {
        WebSource::Wet => "length",
        WebSource::Warc => "quality_rules",
    };
    let mut stage = StageStats::new(stage_name);
    let mut kept = Vec::with_capacity(docs.len());
    for doc in docs {
        stage.observe_in(&doc);
        // language already handled above as its own stage
        let (result, report) = filters::run_web_filters(&doc, source, &cfg.thresholds, None);
        for v in report.failed_rules() {
            stage.hit(&v.rule_id);
        }
        if cfg.audit {
            audit.push(report.clone());
        }
        if let Some(mut out) = result {
            out.push_stage(stage_name);
            stage.observe_out(&out);
            kept.push(out);
        }
    }
    docs = kept;
    stage_list.push(stage);

    // optional quality-model stage
    if let Some(scorer) = loaded.scorers.get("quality") {
        let mut stage = StageStats::new("quality_model");
        docs = crate::classifier::filter_by_score(docs, &scorer.source(), 0.5, &mut stage);
        for d in &mut docs {
            d.push_stage("quality_model");
        }
        stage_list.push(stage);
    }
    docs
}

fn minhash_stage(
    docs: Vec<Document>,
    cfg: &PipelineConfig,
    stage_list: &mut Vec<StageStats>,
    clusters_out: &mut Vec<dedup::DupCluster>,
) -> Vec<Document> {
    let mut stage = StageStats::new("minhash_dedup");
    for d in &docs {
        stage.observe_in(d);
    }
    let (mut kept, clusters) = dedup::deduplicate(docs, cfg.seed);
    for c in &clusters {
        for _ in 1..c.member_doc_ids.len() {
            stage.hit("near_duplicate");
        }
    }
    for d in &mut kept {
        d.push_stage("minhash_dedup");
        stage.observe_out(d);
    }
    *clusters_out = clusters;
    stage_list.push(stage);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn wet_record(url: &str, payload: &str) -> Vec<u8> {
        let mut out = Vec::new();
        write!(
            out,
            "WARC/1.0\r\nWARC-Type: conversion\r\nWARC-Target-URI: {url}\r\nContent-Length: {}\r\n\r\n",
            payload.len()
        )
        .unwrap();
        out.extend_from_slice(payload.as_bytes());
        out.extend_from_slice(b"\r\n\r\n");
        out
    }

    fn write_wet_shard(dir: &Path, name: &str, texts: &[String]) -> PathBuf {
        let path = dir.join(name);
        let mut bytes = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            bytes.extend_from_slice(&wet_record(&format!("http://e/{i}"), t));
        }
        std::fs::write(&path, bytes).unwrap();
        path
    }

    fn long_text(tag: &str) -> String {
        // every 5-gram contains the tag, so documents with different tags
        // share no shingles and MinHash keeps them apart
        (0..40).map(|j| format!("{tag} item {j} about {tag}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn wet_pipeline_counts_length_and_dedup_drops() {
        let dir = tempfile::tempdir().unwrap();
        let snapshot_dir = dir.path().join("2023-40");
        std::fs::create_dir_all(&snapshot_dir).unwrap();
        // 10 docs: 7 unique long, 2 short, 1 near-duplicate of the first
        // long doc (one word swapped, so paragraph hashing keeps it but
        // MinHash merges it). Distinct words, not distinct digits:
        // paragraph hashing is digit-blind.
        let tags = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf"];
        let mut texts: Vec<String> = tags.iter().map(|t| long_text(t)).collect();
        texts.push("short".into());
        texts.push("tiny".into());
        texts.push(texts[0].replacen("item 20", "thing 20", 1));
        let shard = write_wet_shard(&snapshot_dir, "shard-0.wet", &texts);

        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: vec![shard],
            output_dir: out.clone(),
            ..Default::default()
        };
        let report = run(&cfg).unwrap();
        let names: Vec<&str> =
            report.per_stage.iter().map(|s| s.stage_name.as_str()).collect();
        assert_eq!(names, vec!["read", "paragraph_dedup", "length", "minhash_dedup", "write"]);
        let stage = |n: &str| report.per_stage.iter().find(|s| s.stage_name == n).unwrap();
        assert_eq!(stage("read").docs_out, 10);
        assert_eq!(stage("paragraph_dedup").docs_out, 10);
        assert_eq!(stage("length").docs_out, 8); // -2 short docs
        assert_eq!(stage("minhash_dedup").docs_out, 7); // -1 near duplicate
        assert_eq!(stage("write").docs_out, 7);
        // conservation between adjacent stages
        for w in report.per_stage.windows(2) {
            assert_eq!(w[0].docs_out, w[1].docs_in);
        }
        let written = store::read_documents(&out.join("shard-0.jsonl")).unwrap();
        assert_eq!(written.len(), 7);
        // the cluster report names the surviving representative
        let clusters = std::fs::read_to_string(out.join("clusters.tsv")).unwrap();
        assert_eq!(clusters.lines().count(), 1);

        // exact duplicates are consumed earlier, by paragraph dedup
        let mut texts2 = texts.clone();
        texts2[9] = texts2[0].clone();
        let shard2 = write_wet_shard(&snapshot_dir, "shard-1.wet", &texts2);
        let out2 = dir.path().join("out2");
        let cfg2 = PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: vec![shard2],
            output_dir: out2,
            ..Default::default()
        };
        let report2 = run(&cfg2).unwrap();
        let stage2 = |n: &str| report2.per_stage.iter().find(|s| s.stage_name == n).unwrap();
        assert_eq!(stage2("paragraph_dedup").docs_out, 9);
        assert_eq!(stage2("length").docs_out, 7);
        assert_eq!(stage2("minhash_dedup").docs_out, 7);
    }

    #[test]
    fn language_stage_uses_scorefile_and_flags_missing_docs() {
        let dir = tempfile::tempdir().unwrap();
        let snapshot_dir = dir.path().join("2023-40");
        std::fs::create_dir_all(&snapshot_dir).unwrap();
        let texts: Vec<String> =
            ["alpha", "bravo", "charlie"].iter().map(|t| long_text(t)).collect();
        let shard = write_wet_shard(&snapshot_dir, "shard-0.wet", &texts);

        // doc ids are shard#offset; read them back from a model-free run
        let probe_out = dir.path().join("probe");
        let cfg = PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: vec![shard.clone()],
            output_dir: probe_out.clone(),
            ..Default::default()
        };
        run(&cfg).unwrap();
        let ids: Vec<String> = store::read_documents(&probe_out.join("shard-0.jsonl"))
            .unwrap()
            .into_iter()
            .map(|d| d.doc_id)
            .collect();
        assert_eq!(ids.len(), 3);

        // high, low, and missing confidence
        let scores = dir.path().join("lang.tsv");
        std::fs::write(&scores, format!("{}\t0.9\n{}\t0.2\n", ids[0], ids[1])).unwrap();
        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: vec![shard],
            output_dir: out.clone(),
            model_paths: BTreeMap::from([("lang_id".to_string(), scores)]),
            audit: true,
            ..Default::default()
        };
        let report = run(&cfg).unwrap();
        let lang = report.per_stage.iter().find(|s| s.stage_name == "language").unwrap();
        assert_eq!((lang.docs_in, lang.docs_out), (3, 1));
        assert_eq!(lang.rule_hit_counts["lang_confidence"], 1);
        assert_eq!(lang.rule_hit_counts["lang_missing"], 1);
        let kept = store::read_documents(&out.join("shard-0.jsonl")).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].doc_id, ids[0]);
        assert!(kept[0].stage_trace.contains(&"language".to_string()));
    }

    #[test]
    fn warc_audit_sidecar_written() {
        let dir = tempfile::tempdir().unwrap();
        let snapshot_dir = dir.path().join("2023-40");
        std::fs::create_dir_all(&snapshot_dir).unwrap();
        let html = "<html><body><div><p>The article body sits here with the usual \
                    words that have enough of the stop words and a tolerable length \
                    for the rules to keep it. The second sentence adds variety and \
                    the third one closes the paragraph with some final remarks that \
                    mention the weather and the hills beyond the town.</p></div></body></html>";
        let body = format!("HTTP/1.1 200 OK\r\nContent-Type: text/html\r\n\r\n{html}");
        let mut bytes = Vec::new();
        write!(
            bytes,
            "WARC/1.0\r\nWARC-Type: response\r\nWARC-Target-URI: http://e/\r\nContent-Length: {}\r\n\r\n",
            body.len()
        )
        .unwrap();
        bytes.extend_from_slice(body.as_bytes());
        bytes.extend_from_slice(b"\r\n\r\n");
        let shard = snapshot_dir.join("pages.warc");
        std::fs::write(&shard, bytes).unwrap();

        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            pipeline: PipelineKind::WebWarc,
            input_paths: vec![shard],
            output_dir: out.clone(),
            audit: true,
            ..Default::default()
        };
        run(&cfg).unwrap();
        let audit = std::fs::read_to_string(out.join("filter_audit.jsonl")).unwrap();
        assert_eq!(audit.lines().count(), 1);
        let report: FilterReport = serde_json::from_str(audit.lines().next().unwrap()).unwrap();
        assert!(report.doc_id.starts_with("pages#"));
        assert!(report.verdicts.len() >= 18);
    }

    #[test]
    fn validate_reports_missing_inputs_and_bad_thresholds() {
        let mut cfg = PipelineConfig {
            input_paths: vec![PathBuf::from("/definitely/not/here")],
            ..Default::default()
        };
        cfg.thresholds.dup_sentence_ratio = 1.5;
        let diags = validate(&cfg);
        assert!(diags.iter().any(|d| d.contains("not/here")));
        assert!(diags.iter().any(|d| d.contains("dup_sentence_ratio")));
    }

    #[test]
    fn ascii_math_requires_model_before_any_work() {
        let dir = tempfile::tempdir().unwrap();
        let shard = dir.path().join("s.warc");
        std::fs::write(&shard, b"").unwrap();
        let cfg = PipelineConfig {
            pipeline: PipelineKind::MathAscii,
            input_paths: vec![shard],
            output_dir: dir.path().join("out"),
            ..Default::default()
        };
        let diags = validate(&cfg);
        assert!(diags.iter().any(|d| d.contains("ascii")));
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn rerun_resumes_from_checkpoints_with_identical_output() {
        let dir = tempfile::tempdir().unwrap();
        let snapshot_dir = dir.path().join("2023-40");
        std::fs::create_dir_all(&snapshot_dir).unwrap();
        let texts: Vec<String> = (0..4).map(|i| long_text(&format!("doc{i}"))).collect();
        let shard = write_wet_shard(&snapshot_dir, "shard-0.wet", &texts);
        let out = dir.path().join("out");
        let cfg = PipelineConfig {
            pipeline: PipelineKind::WebWet,
            input_paths: vec![shard],
            output_dir: out.clone(),
            ..Default::default()
        };
        run(&cfg).unwrap();
        let first = std::fs::read_to_string(out.join("shard-0.jsonl")).unwrap();
        run(&cfg).unwrap();
        let second = std::fs::read_to_string(out.join("shard-0.jsonl")).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn config_fingerprint_ignores_execution_details() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            workers: 8,
            output_dir: PathBuf::from("elsewhere"),
            ..Default::default()
        };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = PipelineConfig { seed: 1, ..Default::default() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig {
            pipeline: PipelineKind::Code,
            input_paths: vec![PathBuf::from("a.warc")],
            ..Default::default()
        };
        cfg.thresholds.set("dup_sentence_ratio", 0.25).unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
        let back = PipelineConfig::load(&path).unwrap();
        assert_eq!(back.pipeline, PipelineKind::Code);
        assert_eq!(back.thresholds.dup_sentence_ratio, 0.25);
        assert_eq!(back.fingerprint(), cfg.fingerprint());
    }
}
