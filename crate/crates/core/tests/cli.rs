//! CLI surface tests: subcommands, exit codes, file formats.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_webcorpus"))
}

fn write_wet_shard(path: &Path, texts: &[&str]) {
    let mut bytes = Vec::new();
    for (i, t) in texts.iter().enumerate() {
        write!(
            bytes,
            "WARC/1.0\r\nWARC-Type: conversion\r\nWARC-Target-URI: http://e/{i}\r\nContent-Length: {}\r\n\r\n",
            t.len()
        )
        .unwrap();
        bytes.extend_from_slice(t.as_bytes());
        bytes.extend_from_slice(b"\r\n\r\n");
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn validate_exit_codes() {
    // bad flag value -> configuration error (1)
    let out = bin().args(["validate", "--pipeline", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing input path -> diagnostics + exit 1
    let out = bin()
        .args(["validate", "--pipeline", "web_wet", "--input", "/no/such/file"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    // threshold sanity diagnostics name the field
    let dir = tempfile::tempdir().unwrap();
    let shard = dir.path().join("s.wet");
    write_wet_shard(&shard, &["some text"]);
    let out = bin()
        .args([
            "validate",
            "--pipeline",
            "web_wet",
            "--input",
            shard.to_str().unwrap(),
            "--threshold",
            "dup_sentence_ratio=1.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dup_sentence_ratio"));

    // healthy config validates clean
    let out = bin()
        .args(["validate", "--pipeline", "web_wet", "--input", shard.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn classifier_train_and_score_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("labeled.tsv");
    let mut lines = Vec::new();
    for i in 0..40 {
        lines.push(format!("__pos__\tapple orchard fresh fruit number {i}"));
        lines.push(format!("__neg__\tgravel quarry dusty stone number {i}"));
    }
    std::fs::write(&data, lines.join("\n")).unwrap();

    let model = dir.path().join("model.bin");
    let out = bin()
        .args([
            "classifier",
            "train",
            "--data",
            data.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--dim",
            "4096",
            "--epochs",
            "8",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());

    // score one text
    let out = bin()
        .args([
            "classifier",
            "score",
            "--model",
            model.to_str().unwrap(),
            "--text",
            "apple orchard fresh fruit",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let score: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(score > 0.5, "positive-vocab text scored {score}");

    // score a document shard into a score file
    let docs = dir.path().join("docs.jsonl");
    std::fs::write(
        &docs,
        concat!(
            "{\"doc_id\":\"d1\",\"url\":\"u\",\"snapshot_id\":\"s\",\"text\":\"apple orchard fruit\",\"domain_tag\":\"web\",\"stage_trace\":[]}\n",
            "{\"doc_id\":\"d2\",\"url\":\"u\",\"snapshot_id\":\"s\",\"text\":\"gravel quarry stone\",\"domain_tag\":\"web\",\"stage_trace\":[]}\n",
        ),
    )
    .unwrap();
    let scores = dir.path().join("scores.tsv");
    let out = bin()
        .args([
            "classifier",
            "score",
            "--model",
            model.to_str().unwrap(),
            "--input",
            docs.to_str().unwrap(),
            "--out",
            scores.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&scores).unwrap();
    let mut parsed = std::collections::BTreeMap::new();
    for line in text.lines() {
        let (id, s) = line.split_once('\t').unwrap();
        parsed.insert(id.to_string(), s.parse::<f64>().unwrap());
    }
    assert!(parsed["d1"] > 0.5);
    assert!(parsed["d2"] < 0.5);

    // and the score file plugs back into a pipeline as a quality filter
    let shard = dir.path().join("input.wet");
    let long_pos = "apple orchard fresh fruit ".repeat(20);
    let long_neg = "gravel quarry dusty stone ".repeat(20);
    write_wet_shard(&shard, &[&long_pos, &long_neg]);
    // score the two pipeline docs by their positional ids
    let sf = dir.path().join("pipeline-scores.tsv");
    std::fs::write(&sf, "input#000000000000\t0.9\ninput#000000000172\t0.2\n").unwrap();
    let outdir = dir.path().join("out");
    let out = bin()
        .args([
            "run",
            "--pipeline",
            "web_wet",
            "--input",
            shard.to_str().unwrap(),
            "--out",
            outdir.to_str().unwrap(),
            "--model",
            &format!("quality={}", sf.display()),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let kept = std::fs::read_to_string(outdir.join("input.jsonl")).unwrap();
    assert_eq!(kept.lines().count(), 1);
    assert!(kept.contains("apple"));
}

#[test]
fn stats_rejects_mixed_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let shard = dir.path().join("s.wet");
    let text = "a sentence of reasonable length for the corpus ".repeat(10);
    write_wet_shard(&shard, &[&text]);

    let out_a = dir.path().join("a");
    let status = bin()
        .args([
            "run", "--pipeline", "web_wet",
            "--input", shard.to_str().unwrap(),
            "--out", out_a.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));

    // forge a second report with a different pipeline name
    let report_a = out_a.join("run_report.json");
    let mut forged: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_a).unwrap()).unwrap();
    forged["pipeline"] = serde_json::Value::String("code".into());
    let report_b = dir.path().join("forged_report.json");
    std::fs::write(&report_b, serde_json::to_string(&forged).unwrap()).unwrap();

    let out = bin()
        .args(["stats", report_a.to_str().unwrap(), report_b.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixed pipelines"));

    // single report renders the table
    let out = bin().args(["stats", report_a.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("final retention"));
}

#[test]
fn mcq_pipeline_runs_on_openqa_output() {
    let dir = tempfile::tempdir().unwrap();
    // open-QA documents in the interchange format, one with an MCQ block
    let docs = dir.path().join("openqa.jsonl");
    let mcq_text = "Intro prose before the question.\\nWhich one fits?\\nA. this\\nB. that\\nAnswer:B\\nTrailing prose.";
    std::fs::write(
        &docs,
        format!(
            "{{\"doc_id\":\"openqa#000000000001\",\"url\":\"u\",\"snapshot_id\":\"s\",\"text\":\"{mcq_text}\",\"domain_tag\":\"open_qa\",\"stage_trace\":[]}}\n\
             {{\"doc_id\":\"openqa#000000000002\",\"url\":\"u\",\"snapshot_id\":\"s\",\"text\":\"no list here at all\",\"domain_tag\":\"open_qa\",\"stage_trace\":[]}}\n"
        ),
    )
    .unwrap();
    let outdir = dir.path().join("out");
    let out = bin()
        .args([
            "run", "--pipeline", "mcq",
            "--input", docs.to_str().unwrap(),
            "--out", outdir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let kept = webcorpus::store::read_documents(&outdir.join("openqa.jsonl")).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].text, "Which one fits?\nA. this\nB. that\nAnswer:B");
    assert_eq!(kept[0].domain_tag, webcorpus::record::DomainTag::Mcq);
}

#[test]
fn code_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let html = "<html><body><p>Use the helper,</p><pre><code>let total = add(1, 2);</code></pre></body></html>";
    let body = format!("HTTP/1.1 200 OK\r\nContent-Type: text/html\r\n\r\n{html}");
    let mut bytes = Vec::new();
    write!(
        bytes,
        "WARC/1.0\r\nWARC-Type: response\r\nWARC-Target-URI: http://e/q\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )
    .unwrap();
    bytes.extend_from_slice(body.as_bytes());
    bytes.extend_from_slice(b"\r\n\r\n");
    let shard = dir.path().join("pages.warc");
    std::fs::write(&shard, bytes).unwrap();

    let outdir = dir.path().join("out");
    let out = bin()
        .args([
            "run", "--pipeline", "code",
            "--input", shard.to_str().unwrap(),
            "--out", outdir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let kept = webcorpus::store::read_documents(&outdir.join("pages.jsonl")).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(
        kept[0].text,
        "Use the helper,\n<code-encode>\nlet total = add(1, 2);\n</code-encode>"
    );
}
