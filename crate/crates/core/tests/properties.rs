//! Property tests for the library's structural invariants.

use proptest::prelude::*;

use webcorpus::dom;
use webcorpus::extraction::{paragraph_dedup, DedupScope};
use webcorpus::filters::segment;
use webcorpus::math::validate_latex_source;
use webcorpus::qa;
use webcorpus::record::{Document, DomainTag};
use webcorpus::store;

proptest! {
    /// The tolerant parser must never panic, whatever the bytes.
    #[test]
    fn parse_html_never_panics(payload in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let tree = dom::parse_html(&payload, "http://fuzz/");
        // and the result is always well-formed enough to walk and render
        let stripped = dom::strip_hidden(&tree);
        let _ = dom::visible_text(&stripped);
    }

    /// strip_hidden is idempotent on arbitrary markup.
    #[test]
    fn strip_hidden_idempotent(payload in "[ -~]{0,400}") {
        let tree = dom::parse_html(payload.as_bytes(), "u");
        let once = dom::strip_hidden(&tree);
        prop_assert_eq!(dom::strip_hidden(&once), once);
    }

    /// A string of braces with a structural imbalance never validates.
    #[test]
    fn unbalanced_braces_never_validate(pattern in proptest::collection::vec(prop_oneof![Just('{'), Just('}'), Just('x')], 1..60)) {
        let source: String = pattern.iter().collect();
        let mut depth = 0i64;
        let mut broken = false;
        for c in &pattern {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth < 0 {
                        broken = true;
                    }
                }
                _ => {}
            }
        }
        broken |= depth != 0;
        if broken {
            prop_assert!(validate_latex_source(&source).is_err(), "accepted {source:?}");
        } else {
            prop_assert!(validate_latex_source(&source).is_ok());
        }
    }

    /// Documents round-trip the interchange format field-for-field.
    #[test]
    fn document_roundtrip(text in "\\PC{0,300}", url in "[a-z:/.]{0,40}") {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.jsonl");
        let mut doc = Document::new("shard#000000000001", url, "2023-40", text, DomainTag::Web);
        doc.push_stage("read");
        store::write_documents([&doc], &path).unwrap();
        let back = store::read_documents(&path).unwrap();
        prop_assert_eq!(back, vec![doc]);
    }

    /// Paragraphs always reconstruct the text they were split from.
    #[test]
    fn segmentation_reconstructs_text(text in "\\PC{0,300}") {
        let seg = segment(&text);
        if !text.is_empty() {
            prop_assert_eq!(seg.paragraphs.join("\n"), text);
        }
    }

    /// Snapshot-scope paragraph dedup removes a superset of what
    /// shard-scope removes when the shards partition the snapshot.
    #[test]
    fn snapshot_dedup_supersedes_shard_dedup(
        paragraphs in proptest::collection::vec(0..8u8, 1..40),
        splits in proptest::collection::vec(any::<bool>(), 1..40),
    ) {
        // build docs of 3 paragraphs each from a tiny alphabet so
        // collisions actually happen; alternate shards by `splits`
        let mut docs = Vec::new();
        for (i, chunk) in paragraphs.chunks(3).enumerate() {
            let shard = if *splits.get(i).unwrap_or(&false) { "sa" } else { "sb" };
            let text: Vec<String> = chunk.iter().map(|p| format!("paragraph body {p}")).collect();
            docs.push(Document::new(
                format!("{shard}#{i:012}"),
                "u",
                "2023-40",
                text.join("\n"),
                DomainTag::Web,
            ));
        }
        let survived = |docs: Vec<Document>| -> usize {
            docs.iter().map(|d| d.text.split('\n').count()).sum()
        };
        let shard_kept = survived(paragraph_dedup(docs.clone(), DedupScope::Shard));
        let snapshot_kept = survived(paragraph_dedup(docs, DedupScope::Snapshot));
        // more sharing => at least as many removals => at most as many kept
        prop_assert!(snapshot_kept <= shard_kept);
    }

    /// The open-QA rule filter equals a brute-force two-list scan.
    #[test]
    fn openqa_filter_matches_brute_force(text in "[a-zA-Z :&?.!\\n]{0,300}") {
        let questions = [
            "what", "where", "why", "when", "who", "whose", "how",
        ];
        let q_subs = [
            "q&a", "q & a", "q:", "que:", "question:", "quiz:", "exam:", "examination:",
            "probe:", "request:", "challenge:", "test:", "query:", "survey:",
        ];
        let a_subs = [
            "q&a", "q & a", "a:", "ans:", "answer:", "solution:", "reply:", "response:",
            "result:", "outcome:", "explanation:", "conclusion:", "finding:", "assertion:",
            "statement:", "clarification:",
        ];
        let lower = text.to_lowercase();
        let word_hit = lower
            .split(|c: char| !c.is_ascii_alphanumeric())
            .any(|w| questions.contains(&w));
        let q_hit = word_hit || q_subs.iter().any(|k| lower.contains(k));
        let a_hit = a_subs.iter().any(|k| lower.contains(k));
        prop_assert_eq!(qa::openqa_rule_filter(&text), q_hit && a_hit);
    }

    /// MCQ extraction then formatting is idempotent on whatever it emits.
    #[test]
    fn mcq_format_idempotent(
        stem in "[A-Za-z ?]{5,40}",
        bodies in proptest::collection::vec("[A-Za-z ]{1,20}", 2..6),
        answer_idx in 0..4usize,
    ) {
        let sets = qa::QaKeywordSets::default();
        let answer_idx = answer_idx.min(bodies.len() - 1);
        let mut lines = vec![stem.trim().to_string()];
        for (i, b) in bodies.iter().enumerate() {
            lines.push(format!("{}. {}", (b'a' + i as u8) as char, b.trim()));
        }
        lines.push(format!("Answer: {}", (b'a' + answer_idx as u8) as char));
        let text = lines.join("\n");
        let items = qa::extract_mcq(&text, "prop", &sets);
        for item in items {
            let once = qa::format_mcq(&item).unwrap();
            let reparsed = qa::extract_mcq(&once, "prop", &sets);
            prop_assert_eq!(reparsed.len(), 1, "canonical block must reparse: {}", once);
            let twice = qa::format_mcq(&reparsed[0]).unwrap();
            prop_assert_eq!(&once, &twice);
            // canonical serials are A..(A+n-1) and the answer references a choice
            prop_assert!(reparsed[0].choices.len() >= 2);
            prop_assert!(!reparsed[0].answer.is_empty());
        }
    }
}

/// Planted sentinels inside hidden nodes never reach the rendered text.
#[test]
fn hidden_sentinels_never_render() {
    let html = r#"
        <div>
          <p>visible one</p>
          <div aria-hidden="true"><p>SENTINEL_A</p><span>SENTINEL_B</span></div>
          <span style="display:none">SENTINEL_C</span>
          <p>visible two <b style="visibility: hidden">SENTINEL_D</b></p>
        </div>"#;
    let tree = dom::strip_hidden(&dom::parse_html(html.as_bytes(), "u"));
    let text = dom::visible_text(&tree);
    assert!(text.contains("visible one"));
    assert!(text.contains("visible two"));
    assert!(!text.contains("SENTINEL"));
}
