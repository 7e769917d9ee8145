use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use styledistill_core::bleu::{corpus_bleu, BleuConfig};
use styledistill_core::dataset::{
    build_ta, build_tb, compose_supervision, decode, encode, source_id, ExportFormat, FilterPolicy,
    Provenance, TrainingExample,
};
use styledistill_core::human_eval::{
    EvalError, EvalItem, Rate, RubricDefinition, SessionStore, SummaryFilter,
};
use styledistill_core::parser::{parse_tb, GenerationMode, GenerationRecord, QualityFlag};
use styledistill_core::prompt::{
    render_student_input, render_tb, tb_completion_body, Exemplar, PromptTemplate, StylePreset,
    TRANSFERRED_MARKER,
};
use styledistill_core::RawCompletion;

const WORDS: &[&str] = &[
    "the", "cat", "sat", "on", "mat", "a", "dog", "ran", "very", "quickly", "home", "we", "are",
    "not", "here", "please", "thank", "you", "it", "was",
];

fn sentence(min: usize, max: usize) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(WORDS), min..=max)
}

fn corpus() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((sentence(4, 15), sentence(4, 15)), 1..8).prop_map(|pairs| {
        pairs
            .into_iter()
            .map(|(h, r)| (h.join(" "), r.join(" ")))
            .collect()
    })
}

fn unzip(pairs: &[(String, String)]) -> (Vec<String>, Vec<String>) {
    pairs.iter().cloned().unzip()
}

fn line() -> impl Strategy<Value = String> {
    "[A-Za-z0-9][A-Za-z0-9 ,.!?'()-]{0,38}[A-Za-z0-9.!?]".prop_map(|s| s)
}

fn text(max_lines: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(line(), 1..=max_lines).prop_map(|l| l.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bleu_identity_is_100(pairs in corpus()) {
        let (_, refs) = unzip(&pairs);
        let r = corpus_bleu(&refs, &refs, &BleuConfig::default()).unwrap();
        prop_assert!((r.score - 100.0).abs() < 1e-9, "{}", r.score);
    }

    #[test]
    fn bleu_is_in_range(pairs in corpus()) {
        let (h, r) = unzip(&pairs);
        let s = corpus_bleu(&h, &r, &BleuConfig::default()).unwrap().score;
        prop_assert!((0.0..=100.0 + 1e-9).contains(&s), "{s}");
    }

    #[test]
    fn bleu_ignores_segment_order(pairs in corpus(), seed in any::<u64>()) {
        let (h, r) = unzip(&pairs);
        let a = corpus_bleu(&h, &r, &BleuConfig::default()).unwrap();
        let mut shuffled = pairs.clone();
        let n = shuffled.len();
        let mut rng = styledistill_core::dataset::SplitMix64::new(seed);
        for i in (1..n).rev() {
            shuffled.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        let (h2, r2) = unzip(&shuffled);
        let b = corpus_bleu(&h2, &r2, &BleuConfig::default()).unwrap();
        prop_assert_eq!(a.score, b.score);
    }

    #[test]
    fn bleu_corruption_never_helps(pairs in corpus(), seg in any::<prop::sample::Index>(), pos in any::<prop::sample::Index>()) {
        let (mut h, r) = unzip(&pairs);
        let before = corpus_bleu(&h, &r, &BleuConfig::default()).unwrap().score;
        let i = seg.index(h.len());
        let mut toks: Vec<&str> = h[i].split(' ').collect();
        let j = pos.index(toks.len());
        toks[j] = "zzunseen";
        h[i] = toks.join(" ");
        let after = corpus_bleu(&h, &r, &BleuConfig::default()).unwrap().score;
        prop_assert!(after <= before + 1e-9, "{after} > {before}");
    }

    #[test]
    fn completion_round_trips(cot in text(4), target in text(2)) {
        let raw = tb_completion_body(&cot, &target, TRANSFERRED_MARKER);
        let parsed = parse_tb(&raw);
        prop_assert!(parsed.flags.is_empty(), "{:?}", parsed.flags);
        prop_assert_eq!(parsed.cot, cot);
        prop_assert_eq!(parsed.transferred, Some(target));
    }

    #[test]
    fn parse_is_idempotent(raw in "[A-Za-z \\[\\]:\n]{0,120}") {
        let first = parse_tb(&raw);
        if let Some(t) = &first.transferred {
            let again = parse_tb(&tb_completion_body(&first.cot, t, TRANSFERRED_MARKER));
            if !first.cot.is_empty() && !t.is_empty() {
                prop_assert_eq!(&again.cot, &first.cot);
                prop_assert_eq!(again.transferred.as_ref(), Some(t));
            }
        }
    }

    #[test]
    fn tb_prompt_layout(source in line(), m in 0usize..4) {
        let style = StylePreset::Formality.direction();
        let template = PromptTemplate::target_blind(StylePreset::Formality.exemplars()).with_exemplar_count(m);
        let prompt = render_tb(&source, &style, &template).unwrap();
        // Exactly one unanswered block: the last line is the trigger.
        let tail = format!("Source: {}\n{}\n", source, template.trigger_phrase());
        prop_assert!(prompt.ends_with(&tail));
        prop_assert_eq!(prompt.matches(TRANSFERRED_MARKER).count(), m.min(template.exemplars().len()));
        let student = render_student_input(&source, &style, &PromptTemplate::student_input()).unwrap();
        prop_assert!(prompt.ends_with(&student));
    }

    #[test]
    fn supervision_reparses_clean(cot in text(3), target in text(1)) {
        let sup = compose_supervision(&cot, &target);
        let p = parse_tb(&sup);
        prop_assert!(p.flags.is_empty());
        prop_assert_eq!(p.transferred.as_deref(), Some(target.as_str()));
    }

    #[test]
    fn tsv_and_jsonl_round_trip(
        rows in prop::collection::vec(("[\\PC\t\n\r\\\\]{1,30}", "[\\PC\t\n\r\\\\]{1,30}", 0u32..9), 1..6)
    ) {
        let examples: Vec<TrainingExample> = rows
            .into_iter()
            .map(|(input, supervision, k)| TrainingExample {
                source_id: source_id(&input),
                input,
                supervision,
                provenance: if k % 2 == 0 { Provenance::TargetBlind } else { Provenance::TargetAware },
                sample_index: k,
                tags: if k > 5 { vec![QualityFlag::CopiedSource] } else { vec![] },
            })
            .collect();
        for format in [ExportFormat::JsonlPairs, ExportFormat::TsvPairs { escape: true }] {
            let back = decode(&encode(&examples, format).unwrap(), format).unwrap();
            prop_assert_eq!(&back, &examples);
        }
    }
}

fn record(source: &str, raw: &str, mode: GenerationMode, k: u32) -> GenerationRecord {
    GenerationRecord::from_completion(
        source_id(source),
        source,
        StylePreset::Formality.direction(),
        mode,
        RawCompletion {
            text: raw.into(),
            backend_id: "test".into(),
            cached: false,
            request_digest: format!("{source}-{k}"),
            truncated: false,
        },
        k,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn built_examples_reparse_clean(
        items in prop::collection::vec((line(), text(3), line(), any::<bool>()), 1..12)
    ) {
        let student = PromptTemplate::student_input();
        let mut tb = Vec::new();
        let mut ta = Vec::new();
        let mut gold = HashMap::new();
        for (k, (source, cot, target, broken)) in items.iter().enumerate() {
            let raw = if *broken { cot.clone() } else { tb_completion_body(cot, target, TRANSFERRED_MARKER) };
            tb.push(record(source, &raw, GenerationMode::TargetBlind, k as u32));
            ta.push(record(source, &format!("[EXPLANATION]: {cot}"), GenerationMode::TargetAware, k as u32));
            gold.entry(source_id(source)).or_insert_with(|| target.clone());
        }
        if let Ok(out) = build_tb(&tb, &FilterPolicy::default(), &student) {
            for ex in &out.examples {
                prop_assert!(parse_tb(&ex.supervision).flags.is_empty(), "{}", ex.supervision);
            }
        }
        let out = build_ta(&ta, &gold, &FilterPolicy::default(), &student).unwrap();
        for ex in &out.examples {
            let p = parse_tb(&ex.supervision);
            prop_assert!(p.flags.is_empty());
            prop_assert_eq!(p.transferred.as_deref(), Some(gold[&ex.source_id].as_str()));
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Rate { item: usize, rate: &'static str },
    Next,
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        8 => (0usize..8, prop::sample::select(&["A", "B", "C", "D", "a", "E", ""][..]))
            .prop_map(|(item, rate)| Op::Rate { item, rate }),
        1 => Just(Op::Next),
    ];
    prop::collection::vec(op, 0..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    /// Acknowledged ratings are exactly what the summary counts.
    #[test]
    fn rating_conservation(seq in ops(), n_items in 1usize..7) {
        let store = SessionStore::ephemeral(RubricDefinition::builtin()).unwrap();
        let items: Vec<EvalItem> = (0..n_items)
            .map(|i| EvalItem {
                item_id: format!("i{i}"),
                source: "s".into(),
                rationale: "r".into(),
                transferred: "t".into(),
                task_label: "task".into(),
                model_label: "model".into(),
            })
            .collect();
        let id = store.create_session(items, "annotator").unwrap();
        let mut acked: BTreeMap<String, Rate> = BTreeMap::new();
        for op in seq {
            match op {
                Op::Next => {
                    store.next_item(&id).unwrap();
                }
                Op::Rate { item, rate } => {
                    let item_id = format!("i{item}");
                    match store.submit_rating(&id, &item_id, rate) {
                        Ok(ack) => {
                            prop_assert!(acked.insert(item_id, ack.rate).is_none());
                            prop_assert_eq!(ack.progress.rated, acked.len());
                        }
                        Err(EvalError::AlreadyRated(_)) => prop_assert!(acked.contains_key(&item_id)),
                        Err(EvalError::UnknownItem(_)) => prop_assert!(item >= n_items),
                        Err(EvalError::InvalidRate(_)) => prop_assert!(!matches!(rate, "A" | "B" | "C" | "D" | "a")),
                        Err(e) => prop_assert!(false, "unexpected {e}"),
                    }
                }
            }
        }
        let session = store.session(&id).unwrap();
        prop_assert_eq!(&session.ratings, &acked);
        match store.summarize(&SummaryFilter::default()) {
            Ok(s) => {
                prop_assert_eq!(s.overall.total, acked.len());
                let by_rate: usize = Rate::ALL.iter().map(|r| s.overall.count(*r)).sum();
                prop_assert_eq!(by_rate, acked.len());
                for r in Rate::ALL {
                    prop_assert_eq!(s.overall.count(r), acked.values().filter(|&&v| v == r).count());
                }
            }
            Err(EvalError::NoRatings) => prop_assert!(acked.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn exemplar_constructor_rejects_marker_lines() {
    assert!(Exemplar::new("s", "fine\n[Transferred]: leak", "t").is_err());
    assert!(Exemplar::new("s", "fine", "t").is_ok());
}
