//! Property tests for the invariants that must hold for all inputs, not just
//! the worked examples: chunking identity, parser round trips and crash
//! freedom, metric cross-consistency, and corpus round trips.

use std::collections::BTreeSet;

use proptest::prelude::*;

use billscreen_core::corpus::{self, BillRecord, LabeledPair, PairKey};
use billscreen_core::evalbench::{
    accuracy, confusion, filtered_accuracy, majority_baseline, PredictionEntry, PredictionSet,
};
use billscreen_core::promptkit::{
    format_assessment, parse_assessment, render_parse_roundtrip_check, Answer,
};
use billscreen_core::textbudget::{chunk_text, estimate_tokens};

proptest! {
    #[test]
    fn chunk_concatenation_is_identity(
        text in ".{0,2000}",
        budget in 32usize..256,
    ) {
        let plan = chunk_text(&text, budget).unwrap();
        prop_assert_eq!(plan.chunks.concat(), text);
        for (chunk, est) in plan.chunks.iter().zip(&plan.estimated_tokens_per_chunk) {
            prop_assert!(!chunk.is_empty());
            prop_assert_eq!(*est, estimate_tokens(chunk));
            prop_assert!(*est <= budget);
        }
    }

    #[test]
    fn estimate_is_subadditive_within_one(a in ".{0,500}", b in ".{0,500}") {
        let combined = format!("{a}{b}");
        prop_assert!(
            estimate_tokens(&combined) <= estimate_tokens(&a) + estimate_tokens(&b) + 1
        );
    }

    #[test]
    fn estimate_is_monotone_in_length(text in ".{0,500}", cut in 0usize..500) {
        let chars: Vec<char> = text.chars().collect();
        let cut = cut.min(chars.len());
        let prefix: String = chars[..cut].iter().collect();
        prop_assert!(estimate_tokens(&prefix) <= estimate_tokens(&text));
    }
}

fn clean_explanation() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[A-Za-z0-9 .,;*_'()\\n-]{1,200}")
        .unwrap()
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty, no field-label substrings", |s| {
            let lower = s.to_lowercase();
            !s.is_empty()
                && !lower.contains("answer")
                && !lower.contains("explanation")
                && !lower.contains("confidence")
        })
}

proptest! {
    #[test]
    fn wellformed_assessments_round_trip(
        yes in any::<bool>(),
        explanation in clean_explanation(),
        confidence in 0u8..=100,
    ) {
        let answer = if yes { Answer::Yes } else { Answer::No };
        let formatted = format_assessment(answer, &explanation, confidence);
        let parsed = parse_assessment(&formatted, "b", "c", "m").unwrap();
        prop_assert_eq!(parsed.answer, answer);
        prop_assert_eq!(&parsed.explanation, &explanation);
        prop_assert_eq!(parsed.confidence, confidence);
        prop_assert!(render_parse_roundtrip_check(&parsed));
    }

    #[test]
    fn parser_never_panics_on_arbitrary_input(raw in "\\PC{0,500}") {
        let _ = parse_assessment(&raw, "b", "c", "m");
    }

    #[test]
    fn parser_never_panics_on_label_shaped_noise(
        raw in "(ANSWER|answer|EXPLANATION|CONFIDENCE|[:.*_ \\n]|YES|NO|[0-9]){0,60}"
    ) {
        let _ = parse_assessment(&raw, "b", "c", "m");
    }
}

fn label_set(max: usize) -> impl Strategy<Value = Vec<LabeledPair>> {
    proptest::collection::vec(any::<bool>(), 1..max).prop_map(|bools| {
        bools
            .into_iter()
            .enumerate()
            .map(|(i, relevant)| LabeledPair {
                bill_id: format!("hr{i:04}"),
                company_id: "c1".into(),
                relevant,
            })
            .collect()
    })
}

fn predictions_for(labels: &[LabeledPair], calls: &[(bool, u8)]) -> PredictionSet {
    let entries = labels
        .iter()
        .zip(calls)
        .map(|(l, &(predicted, confidence))| PredictionEntry {
            key: l.key(),
            predicted,
            confidence,
        })
        .collect();
    PredictionSet::new("m", entries, 0).unwrap()
}

proptest! {
    #[test]
    fn baseline_equals_constant_majority_predictor(labels in label_set(60)) {
        let positive = labels.iter().filter(|l| l.relevant).count();
        let majority = positive * 2 >= labels.len();
        let calls: Vec<(bool, u8)> = vec![(majority, 50); labels.len()];
        let preds = predictions_for(&labels, &calls);

        let baseline = majority_baseline(&labels).unwrap();
        let (acc, n) = accuracy(&preds, &labels).unwrap();
        prop_assert_eq!(n, labels.len());
        if positive * 2 == labels.len() {
            // Exact tie: either constant predictor scores 0.5.
            prop_assert_eq!(baseline, 0.5);
            prop_assert_eq!(acc, 0.5);
        } else {
            prop_assert_eq!(baseline, acc);
        }
    }

    #[test]
    fn confusion_accuracy_equals_accuracy_exactly(
        labels in label_set(60),
        seed in any::<u64>(),
    ) {
        let calls: Vec<(bool, u8)> = labels
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let x = seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64);
                ((x >> 17) & 1 == 1, 1 + ((x >> 23) % 100) as u8)
            })
            .collect();
        let preds = predictions_for(&labels, &calls);
        let (acc, _) = accuracy(&preds, &labels).unwrap();
        let counts = confusion(&preds, &labels).unwrap();
        prop_assert_eq!(counts.accuracy(), acc);
        prop_assert_eq!(counts.total(), labels.len());
    }

    #[test]
    fn retained_count_is_non_increasing_in_threshold(
        labels in label_set(60),
        seed in any::<u64>(),
    ) {
        let calls: Vec<(bool, u8)> = labels
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let x = seed.wrapping_mul(2862933555777941757).wrapping_add(i as u64);
                ((x >> 11) & 1 == 1, 1 + ((x >> 29) % 100) as u8)
            })
            .collect();
        let preds = predictions_for(&labels, &calls);

        let mut previous = usize::MAX;
        for threshold in 0..=100u32 {
            let retained = filtered_accuracy(&preds, &labels, threshold)
                .unwrap()
                .map_or(0, |(_, n)| n);
            prop_assert!(retained <= previous);
            previous = retained;
        }
        // Confidences are all >= 1, so threshold 0 keeps everything...
        let (full, n) = accuracy(&preds, &labels).unwrap();
        let (at_zero, retained) = filtered_accuracy(&preds, &labels, 0).unwrap().unwrap();
        prop_assert_eq!(at_zero, full);
        prop_assert_eq!(retained, n);
        // ...and threshold 100 can keep nothing.
        prop_assert_eq!(filtered_accuracy(&preds, &labels, 100).unwrap(), None);
    }
}

fn bill_records() -> impl Strategy<Value = Vec<BillRecord>> {
    let subject = proptest::string::string_regex("[A-Za-z][A-Za-z ]{0,14}").unwrap();
    let text = proptest::string::string_regex("[\\PC\\n]{0,120}").unwrap();
    let title = proptest::string::string_regex("[A-Za-z][\\PC]{0,60}").unwrap();
    let record = (
        title,
        text,
        proptest::collection::vec(subject, 0..4),
        proptest::option::of("[A-Za-z. ]{1,20}"),
    );
    proptest::collection::vec(record, 0..8).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (title, summary, subjects, sponsor))| BillRecord {
                bill_id: format!("hr{i:04}"),
                official_title: title,
                summary_text: summary,
                subjects,
                sponsor_name: sponsor.filter(|s| !s.is_empty()),
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn bills_write_load_round_trip(bills in bill_records()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bills.csv");
        corpus::write_bills(&path, &bills).unwrap();
        let loaded = corpus::load_bills(&path).unwrap();
        prop_assert_eq!(loaded, bills);
    }
}

#[test]
fn pair_keys_order_lexicographically() {
    let mut keys = vec![
        PairKey::new("hr2", "c1"),
        PairKey::new("hr1", "c2"),
        PairKey::new("hr1", "c1"),
    ];
    keys.sort();
    assert_eq!(
        keys,
        vec![
            PairKey::new("hr1", "c1"),
            PairKey::new("hr1", "c2"),
            PairKey::new("hr2", "c1"),
        ]
    );
    let set: BTreeSet<PairKey> = keys.into_iter().collect();
    assert_eq!(set.len(), 3);
}
