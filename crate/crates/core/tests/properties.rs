use std::collections::HashSet;

use metores_core::corpus::{split, Label, Sample, SplitSpec};
use metores_core::eval::{accuracy, prf_toponyms, summarize, SpanRef};
use metores_core::model::{ModelConfig, ModelParams};
use metores_core::pipeline::{detect, geoparse, masked_mention, split_sentences, EntityKind, Gazetteer, GazetteerDetector};
use metores_core::tokenizer::{build_vocab_from_texts, tokenize_align, truncate_around_span};
use metores_core::trainer::Prediction;
use metores_core::transforms::{augment, mask_target, AugmentConfig, TargetPool};
use proptest::prelude::*;

const WORDS: &[&str] = &["the", "city", "of", "Rome", "won", "a", "match", ",", ".", "river", "Zürich", "met", "San", "José"];

fn sentence() -> impl Strategy<Value = (Vec<&'static str>, usize, usize)> {
    prop::collection::vec(prop::sample::select(WORDS), 2..14).prop_flat_map(|words| {
        let n = words.len();
        (Just(words), 0..n).prop_flat_map(move |(w, s)| {
            let max = (s + 3).min(n);
            (Just(w), Just(s), (s + 1)..=max)
        })
    })
}

/// Text of `words` joined by spaces and the char span of words `s..e`.
fn render(words: &[&str], s: usize, e: usize) -> (String, usize, usize) {
    let mut text = String::new();
    let (mut start, mut end) = (0, 0);
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        if i == s {
            start = text.chars().count();
        }
        text.push_str(w);
        if i + 1 == e {
            end = text.chars().count();
        }
    }
    (text, start, end)
}

fn sample(id: usize, key: &str, label: Label) -> Sample {
    Sample::new(format!("s{id}"), format!("{key} is here"), 0, key.chars().count(), label, "p").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn alignment_covers_exactly_the_target((words, s, e) in sentence(), vocab_size in 10usize..80) {
        let (text, start, end) = render(&words, s, e);
        let vocab = build_vocab_from_texts(WORDS.iter().copied(), vocab_size.max(24)).unwrap();
        let input = tokenize_align(&text, start..end, &vocab).unwrap();
        let target: Vec<_> = input.target_range().map(|p| input.alignment[p].clone().unwrap()).collect();
        prop_assert_eq!(target.first().unwrap().start, start);
        prop_assert_eq!(target.last().unwrap().end, end);
        let all: Vec<_> = input.alignment.iter().flatten().collect();
        for w in all.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        for (p, r) in input.alignment.iter().enumerate() {
            if let Some(r) = r {
                let inside = r.start >= start && r.end <= end;
                prop_assert_eq!(inside, input.target_range().contains(&p));
            }
        }
    }

    #[test]
    fn truncation_is_idempotent_and_keeps_the_target((words, s, e) in sentence(), max_len in 5usize..16) {
        let (text, start, end) = render(&words, s, e);
        let vocab = build_vocab_from_texts(WORDS.iter().copied(), 60).unwrap();
        let input = tokenize_align(&text, start..end, &vocab).unwrap();
        match truncate_around_span(&input, max_len) {
            Ok(once) => {
                prop_assert!(once.len() <= max_len);
                prop_assert_eq!(once.decode_target(&vocab), input.decode_target(&vocab));
                prop_assert_eq!(truncate_around_span(&once, max_len).unwrap(), once);
            }
            Err(_) => prop_assert!(input.target_len() + 2 > max_len),
        }
    }

    #[test]
    fn masked_targets_tokenize_identically((words, s, e) in sentence(), other in prop::sample::select(WORDS)) {
        let (text, start, end) = render(&words, s, e);
        let a = Sample::new("a", &text, start, end, Label::Literal, "p").unwrap();
        let mut swapped = words.clone();
        swapped.splice(s..e, [other]);
        let (text_b, start_b, end_b) = render(&swapped, s, s + 1);
        let b = Sample::new("b", &text_b, start_b, end_b, Label::Literal, "p").unwrap();
        let vocab = build_vocab_from_texts(WORDS.iter().copied(), 60).unwrap();
        let (ma, mb) = (mask_target(&a), mask_target(&b));
        prop_assert_eq!(
            tokenize_align(&ma.text, ma.span(), &vocab).unwrap().ids,
            tokenize_align(&mb.text, mb.span(), &vocab).unwrap().ids
        );
    }

    #[test]
    fn lexical_split_has_no_shared_keys(keys in prop::collection::vec(0usize..40, 20..120), seed in any::<u64>()) {
        let samples: Vec<Sample> = keys.iter().enumerate()
            .map(|(i, k)| sample(i, &format!("Place{k}"), if i % 2 == 0 { Label::Literal } else { Label::Metonymic }))
            .collect();
        if let Ok(parts) = split(&samples, &SplitSpec::lexical(vec![0.7, 0.3], seed)) {
            let a: HashSet<&str> = parts[0].iter().map(|s| s.pmw_key.as_str()).collect();
            let b: HashSet<&str> = parts[1].iter().map(|s| s.pmw_key.as_str()).collect();
            prop_assert!(a.is_disjoint(&b));
            prop_assert_eq!(parts[0].len() + parts[1].len(), samples.len());
        }
    }

    #[test]
    fn augmentation_preserves_labels_and_context(n in 1usize..12, copies in 0usize..10, seed in any::<u64>()) {
        let names = ["Rome", "Oslo", "New York", "Lima"];
        let samples: Vec<Sample> = (0..n).map(|i| {
            let name = names[i % names.len()];
            let text = format!("Yesterday {name} won.");
            Sample::new(format!("s{i}"), text, 10, 10 + name.chars().count(), if i % 3 == 0 { Label::Literal } else { Label::Metonymic }, "p").unwrap()
        }).collect();
        let pool = TargetPool::from_samples(&samples, seed);
        let config = AugmentConfig { copies, same_dataset_only: false };
        let out = augment(&samples, &pool, &config).unwrap();
        prop_assert_eq!(out.len(), n * (copies + 1));
        prop_assert_eq!(&out, &augment(&samples, &pool, &config).unwrap());
        for (k, s) in out.iter().enumerate().skip(n) {
            let orig = &samples[(k - n) / copies];
            prop_assert_eq!(s.label, orig.label);
            prop_assert!(s.text.starts_with("Yesterday "));
            prop_assert!(s.text.ends_with(" won."));
            prop_assert!(pool.entries().contains(&s.target().to_string()));
        }
    }

    #[test]
    fn accuracy_of_flipped_predictions_complements(labels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let lab = |b: bool| if b { Label::Metonymic } else { Label::Literal };
        let gold: Vec<Sample> = labels.iter().enumerate().map(|(i, &(g, _))| sample(i, "Rome", lab(g))).collect();
        let preds: Vec<Prediction> = labels.iter().enumerate().map(|(i, &(_, p))| Prediction { id: format!("s{i}"), label: lab(p), probs: [0.5, 0.5] }).collect();
        let flipped: Vec<Prediction> = preds.iter().map(|p| Prediction { label: p.label.flip(), ..p.clone() }).collect();
        let (a, b) = (accuracy(&preds, &gold).unwrap(), accuracy(&flipped, &gold).unwrap());
        let n = gold.len() as f64;
        prop_assert_eq!((a * n).round() + (b * n).round(), n);
        prop_assert!((a + b - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn prf_swap_exchanges_precision_and_recall(
        pred in prop::collection::btree_set((0usize..3, 0usize..10), 0..15),
        gold in prop::collection::btree_set((0usize..3, 0usize..10), 0..15),
    ) {
        // Unit-width slots never overlap each other.
        let to_spans = |set: &std::collections::BTreeSet<(usize, usize)>| -> Vec<SpanRef> {
            set.iter().map(|&(d, k)| SpanRef::new(format!("d{d}"), 2 * k, 2 * k + 1)).collect()
        };
        let (p, g) = (to_spans(&pred), to_spans(&gold));
        let a = prf_toponyms(&p, &g).unwrap();
        let b = prf_toponyms(&g, &p).unwrap();
        prop_assert_eq!(a.precision, b.recall);
        prop_assert_eq!(a.recall, b.precision);
        prop_assert_eq!(a.f1, b.f1);
    }

    #[test]
    fn summarize_ignores_order(mut values in prop::collection::vec(-10.0f64..10.0, 1..40), seed in any::<u64>()) {
        let a = summarize(&values).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(values.as_mut_slice(), &mut rng);
        let b = summarize(&values).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-12);
        prop_assert!((a.std - b.std).abs() <= 1e-12);
        prop_assert_eq!(a.n, b.n);
    }

    #[test]
    fn sentences_are_ordered_and_trimmed(text in "[A-Za-z .!?\n]{0,80}") {
        let chars: Vec<char> = text.chars().collect();
        let ranges = split_sentences(&text);
        for r in &ranges {
            prop_assert!(r.start < r.end && r.end <= chars.len());
            prop_assert!(!chars[r.start].is_whitespace() && !chars[r.end - 1].is_whitespace());
        }
        for w in ranges.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
    }

    #[test]
    fn detection_and_geoparse_are_consistent(picks in prop::collection::vec((0usize..6, 0usize..4, any::<bool>()), 1..12), seed in 0u64..50) {
        let names = ["Rome", "Oslo", "New York", "New York City", "Lima", "Acme Corp"];
        let frames = ["We saw {} today.", "{} won again!", "Rain in {} stopped.", "Is {} far?"];
        let mut doc = String::new();
        for &(n, f, upper) in &picks {
            let name = if upper { names[n].to_string() } else { names[n].to_lowercase() };
            if !doc.is_empty() {
                doc.push(' ');
            }
            doc.push_str(&frames[f].replace("{}", &name));
        }
        let mut g = Gazetteer::from_entries(names[..5].iter().copied());
        g.insert("acme corp", EntityKind::Organization);
        let det = GazetteerDetector::new(g);
        let spans = detect("doc", &doc, &det);
        for w in spans.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        let vocab = build_vocab_from_texts([doc.as_str()], 80).unwrap();
        let params = ModelParams::init(&ModelConfig::tiny(vocab.len()), seed).unwrap();
        let literal = geoparse("doc", &doc, &det, &params, &vocab).unwrap();
        for s in &literal {
            prop_assert_eq!(s.kind, EntityKind::Location);
            prop_assert!(spans.contains(s));
        }
        // Each masked copy differs from its sentence only at its own mention.
        let sentences = split_sentences(&doc);
        let chars: Vec<char> = doc.chars().collect();
        for s in &spans {
            let m = masked_mention(&doc, &sentences, s).unwrap();
            let sent = sentences.iter().find(|r| r.start <= s.start && s.end <= r.end).unwrap();
            let before: String = chars[sent.start..s.start].iter().collect();
            let after: String = chars[s.end..sent.end].iter().collect();
            prop_assert_eq!(m.text, format!("{before}X{after}"));
        }
    }
}
