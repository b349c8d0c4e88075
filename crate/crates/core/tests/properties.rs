//! Property tests over the text, feature, ensemble and eval invariants.

use proptest::prelude::*;

use sandhan::classifiers::ClassifierKind;
use sandhan::ensemble::{vote, EnsembleConfig, Prediction};
use sandhan::eval::kfold_split;
use sandhan::features::{entropy, plain_analysis, vectorize, Vocabulary};
use sandhan::text::{normalize, split_sentences, tokenize};

/// Mixed-script character soup: Bengali letters and signs (including the
/// decomposed nukta pairs), Latin, digits, punctuation, whitespace, zero
/// width joiners.
fn soup_char() -> impl Strategy<Value = char> {
    prop::sample::select(vec![
        'ক', 'খ', 'গ', 'চ', 'ছ', 'ট', 'ত', 'দ', 'ন', 'প', 'ব', 'ম', 'র', 'ল', 'শ', 'স', 'হ',
        'া', 'ি', 'ু', 'ে', 'ো', '্', 'ং', 'ঁ',
        'য', '\u{09BC}', '\u{09DF}', 'ড', '\u{09DD}',
        'অ', 'ই', 'এ',
        '০', '১', '৯', '0', '7',
        'a', 'b', 'C', 'z', 'é',
        '।', '?', '!', '.', ',', '"',
        ' ', ' ', ' ', '\t', '\n',
        '\u{200C}', '\u{200D}',
    ])
}

fn soup(max_len: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(soup_char(), 0..max_len).prop_map(|cs| cs.into_iter().collect())
}

fn is_terminator(c: char) -> bool {
    c == '\u{0964}' || c == '\u{0965}' || c == '?' || c == '!' || c == '.'
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in soup(60)) {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn normalize_never_grows(s in soup(60)) {
        prop_assert!(normalize(&s).chars().count() <= s.chars().count());
    }

    #[test]
    fn tokenize_preserves_non_whitespace(s in soup(60)) {
        let text = normalize(&s);
        let mut from_text: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut from_tokens: Vec<char> = tokenize(&text)
            .iter()
            .flat_map(|t| t.surface.chars())
            .collect();
        from_text.sort_unstable();
        from_tokens.sort_unstable();
        prop_assert_eq!(from_text, from_tokens);
    }

    #[test]
    fn split_preserves_terminators(s in soup(60)) {
        let text = normalize(&s);
        let joined = split_sentences(&text).join(" ");
        let count = |t: &str| t.chars().filter(|&c| is_terminator(c)).count();
        prop_assert_eq!(count(&text), count(&joined));
    }

    #[test]
    fn sentence_type_is_total(s in soup(40)) {
        let tokens = tokenize(&normalize(&s));
        let a = sandhan::text::detect_sentence_type(&tokens);
        let b = sandhan::text::detect_sentence_type(&tokens);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sparse_vectors_are_unit_or_empty(
        docs in prop::collection::vec(prop::collection::vec("[a-e]{1,3}", 1..8), 1..6),
        query in prop::collection::vec("[a-g]{1,3}", 0..8),
    ) {
        let token_lists: Vec<_> = docs.iter().map(|words| tokenize(&words.join(" "))).collect();
        let vocab = Vocabulary::build(&token_lists).unwrap();
        let tokens = tokenize(&query.join(" "));
        let fv = vectorize(&tokens, &vocab, &plain_analysis(&tokens));
        if fv.sparse.is_empty() {
            prop_assert!(fv.counts.is_empty());
        } else {
            prop_assert!((fv.sparse_l2() - 1.0).abs() < 1e-9);
        }
        // ids strictly increasing
        prop_assert!(fv.sparse.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn entropy_within_bounds(words in prop::collection::vec("[a-d]{1,2}", 1..20)) {
        let tokens = tokenize(&words.join(" "));
        let h = entropy(&tokens).unwrap();
        let distinct = {
            let mut d: Vec<&str> = tokens.iter().map(|t| t.normalized.as_str()).collect();
            d.sort_unstable();
            d.dedup();
            d.len()
        };
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (distinct as f64).log2() + 1e-12);
        if distinct == 1 {
            prop_assert!(h.abs() < 1e-12);
        }
    }

    #[test]
    fn vote_is_permutation_invariant(
        cats in prop::collection::vec(prop::option::of(0usize..4), 4),
        shuffle_seed in 0u64..1000,
    ) {
        let config = EnsembleConfig::default();
        let base: Vec<Prediction> = ClassifierKind::ALL
            .iter()
            .zip(&cats)
            .map(|(&source, &category)| Prediction { category, source })
            .collect();
        let mut permuted_cats = cats.clone();
        let mut rng = sandhan::rng::Rng::new(shuffle_seed);
        rng.shuffle(&mut permuted_cats);
        let permuted: Vec<Prediction> = ClassifierKind::ALL
            .iter()
            .zip(&permuted_cats)
            .map(|(&source, &category)| Prediction { category, source })
            .collect();
        let a = vote(&base, &config).unwrap();
        let b = vote(&permuted, &config).unwrap();
        prop_assert_eq!(a.winners, b.winners);
        prop_assert_eq!(a.all_null, b.all_null);
        // weights always sum to one with the null share
        let total: f64 = a.weights.values().sum::<f64>() + a.null_weight;
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn folds_partition(n in 2usize..60, k_offset in 0usize..8, seed in 0u64..100) {
        let k = 2 + k_offset.min(n - 2);
        let folds = kfold_split(n, k, seed).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
