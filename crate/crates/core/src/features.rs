//! Feature extraction: TF-IDF term weights over a corpus vocabulary plus a
//! fixed-order dense block of grammatical meta-features, with synonym-based
//! query expansion for out-of-vocabulary words.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::QueryAnalysis;
use crate::text::{self, SentenceType, Token};

/// Version tag embedded in persisted models; bumped when the dense layout
/// changes.
pub const SCHEMA_VERSION: &str = "fv1";

/// Dense block layout. Tense, person and sentence-type one-hots follow the
/// scalar counters; the trailing slot is the constant gender feature
/// (Bengali verbs do not inflect for gender).
pub const D_LEN: usize = 0;
pub const D_DISTINCT: usize = 1;
pub const D_ENTROPY: usize = 2;
pub const D_FW: usize = 3;
pub const D_CW: usize = 4;
pub const D_SUBJ: usize = 5;
pub const D_OBJ: usize = 6;
pub const D_TENSE: usize = 7; // 10 slots
pub const D_PERSON: usize = 17; // 3 slots
pub const D_STYPE: usize = 20; // 5 slots
pub const D_GENDER: usize = 25;
pub const DENSE_LEN: usize = 26;

/// Term statistics of an ingested corpus: id and document frequency per
/// term, term ids dense in `[0, len)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: HashMap<String, (u32, u32)>,
    total_documents: usize,
}

impl Vocabulary {
    /// Count document frequencies over one token list per sentence.
    /// Punctuation tokens are not terms.
    pub fn build(corpus: &[Vec<Token>]) -> Result<Vocabulary> {
        if corpus.is_empty() {
            return Err(Error::EmptyInput("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut terms: HashMap<String, (u32, u32)> = HashMap::new();
        let mut next_id = 0u32;
        for tokens in corpus {
            let mut seen: Vec<&str> = Vec::new();
            for t in tokens {
                if t.is_punct() || seen.contains(&t.normalized.as_str()) {
                    continue;
                }
                seen.push(&t.normalized);
                match terms.get_mut(&t.normalized) {
                    Some((_, df)) => *df += 1,
                    None => {
                        terms.insert(t.normalized.clone(), (next_id, 1));
                        next_id += 1;
                    }
                }
            }
        }
        Ok(Vocabulary { terms, total_documents: corpus.len() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_documents(&self) -> usize {
        self.total_documents
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.terms.get(term).map(|(id, _)| *id)
    }

    pub fn df(&self, term: &str) -> u32 {
        self.terms.get(term).map(|(_, df)| *df).unwrap_or(0)
    }

    /// Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df(term) as f64;
        ((1.0 + self.total_documents as f64) / (1.0 + df)).ln() + 1.0
    }
}

/// Sparse TF-IDF weights (L2-normalized), raw term counts, and the dense
/// meta-feature block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// (term id, tf·idf weight), ids strictly increasing, L2 norm 1 or empty.
    pub sparse: Vec<(u32, f64)>,
    /// (term id, raw term frequency), same id order as `sparse`.
    pub counts: Vec<(u32, u32)>,
    pub dense: Vec<f64>,
}

impl FeatureVector {
    pub fn sparse_l2(&self) -> f64 {
        self.sparse.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Dot product of the sparse parts (cosine when both are unit length).
    pub fn sparse_dot(&self, other: &FeatureVector) -> f64 {
        let mut a = self.sparse.iter().peekable();
        let mut b = other.sparse.iter().peekable();
        let mut dot = 0.0;
        while let (Some((ia, wa)), Some((ib, wb))) = (a.peek(), b.peek()) {
            match ia.cmp(ib) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    dot += wa * wb;
                    a.next();
                    b.next();
                }
            }
        }
        dot
    }
}

/// Shannon entropy in bits of the token distribution.
pub fn entropy(tokens: &[Token]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("entropy of an empty token list".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.normalized.as_str()).or_insert(0) += 1;
    }
    let n = tokens.len() as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        let p = c as f64 / n;
        h -= p * p.log2();
    }
    Ok(h)
}

/// Build the feature vector for one sentence: L2-normalized TF-IDF over
/// in-vocabulary terms plus the fixed dense block. Out-of-vocabulary tokens
/// contribute nothing to the sparse part but still count in length, distinct
/// terms and entropy.
pub fn vectorize(tokens: &[Token], vocab: &Vocabulary, analysis: &QueryAnalysis) -> FeatureVector {
    let words: Vec<&Token> = tokens.iter().filter(|t| !t.is_punct()).collect();

    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut idf_by_id: BTreeMap<u32, f64> = BTreeMap::new();
    for t in &words {
        if let Some(id) = vocab.id(&t.normalized) {
            *counts.entry(id).or_insert(0) += 1;
            idf_by_id.entry(id).or_insert_with(|| vocab.idf(&t.normalized));
        }
    }
    let mut sparse: Vec<(u32, f64)> = counts
        .iter()
        .map(|(&id, &tf)| (id, tf as f64 * idf_by_id[&id]))
        .collect();
    let norm = sparse.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in sparse.iter_mut() {
            *w /= norm;
        }
    }

    let mut distinct: Vec<&str> = Vec::new();
    for t in &words {
        if !distinct.contains(&t.normalized.as_str()) {
            distinct.push(&t.normalized);
        }
    }
    let word_tokens: Vec<Token> = words.iter().map(|t| (*t).clone()).collect();
    let h = if word_tokens.is_empty() { 0.0 } else { entropy(&word_tokens).unwrap_or(0.0) };

    let mut dense = vec![0.0; DENSE_LEN];
    dense[D_LEN] = tokens.len() as f64;
    dense[D_DISTINCT] = distinct.len() as f64;
    dense[D_ENTROPY] = h;
    dense[D_FW] = analysis.function_word_count as f64;
    dense[D_CW] = analysis.content_word_count as f64;
    dense[D_SUBJ] = analysis.subject_count as f64;
    dense[D_OBJ] = analysis.object_count as f64;
    if let Some(t) = analysis.tense {
        dense[D_TENSE + t.index()] = 1.0;
    }
    if let Some(p) = analysis.person {
        dense[D_PERSON + p.index()] = 1.0;
    }
    dense[D_STYPE + analysis.sentence_type.index()] = 1.0;
    dense[D_GENDER] = 0.0;

    FeatureVector { sparse, counts: counts.into_iter().collect(), dense }
}

/// Synonym lexicon for query expansion; a word never maps to itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SynonymLexicon {
    map: HashMap<String, Vec<String>>,
}

const BUILTIN_SYNONYMS: &str = include_str!("../data/synonyms.tsv");

impl SynonymLexicon {
    pub fn parse_str(content: &str, origin: &str) -> Result<SynonymLexicon> {
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(2, '\t');
            let word = text::normalize(fields.next().unwrap_or(""));
            let syns = fields.next().ok_or_else(|| {
                Error::parse(origin, lineno + 1, "expected word<TAB>synonyms")
            })?;
            if word.is_empty() {
                return Err(Error::parse(origin, lineno + 1, "empty headword"));
            }
            let list: Vec<String> = syns
                .split(',')
                .map(|s| text::normalize(s.trim()))
                .filter(|s| !s.is_empty() && *s != word)
                .collect();
            map.insert(word, list);
        }
        Ok(SynonymLexicon { map })
    }

    pub fn load(path: &Path) -> Result<SynonymLexicon> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&content, &path.display().to_string())
    }

    pub fn builtin() -> SynonymLexicon {
        Self::parse_str(BUILTIN_SYNONYMS, "builtin synonyms.tsv").expect("builtin synonym lexicon parses")
    }

    pub fn empty() -> SynonymLexicon {
        SynonymLexicon { map: HashMap::new() }
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.map.get(word).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One applied replacement, kept for the query trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub token_index: usize,
    pub original: String,
    pub replacement: String,
}

/// Replace out-of-vocabulary tokens that have an in-vocabulary synonym with
/// the highest-df such synonym. In-vocabulary tokens are never touched.
pub fn expand_query(
    tokens: &[Token],
    synonyms: &SynonymLexicon,
    vocab: &Vocabulary,
) -> (Vec<Token>, Vec<Expansion>) {
    let mut out = tokens.to_vec();
    let mut applied = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        if token.is_punct() || vocab.df(&token.normalized) > 0 {
            continue;
        }
        let Some(candidates) = synonyms.synonyms(&token.normalized) else {
            continue;
        };
        let mut best: Option<(&String, u32)> = None;
        for syn in candidates {
            let df = vocab.df(syn);
            if df == 0 {
                continue;
            }
            // strictly-greater keeps the first listed on ties
            if best.map(|(_, bdf)| df > bdf).unwrap_or(true) {
                best = Some((syn, df));
            }
        }
        if let Some((syn, _)) = best {
            applied.push(Expansion {
                token_index: i,
                original: token.normalized.clone(),
                replacement: syn.clone(),
            });
            out[i] = Token {
                surface: syn.clone(),
                normalized: syn.clone(),
                script: token.script,
                char_span: token.char_span,
            };
        }
    }
    (out, applied)
}

/// Convenience for tests and fixtures: tokens for a whitespace-separated
/// string of plain words.
pub fn word_tokens(text: &str) -> Vec<Token> {
    crate::text::tokenize(&crate::text::normalize(text))
}

/// A neutral analysis for text without grammatical annotation (fixtures,
/// synthetic corpora).
pub fn plain_analysis(tokens: &[Token]) -> QueryAnalysis {
    QueryAnalysis {
        sentence_type: SentenceType::Unknown,
        verbs: Vec::new(),
        main_verb_index: None,
        tense: None,
        person: None,
        function_word_count: tokens.iter().filter(|t| t.is_punct()).count(),
        content_word_count: tokens.iter().filter(|t| !t.is_punct()).count(),
        subject_count: 0,
        object_count: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn docs(texts: &[&str]) -> Vec<Vec<Token>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn document_frequencies() {
        let vocab = Vocabulary::build(&docs(&["a b", "a"])).unwrap();
        assert_eq!(vocab.df("a"), 2);
        assert_eq!(vocab.df("b"), 1);
        assert_eq!(vocab.total_documents(), 2);
        assert_eq!(vocab.df("missing"), 0);
    }

    #[test]
    fn smoothed_idf() {
        let vocab = Vocabulary::build(&docs(&["a b", "a"])).unwrap();
        // idf(a) = ln((1+2)/(1+2)) + 1 = 1.0
        assert!((vocab.idf("a") - 1.0).abs() < 1e-12);
        assert!(vocab.idf("b") > 1.0);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(Vocabulary::build(&[]).is_err());
    }

    #[test]
    fn vectorize_normalizes_weights() {
        let vocab = Vocabulary::build(&docs(&["a a b", "a b"])).unwrap();
        let tokens = tokenize("a a b");
        let fv = vectorize(&tokens, &vocab, &plain_analysis(&tokens));
        // idf(a) = idf(b) = ln(3/3)+1 = 1 → pre-norm (2,1), post-norm (2,1)/√5
        assert_eq!(fv.sparse.len(), 2);
        assert!((fv.sparse[0].1 - 2.0 / 5f64.sqrt()).abs() < 1e-3);
        assert!((fv.sparse[1].1 - 1.0 / 5f64.sqrt()).abs() < 1e-3);
        assert!((fv.sparse_l2() - 1.0).abs() < 1e-9);
        assert_eq!(fv.counts, vec![(vocab.id("a").unwrap(), 2), (vocab.id("b").unwrap(), 1)]);
    }

    #[test]
    fn dense_counts_include_oov() {
        let vocab = Vocabulary::build(&docs(&["a b"])).unwrap();
        let tokens = tokenize("a a zzz");
        let fv = vectorize(&tokens, &vocab, &plain_analysis(&tokens));
        assert_eq!(fv.dense[D_LEN], 3.0);
        assert_eq!(fv.dense[D_DISTINCT], 2.0);
        // zzz is OOV: only `a` lands in the sparse part
        assert_eq!(fv.sparse.len(), 1);
        assert_eq!(fv.dense.len(), DENSE_LEN);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&tokenize("a b c d")).unwrap() - 2.0).abs() < 1e-12);
        assert!((entropy(&tokenize("a a b b")).unwrap() - 1.0).abs() < 1e-12);
        assert!((entropy(&tokenize("a a a b")).unwrap() - 0.8113).abs() < 1e-4);
        assert!(entropy(&[]).is_err());
        assert_eq!(entropy(&tokenize("a a a")).unwrap(), 0.0);
    }

    #[test]
    fn expansion_prefers_highest_df() {
        let vocab = Vocabulary::build(&docs(&["x x", "x y", "x", "x", "x", "y z"])).unwrap();
        // df(x)=5, df(y)=2
        let lex = SynonymLexicon::parse_str("oov\ty,x\n", "test").unwrap();
        let tokens = tokenize("oov z");
        let (expanded, applied) = expand_query(&tokens, &lex, &vocab);
        assert_eq!(expanded[0].normalized, "x");
        assert_eq!(applied.len(), 1);
        assert_eq!(applied[0].original, "oov");
        // in-vocabulary token untouched
        assert_eq!(expanded[1].normalized, "z");
    }

    #[test]
    fn expansion_noop_for_in_vocab_and_unknown() {
        let vocab = Vocabulary::build(&docs(&["x y"])).unwrap();
        let lex = SynonymLexicon::parse_str("x\ty\n", "test").unwrap();
        let tokens = tokenize("x unknownword");
        let (expanded, applied) = expand_query(&tokens, &lex, &vocab);
        assert!(applied.is_empty());
        assert_eq!(expanded[0].normalized, "x");
        assert_eq!(expanded[1].normalized, "unknownword");
    }

    #[test]
    fn lexicon_drops_self_mapping() {
        let lex = SynonymLexicon::parse_str("w\tw,v\n", "test").unwrap();
        assert_eq!(lex.synonyms("w").unwrap(), &["v".to_string()]);
    }
}
