//! Root-verb extraction by suffix stripping over the Bengali inflection
//! table, function/content-word tagging, and sentence-level grammatical
//! analysis (tense, person, subject/object counts).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};
use crate::text::{self, SentenceType, Token};

/// The ten tense subtypes of the shipped suffix inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tense {
    SimplePresent,
    PresentContinuous,
    PresentPerfect,
    SimplePast,
    PastContinuous,
    PastPerfect,
    HabitualPast,
    SimpleFuture,
    FutureContinuous,
    FuturePerfect,
}

impl Tense {
    pub const ALL: [Tense; 10] = [
        Tense::SimplePresent,
        Tense::PresentContinuous,
        Tense::PresentPerfect,
        Tense::SimplePast,
        Tense::PastContinuous,
        Tense::PastPerfect,
        Tense::HabitualPast,
        Tense::SimpleFuture,
        Tense::FutureContinuous,
        Tense::FuturePerfect,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Tense::SimplePresent => "simple_present",
            Tense::PresentContinuous => "present_continuous",
            Tense::PresentPerfect => "present_perfect",
            Tense::SimplePast => "simple_past",
            Tense::PastContinuous => "past_continuous",
            Tense::PastPerfect => "past_perfect",
            Tense::HabitualPast => "habitual_past",
            Tense::SimpleFuture => "simple_future",
            Tense::FutureContinuous => "future_continuous",
            Tense::FuturePerfect => "future_perfect",
        }
    }

    pub fn parse(s: &str) -> Option<Tense> {
        Self::ALL.iter().copied().find(|t| t.name() == s)
    }
}

impl fmt::Display for Tense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Person {
    First,
    Second,
    Third,
}

impl Person {
    pub const ALL: [Person; 3] = [Person::First, Person::Second, Person::Third];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|p| *p == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Person::First => "first",
            Person::Second => "second",
            Person::Third => "third",
        }
    }

    pub fn parse(s: &str) -> Option<Person> {
        Self::ALL.iter().copied().find(|p| p.name() == s)
    }
}

impl fmt::Display for Person {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the suffix inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixEntry {
    pub suffix: String,
    pub tense: Tense,
    pub person: Option<Person>,
}

/// The loaded suffix inventory, in file order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuffixTable {
    entries: Vec<SuffixEntry>,
}

const BUILTIN_SUFFIXES: &str = include_str!("../data/suffixes.tsv");
const BUILTIN_FUNCTION_WORDS: &str = include_str!("../data/function_words.txt");

impl SuffixTable {
    /// Parse TSV content: `tense_subtype<TAB>person<TAB>suffix`, '#' comments.
    pub fn parse_str(content: &str, origin: &str) -> Result<SuffixTable> {
        let mut entries: Vec<SuffixEntry> = Vec::new();
        let mut seen: HashSet<(String, Tense)> = HashSet::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    lineno + 1,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let tense = Tense::parse(fields[0].trim()).ok_or_else(|| {
                Error::parse(origin, lineno + 1, format!("unknown tense subtype '{}'", fields[0]))
            })?;
            let person_field = fields[1].trim();
            let person = if person_field.is_empty() {
                None
            } else {
                Some(Person::parse(person_field).ok_or_else(|| {
                    Error::parse(origin, lineno + 1, format!("unknown person '{}'", person_field))
                })?)
            };
            let suffix = text::normalize(fields[2].trim());
            if suffix.is_empty() {
                return Err(Error::parse(origin, lineno + 1, "empty suffix"));
            }
            if !seen.insert((suffix.clone(), tense)) {
                return Err(Error::parse(
                    origin,
                    lineno + 1,
                    format!("duplicate (suffix, tense) row: '{suffix}' {tense}"),
                ));
            }
            entries.push(SuffixEntry { suffix, tense, person });
        }
        if entries.is_empty() {
            return Err(Error::EmptyInput(format!("suffix table '{origin}' has no entries")));
        }
        Ok(SuffixTable { entries })
    }

    pub fn load(path: &Path) -> Result<SuffixTable> {
        let content = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let content = String::from_utf8(content).map_err(|e| Error::Encoding {
            offset: e.utf8_error().valid_up_to(),
            message: format!("suffix table '{}' is not UTF-8", path.display()),
        })?;
        Self::parse_str(&content, &path.display().to_string())
    }

    /// The inventory shipped with the crate.
    pub fn builtin() -> SuffixTable {
        Self::parse_str(BUILTIN_SUFFIXES, "builtin suffixes.tsv").expect("builtin suffix table parses")
    }

    pub fn entries(&self) -> &[SuffixEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First entry (in file order) whose suffix string equals `suffix`.
    pub fn lookup(&self, suffix: &str) -> Option<&SuffixEntry> {
        self.entries.iter().find(|e| e.suffix == suffix)
    }

    pub fn tense_subtype_count(&self) -> usize {
        let mut tenses: HashSet<Tense> = HashSet::new();
        for e in &self.entries {
            tenses.insert(e.tense);
        }
        tenses.len()
    }

    /// Does `word` end with any table suffix (leaving a non-empty root)?
    pub fn has_suffix_of(&self, word: &str) -> bool {
        self.entries
            .iter()
            .any(|e| word.len() > e.suffix.len() && word.ends_with(e.suffix.as_str()))
    }
}

/// Analysis of one inflected verb form: `root + suffix` reconstructs the
/// surface form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbAnalysis {
    pub root: String,
    pub suffix: String,
    pub tense: Tense,
    pub person: Option<Person>,
}

fn is_bengali_combining(c: char) -> bool {
    matches!(c,
        '\u{0981}'..='\u{0983}'
        | '\u{09BC}'
        | '\u{09BE}'..='\u{09CD}'
        | '\u{09D7}'
        | '\u{09E2}'..='\u{09E3}'
    ) || c == text::ZWJ
        || c == text::ZWNJ
}

/// A root is valid when it is at least one grapheme cluster and does not
/// begin with a combining sign.
fn is_valid_root(root: &str) -> bool {
    if root.graphemes(true).next().is_none() {
        return false;
    }
    match root.chars().next() {
        Some(c) => !is_bengali_combining(c),
        None => false,
    }
}

/// Strip the longest matching table suffix from `word`, returning the root
/// with the suffix row's tense and person. `None` means no suffix matches:
/// the word is not recognized as an inflected verb.
pub fn extract_root_verb(word: &str, table: &SuffixTable) -> Option<VerbAnalysis> {
    let mut best: Option<&SuffixEntry> = None;
    let mut best_len = 0usize;
    for entry in table.entries() {
        let s = entry.suffix.as_str();
        if word.len() <= s.len() || !word.ends_with(s) {
            continue;
        }
        if !is_valid_root(&word[..word.len() - s.len()]) {
            continue;
        }
        let cp_len = s.chars().count();
        // strictly longer wins; equal length keeps the earlier table row
        if best.is_none() || cp_len > best_len {
            best = Some(entry);
            best_len = cp_len;
        }
    }
    best.map(|entry| VerbAnalysis {
        root: word[..word.len() - entry.suffix.len()].to_string(),
        suffix: entry.suffix.clone(),
        tense: entry.tense,
        person: entry.person,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordClass {
    FunctionWord,
    ContentWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordClassTag {
    pub token_index: usize,
    pub kind: WordClass,
}

/// Closed-class word list; membership marks a token as a function word.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionLexicon {
    words: HashSet<String>,
}

impl FunctionLexicon {
    pub fn parse_str(content: &str) -> FunctionLexicon {
        let words = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(text::normalize)
            .collect();
        FunctionLexicon { words }
    }

    pub fn load(path: &Path) -> Result<FunctionLexicon> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self::parse_str(&content))
    }

    pub fn builtin() -> FunctionLexicon {
        Self::parse_str(BUILTIN_FUNCTION_WORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tag every token as function word or content word. Punctuation counts as
/// a function word.
pub fn tag_function_words(tokens: &[Token], lexicon: &FunctionLexicon) -> Vec<WordClassTag> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let kind = if t.is_punct() || lexicon.contains(&t.normalized) {
                WordClass::FunctionWord
            } else {
                WordClass::ContentWord
            };
            WordClassTag { token_index: i, kind }
        })
        .collect()
}

/// Decides which tokens are verb candidates. The default combines sentence
/// position with suffix shape; a real POS tagger can be substituted.
pub trait VerbGate {
    fn is_candidate(&self, tokens: &[Token], tags: &[WordClassTag], index: usize, table: &SuffixTable) -> bool;
}

/// Default gate: a token is a verb candidate when it is the last content
/// word of the sentence (Bengali is verb-final) or ends with a table suffix.
#[derive(Debug, Clone, Copy, Default)]
pub struct PositionSuffixGate;

impl VerbGate for PositionSuffixGate {
    fn is_candidate(&self, tokens: &[Token], tags: &[WordClassTag], index: usize, table: &SuffixTable) -> bool {
        if tags[index].kind != WordClass::ContentWord {
            return false;
        }
        let last_cw = tags.iter().rev().find(|t| t.kind == WordClass::ContentWord).map(|t| t.token_index);
        if last_cw == Some(index) {
            return true;
        }
        table.has_suffix_of(&tokens[index].normalized)
    }
}

/// Grammatical profile of one sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryAnalysis {
    pub sentence_type: SentenceType,
    /// (token index, analysis) for every gated token that stripped a suffix.
    pub verbs: Vec<(usize, VerbAnalysis)>,
    /// Token index of the main verb (the last analyzed verb).
    pub main_verb_index: Option<usize>,
    pub tense: Option<Tense>,
    pub person: Option<Person>,
    pub function_word_count: usize,
    pub content_word_count: usize,
    pub subject_count: usize,
    pub object_count: usize,
}

impl QueryAnalysis {
    pub fn main_verb(&self) -> Option<&VerbAnalysis> {
        self.verbs.last().map(|(_, a)| a)
    }
}

/// Analyze one sentence with the default verb gate.
pub fn analyze_query(tokens: &[Token], table: &SuffixTable, lexicon: &FunctionLexicon) -> Result<QueryAnalysis> {
    analyze_query_with_gate(tokens, table, lexicon, &PositionSuffixGate)
}

pub fn analyze_query_with_gate(
    tokens: &[Token],
    table: &SuffixTable,
    lexicon: &FunctionLexicon,
    gate: &dyn VerbGate,
) -> Result<QueryAnalysis> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("cannot analyze an empty token list".into()));
    }
    let tags = tag_function_words(tokens, lexicon);
    let sentence_type = crate::text::detect_sentence_type(tokens);

    let mut verbs: Vec<(usize, VerbAnalysis)> = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        if !gate.is_candidate(tokens, &tags, i, table) {
            continue;
        }
        if let Some(analysis) = extract_root_verb(&token.normalized, table) {
            verbs.push((i, analysis));
        }
    }

    let main_verb_index = verbs.last().map(|(i, _)| *i);
    let tense = verbs.last().map(|(_, a)| a.tense);
    let person = verbs.last().and_then(|(_, a)| a.person);

    let function_word_count = tags.iter().filter(|t| t.kind == WordClass::FunctionWord).count();
    let content_word_count = tags.len() - function_word_count;

    // Subjects and objects: content words before the main verb; the
    // objective markers কে and টি signal objects.
    let limit = main_verb_index.unwrap_or(tokens.len());
    let mut subject_count = 0usize;
    let mut object_count = 0usize;
    for tag in &tags {
        if tag.token_index >= limit || tag.kind != WordClass::ContentWord {
            continue;
        }
        let w = &tokens[tag.token_index].normalized;
        if w.ends_with("কে") || w.ends_with("টি") {
            object_count += 1;
        } else {
            subject_count += 1;
        }
    }

    Ok(QueryAnalysis {
        sentence_type,
        verbs,
        main_verb_index,
        tense,
        person,
        function_word_count,
        content_word_count,
        subject_count,
        object_count,
    })
}
