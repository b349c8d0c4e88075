//! Unicode normalization, tokenization and sentence handling for
//! Bengali-script (and mixed-script) text.
//!
//! Normalization applies canonical composition, so the two encodings of a
//! cluster like য় (precomposed vs base + nukta) collapse to one form and
//! downstream suffix matching sees a single spelling.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const ZWNJ: char = '\u{200C}';
pub const ZWJ: char = '\u{200D}';
pub const DANDA: char = '\u{0964}';
pub const DOUBLE_DANDA: char = '\u{0965}';

/// Script class of a token, by dominant code-point block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Script {
    Bengali,
    Latin,
    Digit,
    Punct,
    Other,
}

/// Sentence type as signalled by terminal punctuation.
///
/// `Imperative` is declared for completeness; punctuation alone cannot
/// produce it, so detection returns `Unknown` in that case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SentenceType {
    Declarative,
    Interrogative,
    Exclamatory,
    Imperative,
    Unknown,
}

impl SentenceType {
    pub const ALL: [SentenceType; 5] = [
        SentenceType::Declarative,
        SentenceType::Interrogative,
        SentenceType::Exclamatory,
        SentenceType::Imperative,
        SentenceType::Unknown,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Canonically composed; lowercased when the script is Latin.
    pub normalized: String,
    pub script: Script,
    /// Code-point span (start, end], end exclusive, within the sentence.
    pub char_span: (usize, usize),
}

impl Token {
    pub fn is_punct(&self) -> bool {
        self.script == Script::Punct
    }
}

fn is_bengali(c: char) -> bool {
    ('\u{0980}'..='\u{09FF}').contains(&c)
}

fn is_bengali_digit(c: char) -> bool {
    ('\u{09E6}'..='\u{09EF}').contains(&c)
}

fn is_punct_char(c: char) -> bool {
    c == DANDA
        || c == DOUBLE_DANDA
        || c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{2013}' | '\u{2014}'
        )
}

fn char_class(c: char) -> Script {
    if c.is_ascii_digit() || is_bengali_digit(c) {
        Script::Digit
    } else if is_punct_char(c) {
        Script::Punct
    } else if is_bengali(c) {
        Script::Bengali
    } else if c.is_ascii_alphabetic() || (('\u{00C0}'..'\u{0250}').contains(&c) && c.is_alphabetic()) {
        Script::Latin
    } else {
        Script::Other
    }
}

/// Recompose the Bengali nukta pairs that canonical composition leaves
/// decomposed (they are composition exclusions): য়, ড়, ঢ়.
fn recompose_bengali(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        let composed = match (c, chars.peek()) {
            ('\u{09AF}', Some('\u{09BC}')) => Some('\u{09DF}'), // য় YYA
            ('\u{09A1}', Some('\u{09BC}')) => Some('\u{09DC}'), // ড় RRA
            ('\u{09A2}', Some('\u{09BC}')) => Some('\u{09DD}'), // ঢ় RHA
            _ => None,
        };
        if let Some(composite) = composed {
            chars.next();
            out.push(composite);
        } else {
            out.push(c);
        }
    }
    out
}

/// Normalize raw text: canonical composition, single-form Bengali clusters,
/// zero-width joiners kept only between Bengali letters, whitespace runs
/// collapsed to single spaces, ends trimmed.
pub fn normalize(raw: &str) -> String {
    let composed: String = raw.nfc().collect();
    let composed = recompose_bengali(&composed);

    // Drop ZWJ/ZWNJ unless both neighbours are Bengali non-punct characters.
    let chars: Vec<char> = composed.chars().collect();
    let mut kept = String::with_capacity(composed.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ZWJ || c == ZWNJ {
            let prev_bengali = i > 0 && is_bengali(chars[i - 1]) && !is_punct_char(chars[i - 1]);
            let next_bengali = chars
                .get(i + 1)
                .map(|&n| is_bengali(n) && !is_punct_char(n))
                .unwrap_or(false);
            if prev_bengali && next_bengali {
                kept.push(c);
            }
            continue;
        }
        kept.push(c);
    }

    // Collapse whitespace runs.
    let mut out = String::with_capacity(kept.len());
    let mut in_space = false;
    for c in kept.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
                in_space = true;
            }
        } else {
            out.push(c);
            in_space = false;
        }
    }
    let trimmed = out.trim();
    trimmed.to_string()
}

/// Normalize a byte buffer, reporting the offset of any invalid UTF-8.
pub fn normalize_bytes(raw: &[u8]) -> Result<String> {
    match std::str::from_utf8(raw) {
        Ok(s) => Ok(normalize(s)),
        Err(e) => Err(Error::Encoding {
            offset: e.valid_up_to(),
            message: "invalid UTF-8 sequence".to_string(),
        }),
    }
}

/// Split normalized text into tokens. Punctuation marks become single-char
/// tokens; other tokens are maximal runs of one script class, so Bengali
/// grapheme clusters are never cut.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_class = Script::Other;
    let mut run_start = 0usize;

    let flush = |tokens: &mut Vec<Token>, run: &mut String, class: Script, start: usize, end: usize| {
        if run.is_empty() {
            return;
        }
        let normalized = if class == Script::Latin {
            run.to_lowercase()
        } else {
            run.clone()
        };
        tokens.push(Token {
            surface: std::mem::take(run),
            normalized,
            script: class,
            char_span: (start, end),
        });
    };

    let mut idx = 0usize;
    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut tokens, &mut run, run_class, run_start, idx);
            idx += 1;
            continue;
        }
        if is_punct_char(c) {
            flush(&mut tokens, &mut run, run_class, run_start, idx);
            tokens.push(Token {
                surface: c.to_string(),
                normalized: c.to_string(),
                script: Script::Punct,
                char_span: (idx, idx + 1),
            });
            idx += 1;
            continue;
        }
        // ZWJ/ZWNJ continue the current Bengali run without changing class.
        let class = if (c == ZWJ || c == ZWNJ) && run_class == Script::Bengali && !run.is_empty() {
            Script::Bengali
        } else {
            char_class(c)
        };
        if run.is_empty() {
            run_start = idx;
            run_class = class;
        } else if class != run_class {
            flush(&mut tokens, &mut run, run_class, run_start, idx);
            run_start = idx;
            run_class = class;
        }
        run.push(c);
        idx += 1;
    }
    flush(&mut tokens, &mut run, run_class, run_start, idx);
    tokens
}

fn is_terminator(c: char) -> bool {
    c == DANDA || c == DOUBLE_DANDA || c == '?' || c == '!' || c == '.'
}

/// Split normalized text into sentences on danda, '?', '!' and '.', keeping
/// the terminator with its sentence. Text without a terminator is one
/// sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences: Vec<String> = Vec::new();
    let mut current = String::new();

    // Terminator-only fragments merge into the previous sentence so no
    // terminator of the input is ever dropped.
    fn flush(sentences: &mut Vec<String>, current: &mut String) {
        let s = current.trim();
        if !s.is_empty() {
            let punct_only = s.chars().all(|c| is_terminator(c) || c.is_whitespace());
            if punct_only {
                if let Some(last) = sentences.last_mut() {
                    last.push(' ');
                    last.push_str(s);
                } else {
                    sentences.push(s.to_string());
                }
            } else {
                sentences.push(s.to_string());
            }
        }
        current.clear();
    }

    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if is_terminator(c) {
            // attach any immediately following terminators (e.g. "!!", "?!")
            while let Some(&n) = chars.peek() {
                if is_terminator(n) {
                    current.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            flush(&mut sentences, &mut current);
        }
    }
    flush(&mut sentences, &mut current);
    sentences
}

/// Sentence type from the terminal punctuation token.
pub fn detect_sentence_type(tokens: &[Token]) -> SentenceType {
    match tokens.last() {
        Some(t) if t.is_punct() => match t.surface.as_str() {
            "?" => SentenceType::Interrogative,
            "!" => SentenceType::Exclamatory,
            s if s.chars().all(|c| c == DANDA || c == DOUBLE_DANDA || c == '.') => {
                SentenceType::Declarative
            }
            _ => SentenceType::Unknown,
        },
        _ => SentenceType::Unknown,
    }
}
