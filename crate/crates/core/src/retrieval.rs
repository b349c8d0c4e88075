//! Repository ingestion into the category tree, per-leaf inverted indexing,
//! cosine hit scoring within routed paths, and knowledge-base answer
//! extraction with multi-sentence composition.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, Expansion, FeatureVector, Vocabulary};
use crate::morphology::{self, FunctionLexicon, QueryAnalysis, SuffixTable};
use crate::taxonomy::{CategoryTree, NodeId};
use crate::text::{self, Token};

pub const NO_ANSWER_NOTICE: &str = "কোনো উত্তর পাওয়া যায়নি।";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceRecord {
    /// Dense internal id, assigned in ingestion order.
    pub id: u32,
    /// External id from the corpus file.
    pub external_id: String,
    pub category_path: Vec<String>,
    pub leaf: NodeId,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub features: FeatureVector,
}

/// One (subject, relation, object, source sentence) row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbRow {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub source_external_id: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub rows: Vec<KbRow>,
}

impl KnowledgeBase {
    pub fn empty() -> KnowledgeBase {
        KnowledgeBase { rows: Vec::new() }
    }

    /// TSV: `subject<TAB>relation<TAB>object<TAB>sentence_id`, '#' comments.
    pub fn parse_str(content: &str, origin: &str) -> Result<KnowledgeBase> {
        let mut rows = Vec::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(origin, lineno + 1, format!("expected 4 fields, got {}", fields.len())));
            }
            rows.push(KbRow {
                subject: text::normalize(fields[0]),
                relation: text::normalize(fields[1]),
                object: text::normalize(fields[2]),
                source_external_id: fields[3].trim().to_string(),
            });
        }
        Ok(KnowledgeBase { rows })
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&content, &path.display().to_string())
    }

    /// Validate that every source sentence exists in the repository.
    pub fn check_sources(&self, records: &[SentenceRecord]) -> Result<()> {
        let known: BTreeSet<&str> = records.iter().map(|r| r.external_id.as_str()).collect();
        for row in &self.rows {
            if !known.contains(row.source_external_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "knowledge base row references unknown sentence id '{}'",
                    row.source_external_id
                )));
            }
        }
        Ok(())
    }
}

/// Raw corpus rows before vectorization.
struct RawSentence {
    external_id: String,
    category_path: Vec<String>,
    text: String,
}

fn read_jsonl(path: &Path) -> Result<Vec<RawSentence>> {
    let origin = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(origin.clone(), e))?;
    let mut rows = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::parse(&origin, lineno + 1, format!("invalid JSON: {e}")))?;
        let external_id = match value.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => return Err(Error::parse(&origin, lineno + 1, "missing or invalid \"id\"")),
        };
        let category_path: Vec<String> = value
            .get("category_path")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
            .unwrap_or_default();
        if category_path.is_empty() {
            return Err(Error::parse(&origin, lineno + 1, "missing or empty \"category_path\""));
        }
        let Some(sentence_text) = value.get("text").and_then(|v| v.as_str()) else {
            return Err(Error::parse(&origin, lineno + 1, "missing \"text\""));
        };
        rows.push(RawSentence {
            external_id,
            category_path,
            text: sentence_text.to_string(),
        });
    }
    Ok(rows)
}

fn read_directory(root: &Path) -> Result<Vec<RawSentence>> {
    fn walk(dir: &Path, rel: &[String], out: &mut Vec<RawSentence>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir.display().to_string(), e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(dir.display().to_string(), e))?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            let name = entry.file_name().to_string_lossy().to_string();
            if path.is_dir() {
                let mut sub = rel.to_vec();
                sub.push(name);
                walk(&path, &sub, out)?;
            } else if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if rel.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "corpus file '{}' sits outside any category directory",
                        path.display()
                    )));
                }
                let content = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
                for (lineno, line) in content.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    out.push(RawSentence {
                        external_id: format!("{}/{}#{}", rel.join("/"), name, lineno + 1),
                        category_path: rel.to_vec(),
                        text: line.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
    let mut rows = Vec::new();
    walk(root, &[], &mut rows)?;
    Ok(rows)
}

/// Ingest a corpus (JSONL file or category-directory tree): build the
/// category tree from observed paths, normalize/tokenize/analyze/vectorize
/// every sentence, and return the shared vocabulary.
pub fn ingest_corpus(
    source: &Path,
    suffixes: &SuffixTable,
    function_words: &FunctionLexicon,
) -> Result<(CategoryTree, Vec<SentenceRecord>, Vocabulary)> {
    let raw = if source.is_dir() {
        read_directory(source)?
    } else {
        read_jsonl(source)?
    };
    if raw.is_empty() {
        return Err(Error::EmptyInput(format!("corpus '{}' has no sentences", source.display())));
    }
    let mut seen_ids: BTreeSet<&str> = BTreeSet::new();
    for row in &raw {
        if !seen_ids.insert(&row.external_id) {
            return Err(Error::InvalidArgument(format!("duplicate sentence id '{}'", row.external_id)));
        }
    }

    let mut tree = CategoryTree::new();
    let mut token_lists: Vec<Vec<Token>> = Vec::with_capacity(raw.len());
    for row in &raw {
        tree.add_path(&row.category_path);
        token_lists.push(text::tokenize(&text::normalize(&row.text)));
    }
    let vocab = Vocabulary::build(&token_lists)?;

    let mut records = Vec::with_capacity(raw.len());
    for (i, (row, tokens)) in raw.into_iter().zip(token_lists).enumerate() {
        let leaf = tree.resolve(&row.category_path).expect("path was added above");
        let analysis = morphology::analyze_query(&tokens, suffixes, function_words)
            .unwrap_or_else(|_| features::plain_analysis(&tokens));
        let fv = features::vectorize(&tokens, &vocab, &analysis);
        let id = i as u32;
        tree.attach_sentence(leaf, id);
        records.push(SentenceRecord {
            id,
            external_id: row.external_id,
            category_path: row.category_path,
            leaf,
            raw_text: text::normalize(&row.text),
            tokens,
            features: fv,
        });
    }
    Ok((tree, records, vocab))
}

/// Term postings and per-leaf document statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    /// postings[term id] = (sentence id, term frequency), ascending by id.
    pub postings: Vec<Vec<(u32, u32)>>,
    pub total_documents: u32,
    pub leaf_documents: BTreeMap<NodeId, u32>,
}

pub fn build_index(records: &[SentenceRecord], vocab: &Vocabulary) -> InvertedIndex {
    let mut postings: Vec<Vec<(u32, u32)>> = vec![Vec::new(); vocab.len()];
    let mut leaf_documents: BTreeMap<NodeId, u32> = BTreeMap::new();
    for record in records {
        *leaf_documents.entry(record.leaf).or_insert(0) += 1;
        for &(term, tf) in &record.features.counts {
            postings[term as usize].push((record.id, tf));
        }
    }
    for list in postings.iter_mut() {
        list.sort_unstable_by_key(|&(id, _)| id);
    }
    InvertedIndex {
        postings,
        total_documents: records.len() as u32,
        leaf_documents,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub sentence: u32,
    pub score: f64,
}

/// Score the sentences under the routed terminals by cosine similarity with
/// the query vector; descending score, ties by ascending id, at most
/// `top_n`. Zero-overlap candidates are dropped.
pub fn hit_sentences(
    query: &FeatureVector,
    terminals: &[NodeId],
    tree: &CategoryTree,
    index: &InvertedIndex,
    records: &[SentenceRecord],
    top_n: usize,
) -> Vec<Hit> {
    let mut candidates: BTreeSet<u32> = BTreeSet::new();
    for &node in terminals {
        candidates.extend(tree.sentences_under(node));
    }
    // shortlist: only sentences sharing at least one query term can score
    let mut overlapping: BTreeSet<u32> = BTreeSet::new();
    for &(term, _) in &query.sparse {
        if (term as usize) < index.postings.len() {
            for &(sid, _) in &index.postings[term as usize] {
                if candidates.contains(&sid) {
                    overlapping.insert(sid);
                }
            }
        }
    }
    let mut hits: Vec<Hit> = overlapping
        .into_iter()
        .map(|sid| Hit {
            sentence: sid,
            score: query.sparse_dot(&records[sid as usize].features).clamp(0.0, 1.0),
        })
        .filter(|h| h.score > 0.0)
        .collect();
    hits.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then(a.sentence.cmp(&b.sentence)));
    hits.truncate(top_n);
    hits
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    /// Sentence ids backing the answer, in score order.
    pub supporting: Vec<u32>,
    /// True when the text is the localized no-answer notice.
    pub no_hit: bool,
    /// Set when a knowledge-base row supplied the answer.
    pub kb_matched: bool,
}

fn root_reduce(word: &str, suffixes: &SuffixTable) -> String {
    morphology::extract_root_verb(word, suffixes)
        .map(|a| a.root)
        .unwrap_or_else(|| word.to_string())
}

/// Compose the answer: an interrogative query whose content terms match a
/// knowledge-base row (subject present; relation matching after root-verb
/// reduction) answers with the row's object plus its source sentence;
/// otherwise the hits at or above `threshold` are concatenated in score
/// order (at least the top hit); with no hits, the localized notice.
pub fn extract_answer(
    analysis: &QueryAnalysis,
    query_tokens: &[Token],
    hits: &[Hit],
    kb: &KnowledgeBase,
    records: &[SentenceRecord],
    suffixes: &SuffixTable,
    threshold: f64,
) -> Answer {
    if hits.is_empty() {
        return Answer {
            text: NO_ANSWER_NOTICE.to_string(),
            supporting: vec![],
            no_hit: true,
            kb_matched: false,
        };
    }

    if analysis.sentence_type == crate::text::SentenceType::Interrogative && !kb.rows.is_empty() {
        let content_terms: Vec<&str> = query_tokens
            .iter()
            .filter(|t| !t.is_punct())
            .map(|t| t.normalized.as_str())
            .collect();
        let reduced_terms: Vec<String> =
            content_terms.iter().map(|t| root_reduce(t, suffixes)).collect();
        // prefer rows grounded in a retrieved sentence, in hit order
        for hit in hits {
            let external = &records[hit.sentence as usize].external_id;
            for row in &kb.rows {
                if row.source_external_id != *external {
                    continue;
                }
                let subject_hit = content_terms.contains(&row.subject.as_str());
                let relation_root = root_reduce(&row.relation, suffixes);
                let relation_hit = content_terms.contains(&row.relation.as_str())
                    || reduced_terms.contains(&relation_root);
                if subject_hit && relation_hit {
                    return Answer {
                        text: format!("{} {}", row.object, records[hit.sentence as usize].raw_text),
                        supporting: vec![hit.sentence],
                        no_hit: false,
                        kb_matched: true,
                    };
                }
            }
        }
    }

    let mut supporting: Vec<u32> = hits
        .iter()
        .filter(|h| h.score >= threshold)
        .map(|h| h.sentence)
        .collect();
    if supporting.is_empty() {
        supporting.push(hits[0].sentence);
    }
    let text = supporting
        .iter()
        .map(|&sid| records[sid as usize].raw_text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Answer { text, supporting, no_hit: false, kb_matched: false }
}

/// Full per-query audit attached to the engine's answers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryTrace {
    pub normalized_query: String,
    pub expansions: Vec<Expansion>,
    pub votes: Vec<crate::ensemble::LevelTrace>,
    pub routed_paths: Vec<String>,
    pub root_fallback: bool,
    pub hits: Vec<Hit>,
}
