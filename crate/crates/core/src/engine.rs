//! End-to-end engine: ingested corpus, per-node classifier ensembles,
//! routed retrieval and answer composition, and state persistence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    train_decision_tree, train_mlp, train_naive_bayes, train_svm_smo, ClassifierKind, LabeledExample,
    MlpModel, MlpParams, Model, NaiveBayesModel, SvmModel, TreeModel,
};
use crate::config::{ClassifierConfig, EngineConfig};
use crate::ensemble::{
    classify_with_null, route_recursive, vote, EnsembleConfig, NodeClassifiers, Prediction,
};
use crate::error::{Error, Result};
use crate::eval::EvalModel;
use crate::features::{self, FeatureVector, SynonymLexicon, Vocabulary};
use crate::morphology::{self, FunctionLexicon, SuffixTable};
use crate::persist::{corpus_hash, read_framed, write_framed, FORMAT_VERSION};
use crate::retrieval::{
    build_index, extract_answer, hit_sentences, ingest_corpus, Answer, InvertedIndex, KnowledgeBase,
    QueryTrace, SentenceRecord,
};
use crate::rng::Rng;
use crate::taxonomy::{CategoryTree, NodeId};
use crate::text;

/// The four trained models of one multi-child taxonomy node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeEnsemble {
    pub node: NodeId,
    pub n_categories: usize,
    pub nb: NaiveBayesModel,
    pub svm: SvmModel,
    pub tree: TreeModel,
    pub mlp: MlpModel,
}

impl NodeEnsemble {
    pub fn model(&self, kind: ClassifierKind) -> &dyn Model {
        match kind {
            ClassifierKind::NaiveBayes => &self.nb,
            ClassifierKind::Svm => &self.svm,
            ClassifierKind::Tree => &self.tree,
            ClassifierKind::Mlp => &self.mlp,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Lexicons {
    suffixes: SuffixTable,
    function_words: FunctionLexicon,
    synonyms: SynonymLexicon,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    schema_version: String,
    corpus_hash: String,
    n_sentences: u32,
    config: EngineConfig,
    nodes: Vec<ManifestNode>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestNode {
    id: NodeId,
    path: String,
    children: usize,
    has_models: bool,
}

pub struct Engine {
    pub config: EngineConfig,
    pub suffixes: SuffixTable,
    pub function_words: FunctionLexicon,
    pub synonyms: SynonymLexicon,
    pub taxonomy: CategoryTree,
    pub records: Vec<SentenceRecord>,
    pub vocab: Vocabulary,
    pub index: InvertedIndex,
    pub kb: KnowledgeBase,
    pub models: BTreeMap<NodeId, NodeEnsemble>,
}

impl Engine {
    /// Ingest a corpus with the configured (or builtin) lexicons.
    pub fn ingest(corpus: &Path, config: EngineConfig) -> Result<Engine> {
        let suffixes = match &config.suffix_table {
            Some(p) => SuffixTable::load(p)?,
            None => SuffixTable::builtin(),
        };
        let function_words = match &config.function_words {
            Some(p) => FunctionLexicon::load(p)?,
            None => FunctionLexicon::builtin(),
        };
        let synonyms = match &config.synonyms {
            Some(p) => SynonymLexicon::load(p)?,
            None => SynonymLexicon::builtin(),
        };
        let kb = match &config.knowledge_base {
            Some(p) => KnowledgeBase::load(p)?,
            None => KnowledgeBase::empty(),
        };
        let (taxonomy, records, vocab) = ingest_corpus(corpus, &suffixes, &function_words)?;
        kb.check_sources(&records)?;
        let index = build_index(&records, &vocab);
        Ok(Engine {
            config,
            suffixes,
            function_words,
            synonyms,
            taxonomy,
            records,
            vocab,
            index,
            kb,
            models: BTreeMap::new(),
        })
    }

    /// Labeled training set of one node: every sentence under it, labeled by
    /// the child subtree it falls in.
    pub fn node_training_data(&self, node: NodeId) -> (Vec<LabeledExample>, usize) {
        let children = &self.taxonomy.node(node).children;
        let mut data = Vec::new();
        // a sentence attached directly at `node` has no child slot and is
        // skipped for training purposes
        for sid in self.taxonomy.sentences_under(node) {
            let record = &self.records[sid as usize];
            if let Some(slot) = self.taxonomy.child_slot_of(node, record.leaf) {
                data.push(LabeledExample { features: record.features.clone(), category: slot });
            }
        }
        (data, children.len())
    }

    /// Train the four classifiers of every multi-child node, recursively
    /// down the tree. Returns the trained node ids.
    pub fn train(&mut self) -> Result<Vec<NodeId>> {
        let nodes = self.taxonomy.multi_child_nodes();
        let base_rng = Rng::new(self.config.seed);
        for &node in &nodes {
            let (data, n_categories) = self.node_training_data(node);
            let ensemble = train_node_ensemble(
                &data,
                n_categories,
                self.vocab.len(),
                &self.config.classifiers,
                base_rng.fork(node as u64).next_u64(),
            )
            .map_err(|e| {
                Error::Training(format!("node '{}': {e}", self.taxonomy.path_string(node)))
            })?;
            self.models.insert(
                node,
                NodeEnsemble { node, n_categories, ..ensemble },
            );
        }
        Ok(nodes)
    }

    pub fn is_trained(&self) -> bool {
        self.taxonomy
            .multi_child_nodes()
            .iter()
            .all(|n| self.models.contains_key(n))
    }

    /// Answer a raw query end to end, returning the answer and the full
    /// audit trace.
    pub fn answer(&self, raw_query: &str) -> Result<(Answer, QueryTrace)> {
        let normalized = text::normalize(raw_query);
        let tokens = text::tokenize(&normalized);
        if tokens.is_empty() {
            return Err(Error::EmptyInput("empty query".into()));
        }
        let analysis = morphology::analyze_query(&tokens, &self.suffixes, &self.function_words)?;
        let (expanded, expansions) = features::expand_query(&tokens, &self.synonyms, &self.vocab);
        let fv = features::vectorize(&expanded, &self.vocab, &analysis);

        let route = route_recursive(&fv, &self.taxonomy, self, &self.config.ensemble)?;
        let hits = hit_sentences(
            &fv,
            &route.terminals,
            &self.taxonomy,
            &self.index,
            &self.records,
            self.config.top_n,
        );
        let answer = extract_answer(
            &analysis,
            &expanded,
            &hits,
            &self.kb,
            &self.records,
            &self.suffixes,
            self.config.answer_threshold,
        );
        let trace = QueryTrace {
            normalized_query: normalized,
            expansions,
            votes: route.trace,
            routed_paths: route
                .terminals
                .iter()
                .map(|&n| self.taxonomy.path_string(n))
                .collect(),
            root_fallback: route.root_fallback,
            hits,
        };
        Ok((answer, trace))
    }

    /// Root-level dataset for evaluation: every sentence labeled with its
    /// top-level category slot.
    pub fn root_dataset(&self) -> (Vec<LabeledExample>, usize, Vec<String>) {
        let (data, n) = self.node_training_data(crate::taxonomy::ROOT);
        let names = self
            .taxonomy
            .node(crate::taxonomy::ROOT)
            .children
            .iter()
            .map(|&c| self.taxonomy.node(c).name.clone())
            .collect();
        (data, n, names)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            schema_version: features::SCHEMA_VERSION.to_string(),
            corpus_hash: corpus_hash(
                self.records.iter().map(|r| (r.external_id.as_str(), r.raw_text.as_str())),
            ),
            n_sentences: self.records.len() as u32,
            config: self.config.clone(),
            nodes: self
                .taxonomy
                .node_ids()
                .map(|id| ManifestNode {
                    id,
                    path: self.taxonomy.path_string(id),
                    children: self.taxonomy.node(id).children.len(),
                    has_models: self.models.contains_key(&id),
                })
                .collect(),
        };
        let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), manifest_json)
            .map_err(|e| Error::io(dir.join("manifest.json").display().to_string(), e))?;

        write_framed(&dir.join("vocab.bin"), &self.vocab)?;
        write_framed(&dir.join("records.bin"), &self.records)?;
        write_framed(&dir.join("index.bin"), &self.index)?;
        write_framed(&dir.join("tree.bin"), &self.taxonomy)?;
        write_framed(&dir.join("kb.bin"), &self.kb)?;
        write_framed(
            &dir.join("lexicons.bin"),
            &Lexicons {
                suffixes: self.suffixes.clone(),
                function_words: self.function_words.clone(),
                synonyms: self.synonyms.clone(),
            },
        )?;
        for (node, ensemble) in &self.models {
            let node_dir = dir.join("models").join(format!("node_{node}"));
            std::fs::create_dir_all(&node_dir).map_err(|e| Error::io(node_dir.display().to_string(), e))?;
            write_framed(&node_dir.join("nb.model"), &ensemble.nb)?;
            write_framed(&node_dir.join("svm.model"), &ensemble.svm)?;
            write_framed(&node_dir.join("tree.model"), &ensemble.tree)?;
            write_framed(&node_dir.join("mlp.model"), &ensemble.mlp)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Engine> {
        let manifest_path = dir.join("manifest.json");
        let manifest_text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        let manifest: Manifest = serde_json::from_str(&manifest_text).map_err(|e| Error::CorruptState {
            path: manifest_path.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: manifest.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if manifest.schema_version != features::SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                model: manifest.schema_version,
                input: features::SCHEMA_VERSION.to_string(),
            });
        }

        let vocab: Vocabulary = read_framed(&dir.join("vocab.bin"))?;
        let records: Vec<SentenceRecord> = read_framed(&dir.join("records.bin"))?;
        let index: InvertedIndex = read_framed(&dir.join("index.bin"))?;
        let taxonomy: CategoryTree = read_framed(&dir.join("tree.bin"))?;
        let kb: KnowledgeBase = read_framed(&dir.join("kb.bin"))?;
        let lexicons: Lexicons = read_framed(&dir.join("lexicons.bin"))?;

        let recomputed = corpus_hash(records.iter().map(|r| (r.external_id.as_str(), r.raw_text.as_str())));
        if recomputed != manifest.corpus_hash {
            return Err(Error::CorruptState {
                path: dir.join("records.bin").display().to_string(),
                message: format!(
                    "corpus hash mismatch: manifest {} vs records {recomputed}",
                    manifest.corpus_hash
                ),
            });
        }

        let mut models = BTreeMap::new();
        for node in &manifest.nodes {
            if !node.has_models {
                continue;
            }
            let node_dir = dir.join("models").join(format!("node_{}", node.id));
            for kind in ["nb", "svm", "tree", "mlp"] {
                if !node_dir.join(format!("{kind}.model")).exists() {
                    return Err(Error::MissingModels(node.path.clone()));
                }
            }
            let nb: NaiveBayesModel = read_framed(&node_dir.join("nb.model"))?;
            let svm: SvmModel = read_framed(&node_dir.join("svm.model"))?;
            let tree: TreeModel = read_framed(&node_dir.join("tree.model"))?;
            let mlp: MlpModel = read_framed(&node_dir.join("mlp.model"))?;
            models.insert(
                node.id,
                NodeEnsemble { node: node.id, n_categories: nb.n_categories, nb, svm, tree, mlp },
            );
        }

        Ok(Engine {
            config: manifest.config,
            suffixes: lexicons.suffixes,
            function_words: lexicons.function_words,
            synonyms: lexicons.synonyms,
            taxonomy,
            records,
            vocab,
            index,
            kb,
            models,
        })
    }
}

impl NodeClassifiers for Engine {
    fn predict_at(
        &self,
        node: NodeId,
        features: &FeatureVector,
        config: &EnsembleConfig,
    ) -> Option<Result<[Prediction; 4]>> {
        let ensemble = self.models.get(&node)?;
        let mut out = Vec::with_capacity(4);
        for kind in ClassifierKind::ALL {
            match classify_with_null(ensemble.model(kind), features, config) {
                Ok(p) => out.push(p),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok([out[0], out[1], out[2], out[3]]))
    }
}

fn train_node_ensemble(
    data: &[LabeledExample],
    n_categories: usize,
    vocab_size: usize,
    cc: &ClassifierConfig,
    mlp_seed: u64,
) -> Result<NodeEnsemble> {
    let nb = train_naive_bayes(data, n_categories, vocab_size, cc.nb_alpha)?;
    let svm = train_svm_smo(data, n_categories, vocab_size, cc.svm_c, cc.svm_tol, cc.svm_max_passes)?;
    let tree = train_decision_tree(data, n_categories, cc.tree_min_leaf, cc.tree_confidence, cc.tree_prune)?;
    let mlp_params = MlpParams {
        hidden: cc.mlp_hidden,
        learning_rate: cc.mlp_learning_rate,
        momentum: cc.mlp_momentum,
        epochs: cc.mlp_epochs,
        top_k: cc.mlp_top_k,
        seed: mlp_seed,
    };
    let mlp = train_mlp(data, n_categories, vocab_size, &mlp_params)?;
    Ok(NodeEnsemble { node: 0, n_categories, nb, svm, tree, mlp })
}

/// Evaluation adapter over a single classifier.
struct SingleEval(Box<dyn Model>);

impl EvalModel for SingleEval {
    fn eval_label(&self, features: &FeatureVector) -> Result<usize> {
        self.0.predict(features)
    }
    fn eval_dist(&self, features: &FeatureVector) -> Result<Option<Vec<f64>>> {
        self.0.predict_proba(features).map(Some)
    }
}

/// Evaluation adapter over the four-classifier vote; the resolved single
/// winner is the predicted label (all-null falls back to category 0).
struct EnsembleEval {
    ensemble: NodeEnsemble,
    config: EnsembleConfig,
}

impl EvalModel for EnsembleEval {
    fn eval_label(&self, features: &FeatureVector) -> Result<usize> {
        let mut predictions = Vec::with_capacity(4);
        for kind in ClassifierKind::ALL {
            predictions.push(classify_with_null(self.ensemble.model(kind), features, &self.config)?);
        }
        let outcome = vote(&predictions, &self.config)?;
        Ok(outcome.single_winner().unwrap_or(0))
    }
    fn eval_dist(&self, _features: &FeatureVector) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}

/// Which classifier an evaluation run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    Nb,
    Svm,
    Tree,
    Mlp,
    Ensemble,
}

impl EvalTarget {
    pub fn parse(s: &str) -> Option<EvalTarget> {
        match s {
            "nb" => Some(EvalTarget::Nb),
            "svm" => Some(EvalTarget::Svm),
            "tree" => Some(EvalTarget::Tree),
            "mlp" => Some(EvalTarget::Mlp),
            "ensemble" => Some(EvalTarget::Ensemble),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalTarget::Nb => "nb",
            EvalTarget::Svm => "svm",
            EvalTarget::Tree => "tree",
            EvalTarget::Mlp => "mlp",
            EvalTarget::Ensemble => "ensemble",
        }
    }
}

/// A train-function for the eval harness: trains `target` on the given
/// examples with the engine's hyperparameters.
pub fn eval_trainer(
    target: EvalTarget,
    n_categories: usize,
    vocab_size: usize,
    cc: ClassifierConfig,
    ens: EnsembleConfig,
    seed: u64,
) -> impl Fn(&[LabeledExample]) -> Result<Box<dyn EvalModel>> {
    move |data: &[LabeledExample]| -> Result<Box<dyn EvalModel>> {
        let mlp_params = MlpParams {
            hidden: cc.mlp_hidden,
            learning_rate: cc.mlp_learning_rate,
            momentum: cc.mlp_momentum,
            epochs: cc.mlp_epochs,
            top_k: cc.mlp_top_k,
            seed,
        };
        match target {
            EvalTarget::Nb => Ok(Box::new(SingleEval(Box::new(train_naive_bayes(
                data,
                n_categories,
                vocab_size,
                cc.nb_alpha,
            )?)))),
            EvalTarget::Svm => Ok(Box::new(SingleEval(Box::new(train_svm_smo(
                data,
                n_categories,
                vocab_size,
                cc.svm_c,
                cc.svm_tol,
                cc.svm_max_passes,
            )?)))),
            EvalTarget::Tree => Ok(Box::new(SingleEval(Box::new(train_decision_tree(
                data,
                n_categories,
                cc.tree_min_leaf,
                cc.tree_confidence,
                cc.tree_prune,
            )?)))),
            EvalTarget::Mlp => Ok(Box::new(SingleEval(Box::new(train_mlp(
                data,
                n_categories,
                vocab_size,
                &mlp_params,
            )?)))),
            EvalTarget::Ensemble => {
                let ensemble = train_node_ensemble(data, n_categories, vocab_size, &cc, seed)?;
                Ok(Box::new(EnsembleEval { ensemble, config: ens.clone() }))
            }
        }
    }
}
