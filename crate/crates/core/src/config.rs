//! Engine configuration: defaults, a small `[section] key=value` file
//! format, and programmatic overrides (the CLI maps flags onto keys).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub nb_alpha: f64,
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub tree_min_leaf: usize,
    pub tree_confidence: f64,
    pub tree_prune: bool,
    pub mlp_hidden: Option<usize>,
    pub mlp_learning_rate: f64,
    pub mlp_momentum: f64,
    pub mlp_epochs: usize,
    pub mlp_top_k: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            nb_alpha: 1.0,
            svm_c: 1.0,
            svm_tol: 1e-3,
            svm_max_passes: 10,
            tree_min_leaf: 2,
            tree_confidence: 0.25,
            tree_prune: true,
            mlp_hidden: None,
            mlp_learning_rate: 0.3,
            mlp_momentum: 0.2,
            mlp_epochs: 500,
            mlp_top_k: 500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub seed: u64,
    pub split_pct: f64,
    pub shuffle: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { k: 10, seed: 42, split_pct: 66.0, shuffle: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Optional external resource files; the builtin data is used when absent.
    pub suffix_table: Option<PathBuf>,
    pub function_words: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub knowledge_base: Option<PathBuf>,
    pub ensemble: EnsembleConfig,
    pub classifiers: ClassifierConfig,
    pub eval: EvalConfig,
    pub top_n: usize,
    pub answer_threshold: f64,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            suffix_table: None,
            function_words: None,
            synonyms: None,
            knowledge_base: None,
            ensemble: EnsembleConfig::default(),
            classifiers: ClassifierConfig::default(),
            eval: EvalConfig::default(),
            top_n: 5,
            answer_threshold: 0.2,
            seed: 42,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("config key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("config key '{key}': expected a boolean, got '{value}'"))),
    }
}

impl EngineConfig {
    /// Apply one dotted key, e.g. `ensemble.null_floor=0.4`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "paths.suffix_table" => self.suffix_table = Some(PathBuf::from(value)),
            "paths.function_words" => self.function_words = Some(PathBuf::from(value)),
            "paths.synonyms" => self.synonyms = Some(PathBuf::from(value)),
            "paths.knowledge_base" => self.knowledge_base = Some(PathBuf::from(value)),
            "ensemble.weight" => self.ensemble.per_classifier_weight = parse_num(key, value)?,
            "ensemble.win_threshold" => self.ensemble.win_threshold = parse_num(key, value)?,
            "ensemble.null_floor" => self.ensemble.null_proba_floor = parse_num(key, value)?,
            "classifiers.nb_alpha" => self.classifiers.nb_alpha = parse_num(key, value)?,
            "classifiers.svm_c" => self.classifiers.svm_c = parse_num(key, value)?,
            "classifiers.svm_tol" => self.classifiers.svm_tol = parse_num(key, value)?,
            "classifiers.svm_max_passes" => self.classifiers.svm_max_passes = parse_num(key, value)?,
            "classifiers.tree_min_leaf" => self.classifiers.tree_min_leaf = parse_num(key, value)?,
            "classifiers.tree_confidence" => self.classifiers.tree_confidence = parse_num(key, value)?,
            "classifiers.tree_prune" => self.classifiers.tree_prune = parse_bool(key, value)?,
            "classifiers.mlp_hidden" => {
                self.classifiers.mlp_hidden = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "classifiers.mlp_learning_rate" => self.classifiers.mlp_learning_rate = parse_num(key, value)?,
            "classifiers.mlp_momentum" => self.classifiers.mlp_momentum = parse_num(key, value)?,
            "classifiers.mlp_epochs" => self.classifiers.mlp_epochs = parse_num(key, value)?,
            "classifiers.mlp_top_k" => self.classifiers.mlp_top_k = parse_num(key, value)?,
            "eval.k" => self.eval.k = parse_num(key, value)?,
            "eval.seed" => self.eval.seed = parse_num(key, value)?,
            "eval.split_pct" => self.eval.split_pct = parse_num(key, value)?,
            "eval.shuffle" => self.eval.shuffle = parse_bool(key, value)?,
            "query.top_n" => self.top_n = parse_num(key, value)?,
            "query.answer_threshold" => self.answer_threshold = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Parse a sectioned key=value file; section headers prefix the keys.
    pub fn load(path: &Path) -> Result<EngineConfig> {
        let origin = path.display().to_string();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(origin.clone(), e))?;
        let mut config = EngineConfig::default();
        let mut section = String::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(&origin, lineno + 1, "expected key=value"));
            };
            let full_key = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{}.{}", section, key.trim())
            };
            config
                .set(&full_key, value.trim())
                .map_err(|e| Error::parse(&origin, lineno + 1, e.to_string()))?;
        }
        Ok(config)
    }
}
