//! Rendering of evaluation reports and answers, plain text and JSON.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use sandhan::engine::Engine;
use sandhan::ensemble::Prediction;
use sandhan::eval::{EvalReport, PredictionRow};
use sandhan::retrieval::{Answer, QueryTrace};

pub enum EvalMode {
    KFold { k: usize },
    Split { pct: f64, shuffled: bool, train_size: usize, test_size: usize },
}

#[derive(Serialize)]
struct EvalJson<'a> {
    classifier: &'a str,
    mode: String,
    seed: u64,
    train_size: Option<usize>,
    test_size: Option<usize>,
    report: &'a EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<&'a [EvalReport]>,
}

fn pct(v: f64) -> String {
    format!("{:.4}%", v * 100.0)
}

pub fn print_eval(
    classifier: &str,
    mode: &EvalMode,
    seed: u64,
    report: &EvalReport,
    folds: Option<&[EvalReport]>,
    category_names: &[String],
    json: bool,
) {
    let mode_string = match mode {
        EvalMode::KFold { k } => format!("{k}-fold cross-validation"),
        EvalMode::Split { pct, shuffled, .. } => format!(
            "percentage split {pct}% train ({})",
            if *shuffled { "shuffled" } else { "in corpus order" }
        ),
    };
    if json {
        let (train_size, test_size) = match mode {
            EvalMode::Split { train_size, test_size, .. } => (Some(*train_size), Some(*test_size)),
            EvalMode::KFold { .. } => (None, None),
        };
        let payload = EvalJson {
            classifier,
            mode: mode_string,
            seed,
            train_size,
            test_size,
            report,
            folds,
        };
        println!("{}", serde_json::to_string_pretty(&payload).expect("report serializes"));
        return;
    }

    println!("classifier: {classifier}");
    println!("mode: {mode_string} (seed {seed})");
    if let EvalMode::Split { train_size, test_size, .. } = mode {
        println!("train/test sizes: {train_size}/{test_size}");
    }
    println!("instances: {}", report.n_instances);
    println!("accuracy: {:.4}", report.accuracy);
    match report.kappa {
        Some(k) => println!("kappa statistic: {k:.4}"),
        None => println!("kappa statistic: undefined"),
    }
    println!("mean absolute error: {:.4}", report.mae);
    println!("root mean squared error: {:.4}", report.rmse);
    match report.rae {
        Some(v) => println!("relative absolute error: {}", pct(v)),
        None => println!("relative absolute error: undefined"),
    }
    match report.rrse {
        Some(v) => println!("root relative squared error: {}", pct(v)),
        None => println!("root relative squared error: undefined"),
    }
    println!("per-category precision/recall:");
    for (i, pr) in report.per_category.iter().enumerate() {
        let name = category_names.get(i).map(String::as_str).unwrap_or("?");
        println!("  {name}: precision={:.4} recall={:.4}", pr.precision, pr.recall);
    }
    println!("confusion matrix (rows = actual, columns = predicted):");
    print!("{}", report.confusion.render(category_names));
}

/// One JSONL line per remembered prediction, with category names resolved.
pub fn dump_predictions(
    path: &Path,
    rows: &[PredictionRow],
    category_names: &[String],
) -> Result<(), sandhan::Error> {
    let name_of = |i: usize| category_names.get(i).map(String::as_str).unwrap_or("?");
    let mut file = std::fs::File::create(path)
        .map_err(|e| sandhan::Error::io(path.display().to_string(), e))?;
    for row in rows {
        let mut record = serde_json::json!({
            "index": row.index,
            "actual": name_of(row.actual),
            "predicted": name_of(row.predicted),
        });
        if let Some(fold) = row.fold {
            record["fold"] = fold.into();
        }
        if let Some(proba) = &row.proba {
            record["proba"] = serde_json::json!(proba);
        }
        writeln!(file, "{record}").map_err(|e| sandhan::Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AnswerJson<'a> {
    answer: &'a Answer,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a QueryTrace>,
}

fn prediction_label(engine: &Engine, node: usize, p: &Prediction) -> String {
    match p.category {
        None => "NULL".to_string(),
        Some(slot) => {
            let child = engine.taxonomy.node(node).children[slot];
            engine.taxonomy.node(child).name.clone()
        }
    }
}

pub fn print_answer(engine: &Engine, answer: &Answer, trace: &QueryTrace, show_trace: bool, json: bool) {
    if json {
        let payload = AnswerJson { answer, trace: show_trace.then_some(trace) };
        println!("{}", serde_json::to_string_pretty(&payload).expect("answer serializes"));
        return;
    }
    println!("{}", answer.text);
    if !show_trace {
        return;
    }
    println!("-- trace --");
    println!("query: {}", trace.normalized_query);
    if trace.expansions.is_empty() {
        println!("expansions: none");
    } else {
        let parts: Vec<String> = trace
            .expansions
            .iter()
            .map(|e| format!("{} -> {}", e.original, e.replacement))
            .collect();
        println!("expansions: {}", parts.join(", "));
    }
    for level in &trace.votes {
        let votes: Vec<String> = level
            .predictions
            .iter()
            .map(|p| format!("{}={}", p.source.name(), prediction_label(engine, level.node, p)))
            .collect();
        let winners: Vec<String> = level
            .outcome
            .winners
            .iter()
            .map(|&slot| {
                let child = engine.taxonomy.node(level.node).children[slot];
                engine.taxonomy.node(child).name.clone()
            })
            .collect();
        let winner_text = if level.outcome.all_null {
            "all NULL".to_string()
        } else {
            winners.join(", ")
        };
        println!("vote @ {}: {} -> {}", level.node_path, votes.join(" "), winner_text);
    }
    println!(
        "routes: {}{}",
        trace.routed_paths.join(", "),
        if trace.root_fallback { " (whole-repository fallback)" } else { "" }
    );
    // the leaves that actually contributed hits
    let mut leaves: Vec<String> = Vec::new();
    for hit in &trace.hits {
        let leaf = engine.records[hit.sentence as usize].leaf;
        let path = engine.taxonomy.path_string(leaf);
        if !leaves.contains(&path) {
            leaves.push(path);
        }
    }
    println!("hit leaves: {}", if leaves.is_empty() { "none".to_string() } else { leaves.join(", ") });
    println!("hits:");
    if trace.hits.is_empty() {
        println!("  none");
    }
    for (rank, hit) in trace.hits.iter().enumerate() {
        let record = &engine.records[hit.sentence as usize];
        println!(
            "  {}. [{:.4}] id={} {}: {}",
            rank + 1,
            hit.score,
            record.external_id,
            engine.taxonomy.path_string(record.leaf),
            record.raw_text
        );
    }
}
