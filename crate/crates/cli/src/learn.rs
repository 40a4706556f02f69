//! `rfa train`, `rfa evaluate` and `rfa importance`.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use rfa_classifier::{evaluate as eval_model, importance_table, permutation_importance, split_dataset, SvmModel};
use rfa_core::features::FeatureBlock;
use rfa_core::{read_dataset, write_dataset, Dataset, FeatureSelection};

use crate::config::RunConfig;
use crate::{thread_pool, Classify, CmdResult, Common};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature CSV produced by `rfa extract`.
    #[arg(short, long, value_name = "CSV")]
    data: PathBuf,
    /// Model JSON to write.
    #[arg(short, long, value_name = "JSON")]
    model: PathBuf,
    /// Where to write the held-out test split (default: `<model>.test.csv`).
    #[arg(long, value_name = "CSV")]
    test_out: Option<PathBuf>,
    /// Feature groups: any of A, B, C, R, VarRF, VarMag (comma separated).
    #[arg(long)]
    groups: Option<String>,
    /// Envelopes: AM, FM or AM,FM.
    #[arg(long)]
    envelopes: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated C values.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    /// Do not add the data-derived gamma to the grid.
    #[arg(long)]
    no_heuristic_gamma: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(short, long, value_name = "JSON")]
    model: PathBuf,
    /// Feature CSV holding at least the model's columns.
    #[arg(short, long, value_name = "CSV")]
    data: PathBuf,
    /// Report JSON to write.
    #[arg(long, value_name = "JSON")]
    report: Option<PathBuf>,
    /// Confusion matrix CSV to write.
    #[arg(long, value_name = "CSV")]
    confusion: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(short, long, value_name = "JSON")]
    model: PathBuf,
    #[arg(short, long, value_name = "CSV")]
    data: PathBuf,
    /// Shuffles per feature.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rows shown in the printed table.
    #[arg(long)]
    top: Option<usize>,
    /// Full ranking CSV to write.
    #[arg(short, long, value_name = "CSV")]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn int(v: Option<impl Into<u64>>) -> Option<toml::Value> {
    v.map(|x| toml::Value::Integer(x.into() as i64))
}

fn float_list(v: Option<Vec<f64>>) -> Option<toml::Value> {
    v.map(|xs| toml::Value::Array(xs.into_iter().map(toml::Value::Float).collect()))
}

fn load_data(path: &Path) -> CmdResult<Dataset> {
    read_dataset(path)
        .with_context(|| format!("reading {}", path.display()))
        .data_err()
}

fn load_model(path: &Path) -> CmdResult<SvmModel> {
    SvmModel::load(path)
        .with_context(|| format!("reading model {}", path.display()))
        .data_err()
}

/// Model data restricted to the model's columns, in the model's order.
fn model_view(model: &SvmModel, data: &Dataset, path: &Path) -> CmdResult<Dataset> {
    data.project(&model.feature_names)
        .with_context(|| format!("{} does not match the model schema", path.display()))
        .data_err()
}

fn write_json(path: &Path, value: &serde_json::Value) -> CmdResult {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .data_err()
}

fn write_text(path: &Path, cfg: &RunConfig, body: &str) -> CmdResult {
    let mut out = Vec::new();
    for line in cfg.provenance_lines() {
        writeln!(out, "# {line}").expect("in-memory write");
    }
    out.extend_from_slice(body.as_bytes());
    std::fs::write(path, out)
        .with_context(|| format!("writing {}", path.display()))
        .data_err()
}

fn default_test_path(model: &Path) -> PathBuf {
    model.with_extension("test.csv")
}

pub fn train(args: TrainArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![
        ("groups", args.groups.map(toml::Value::String)),
        ("envelopes", args.envelopes.map(toml::Value::String)),
        ("seed", int(args.seed)),
        ("test_fraction", args.test_fraction.map(toml::Value::Float)),
        ("folds", int(args.folds.map(|f| f as u64))),
        ("c_grid", float_list(args.c_grid)),
        ("gamma_grid", float_list(args.gamma_grid)),
        ("heuristic_gamma", args.no_heuristic_gamma.then_some(toml::Value::Boolean(false))),
    ])?;
    let selection = FeatureSelection::parse(&cfg.groups, &cfg.envelopes).usage_err()?;
    let data = load_data(&args.data)?;
    let hint = if selection.blocks.contains(&FeatureBlock::RFormant) {
        " (R-formant columns are written by `rfa extract --r-formants`)"
    } else {
        ""
    };
    let selected = data
        .select(&selection)
        .with_context(|| format!("selecting {selection} from {}{hint}", args.data.display()))
        .data_err()?;
    let (train_ds, test_ds) = split_dataset(&selected, cfg.test_fraction, cfg.seed).data_err()?;

    let pool = thread_pool(cfg.jobs)?;
    let (model, report) = pool
        .install(|| rfa_classifier::train(&train_ds, &cfg.train_config()))
        .data_err()?;

    let mut doc = serde_json::to_value(&model).expect("serialisable");
    doc["selection"] = serde_json::json!({ "groups": cfg.groups, "envelopes": cfg.envelopes });
    doc["grid_report"] = serde_json::to_value(&report).expect("serialisable");
    doc["provenance"] = cfg.provenance_json();
    write_json(&args.model, &doc)?;

    let test_path = args.test_out.unwrap_or_else(|| default_test_path(&args.model));
    write_dataset(&test_ds, &test_path, &cfg.provenance_lines())
        .with_context(|| format!("writing {}", test_path.display()))
        .data_err()?;

    println!(
        "trained on {} rows x {} features ({selection}); best C = {}, gamma = {:.6}, CV accuracy = {:.4}",
        train_ds.len(),
        train_ds.n_features(),
        report.best_c,
        report.best_gamma,
        report.best_cv_accuracy
    );
    println!("model: {}", args.model.display());
    println!("test split ({} rows): {}", test_ds.len(), test_path.display());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![])?;
    let model = load_model(&args.model)?;
    let data = model_view(&model, &load_data(&args.data)?, &args.data)?;
    let report = eval_model(&model, &data).data_err()?;
    print!("{}", report.table());

    if let Some(path) = &args.report {
        let doc = serde_json::json!({
            "provenance": cfg.provenance_json(),
            "model": args.model.display().to_string(),
            "data": args.data.display().to_string(),
            "report": report,
        });
        write_json(path, &doc)?;
    }
    if let Some(path) = &args.confusion {
        write_text(path, &cfg, &report.confusion_csv())?;
    }
    Ok(())
}

pub fn importance(args: ImportanceArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![
        ("n_repeats", int(args.repeats.map(|r| r as u64))),
        ("seed", int(args.seed)),
        ("top_features", int(args.top.map(|t| t as u64))),
    ])?;
    let model = load_model(&args.model)?;
    let data = model_view(&model, &load_data(&args.data)?, &args.data)?;
    let pool = thread_pool(cfg.jobs)?;
    let ranked = pool
        .install(|| permutation_importance(&model, &data, cfg.n_repeats, cfg.seed))
        .data_err()?;
    print!("{}", importance_table(&ranked, cfg.top_features));

    if let Some(path) = &args.output {
        let mut body = String::from("rank,feature,mean_accuracy_drop,std_accuracy_drop\n");
        for (i, f) in ranked.iter().enumerate() {
            body.push_str(&format!("{},{},{},{}\n", i + 1, f.feature, f.mean_drop, f.std_drop));
        }
        write_text(path, &cfg, &body)?;
    }
    Ok(())
}
