//! `rfa extract`: WAV directory to feature CSV.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use rayon::prelude::*;
use rfa_core::{extract_features, load_audio, write_dataset, Dataset, FeatureVector};
use tracing::{info, warn};
use walkdir::WalkDir;

use crate::config::RunConfig;
use crate::{thread_pool, Classify, CmdResult, Common};

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory searched recursively for `.wav` files.
    #[arg(short, long, value_name = "DIR")]
    input: PathBuf,
    /// Feature CSV to write.
    #[arg(short, long, value_name = "CSV")]
    output: PathBuf,
    /// CSV of `key,label` pairs. A key is a relative file path (with or
    /// without extension), a file name, or a subdirectory.
    #[arg(long, value_name = "CSV")]
    labels: Option<PathBuf>,
    /// Minimum clip duration in seconds (clips must be strictly longer).
    #[arg(long)]
    min_duration: Option<f64>,
    /// Also write the R-formant columns (RF1_AM .. RF6_FM).
    #[arg(long)]
    r_formants: bool,
    #[command(flatten)]
    common: Common,
}

/// Relative path without extension, `/`-separated.
fn source_id(rel: &Path) -> String {
    let no_ext = rel.with_extension("");
    no_ext
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read_label_map(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading label map {}", path.display()))?;
    let mut map = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("label map {}", path.display()))?;
        if rec.len() != 2 {
            return Err(anyhow!("label map {}: row {} needs exactly two fields", path.display(), i + 1));
        }
        if i == 0 && &rec[0] == "file" && &rec[1] == "label" {
            continue;
        }
        map.insert(rec[0].replace('\\', "/"), rec[1].to_string());
    }
    Ok(map)
}

/// Label for a file: explicit map entries win, most specific first; the
/// fallback is the top-level subdirectory name.
fn label_for(rel: &Path, map: Option<&HashMap<String, String>>) -> Option<String> {
    let id = source_id(rel);
    if let Some(map) = map {
        let with_ext = rel.to_string_lossy().replace('\\', "/");
        let file_name = rel.file_name().map(|s| s.to_string_lossy().into_owned());
        let stem = rel.file_stem().map(|s| s.to_string_lossy().into_owned());
        let mut keys = vec![id.clone(), with_ext];
        keys.extend(file_name);
        keys.extend(stem);
        let mut dir = id.as_str();
        while let Some((parent, _)) = dir.rsplit_once('/') {
            keys.push(parent.to_string());
            dir = parent;
        }
        if let Some(l) = keys.iter().find_map(|k| map.get(k)) {
            return Some(l.clone());
        }
    }
    let mut comps = id.split('/');
    let first = comps.next()?;
    comps.next().map(|_| first.to_string())
}

fn find_wavs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.with_context(|| format!("scanning {}", dir.display()))?;
        let is_wav = entry
            .path()
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if entry.file_type().is_file() && is_wav {
            files.push(entry.path().strip_prefix(dir).expect("under root").to_path_buf());
        }
    }
    files.sort();
    Ok(files)
}

fn process(dir: &Path, rel: &Path, label: Option<String>, cfg: &RunConfig) -> anyhow::Result<FeatureVector> {
    let mut clip = load_audio(dir.join(rel))?;
    clip.source_id = source_id(rel);
    let ex = extract_features(&clip, &cfg.analysis)?;
    for w in &ex.warnings {
        warn!(file = %rel.display(), "{w}");
    }
    let mut v = ex.vector;
    v.label = label;
    Ok(v)
}

fn skipped_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".skipped.csv");
    PathBuf::from(s)
}

fn write_skipped(path: &Path, skipped: &[(String, String)], cfg: &RunConfig) -> anyhow::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in cfg.provenance_lines() {
        writeln!(f, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["path", "reason"])?;
    for (p, r) in skipped {
        w.write_record([p, r])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: ExtractArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![
        ("min_duration_s", args.min_duration.map(toml::Value::Float)),
        ("r_formant_columns", args.r_formants.then_some(toml::Value::Boolean(true))),
    ])?;
    if !args.input.is_dir() {
        return Err(anyhow!("input directory {} not found", args.input.display())).usage_err();
    }
    let map = args.labels.as_deref().map(read_label_map).transpose().data_err()?;
    let files = find_wavs(&args.input).data_err()?;
    info!(files = files.len(), "extracting features");

    let pool = thread_pool(cfg.jobs)?;
    let results: Vec<(PathBuf, anyhow::Result<FeatureVector>)> = pool.install(|| {
        files
            .par_iter()
            .map(|rel| {
                let label = label_for(rel, map.as_ref());
                (rel.clone(), process(&args.input, rel, label, &cfg))
            })
            .collect()
    });

    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for (rel, r) in results {
        match r {
            Ok(v) => vectors.push(v),
            Err(e) => {
                warn!(file = %rel.display(), "skipped: {e:#}");
                skipped.push((rel.to_string_lossy().replace('\\', "/"), format!("{e:#}")));
            }
        }
    }
    vectors.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    let unlabelled = vectors.iter().filter(|v| v.label.is_none()).count();
    if unlabelled > 0 {
        warn!(count = unlabelled, "rows without a label");
    }

    let skipped_file = skipped_path(&args.output);
    write_skipped(&skipped_file, &skipped, &cfg).data_err()?;
    if vectors.is_empty() {
        return Err(anyhow!(
            "no usable files in {} ({} found, {} skipped; see {})",
            args.input.display(),
            files.len(),
            skipped.len(),
            skipped_file.display()
        ))
        .data_err();
    }
    let ds = Dataset::from_vectors(&vectors, cfg.r_formant_columns).data_err()?;
    write_dataset(&ds, &args.output, &cfg.provenance_lines())
        .with_context(|| format!("writing {}", args.output.display()))
        .data_err()?;
    println!(
        "wrote {} rows x {} features to {}; skipped {} of {} files",
        ds.len(),
        ds.n_features(),
        args.output.display(),
        skipped.len(),
        files.len()
    );
    Ok(())
}
