//! Named rhythm feature vectors and CSV datasets.
//!
//! The fused vector has three groups per envelope (AM first, then FM):
//!
//! * A: `NDP, MFDP, VFDP, DCT0..DCT3` (7 per envelope)
//! * B: `Centroid, Spread, Rolloff, Flatness, Entropy, Skewness, Kurtosis` (7)
//! * C: `VarRF1..VarRFn, VarMag1..VarMagn` (2n, n = 6 by default)
//!
//! ordered A(AM), A(FM), B(AM), B(FM), C(AM), C(FM). Column names are
//! `<measure>_<envelope>`, e.g. `DCT2_FM`. The raw rhythm-formant
//! frequencies (`RF1_AM` ...) are kept in an optional trailing block that
//! is not part of the fused vector.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeKind;
use crate::error::{Error, Result};
use crate::lf_spectrum::{PeakSet, SpectralMeasures, ThresholdFeatures};

pub const N_DCT: usize = 4;
pub const DEFAULT_N_FORMANTS: usize = 6;
pub const SPECTRAL_NAMES: [&str; 7] = [
    "Centroid", "Spread", "Rolloff", "Flatness", "Entropy", "Skewness", "Kurtosis",
];
pub const LANGUAGE_CODES: [&str; 5] = ["ben", "kan", "mal", "mar", "tam"];

/// Table-level feature group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    A,
    B,
    C,
}

/// Finer-grained family of columns, used for subset selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureBlock {
    /// Raw rhythm-formant frequencies (not in the fused vector).
    RFormant,
    /// Threshold peaks + DCT (group A).
    ThresholdDct,
    /// Seven spectral shape measures (group B).
    Spectral,
    /// Variance of formant frequency trajectories (half of group C).
    VarRf,
    /// Variance of formant magnitude trajectories (other half of group C).
    VarMag,
}

impl FeatureBlock {
    pub fn group(self) -> Option<FeatureGroup> {
        match self {
            FeatureBlock::RFormant => None,
            FeatureBlock::ThresholdDct => Some(FeatureGroup::A),
            FeatureBlock::Spectral => Some(FeatureGroup::B),
            FeatureBlock::VarRf | FeatureBlock::VarMag => Some(FeatureGroup::C),
        }
    }
}

/// Metadata of one named column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub block: FeatureBlock,
    pub envelope: EnvelopeKind,
    pub group: Option<FeatureGroup>,
}

impl FeatureDef {
    fn new(measure: &str, block: FeatureBlock, envelope: EnvelopeKind) -> Self {
        Self {
            name: format!("{measure}_{envelope}"),
            block,
            envelope,
            group: block.group(),
        }
    }
}

/// Recovers the metadata of a column name, or `None` for unknown names.
pub fn parse_feature_name(name: &str) -> Option<FeatureDef> {
    let (measure, env) = name.rsplit_once('_')?;
    let envelope = match env {
        "AM" => EnvelopeKind::Am,
        "FM" => EnvelopeKind::Fm,
        _ => return None,
    };
    let indexed = |prefix: &str| {
        measure
            .strip_prefix(prefix)
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1 && !measure[prefix.len()..].starts_with('0'))
    };
    let block = if matches!(measure, "NDP" | "MFDP" | "VFDP") {
        FeatureBlock::ThresholdDct
    } else if let Some(k) = measure.strip_prefix("DCT").and_then(|k| k.parse::<usize>().ok()) {
        if k >= N_DCT || measure.len() != 4 {
            return None;
        }
        FeatureBlock::ThresholdDct
    } else if SPECTRAL_NAMES.contains(&measure) {
        FeatureBlock::Spectral
    } else if indexed("VarRF").is_some() {
        FeatureBlock::VarRf
    } else if indexed("VarMag").is_some() {
        FeatureBlock::VarMag
    } else if indexed("RF").is_some() {
        FeatureBlock::RFormant
    } else {
        return None;
    };
    Some(FeatureDef::new(measure, block, envelope))
}

/// Column layout for a given number of rhythm formants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub n_formants: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self {
            n_formants: DEFAULT_N_FORMANTS,
        }
    }
}

impl FeatureLayout {
    pub fn new(n_formants: usize) -> Self {
        Self { n_formants }
    }

    fn block_defs(&self, block: FeatureBlock, env: EnvelopeKind) -> Vec<FeatureDef> {
        let n = self.n_formants;
        match block {
            FeatureBlock::ThresholdDct => ["NDP", "MFDP", "VFDP"]
                .iter()
                .map(|m| m.to_string())
                .chain((0..N_DCT).map(|k| format!("DCT{k}")))
                .map(|m| FeatureDef::new(&m, block, env))
                .collect(),
            FeatureBlock::Spectral => SPECTRAL_NAMES
                .iter()
                .map(|m| FeatureDef::new(m, block, env))
                .collect(),
            FeatureBlock::VarRf => (1..=n)
                .map(|k| FeatureDef::new(&format!("VarRF{k}"), block, env))
                .collect(),
            FeatureBlock::VarMag => (1..=n)
                .map(|k| FeatureDef::new(&format!("VarMag{k}"), block, env))
                .collect(),
            FeatureBlock::RFormant => (1..=n)
                .map(|k| FeatureDef::new(&format!("RF{k}"), block, env))
                .collect(),
        }
    }

    /// The fused vector in its frozen order.
    pub fn fused(&self) -> Vec<FeatureDef> {
        let mut defs = Vec::with_capacity(self.fused_len());
        for env in EnvelopeKind::BOTH {
            defs.extend(self.block_defs(FeatureBlock::ThresholdDct, env));
        }
        for env in EnvelopeKind::BOTH {
            defs.extend(self.block_defs(FeatureBlock::Spectral, env));
        }
        for env in EnvelopeKind::BOTH {
            defs.extend(self.block_defs(FeatureBlock::VarRf, env));
            defs.extend(self.block_defs(FeatureBlock::VarMag, env));
        }
        defs
    }

    /// The optional raw rhythm-formant block, AM then FM.
    pub fn r_formants(&self) -> Vec<FeatureDef> {
        EnvelopeKind::BOTH
            .iter()
            .flat_map(|&env| self.block_defs(FeatureBlock::RFormant, env))
            .collect()
    }

    pub fn fused_len(&self) -> usize {
        4 * (3 + N_DCT) + 4 * self.n_formants + 2 * SPECTRAL_NAMES.len()
    }

    pub fn fused_names(&self) -> Vec<String> {
        self.fused().into_iter().map(|d| d.name).collect()
    }

    /// Every column: fused vector followed by the rhythm-formant block.
    pub fn all(&self) -> Vec<FeatureDef> {
        let mut defs = self.fused();
        defs.extend(self.r_formants());
        defs
    }
}

/// Whole-utterance features of one envelope's LF spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFeatures {
    pub threshold: ThresholdFeatures,
    pub dct: Vec<f64>,
    pub measures: SpectralMeasures,
    pub r_formants: PeakSet,
}

/// The fused rhythm descriptor of one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub source_id: String,
    pub label: Option<String>,
    pub layout: FeatureLayout,
    pub values: Vec<f64>,
    /// Raw R-formant frequencies, AM then FM; excluded from `values`.
    pub r_formants: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<String> {
        self.layout.fused_names()
    }

    pub fn group_sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for d in self.layout.fused() {
            match d.group {
                Some(FeatureGroup::A) => sizes[0] += 1,
                Some(FeatureGroup::B) => sizes[1] += 1,
                Some(FeatureGroup::C) => sizes[2] += 1,
                None => {}
            }
        }
        sizes
    }
}

/// Places per-envelope features into the frozen fused order.
pub fn assemble(
    source_id: &str,
    am: &SpectrumFeatures,
    fm: &SpectrumFeatures,
    am_traj_vars: &[f64],
    fm_traj_vars: &[f64],
) -> Result<FeatureVector> {
    let n = am.r_formants.freqs_hz.len();
    let layout = FeatureLayout::new(n);
    for (what, len, expected) in [
        ("FM R-formant count", fm.r_formants.freqs_hz.len(), n),
        ("AM trajectory variances", am_traj_vars.len(), 2 * n),
        ("FM trajectory variances", fm_traj_vars.len(), 2 * n),
        ("AM DCT coefficients", am.dct.len(), N_DCT),
        ("FM DCT coefficients", fm.dct.len(), N_DCT),
    ] {
        if len != expected {
            return Err(Error::Dataset(format!("{what}: expected {expected}, got {len}")));
        }
    }

    let mut values = Vec::with_capacity(layout.fused_len());
    for f in [am, fm] {
        values.push(f.threshold.ndp as f64);
        values.push(f.threshold.mfdp_hz);
        values.push(f.threshold.vfdp_hz2);
        values.extend_from_slice(&f.dct);
    }
    for f in [am, fm] {
        values.extend_from_slice(&f.measures.to_array());
    }
    values.extend_from_slice(am_traj_vars);
    values.extend_from_slice(fm_traj_vars);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Dataset(format!(
            "non-finite value for {}",
            layout.fused_names()[i]
        )));
    }

    let mut r_formants = am.r_formants.freqs_hz.clone();
    r_formants.extend_from_slice(&fm.r_formants.freqs_hz);
    Ok(FeatureVector {
        source_id: source_id.to_string(),
        label: None,
        layout,
        values,
        r_formants,
    })
}

/// A subset of columns: the listed blocks on the listed envelopes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub blocks: BTreeSet<FeatureBlock>,
    pub envelopes: BTreeSet<EnvelopeKind>,
}

impl FeatureSelection {
    /// Groups A + B + C on both envelopes.
    pub fn fused() -> Self {
        Self::parse("A,B,C", "AM,FM").expect("static selection")
    }

    /// `groups`: comma list of `A`, `B`, `C`, `R` (raw R-formants), `VarRF`,
    /// `VarMag`. `envelopes`: comma list of `AM`, `FM`.
    pub fn parse(groups: &str, envelopes: &str) -> Result<Self> {
        let mut blocks = BTreeSet::new();
        for g in groups.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match g.to_ascii_uppercase().as_str() {
                "A" => {
                    blocks.insert(FeatureBlock::ThresholdDct);
                }
                "B" => {
                    blocks.insert(FeatureBlock::Spectral);
                }
                "C" => {
                    blocks.insert(FeatureBlock::VarRf);
                    blocks.insert(FeatureBlock::VarMag);
                }
                "R" | "RF" | "RFORMANTS" => {
                    blocks.insert(FeatureBlock::RFormant);
                }
                "VARRF" | "VARRFS" => {
                    blocks.insert(FeatureBlock::VarRf);
                }
                "VARMAG" => {
                    blocks.insert(FeatureBlock::VarMag);
                }
                _ => return Err(Error::Dataset(format!("unknown feature group '{g}'"))),
            }
        }
        let mut envs = BTreeSet::new();
        for e in envelopes.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match e.to_ascii_uppercase().as_str() {
                "AM" => envs.insert(EnvelopeKind::Am),
                "FM" => envs.insert(EnvelopeKind::Fm),
                _ => return Err(Error::Dataset(format!("unknown envelope '{e}'"))),
            };
        }
        if blocks.is_empty() || envs.is_empty() {
            return Err(Error::Dataset("empty feature selection".into()));
        }
        Ok(Self {
            blocks,
            envelopes: envs,
        })
    }

    pub fn matches(&self, def: &FeatureDef) -> bool {
        self.blocks.contains(&def.block) && self.envelopes.contains(&def.envelope)
    }

    /// Selected column names in canonical order.
    pub fn names(&self, layout: &FeatureLayout) -> Vec<String> {
        layout
            .all()
            .into_iter()
            .filter(|d| self.matches(d))
            .map(|d| d.name)
            .collect()
    }
}

impl fmt::Display for FeatureSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<&str> = self
            .blocks
            .iter()
            .map(|b| match b {
                FeatureBlock::RFormant => "R",
                FeatureBlock::ThresholdDct => "A",
                FeatureBlock::Spectral => "B",
                FeatureBlock::VarRf => "VarRF",
                FeatureBlock::VarMag => "VarMag",
            })
            .collect();
        let envs: Vec<&str> = self.envelopes.iter().map(|e| e.as_str()).collect();
        write!(f, "{} on {}", blocks.join("+"), envs.join("+"))
    }
}

/// The seventeen feature configurations of the language-classification
/// results table, with their dimensionalities at six formants.
pub fn table1_rows() -> Vec<(&'static str, FeatureSelection, usize)> {
    let rows: [(&str, &str, &str, usize); 17] = [
        ("AM R-formants", "R", "AM", 6),
        ("FM R-formants", "R", "FM", 6),
        ("AM+FM R-formants", "R", "AM,FM", 12),
        ("AM threshold+DCT", "A", "AM", 7),
        ("FM threshold+DCT", "A", "FM", 7),
        ("AM+FM threshold+DCT (A)", "A", "AM,FM", 14),
        ("AM spectral", "B", "AM", 7),
        ("FM spectral", "B", "FM", 7),
        ("AM+FM spectral (B)", "B", "AM,FM", 14),
        ("AM VarRFs", "VarRF", "AM", 6),
        ("AM VarMag", "VarMag", "AM", 6),
        ("AM VarRFs+VarMag", "C", "AM", 12),
        ("FM VarRFs", "VarRF", "FM", 6),
        ("FM VarMag", "VarMag", "FM", 6),
        ("FM VarRFs+VarMag", "C", "FM", 12),
        ("AM+FM VarRFs+VarMag (C)", "C", "AM,FM", 24),
        ("AM+FM A+B+C", "A,B,C", "AM,FM", 52),
    ];
    rows.into_iter()
        .map(|(label, g, e, dim)| (label, FeatureSelection::parse(g, e).expect("static"), dim))
        .collect()
}

/// One labelled row of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub source_id: String,
    pub label: Option<String>,
    pub values: Vec<f64>,
}

/// Rows sharing one column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset from feature vectors; the R-formant block is
    /// appended when `with_r_formants` is set.
    pub fn from_vectors(vectors: &[FeatureVector], with_r_formants: bool) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::Dataset("empty dataset".into()))?;
        let layout = first.layout;
        let mut feature_names = layout.fused_names();
        if with_r_formants {
            feature_names.extend(layout.r_formants().into_iter().map(|d| d.name));
        }
        let mut rows = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.layout != layout {
                return Err(Error::Dataset(format!(
                    "{}: layout differs from the first row",
                    v.source_id
                )));
            }
            let mut values = v.values.clone();
            if with_r_formants {
                values.extend_from_slice(&v.r_formants);
            }
            rows.push(Sample {
                source_id: v.source_id.clone(),
                label: v.label.clone(),
                values,
            });
        }
        Ok(Self { feature_names, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Sorted distinct labels.
    pub fn label_set(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter_map(|r| r.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Keeps the named columns in the given order. Errors name the first
    /// column that is not present.
    pub fn project(&self, names: &[String]) -> Result<Dataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::Dataset(format!("missing feature column '{n}'")))
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            feature_names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| Sample {
                    source_id: r.source_id.clone(),
                    label: r.label.clone(),
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                })
                .collect(),
        })
    }

    /// Columns matching the selection, in the dataset's order.
    pub fn select(&self, selection: &FeatureSelection) -> Result<Dataset> {
        let names: Vec<String> = self
            .feature_names
            .iter()
            .filter(|n| parse_feature_name(n).is_some_and(|d| selection.matches(&d)))
            .cloned()
            .collect();
        if names.is_empty() {
            return Err(Error::Dataset(format!("selection {selection} matches no columns")));
        }
        self.project(&names)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `# ` comment lines, the header `source_id,label,<names>` and one
/// row per sample.
pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    for c in comments {
        for line in c.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["source_id".to_string(), "label".to_string()];
    header.extend(ds.feature_names.iter().cloned());
    w.write_record(&header)?;
    for r in &ds.rows {
        let mut rec = vec![r.source_id.clone(), r.label.clone().unwrap_or_default()];
        rec.extend(r.values.iter().map(|&v| format_value(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path.as_ref())?;
    let header = rdr.headers()?.clone();
    let header_line = header.position().map_or(1, |p| p.line());
    for (i, required) in ["source_id", "label"].iter().enumerate() {
        if header.get(i) != Some(required) {
            return Err(Error::Parse {
                line: header_line,
                message: format!("missing required column '{required}' at position {}", i + 1),
            });
        }
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for name in &feature_names {
        if parse_feature_name(name).is_none() {
            return Err(Error::Parse {
                line: header_line,
                message: format!("unknown column '{name}'"),
            });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse {
                line: header_line,
                message: format!("duplicate column '{name}'"),
            });
        }
    }
    if feature_names.is_empty() {
        return Err(Error::Parse {
            line: header_line,
            message: "no feature columns".into(),
        });
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", header.len(), rec.len()),
            });
        }
        let values = rec
            .iter()
            .skip(2)
            .zip(&feature_names)
            .map(|(field, name)| {
                f64::from_str(field.trim())
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("column '{name}': invalid number '{field}'"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = rec.get(1).filter(|l| !l.is_empty()).map(str::to_string);
        rows.push(Sample {
            source_id: rec[0].to_string(),
            label,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    Ok(Dataset { feature_names, rows })
}

/// JSON description of the column layout for downstream tools.
pub fn feature_schema_json(layout: &FeatureLayout) -> serde_json::Value {
    let fused = layout.fused();
    let defs: Vec<serde_json::Value> = fused
        .iter()
        .enumerate()
        .map(|(i, d)| {
            serde_json::json!({
                "index": i,
                "name": d.name,
                "group": d.group,
                "block": d.block,
                "envelope": d.envelope,
            })
        })
        .collect();
    serde_json::json!({
        "n_formants": layout.n_formants,
        "fused_dimension": fused.len(),
        "fused": defs,
        "r_formant_block": layout.r_formants().into_iter().map(|d| d.name).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum_features(seed: f64) -> SpectrumFeatures {
        SpectrumFeatures {
            threshold: ThresholdFeatures {
                ndp: 3,
                mfdp_hz: 4.0 + seed,
                vfdp_hz2: 1.5,
            },
            dct: vec![10.0, -1.0, 0.5, seed],
            measures: SpectralMeasures {
                centroid_hz: 4.0,
                spread_hz: 2.0,
                rolloff_hz: 7.0,
                flatness: 0.5,
                entropy: 0.8,
                skewness: 0.1,
                kurtosis: 2.5,
            },
            r_formants: PeakSet {
                freqs_hz: vec![4.0, 2.0, 6.0, 0.0, 0.0, 0.0],
                mags: vec![1.0, 0.5, 0.3, 0.0, 0.0, 0.0],
                count: 3,
            },
        }
    }

    fn vector() -> FeatureVector {
        let vars: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        assemble("x", &spectrum_features(0.0), &spectrum_features(1.0), &vars, &vars).unwrap()
    }

    #[test]
    fn fused_vector_has_52_dims_in_three_groups() {
        let v = vector();
        assert_eq!(v.values.len(), 52);
        assert_eq!(v.group_sizes(), [14, 14, 24]);
        assert_eq!(v.r_formants.len(), 12);
    }

    #[test]
    fn frozen_column_order() {
        let names = FeatureLayout::default().fused_names();
        let expected_head = [
            "NDP_AM", "MFDP_AM", "VFDP_AM", "DCT0_AM", "DCT1_AM", "DCT2_AM", "DCT3_AM",
            "NDP_FM", "MFDP_FM", "VFDP_FM", "DCT0_FM", "DCT1_FM", "DCT2_FM", "DCT3_FM",
            "Centroid_AM", "Spread_AM", "Rolloff_AM", "Flatness_AM", "Entropy_AM", "Skewness_AM",
            "Kurtosis_AM", "Centroid_FM", "Spread_FM", "Rolloff_FM", "Flatness_FM", "Entropy_FM",
            "Skewness_FM", "Kurtosis_FM", "VarRF1_AM", "VarRF2_AM", "VarRF3_AM", "VarRF4_AM",
            "VarRF5_AM", "VarRF6_AM", "VarMag1_AM", "VarMag2_AM", "VarMag3_AM", "VarMag4_AM",
            "VarMag5_AM", "VarMag6_AM", "VarRF1_FM", "VarRF2_FM", "VarRF3_FM", "VarRF4_FM",
            "VarRF5_FM", "VarRF6_FM", "VarMag1_FM", "VarMag2_FM", "VarMag3_FM", "VarMag4_FM",
            "VarMag5_FM", "VarMag6_FM",
        ];
        assert_eq!(names, expected_head);
        for n in &names {
            assert_eq!(parse_feature_name(n).unwrap().name, *n);
        }
    }

    #[test]
    fn assemble_places_values() {
        let v = vector();
        let names = v.names();
        let at = |n: &str| v.values[names.iter().position(|x| x == n).unwrap()];
        assert_eq!(at("NDP_AM"), 3.0);
        assert_eq!(at("MFDP_FM"), 5.0);
        assert_eq!(at("DCT3_FM"), 1.0);
        assert_eq!(at("Kurtosis_FM"), 2.5);
        assert_eq!(at("VarRF2_AM"), 0.1);
        assert_eq!(at("VarMag6_FM"), 1.1);
        assert_eq!(vector(), v);
    }

    #[test]
    fn assemble_rejects_wrong_lengths() {
        let vars = vec![0.0; 11];
        assert!(assemble("x", &spectrum_features(0.0), &spectrum_features(0.0), &vars, &vars).is_err());
    }

    #[test]
    fn table_rows_have_expected_dims() {
        let layout = FeatureLayout::default();
        for (label, sel, dim) in table1_rows() {
            assert_eq!(sel.names(&layout).len(), dim, "{label}");
        }
        let ds = Dataset::from_vectors(&[vector()], true).unwrap();
        assert_eq!(ds.select(&FeatureSelection::parse("A", "AM,FM").unwrap()).unwrap().n_features(), 14);
        assert_eq!(ds.select(&FeatureSelection::parse("C", "AM").unwrap()).unwrap().n_features(), 12);
        assert_eq!(ds.select(&FeatureSelection::fused()).unwrap().n_features(), 52);
        assert!(FeatureSelection::parse("Q", "AM").is_err());
        assert!(FeatureSelection::parse("A", "XM").is_err());
    }

    #[test]
    fn unknown_names_rejected() {
        for bad in ["DCT4_AM", "NDP_XM", "VarRF0_AM", "VarRF01_AM", "Flux_AM", "source_id", "RF_AM"] {
            assert!(parse_feature_name(bad).is_none(), "{bad}");
        }
        assert_eq!(parse_feature_name("RF3_FM").unwrap().block, FeatureBlock::RFormant);
    }

    fn labelled(n: usize) -> Dataset {
        let mut vs = Vec::new();
        for i in 0..n {
            let mut v = vector();
            v.source_id = format!("f{i}");
            v.label = Some(LANGUAGE_CODES[i % 5].to_string());
            v.values.iter_mut().for_each(|x| *x += i as f64 / 7.0);
            vs.push(v);
        }
        Dataset::from_vectors(&vs, true).unwrap()
    }

    #[test]
    fn missing_label_column_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "source_id,NDP_AM\nx,1.0\n").unwrap();
        let err = read_dataset(&p).unwrap_err().to_string();
        assert!(err.contains("'label'"), "{err}");
    }

    #[test]
    fn empty_rows_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        std::fs::write(&p, "source_id,label,NDP_AM\n").unwrap();
        assert!(read_dataset(&p).unwrap_err().to_string().contains("empty dataset"));
        assert!(write_dataset(&Dataset { feature_names: vec![], rows: vec![] }, &p, &[]).is_err());
    }

    #[test]
    fn unknown_column_and_bad_rows_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "source_id,label,NDP_AM,Bogus_AM\nx,ben,1,2\n").unwrap();
        assert!(read_dataset(&p).unwrap_err().to_string().contains("Bogus_AM"));
        std::fs::write(&p, "# c\nsource_id,label,NDP_AM\nx,ben,1\ny,ben,1,2\n").unwrap();
        let err = read_dataset(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        std::fs::write(&p, "source_id,label,NDP_AM\nx,ben,abc\n").unwrap();
        assert!(matches!(read_dataset(&p).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn write_then_read_round_trips() {
        let ds = labelled(7);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ds.csv");
        write_dataset(&ds, &p, &["tool 0.1".into(), "{\"k\": 1}".into()]).unwrap();
        let back = read_dataset(&p).unwrap();
        assert_eq!(back.feature_names, ds.feature_names);
        for (a, b) in ds.rows.iter().zip(&back.rows) {
            assert_eq!(a.source_id, b.source_id);
            assert_eq!(a.label, b.label);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }
        assert_eq!(back.label_set(), LANGUAGE_CODES.to_vec());
    }

    #[test]
    fn schema_json_lists_all_fused_columns() {
        let j = feature_schema_json(&FeatureLayout::default());
        assert_eq!(j["fused_dimension"], 52);
        assert_eq!(j["fused"][12]["name"], "DCT2_FM");
        assert_eq!(j["fused"][12]["group"], "A");
    }

    proptest! {
        #[test]
        fn formatted_values_keep_twelve_digits(v in prop::num::f64::NORMAL) {
            let back: f64 = format_value(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-12 * v.abs());
        }
    }
}
