//! `rfa plot-data`: CSV tables behind the eight analysis panels of a file.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use rfa_core::dsp::{interp_linear, median};
use rfa_core::lf_spectrogram::TrajectorySet;
use rfa_core::pipeline::EnvelopeAnalysis;
use rfa_core::{analyze_clip, load_audio, F0Track, LfSpectrogram, LfSpectrum};
use tracing::warn;

use crate::config::RunConfig;
use crate::{Classify, CmdResult, Common};

/// Peaks marked in the spectrum panels and trajectories in the
/// trajectory panels.
pub const N_MARKED: usize = 3;

pub const PANEL_FILES: [&str; 8] = [
    "panel_a_waveform_am_envelope.csv",
    "panel_b_am_spectrum.csv",
    "panel_c_f0_contour.csv",
    "panel_d_fm_spectrum.csv",
    "panel_e_am_spectrogram.csv",
    "panel_f_fm_spectrogram.csv",
    "panel_g_am_trajectories.csv",
    "panel_h_fm_trajectories.csv",
];

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// WAV file to analyse.
    #[arg(short, long, value_name = "WAV")]
    input: PathBuf,
    /// Directory for the panel CSVs (created if missing).
    #[arg(short, long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path, cfg: &RunConfig, source: &str) -> anyhow::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for line in cfg.provenance_lines() {
            writeln!(f, "# {line}")?;
        }
        writeln!(f, "# source: {source}")?;
        writeln!(f, "{}", self.header.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

fn waveform_table(a: &EnvelopeAnalysis, samples: &[f64], sample_rate: u32) -> Table {
    let env = &a.envelope;
    let env_t: Vec<f64> = env.times().collect();
    let mut t = Table::new(&["time_s", "waveform", "am_envelope"]);
    for (i, &x) in samples.iter().enumerate() {
        let time = i as f64 / sample_rate as f64;
        t.rows.push(vec![time, x, interp_linear(&env_t, &env.values, time)]);
    }
    t
}

fn spectrum_table(spec: &LfSpectrum, peaks: &[f64]) -> Table {
    let mut t = Table::new(&["freq_hz", "magnitude", "peak_rank"]);
    for (&f, &m) in spec.freqs_hz.iter().zip(&spec.mags) {
        let rank = peaks
            .iter()
            .take(N_MARKED)
            .position(|&p| p == f && m > 0.0)
            .map_or(0.0, |r| (r + 1) as f64);
        t.rows.push(vec![f, m, rank]);
    }
    t
}

fn f0_table(track: &F0Track) -> Table {
    let voiced: Vec<f64> = track.voiced().collect();
    let centre = median(&voiced).unwrap_or(0.0);
    let mut t = Table::new(&["time_s", "f0_hz", "f0_centered_hz"]);
    for (i, &f) in track.f0_hz.iter().enumerate() {
        let centred = if f > 0.0 { f - centre } else { 0.0 };
        t.rows.push(vec![track.frame_time(i), f, centred]);
    }
    t
}

fn spectrogram_table(sg: &LfSpectrogram) -> Table {
    let mut t = Table::new(&["time_s", "freq_hz", "magnitude"]);
    for (&time, row) in sg.frame_times_s.iter().zip(&sg.mags) {
        for (&f, &m) in sg.freqs_hz.iter().zip(row) {
            t.rows.push(vec![time, f, m]);
        }
    }
    t
}

fn trajectory_table(ts: &TrajectorySet) -> Table {
    let k = N_MARKED.min(ts.formant_freq_traj.len());
    let mut header = vec!["time_s".to_string()];
    for r in 1..=k {
        header.push(format!("rf{r}_hz"));
        header.push(format!("rf{r}_mag"));
    }
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for (i, &time) in ts.frame_times_s.iter().enumerate() {
        let mut row = vec![time];
        for r in 0..k {
            row.push(ts.formant_freq_traj[r][i]);
            row.push(ts.formant_mag_traj[r][i]);
        }
        t.rows.push(row);
    }
    t
}

pub fn run(args: PlotArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![])?;
    let clip = load_audio(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .data_err()?;
    let analysis = analyze_clip(&clip, &cfg.analysis)
        .with_context(|| format!("analysing {}", args.input.display()))
        .data_err()?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .data_err()?;

    let am = &analysis.am;
    let mut tables: Vec<(usize, Table)> = vec![
        (0, waveform_table(am, &analysis.clip.samples, analysis.clip.sample_rate_hz)),
        (1, spectrum_table(&am.spectrum, &am.features.r_formants.freqs_hz)),
        (4, spectrogram_table(&am.spectrogram)),
        (6, trajectory_table(&am.trajectories)),
    ];
    match &analysis.fm {
        Ok(fm) => {
            tables.push((2, f0_table(&analysis.f0)));
            tables.push((3, spectrum_table(&fm.spectrum, &fm.features.r_formants.freqs_hz)));
            tables.push((5, spectrogram_table(&fm.spectrogram)));
            tables.push((7, trajectory_table(&fm.trajectories)));
        }
        Err(e) => warn!(file = %args.input.display(), "FM panels skipped: {e}"),
    }
    tables.sort_by_key(|(i, _)| *i);

    let source = args.input.display().to_string();
    for (i, table) in &tables {
        let path = args.out_dir.join(PANEL_FILES[*i]);
        table
            .write(&path, &cfg, &source)
            .with_context(|| format!("writing {}", path.display()))
            .data_err()?;
        println!("{}", path.display());
    }
    if tables.len() < PANEL_FILES.len() {
        println!("wrote {} of {} panels (FM analysis unavailable)", tables.len(), PANEL_FILES.len());
    }
    Ok(())
}
