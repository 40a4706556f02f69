//! `rfa synth`: synthetic test signals with a JSON sidecar.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use rfa_core::{synthesize, write_wav, SynthKind, SynthSpec};

use crate::{Classify, CmdResult, Common};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// am-tone, vibrato, am-step, noise or silence.
    #[arg(short, long)]
    kind: String,
    /// WAV file to write (16-bit PCM); the spec goes to `<output>.json`.
    #[arg(short, long, value_name = "WAV")]
    output: PathBuf,
    #[arg(long)]
    carrier: Option<f64>,
    #[arg(long)]
    mod_freq: Option<f64>,
    /// Modulation index (AM) or frequency deviation in Hz (vibrato).
    #[arg(long)]
    depth: Option<f64>,
    /// Modulation frequency of the second half of an am-step signal.
    #[arg(long)]
    step_mod_freq: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

pub fn run(args: SynthArgs) -> CmdResult {
    let cfg = args.common.resolve(vec![])?;
    let kind: SynthKind = args
        .kind
        .parse()
        .map_err(|e| anyhow!("{e}"))
        .usage_err()?;
    let mut spec = SynthSpec::new(kind);
    if let Some(v) = args.carrier {
        spec.carrier_hz = v;
    }
    if let Some(v) = args.mod_freq {
        spec.mod_freq_hz = v;
    }
    if let Some(v) = args.depth {
        spec.mod_depth = v;
    }
    if let Some(v) = args.step_mod_freq {
        spec.step_mod_freq_hz = v;
    }
    if let Some(v) = args.duration {
        spec.duration_s = v;
    }
    if let Some(v) = args.sample_rate {
        spec.sample_rate_hz = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    let clip = synthesize(&spec).usage_err()?;
    write_wav(&clip, &args.output, 16)
        .with_context(|| format!("writing {}", args.output.display()))
        .data_err()?;

    let mut sidecar = args.output.as_os_str().to_os_string();
    sidecar.push(".json");
    let sidecar = PathBuf::from(sidecar);
    let doc = serde_json::json!({
        "provenance": cfg.provenance_json(),
        "spec": spec,
        "wav": args.output.display().to_string(),
        "bits_per_sample": 16,
    });
    std::fs::write(&sidecar, serde_json::to_string_pretty(&doc).expect("serialisable") + "\n")
        .with_context(|| format!("writing {}", sidecar.display()))
        .data_err()?;
    println!("{} ({:.2} s at {} Hz)", args.output.display(), clip.duration_s(), clip.sample_rate_hz);
    Ok(())
}
