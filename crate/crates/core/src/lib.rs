//! Rhythm formant analysis of speech.
//!
//! The pipeline turns a speech recording into a fixed-length rhythm
//! descriptor:
//!
//! ```text
//! WAV -> AudioClip -> AM / FM envelopes -> LF spectrum (0-10 Hz)
//!                                       -> LF spectrogram (3 s windows)
//!     -> threshold + DCT, spectral shape, trajectory variances -> FeatureVector
//! ```
//!
//! [`pipeline::extract_features`] runs every stage with an
//! [`pipeline::AnalysisConfig`]; the individual stages are public for
//! plotting and testing.

pub mod audio_io;
pub mod dsp;
pub mod envelope;
pub mod error;
pub mod features;
pub mod lf_spectrogram;
pub mod lf_spectrum;
pub mod pipeline;
pub mod synth;

pub use audio_io::{filter_by_duration, load_audio, peak_normalize, write_wav, AudioClip};
pub use envelope::{am_envelope, fm_envelope, track_f0, Envelope, EnvelopeKind, F0Params, F0Track};
pub use error::{Error, Result};
pub use features::{
    assemble, read_dataset, write_dataset, Dataset, FeatureLayout, FeatureSelection, FeatureVector, Sample,
};
pub use lf_spectrogram::{compute_lf_spectrogram, extract_trajectories, trajectory_variances, LfSpectrogram};
pub use lf_spectrum::{
    compute_lf_spectrum, dct_features, pick_r_formants, spectral_measures, threshold_features, LfSpectrum,
    PeakSet,
};
pub use pipeline::{analyze_clip, extract_features, AnalysisConfig};
pub use synth::{synthesize, SynthKind, SynthSpec};

/// Version string embedded in every output artifact.
pub const TOOL_VERSION: &str = concat!("rfa ", env!("CARGO_PKG_VERSION"));
