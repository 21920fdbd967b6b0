//! Joint ASR+ST token-level serialized-output-training (t-SOT) toolkit.
//!
//! Builds joint transcription+translation token streams from parallel text
//! under several interleaving strategies (`interleave`), splits joint streams
//! back into per-task streams (`stream`), scores quality and latency
//! (`metrics`), and simulates chunked streaming emission (`simulate`).
//! Corpus loading and word-alignment parsing live in `corpus`; `synth`
//! generates deterministic synthetic corpora for experiments and tests.

pub mod corpus;
pub mod interleave;
pub mod metrics;
pub mod simulate;
pub mod stream;
pub mod synth;

/// Tag token that switches the joint stream to transcription output.
pub const ASR_TAG: &str = "#ASR#";
/// Tag token that switches the joint stream to translation output.
pub const ST_TAG: &str = "#ST#";
