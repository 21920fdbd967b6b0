//! Incremental splitting of a joint t-SOT token stream into per-task streams.
//!
//! The parser is a two-state machine over surface tokens: the reserved tags
//! switch the active task, every other token is routed to the active task's
//! output. It never fails — decoder output can be malformed — and never
//! retracts emitted tokens, so every prefix of the input yields a prefix of
//! the final outputs.

use crate::corpus::UtterancePair;
use crate::interleave::{flatten, SerializedStream, Task};
use crate::{ASR_TAG, ST_TAG};

/// Incremental splitter state.
#[derive(Debug, Clone, Default)]
pub struct StreamParser {
    current_task: Option<Task>,
    asr_out: Vec<String>,
    st_out: Vec<String>,
    tokens_seen: usize,
    warnings: Vec<String>,
}

impl StreamParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current_task(&self) -> Option<Task> {
        self.current_task
    }

    pub fn asr_out(&self) -> &[String] {
        &self.asr_out
    }

    pub fn st_out(&self) -> &[String] {
        &self.st_out
    }

    pub fn tokens_seen(&self) -> usize {
        self.tokens_seen
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Consume one surface token. Tags switch the task and emit nothing;
    /// any other token is appended to the active task's output and returned
    /// as an incremental emission. A data token arriving before any tag goes
    /// to ASR with a recorded warning.
    pub fn feed_token(&mut self, token: &str) -> Option<(Task, String)> {
        self.tokens_seen += 1;
        match token {
            ASR_TAG => {
                self.current_task = Some(Task::Asr);
                None
            }
            ST_TAG => {
                self.current_task = Some(Task::St);
                None
            }
            data => {
                let task = self.current_task.unwrap_or_else(|| {
                    self.warnings.push(format!(
                        "token {data:?} arrived before any task tag; defaulting to ASR"
                    ));
                    self.current_task = Some(Task::Asr);
                    Task::Asr
                });
                match task {
                    Task::Asr => self.asr_out.push(data.to_string()),
                    Task::St => self.st_out.push(data.to_string()),
                }
                Some((task, data.to_string()))
            }
        }
    }
}

/// Batch split result.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitResult {
    pub asr: Vec<String>,
    pub st: Vec<String>,
    pub warnings: Vec<String>,
}

/// Split a whole token sequence; equal to folding [`StreamParser::feed_token`].
pub fn split<S: AsRef<str>>(tokens: &[S]) -> SplitResult {
    let mut parser = StreamParser::new();
    for token in tokens {
        parser.feed_token(token.as_ref());
    }
    SplitResult {
        asr: parser.asr_out,
        st: parser.st_out,
        warnings: parser.warnings,
    }
}

/// Outcome of a round-trip check, with the first diverging token position
/// per task when the check fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundtripReport {
    pub ok: bool,
    pub asr_divergence: Option<usize>,
    pub st_divergence: Option<usize>,
}

impl RoundtripReport {
    pub fn describe(&self) -> String {
        if self.ok {
            return "round-trip ok".to_string();
        }
        let mut parts = Vec::new();
        if let Some(p) = self.asr_divergence {
            parts.push(format!("ASR diverges at position {p}"));
        }
        if let Some(p) = self.st_divergence {
            parts.push(format!("ST diverges at position {p}"));
        }
        parts.join("; ")
    }
}

fn first_divergence(expected: &[String], got: &[String]) -> Option<usize> {
    let common = expected.len().min(got.len());
    for k in 0..common {
        if expected[k] != got[k] {
            return Some(k);
        }
    }
    if expected.len() != got.len() {
        Some(common)
    } else {
        None
    }
}

/// Verify that splitting a joint token sequence reproduces the pair's
/// transcription and translation exactly.
pub fn verify_joint<S: AsRef<str>>(pair: &UtterancePair, joint_tokens: &[S]) -> RoundtripReport {
    let result = split(joint_tokens);
    let asr_expected: Vec<String> = pair
        .transcription
        .iter()
        .map(|t| t.as_str().to_string())
        .collect();
    let st_expected: Vec<String> = pair
        .translation
        .iter()
        .map(|t| t.as_str().to_string())
        .collect();
    let asr_divergence = first_divergence(&asr_expected, &result.asr);
    let st_divergence = first_divergence(&st_expected, &result.st);
    RoundtripReport {
        ok: asr_divergence.is_none() && st_divergence.is_none(),
        asr_divergence,
        st_divergence,
    }
}

/// Verify that splitting the flattened stream reproduces the pair's
/// transcription and translation exactly.
pub fn roundtrip_check(pair: &UtterancePair, stream: &SerializedStream) -> RoundtripReport {
    verify_joint(pair, &flatten(stream))
}

/// Split a space-joined joint stream, e.g. a `tsot` field.
pub fn split_joined(text: &str) -> SplitResult {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    split(&tokens)
}

/// Space-joined views of a split, convenient for JSONL output.
pub fn joined_outputs(result: &SplitResult) -> (String, String) {
    (result.asr.join(" "), result.st.join(" "))
}
