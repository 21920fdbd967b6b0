//! Deterministic chunked-emission simulator.
//!
//! Produces per-token delay logs for a serialized stream under an oracle
//! policy: a transcription word becomes emittable once its own audio has
//! been heard, a translation word once all source words aligned to it have
//! been heard (an unaligned translation word inherits the previous one's
//! constraint; a leading unaligned one is free at time 0). Word timing is a
//! uniform division of the utterance duration, emission times round up to
//! the next chunk boundary and are capped at the full duration, and stream
//! order propagates: a token is never emitted before its predecessor.

use serde::Serialize;
use thiserror::Error;

use crate::corpus::UtterancePair;
use crate::interleave::{self, SerializedStream, Strategy, Task};
use crate::metrics::{self, DelayLog, MetricsError};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("record {0:?} has no alignment; the emission oracle requires one")]
    MissingAlignment(String),
    #[error("record {0:?} has no positive duration_ms")]
    MissingDuration(String),
    #[error("chunk_ms must be positive")]
    ZeroChunk,
    #[error(transparent)]
    Interleave(#[from] interleave::InterleaveError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// How simulated emission is gated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionMode {
    /// Alignment-gated oracle delays, the only supported mode.
    OracleAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmissionPolicy {
    pub chunk_ms: u64,
    pub mode: EmissionMode,
}

impl Default for EmissionPolicy {
    fn default() -> Self {
        EmissionPolicy {
            chunk_ms: 1000,
            mode: EmissionMode::OracleAligned,
        }
    }
}

impl EmissionPolicy {
    pub fn with_chunk_ms(chunk_ms: u64) -> Result<Self, SimulateError> {
        if chunk_ms == 0 {
            return Err(SimulateError::ZeroChunk);
        }
        Ok(EmissionPolicy {
            chunk_ms,
            ..Default::default()
        })
    }
}

/// A pair plus its serialized stream, validated for simulation: positive
/// duration and an alignment present.
#[derive(Debug, Clone, Copy)]
pub struct SimulatedUtterance<'a> {
    pub pair: &'a UtterancePair,
    pub stream: &'a SerializedStream,
}

impl<'a> SimulatedUtterance<'a> {
    pub fn new(
        pair: &'a UtterancePair,
        stream: &'a SerializedStream,
    ) -> Result<Self, SimulateError> {
        if pair.alignment.is_none() {
            return Err(SimulateError::MissingAlignment(pair.id.clone()));
        }
        match pair.duration_ms {
            Some(d) if d > 0 => Ok(SimulatedUtterance { pair, stream }),
            _ => Err(SimulateError::MissingDuration(pair.id.clone())),
        }
    }

    fn duration_ms(&self) -> u64 {
        self.pair.duration_ms.expect("validated at construction")
    }
}

/// End time of each of `m` uniformly spaced words over `duration_ms`:
/// word `i` (0-based) ends at round((i+1) * T / m). Non-decreasing, and the
/// last entry equals the duration.
pub fn word_end_times(m: usize, duration_ms: u64) -> Vec<u64> {
    let m64 = m as u64;
    (0..m64)
        .map(|i| (2 * (i + 1) * duration_ms + m64) / (2 * m64))
        .collect()
}

fn ceil_to_chunk(raw_ms: u64, chunk_ms: u64, duration_ms: u64) -> u64 {
    let chunked = raw_ms.div_ceil(chunk_ms) * chunk_ms;
    chunked.min(duration_ms)
}

/// Raw (un-chunked) emission constraints for every translation word.
fn st_raw_constraints(u: &SimulatedUtterance<'_>) -> Vec<u64> {
    let source_ends = word_end_times(u.pair.src_len(), u.duration_ms());
    let alignment = u.pair.alignment.as_ref().expect("validated");
    let mut constraints = vec![None::<u64>; u.pair.tgt_len()];
    for (s, t) in alignment.links() {
        let end = source_ends[s];
        constraints[t] = Some(constraints[t].map_or(end, |c| c.max(end)));
    }
    let mut out = Vec::with_capacity(constraints.len());
    let mut prev = 0u64;
    for c in constraints {
        let raw = c.unwrap_or(prev);
        out.push(raw);
        prev = raw;
    }
    out
}

/// Time at which word `word_index` of `task` becomes emittable, rounded up
/// to the next chunk boundary and capped at the duration. Pure oracle
/// constraint; stream-order propagation happens in [`simulate_emission`].
pub fn emittable_time(
    word_index: usize,
    task: Task,
    pair: &UtterancePair,
    policy: &EmissionPolicy,
) -> Result<u64, SimulateError> {
    let stream = SerializedStream::default();
    let u = SimulatedUtterance::new(pair, &stream)?;
    let duration = u.duration_ms();
    let raw = match task {
        Task::Asr => word_end_times(pair.src_len(), duration)[word_index],
        Task::St => st_raw_constraints(&u)[word_index],
    };
    Ok(ceil_to_chunk(raw, policy.chunk_ms, duration))
}

/// Simulate chunked emission of the whole flattened stream. The returned
/// log has one delay per flattened token; a tag token carries the delay of
/// the token that follows it.
pub fn simulate_emission(
    u: &SimulatedUtterance<'_>,
    policy: &EmissionPolicy,
) -> Result<DelayLog, SimulateError> {
    if policy.chunk_ms == 0 {
        return Err(SimulateError::ZeroChunk);
    }
    let duration = u.duration_ms();
    let source_ends = word_end_times(u.pair.src_len(), duration);
    let st_raw = st_raw_constraints(u);

    let mut delays = Vec::new();
    let mut current = 0u64;
    let (mut next_src, mut next_tgt) = (0usize, 0usize);
    for segment in u.stream.segments() {
        let tag_slot = delays.len();
        delays.push(0); // backfilled with the first word's delay below
        for _ in &segment.tokens {
            let raw = match segment.task {
                Task::Asr => {
                    let end = source_ends[next_src];
                    next_src += 1;
                    end
                }
                Task::St => {
                    let raw = st_raw[next_tgt];
                    next_tgt += 1;
                    raw
                }
            };
            current = current.max(ceil_to_chunk(raw, policy.chunk_ms, duration));
            delays.push(current);
        }
        delays[tag_slot] = delays[tag_slot + 1];
    }
    Ok(DelayLog::new(u.pair.id.clone(), delays, duration)?)
}

/// Mean per-task LAAL for one strategy over a corpus.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyLatency {
    pub strategy: String,
    pub asr_laal_ms: f64,
    pub st_laal_ms: f64,
    pub utterances: usize,
}

/// Run every strategy over the corpus: serialize, simulate, split delays per
/// task, and average the per-utterance LAAL values. Pairs must all carry an
/// alignment and a positive duration.
pub fn compare_strategies(
    corpus: &[UtterancePair],
    strategies: &[Strategy],
    policy: &EmissionPolicy,
) -> Result<Vec<StrategyLatency>, SimulateError> {
    let mut rows = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut asr_sum = 0.0;
        let mut asr_count = 0usize;
        let mut st_sum = 0.0;
        let mut st_count = 0usize;
        for pair in corpus {
            let stream = interleave::serialize(pair, strategy)?;
            let u = SimulatedUtterance::new(pair, &stream)?;
            let joint = simulate_emission(&u, policy)?;
            let tokens = interleave::flatten(&stream);
            let routed =
                metrics::per_task_delays(&pair.id, &tokens, &joint.delays_ms, joint.duration_ms)?;
            if pair.src_len() > 0 && !routed.asr.delays_ms.is_empty() {
                asr_sum += metrics::laal(&routed.asr, pair.src_len())?;
                asr_count += 1;
            }
            if pair.tgt_len() > 0 && !routed.st.delays_ms.is_empty() {
                st_sum += metrics::laal(&routed.st, pair.tgt_len())?;
                st_count += 1;
            }
        }
        rows.push(StrategyLatency {
            strategy: strategy.to_string(),
            asr_laal_ms: if asr_count > 0 { asr_sum / asr_count as f64 } else { 0.0 },
            st_laal_ms: if st_count > 0 { st_sum / st_count as f64 } else { 0.0 },
            utterances: corpus.len(),
        });
    }
    Ok(rows)
}
