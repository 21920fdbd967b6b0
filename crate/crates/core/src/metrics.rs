//! Quality (WER, BLEU) and latency (AL, LAAL) metrics.
//!
//! WER is word-level edit distance over the reference length. BLEU is
//! corpus-level BLEU-4 with brevity penalty and exponential smoothing of
//! zero match counts (the k-th consecutive zero numerator becomes 1/2^k);
//! n-gram orders the hypothesis corpus cannot realize (total count zero) are
//! excluded from the geometric mean so that a corpus scored against itself
//! is exactly 100. AL averages how far emission times trail an ideal
//! uniform-rate policy, truncated at the first token emitted after the full
//! source; LAAL is AL with the ideal rate computed over the longer of
//! reference and hypothesis, so over-generation cannot lower the score.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::UtterancePair;
use crate::interleave::Task;
use crate::stream::{split, StreamParser};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("delay log {0:?} has no delays")]
    EmptyDelays(String),
    #[error("reference length must be positive")]
    ZeroReferenceLength,
    #[error("delay log {id:?}: {msg}")]
    InvalidDelayLog { id: String, msg: String },
}

/// Per-token emission timestamps for one utterance: `delays_ms[i]` is how
/// much source audio had been heard when token `i` was emitted, bounded by
/// the total source duration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayLog {
    pub id: String,
    pub delays_ms: Vec<u64>,
    pub duration_ms: u64,
}

impl DelayLog {
    pub fn new(
        id: impl Into<String>,
        delays_ms: Vec<u64>,
        duration_ms: u64,
    ) -> Result<Self, MetricsError> {
        let id = id.into();
        if duration_ms == 0 {
            return Err(MetricsError::InvalidDelayLog {
                id,
                msg: "duration_ms must be positive".to_string(),
            });
        }
        if delays_ms.windows(2).any(|w| w[0] > w[1]) {
            return Err(MetricsError::InvalidDelayLog {
                id,
                msg: "delays must be non-decreasing".to_string(),
            });
        }
        if let Some(&d) = delays_ms.iter().find(|&&d| d > duration_ms) {
            return Err(MetricsError::InvalidDelayLog {
                id,
                msg: format!("delay {d} exceeds duration {duration_ms}"),
            });
        }
        Ok(DelayLog {
            id,
            delays_ms,
            duration_ms,
        })
    }
}

/// On-disk joint delay log: the emitted tokens (tags included) with one
/// delay per token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayLogRecord {
    pub id: String,
    pub duration_ms: u64,
    pub tokens: Vec<String>,
    pub delays_ms: Vec<u64>,
}

/// Word-level edit distance with unit costs, two-row rolling table.
fn edit_distance<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hypothesis: &[H]) -> usize {
    if reference.is_empty() {
        return hypothesis.len();
    }
    if hypothesis.is_empty() {
        return reference.len();
    }
    let n = hypothesis.len();
    let mut prev: Vec<usize> = (0..=n).collect();
    let mut curr = vec![0usize; n + 1];
    for (i, r) in reference.iter().enumerate() {
        curr[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let cost = usize::from(r.as_ref() != h.as_ref());
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[n]
}

/// Word error rate in percent: `100 * (S + D + I) / |reference|`.
pub fn wer<R: AsRef<str>, H: AsRef<str>>(
    reference: &[R],
    hypothesis: &[H],
) -> Result<f64, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    Ok(100.0 * edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

const MAX_NGRAM: usize = 4;

/// Streaming corpus-BLEU state: clipped n-gram matches and totals per order
/// plus reference/hypothesis lengths. Sentences can be observed in any
/// order; the reduction is a plain sum.
#[derive(Debug, Clone, Default)]
pub struct BleuAccumulator {
    correct: [u64; MAX_NGRAM],
    total: [u64; MAX_NGRAM],
    ref_len: u64,
    hyp_len: u64,
    sentences: usize,
}

impl BleuAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, reference: &str, hypothesis: &str) {
        let ref_tokens: Vec<&str> = reference.split_whitespace().collect();
        let hyp_tokens: Vec<&str> = hypothesis.split_whitespace().collect();
        self.ref_len += ref_tokens.len() as u64;
        self.hyp_len += hyp_tokens.len() as u64;
        self.sentences += 1;
        for order in 1..=MAX_NGRAM {
            if hyp_tokens.len() < order {
                break;
            }
            let mut ref_counts: HashMap<&[&str], u64> = HashMap::new();
            if ref_tokens.len() >= order {
                for gram in ref_tokens.windows(order) {
                    *ref_counts.entry(gram).or_insert(0) += 1;
                }
            }
            let mut hyp_counts: HashMap<&[&str], u64> = HashMap::new();
            for gram in hyp_tokens.windows(order) {
                *hyp_counts.entry(gram).or_insert(0) += 1;
            }
            let mut matched = 0u64;
            for (gram, count) in &hyp_counts {
                matched += (*count).min(ref_counts.get(gram).copied().unwrap_or(0));
            }
            self.correct[order - 1] += matched;
            self.total[order - 1] += (hyp_tokens.len() - order + 1) as u64;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sentences == 0
    }

    /// Final corpus score in [0, 100].
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return if self.ref_len == 0 { 100.0 } else { 0.0 };
        }
        let brevity_penalty = if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        let mut zeros = 0u32;
        for n in 0..MAX_NGRAM {
            if self.total[n] == 0 {
                continue;
            }
            let numerator = if self.correct[n] == 0 {
                zeros += 1;
                1.0 / f64::powi(2.0, zeros as i32)
            } else {
                self.correct[n] as f64
            };
            log_sum += (numerator / self.total[n] as f64).ln();
            orders += 1;
        }
        debug_assert!(orders > 0, "hyp_len > 0 implies 1-gram total > 0");
        100.0 * brevity_penalty * (log_sum / orders as f64).exp()
    }
}

/// Corpus-level BLEU-4 over parallel sentence lists (one reference per
/// hypothesis).
pub fn bleu<R: AsRef<str>, H: AsRef<str>>(
    references: &[R],
    hypotheses: &[H],
) -> Result<f64, MetricsError> {
    if references.len() != hypotheses.len() {
        return Err(MetricsError::LengthMismatch {
            left: references.len(),
            right: hypotheses.len(),
        });
    }
    if references.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut acc = BleuAccumulator::new();
    for (r, h) in references.iter().zip(hypotheses) {
        acc.observe(r.as_ref(), h.as_ref());
    }
    Ok(acc.score())
}

/// Index of the cutoff token for lagging metrics: the first token emitted
/// only after the whole source was heard, or the last token if none was.
fn lagging_cutoff(log: &DelayLog) -> usize {
    log.delays_ms
        .iter()
        .position(|&d| d == log.duration_ms)
        .map(|p| p + 1)
        .unwrap_or(log.delays_ms.len())
}

fn lagging(log: &DelayLog, rate_divisor: usize) -> Result<f64, MetricsError> {
    if log.delays_ms.is_empty() {
        return Err(MetricsError::EmptyDelays(log.id.clone()));
    }
    let tau = lagging_cutoff(log);
    let rate = log.duration_ms as f64 / rate_divisor as f64;
    let sum: f64 = log.delays_ms[..tau]
        .iter()
        .enumerate()
        .map(|(i, &d)| d as f64 - i as f64 * rate)
        .sum();
    Ok(sum / tau as f64)
}

/// Average lagging in milliseconds against an ideal policy emitting
/// `ref_len` tokens at uniform rate over the source duration.
pub fn al(log: &DelayLog, ref_len: usize) -> Result<f64, MetricsError> {
    if ref_len == 0 {
        return Err(MetricsError::ZeroReferenceLength);
    }
    lagging(log, ref_len)
}

/// Length-adaptive average lagging: the ideal rate divisor is the longer of
/// reference and hypothesis, so it equals [`al`] when the hypothesis is not
/// longer than the reference and is never below it otherwise.
pub fn laal(log: &DelayLog, ref_len: usize) -> Result<f64, MetricsError> {
    if ref_len == 0 {
        return Err(MetricsError::ZeroReferenceLength);
    }
    lagging(log, ref_len.max(log.delays_ms.len()))
}

/// Per-task delay logs split out of one joint stream.
#[derive(Debug, Clone)]
pub struct PerTaskDelays {
    pub asr: DelayLog,
    pub st: DelayLog,
    pub warnings: Vec<String>,
}

/// Route each non-tag token's delay to its task by walking the joint stream
/// with the splitting state machine. Tag tokens consume a delay slot but do
/// not appear in either output.
pub fn per_task_delays<S: AsRef<str>>(
    id: &str,
    tokens: &[S],
    delays_ms: &[u64],
    duration_ms: u64,
) -> Result<PerTaskDelays, MetricsError> {
    if tokens.len() != delays_ms.len() {
        return Err(MetricsError::LengthMismatch {
            left: tokens.len(),
            right: delays_ms.len(),
        });
    }
    let mut parser = StreamParser::new();
    let mut asr = Vec::new();
    let mut st = Vec::new();
    for (token, &delay) in tokens.iter().zip(delays_ms) {
        if let Some((task, _)) = parser.feed_token(token.as_ref()) {
            match task {
                Task::Asr => asr.push(delay),
                Task::St => st.push(delay),
            }
        }
    }
    let mut warnings: Vec<String> = parser
        .warnings()
        .iter()
        .map(|w| format!("{id}: {w}"))
        .collect();
    if asr.is_empty() {
        warnings.push(format!("{id}: no ASR tokens in joint stream"));
    }
    if st.is_empty() {
        warnings.push(format!("{id}: no ST tokens in joint stream"));
    }
    Ok(PerTaskDelays {
        asr: DelayLog::new(id, asr, duration_ms)?,
        st: DelayLog::new(id, st, duration_ms)?,
        warnings,
    })
}

/// Aggregated metrics for one task over a corpus slice.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub wer_percent: f64,
    pub bleu: f64,
    pub al_ms: f64,
    pub laal_ms: f64,
    pub utterance_count: usize,
}

/// Per-task report for one language pair.
#[derive(Debug, Clone)]
pub struct EvalGroup {
    pub src_lang: String,
    pub tgt_lang: String,
    pub task: Task,
    pub report: MetricReport,
}

/// Full evaluation outcome: one report per (language pair, task), the
/// corpus-wide aggregate per task, and any per-record warnings.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub groups: Vec<EvalGroup>,
    pub aggregate: Vec<(Task, MetricReport)>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct TaskAccumulator {
    edits: usize,
    ref_tokens: usize,
    bleu: BleuAccumulator,
    al_sum: f64,
    laal_sum: f64,
    latency_count: usize,
    utterances: usize,
}

impl TaskAccumulator {
    fn observe_quality(&mut self, reference: &[String], hypothesis: &[String]) {
        self.edits += edit_distance(reference, hypothesis);
        self.ref_tokens += reference.len();
        self.bleu.observe(&reference.join(" "), &hypothesis.join(" "));
        self.utterances += 1;
    }

    fn observe_latency(&mut self, log: &DelayLog, ref_len: usize) -> Result<(), MetricsError> {
        self.al_sum += al(log, ref_len)?;
        self.laal_sum += laal(log, ref_len)?;
        self.latency_count += 1;
        Ok(())
    }

    fn report(&self, warnings: &mut Vec<String>, label: &str) -> MetricReport {
        let wer_percent = if self.ref_tokens > 0 {
            100.0 * self.edits as f64 / self.ref_tokens as f64
        } else {
            if self.edits > 0 {
                warnings.push(format!("{label}: WER undefined (empty references), reported as 0"));
            }
            0.0
        };
        if self.latency_count == 0 {
            warnings.push(format!("{label}: no latency measurements"));
        }
        let denom = self.latency_count.max(1) as f64;
        MetricReport {
            wer_percent,
            bleu: self.bleu.score(),
            al_ms: self.al_sum / denom,
            laal_ms: self.laal_sum / denom,
            utterance_count: self.utterances,
        }
    }
}

/// Score hypothesis delay logs against a reference corpus: join by id,
/// split each joint hypothesis stream per task, pool WER edit counts and
/// BLEU n-gram statistics per (language pair, task), and average
/// per-utterance AL/LAAL. Pairs without a log (or logs without a pair) are
/// skipped with a warning.
pub fn evaluate_corpus(
    pairs: &[UtterancePair],
    logs: &[DelayLogRecord],
) -> Result<EvalSummary, MetricsError> {
    let mut warnings = Vec::new();
    let mut by_id: BTreeMap<&str, &DelayLogRecord> = BTreeMap::new();
    for log in logs {
        if by_id.insert(log.id.as_str(), log).is_some() {
            warnings.push(format!("duplicate delay log id {:?}; keeping the last", log.id));
        }
    }

    let mut accs: BTreeMap<(String, String, Task), TaskAccumulator> = BTreeMap::new();
    let mut matched = std::collections::BTreeSet::new();
    for pair in pairs {
        let Some(log) = by_id.get(pair.id.as_str()) else {
            warnings.push(format!("no delay log for record {:?}; skipped", pair.id));
            continue;
        };
        matched.insert(pair.id.as_str());
        let hypothesis = split(&log.tokens);
        warnings.extend(hypothesis.warnings.iter().map(|w| format!("{}: {w}", pair.id)));
        let routed = per_task_delays(&pair.id, &log.tokens, &log.delays_ms, log.duration_ms)?;

        let src_ref: Vec<String> = pair.transcription.iter().map(|t| t.as_str().to_string()).collect();
        let tgt_ref: Vec<String> = pair.translation.iter().map(|t| t.as_str().to_string()).collect();
        let keys = [
            (Task::Asr, &src_ref, &hypothesis.asr, &routed.asr, pair.src_len()),
            (Task::St, &tgt_ref, &hypothesis.st, &routed.st, pair.tgt_len()),
        ];
        for (task, reference, hyp, delay_log, ref_len) in keys {
            for key in [
                (pair.src_lang.clone(), pair.tgt_lang.clone(), task),
                ("all".to_string(), "all".to_string(), task),
            ] {
                let acc = accs.entry(key).or_default();
                acc.observe_quality(reference, hyp);
                if ref_len > 0 && !delay_log.delays_ms.is_empty() {
                    acc.observe_latency(delay_log, ref_len)?;
                }
            }
        }
    }
    for log in logs {
        if !matched.contains(log.id.as_str()) {
            warnings.push(format!("delay log {:?} has no corpus record; skipped", log.id));
        }
    }

    let mut groups = Vec::new();
    let mut aggregate = Vec::new();
    for ((src_lang, tgt_lang, task), acc) in &accs {
        let label = format!("{src_lang}-{tgt_lang}/{task}");
        let report = acc.report(&mut warnings, &label);
        if src_lang == "all" && tgt_lang == "all" {
            aggregate.push((*task, report));
        } else {
            groups.push(EvalGroup {
                src_lang: src_lang.clone(),
                tgt_lang: tgt_lang.clone(),
                task: *task,
                report,
            });
        }
    }
    Ok(EvalSummary {
        groups,
        aggregate,
        warnings,
    })
}
