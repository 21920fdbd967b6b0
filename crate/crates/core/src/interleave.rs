//! Joint t-SOT serialization of a parallel pair into one tagged token stream.
//!
//! Two families of strategies: ratio-based interleaving controlled by a
//! parameter gamma in [0,1] (gamma=0 emits the whole transcription first,
//! gamma=1 the whole translation first, gamma=0.5 alternates word by word),
//! and alignment-based interleaving that emits minimal aligned source/target
//! blocks alternately.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Alignment, Token, UtterancePair};
use crate::{ASR_TAG, ST_TAG};

#[derive(Debug, Error)]
pub enum InterleaveError {
    #[error("gamma {0} outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("record {0:?} has no alignment; supply one or use a gamma strategy")]
    MissingAlignment(String),
    #[error("unknown strategy {0:?} (expected inter0.0, inter1.0, inter0.5, gamma:<float>, or align)")]
    UnknownStrategy(String),
}

/// Which output a token belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Asr,
    St,
}

impl Task {
    /// Surface form of the tag token that opens a segment of this task.
    pub fn tag(self) -> &'static str {
        match self {
            Task::Asr => ASR_TAG,
            Task::St => ST_TAG,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Asr => f.write_str("asr"),
            Task::St => f.write_str("st"),
        }
    }
}

/// Serialization strategy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Gamma(f64),
    Align,
}

impl Strategy {
    pub fn gamma(value: f64) -> Result<Self, InterleaveError> {
        check_gamma(value)?;
        Ok(Strategy::Gamma(value))
    }

    /// The four serializations studied side by side.
    pub fn standard_set() -> Vec<Strategy> {
        vec![
            Strategy::Gamma(0.0),
            Strategy::Gamma(1.0),
            Strategy::Gamma(0.5),
            Strategy::Align,
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Gamma(g) if *g == 0.0 => f.write_str("inter0.0"),
            Strategy::Gamma(g) if *g == 0.5 => f.write_str("inter0.5"),
            Strategy::Gamma(g) if *g == 1.0 => f.write_str("inter1.0"),
            Strategy::Gamma(g) => write!(f, "gamma:{g}"),
            Strategy::Align => f.write_str("align"),
        }
    }
}

impl FromStr for Strategy {
    type Err = InterleaveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inter0.0" => Ok(Strategy::Gamma(0.0)),
            "inter1.0" => Ok(Strategy::Gamma(1.0)),
            "inter0.5" => Ok(Strategy::Gamma(0.5)),
            "align" => Ok(Strategy::Align),
            other => match other.strip_prefix("gamma:") {
                Some(v) => {
                    let g: f64 = v
                        .parse()
                        .map_err(|_| InterleaveError::UnknownStrategy(other.to_string()))?;
                    Strategy::gamma(g)
                }
                None => Err(InterleaveError::UnknownStrategy(other.to_string())),
            },
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), InterleaveError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(InterleaveError::GammaOutOfRange(gamma));
    }
    Ok(())
}

/// Words emitted so far on each side during one serialization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GammaCounts {
    pub count_asr: usize,
    pub count_st: usize,
}

/// Pick the task of the next interleaved word: ASR iff
/// `(1 - gamma) * (1 + count_st) >= gamma * (1 + count_asr)`, ties to ASR.
/// gamma=0 always selects ASR, gamma=1 always ST, gamma=0.5 alternates
/// starting with ASR.
pub fn next_task_gamma(gamma: f64, counts: GammaCounts) -> Result<Task, InterleaveError> {
    check_gamma(gamma)?;
    let lhs = (1.0 - gamma) * (1.0 + counts.count_st as f64);
    let rhs = gamma * (1.0 + counts.count_asr as f64);
    Ok(if lhs >= rhs { Task::Asr } else { Task::St })
}

/// A maximal run of same-task tokens in a serialized stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub task: Task,
    pub tokens: Vec<Token>,
}

/// Joint serialized reference: task-tagged segments, maximally merged so no
/// two consecutive segments share a task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SerializedStream {
    segments: Vec<Segment>,
}

impl SerializedStream {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Append tokens under a task, merging into the last segment when the
    /// task matches. Empty pushes are ignored.
    fn push(&mut self, task: Task, tokens: impl IntoIterator<Item = Token>) {
        let mut tokens = tokens.into_iter().peekable();
        if tokens.peek().is_none() {
            return;
        }
        match self.segments.last_mut() {
            Some(last) if last.task == task => last.tokens.extend(tokens),
            _ => self.segments.push(Segment {
                task,
                tokens: tokens.collect(),
            }),
        }
    }
}

/// Serialize a pair under any strategy.
pub fn serialize(pair: &UtterancePair, strategy: Strategy) -> Result<SerializedStream, InterleaveError> {
    match strategy {
        Strategy::Gamma(g) => serialize_gamma(pair, g),
        Strategy::Align => serialize_align(pair),
    }
}

/// Ratio-based serialization: one word per step from the side selected by
/// [`next_task_gamma`]; once a side is exhausted the rest of the other side
/// is appended in one run.
pub fn serialize_gamma(pair: &UtterancePair, gamma: f64) -> Result<SerializedStream, InterleaveError> {
    check_gamma(gamma)?;
    let src = &pair.transcription;
    let tgt = &pair.translation;
    let mut stream = SerializedStream::default();
    let mut counts = GammaCounts::default();
    let (mut i, mut j) = (0usize, 0usize);
    while i < src.len() && j < tgt.len() {
        match next_task_gamma(gamma, counts)? {
            Task::Asr => {
                stream.push(Task::Asr, [src[i].clone()]);
                i += 1;
                counts.count_asr += 1;
            }
            Task::St => {
                stream.push(Task::St, [tgt[j].clone()]);
                j += 1;
                counts.count_st += 1;
            }
        }
    }
    stream.push(Task::Asr, src[i..].iter().cloned());
    stream.push(Task::St, tgt[j..].iter().cloned());
    Ok(stream)
}

/// One aligned block: a contiguous source span and a contiguous target span
/// closed under the alignment (no link leaves the block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub src: (usize, usize),
    pub tgt: (usize, usize),
}

impl Block {
    pub fn src_is_empty(&self) -> bool {
        self.src.0 == self.src.1
    }

    pub fn tgt_is_empty(&self) -> bool {
        self.tgt.0 == self.tgt.1
    }
}

/// Decompose a pair into the finest ordered sequence of alignment-consistent
/// blocks: contiguous source and target spans covering [0,m) and [0,n) in
/// order with no link crossing a block boundary. Unaligned words attach to
/// the following block (leading ones to the first block); words after the
/// last link form one trailing block, one-sided when only one side has any.
/// With no links at all the result is a single block covering everything.
pub fn segment_blocks(m: usize, n: usize, alignment: &Alignment) -> Vec<Block> {
    if alignment.is_empty() {
        if m == 0 && n == 0 {
            return Vec::new();
        }
        return vec![Block {
            src: (0, m),
            tgt: (0, n),
        }];
    }

    // Group the links into minimal closed runs. A cut is legal after source
    // prefix of `count` links (sorted by src, then tgt) iff the links with
    // tgt below the prefix's max tgt are exactly that prefix.
    let mut links: Vec<(usize, usize)> = alignment.links().collect();
    links.sort_unstable();
    let total = links.len();
    // tgt_le[t] = number of links with tgt <= t
    let max_tgt = links.iter().map(|&(_, t)| t).max().unwrap_or(0);
    let mut tgt_le = vec![0usize; max_tgt + 1];
    for &(_, t) in &links {
        tgt_le[t] += 1;
    }
    for t in 1..=max_tgt {
        tgt_le[t] += tgt_le[t - 1];
    }

    let mut groups: Vec<(usize, usize, usize, usize)> = Vec::new(); // (s_max, t_max) per group + start mins
    let mut group_start = 0usize;
    let mut running_max_tgt = 0usize;
    let mut k = 0usize;
    while k < total {
        // consume every link sharing this source index
        let s = links[k].0;
        while k < total && links[k].0 == s {
            running_max_tgt = running_max_tgt.max(links[k].1);
            k += 1;
        }
        // closed group: all links at or below the running max target are in it
        if tgt_le[running_max_tgt] == k {
            let members = &links[group_start..k];
            let s_min = members.iter().map(|&(s, _)| s).min().unwrap();
            let s_max = members.iter().map(|&(s, _)| s).max().unwrap();
            let t_min = members.iter().map(|&(_, t)| t).min().unwrap();
            debug_assert_eq!(running_max_tgt, members.iter().map(|&(_, t)| t).max().unwrap());
            groups.push((s_min, s_max, t_min, running_max_tgt));
            group_start = k;
        }
    }
    debug_assert_eq!(group_start, total, "link groups must consume every link");

    // Turn groups into covering blocks: each span starts where the previous
    // block ended, absorbing unaligned words into the block that follows them.
    let mut blocks = Vec::with_capacity(groups.len() + 1);
    let (mut src_cursor, mut tgt_cursor) = (0usize, 0usize);
    for &(_, s_max, _, t_max) in &groups {
        blocks.push(Block {
            src: (src_cursor, s_max + 1),
            tgt: (tgt_cursor, t_max + 1),
        });
        src_cursor = s_max + 1;
        tgt_cursor = t_max + 1;
    }
    if src_cursor < m || tgt_cursor < n {
        blocks.push(Block {
            src: (src_cursor, m),
            tgt: (tgt_cursor, n),
        });
    }
    blocks
}

/// Alignment-based serialization: for each block in order, the block's
/// source words as an ASR segment followed by its target words as an ST
/// segment. Requires the pair to carry an alignment.
pub fn serialize_align(pair: &UtterancePair) -> Result<SerializedStream, InterleaveError> {
    let alignment = pair
        .alignment
        .as_ref()
        .ok_or_else(|| InterleaveError::MissingAlignment(pair.id.clone()))?;
    let blocks = segment_blocks(pair.src_len(), pair.tgt_len(), alignment);
    let mut stream = SerializedStream::default();
    for block in blocks {
        stream.push(
            Task::Asr,
            pair.transcription[block.src.0..block.src.1].iter().cloned(),
        );
        stream.push(
            Task::St,
            pair.translation[block.tgt.0..block.tgt.1].iter().cloned(),
        );
    }
    Ok(stream)
}

/// Flatten a stream to surface tokens: each segment's task tag followed by
/// its words.
pub fn flatten(stream: &SerializedStream) -> Vec<String> {
    let mut out = Vec::new();
    for segment in stream.segments() {
        out.push(segment.task.tag().to_string());
        out.extend(segment.tokens.iter().map(|t| t.as_str().to_string()));
    }
    out
}

/// Space-joined flattened form, the `tsot` field of serialized corpora.
pub fn flatten_joined(stream: &SerializedStream) -> String {
    flatten(stream).join(" ")
}
