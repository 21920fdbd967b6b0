//! Deterministic synthetic-corpus generation for experiments and tests.
//!
//! Same seed, same output, down to the byte once serialized. Word timing is
//! uniform: each record's duration is `ms_per_word` per source word.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Alignment, Token, UtterancePair};

/// Shape of the generated word alignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Strictly increasing diagonal links.
    Monotone,
    /// Equal-length sides with at least one crossing link pair.
    Crossing,
    /// Consecutive source words sharing one target word.
    ManyToOne,
    /// Monotone links with roughly half dropped.
    Sparse,
}

impl Topology {
    pub fn all() -> [Topology; 4] {
        [
            Topology::Monotone,
            Topology::Crossing,
            Topology::ManyToOne,
            Topology::Sparse,
        ]
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Topology::Monotone => "monotone",
            Topology::Crossing => "crossing",
            Topology::ManyToOne => "many-to-one",
            Topology::Sparse => "sparse",
        };
        f.write_str(name)
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monotone" => Ok(Topology::Monotone),
            "crossing" => Ok(Topology::Crossing),
            "many-to-one" | "many_to_one" => Ok(Topology::ManyToOne),
            "sparse" => Ok(Topology::Sparse),
            other => Err(format!(
                "unknown topology {other:?} (expected monotone, crossing, many-to-one, sparse)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub count: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub topology: Topology,
    pub ms_per_word: u64,
    pub src_lang: String,
    pub tgt_lang: String,
}

impl SynthConfig {
    pub fn new(seed: u64, count: usize, topology: Topology) -> Self {
        SynthConfig {
            seed,
            count,
            min_words: 1,
            max_words: 12,
            topology,
            ms_per_word: 1000,
            src_lang: "und".to_string(),
            tgt_lang: "und".to_string(),
        }
    }
}

fn words(prefix: &str, count: usize) -> Vec<Token> {
    (0..count)
        .map(|k| Token::new(format!("{prefix}{k}")).expect("synthetic words are valid tokens"))
        .collect()
}

fn monotone_links(m: usize, n: usize) -> Vec<(usize, usize)> {
    let k = m.min(n);
    (0..k).map(|a| (a * m / k, a * n / k)).collect()
}

fn sample_len(rng: &mut ChaCha8Rng, config: &SynthConfig) -> usize {
    if config.min_words >= config.max_words {
        return config.min_words;
    }
    rng.gen_range(config.min_words..=config.max_words)
}

/// Generate `config.count` deterministic utterance pairs. Every record
/// carries an alignment (possibly empty for the sparse topology) and a
/// positive duration.
pub fn generate(config: &SynthConfig) -> Vec<UtterancePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::with_capacity(config.count);
    for index in 0..config.count {
        let (m, n, links) = match config.topology {
            Topology::Monotone => {
                let m = sample_len(&mut rng, config);
                let n = sample_len(&mut rng, config);
                let links = if m == 0 || n == 0 { Vec::new() } else { monotone_links(m, n) };
                (m, n, links)
            }
            Topology::Crossing => {
                let m = sample_len(&mut rng, config).max(2);
                let mut perm: Vec<usize> = (0..m).collect();
                let mut swapped = false;
                for a in 0..m / 2 {
                    if rng.gen_bool(0.5) {
                        perm.swap(2 * a, 2 * a + 1);
                        swapped = true;
                    }
                }
                if !swapped {
                    perm.swap(0, 1);
                }
                let links = (0..m).map(|i| (i, perm[i])).collect();
                (m, m, links)
            }
            Topology::ManyToOne => {
                let m = sample_len(&mut rng, config).max(1);
                let n = m.div_ceil(2);
                let links = (0..m).map(|i| (i, i / 2)).collect();
                (m, n, links)
            }
            Topology::Sparse => {
                let m = sample_len(&mut rng, config);
                let n = sample_len(&mut rng, config);
                let links = if m == 0 || n == 0 {
                    Vec::new()
                } else {
                    monotone_links(m, n)
                        .into_iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .collect()
                };
                (m, n, links)
            }
        };
        let id = format!("synth-{}-{index:05}", config.topology);
        let mut pair = UtterancePair::new(
            id,
            words("s", m),
            words("t", n),
            Some(Alignment::new(links)),
        )
        .expect("generated links are in bounds");
        pair.src_lang = config.src_lang.clone();
        pair.tgt_lang = config.tgt_lang.clone();
        pair.duration_ms = Some(m.max(1) as u64 * config.ms_per_word);
        pairs.push(pair);
    }
    pairs
}
