//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with its runtime. Run with
//! `cargo test -p tsot-core --test acceptance -- --nocapture`.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsot_core::corpus::{load_corpus, Alignment, Token, UtterancePair};
use tsot_core::interleave::{
    flatten, flatten_joined, segment_blocks, serialize, serialize_align, serialize_gamma, Block,
    Strategy, Task,
};
use tsot_core::metrics::{al, bleu, laal, wer, DelayLog};
use tsot_core::simulate::{compare_strategies, EmissionPolicy};
use tsot_core::stream::split;
use tsot_core::synth::{generate, SynthConfig, Topology};

fn golden_pair() -> UtterancePair {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/golden_de_en.jsonl");
    let pairs = load_corpus(path).expect("golden fixture loads");
    assert_eq!(pairs.len(), 1);
    pairs.into_iter().next().unwrap()
}

fn pass(name: &str, detail: String, started: Instant) {
    println!("[PASS] {name}: {detail} ({} ms)", started.elapsed().as_millis());
}

#[test]
fn criterion_golden_vectors() {
    let started = Instant::now();
    let pair = golden_pair();
    let expected = [
        (
            Strategy::Gamma(0.0),
            "#ASR# Ich brauche das wirklich. #ST# I really need it.",
        ),
        (
            Strategy::Gamma(1.0),
            "#ST# I really need it. #ASR# Ich brauche das wirklich.",
        ),
        (
            Strategy::Gamma(0.5),
            "#ASR# Ich #ST# I #ASR# brauche #ST# really #ASR# das #ST# need #ASR# wirklich. #ST# it.",
        ),
        (
            Strategy::Align,
            "#ASR# Ich #ST# I #ASR# brauche das wirklich. #ST# really need it.",
        ),
    ];
    for (strategy, want) in expected {
        let got = flatten_joined(&serialize(&pair, strategy).unwrap());
        assert_eq!(got, want, "serialization mismatch under {strategy}");
    }
    assert!(started.elapsed().as_secs() < 1, "runtime budget exceeded");
    pass(
        "golden-vectors",
        "4/4 serializations byte-exact".to_string(),
        started,
    );
}

fn synthetic_mix(seed: u64, per_topology: usize, min_words: usize, max_words: usize) -> Vec<UtterancePair> {
    let mut corpus = Vec::new();
    for (offset, topology) in Topology::all().into_iter().enumerate() {
        let config = SynthConfig {
            min_words,
            max_words,
            ..SynthConfig::new(seed + offset as u64, per_topology, topology)
        };
        corpus.extend(generate(&config));
    }
    corpus
}

#[test]
fn criterion_roundtrip_property() {
    let started = Instant::now();
    let corpus = synthetic_mix(42, 250, 0, 30);
    assert!(corpus.len() >= 1000);
    let strategies = [
        Strategy::Gamma(0.0),
        Strategy::Gamma(1.0),
        Strategy::Gamma(0.5),
        Strategy::Gamma(0.25),
        Strategy::Gamma(0.7),
        Strategy::Align,
    ];
    let mut checked = 0usize;
    for pair in &corpus {
        for strategy in strategies {
            let stream = serialize(pair, strategy).unwrap();
            let result = split(&flatten(&stream));
            let asr: Vec<&str> = result.asr.iter().map(String::as_str).collect();
            let st: Vec<&str> = result.st.iter().map(String::as_str).collect();
            let want_asr: Vec<&str> = pair.transcription.iter().map(Token::as_str).collect();
            let want_st: Vec<&str> = pair.translation.iter().map(Token::as_str).collect();
            assert_eq!(asr, want_asr, "{} under {strategy}", pair.id);
            assert_eq!(st, want_st, "{} under {strategy}", pair.id);
            assert!(
                result.warnings.is_empty(),
                "{} under {strategy}: {:?}",
                pair.id,
                result.warnings
            );
            checked += 1;
        }
    }
    assert!(started.elapsed().as_secs() < 10, "runtime budget exceeded");
    pass(
        "roundtrip-property",
        format!("{} pairs x {} strategies = {checked} exact round-trips", corpus.len(), strategies.len()),
        started,
    );
}

fn positional_pair(m: usize, n: usize, alignment: Option<Alignment>) -> UtterancePair {
    let src = (0..m).map(|k| Token::new(format!("s{k}")).unwrap()).collect();
    let tgt = (0..n).map(|k| Token::new(format!("t{k}")).unwrap()).collect();
    UtterancePair::new(format!("p{m}x{n}"), src, tgt, alignment).unwrap()
}

#[test]
fn criterion_corner_case_equivalences() {
    let started = Instant::now();
    let mut cases = 0usize;
    for m in 0..=6 {
        for n in 0..=6 {
            let pair = positional_pair(m, n, None);

            let zero = serialize_gamma(&pair, 0.0).unwrap();
            let mut want: Vec<(Task, usize)> = Vec::new();
            if m > 0 {
                want.push((Task::Asr, m));
            }
            if n > 0 {
                want.push((Task::St, n));
            }
            let got: Vec<(Task, usize)> = zero
                .segments()
                .iter()
                .map(|s| (s.task, s.tokens.len()))
                .collect();
            assert_eq!(got, want, "gamma=0.0 m={m} n={n}");

            let one = serialize_gamma(&pair, 1.0).unwrap();
            let got: Vec<(Task, usize)> = one
                .segments()
                .iter()
                .map(|s| (s.task, s.tokens.len()))
                .collect();
            let want_rev: Vec<(Task, usize)> = [(Task::St, n), (Task::Asr, m)]
                .into_iter()
                .filter(|&(_, len)| len > 0)
                .collect();
            assert_eq!(got, want_rev, "gamma=1.0 m={m} n={n}");

            if m == n {
                let half = serialize_gamma(&pair, 0.5).unwrap();
                assert_eq!(half.segments().len(), 2 * m, "gamma=0.5 m=n={m}");
                for (k, seg) in half.segments().iter().enumerate() {
                    assert_eq!(seg.tokens.len(), 1, "gamma=0.5 m=n={m} segment {k}");
                    let want_task = if k % 2 == 0 { Task::Asr } else { Task::St };
                    assert_eq!(seg.task, want_task, "gamma=0.5 m=n={m} segment {k}");
                }

                let identity = Alignment::new((0..m).map(|k| (k, k)));
                let aligned_pair = positional_pair(m, n, Some(identity));
                assert_eq!(
                    serialize_align(&aligned_pair).unwrap(),
                    serialize_gamma(&aligned_pair, 0.5).unwrap(),
                    "identity alignment m=n={m}"
                );
            }
            cases += 1;
        }
    }
    pass(
        "corner-case-equivalences",
        format!("exhaustive over {cases} (m, n) sizes up to 6x6"),
        started,
    );
}

/// Brute-force maximum block count over all consistent segmentations:
/// ordered blocks with contiguous covering spans, every link co-located in
/// one block, and only the final block allowed to contain no link (interior
/// unaligned words must ride along with a linked block). Dynamic program
/// over cut points (i, j); a cut is usable iff no link crosses it.
fn max_consistent_blocks(m: usize, n: usize, links: &[(usize, usize)]) -> usize {
    if links.is_empty() {
        return usize::from(m > 0 || n > 0);
    }
    let mut grid = vec![vec![0usize; n + 1]; m + 1];
    for &(s, t) in links {
        grid[s + 1][t + 1] += 1;
    }
    // prefix sums: grid[i][j] = number of links with s < i and t < j
    for i in 0..=m {
        for j in 1..=n {
            grid[i][j] += grid[i][j - 1];
        }
    }
    for j in 0..=n {
        for i in 1..=m {
            grid[i][j] += grid[i - 1][j];
        }
    }
    let total = links.len();
    let cut_ok = |i: usize, j: usize| grid[i][n] == grid[i][j] && grid[m][j] == grid[i][j];

    let mut best_blocks = vec![vec![None::<usize>; n + 1]; m + 1];
    best_blocks[0][0] = Some(0);
    let mut best = 0usize;
    for i in 0..=m {
        for j in 0..=n {
            if !cut_ok(i, j) {
                continue;
            }
            if i + j > 0 {
                let mut here = best_blocks[i][j];
                for pi in 0..=i {
                    for pj in 0..=j {
                        if pi == i && pj == j {
                            continue;
                        }
                        if let Some(prev) = best_blocks[pi][pj] {
                            let in_block =
                                grid[i][j] + grid[pi][pj] - grid[pi][j] - grid[i][pj];
                            if in_block >= 1 {
                                here = Some(here.map_or(prev + 1, |h| h.max(prev + 1)));
                            }
                        }
                    }
                }
                best_blocks[i][j] = here;
            }
            if grid[i][j] == total {
                if let Some(covered) = best_blocks[i][j] {
                    let trailing = usize::from(i < m || j < n);
                    best = best.max(covered + trailing);
                }
            }
        }
    }
    best
}

/// Structural validity of a segmentation: covering contiguous spans, links
/// co-located, no doubly-empty block, linkless blocks only in final position.
fn assert_valid_segmentation(m: usize, n: usize, links: &[(usize, usize)], blocks: &[Block]) {
    let (mut s_cursor, mut t_cursor) = (0usize, 0usize);
    for (k, b) in blocks.iter().enumerate() {
        assert_eq!(b.src.0, s_cursor, "src spans must be contiguous");
        assert_eq!(b.tgt.0, t_cursor, "tgt spans must be contiguous");
        assert!(b.src.0 <= b.src.1 && b.tgt.0 <= b.tgt.1);
        assert!(
            !(b.src_is_empty() && b.tgt_is_empty()),
            "block {k} empty on both sides"
        );
        let holds_link = links
            .iter()
            .any(|&(s, t)| (b.src.0..b.src.1).contains(&s) && (b.tgt.0..b.tgt.1).contains(&t));
        assert!(
            holds_link || k == blocks.len() - 1,
            "interior block {k} holds no link"
        );
        s_cursor = b.src.1;
        t_cursor = b.tgt.1;
    }
    assert_eq!(s_cursor, m, "src spans must cover [0, m)");
    assert_eq!(t_cursor, n, "tgt spans must cover [0, n)");
    for &(s, t) in links {
        let si = blocks
            .iter()
            .position(|b| (b.src.0..b.src.1).contains(&s))
            .expect("source index covered");
        let ti = blocks
            .iter()
            .position(|b| (b.tgt.0..b.tgt.1).contains(&t))
            .expect("target index covered");
        assert_eq!(si, ti, "link ({s},{t}) crosses a block boundary");
    }
}

#[test]
fn criterion_block_minimality_oracle() {
    let started = Instant::now();
    const SAMPLE_BOUND: usize = 5000;
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut cases = 0usize;
    for m in 0..=5usize {
        for n in 0..=5usize {
            let cells = m * n;
            let mut check = |links: Vec<(usize, usize)>| {
                let alignment = Alignment::new(links.iter().copied());
                let blocks = segment_blocks(m, n, &alignment);
                let canonical: Vec<(usize, usize)> = alignment.links().collect();
                assert_valid_segmentation(m, n, &canonical, &blocks);
                let oracle = max_consistent_blocks(m, n, &canonical);
                assert_eq!(
                    blocks.len(),
                    oracle,
                    "m={m} n={n} links={canonical:?}: got {} blocks, oracle max {oracle}",
                    blocks.len()
                );
                cases += 1;
            };
            if cells <= 12 {
                // exhaustive over every link subset
                for mask in 0..(1u32 << cells) {
                    let links: Vec<(usize, usize)> = (0..cells)
                        .filter(|&c| mask & (1 << c) != 0)
                        .map(|c| (c / n, c % n))
                        .collect();
                    check(links);
                }
            } else {
                for _ in 0..SAMPLE_BOUND {
                    let density: f64 = rng.gen_range(0.05..0.95);
                    let links: Vec<(usize, usize)> = (0..cells)
                        .filter(|_| rng.gen_bool(density))
                        .map(|c| (c / n, c % n))
                        .collect();
                    check(links);
                }
            }
        }
    }
    assert!(started.elapsed().as_secs() < 60, "runtime budget exceeded");
    pass(
        "block-minimality-oracle",
        format!("{cases} alignments match the brute-force maximum"),
        started,
    );
}

fn wer_oracle(reference: &[&str], hypothesis: &[&str]) -> f64 {
    let (m, n) = (reference.len(), hypothesis.len());
    let mut dp = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=n {
        dp[0][j] = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            dp[i][j] = (dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1)
                .min(dp[i - 1][j - 1] + cost);
        }
    }
    100.0 * dp[m][n] as f64 / m as f64
}

fn all_strings(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn criterion_metric_oracles() {
    let started = Instant::now();

    // WER against the quadratic dynamic-programming oracle, exhaustively.
    let strings = all_strings(&["a", "b", "c"], 6);
    let mut wer_cases = 0usize;
    for reference in &strings {
        if reference.is_empty() {
            continue;
        }
        for hypothesis in &strings {
            let got = wer(reference, hypothesis).unwrap();
            let want = wer_oracle(reference, hypothesis);
            assert_eq!(got, want, "ref={reference:?} hyp={hypothesis:?}");
            wer_cases += 1;
        }
    }

    // BLEU self-score is exactly 100.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let sentences: Vec<String> = (0..rng.gen_range(1..=20))
            .map(|_| {
                let len = rng.gen_range(0..=8);
                (0..len)
                    .map(|_| ["alpha", "beta", "gamma", "delta"][rng.gen_range(0..4)])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        assert_eq!(bleu(&sentences, &sentences).unwrap(), 100.0);
    }

    // Hand-computed lagging examples, within 1e-6 ms.
    let uniform = DelayLog::new("u", vec![1000, 2000, 3000, 4000], 4000).unwrap();
    assert!((al(&uniform, 4).unwrap() - 1000.0).abs() < 1e-6);
    assert!((laal(&uniform, 4).unwrap() - 1000.0).abs() < 1e-6);
    assert!((al(&uniform, 2).unwrap() - -500.0).abs() < 1e-6);
    assert!((laal(&uniform, 2).unwrap() - 1000.0).abs() < 1e-6);
    let instant = DelayLog::new("i", vec![0], 1000).unwrap();
    assert!(al(&instant, 1).unwrap().abs() < 1e-6);
    assert!(laal(&instant, 1).unwrap().abs() < 1e-6);
    let eager = DelayLog::new("e", vec![4000, 4000, 4000], 4000).unwrap();
    assert!((al(&eager, 5).unwrap() - 4000.0).abs() < 1e-6);

    // LAAL equals AL for hypotheses no longer than the reference and is the
    // over-generation-corrected (never lower) value otherwise.
    for _ in 0..1000 {
        let duration = rng.gen_range(1..=20u64) * 1000;
        let len = rng.gen_range(1..=30usize);
        let mut delays: Vec<u64> = (0..len).map(|_| rng.gen_range(0..=duration)).collect();
        delays.sort_unstable();
        let log = DelayLog::new("r", delays, duration).unwrap();
        let ref_len = rng.gen_range(1..=30usize);
        let al_value = al(&log, ref_len).unwrap();
        let laal_value = laal(&log, ref_len).unwrap();
        if len <= ref_len {
            assert_eq!(al_value, laal_value, "len={len} ref_len={ref_len}");
        } else {
            assert!(
                laal_value >= al_value - 1e-9,
                "len={len} ref_len={ref_len}: laal {laal_value} < al {al_value}"
            );
        }
    }

    pass(
        "metric-oracles",
        format!("{wer_cases} WER pairs, 50 BLEU self-scores, 1000 lagging logs"),
        started,
    );
}

#[test]
fn criterion_latency_ordering() {
    let started = Instant::now();
    let mut corpus = Vec::new();
    for (seed, topology) in [(100u64, Topology::Monotone), (200, Topology::Crossing)] {
        let config = SynthConfig {
            min_words: 8,
            max_words: 15,
            ms_per_word: 1000,
            ..SynthConfig::new(seed, 100, topology)
        };
        corpus.extend(generate(&config));
    }
    assert_eq!(corpus.len(), 200);

    let rows = compare_strategies(
        &corpus,
        &Strategy::standard_set(),
        &EmissionPolicy::default(),
    )
    .unwrap();
    let row = |name: &str| rows.iter().find(|r| r.strategy == name).unwrap();
    let (inter00, inter10, inter05, align) =
        (row("inter0.0"), row("inter1.0"), row("inter0.5"), row("align"));

    // ST latency: whole-transcription-first is the worst, block interleaving
    // is no worse than word alternation, both clearly better than inter0.0.
    assert!(inter00.st_laal_ms > inter10.st_laal_ms, "{rows:?}");
    assert!(inter00.st_laal_ms > inter05.st_laal_ms, "{rows:?}");
    assert!(inter00.st_laal_ms > align.st_laal_ms, "{rows:?}");
    assert!(align.st_laal_ms <= inter05.st_laal_ms, "{rows:?}");
    assert!(inter05.st_laal_ms < inter00.st_laal_ms, "{rows:?}");

    // ASR latency: whole-translation-first is strictly worst; block
    // interleaving sits within 10% of the best strategy.
    for other in [inter00, inter05, align] {
        assert!(inter10.asr_laal_ms > other.asr_laal_ms, "{rows:?}");
    }
    let min_asr = rows
        .iter()
        .map(|r| r.asr_laal_ms)
        .fold(f64::INFINITY, f64::min);
    assert!(
        align.asr_laal_ms <= 1.10 * min_asr,
        "align ASR LAAL {} vs minimum {min_asr}",
        align.asr_laal_ms
    );

    assert!(started.elapsed().as_secs() < 30, "runtime budget exceeded");
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{} asr={:.0} st={:.0}", r.strategy, r.asr_laal_ms, r.st_laal_ms))
        .collect();
    pass("latency-ordering", summary.join(", "), started);
}

#[test]
fn criterion_prefix_monotonicity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9000);
    let vocabulary = [
        "#ASR#", "#ST#", "w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9",
    ];
    for case in 0..1000 {
        let len = rng.gen_range(0..=40usize);
        let tokens: Vec<&str> = (0..len)
            .map(|_| vocabulary[rng.gen_range(0..vocabulary.len())])
            .collect();
        let full = split(&tokens);
        for cut in 0..=tokens.len() {
            let partial = split(&tokens[..cut]);
            assert!(
                full.asr.starts_with(&partial.asr),
                "case {case}: ASR retracted at prefix {cut}"
            );
            assert!(
                full.st.starts_with(&partial.st),
                "case {case}: ST retracted at prefix {cut}"
            );
        }
    }
    pass(
        "prefix-monotonicity",
        "1000 random joint streams, all prefixes".to_string(),
        started,
    );
}
