//! Subcommand implementations. Every command processes records in input
//! order and reports to stdout, in text or JSON per the `--json` flag.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use tsot_core::corpus::{CorpusRecord, load_corpus, UtterancePair};
use tsot_core::interleave::{self, Strategy};
use tsot_core::metrics::{self, DelayLogRecord, MetricReport};
use tsot_core::simulate::{self, EmissionPolicy, SimulatedUtterance};
use tsot_core::stream;
use tsot_core::synth;

use crate::jsonl::{read_numbered_lines, JsonlWriter};

fn parse_strategy(text: &str) -> Result<Strategy> {
    text.parse::<Strategy>().map_err(anyhow::Error::from)
}

fn print_report(json_mode: bool, value: Value, text: String) {
    if json_mode {
        println!("{value}");
    } else {
        println!("{text}");
    }
}

#[derive(Serialize)]
struct SerializedRecord<'a> {
    #[serde(flatten)]
    record: &'a CorpusRecord,
    tsot: String,
}

pub fn serialize(
    input: &Path,
    output: &Path,
    strategy: &str,
    skip_bad: bool,
    json_mode: bool,
) -> Result<ExitCode> {
    let strategy = parse_strategy(strategy)?;
    let lines = read_numbered_lines(input)?;
    let mut writer = JsonlWriter::create(output)?;
    let mut seen_ids = BTreeSet::new();
    let mut utterances = 0usize;
    let mut src_tokens = 0usize;
    let mut tgt_tokens = 0usize;
    let mut segments = 0usize;
    let mut skipped = 0usize;

    for (line_no, line) in &lines {
        let outcome = (|| -> Result<(CorpusRecord, String, usize, usize, usize)> {
            let record: CorpusRecord = serde_json::from_str(line)
                .with_context(|| format!("line {line_no}: invalid record"))?;
            if !seen_ids.insert(record.id.clone()) {
                bail!("line {line_no}: duplicate id {:?}", record.id);
            }
            let pair = record
                .clone()
                .into_pair()
                .with_context(|| format!("line {line_no}"))?;
            let stream = interleave::serialize(&pair, strategy)
                .with_context(|| format!("line {line_no}: record {:?}", pair.id))?;
            Ok((
                record,
                interleave::flatten_joined(&stream),
                pair.src_len(),
                pair.tgt_len(),
                stream.segments().len(),
            ))
        })();
        match outcome {
            Ok((record, tsot, m, n, segs)) => {
                writer.write_record(&SerializedRecord {
                    record: &record,
                    tsot,
                })?;
                utterances += 1;
                src_tokens += m;
                tgt_tokens += n;
                segments += segs;
            }
            Err(err) if skip_bad => {
                eprintln!("skipped: {err:#}");
                skipped += 1;
            }
            Err(err) => return Err(err),
        }
    }
    writer.finish()?;

    print_report(
        json_mode,
        json!({
            "utterances": utterances,
            "src_tokens": src_tokens,
            "tgt_tokens": tgt_tokens,
            "segments": segments,
            "skipped": skipped,
            "strategy": strategy.to_string(),
        }),
        format!(
            "serialized {utterances} utterances ({src_tokens} src + {tgt_tokens} tgt tokens, \
             {segments} segments, strategy {strategy}), {skipped} skipped"
        ),
    );
    Ok(ExitCode::SUCCESS)
}

fn field_str<'a>(value: &'a Value, field: &str, line_no: usize) -> Result<&'a str> {
    value
        .get(field)
        .and_then(Value::as_str)
        .with_context(|| format!("line {line_no}: missing string field {field:?}"))
}

pub fn split(input: &Path, output: &Path, json_mode: bool) -> Result<ExitCode> {
    let lines = read_numbered_lines(input)?;
    let mut writer = JsonlWriter::create(output)?;
    let mut records = 0usize;
    let mut warnings = 0usize;
    for (line_no, line) in &lines {
        let value: Value = serde_json::from_str(line)
            .with_context(|| format!("line {line_no}: invalid JSON"))?;
        let tsot = field_str(&value, "tsot", *line_no)?;
        let result = stream::split_joined(tsot);
        let (asr, st) = stream::joined_outputs(&result);
        warnings += result.warnings.len();
        let mut out = serde_json::Map::new();
        if let Some(id) = value.get("id") {
            out.insert("id".to_string(), id.clone());
        }
        out.insert("asr".to_string(), Value::String(asr));
        out.insert("st".to_string(), Value::String(st));
        out.insert("warnings".to_string(), json!(result.warnings));
        writer.write_record(&Value::Object(out))?;
        records += 1;
    }
    writer.finish()?;
    print_report(
        json_mode,
        json!({"records": records, "warnings": warnings}),
        format!("split {records} records, {warnings} warnings"),
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ValidationFailure {
    id: String,
    asr_divergence: Option<usize>,
    st_divergence: Option<usize>,
}

pub fn validate(input: &Path, json_mode: bool) -> Result<ExitCode> {
    let lines = read_numbered_lines(input)?;
    let mut records = 0usize;
    let mut failures: Vec<ValidationFailure> = Vec::new();
    for (line_no, line) in &lines {
        let value: Value = serde_json::from_str(line)
            .with_context(|| format!("line {line_no}: invalid JSON"))?;
        let id = field_str(&value, "id", *line_no)?.to_string();
        let src = field_str(&value, "src", *line_no)?;
        let tgt = field_str(&value, "tgt", *line_no)?;
        let tsot = field_str(&value, "tsot", *line_no)?;
        let record = CorpusRecord {
            id: id.clone(),
            src: src.to_string(),
            tgt: tgt.to_string(),
            align: None,
            src_lang: None,
            tgt_lang: None,
            duration_ms: None,
        };
        let pair = record
            .into_pair()
            .with_context(|| format!("line {line_no}"))?;
        let tokens: Vec<&str> = tsot.split_whitespace().collect();
        let report = stream::verify_joint(&pair, &tokens);
        records += 1;
        if !report.ok {
            failures.push(ValidationFailure {
                id,
                asr_divergence: report.asr_divergence,
                st_divergence: report.st_divergence,
            });
        }
    }
    if json_mode {
        println!(
            "{}",
            json!({"records": records, "failures": failures})
        );
    } else {
        for f in &failures {
            let mut parts = Vec::new();
            if let Some(p) = f.asr_divergence {
                parts.push(format!("ASR diverges at {p}"));
            }
            if let Some(p) = f.st_divergence {
                parts.push(format!("ST diverges at {p}"));
            }
            println!("FAIL {}: {}", f.id, parts.join(", "));
        }
        println!("validated {records} records, {} failures", failures.len());
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn load_delay_logs(path: &Path) -> Result<Vec<DelayLogRecord>> {
    let mut logs = Vec::new();
    for (line_no, line) in read_numbered_lines(path)? {
        let log: DelayLogRecord = serde_json::from_str(&line)
            .with_context(|| format!("line {line_no}: invalid delay log"))?;
        if log.tokens.len() != log.delays_ms.len() {
            bail!(
                "line {line_no}: record {:?} has {} tokens but {} delays",
                log.id,
                log.tokens.len(),
                log.delays_ms.len()
            );
        }
        logs.push(log);
    }
    Ok(logs)
}

#[derive(Serialize)]
struct ReportRow {
    src_lang: String,
    tgt_lang: String,
    task: String,
    #[serde(flatten)]
    report: MetricReport,
}

fn report_table(rows: &[ReportRow]) -> String {
    let mut out = String::from(format!(
        "{:<14} {:<5} {:>6} {:>8} {:>8} {:>10} {:>10}\n",
        "pair", "task", "utts", "WER%", "BLEU", "AL(ms)", "LAAL(ms)"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:<5} {:>6} {:>8.2} {:>8.2} {:>10.1} {:>10.1}\n",
            format!("{}-{}", row.src_lang, row.tgt_lang),
            row.task,
            row.report.utterance_count,
            row.report.wer_percent,
            row.report.bleu,
            row.report.al_ms,
            row.report.laal_ms,
        ));
    }
    out.pop();
    out
}

pub fn eval(
    input: &Path,
    delays: &Path,
    output: Option<&Path>,
    json_mode: bool,
) -> Result<ExitCode> {
    let pairs = load_corpus(input).with_context(|| format!("load {}", input.display()))?;
    let logs = load_delay_logs(delays)?;
    let summary = metrics::evaluate_corpus(&pairs, &logs)?;
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    let mut rows: Vec<ReportRow> = summary
        .groups
        .iter()
        .map(|g| ReportRow {
            src_lang: g.src_lang.clone(),
            tgt_lang: g.tgt_lang.clone(),
            task: g.task.to_string(),
            report: g.report.clone(),
        })
        .collect();
    rows.extend(summary.aggregate.iter().map(|(task, report)| ReportRow {
        src_lang: "all".to_string(),
        tgt_lang: "all".to_string(),
        task: task.to_string(),
        report: report.clone(),
    }));
    let json_value = json!({
        "reports": rows,
        "warnings": summary.warnings,
    });
    if let Some(path) = output {
        std::fs::write(path, serde_json::to_string_pretty(&json_value)?)
            .with_context(|| format!("write {}", path.display()))?;
    }
    print_report(json_mode, json_value, report_table(&rows));
    Ok(ExitCode::SUCCESS)
}

fn strategy_output_path(base: &Path, strategy: &Strategy) -> PathBuf {
    match base.extension() {
        Some(ext) => base.with_extension(format!("{strategy}.{}", ext.to_string_lossy())),
        None => base.with_extension(strategy.to_string()),
    }
}

pub fn simulate(
    input: &Path,
    output: &Path,
    strategies: &str,
    chunk_ms: u64,
    json_mode: bool,
) -> Result<ExitCode> {
    let strategies: Vec<Strategy> = strategies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_strategy(s.trim()))
        .collect::<Result<_>>()?;
    if strategies.is_empty() {
        bail!("no strategies given");
    }
    let policy = EmissionPolicy::with_chunk_ms(chunk_ms)?;
    let pairs = load_corpus(input).with_context(|| format!("load {}", input.display()))?;

    let mut written = Vec::new();
    for &strategy in &strategies {
        let path = if strategies.len() == 1 {
            output.to_path_buf()
        } else {
            strategy_output_path(output, &strategy)
        };
        let mut writer = JsonlWriter::create(&path)?;
        for pair in &pairs {
            let stream = interleave::serialize(pair, strategy)
                .with_context(|| format!("record {:?}", pair.id))?;
            let u = SimulatedUtterance::new(pair, &stream)?;
            let log = simulate::simulate_emission(&u, &policy)?;
            writer.write_record(&DelayLogRecord {
                id: log.id,
                duration_ms: log.duration_ms,
                tokens: interleave::flatten(&stream),
                delays_ms: log.delays_ms,
            })?;
        }
        writer.finish()?;
        written.push(path.display().to_string());
    }

    let table = simulate::compare_strategies(&pairs, &strategies, &policy)?;
    if json_mode {
        println!(
            "{}",
            json!({"chunk_ms": chunk_ms, "strategies": table, "outputs": written})
        );
    } else {
        println!(
            "{:<12} {:>10} {:>14} {:>14}",
            "strategy", "utterances", "ASR LAAL(ms)", "ST LAAL(ms)"
        );
        for row in &table {
            println!(
                "{:<12} {:>10} {:>14.1} {:>14.1}",
                row.strategy, row.utterances, row.asr_laal_ms, row.st_laal_ms
            );
        }
        println!("delay logs: {}", written.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Default, Serialize)]
struct CorpusStats {
    utterances: usize,
    src_tokens: usize,
    tgt_tokens: usize,
    aligned_records: usize,
    alignment_links: usize,
    records_with_duration: usize,
    total_duration_ms: u64,
}

impl CorpusStats {
    fn observe(&mut self, pair: &UtterancePair) {
        self.utterances += 1;
        self.src_tokens += pair.src_len();
        self.tgt_tokens += pair.tgt_len();
        if let Some(a) = &pair.alignment {
            self.aligned_records += 1;
            self.alignment_links += a.len();
        }
        if let Some(d) = pair.duration_ms {
            self.records_with_duration += 1;
            self.total_duration_ms += d;
        }
    }
}

pub fn stats(input: &Path, json_mode: bool) -> Result<ExitCode> {
    let pairs = load_corpus(input).with_context(|| format!("load {}", input.display()))?;
    let mut per_pair: BTreeMap<(String, String), CorpusStats> = BTreeMap::new();
    let mut total = CorpusStats::default();
    for pair in &pairs {
        per_pair
            .entry((pair.src_lang.clone(), pair.tgt_lang.clone()))
            .or_default()
            .observe(pair);
        total.observe(pair);
    }
    if json_mode {
        let groups: Vec<Value> = per_pair
            .iter()
            .map(|((src, tgt), s)| json!({"src_lang": src, "tgt_lang": tgt, "stats": s}))
            .collect();
        println!("{}", json!({"pairs": groups, "total": total}));
    } else {
        println!(
            "{:<14} {:>6} {:>10} {:>10} {:>8} {:>7} {:>12}",
            "pair", "utts", "src_toks", "tgt_toks", "aligned", "links", "duration(ms)"
        );
        for ((src, tgt), s) in per_pair.iter().chain(std::iter::once((
            &("all".to_string(), "all".to_string()),
            &total,
        ))) {
            println!(
                "{:<14} {:>6} {:>10} {:>10} {:>8} {:>7} {:>12}",
                format!("{src}-{tgt}"),
                s.utterances,
                s.src_tokens,
                s.tgt_tokens,
                s.aligned_records,
                s.alignment_links,
                s.total_duration_ms
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub struct GenArgs {
    pub output: PathBuf,
    pub seed: u64,
    pub count: usize,
    pub topology: String,
    pub min_words: usize,
    pub max_words: usize,
    pub ms_per_word: u64,
    pub src_lang: String,
    pub tgt_lang: String,
}

pub fn gen_synthetic(args: GenArgs) -> Result<ExitCode> {
    let topology: synth::Topology = args.topology.parse().map_err(anyhow::Error::msg)?;
    if args.min_words > args.max_words {
        bail!("--min-words exceeds --max-words");
    }
    let config = synth::SynthConfig {
        seed: args.seed,
        count: args.count,
        min_words: args.min_words,
        max_words: args.max_words,
        topology,
        ms_per_word: args.ms_per_word,
        src_lang: args.src_lang,
        tgt_lang: args.tgt_lang,
    };
    let pairs = synth::generate(&config);
    let mut writer = JsonlWriter::create(&args.output)?;
    for pair in &pairs {
        writer.write_record(&CorpusRecord::from_pair(pair))?;
    }
    writer.finish()?;
    println!(
        "wrote {} records ({} topology, seed {})",
        pairs.len(),
        topology,
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}
