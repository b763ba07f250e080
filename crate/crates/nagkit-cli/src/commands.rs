//! The eight subcommands. Diagnostics go to standard error; data goes to
//! standard output or `--out`.

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nagkit_attn::memory_report;
use nagkit_core::beam::{
    beam_decode, DecodeConfig, ScoreTable, Scorer, UniformScorer,
};
use nagkit_core::dataset::{
    augment_record, check_line, class_stats, eval_report, RejectReason, Rejection,
};
use nagkit_core::gentoken::{
    deserialize, parse_token_line, HMode, Vocab,
};
use nagkit_core::molgraph::{
    canonical_order, encoder_inputs, parse_smiles, random_order, NodeOrder, ParseMode,
};
use nagkit_core::stepfeat::build_series_incremental_capped;
use nagkit_core::dataset::example_seed;

use crate::io_util::{map_lines_ordered, open_input, open_output, write_line};
use crate::CliError;

/// How the product node order is chosen for `encode` and `align`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OrderKind {
    Identity,
    Canonical,
    Random,
}

fn product_order(
    kind: OrderKind,
    m: &nagkit_core::molgraph::Molecule,
    seed: u64,
    line_index: usize,
) -> NodeOrder {
    match kind {
        OrderKind::Identity => NodeOrder::identity(m.atom_count()),
        OrderKind::Canonical => canonical_order(m),
        OrderKind::Random => random_order(m, example_seed(seed, line_index, 0))
            .expect("parsed molecules are non-empty"),
    }
}

fn audit_writer(path: Option<&PathBuf>) -> Result<Option<BufWriter<File>>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| {
                CliError::Usage(format!("cannot create {}: {e}", p.display()))
            })?;
            Ok(Some(BufWriter::new(f)))
        }
        None => Ok(None),
    }
}

fn record_audit(
    audit: &mut Option<BufWriter<File>>,
    rejection: &Rejection,
) -> Result<(), CliError> {
    eprintln!(
        "line {}: rejected: {}",
        rejection.line_number, rejection.reason
    );
    if let Some(w) = audit {
        writeln!(
            w,
            "line {}\t{}\t{}",
            rejection.line_number, rejection.reason, rejection.raw_line
        )
        .map_err(|e| CliError::Data(format!("audit write error: {e}")))?;
    }
    Ok(())
}

pub fn run_augment(
    input: &Path,
    out: Option<&PathBuf>,
    audit: Option<&PathBuf>,
    copies: usize,
    seed: u64,
) -> Result<i32, CliError> {
    eprintln!("augment: copies={copies} seed={seed} input={}", input.display());
    let mut out = open_output(out)?;
    let mut audit = audit_writer(audit)?;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut examples = 0usize;
    let total = map_lines_ordered(
        input,
        |idx, line| -> Result<Vec<String>, Rejection> {
            let record = check_line(line).map_err(|reason| Rejection {
                line_number: idx + 1,
                raw_line: line.to_string(),
                reason,
            })?;
            let batch = augment_record(&record, idx, copies, seed).map_err(|reason| {
                Rejection {
                    line_number: idx + 1,
                    raw_line: line.to_string(),
                    reason,
                }
            })?;
            Ok(batch
                .iter()
                .map(|ex| serde_json::to_string(&ex.to_record()).expect("serializable"))
                .collect())
        },
        |_, outcome| match outcome {
            Ok(lines) => {
                accepted += 1;
                for l in &lines {
                    examples += 1;
                    write_line(out.as_mut(), l)?;
                }
                Ok(())
            }
            Err(rejection) => {
                rejected += 1;
                record_audit(&mut audit, &rejection)
            }
        },
    )?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    eprintln!(
        "augment: {total} lines, {accepted} records, {examples} examples, {rejected} rejected"
    );
    Ok(if accepted == 0 && total > 0 { 1 } else { 0 })
}

pub fn run_encode(
    input: &Path,
    out: Option<&PathBuf>,
    order: OrderKind,
    seed: u64,
) -> Result<i32, CliError> {
    eprintln!("encode: order={order:?} seed={seed} input={}", input.display());
    let mut out = open_output(out)?;
    let mut failures = 0usize;
    map_lines_ordered(
        input,
        |idx, line| -> Result<String, String> {
            let m = parse_smiles(line.trim(), ParseMode::Standard)
                .map_err(|e| format!("line {}: {e}", idx + 1))?;
            let ord = product_order(order, &m, seed, idx);
            let enc = encoder_inputs(&m, &ord, None).map_err(|e| format!("line {}: {e}", idx + 1))?;
            Ok(serde_json::to_string(&enc).expect("serializable"))
        },
        |_, outcome| match outcome {
            Ok(json) => write_line(out.as_mut(), &json),
            Err(message) => {
                failures += 1;
                eprintln!("{message}");
                Ok(())
            }
        },
    )?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(if failures > 0 { 1 } else { 0 })
}

pub fn run_align(
    input: &Path,
    out: Option<&PathBuf>,
    audit: Option<&PathBuf>,
    order: OrderKind,
    seed: u64,
) -> Result<i32, CliError> {
    eprintln!("align: order={order:?} seed={seed} input={}", input.display());
    let mut out = open_output(out)?;
    let mut audit = audit_writer(audit)?;
    let mut accepted = 0usize;
    let total = map_lines_ordered(
        input,
        |idx, line| -> Result<String, Rejection> {
            let record = check_line(line).map_err(|reason| Rejection {
                line_number: idx + 1,
                raw_line: line.to_string(),
                reason,
            })?;
            let ord = product_order(order, &record.product, seed, idx);
            let pair =
                nagkit_core::align::derive_reactant_order(&record.product, &ord, &record.reactants)
                    .map_err(|e| Rejection {
                        line_number: idx + 1,
                        raw_line: line.to_string(),
                        reason: RejectReason::Alignment(e.to_string()),
                    })?;
            Ok(serde_json::to_string(&pair.to_record()).expect("serializable"))
        },
        |_, outcome| match outcome {
            Ok(json) => {
                accepted += 1;
                write_line(out.as_mut(), &json)
            }
            Err(rejection) => record_audit(&mut audit, &rejection),
        },
    )?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(if accepted == 0 && total > 0 { 1 } else { 0 })
}

#[derive(Debug, Deserialize)]
struct DecodeRequest {
    #[allow(dead_code)]
    product_smiles: String,
    #[serde(default)]
    scores_file: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DecodeCandidate<'a> {
    rank: usize,
    canonical_smiles: &'a str,
    log_score: f64,
    tokens: String,
}

#[allow(clippy::too_many_arguments)]
pub fn run_decode(
    input: &Path,
    out: Option<&PathBuf>,
    cfg: &DecodeConfig,
    vocab_max_gap: usize,
) -> Result<i32, CliError> {
    eprintln!(
        "decode: beam_size={} length_penalty={} temperature={} max_len={} mask={} vocab_max_gap={} input={}",
        cfg.beam_size,
        cfg.length_penalty,
        cfg.temperature,
        cfg.max_len,
        cfg.mask_grammar,
        vocab_max_gap,
        input.display()
    );
    let mut out = open_output(out)?;
    let mut failures = 0usize;
    let reader = open_input(input)?;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        match decode_one(&line, cfg, vocab_max_gap) {
            Ok(rows) => {
                for row in rows {
                    write_line(out.as_mut(), &row)?;
                }
            }
            Err(message) => {
                failures += 1;
                eprintln!("line {}: {message}", idx + 1);
            }
        }
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(if failures > 0 { 1 } else { 0 })
}

fn decode_one(
    line: &str,
    cfg: &DecodeConfig,
    vocab_max_gap: usize,
) -> Result<Vec<String>, String> {
    let request: DecodeRequest =
        serde_json::from_str(line).map_err(|e| format!("bad request: {e}"))?;
    let scorer: Box<dyn Scorer> = match &request.scores_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read scores file {}: {e}", path.display()))?;
            let table: ScoreTable =
                serde_json::from_str(&text).map_err(|e| format!("bad scores file: {e}"))?;
            Box::new(table.into_scorer().map_err(|e| e.to_string())?)
        }
        None => Box::new(UniformScorer::new(Vocab::standard(vocab_max_gap))),
    };
    let (candidates, diagnostics) =
        beam_decode(scorer.as_ref(), cfg).map_err(|e| e.to_string())?;
    if diagnostics.dropped_max_len > 0 || diagnostics.invalid_sequences > 0 {
        eprintln!(
            "decode diagnostics: {} hypotheses dropped at max_len, {} invalid sequences",
            diagnostics.dropped_max_len, diagnostics.invalid_sequences
        );
    }
    Ok(candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            serde_json::to_string(&DecodeCandidate {
                rank: i + 1,
                canonical_smiles: &c.canonical,
                log_score: c.log_score,
                tokens: c.seq.to_string(),
            })
            .expect("serializable")
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct FrameRow<'a> {
    line: usize,
    step: usize,
    degree: &'a [u32],
    spd: &'a [Vec<u16>],
}

pub fn run_validate(
    input: &Path,
    h_mode: HMode,
    features_out: Option<&PathBuf>,
    d_max: u16,
) -> Result<i32, CliError> {
    eprintln!(
        "validate: h_mode={h_mode:?} d_max={d_max} input={}",
        input.display()
    );
    let mut features = match features_out {
        Some(p) => Some(open_output(Some(p))?),
        None => None,
    };
    let mut invalid = 0usize;
    let mut total = 0usize;
    let reader = open_input(input)?;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let outcome = parse_token_line(&line)
            .map_err(|e| e.to_string())
            .and_then(|tokens| {
                deserialize(&tokens, h_mode)
                    .map(|_| tokens)
                    .map_err(|e| e.to_string())
            });
        match outcome {
            Ok(tokens) => {
                if let Some(w) = &mut features {
                    let series = build_series_incremental_capped(&tokens, d_max)
                        .expect("valid stream yields features");
                    for frame in &series.frames {
                        let row = FrameRow {
                            line: idx + 1,
                            step: frame.step,
                            degree: &frame.degree,
                            spd: &frame.spd,
                        };
                        write_line(
                            w.as_mut(),
                            &serde_json::to_string(&row).expect("serializable"),
                        )?;
                    }
                }
            }
            Err(message) => {
                invalid += 1;
                eprintln!("line {}: invalid: {message}", idx + 1);
            }
        }
    }
    if let Some(w) = &mut features {
        w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    }
    eprintln!("validate: {total} sequences, {invalid} invalid");
    Ok(if invalid > 0 { 1 } else { 0 })
}

#[derive(Debug, Serialize)]
struct StatsFileReport {
    path: String,
    records: usize,
    rejected: usize,
    stats: nagkit_core::dataset::ClassStats,
}

#[derive(Debug, Serialize)]
struct StatsReport {
    files: Vec<StatsFileReport>,
    sizes: Vec<usize>,
}

pub fn run_stats(inputs: &[PathBuf], out: Option<&PathBuf>) -> Result<i32, CliError> {
    let mut files = Vec::new();
    for path in inputs {
        let reader = open_input(path)?;
        let lines: Vec<String> = reader
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Data(format!("read error: {e}")))?;
        let (records, rejections) =
            nagkit_core::dataset::ingest(lines.iter().map(|s| s.as_str()));
        for rejection in &rejections {
            eprintln!(
                "{}: line {}: rejected: {}",
                path.display(),
                rejection.line_number,
                rejection.reason
            );
        }
        files.push(StatsFileReport {
            path: path.display().to_string(),
            records: records.len(),
            rejected: rejections.len(),
            stats: class_stats(&records),
        });
    }
    let report = StatsReport {
        sizes: files.iter().map(|f| f.records).collect(),
        files,
    };
    let mut out = open_output(out)?;
    write_line(
        out.as_mut(),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(0)
}

pub fn run_eval(
    pred: &Path,
    truth: &Path,
    classes: Option<&PathBuf>,
    ks: &[usize],
    out: Option<&PathBuf>,
) -> Result<i32, CliError> {
    eprintln!(
        "eval: k={ks:?} pred={} truth={}",
        pred.display(),
        truth.display()
    );
    let predictions: Vec<Vec<String>> = {
        let reader = open_input(pred)?;
        reader
            .lines()
            .enumerate()
            .map(|(idx, line)| {
                let line = line.map_err(|e| CliError::Data(format!("read error: {e}")))?;
                serde_json::from_str::<Vec<String>>(&line).map_err(|e| {
                    CliError::Data(format!("pred line {}: expected a JSON string array: {e}", idx + 1))
                })
            })
            .collect::<Result<_, _>>()?
    };
    let truths: Vec<String> = {
        let reader = open_input(truth)?;
        reader
            .lines()
            .map(|l| l.map_err(|e| CliError::Data(format!("read error: {e}"))))
            .collect::<Result<_, _>>()?
    };
    let class_labels: Option<Vec<Option<u8>>> = match classes {
        Some(path) => {
            let reader = open_input(path)?;
            Some(
                reader
                    .lines()
                    .map(|l| {
                        l.map(|s| s.trim().parse::<u8>().ok())
                            .map_err(|e| CliError::Data(format!("read error: {e}")))
                    })
                    .collect::<Result<_, _>>()?,
            )
        }
        None => None,
    };
    let report = eval_report(&predictions, &truths, class_labels.as_deref(), ks)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let mut out = open_output(out)?;
    write_line(
        out.as_mut(),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(0)
}

pub fn run_attn_bench(
    ns: &[usize],
    d_hs: &[usize],
    d_h2s: &[usize],
    out: Option<&PathBuf>,
) -> Result<i32, CliError> {
    let mut out = open_output(out)?;
    write_line(
        out.as_mut(),
        "variant,n,d_h,d_h2,analytic_bytes,measured_bytes,wall_ms",
    )?;
    for &n in ns {
        for &d_h in d_hs {
            for &d_h2 in d_h2s {
                let report = memory_report(n, d_h, d_h2);
                for v in report.variants() {
                    let measured = v
                        .measured_bytes
                        .map(|b| b.to_string())
                        .unwrap_or_else(|| "NA".into());
                    write_line(
                        out.as_mut(),
                        &format!(
                            "{},{},{},{},{},{},{:.3}",
                            v.variant, n, d_h, d_h2, v.analytic_bytes, measured, v.wall_ms
                        ),
                    )?;
                }
                if let Some(ratio) = report.measured_ratio() {
                    eprintln!(
                        "n={n} d_h={d_h} d_h2={d_h2}: measured additive/reduced ratio {ratio:.3} (analytic {})",
                        report.analytic_ratio()
                    );
                }
            }
        }
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(0)
}
