//! Reaction-file ingestion, training-example augmentation, and evaluation
//! metrics (top-k accuracy, largest-fragment accuracy, validity, per-class
//! breakdowns).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{make_training_pair, match_shared, AlignError, AlignedPair};
use crate::gentoken::{serialize_bounded, GrammarError, TokenSeq, DEFAULT_MAX_LEN};
use crate::molgraph::{
    canonical_smiles, encoder_inputs, parse_smiles, EncoderInput, Molecule, ParseMode,
};

/// One atom-mapped reaction: left of the arrow reacts to the right;
/// a middle reagent field, when present, is dropped.
#[derive(Debug, Clone)]
pub struct ReactionRecord {
    pub reactants: Molecule,
    pub product: Molecule,
    pub reaction_class: Option<u8>,
    pub raw_line: String,
}

/// Why a line was rejected; written to the audit sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RejectReason {
    #[error("blank line")]
    Blank,
    #[error("no reaction arrow of the form a>>b or a>x>b")]
    ArrowFormat,
    #[error("empty reactant side")]
    EmptyReactants,
    #[error("empty product side")]
    EmptyProduct,
    #[error("reactant SMILES failed to parse: {0}")]
    ReactantParse(String),
    #[error("product SMILES failed to parse: {0}")]
    ProductParse(String),
    #[error("duplicate atom map: {0}")]
    DuplicateAtomMap(String),
    #[error("no shared atom maps between product and reactants")]
    NoSharedAtoms,
    #[error("token stream too long: {0}")]
    TooLong(String),
    #[error("alignment failed: {0}")]
    Alignment(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{left} prediction lists for {right} truths")]
    LengthMismatch { left: usize, right: usize },
    #[error("truth #{index} failed to parse: {message}")]
    UnparseableTruth { index: usize, message: String },
    #[error("class labels list has {got} entries for {want} products")]
    ClassLengthMismatch { got: usize, want: usize },
}

/// Parse one reaction line: `REACTANTS>>PRODUCT` or
/// `REACTANTS>REAGENTS>PRODUCT`, with an optional leading class-label
/// column (whitespace-, comma-, or tab-separated).
pub fn parse_reaction_line(line: &str) -> Result<ReactionRecord, RejectReason> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err(RejectReason::Blank);
    }
    let fields: Vec<&str> = trimmed
        .split([',', '\t', ' '])
        .filter(|f| !f.is_empty())
        .collect();
    let reaction = fields
        .iter()
        .find(|f| f.contains('>'))
        .ok_or(RejectReason::ArrowFormat)?;
    let reaction_class = fields
        .iter()
        .filter(|f| !f.contains('>'))
        .find_map(|f| f.parse::<u8>().ok())
        .filter(|c| (1..=10).contains(c));

    let parts: Vec<&str> = reaction.split('>').collect();
    if parts.len() != 3 {
        return Err(RejectReason::ArrowFormat);
    }
    let (reactants_text, product_text) = (parts[0], parts[2]);
    if reactants_text.is_empty() {
        return Err(RejectReason::EmptyReactants);
    }
    if product_text.is_empty() {
        return Err(RejectReason::EmptyProduct);
    }
    let reactants = parse_smiles(reactants_text, ParseMode::Standard)
        .map_err(|e| RejectReason::ReactantParse(e.to_string()))?;
    let product = parse_smiles(product_text, ParseMode::Standard)
        .map_err(|e| RejectReason::ProductParse(e.to_string()))?;
    Ok(ReactionRecord {
        reactants,
        product,
        reaction_class,
        raw_line: line.to_string(),
    })
}

/// A rejected line with its context, for the audit sidecar.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub line_number: usize,
    pub raw_line: String,
    pub reason: RejectReason,
}

/// Parse and filter a whole corpus. Beyond per-line parsing, lines whose
/// sides share no atom map (or carry duplicate maps) are rejected, mirroring
/// the incorrect-reaction filter.
pub fn ingest<'a>(
    lines: impl Iterator<Item = &'a str>,
) -> (Vec<ReactionRecord>, Vec<Rejection>) {
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for (idx, line) in lines.enumerate() {
        match check_line(line) {
            Ok(record) => records.push(record),
            Err(reason) => rejections.push(Rejection {
                line_number: idx + 1,
                raw_line: line.to_string(),
                reason,
            }),
        }
    }
    (records, rejections)
}

/// [`parse_reaction_line`] plus the shared-map filter, for per-line use.
pub fn check_line(line: &str) -> Result<ReactionRecord, RejectReason> {
    let record = parse_reaction_line(line)?;
    let shared = match_shared(&record.product, &record.reactants)
        .map_err(|e| match e {
            AlignError::DuplicateAtomMap { .. } => RejectReason::DuplicateAtomMap(e.to_string()),
            other => RejectReason::Alignment(other.to_string()),
        })?;
    if shared.pairs.is_empty() {
        return Err(RejectReason::NoSharedAtoms);
    }
    Ok(record)
}

/// One augmented training example: the ordered product featurization and
/// the aligned reactant token stream.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub record_index: usize,
    pub copy_index: usize,
    pub pair: AlignedPair,
    pub encoder_input: EncoderInput,
    pub tokens: TokenSeq,
}

/// Wire form emitted by the `augment` command, one JSON object per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingExampleRecord {
    pub product_smiles: String,
    pub product_order: Vec<usize>,
    pub tokens: String,
}

impl TrainingExample {
    pub fn to_record(&self) -> TrainingExampleRecord {
        TrainingExampleRecord {
            product_smiles: crate::molgraph::write_smiles(
                &self.pair.product,
                &self.pair.product_order,
            )
            .expect("training pair orders are valid"),
            product_order: self.pair.product_order.positions().to_vec(),
            tokens: self.tokens.to_string(),
        }
    }
}

/// Distinct sub-seed per (seed, record, copy); splitmix-style mixing.
pub fn example_seed(seed: u64, record_index: usize, copy_index: usize) -> u64 {
    let mut x = seed
        ^ (record_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (copy_index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Augment one record into `copies` examples with distinct seeds.
pub fn augment_record(
    record: &ReactionRecord,
    record_index: usize,
    copies: usize,
    seed: u64,
) -> Result<Vec<TrainingExample>, RejectReason> {
    let mut out = Vec::with_capacity(copies);
    for copy_index in 0..copies {
        let pair = make_training_pair(
            &record.product,
            &record.reactants,
            example_seed(seed, record_index, copy_index),
        )
        .map_err(|e| RejectReason::Alignment(e.to_string()))?;
        let encoder_input = encoder_inputs(&pair.product, &pair.product_order, None)
            .expect("product order fits the product");
        let tokens = serialize_bounded(&pair.reactant, &pair.reactant_order, DEFAULT_MAX_LEN)
            .map_err(|e| match e {
                GrammarError::TooLong { .. } => RejectReason::TooLong(e.to_string()),
                other => RejectReason::Alignment(other.to_string()),
            })?;
        out.push(TrainingExample {
            record_index,
            copy_index,
            pair,
            encoder_input,
            tokens,
        });
    }
    Ok(out)
}

/// Augment a corpus; failures are collected, not fatal.
pub fn augment_corpus(
    records: &[ReactionRecord],
    copies: usize,
    seed: u64,
) -> (Vec<TrainingExample>, Vec<Rejection>) {
    let mut examples = Vec::new();
    let mut failures = Vec::new();
    for (idx, record) in records.iter().enumerate() {
        match augment_record(record, idx, copies, seed) {
            Ok(mut ex) => examples.append(&mut ex),
            Err(reason) => failures.push(Rejection {
                line_number: idx + 1,
                raw_line: record.raw_line.clone(),
                reason,
            }),
        }
    }
    (examples, failures)
}

/// Canonical form used by every metric: maps stripped, fragments sorted.
fn truth_canonical(text: &str) -> Option<String> {
    parse_smiles(text, ParseMode::Standard)
        .ok()
        .map(|m| canonical_smiles(&m.without_atom_maps()))
}

/// Canonical form of the largest fragment: most heavy atoms, ties broken
/// toward the lexicographically greater canonical SMILES.
fn maxfrag_canonical(text: &str) -> Option<String> {
    let m = parse_smiles(text, ParseMode::Standard).ok()?;
    let m = m.without_atom_maps();
    m.components()
        .iter()
        .map(|comp| (comp.len(), canonical_smiles(&m.induced_subgraph(comp))))
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .map(|(_, frag)| frag)
}

/// Aggregated evaluation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    pub top_k_accuracy: BTreeMap<usize, f64>,
    pub top_k_maxfrag: BTreeMap<usize, f64>,
    pub top_k_validity: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<u8, BTreeMap<usize, f64>>,
}

fn hit_rank(
    predictions: &[String],
    truth_key: &Option<String>,
    key_fn: impl Fn(&str) -> Option<String>,
) -> Option<usize> {
    let truth_key = truth_key.as_ref()?;
    predictions
        .iter()
        .position(|p| key_fn(p).as_ref() == Some(truth_key))
        .map(|idx| idx + 1)
}

fn ranks_to_fractions(ranks: &[Option<usize>], ks: &[usize]) -> BTreeMap<usize, f64> {
    let n = ranks.len().max(1);
    ks.iter()
        .map(|&k| {
            let hits = ranks
                .iter()
                .filter(|r| matches!(r, Some(rank) if *rank <= k))
                .count();
            (k, hits as f64 / n as f64)
        })
        .collect()
}

/// Exact-match accuracy: a hit requires every fragment of the truth.
pub fn eval_topk(
    predictions: &[Vec<String>],
    truths: &[String],
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>, EvalError> {
    let ranks = full_match_ranks(predictions, truths)?;
    Ok(ranks_to_fractions(&ranks, ks))
}

fn full_match_ranks(
    predictions: &[Vec<String>],
    truths: &[String],
) -> Result<Vec<Option<usize>>, EvalError> {
    check_lengths(predictions, truths)?;
    truths
        .iter()
        .enumerate()
        .zip(predictions)
        .map(|((index, truth), preds)| {
            let key = truth_canonical(truth);
            if key.is_none() {
                return Err(EvalError::UnparseableTruth {
                    index,
                    message: truth.clone(),
                });
            }
            Ok(hit_rank(preds, &key, truth_canonical))
        })
        .collect()
}

/// Largest-fragment accuracy (the primary-reactant metric).
pub fn eval_maxfrag(
    predictions: &[Vec<String>],
    truths: &[String],
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>, EvalError> {
    check_lengths(predictions, truths)?;
    let ranks: Vec<Option<usize>> = truths
        .iter()
        .enumerate()
        .zip(predictions)
        .map(|((index, truth), preds)| {
            let key = maxfrag_canonical(truth);
            if key.is_none() {
                return Err(EvalError::UnparseableTruth {
                    index,
                    message: truth.clone(),
                });
            }
            Ok(hit_rank(preds, &key, maxfrag_canonical))
        })
        .collect::<Result<_, _>>()?;
    Ok(ranks_to_fractions(&ranks, ks))
}

/// Validity: over all emitted (product, rank <= k) slots, the fraction that
/// parse.
pub fn eval_validity(predictions: &[Vec<String>], ks: &[usize]) -> BTreeMap<usize, f64> {
    ks.iter()
        .map(|&k| {
            let mut slots = 0usize;
            let mut valid = 0usize;
            for preds in predictions {
                for p in preds.iter().take(k) {
                    slots += 1;
                    if parse_smiles(p, ParseMode::Standard).is_ok() {
                        valid += 1;
                    }
                }
            }
            let fraction = if slots == 0 {
                1.0
            } else {
                valid as f64 / slots as f64
            };
            (k, fraction)
        })
        .collect()
}

fn check_lengths(predictions: &[Vec<String>], truths: &[String]) -> Result<(), EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    Ok(())
}

/// Full report; classes, when given, add a per-class accuracy breakdown.
pub fn eval_report(
    predictions: &[Vec<String>],
    truths: &[String],
    classes: Option<&[Option<u8>]>,
    ks: &[usize],
) -> Result<EvalReport, EvalError> {
    let ranks = full_match_ranks(predictions, truths)?;
    let mut report = EvalReport {
        top_k_accuracy: ranks_to_fractions(&ranks, ks),
        top_k_maxfrag: eval_maxfrag(predictions, truths, ks)?,
        top_k_validity: eval_validity(predictions, ks),
        per_class: BTreeMap::new(),
    };
    if let Some(classes) = classes {
        if classes.len() != truths.len() {
            return Err(EvalError::ClassLengthMismatch {
                got: classes.len(),
                want: truths.len(),
            });
        }
        let mut by_class: BTreeMap<u8, Vec<Option<usize>>> = BTreeMap::new();
        for (rank, class) in ranks.iter().zip(classes) {
            if let Some(c) = class {
                by_class.entry(*c).or_default().push(*rank);
            }
        }
        for (class, class_ranks) in by_class {
            report
                .per_class
                .insert(class, ranks_to_fractions(&class_ranks, ks));
        }
    }
    Ok(report)
}

/// Reaction-class distribution of a record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub total_records: usize,
    pub labeled: usize,
    pub excluded_unlabeled: usize,
    pub counts: BTreeMap<u8, usize>,
    pub fractions: BTreeMap<u8, f64>,
}

pub fn class_stats(records: &[ReactionRecord]) -> ClassStats {
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    let mut labeled = 0usize;
    for record in records {
        if let Some(c) = record.reaction_class {
            *counts.entry(c).or_default() += 1;
            labeled += 1;
        }
    }
    let fractions = counts
        .iter()
        .map(|(&c, &n)| (c, n as f64 / labeled.max(1) as f64))
        .collect();
    ClassStats {
        total_records: records.len(),
        labeled,
        excluded_unlabeled: records.len() - labeled,
        counts,
        fractions,
    }
}
