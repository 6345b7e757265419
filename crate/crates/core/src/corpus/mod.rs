//! Corpus management: validity filtering, deduplication by maximum-weight
//! bipartite matching and train/valid/test splitting.

mod matching;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matching::{matching_weight, max_weight_matching};

use crate::midi::parse_smf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    EdgeList { line: usize, reason: String },
    #[error("invalid edge ({left}, {right}): {reason}")]
    InvalidEdge {
        left: String,
        right: String,
        reason: String,
    },
    #[error("fractions valid={valid} test={test} must lie in [0, 1) and sum below 1")]
    InvalidFractions { valid: f64, test: f64 },
    #[error("need at least 3 items to make three non-empty subsets, got {0}")]
    TooFewItems(usize),
}

/// Acceptance rules for corpus files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Required time-signature numerator (`4` accepts any `4/*`); `None`
    /// accepts every signature.
    pub time_signature_numerator: Option<u8>,
    /// Minimum number of tracks holding at least one note.
    pub min_tracks: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            time_signature_numerator: Some(4),
            min_tracks: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Corrupt,
    TimeSignature,
    TrackCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterReport {
    pub accepted: Vec<String>,
    pub rejected: Vec<(String, Rejection)>,
}

/// Classifies one file.
pub fn check_file(bytes: &[u8], config: &FilterConfig) -> Result<(), Rejection> {
    let score = parse_smf(bytes).map_err(|_| Rejection::Corrupt)?;
    if let Some(num) = config.time_signature_numerator {
        if score.time_signatures.iter().any(|ts| ts.numerator != num) {
            return Err(Rejection::TimeSignature);
        }
    }
    let tracks = score.tracks.iter().filter(|t| !t.notes.is_empty()).count();
    if tracks < config.min_tracks {
        return Err(Rejection::TrackCount);
    }
    Ok(())
}

/// Splits named files into accepted and rejected, in input order.
pub fn filter_valid(files: &[(String, Vec<u8>)], config: &FilterConfig) -> FilterReport {
    let verdicts: Vec<Result<(), Rejection>> = files
        .par_iter()
        .map(|(_, bytes)| check_file(bytes, config))
        .collect();
    let mut report = FilterReport::default();
    for ((name, _), verdict) in files.iter().zip(verdicts) {
        match verdict {
            Ok(()) => report.accepted.push(name.clone()),
            Err(r) => report.rejected.push((name.clone(), r)),
        }
    }
    report
}

/// Parses `left<TAB>right<TAB>weight` lines; blank lines are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<(String, String, f64)>, CorpusError> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: &str| CorpusError::EdgeList {
            line: i + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [left, right, weight] = fields[..] else {
            return Err(err("expected three tab-separated fields"));
        };
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| err("weight is not a number"))?;
        edges.push((left.to_string(), right.to_string(), weight));
    }
    Ok(edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Shuffles the sorted ids with a seeded ChaCha8 generator and cuts them
/// into test, valid and train subsets; sizes round to nearest.
pub fn split_corpus(ids: &[String], spec: SplitSpec) -> Result<Split, CorpusError> {
    let (v, t) = (spec.valid_fraction, spec.test_fraction);
    let in_range = |f: f64| (0.0..1.0).contains(&f);
    if !in_range(v) || !in_range(t) || v + t >= 1.0 {
        return Err(CorpusError::InvalidFractions { valid: v, test: t });
    }
    let n = ids.len();
    if n < 3 && v > 0.0 && t > 0.0 {
        return Err(CorpusError::TooFewItems(n));
    }
    let n_test = ((n as f64) * t).round() as usize;
    let n_valid = (((n as f64) * v).round() as usize).min(n - n_test.min(n));

    let mut items = ids.to_vec();
    items.sort();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut test: Vec<String> = items.drain(..n_test.min(n)).collect();
    let mut valid: Vec<String> = items.drain(..n_valid).collect();
    let mut train = items;
    test.sort();
    valid.sort();
    train.sort();
    Ok(Split {
        train,
        valid,
        test,
        seed: spec.seed,
    })
}
