//! Tokenization syntax errors, compression and coverage statistics, timing.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpe::{apply_bpe, undo_bpe, BpeError, MergeTable};
use crate::score::Score;
use crate::tokenizer::{
    is_special, NoteLayout, Scheme, SyntaxError, TimeModel, TokenizeError, Tokenizer, SPECIAL_COUNT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("repetitions must be at least 3, got {0}")]
    TooFewRepetitions(usize),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Bpe(#[from] BpeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub count: usize,
    pub ratio: f64,
}

/// Per-category error counts over the evaluated tokens. Categories that do
/// not apply to the scheme are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TseReport {
    pub scheme: Scheme,
    pub denominator: usize,
    #[serde(rename = "type")]
    pub type_: Option<CategoryStat>,
    pub time: Option<CategoryStat>,
    pub dupn: Option<CategoryStat>,
    pub nnof: Option<CategoryStat>,
    pub nnon: Option<CategoryStat>,
}

/// Whether `category` can occur under `scheme`.
pub fn applies(scheme: Scheme, category: SyntaxError) -> bool {
    match category {
        SyntaxError::Type | SyntaxError::DuplicateNote => true,
        SyntaxError::Time => scheme.time_model() == TimeModel::BarPosition,
        SyntaxError::NoNoteOff | SyntaxError::NoNoteOn => {
            scheme.note_layout() == NoteLayout::NoteOnOff
        }
    }
}

impl TseReport {
    fn from_counts(scheme: Scheme, denominator: usize, counts: [usize; 5]) -> Self {
        let stat = |c: SyntaxError| {
            applies(scheme, c).then(|| {
                let count = counts[c as usize];
                CategoryStat {
                    count,
                    ratio: if denominator == 0 {
                        0.0
                    } else {
                        count as f64 / denominator as f64
                    },
                }
            })
        };
        Self {
            scheme,
            denominator,
            type_: stat(SyntaxError::Type),
            time: stat(SyntaxError::Time),
            dupn: stat(SyntaxError::DuplicateNote),
            nnof: stat(SyntaxError::NoNoteOff),
            nnon: stat(SyntaxError::NoNoteOn),
        }
    }

    pub fn get(&self, category: SyntaxError) -> Option<CategoryStat> {
        match category {
            SyntaxError::Type => self.type_,
            SyntaxError::Time => self.time,
            SyntaxError::DuplicateNote => self.dupn,
            SyntaxError::NoNoteOff => self.nnof,
            SyntaxError::NoNoteOn => self.nnon,
        }
    }

    pub fn count(&self, category: SyntaxError) -> usize {
        self.get(category).map_or(0, |s| s.count)
    }

    pub fn counts(&self) -> [usize; 5] {
        SyntaxError::ALL.map(|c| self.count(c))
    }

    pub fn total_errors(&self) -> usize {
        self.counts().iter().sum()
    }

    /// Pools counts and denominators of reports for the same scheme.
    pub fn aggregate(scheme: Scheme, reports: &[TseReport]) -> Self {
        let mut counts = [0; 5];
        let mut denominator = 0;
        for r in reports {
            denominator += r.denominator;
            for (acc, c) in counts.iter_mut().zip(r.counts()) {
                *acc += c;
            }
        }
        Self::from_counts(scheme, denominator, counts)
    }
}

/// Scores a base-token sequence against the tokenizer's grammar.
///
/// Tokens before `max(1, prompt_offset)` and special tokens are not
/// evaluated. An nnof error is attributed to the token that started the
/// note.
pub fn tse(
    tokenizer: &Tokenizer,
    ids: &[u32],
    prompt_offset: usize,
) -> Result<TseReport, TokenizeError> {
    let scan = tokenizer.scan(ids)?;
    let start = prompt_offset.max(1);
    let mut counts = [0usize; 5];
    let mut denominator = 0;
    for (&id, verdict) in ids.iter().zip(&scan.verdicts).skip(start) {
        if is_special(id) {
            continue;
        }
        denominator += 1;
        if let Some(v) = verdict {
            counts[*v as usize] += 1;
        }
    }
    counts[SyntaxError::NoNoteOff as usize] += scan
        .unclosed
        .iter()
        .chain(&scan.overlong)
        .filter(|&&i| i >= start)
        .count();
    Ok(TseReport::from_counts(
        tokenizer.scheme(),
        denominator,
        counts,
    ))
}

/// [`tse`] on a BPE-encoded sequence, scored after expansion.
pub fn tse_bpe(
    tokenizer: &Tokenizer,
    table: &MergeTable,
    ids: &[u32],
    prompt_offset: usize,
) -> Result<TseReport, MetricsError> {
    let base = undo_bpe(ids, table)?;
    Ok(tse(tokenizer, &base, prompt_offset)?)
}

/// Beats spanned by a score, at least 1.
pub fn beats(score: &Score) -> f64 {
    (score.max_tick() as f64 / f64::from(score.ticks_per_beat.max(1))).max(1.0)
}

/// Non-special tokens per beat of each score, optionally after BPE.
pub fn tokens_per_beat_each(
    corpus: &[Score],
    tokenizer: &Tokenizer,
    table: Option<&MergeTable>,
) -> Result<Vec<f64>, MetricsError> {
    corpus
        .iter()
        .map(|score| {
            let mut ids = tokenizer.tokenize_flat(score)?.ids;
            if let Some(t) = table {
                ids = apply_bpe(&ids, t)?;
            }
            let n = ids.iter().filter(|&&id| !is_special(id)).count();
            Ok(n as f64 / beats(score))
        })
        .collect()
}

/// Mean over scores of non-special tokens per beat.
pub fn tokens_per_beat(
    corpus: &[Score],
    tokenizer: &Tokenizer,
    table: Option<&MergeTable>,
) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let each = tokens_per_beat_each(corpus, tokenizer, table)?;
    Ok(each.iter().sum::<f64>() / each.len() as f64)
}

/// Fraction of non-special vocabulary ids that occur in `sequences`.
pub fn vocab_coverage(sequences: &[Vec<u32>], vocab_size: usize) -> f64 {
    let eligible = vocab_size.saturating_sub(SPECIAL_COUNT as usize);
    if eligible == 0 {
        return 0.0;
    }
    let seen: BTreeSet<u32> = sequences
        .iter()
        .flatten()
        .copied()
        .filter(|&id| !is_special(id) && (id as usize) < vocab_size)
        .collect();
    seen.len() as f64 / eligible as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    pub repetitions: usize,
    pub files: usize,
    pub tokenize_seconds_per_file: f64,
    pub detokenize_seconds_per_file: f64,
    /// Every repetition produced the same ids and the same decoded scores.
    pub deterministic: bool,
}

/// Wall-clock encode/decode cost per file, averaged over `repetitions`
/// passes after one warm-up pass.
pub fn timing_profile(
    corpus: &[Score],
    tokenizer: &Tokenizer,
    table: Option<&MergeTable>,
    repetitions: usize,
) -> Result<TimingProfile, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if repetitions < 3 {
        return Err(MetricsError::TooFewRepetitions(repetitions));
    }
    let encode = |score: &Score| -> Result<Vec<u32>, MetricsError> {
        let ids = tokenizer.tokenize_flat(score)?.ids;
        Ok(match table {
            Some(t) => apply_bpe(&ids, t)?,
            None => ids,
        })
    };
    let decode = |ids: &[u32]| -> Result<Score, MetricsError> {
        let base = match table {
            Some(t) => undo_bpe(ids, t)?,
            None => ids.to_vec(),
        };
        Ok(tokenizer.detokenize(&base)?.0)
    };

    let reference: Vec<Vec<u32>> = corpus.iter().map(encode).collect::<Result<_, _>>()?;
    let decoded: Vec<Score> = reference
        .iter()
        .map(|ids| decode(ids))
        .collect::<Result<_, _>>()?;

    let mut deterministic = true;
    let mut enc_time = 0.0;
    let mut dec_time = 0.0;
    for _ in 0..repetitions {
        let t0 = Instant::now();
        let ids: Vec<Vec<u32>> = corpus.iter().map(encode).collect::<Result<_, _>>()?;
        enc_time += t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let scores: Vec<Score> = ids.iter().map(|s| decode(s)).collect::<Result<_, _>>()?;
        dec_time += t1.elapsed().as_secs_f64();
        deterministic &= ids == reference && scores == decoded;
    }
    let per = (repetitions * corpus.len()) as f64;
    Ok(TimingProfile {
        repetitions,
        files: corpus.len(),
        tokenize_seconds_per_file: enc_time / per,
        detokenize_seconds_per_file: dec_time / per,
        deterministic,
    })
}
