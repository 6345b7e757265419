use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MergeTable;
use crate::tokenizer::{TokenType, TokenValue, Vocabulary};

/// One learned token and what it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedToken {
    pub id: u32,
    /// Number of base tokens it expands to.
    pub length: usize,
    /// Base token types in order, joined with `-`, e.g. `Pitch-Velocity`.
    pub composition: String,
}

/// Average and maximum expansion length after the first `vocab_size -
/// base_size` merges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixStats {
    pub vocab_size: usize,
    pub average_length: f64,
    pub max_length: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BpeStats {
    pub tokens: Vec<LearnedToken>,
    pub average_length: f64,
    pub max_length: usize,
    /// Share of learned tokens per composition; sums to 1 when non-empty.
    pub composition_histogram: BTreeMap<String, f64>,
    /// Running average/maximum length as the vocabulary grows.
    pub by_vocab_size: Vec<PrefixStats>,
}

fn type_names(kind: TokenType, value: &TokenValue, out: &mut Vec<&'static str>) {
    match value {
        TokenValue::Parts(parts) if kind == TokenType::Merged => {
            for (k, v) in parts {
                type_names(*k, v, out);
            }
        }
        _ => out.push(kind.name()),
    }
}

/// Expansion lengths and type composition of every learned token.
///
/// `base` is the vocabulary the table was learned over; merged base tokens
/// contribute their constituent types.
pub fn merge_stats(table: &MergeTable, base: &Vocabulary) -> BpeStats {
    let mut stats = BpeStats::default();
    if table.is_empty() {
        return stats;
    }
    let mut sum = 0usize;
    for rank in 0..table.len() {
        let id = table.base_size() + rank as u32;
        let expansion = table.expansion(id).unwrap_or_default();
        let mut names = Vec::new();
        for &b in expansion {
            match base.get(b) {
                Some(d) => type_names(d.kind, &d.value, &mut names),
                None => names.push("Unknown"),
            }
        }
        let composition = names.join("-");
        *stats
            .composition_histogram
            .entry(composition.clone())
            .or_default() += 1.0;
        sum += expansion.len();
        stats.max_length = stats.max_length.max(expansion.len());
        stats.by_vocab_size.push(PrefixStats {
            vocab_size: id as usize + 1,
            average_length: sum as f64 / (rank + 1) as f64,
            max_length: stats.max_length,
        });
        stats.tokens.push(LearnedToken {
            id,
            length: expansion.len(),
            composition,
        });
    }
    let n = table.len() as f64;
    stats.average_length = sum as f64 / n;
    for v in stats.composition_histogram.values_mut() {
        *v /= n;
    }
    stats
}
