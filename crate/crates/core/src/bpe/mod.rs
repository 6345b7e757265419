//! Byte pair encoding over token id sequences.
//!
//! [`learn_bpe`] greedily merges the most frequent adjacent pair until the
//! target vocabulary size is reached; [`apply_bpe`] and [`undo_bpe`] encode
//! and decode sequences with the resulting [`MergeTable`].

mod learn;
mod stats;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use learn::{learn_bpe, learn_bpe_encoded};
pub use stats::{merge_stats, BpeStats, LearnedToken, PrefixStats};

use crate::tokenizer::{is_special, TokenType, TokenValue, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpeError {
    #[error("target vocabulary size {target} is below the base size {base}")]
    TargetBelowBase { target: usize, base: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("token id {id} at index {index} is outside the vocabulary of {size} tokens")]
    UnknownId { index: usize, id: u32, size: usize },
    #[error("invalid merge table: {0}")]
    InvalidTable(String),
}

/// Ordered merge rules. Merge `r` turns the pair `merges[r]` into id
/// `base_size + r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    base_size: u32,
    merges: Vec<(u32, u32)>,
    ranks: HashMap<(u32, u32), u32>,
    expansions: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    base_size: u32,
    merges: Vec<(u32, u32)>,
}

impl MergeTable {
    pub fn new(base_size: u32, merges: Vec<(u32, u32)>) -> Result<Self, BpeError> {
        let mut ranks = HashMap::with_capacity(merges.len());
        let mut expansions: Vec<Vec<u32>> = Vec::with_capacity(merges.len());
        for (rank, &(l, r)) in merges.iter().enumerate() {
            let limit = base_size + rank as u32;
            for id in [l, r] {
                if id >= limit {
                    return Err(BpeError::InvalidTable(format!(
                        "merge {rank} references id {id} not yet defined"
                    )));
                }
                if is_special(id) {
                    return Err(BpeError::InvalidTable(format!(
                        "merge {rank} references special token {id}"
                    )));
                }
            }
            if ranks.insert((l, r), rank as u32).is_some() {
                return Err(BpeError::InvalidTable(format!(
                    "pair ({l}, {r}) merged twice"
                )));
            }
            let expand = |id: u32| -> Vec<u32> {
                if id < base_size {
                    vec![id]
                } else {
                    expansions[(id - base_size) as usize].clone()
                }
            };
            let mut e = expand(l);
            e.extend(expand(r));
            expansions.push(e);
        }
        Ok(Self {
            base_size,
            merges,
            ranks,
            expansions,
        })
    }

    pub fn empty(base_size: u32) -> Self {
        Self {
            base_size,
            merges: Vec::new(),
            ranks: HashMap::new(),
            expansions: Vec::new(),
        }
    }

    pub fn base_size(&self) -> u32 {
        self.base_size
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Base plus learned tokens.
    pub fn vocab_size(&self) -> usize {
        self.base_size as usize + self.merges.len()
    }

    /// Base ids a learned id stands for; `None` for base or unknown ids.
    pub fn expansion(&self, id: u32) -> Option<&[u32]> {
        id.checked_sub(self.base_size)
            .and_then(|i| self.expansions.get(i as usize))
            .map(Vec::as_slice)
    }

    /// The first `n` merges.
    pub fn truncated(&self, n: usize) -> MergeTable {
        let n = n.min(self.merges.len());
        let merges = self.merges[..n].to_vec();
        Self {
            base_size: self.base_size,
            ranks: self
                .ranks
                .iter()
                .filter(|(_, &r)| (r as usize) < n)
                .map(|(k, v)| (*k, *v))
                .collect(),
            expansions: self.expansions[..n].to_vec(),
            merges,
        }
    }

    /// Base vocabulary followed by one `BPE` descriptor per merge.
    pub fn extend_vocabulary(&self, base: &Vocabulary) -> Result<Vocabulary, BpeError> {
        if base.len() != self.base_size as usize {
            return Err(BpeError::InvalidTable(format!(
                "table expects {} base tokens, vocabulary has {}",
                self.base_size,
                base.len()
            )));
        }
        let mut v = base.clone();
        for &(l, r) in &self.merges {
            v.push(TokenType::Bpe, TokenValue::Ids(vec![l, r]));
        }
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&RawTable {
            base_size: self.base_size,
            merges: self.merges.clone(),
        })
        .expect("merge table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BpeError> {
        let raw: RawTable =
            serde_json::from_str(text).map_err(|e| BpeError::InvalidTable(e.to_string()))?;
        Self::new(raw.base_size, raw.merges)
    }
}

impl Serialize for MergeTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawTable {
            base_size: self.base_size,
            merges: self.merges.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MergeTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawTable::deserialize(d)?;
        MergeTable::new(raw.base_size, raw.merges).map_err(serde::de::Error::custom)
    }
}

/// Encodes a base-id sequence by repeatedly substituting, left to right,
/// every occurrence of the lowest-rank merge present.
pub fn apply_bpe(ids: &[u32], table: &MergeTable) -> Result<Vec<u32>, BpeError> {
    if let Some((index, &id)) = ids
        .iter()
        .enumerate()
        .find(|(_, &id)| id >= table.base_size)
    {
        return Err(BpeError::UnknownId {
            index,
            id,
            size: table.base_size as usize,
        });
    }
    let mut seq = ids.to_vec();
    let mut out = Vec::with_capacity(seq.len());
    loop {
        let best = seq
            .windows(2)
            .filter_map(|w| table.ranks.get(&(w[0], w[1])).copied())
            .min();
        let Some(rank) = best else {
            return Ok(seq);
        };
        let (l, r) = table.merges[rank as usize];
        let new_id = table.base_size + rank;
        out.clear();
        let mut i = 0;
        while i < seq.len() {
            if i + 1 < seq.len() && seq[i] == l && seq[i + 1] == r {
                out.push(new_id);
                i += 2;
            } else {
                out.push(seq[i]);
                i += 1;
            }
        }
        std::mem::swap(&mut seq, &mut out);
    }
}

/// Expands every learned id back to base ids.
pub fn undo_bpe(ids: &[u32], table: &MergeTable) -> Result<Vec<u32>, BpeError> {
    let mut out = Vec::with_capacity(ids.len() * 2);
    for (index, &id) in ids.iter().enumerate() {
        if id < table.base_size {
            out.push(id);
        } else if let Some(e) = table.expansion(id) {
            out.extend_from_slice(e);
        } else {
            return Err(BpeError::UnknownId {
                index,
                id,
                size: table.vocab_size(),
            });
        }
    }
    Ok(out)
}
