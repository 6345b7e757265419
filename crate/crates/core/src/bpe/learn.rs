use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use super::{BpeError, MergeTable};
use crate::tokenizer::is_special;

const NONE: usize = usize::MAX;

type Pair = (u32, u32);

/// Corpus as one flat array with per-sequence linked lists, so merges never
/// cross sequence boundaries and positions keep their scan order.
struct Index {
    sym: Vec<u32>,
    prev: Vec<usize>,
    next: Vec<usize>,
    alive: Vec<bool>,
    occurrences: HashMap<Pair, BTreeSet<usize>>,
}

impl Index {
    fn new(corpus: &[Vec<u32>]) -> Self {
        let total: usize = corpus.iter().map(Vec::len).sum();
        let mut idx = Index {
            sym: Vec::with_capacity(total),
            prev: Vec::with_capacity(total),
            next: Vec::with_capacity(total),
            alive: vec![true; total],
            occurrences: HashMap::new(),
        };
        for seq in corpus {
            let start = idx.sym.len();
            for (i, &id) in seq.iter().enumerate() {
                idx.sym.push(id);
                idx.prev.push(if i == 0 { NONE } else { start + i - 1 });
                idx.next.push(if i + 1 == seq.len() {
                    NONE
                } else {
                    start + i + 1
                });
            }
        }
        for p in 0..idx.sym.len() {
            if let Some(pair) = idx.pair_at(p) {
                idx.occurrences.entry(pair).or_default().insert(p);
            }
        }
        idx
    }

    fn pair_at(&self, p: usize) -> Option<Pair> {
        let q = self.next[p];
        if q == NONE {
            return None;
        }
        let pair = (self.sym[p], self.sym[q]);
        (!is_special(pair.0) && !is_special(pair.1)).then_some(pair)
    }

    fn remove(&mut self, p: usize, touched: &mut HashSet<Pair>) {
        if let Some(pair) = self.pair_at(p) {
            if let Some(set) = self.occurrences.get_mut(&pair) {
                set.remove(&p);
                if set.is_empty() {
                    self.occurrences.remove(&pair);
                }
            }
            touched.insert(pair);
        }
    }

    fn add(&mut self, p: usize, touched: &mut HashSet<Pair>) {
        if let Some(pair) = self.pair_at(p) {
            self.occurrences.entry(pair).or_default().insert(p);
            touched.insert(pair);
        }
    }

    /// Non-overlapping occurrence count and first position of `pair`.
    fn score(&self, pair: Pair) -> Option<(usize, usize)> {
        let set = self.occurrences.get(&pair)?;
        let first = *set.iter().next()?;
        if pair.0 != pair.1 {
            return Some((set.len(), first));
        }
        // runs of the same symbol: a chain of k overlapping pairs holds ceil(k/2)
        let mut count = 0usize;
        let mut chain = 0usize;
        let mut last = NONE;
        for &p in set {
            if last != NONE && self.next[last] == p {
                chain += 1;
            } else {
                count += chain.div_ceil(2);
                chain = 1;
            }
            last = p;
        }
        count += chain.div_ceil(2);
        Some((count, first))
    }

    fn merge(&mut self, pair: Pair, new_id: u32, touched: &mut HashSet<Pair>) {
        let positions: Vec<usize> = self
            .occurrences
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for p in positions {
            if !self.alive[p] || self.pair_at(p) != Some(pair) {
                continue;
            }
            let q = self.next[p];
            let before = self.prev[p];
            if before != NONE {
                self.remove(before, touched);
            }
            self.remove(p, touched);
            self.remove(q, touched);

            let after = self.next[q];
            self.sym[p] = new_id;
            self.alive[q] = false;
            self.next[p] = after;
            if after != NONE {
                self.prev[after] = p;
            }

            if before != NONE {
                self.add(before, touched);
            }
            self.add(p, touched);
        }
    }

    fn sequences(&self, lengths: &[usize]) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(lengths.len());
        let mut start = 0;
        for &len in lengths {
            let mut seq = Vec::new();
            if len > 0 {
                let mut p = start;
                while p != NONE {
                    seq.push(self.sym[p]);
                    p = self.next[p];
                }
            }
            out.push(seq);
            start += len;
        }
        out
    }
}

/// Learns merges until the vocabulary holds `target_size` tokens or no pair
/// occurs at least twice.
///
/// At each step the pair with the highest non-overlapping occurrence count
/// wins; ties go to the pair whose first occurrence comes earliest in corpus
/// order. Pairs involving special tokens are never merged.
pub fn learn_bpe(
    corpus: &[Vec<u32>],
    base_size: u32,
    target_size: usize,
) -> Result<MergeTable, BpeError> {
    learn_bpe_encoded(corpus, base_size, target_size).map(|(table, _)| table)
}

/// [`learn_bpe`] that also returns the corpus in its final merged state.
pub fn learn_bpe_encoded(
    corpus: &[Vec<u32>],
    base_size: u32,
    target_size: usize,
) -> Result<(MergeTable, Vec<Vec<u32>>), BpeError> {
    if target_size < base_size as usize {
        return Err(BpeError::TargetBelowBase {
            target: target_size,
            base: base_size as usize,
        });
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(BpeError::EmptyCorpus);
    }
    let mut offset = 0;
    for seq in corpus {
        if let Some((i, &id)) = seq.iter().enumerate().find(|(_, &id)| id >= base_size) {
            return Err(BpeError::UnknownId {
                index: offset + i,
                id,
                size: base_size as usize,
            });
        }
        offset += seq.len();
    }

    let mut index = Index::new(corpus);
    let mut heap: BinaryHeap<(usize, Reverse<usize>, Pair)> = index
        .occurrences
        .keys()
        .filter_map(|&pair| index.score(pair).map(|(c, f)| (c, Reverse(f), pair)))
        .collect();

    let mut merges = Vec::new();
    let mut touched = HashSet::new();
    while base_size as usize + merges.len() < target_size {
        let Some((count, Reverse(first), pair)) = heap.pop() else {
            break;
        };
        if index.score(pair) != Some((count, first)) {
            continue;
        }
        if count < 2 {
            break;
        }
        let new_id = base_size + merges.len() as u32;
        touched.clear();
        index.merge(pair, new_id, &mut touched);
        merges.push(pair);
        for &p in &touched {
            if let Some((c, f)) = index.score(p) {
                heap.push((c, Reverse(f), p));
            }
        }
    }

    let lengths: Vec<usize> = corpus.iter().map(Vec::len).collect();
    let encoded = index.sequences(&lengths);
    Ok((MergeTable::new(base_size, merges)?, encoded))
}
