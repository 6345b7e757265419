//! Slow reference implementations written independently of the library.

use std::collections::{BTreeMap, BTreeSet};

use symtok::tokenizer::{NoteLayout, Scheme, TimeModel, Vocabulary, SPECIAL_COUNT};

// ---------------------------------------------------------------------------
// BPE

fn special(id: u32) -> bool {
    id < SPECIAL_COUNT
}

/// Non-overlapping left-to-right count of `pair` in one sequence, and the
/// index of its first (possibly overlapping) occurrence.
fn count_in(seq: &[u32], pair: (u32, u32)) -> (usize, Option<usize>) {
    let first = seq.windows(2).position(|w| (w[0], w[1]) == pair);
    let mut count = 0;
    let mut i = 0;
    while i + 1 < seq.len() {
        if (seq[i], seq[i + 1]) == pair {
            count += 1;
            i += 2;
        } else {
            i += 1;
        }
    }
    (count, first)
}

fn replace(seq: &[u32], pair: (u32, u32), new: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && (seq[i], seq[i + 1]) == pair {
            out.push(new);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    out
}

/// Recount-every-step learner: each round scans the whole corpus, picks the
/// pair with the highest non-overlapping count (ties: earliest first
/// occurrence in scan order) and rewrites the corpus.
/// Count, first occurrence (sequence, index) and pair of a merge candidate.
type Candidate = (usize, (usize, usize), (u32, u32));

pub fn bpe_learn_naive(corpus: &[Vec<u32>], base: u32, target: usize) -> Vec<(u32, u32)> {
    let mut corpus = corpus.to_vec();
    let mut merges = Vec::new();
    while (base as usize) + merges.len() < target {
        let mut candidates: BTreeSet<(u32, u32)> = BTreeSet::new();
        for seq in &corpus {
            for w in seq.windows(2) {
                if !special(w[0]) && !special(w[1]) {
                    candidates.insert((w[0], w[1]));
                }
            }
        }
        // (count, -(sequence, index)) maximised
        let mut best: Option<Candidate> = None;
        for &pair in &candidates {
            let mut total = 0;
            let mut first = None;
            for (s, seq) in corpus.iter().enumerate() {
                let (c, f) = count_in(seq, pair);
                total += c;
                if first.is_none() {
                    first = f.map(|i| (s, i));
                }
            }
            let first = first.unwrap();
            let better = match best {
                None => true,
                Some((c, f, _)) => total > c || (total == c && first < f),
            };
            if better {
                best = Some((total, first, pair));
            }
        }
        match best {
            Some((c, _, pair)) if c >= 2 => {
                let new = base + merges.len() as u32;
                corpus = corpus.iter().map(|s| replace(s, pair, new)).collect();
                merges.push(pair);
            }
            _ => break,
        }
    }
    merges
}

// ---------------------------------------------------------------------------
// Tokenization syntax errors

/// Parsed token text.
#[derive(Debug, Clone, PartialEq)]
enum T {
    Special(String),
    Bar,
    Position(u64),
    Shift(u64),
    Program(i64),
    Pitch(u8),
    Velocity,
    Duration,
    On(u8),
    Off(u8),
    PV(u8),
    Pvd(u8),
}

/// Ticks per beat used by the oracle; every grid value divides it.
const UNIT: u64 = 960;

fn beats(text: &str) -> u64 {
    match text.split_once('/') {
        Some((n, d)) => {
            let (n, d): (u64, u64) = (n.parse().unwrap(), d.parse().unwrap());
            assert_eq!(n * UNIT % d, 0);
            n * UNIT / d
        }
        None => text.parse::<u64>().unwrap() * UNIT,
    }
}

fn parse(text: &str) -> T {
    let (head, rest) = text.split_once('_').unwrap_or((text, ""));
    let parts: Vec<&str> = rest.split('_').collect();
    match head {
        "PAD" | "BOS" | "EOS" | "MASK" | "SEP" => T::Special(head.to_string()),
        "Bar" => T::Bar,
        "Position" => T::Position(rest.parse().unwrap()),
        "TimeShift" => T::Shift(beats(rest)),
        "Program" if rest == "Drums" => T::Program(-1),
        "Program" => T::Program(rest.parse().unwrap()),
        "Pitch" => T::Pitch(rest.parse().unwrap()),
        "Velocity" => T::Velocity,
        "Duration" => T::Duration,
        "NoteOn" => T::On(rest.parse().unwrap()),
        "NoteOff" => T::Off(rest.parse().unwrap()),
        "PV" => T::PV(parts[0].parse().unwrap()),
        "PVD" => T::Pvd(parts[0].parse().unwrap()),
        other => panic!("oracle cannot parse token {other:?}"),
    }
}

fn type_name(t: &T) -> &'static str {
    match t {
        T::Special(_) => "Special",
        T::Bar => "Bar",
        T::Position(_) => "Position",
        T::Shift(_) => "TimeShift",
        T::Program(_) => "Program",
        T::Pitch(_) => "Pitch",
        T::Velocity => "Velocity",
        T::Duration => "Duration",
        T::On(_) => "NoteOn",
        T::Off(_) => "NoteOff",
        T::PV(_) => "PV",
        T::Pvd(_) => "PVD",
    }
}

/// Error counts in the order type, time, dupn, nnof, nnon, plus the number
/// of evaluated tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCounts {
    pub counts: [usize; 5],
    pub denominator: usize,
}

pub struct TseOracle {
    tokens: Vec<T>,
    scheme: Scheme,
    positions_per_bar: u64,
    pitch_count: usize,
    max_note: u64,
}

impl TseOracle {
    pub fn new(scheme: Scheme, vocab: &Vocabulary, max_note_beats: u64) -> Self {
        let tokens: Vec<T> = vocab.entries().iter().map(|d| parse(&d.text)).collect();
        let positions_per_bar = tokens
            .iter()
            .filter(|t| matches!(t, T::Position(_)))
            .count() as u64;
        let pitch_count = tokens
            .iter()
            .filter_map(|t| match t {
                T::Pitch(p) | T::On(p) | T::PV(p) | T::Pvd(p) => Some(*p),
                _ => None,
            })
            .collect::<BTreeSet<_>>()
            .len();
        Self {
            tokens,
            scheme,
            positions_per_bar,
            pitch_count,
            max_note: max_note_beats * UNIT,
        }
    }

    fn note_starts(&self) -> Vec<&'static str> {
        match self.scheme.note_layout() {
            NoteLayout::Separate => vec!["Pitch"],
            NoteLayout::PitchVelocity => vec!["PV"],
            NoteLayout::PitchVelocityDuration => vec!["PVD"],
            NoteLayout::NoteOnOff => vec!["NoteOn", "NoteOff"],
        }
    }

    /// Types that may follow the last accepted token of a segment.
    fn successors(&self, last: Option<&str>) -> Vec<&'static str> {
        let remi = self.scheme.time_model() == TimeModel::BarPosition;
        let starts = if self.scheme.use_programs {
            vec!["Program"]
        } else {
            self.note_starts()
        };
        let after_note = || {
            let mut v = if remi {
                vec!["Bar", "Position"]
            } else {
                vec!["TimeShift"]
            };
            v.extend(starts.iter().copied());
            v
        };
        match last {
            None if remi => vec!["Bar"],
            None | Some("TimeShift") => {
                let mut v = vec!["TimeShift"];
                v.extend(starts.iter().copied());
                v
            }
            Some("Bar") => vec!["Bar", "Position"],
            Some("Position") => starts.clone(),
            Some("Program") => self.note_starts(),
            Some("Pitch") | Some("NoteOn") => vec!["Velocity"],
            Some("Velocity") if self.scheme.note_layout() == NoteLayout::NoteOnOff => after_note(),
            Some("Velocity") | Some("PV") => vec!["Duration"],
            Some("Duration") | Some("PVD") | Some("NoteOff") => after_note(),
            Some(other) => panic!("no successor rule for {other}"),
        }
    }

    /// Scores `ids` the way the TSE metric is documented.
    pub fn score(&self, ids: &[u32], prompt_offset: usize) -> OracleCounts {
        let first = prompt_offset.max(1);
        let mut out = OracleCounts::default();
        let mut seg = Segment::default();
        let mut nnof_at: Vec<usize> = Vec::new();
        for (i, &id) in ids.iter().enumerate() {
            let tok = &self.tokens[id as usize];
            if let T::Special(name) = tok {
                if name == "BOS" || name == "EOS" {
                    nnof_at.extend(seg.finish());
                    seg = Segment::default();
                }
                continue;
            }
            let verdict = self.judge(&seg, tok);
            if i >= first {
                out.denominator += 1;
                if let Some(k) = verdict {
                    out.counts[k] += 1;
                }
            }
            if verdict.is_none() {
                if let Some(start) = self.accept(&mut seg, tok, i) {
                    nnof_at.push(start);
                }
            }
        }
        nnof_at.extend(seg.finish());
        out.counts[3] += nnof_at.iter().filter(|&&i| i >= first).count();
        out
    }

    /// Category index of the error `tok` makes, if any.
    fn judge(&self, seg: &Segment, tok: &T) -> Option<usize> {
        if !self.successors(seg.last).contains(&type_name(tok)) {
            return Some(0);
        }
        let ctx = seg.context();
        match tok {
            T::Position(p) if seg.position.is_some_and(|cur| *p <= cur) => Some(1),
            T::Pitch(p) | T::On(p) | T::PV(p) | T::Pvd(p) if seg.started.contains(&(ctx, *p)) => {
                Some(2)
            }
            T::Program(k) => {
                let started = seg.started.iter().filter(|(c, _)| *c == Some(*k)).count();
                let can_release = self.scheme.note_layout() == NoteLayout::NoteOnOff
                    && seg.open.iter().any(|((c, _), v)| {
                        *c == Some(*k) && v.iter().any(|&(onset, _)| onset < seg.now)
                    });
                (started >= self.pitch_count && !can_release).then_some(2)
            }
            T::Off(p) => {
                let ok = seg
                    .open
                    .get(&(ctx, *p))
                    .is_some_and(|v| v.iter().any(|&(onset, _)| onset < seg.now));
                (!ok).then_some(4)
            }
            _ => None,
        }
    }

    /// Applies an accepted token; returns the start index of a note closed
    /// too late.
    fn accept(&self, seg: &mut Segment, tok: &T, i: usize) -> Option<usize> {
        let ctx = seg.context();
        let bar = 4 * UNIT;
        let mut late = None;
        match tok {
            T::Bar => {
                seg.bar = Some(seg.bar.map_or(0, |b| b + 1));
                seg.position = None;
                seg.now = seg.bar.unwrap() * bar;
                seg.started.clear();
            }
            T::Position(p) => {
                seg.position = Some(*p);
                seg.now = seg.bar.unwrap_or(0) * bar + p * bar / self.positions_per_bar;
                seg.started.clear();
            }
            T::Shift(d) => {
                seg.now += d;
                seg.started.clear();
            }
            T::Program(k) => {
                seg.program = Some(*k);
                seg.note_start = i;
            }
            T::Pitch(p) | T::On(p) | T::PV(p) | T::Pvd(p) => {
                seg.started.insert((ctx, *p));
                if ctx.is_none() {
                    seg.note_start = i;
                }
                seg.note = (ctx, *p);
            }
            T::Velocity if self.scheme.note_layout() == NoteLayout::NoteOnOff => {
                seg.open
                    .entry(seg.note)
                    .or_default()
                    .push((seg.now, seg.note_start));
            }
            T::Off(p) => {
                let list = seg.open.get_mut(&(ctx, *p)).unwrap();
                let earliest = (0..list.len()).min_by_key(|&j| list[j].0).unwrap();
                let (onset, start) = list.remove(earliest);
                if list.is_empty() {
                    seg.open.remove(&(ctx, *p));
                }
                if seg.now - onset > self.max_note {
                    late = Some(start);
                }
            }
            _ => {}
        }
        if !matches!(tok, T::Program(_)) {
            seg.program = None;
        }
        seg.last = Some(type_name(tok));
        late
    }
}

type Key = (Option<i64>, u8);

#[derive(Default)]
struct Segment {
    last: Option<&'static str>,
    now: u64,
    bar: Option<u64>,
    position: Option<u64>,
    program: Option<i64>,
    note: Key,
    note_start: usize,
    started: BTreeSet<Key>,
    open: BTreeMap<Key, Vec<(u64, usize)>>,
}

impl Segment {
    /// Program in force for the next note token.
    fn context(&self) -> Option<i64> {
        if self.last == Some("Program") {
            self.program
        } else {
            None
        }
    }

    /// Start indices of notes still open.
    fn finish(&self) -> Vec<usize> {
        self.open.values().flatten().map(|&(_, s)| s).collect()
    }
}

// ---------------------------------------------------------------------------
// Matching

/// Every maximum-weight matching by exhaustive enumeration; returns the
/// optimum and, among matchings within `tol` of it, the lexicographically
/// smallest sorted pair list.
pub fn brute_force_matching(edges: &[(u32, u32, f64)], tol: f64) -> (f64, Vec<(u32, u32)>) {
    let lefts: Vec<u32> = edges
        .iter()
        .map(|e| e.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut all: Vec<(f64, Vec<(u32, u32)>)> = Vec::new();
    fn rec(
        k: usize,
        lefts: &[u32],
        edges: &[(u32, u32, f64)],
        used: &mut BTreeSet<u32>,
        cur: &mut Vec<(u32, u32)>,
        weight: f64,
        all: &mut Vec<(f64, Vec<(u32, u32)>)>,
    ) {
        if k == lefts.len() {
            let mut m = cur.clone();
            m.sort();
            all.push((weight, m));
            return;
        }
        rec(k + 1, lefts, edges, used, cur, weight, all);
        for &(l, r, w) in edges {
            if l == lefts[k] && !used.contains(&r) {
                used.insert(r);
                cur.push((l, r));
                rec(k + 1, lefts, edges, used, cur, weight + w, all);
                cur.pop();
                used.remove(&r);
            }
        }
    }
    rec(
        0,
        &lefts,
        edges,
        &mut BTreeSet::new(),
        &mut Vec::new(),
        0.0,
        &mut all,
    );
    let best = all.iter().map(|(w, _)| *w).fold(0.0, f64::max);
    let chosen = all
        .into_iter()
        .filter(|(w, _)| *w >= best - tol)
        .map(|(_, m)| m)
        .min()
        .unwrap_or_default();
    (best, chosen)
}
