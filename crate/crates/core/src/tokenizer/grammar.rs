//! Grammar state machine shared by decoding, syntax-error scoring and the
//! valid-next-token mask.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::scheme::{NoteLayout, TimeModel};
use super::vocab::TokenType;
use super::{Tok, TokenizeError, Tokenizer};
use crate::score::{Note, ProgramKey, Tick};

/// Tokenization syntax error categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntaxError {
    /// Token type not allowed after the previous one.
    Type,
    /// Time moves backward (Position not after the current one).
    Time,
    /// Note already started at the current time.
    #[serde(rename = "dupn")]
    DuplicateNote,
    /// NoteOn never closed, or closed too late.
    #[serde(rename = "nnof")]
    NoNoteOff,
    /// NoteOff without a matching sounding note.
    #[serde(rename = "nnon")]
    NoNoteOn,
}

impl SyntaxError {
    pub const ALL: [SyntaxError; 5] = [
        SyntaxError::Type,
        SyntaxError::Time,
        SyntaxError::DuplicateNote,
        SyntaxError::NoNoteOff,
        SyntaxError::NoNoteOn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntaxError::Type => "type",
            SyntaxError::Time => "time",
            SyntaxError::DuplicateNote => "dupn",
            SyntaxError::NoNoteOff => "nnof",
            SyntaxError::NoNoteOn => "nnon",
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Phase {
    #[default]
    Start,
    AfterBar,
    AfterPosition,
    AfterTimeShift,
    NoteDone,
    AfterProgram,
    AfterPitch,
    AfterVelocity,
    AfterPitchVelocity,
    AfterNoteOn,
}

type Key = (Option<ProgramKey>, u8);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Open {
    onset: Tick,
    velocity: u8,
    index: usize,
}

/// Decoder state between two tokens of one segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarState {
    phase: Phase,
    time: Tick,
    bar: Option<u64>,
    position: Option<u32>,
    program: Option<ProgramKey>,
    pitch: u8,
    velocity: u8,
    start: usize,
    onsets_now: BTreeSet<Key>,
    sounding: BTreeMap<Key, VecDeque<Open>>,
}

impl GrammarState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current time in ticks at the tokenizer resolution.
    pub fn time(&self) -> Tick {
        self.time
    }

    /// Position within the current bar, if one was given since the last Bar.
    pub fn position(&self) -> Option<u32> {
        self.position
    }

    /// Whether a note is partially specified.
    pub fn note_pending(&self) -> bool {
        matches!(
            self.phase,
            Phase::AfterProgram
                | Phase::AfterPitch
                | Phase::AfterVelocity
                | Phase::AfterPitchVelocity
                | Phase::AfterNoteOn
        )
    }

    /// Number of NoteOn events still waiting for their NoteOff.
    pub fn sounding_count(&self) -> usize {
        self.sounding.values().map(VecDeque::len).sum()
    }

    fn context_key(&self) -> Option<ProgramKey> {
        match self.phase {
            Phase::AfterProgram => self.program,
            _ => None,
        }
    }

    fn releasable(&self, key: Option<ProgramKey>) -> BTreeSet<u8> {
        self.sounding
            .iter()
            .filter(|((k, _), q)| *k == key && q.front().is_some_and(|o| o.onset < self.time))
            .map(|((_, p), _)| *p)
            .collect()
    }

    fn blocked_pitches(&self, key: Option<ProgramKey>) -> BTreeSet<u8> {
        self.onsets_now
            .iter()
            .filter(|(k, _)| *k == key)
            .map(|(_, p)| *p)
            .collect()
    }

    fn new_time(&mut self) {
        self.onsets_now.clear();
    }
}

/// What a token did to the decoder state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Effect {
    None,
    /// A complete note. `start` is the index of its first token.
    Note {
        key: Option<ProgramKey>,
        note: Note,
        start: usize,
    },
}

/// Tokens that may follow a given state without creating a type, time,
/// dupn or nnon error.
///
/// `types` only lists types with at least one admissible value; value
/// constraints on those types are given by the remaining fields.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NextTokens {
    pub types: BTreeSet<TokenType>,
    /// Smallest admissible Position value.
    pub min_position: u32,
    /// Pitches excluded for Pitch, Merged and NoteOn tokens.
    pub blocked_pitches: BTreeSet<u8>,
    /// Pitches admissible for NoteOff.
    pub releasable: BTreeSet<u8>,
    /// Programs excluded because every note they could start is a duplicate.
    pub blocked_programs: BTreeSet<ProgramKey>,
}

/// Result of running the grammar over a whole id sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scan {
    /// Per-token verdict; `None` for accepted and special tokens.
    pub verdicts: Vec<Option<SyntaxError>>,
    /// Decoded notes per segment.
    pub segments: Vec<Vec<(Option<ProgramKey>, Note)>>,
    /// Notes left partially specified at the end of a segment.
    pub incomplete: usize,
    /// Indices of NoteOn tokens never closed by a NoteOff.
    pub unclosed: Vec<usize>,
    /// Indices of NoteOn tokens closed after more than the nnof threshold.
    pub overlong: Vec<usize>,
}

impl Tokenizer {
    fn note_start_types(&self) -> &'static [TokenType] {
        match self.scheme.note_layout() {
            NoteLayout::Separate => &[TokenType::Pitch],
            NoteLayout::PitchVelocity | NoteLayout::PitchVelocityDuration => &[TokenType::Merged],
            NoteLayout::NoteOnOff => &[TokenType::NoteOn, TokenType::NoteOff],
        }
    }

    /// Types allowed by the phase alone, ignoring value constraints.
    pub(crate) fn phase_types(&self, st: &GrammarState) -> Vec<TokenType> {
        let starts: Vec<TokenType> = if self.scheme.use_programs {
            vec![TokenType::Program]
        } else {
            self.note_start_types().to_vec()
        };
        let remi = self.scheme.time_model() == TimeModel::BarPosition;
        let mut out = match st.phase {
            Phase::Start if remi => vec![TokenType::Bar],
            Phase::Start | Phase::AfterTimeShift => {
                let mut v = vec![TokenType::TimeShift];
                v.extend(starts);
                v
            }
            Phase::AfterBar => vec![TokenType::Bar, TokenType::Position],
            Phase::AfterPosition => starts,
            Phase::NoteDone => {
                let mut v = if remi {
                    vec![TokenType::Bar, TokenType::Position]
                } else {
                    vec![TokenType::TimeShift]
                };
                v.extend(starts);
                v
            }
            Phase::AfterProgram => self.note_start_types().to_vec(),
            Phase::AfterPitch | Phase::AfterNoteOn => vec![TokenType::Velocity],
            Phase::AfterVelocity | Phase::AfterPitchVelocity => vec![TokenType::Duration],
        };
        out.sort();
        out
    }

    fn program_blocked(&self, st: &GrammarState, key: ProgramKey) -> bool {
        let started = st.blocked_pitches(Some(key)).len();
        if started < self.pitch_count {
            return false;
        }
        self.scheme.note_layout() != NoteLayout::NoteOnOff || st.releasable(Some(key)).is_empty()
    }

    /// Classifies `tok` against `st` without changing it.
    pub(crate) fn check(&self, st: &GrammarState, tok: &Tok) -> Result<(), SyntaxError> {
        let kind = tok.kind();
        if !self.phase_types(st).contains(&kind) {
            return Err(SyntaxError::Type);
        }
        let key = st.context_key();
        match *tok {
            Tok::Position(p) => {
                if st.position.is_some_and(|cur| p <= cur) {
                    return Err(SyntaxError::Time);
                }
            }
            Tok::Program(k) => {
                if self.program_blocked(st, k) {
                    return Err(SyntaxError::DuplicateNote);
                }
            }
            Tok::Pitch(p) | Tok::PV(p, _) | Tok::Pvd(p, _, _) | Tok::NoteOn(p) => {
                if st.onsets_now.contains(&(key, p)) {
                    return Err(SyntaxError::DuplicateNote);
                }
            }
            Tok::NoteOff(p) => {
                let ok = st
                    .sounding
                    .get(&(key, p))
                    .and_then(VecDeque::front)
                    .is_some_and(|o| o.onset < st.time);
                if !ok {
                    return Err(SyntaxError::NoNoteOn);
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies an accepted token.
    pub(crate) fn apply(&self, st: &mut GrammarState, tok: &Tok, index: usize) -> Effect {
        let key = st.context_key();
        let mut effect = Effect::None;
        match *tok {
            Tok::Special(_) | Tok::Bpe => {}
            Tok::Bar => {
                let bar = st.bar.map_or(0, |b| b + 1);
                st.bar = Some(bar);
                st.position = None;
                st.time = bar * self.bar_ticks();
                st.new_time();
                st.phase = Phase::AfterBar;
            }
            Tok::Position(p) => {
                st.position = Some(p);
                st.time =
                    st.bar.unwrap_or(0) * self.bar_ticks() + u64::from(p) * self.position_ticks();
                st.new_time();
                st.phase = Phase::AfterPosition;
            }
            Tok::TimeShift(d) => {
                st.time = st.time.saturating_add(d);
                st.new_time();
                st.phase = Phase::AfterTimeShift;
            }
            Tok::Program(k) => {
                st.program = Some(k);
                st.start = index;
                st.phase = Phase::AfterProgram;
            }
            Tok::Pitch(p) => {
                st.onsets_now.insert((key, p));
                if key.is_none() {
                    st.start = index;
                }
                st.pitch = p;
                st.phase = Phase::AfterPitch;
                st.program = key;
            }
            Tok::NoteOn(p) => {
                st.onsets_now.insert((key, p));
                if key.is_none() {
                    st.start = index;
                }
                st.pitch = p;
                st.phase = Phase::AfterNoteOn;
                st.program = key;
            }
            Tok::PV(p, v) => {
                st.onsets_now.insert((key, p));
                if key.is_none() {
                    st.start = index;
                }
                st.pitch = p;
                st.velocity = v;
                st.phase = Phase::AfterPitchVelocity;
                st.program = key;
            }
            Tok::Velocity(v) => match st.phase {
                Phase::AfterNoteOn => {
                    st.sounding
                        .entry((st.program, st.pitch))
                        .or_default()
                        .push_back(Open {
                            onset: st.time,
                            velocity: v,
                            index: st.start,
                        });
                    st.phase = Phase::NoteDone;
                }
                _ => {
                    st.velocity = v;
                    st.phase = Phase::AfterVelocity;
                }
            },
            Tok::Duration(d) => {
                effect = Effect::Note {
                    key: st.program,
                    note: Note::new(st.time, d, st.pitch, st.velocity),
                    start: st.start,
                };
                st.phase = Phase::NoteDone;
            }
            Tok::Pvd(p, v, d) => {
                st.onsets_now.insert((key, p));
                if key.is_none() {
                    st.start = index;
                }
                effect = Effect::Note {
                    key,
                    note: Note::new(st.time, d, p, v),
                    start: st.start,
                };
                st.phase = Phase::NoteDone;
            }
            Tok::NoteOff(p) => {
                let k = (key, p);
                if let Some(q) = st.sounding.get_mut(&k) {
                    if let Some(open) = q.pop_front() {
                        effect = Effect::Note {
                            key,
                            note: Note::new(open.onset, st.time - open.onset, p, open.velocity),
                            start: open.index,
                        };
                    }
                    if q.is_empty() {
                        st.sounding.remove(&k);
                    }
                }
                st.phase = Phase::NoteDone;
            }
        }
        effect
    }

    /// Classifies and, if accepted, applies `id`.
    pub fn advance(
        &self,
        st: &mut GrammarState,
        id: u32,
    ) -> Result<Result<(), SyntaxError>, TokenizeError> {
        let tok = self.tok(id, 0)?;
        if let Tok::Special(_) = tok {
            return Ok(Ok(()));
        }
        let verdict = self.check(st, &tok);
        if verdict.is_ok() {
            self.apply(st, &tok, 0);
        }
        Ok(verdict)
    }

    /// Syntax error that appending `id` to a sequence in state `st` would
    /// create, if any. Special tokens are never classified.
    pub fn classify(
        &self,
        st: &GrammarState,
        id: u32,
    ) -> Result<Option<SyntaxError>, TokenizeError> {
        let tok = self.tok(id, 0)?;
        if let Tok::Special(_) = tok {
            return Ok(None);
        }
        Ok(self.check(st, &tok).err())
    }

    /// Tokens admissible after `st`.
    pub fn valid_next(&self, st: &GrammarState) -> NextTokens {
        let key = st.context_key();
        let mut next = NextTokens {
            min_position: st.position.map_or(0, |p| p + 1),
            blocked_pitches: st.blocked_pitches(key),
            releasable: st.releasable(key),
            blocked_programs: self
                .programs
                .iter()
                .copied()
                .filter(|&k| self.program_blocked(st, k))
                .collect(),
            ..NextTokens::default()
        };
        for kind in self.phase_types(st) {
            let any = match kind {
                TokenType::Position => next.min_position < self.positions_per_bar,
                TokenType::Pitch | TokenType::Merged | TokenType::NoteOn => {
                    next.blocked_pitches.len() < self.pitch_count
                }
                TokenType::NoteOff => !next.releasable.is_empty(),
                TokenType::Program => next.blocked_programs.len() < self.programs.len(),
                _ => true,
            };
            if any {
                next.types.insert(kind);
            }
        }
        next
    }

    /// Whether `id` satisfies `next`.
    pub fn allows(&self, next: &NextTokens, id: u32) -> bool {
        let Some(tok) = self.toks.get(id as usize) else {
            return false;
        };
        if !next.types.contains(&tok.kind()) {
            return false;
        }
        match *tok {
            Tok::Position(p) => p >= next.min_position,
            Tok::Pitch(p) | Tok::PV(p, _) | Tok::Pvd(p, _, _) | Tok::NoteOn(p) => {
                !next.blocked_pitches.contains(&p)
            }
            Tok::NoteOff(p) => next.releasable.contains(&p),
            Tok::Program(k) => !next.blocked_programs.contains(&k),
            _ => true,
        }
    }

    /// Ids of every non-special token admissible after `st`.
    pub fn valid_next_ids(&self, st: &GrammarState) -> Vec<u32> {
        let next = self.valid_next(st);
        (0..self.toks.len() as u32)
            .filter(|&id| self.allows(&next, id))
            .collect()
    }

    /// Runs the grammar over `ids` with skip-and-continue recovery.
    ///
    /// BOS and EOS close the current segment and reset the state; other
    /// special tokens are ignored. Erroneous tokens are skipped.
    pub fn scan(&self, ids: &[u32]) -> Result<Scan, TokenizeError> {
        let mut scan = Scan {
            verdicts: vec![None; ids.len()],
            ..Scan::default()
        };
        let mut st = GrammarState::new();
        let mut open = false;
        let mut notes = Vec::new();
        for (i, &id) in ids.iter().enumerate() {
            let tok = self.tok(id, i)?;
            match tok {
                Tok::Special(TokenType::Bos) | Tok::Special(TokenType::Eos) => {
                    if open {
                        self.close_segment(&mut scan, &mut st, &mut notes);
                    }
                    open = tok == Tok::Special(TokenType::Bos);
                    continue;
                }
                Tok::Special(_) => continue,
                _ => {}
            }
            open = true;
            match self.check(&st, &tok) {
                Ok(()) => {
                    if let Effect::Note { key, note, start } = self.apply(&mut st, &tok, i) {
                        if note.duration > self.max_note_ticks
                            && self.scheme.note_layout() == NoteLayout::NoteOnOff
                        {
                            scan.overlong.push(start);
                        }
                        notes.push((key, note));
                    }
                }
                Err(e) => scan.verdicts[i] = Some(e),
            }
        }
        if open {
            self.close_segment(&mut scan, &mut st, &mut notes);
        }
        Ok(scan)
    }

    fn close_segment(
        &self,
        scan: &mut Scan,
        st: &mut GrammarState,
        notes: &mut Vec<(Option<ProgramKey>, Note)>,
    ) {
        if st.note_pending() {
            scan.incomplete += 1;
        }
        for q in st.sounding.values() {
            scan.unclosed.extend(q.iter().map(|o| o.index));
        }
        scan.segments.push(std::mem::take(notes));
        *st = GrammarState::new();
    }
}
