//! Score ↔ token sequence conversion.
//!
//! A [`Tokenizer`] pairs a [`Scheme`] with its base [`Vocabulary`]. It
//! encodes preprocessed scores, decodes id sequences with skip-and-continue
//! recovery and exposes the grammar that drives both directions.

pub mod grammar;
mod scheme;
mod vocab;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grammar::{GrammarState, NextTokens, Scan, SyntaxError};
pub use scheme::{NoteLayout, Scheme, SchemeKind, TimeModel};
pub use vocab::{
    build_vocabulary, is_special, token_text, Beats, TokenDescriptor, TokenType, TokenValue,
    Vocabulary, BOS_ID, EOS_ID, MASK_ID, PAD_ID, SEP_ID, SPECIAL_COUNT,
};

use crate::score::{ConfigError, Note, PreprocessConfig, ProgramKey, Score, Tick, Track};

/// Default nnof threshold in beats.
pub const DEFAULT_MAX_NOTE_BEATS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("vocabulary does not fit scheme {scheme}: {reason}")]
    VocabularyMismatch { scheme: Scheme, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("score has {found} ticks per beat, tokenizer expects {expected}; preprocess it first")]
    WrongResolution { expected: u64, found: u16 },
    #[error("note {note:?} is not representable: {reason}")]
    OffGrid { note: Note, reason: String },
    #[error("program {0:?} appears on more than one track")]
    DuplicateProgram(ProgramKey),
    #[error("unknown token id {id} at index {index}")]
    UnknownId { index: usize, id: u32 },
}

/// Token ids produced under one scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub scheme: Scheme,
    pub ids: Vec<u32>,
}

impl TokenSequence {
    pub fn new(scheme: Scheme, ids: Vec<u32>) -> Self {
        Self { scheme, ids }
    }

    /// Concatenates framed sequences into one id stream.
    pub fn concat(scheme: Scheme, seqs: &[TokenSequence]) -> Self {
        Self {
            scheme,
            ids: seqs.iter().flat_map(|s| s.ids.iter().copied()).collect(),
        }
    }
}

/// Decoded meaning of a base token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Tok {
    Special(TokenType),
    Bar,
    Position(u32),
    Program(ProgramKey),
    Pitch(u8),
    Velocity(u8),
    Duration(Tick),
    TimeShift(Tick),
    NoteOn(u8),
    NoteOff(u8),
    PV(u8, u8),
    Pvd(u8, u8, Tick),
    Bpe,
}

impl Tok {
    pub(crate) fn kind(&self) -> TokenType {
        match self {
            Tok::Special(t) => *t,
            Tok::Bar => TokenType::Bar,
            Tok::Position(_) => TokenType::Position,
            Tok::Program(_) => TokenType::Program,
            Tok::Pitch(_) => TokenType::Pitch,
            Tok::Velocity(_) => TokenType::Velocity,
            Tok::Duration(_) => TokenType::Duration,
            Tok::TimeShift(_) => TokenType::TimeShift,
            Tok::NoteOn(_) => TokenType::NoteOn,
            Tok::NoteOff(_) => TokenType::NoteOff,
            Tok::PV(..) | Tok::Pvd(..) => TokenType::Merged,
            Tok::Bpe => TokenType::Bpe,
        }
    }
}

/// Problems met while decoding; erroneous tokens are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Tokens rejected by the grammar.
    pub skipped_tokens: usize,
    /// Notes dropped because they were never completed.
    pub dropped_notes: usize,
}

impl Diagnostics {
    pub fn total(&self) -> usize {
        self.skipped_tokens + self.dropped_notes
    }
}

/// Encoder/decoder for one scheme over one base vocabulary.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    scheme: Scheme,
    vocab: Vocabulary,
    toks: Vec<Tok>,
    lookup: HashMap<Tok, u32>,
    resolution: u64,
    positions_per_bar: u32,
    pitch_count: usize,
    programs: Vec<ProgramKey>,
    /// TimeShift lengths, descending.
    shifts: Vec<Tick>,
    max_note_ticks: Tick,
}

impl Tokenizer {
    /// Tokenizer over the vocabulary built from `config`.
    pub fn new(scheme: Scheme, config: &PreprocessConfig) -> Result<Self, TokenizeError> {
        config.validate()?;
        Self::from_vocabulary(scheme, build_vocabulary(scheme, config))
    }

    /// Tokenizer over an existing base vocabulary. The grid resolution and
    /// bar subdivision are recovered from the vocabulary's tokens.
    pub fn from_vocabulary(scheme: Scheme, vocab: Vocabulary) -> Result<Self, TokenizeError> {
        let mismatch = |reason: String| TokenizeError::VocabularyMismatch { scheme, reason };

        let mut positions_per_bar = 0u32;
        let mut dens: Vec<u64> = Vec::new();
        for d in vocab.entries() {
            collect_denominators(&d.value, &mut dens);
            if d.kind == TokenType::Position {
                positions_per_bar += 1;
            }
        }
        let mut resolution = 1u64;
        for den in dens {
            resolution = lcm(resolution, den);
        }
        if positions_per_bar > 0 {
            let ppb = u64::from(positions_per_bar);
            resolution = lcm(resolution, ppb / gcd(ppb, 4));
        }

        let mut toks = Vec::with_capacity(vocab.len());
        let mut lookup = HashMap::with_capacity(vocab.len());
        let mut pitches = BTreeSet::new();
        let mut programs = Vec::new();
        let mut shifts = Vec::new();
        for d in vocab.entries() {
            let tok = to_tok(d, resolution).map_err(|r| mismatch(format!("{}: {r}", d.text)))?;
            match tok {
                Tok::Position(p) if p >= positions_per_bar => {
                    return Err(mismatch(format!("position {p} out of range")))
                }
                Tok::Pitch(p) | Tok::NoteOn(p) | Tok::PV(p, _) | Tok::Pvd(p, _, _) => {
                    pitches.insert(p);
                }
                Tok::Program(k) => programs.push(k),
                Tok::TimeShift(t) => shifts.push(t),
                Tok::Bpe => return Err(mismatch("learned tokens in a base vocabulary".into())),
                _ => {}
            }
            lookup.insert(tok, d.id);
            toks.push(tok);
        }
        shifts.sort_unstable_by(|a, b| b.cmp(a));

        let has = |k: TokenType| vocab.count_of(k) > 0;
        let mut required: Vec<TokenType> = match scheme.time_model() {
            TimeModel::BarPosition => vec![TokenType::Bar, TokenType::Position],
            TimeModel::TimeShift => vec![TokenType::TimeShift],
        };
        required.extend(match scheme.note_layout() {
            NoteLayout::Separate => {
                vec![TokenType::Pitch, TokenType::Velocity, TokenType::Duration]
            }
            NoteLayout::PitchVelocity => vec![TokenType::Merged, TokenType::Duration],
            NoteLayout::PitchVelocityDuration => vec![TokenType::Merged],
            NoteLayout::NoteOnOff => {
                vec![TokenType::NoteOn, TokenType::NoteOff, TokenType::Velocity]
            }
        });
        if scheme.use_programs {
            required.push(TokenType::Program);
        }
        for kind in required {
            if !has(kind) {
                return Err(mismatch(format!("no {} tokens", kind.name())));
            }
        }
        if !scheme.use_programs && has(TokenType::Program) {
            return Err(mismatch("Program tokens without program mode".into()));
        }
        if positions_per_bar > 0 && !(4 * resolution).is_multiple_of(u64::from(positions_per_bar)) {
            return Err(mismatch("positions do not divide the bar".into()));
        }

        Ok(Self {
            scheme,
            vocab,
            toks,
            lookup,
            resolution,
            positions_per_bar,
            pitch_count: pitches.len(),
            programs,
            shifts,
            max_note_ticks: DEFAULT_MAX_NOTE_BEATS * resolution,
        })
    }

    /// Sets the note length in beats above which a NoteOff counts as nnof.
    pub fn with_max_note_beats(mut self, beats: u64) -> Self {
        self.max_note_ticks = beats * self.resolution;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Ticks per beat of the scores this tokenizer reads and writes.
    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn positions_per_bar(&self) -> u32 {
        self.positions_per_bar
    }

    pub(crate) fn bar_ticks(&self) -> Tick {
        4 * self.resolution
    }

    pub(crate) fn position_ticks(&self) -> Tick {
        match self.positions_per_bar {
            0 => 1,
            ppb => self.bar_ticks() / u64::from(ppb),
        }
    }

    pub(crate) fn tok(&self, id: u32, index: usize) -> Result<Tok, TokenizeError> {
        self.toks
            .get(id as usize)
            .copied()
            .ok_or(TokenizeError::UnknownId { index, id })
    }

    fn id(&self, tok: Tok, note: &Note) -> Result<u32, TokenizeError> {
        self.lookup
            .get(&tok)
            .copied()
            .ok_or_else(|| TokenizeError::OffGrid {
                note: *note,
                reason: format!("no token for {tok:?}"),
            })
    }

    /// Encodes a preprocessed score.
    ///
    /// Without program mode each track gives one framed sequence (a score
    /// without tracks gives a single empty one). In program mode all tracks
    /// are interleaved into one sequence.
    pub fn tokenize(&self, score: &Score) -> Result<Vec<TokenSequence>, TokenizeError> {
        if u64::from(score.ticks_per_beat) != self.resolution {
            return Err(TokenizeError::WrongResolution {
                expected: self.resolution,
                found: score.ticks_per_beat,
            });
        }
        let streams: Vec<Vec<(Option<ProgramKey>, Note)>> = if self.scheme.use_programs {
            let mut seen = BTreeSet::new();
            for t in &score.tracks {
                if !seen.insert(t.key()) {
                    return Err(TokenizeError::DuplicateProgram(t.key()));
                }
            }
            let notes = score
                .tracks
                .iter()
                .flat_map(|t| t.notes.iter().map(move |n| (Some(t.key()), *n)))
                .collect();
            vec![notes]
        } else if score.tracks.is_empty() {
            vec![Vec::new()]
        } else {
            score
                .tracks
                .iter()
                .map(|t| t.notes.iter().map(|n| (None, *n)).collect())
                .collect()
        };
        streams
            .into_iter()
            .map(|notes| {
                self.encode_stream(notes)
                    .map(|ids| TokenSequence::new(self.scheme, ids))
            })
            .collect()
    }

    /// [`Self::tokenize`] with all sequences concatenated.
    pub fn tokenize_flat(&self, score: &Score) -> Result<TokenSequence, TokenizeError> {
        Ok(TokenSequence::concat(self.scheme, &self.tokenize(score)?))
    }

    fn encode_stream(
        &self,
        mut notes: Vec<(Option<ProgramKey>, Note)>,
    ) -> Result<Vec<u32>, TokenizeError> {
        notes.sort_by_key(|(k, n)| (n.onset, *k, n.pitch, n.duration, n.velocity));
        for w in notes.windows(2) {
            if (w[0].0, w[0].1.onset, w[0].1.pitch) == (w[1].0, w[1].1.onset, w[1].1.pitch) {
                return Err(TokenizeError::OffGrid {
                    note: w[1].1,
                    reason: "duplicate note at the same onset".into(),
                });
            }
        }
        let mut ids = vec![BOS_ID];
        if self.scheme.note_layout() == NoteLayout::NoteOnOff {
            self.encode_note_on_off(&notes, &mut ids)?;
        } else {
            match self.scheme.time_model() {
                TimeModel::BarPosition => self.encode_bar_position(&notes, &mut ids)?,
                TimeModel::TimeShift => self.encode_time_shift(&notes, &mut ids)?,
            }
        }
        ids.push(EOS_ID);
        Ok(ids)
    }

    fn push_program(
        &self,
        key: Option<ProgramKey>,
        note: &Note,
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        if let Some(k) = key {
            ids.push(self.id(Tok::Program(k), note)?);
        }
        Ok(())
    }

    fn push_note(
        &self,
        key: Option<ProgramKey>,
        n: &Note,
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        self.push_program(key, n, ids)?;
        match self.scheme.note_layout() {
            NoteLayout::Separate => {
                ids.push(self.id(Tok::Pitch(n.pitch), n)?);
                ids.push(self.id(Tok::Velocity(n.velocity), n)?);
                ids.push(self.id(Tok::Duration(n.duration), n)?);
            }
            NoteLayout::PitchVelocity => {
                ids.push(self.id(Tok::PV(n.pitch, n.velocity), n)?);
                ids.push(self.id(Tok::Duration(n.duration), n)?);
            }
            NoteLayout::PitchVelocityDuration => {
                ids.push(self.id(Tok::Pvd(n.pitch, n.velocity, n.duration), n)?);
            }
            NoteLayout::NoteOnOff => unreachable!("NoteOn/NoteOff notes are encoded as events"),
        }
        Ok(())
    }

    fn push_shift(
        &self,
        mut gap: Tick,
        note: &Note,
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        while gap > 0 {
            let Some(&step) = self.shifts.iter().find(|&&s| s <= gap) else {
                return Err(TokenizeError::OffGrid {
                    note: *note,
                    reason: format!("time gap of {gap} ticks is not a sum of time shifts"),
                });
            };
            ids.push(self.id(Tok::TimeShift(step), note)?);
            gap -= step;
        }
        Ok(())
    }

    fn encode_time_shift(
        &self,
        notes: &[(Option<ProgramKey>, Note)],
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        let mut time = 0;
        for (key, n) in notes {
            self.push_shift(n.onset - time, n, ids)?;
            time = n.onset;
            self.push_note(*key, n, ids)?;
        }
        Ok(())
    }

    fn encode_bar_position(
        &self,
        notes: &[(Option<ProgramKey>, Note)],
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        let bar_ticks = self.bar_ticks();
        let unit = self.position_ticks();
        let bar_id = self.lookup[&Tok::Bar];
        let mut bars_emitted = 0u64;
        let mut position = None;
        for (key, n) in notes {
            if n.onset % unit != 0 {
                return Err(TokenizeError::OffGrid {
                    note: *n,
                    reason: format!("onset is not a multiple of {unit} ticks"),
                });
            }
            let bar = n.onset / bar_ticks;
            while bars_emitted <= bar {
                ids.push(bar_id);
                bars_emitted += 1;
                position = None;
            }
            let pos = ((n.onset % bar_ticks) / unit) as u32;
            if position != Some(pos) {
                ids.push(self.id(Tok::Position(pos), n)?);
                position = Some(pos);
            }
            self.push_note(*key, n, ids)?;
        }
        Ok(())
    }

    fn encode_note_on_off(
        &self,
        notes: &[(Option<ProgramKey>, Note)],
        ids: &mut Vec<u32>,
    ) -> Result<(), TokenizeError> {
        let mut last_offset: BTreeMap<(Option<ProgramKey>, u8), Tick> = BTreeMap::new();
        // (time, off before on, key, pitch, note)
        let mut events = Vec::with_capacity(notes.len() * 2);
        for (key, n) in notes {
            if let Some(&off) = last_offset.get(&(*key, n.pitch)) {
                if n.onset < off {
                    return Err(TokenizeError::OffGrid {
                        note: *n,
                        reason: "overlaps an earlier note of the same pitch".into(),
                    });
                }
            }
            last_offset.insert((*key, n.pitch), n.offset());
            events.push((n.offset(), 0u8, *key, n.pitch, *n));
            events.push((n.onset, 1u8, *key, n.pitch, *n));
        }
        events.sort_by_key(|e| (e.0, e.1, e.2, e.3));
        let mut time = 0;
        for (t, class, key, pitch, n) in events {
            self.push_shift(t - time, &n, ids)?;
            time = t;
            self.push_program(key, &n, ids)?;
            if class == 0 {
                ids.push(self.id(Tok::NoteOff(pitch), &n)?);
            } else {
                ids.push(self.id(Tok::NoteOn(pitch), &n)?);
                ids.push(self.id(Tok::Velocity(n.velocity), &n)?);
            }
        }
        Ok(())
    }

    /// Decodes base-token ids into a score at [`Self::resolution`] ticks per
    /// beat.
    ///
    /// BOS starts a new segment. Without program mode every segment becomes
    /// one program-0 track; in program mode notes are grouped by program.
    pub fn detokenize(&self, ids: &[u32]) -> Result<(Score, Diagnostics), TokenizeError> {
        let scan = self.scan(ids)?;
        let diagnostics = Diagnostics {
            skipped_tokens: scan.verdicts.iter().filter(|v| v.is_some()).count(),
            dropped_notes: scan.incomplete + scan.unclosed.len(),
        };
        let mut score = Score::new(self.resolution as u16);
        if self.scheme.use_programs {
            let mut by_key: BTreeMap<ProgramKey, Vec<Note>> = BTreeMap::new();
            for (key, note) in scan.segments.into_iter().flatten() {
                if let Some(k) = key {
                    by_key.entry(k).or_default().push(note);
                }
            }
            for (key, notes) in by_key {
                let mut track = match key {
                    ProgramKey::Program(p) => Track::new(p, false),
                    ProgramKey::Drums => Track::new(0, true),
                };
                track.notes = notes;
                track.sort_notes();
                score.tracks.push(track);
            }
        } else {
            for segment in scan.segments {
                let mut track = Track::new(0, false);
                track.notes = segment.into_iter().map(|(_, n)| n).collect();
                track.sort_notes();
                score.tracks.push(track);
            }
        }
        Ok((score, diagnostics))
    }
}

fn to_tok(d: &TokenDescriptor, resolution: u64) -> Result<Tok, String> {
    let int = |v: &TokenValue| match v {
        TokenValue::Int(i) => Ok(*i),
        other => Err(format!("expected an integer, found {other:?}")),
    };
    let small = |v: &TokenValue, max: i64| -> Result<u8, String> {
        let i = int(v)?;
        if (0..=max).contains(&i) {
            Ok(i as u8)
        } else {
            Err(format!("value {i} out of range"))
        }
    };
    let ticks = |v: &TokenValue| match v {
        TokenValue::Beats(b) => b
            .to_ticks(resolution)
            .filter(|&t| t > 0)
            .ok_or_else(|| format!("{b} beats is not a positive tick count")),
        other => Err(format!("expected beats, found {other:?}")),
    };
    Ok(match d.kind {
        k if k.is_special() => Tok::Special(k),
        TokenType::Bar => Tok::Bar,
        TokenType::Position => Tok::Position(
            u32::try_from(int(&d.value)?).map_err(|_| "negative position".to_string())?,
        ),
        TokenType::Pitch => Tok::Pitch(small(&d.value, 127)?),
        TokenType::Velocity => Tok::Velocity(small(&d.value, 127)?),
        TokenType::NoteOn => Tok::NoteOn(small(&d.value, 127)?),
        TokenType::NoteOff => Tok::NoteOff(small(&d.value, 127)?),
        TokenType::Duration => Tok::Duration(ticks(&d.value)?),
        TokenType::TimeShift => Tok::TimeShift(ticks(&d.value)?),
        TokenType::Program => match int(&d.value)? {
            -1 => Tok::Program(ProgramKey::Drums),
            _ => Tok::Program(ProgramKey::Program(small(&d.value, 127)?)),
        },
        TokenType::Merged => {
            let TokenValue::Parts(parts) = &d.value else {
                return Err("merged token without parts".into());
            };
            match parts.as_slice() {
                [(TokenType::Pitch, p), (TokenType::Velocity, v)] => {
                    Tok::PV(small(p, 127)?, small(v, 127)?)
                }
                [(TokenType::Pitch, p), (TokenType::Velocity, v), (TokenType::Duration, dur)] => {
                    Tok::Pvd(small(p, 127)?, small(v, 127)?, ticks(dur)?)
                }
                _ => return Err("unsupported merged token layout".into()),
            }
        }
        TokenType::Bpe => Tok::Bpe,
        _ => unreachable!("special types handled above"),
    })
}

fn collect_denominators(value: &TokenValue, out: &mut Vec<u64>) {
    match value {
        TokenValue::Beats(b) => out.push(b.den),
        TokenValue::Parts(parts) => {
            for (_, v) in parts {
                collect_denominators(v, out);
            }
        }
        _ => {}
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
