//! In-memory musical content and its preprocessing.
//!
//! A [`Score`] is a tick-resolved set of tracks plus tempo and time-signature
//! maps. [`Preprocessor`] snaps a score onto the discrete grids the
//! tokenizers work with; [`simultaneous_note_ratio`] measures how often notes
//! share onset, offset and velocity.

mod preprocess;
mod stats;

pub use preprocess::{ConfigError, PreprocessConfig, Preprocessor};
pub use stats::{simultaneous_note_ratio, StatsError};

use serde::{Deserialize, Serialize};

/// Absolute time in MIDI ticks.
pub type Tick = u64;

/// MIDI channel (zero-based) reserved for percussion.
pub const DRUM_CHANNEL: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Note {
    pub onset: Tick,
    pub duration: Tick,
    pub pitch: u8,
    pub velocity: u8,
}

impl Note {
    pub fn new(onset: Tick, duration: Tick, pitch: u8, velocity: u8) -> Self {
        Self {
            onset,
            duration,
            pitch,
            velocity,
        }
    }

    pub fn offset(&self) -> Tick {
        self.onset + self.duration
    }
}

/// Instrument identity of a track. Drum tracks ignore their program number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProgramKey {
    Program(u8),
    Drums,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub program: u8,
    pub is_drum: bool,
    pub notes: Vec<Note>,
}

impl Track {
    pub fn new(program: u8, is_drum: bool) -> Self {
        Self {
            program,
            is_drum,
            notes: Vec::new(),
        }
    }

    pub fn key(&self) -> ProgramKey {
        if self.is_drum {
            ProgramKey::Drums
        } else {
            ProgramKey::Program(self.program)
        }
    }

    /// Sorts notes by onset, then pitch, then duration and velocity.
    pub fn sort_notes(&mut self) {
        self.notes
            .sort_by_key(|n| (n.onset, n.pitch, n.duration, n.velocity));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSignature {
    pub tick: Tick,
    pub numerator: u8,
    pub denominator: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tempo {
    pub tick: Tick,
    /// Microseconds per quarter note.
    pub micros_per_beat: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub ticks_per_beat: u16,
    pub tracks: Vec<Track>,
    pub time_signatures: Vec<TimeSignature>,
    pub tempos: Vec<Tempo>,
}

impl Score {
    /// An empty score in 4/4 with no tracks.
    pub fn new(ticks_per_beat: u16) -> Self {
        Self {
            ticks_per_beat,
            tracks: Vec::new(),
            time_signatures: vec![TimeSignature {
                tick: 0,
                numerator: 4,
                denominator: 4,
            }],
            tempos: Vec::new(),
        }
    }

    pub fn note_count(&self) -> usize {
        self.tracks.iter().map(|t| t.notes.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.note_count() == 0
    }

    /// Largest note offset, or 0 for a score without notes.
    pub fn max_tick(&self) -> Tick {
        self.tracks
            .iter()
            .flat_map(|t| t.notes.iter().map(Note::offset))
            .max()
            .unwrap_or(0)
    }

    /// Inserts a 4/4 signature at tick 0 when none is present and sorts the maps.
    pub fn normalize_maps(&mut self) {
        self.time_signatures.sort_by_key(|ts| ts.tick);
        self.tempos.sort_by_key(|t| t.tick);
        if self.time_signatures.first().is_none_or(|ts| ts.tick != 0) {
            self.time_signatures.insert(
                0,
                TimeSignature {
                    tick: 0,
                    numerator: 4,
                    denominator: 4,
                },
            );
        }
    }

    /// Notes tagged with their instrument, sorted. Two scores with equal
    /// content produce equal lists regardless of track order.
    pub fn keyed_notes(&self) -> Vec<(ProgramKey, Note)> {
        let mut out: Vec<_> = self
            .tracks
            .iter()
            .flat_map(|t| t.notes.iter().map(move |n| (t.key(), *n)))
            .collect();
        out.sort();
        out
    }
}
