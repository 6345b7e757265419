use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TokenizeError;

/// How time is written into a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeModel {
    /// Explicit `TimeShift` tokens between onsets.
    TimeShift,
    /// `Bar` tokens plus `Position` within the bar.
    BarPosition,
}

/// How the attributes of one note are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoteLayout {
    /// `Pitch`, `Velocity`, `Duration`.
    Separate,
    /// Fused pitch/velocity token, then `Duration`.
    PitchVelocity,
    /// One fused pitch/velocity/duration token.
    PitchVelocityDuration,
    /// `NoteOn` + `Velocity` at the onset, `NoteOff` at the offset.
    NoteOnOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Tsd,
    Remi,
    MidiLike,
    PVm(TimeModel),
    PVDm(TimeModel),
}

/// A tokenization scheme plus whether `Program` tokens precede each note.
///
/// Textual form: `tsd`, `remi`, `midilike`, `pvm-tsd`, `pvm-remi`,
/// `pvdm-tsd`, `pvdm-remi`, optionally suffixed with `+programs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub use_programs: bool,
}

impl Scheme {
    pub const ALL_KINDS: [SchemeKind; 7] = [
        SchemeKind::Tsd,
        SchemeKind::Remi,
        SchemeKind::MidiLike,
        SchemeKind::PVm(TimeModel::TimeShift),
        SchemeKind::PVm(TimeModel::BarPosition),
        SchemeKind::PVDm(TimeModel::TimeShift),
        SchemeKind::PVDm(TimeModel::BarPosition),
    ];

    pub fn new(kind: SchemeKind, use_programs: bool) -> Self {
        Self { kind, use_programs }
    }

    /// Every scheme kind, with and without programs.
    pub fn all() -> Vec<Scheme> {
        Self::ALL_KINDS
            .iter()
            .flat_map(|&k| [Scheme::new(k, false), Scheme::new(k, true)])
            .collect()
    }

    pub fn time_model(&self) -> TimeModel {
        match self.kind {
            SchemeKind::Tsd | SchemeKind::MidiLike => TimeModel::TimeShift,
            SchemeKind::Remi => TimeModel::BarPosition,
            SchemeKind::PVm(t) | SchemeKind::PVDm(t) => t,
        }
    }

    pub fn note_layout(&self) -> NoteLayout {
        match self.kind {
            SchemeKind::Tsd | SchemeKind::Remi => NoteLayout::Separate,
            SchemeKind::MidiLike => NoteLayout::NoteOnOff,
            SchemeKind::PVm(_) => NoteLayout::PitchVelocity,
            SchemeKind::PVDm(_) => NoteLayout::PitchVelocityDuration,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let time = |t: TimeModel| match t {
            TimeModel::TimeShift => "tsd",
            TimeModel::BarPosition => "remi",
        };
        match self.kind {
            SchemeKind::Tsd => f.write_str("tsd")?,
            SchemeKind::Remi => f.write_str("remi")?,
            SchemeKind::MidiLike => f.write_str("midilike")?,
            SchemeKind::PVm(t) => write!(f, "pvm-{}", time(t))?,
            SchemeKind::PVDm(t) => write!(f, "pvdm-{}", time(t))?,
        }
        if self.use_programs {
            f.write_str("+programs")?;
        }
        Ok(())
    }
}

impl FromStr for Scheme {
    type Err = TokenizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (base, use_programs) = match lower.strip_suffix("+programs") {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        let kind = match base {
            "tsd" => SchemeKind::Tsd,
            "remi" => SchemeKind::Remi,
            "midilike" | "midi-like" => SchemeKind::MidiLike,
            "pvm" | "pvm-tsd" => SchemeKind::PVm(TimeModel::TimeShift),
            "pvm-remi" => SchemeKind::PVm(TimeModel::BarPosition),
            "pvdm" | "pvdm-tsd" => SchemeKind::PVDm(TimeModel::TimeShift),
            "pvdm-remi" => SchemeKind::PVDm(TimeModel::BarPosition),
            _ => return Err(TokenizeError::UnknownScheme(s.to_string())),
        };
        Ok(Scheme { kind, use_programs })
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
