use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::scheme::{NoteLayout, Scheme, TimeModel};
use super::TokenizeError;
use crate::score::PreprocessConfig;

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const MASK_ID: u32 = 3;
pub const SEP_ID: u32 = 4;
/// Number of special tokens; they occupy ids `0..SPECIAL_COUNT`.
pub const SPECIAL_COUNT: u32 = 5;

pub fn is_special(id: u32) -> bool {
    id < SPECIAL_COUNT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenType {
    Pad,
    Bos,
    Eos,
    Mask,
    Sep,
    Bar,
    Position,
    Pitch,
    Velocity,
    Duration,
    TimeShift,
    NoteOn,
    NoteOff,
    Program,
    Merged,
    #[serde(rename = "BPE")]
    Bpe,
}

impl TokenType {
    pub fn is_special(self) -> bool {
        matches!(
            self,
            TokenType::Pad | TokenType::Bos | TokenType::Eos | TokenType::Mask | TokenType::Sep
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            TokenType::Pad => "Pad",
            TokenType::Bos => "Bos",
            TokenType::Eos => "Eos",
            TokenType::Mask => "Mask",
            TokenType::Sep => "Sep",
            TokenType::Bar => "Bar",
            TokenType::Position => "Position",
            TokenType::Pitch => "Pitch",
            TokenType::Velocity => "Velocity",
            TokenType::Duration => "Duration",
            TokenType::TimeShift => "TimeShift",
            TokenType::NoteOn => "NoteOn",
            TokenType::NoteOff => "NoteOff",
            TokenType::Program => "Program",
            TokenType::Merged => "Merged",
            TokenType::Bpe => "BPE",
        }
    }
}

/// An exact number of beats, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Beats {
    pub num: u64,
    pub den: u64,
}

impl Beats {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn from_ticks(ticks: u64, ticks_per_beat: u64) -> Self {
        Self::new(ticks, ticks_per_beat)
    }

    /// Ticks at `ticks_per_beat`, if integral.
    pub fn to_ticks(self, ticks_per_beat: u64) -> Option<u64> {
        let t = self.num * ticks_per_beat;
        t.is_multiple_of(self.den).then(|| t / self.den)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Beats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Beats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid beat value {s:?}");
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?),
            None => (s.parse().map_err(|_| bad())?, 1),
        };
        if den == 0 || num == 0 {
            return Err(bad());
        }
        Ok(Beats::new(num, den))
    }
}

/// Type-specific payload of a token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenValue {
    None,
    /// Position index, pitch, velocity or program number (`-1` for drums).
    Int(i64),
    /// Duration or time shift length.
    Beats(Beats),
    /// Constituents of a fused token.
    Parts(Vec<(TokenType, TokenValue)>),
    /// Base-token expansion of a learned BPE token.
    Ids(Vec<u32>),
}

impl TokenValue {
    fn to_json(&self) -> Value {
        match self {
            TokenValue::None => Value::Null,
            TokenValue::Int(v) => json!(v),
            TokenValue::Beats(b) => json!(b.to_string()),
            TokenValue::Parts(parts) => Value::Array(
                parts
                    .iter()
                    .map(|(t, v)| json!([t.name(), v.to_json()]))
                    .collect(),
            ),
            TokenValue::Ids(ids) => json!(ids),
        }
    }

    fn from_json(kind: TokenType, v: &Value) -> Result<Self, String> {
        let bad = || format!("invalid value {v} for token type {}", kind.name());
        Ok(match kind {
            TokenType::Pad
            | TokenType::Bos
            | TokenType::Eos
            | TokenType::Mask
            | TokenType::Sep
            | TokenType::Bar => TokenValue::None,
            TokenType::Position
            | TokenType::Pitch
            | TokenType::Velocity
            | TokenType::NoteOn
            | TokenType::NoteOff
            | TokenType::Program => TokenValue::Int(v.as_i64().ok_or_else(bad)?),
            TokenType::Duration | TokenType::TimeShift => {
                TokenValue::Beats(v.as_str().ok_or_else(bad)?.parse()?)
            }
            TokenType::Merged => {
                let arr = v.as_array().ok_or_else(bad)?;
                let mut parts = Vec::with_capacity(arr.len());
                for p in arr {
                    let pair = p.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                    let t: TokenType =
                        serde_json::from_value(pair[0].clone()).map_err(|_| bad())?;
                    parts.push((t, TokenValue::from_json(t, &pair[1])?));
                }
                TokenValue::Parts(parts)
            }
            TokenType::Bpe => {
                TokenValue::Ids(serde_json::from_value(v.clone()).map_err(|_| bad())?)
            }
        })
    }

    fn text_fragment(&self) -> String {
        match self {
            TokenValue::None => String::new(),
            TokenValue::Int(-1) => "Drums".to_string(),
            TokenValue::Int(v) => v.to_string(),
            TokenValue::Beats(b) => b.to_string(),
            TokenValue::Parts(parts) => parts
                .iter()
                .map(|(_, v)| v.text_fragment())
                .collect::<Vec<_>>()
                .join("_"),
            TokenValue::Ids(ids) => ids.iter().map(u32::to_string).collect::<Vec<_>>().join("_"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDescriptor {
    pub id: u32,
    pub text: String,
    pub kind: TokenType,
    pub value: TokenValue,
}

impl TokenDescriptor {
    pub fn new(id: u32, kind: TokenType, value: TokenValue) -> Self {
        Self {
            id,
            text: token_text(kind, &value),
            kind,
            value,
        }
    }

    pub fn int_value(&self) -> Option<i64> {
        match self.value {
            TokenValue::Int(v) => Some(v),
            _ => None,
        }
    }
}

/// Canonical text of a token, e.g. `Pitch_60`, `Duration_3/2`, `PV_60_95`.
pub fn token_text(kind: TokenType, value: &TokenValue) -> String {
    match (kind, value) {
        (TokenType::Pad, _) => "PAD".into(),
        (TokenType::Bos, _) => "BOS".into(),
        (TokenType::Eos, _) => "EOS".into(),
        (TokenType::Mask, _) => "MASK".into(),
        (TokenType::Sep, _) => "SEP".into(),
        (TokenType::Bar, _) => "Bar".into(),
        (TokenType::Merged, TokenValue::Parts(parts)) => {
            let prefix: String = parts
                .iter()
                .map(|(t, _)| t.name().chars().next().unwrap_or('?'))
                .collect();
            format!("{prefix}_{}", value.text_fragment())
        }
        (kind, value) => format!("{}_{}", kind.name(), value.text_fragment()),
    }
}

#[derive(Serialize, Deserialize)]
struct RawDescriptor {
    id: u32,
    text: String,
    #[serde(rename = "type")]
    kind: TokenType,
    value: Value,
}

impl Serialize for TokenDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawDescriptor {
            id: self.id,
            text: self.text.clone(),
            kind: self.kind,
            value: self.value.to_json(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TokenDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawDescriptor::deserialize(d)?;
        let value =
            TokenValue::from_json(raw.kind, &raw.value).map_err(serde::de::Error::custom)?;
        Ok(TokenDescriptor {
            id: raw.id,
            text: raw.text,
            kind: raw.kind,
            value,
        })
    }
}

/// Bidirectional map between token ids and their descriptors.
///
/// Ids are dense from 0 and the five special tokens sit at fixed ids
/// (`PAD`, `BOS`, `EOS`, `MASK`, `SEP`). Serialized as an ordered JSON array
/// of `{"id", "text", "type", "value"}` objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<TokenDescriptor>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<TokenDescriptor>) -> Result<Self, TokenizeError> {
        let specials = [
            TokenType::Pad,
            TokenType::Bos,
            TokenType::Eos,
            TokenType::Mask,
            TokenType::Sep,
        ];
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(TokenizeError::InvalidVocabulary(format!(
                    "id {} found at position {i}",
                    e.id
                )));
            }
            if let Some(&expected) = specials.get(i) {
                if e.kind != expected {
                    return Err(TokenizeError::InvalidVocabulary(format!(
                        "id {i} must be the {} token",
                        expected.name()
                    )));
                }
            } else if e.kind.is_special() {
                return Err(TokenizeError::InvalidVocabulary(format!(
                    "special token at id {i}"
                )));
            }
            if index.insert(e.text.clone(), e.id).is_some() {
                return Err(TokenizeError::InvalidVocabulary(format!(
                    "duplicate token {:?}",
                    e.text
                )));
            }
        }
        if entries.len() < specials.len() {
            return Err(TokenizeError::InvalidVocabulary(
                "missing special tokens".into(),
            ));
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&TokenDescriptor> {
        self.entries.get(id as usize)
    }

    pub fn id_of(&self, text: &str) -> Option<u32> {
        self.index.get(text).copied()
    }

    pub fn entries(&self) -> &[TokenDescriptor] {
        &self.entries
    }

    pub fn count_of(&self, kind: TokenType) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Appends a descriptor, assigning the next id.
    pub(crate) fn push(&mut self, kind: TokenType, value: TokenValue) -> u32 {
        let id = self.entries.len() as u32;
        let d = TokenDescriptor::new(id, kind, value);
        self.index.insert(d.text.clone(), id);
        self.entries.push(d);
        id
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TokenizeError> {
        let entries: Vec<TokenDescriptor> = serde_json::from_str(text)
            .map_err(|e| TokenizeError::InvalidVocabulary(e.to_string()))?;
        Self::from_entries(entries)
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<TokenDescriptor>::deserialize(d)?;
        Vocabulary::from_entries(entries).map_err(serde::de::Error::custom)
    }
}

/// Builds the base vocabulary of `scheme` over the grids of `config`.
pub fn build_vocabulary(scheme: Scheme, config: &PreprocessConfig) -> Vocabulary {
    let mut v = Vocabulary {
        entries: Vec::new(),
        index: HashMap::new(),
    };
    for kind in [
        TokenType::Pad,
        TokenType::Bos,
        TokenType::Eos,
        TokenType::Mask,
        TokenType::Sep,
    ] {
        v.push(kind, TokenValue::None);
    }

    if scheme.use_programs {
        for p in 0..128 {
            v.push(TokenType::Program, TokenValue::Int(p));
        }
        v.push(TokenType::Program, TokenValue::Int(-1));
    }

    let resolution = config.resolution();
    let durations: Vec<TokenValue> = config
        .duration_ticks()
        .into_iter()
        .map(|t| TokenValue::Beats(Beats::from_ticks(t, resolution)))
        .collect();
    let pitches: Vec<TokenValue> = (config.pitch_min..=config.pitch_max)
        .map(|p| TokenValue::Int(i64::from(p)))
        .collect();
    let velocities: Vec<TokenValue> = config
        .velocity_centers()
        .into_iter()
        .map(|v| TokenValue::Int(i64::from(v)))
        .collect();

    match scheme.time_model() {
        TimeModel::BarPosition => {
            v.push(TokenType::Bar, TokenValue::None);
            for p in 0..config.positions_per_bar {
                v.push(TokenType::Position, TokenValue::Int(i64::from(p)));
            }
        }
        TimeModel::TimeShift => {
            for d in &durations {
                v.push(TokenType::TimeShift, d.clone());
            }
        }
    }

    match scheme.note_layout() {
        NoteLayout::Separate => {
            for p in &pitches {
                v.push(TokenType::Pitch, p.clone());
            }
            for vel in &velocities {
                v.push(TokenType::Velocity, vel.clone());
            }
            for d in &durations {
                v.push(TokenType::Duration, d.clone());
            }
        }
        NoteLayout::PitchVelocity => {
            for p in &pitches {
                for vel in &velocities {
                    v.push(
                        TokenType::Merged,
                        TokenValue::Parts(vec![
                            (TokenType::Pitch, p.clone()),
                            (TokenType::Velocity, vel.clone()),
                        ]),
                    );
                }
            }
            for d in &durations {
                v.push(TokenType::Duration, d.clone());
            }
        }
        NoteLayout::PitchVelocityDuration => {
            for p in &pitches {
                for vel in &velocities {
                    for d in &durations {
                        v.push(
                            TokenType::Merged,
                            TokenValue::Parts(vec![
                                (TokenType::Pitch, p.clone()),
                                (TokenType::Velocity, vel.clone()),
                                (TokenType::Duration, d.clone()),
                            ]),
                        );
                    }
                }
            }
        }
        NoteLayout::NoteOnOff => {
            for p in &pitches {
                v.push(TokenType::NoteOn, p.clone());
            }
            for p in &pitches {
                v.push(TokenType::NoteOff, p.clone());
            }
            for vel in &velocities {
                v.push(TokenType::Velocity, vel.clone());
            }
        }
    }
    v
}
