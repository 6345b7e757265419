use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Note, ProgramKey, Score, Tempo, Tick, TimeSignature, Track};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("velocity bin count {0} must be between 1 and 64")]
    VelocityBins(u32),
    #[error(
        "duration grid must be non-empty with strictly increasing bounds and positive sample rates"
    )]
    DurationGrid,
    #[error("positions per bar {0} must be a positive multiple of 4")]
    PositionsPerBar(u32),
    #[error("pitch range {0}..={1} is invalid")]
    PitchRange(u8, u8),
}

/// Discretization settings applied before tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub velocity_bin_count: u32,
    /// `(max_beats, samples_per_beat)` segments; each covers the durations
    /// above the previous segment's bound up to `max_beats`.
    pub duration_grid: Vec<(u32, u32)>,
    pub positions_per_bar: u32,
    pub pitch_min: u8,
    pub pitch_max: u8,
    pub merge_programs: bool,
    /// Shorten a note that is still sounding when the same pitch starts again
    /// on the same track, so every note has a matching release.
    pub resolve_overlaps: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            velocity_bin_count: 8,
            duration_grid: vec![(1, 8), (2, 4), (4, 2), (8, 1)],
            positions_per_bar: 32,
            pitch_min: 21,
            pitch_max: 108,
            merge_programs: false,
            resolve_overlaps: true,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=64).contains(&self.velocity_bin_count) {
            return Err(ConfigError::VelocityBins(self.velocity_bin_count));
        }
        let mut prev = 0;
        if self.duration_grid.is_empty() {
            return Err(ConfigError::DurationGrid);
        }
        for &(max_beats, spb) in &self.duration_grid {
            if max_beats <= prev || spb == 0 {
                return Err(ConfigError::DurationGrid);
            }
            prev = max_beats;
        }
        if self.positions_per_bar == 0 || !self.positions_per_bar.is_multiple_of(4) {
            return Err(ConfigError::PositionsPerBar(self.positions_per_bar));
        }
        if self.pitch_min >= self.pitch_max || self.pitch_max > 127 {
            return Err(ConfigError::PitchRange(self.pitch_min, self.pitch_max));
        }
        Ok(())
    }

    /// Velocity bin centers: the top value of each of the equal-width bins
    /// over 1..=127, e.g. 15, 31, ..., 127 for 8 bins.
    pub fn velocity_centers(&self) -> Vec<u8> {
        let n = self.velocity_bin_count;
        (1..=n).map(|k| (128 * k / n - 1) as u8).collect()
    }

    /// Ticks per beat of preprocessed scores: the smallest resolution on which
    /// every duration and position grid point is an integer.
    pub fn resolution(&self) -> u64 {
        let mut r = u64::from(self.positions_per_bar / 4);
        for &(_, spb) in &self.duration_grid {
            r = lcm(r, u64::from(spb));
        }
        r
    }

    /// Duration grid points in ticks at [`Self::resolution`], ascending.
    pub fn duration_ticks(&self) -> Vec<Tick> {
        let r = self.resolution();
        let mut out = Vec::new();
        let mut prev = 0u64;
        for &(max_beats, spb) in &self.duration_grid {
            let (max_beats, spb) = (u64::from(max_beats), u64::from(spb));
            let step = r / spb;
            let mut t = prev * r + step;
            while t <= max_beats * r {
                out.push(t);
                t += step;
            }
            prev = max_beats;
        }
        out
    }

    pub fn pitch_count(&self) -> usize {
        usize::from(self.pitch_max - self.pitch_min) + 1
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

/// Index of the grid value nearest to `target / scale`, ties going to the
/// larger value. `grid` must be ascending.
fn nearest(grid: &[u64], target: u128, scale: u128) -> usize {
    let mut best = 0;
    let mut best_dist = u128::MAX;
    for (i, &g) in grid.iter().enumerate() {
        let g = u128::from(g) * scale;
        let dist = g.abs_diff(target);
        if dist <= best_dist {
            best = i;
            best_dist = dist;
        }
    }
    best
}

/// Applies a validated [`PreprocessConfig`] to scores.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    resolution: u64,
    velocities: Vec<u64>,
    durations: Vec<Tick>,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            resolution: config.resolution(),
            velocities: config
                .velocity_centers()
                .into_iter()
                .map(u64::from)
                .collect(),
            durations: config.duration_ticks(),
            config,
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    /// Ticks between two consecutive bar positions.
    pub fn position_ticks(&self) -> u64 {
        4 * self.resolution / u64::from(self.config.positions_per_bar)
    }

    /// Maps a velocity to its bin center.
    pub fn snap_velocity(&self, velocity: u8) -> u8 {
        self.velocities[nearest(&self.velocities, u128::from(velocity), 1)] as u8
    }

    /// Maps a duration in source ticks to a grid duration in output ticks.
    pub fn snap_duration(&self, duration: Tick, ticks_per_beat: u64) -> Tick {
        // compare duration / tpb against g / resolution
        let target = u128::from(duration) * u128::from(self.resolution);
        self.durations[nearest(&self.durations, target, u128::from(ticks_per_beat))]
    }

    /// Maps a source tick to the nearest bar position, in output ticks.
    pub fn snap_onset(&self, tick: Tick, ticks_per_beat: u64) -> Tick {
        let unit = self.position_ticks();
        // index = round(tick * resolution / (tpb * unit)), halves rounded up
        let num = u128::from(tick) * u128::from(self.resolution);
        let den = u128::from(ticks_per_beat) * u128::from(unit);
        let idx = (2 * num + den) / (2 * den);
        (idx as u64) * unit
    }

    fn rescale(&self, tick: Tick, ticks_per_beat: u64) -> Tick {
        let num = u128::from(tick) * u128::from(self.resolution);
        let den = u128::from(ticks_per_beat);
        ((2 * num + den) / (2 * den)) as u64
    }

    /// Largest grid duration not exceeding `gap`, if any.
    fn duration_at_most(&self, gap: Tick) -> Option<Tick> {
        self.durations.iter().rev().copied().find(|&d| d <= gap)
    }

    fn merged_program(&self, track: &Track) -> ProgramKey {
        if track.is_drum {
            return ProgramKey::Drums;
        }
        let p = track.program;
        if self.config.merge_programs && p < 96 && !(48..=55).contains(&p) {
            ProgramKey::Program(p - p % 8)
        } else {
            ProgramKey::Program(p)
        }
    }

    /// Snaps a score onto the configured grids.
    ///
    /// The output uses [`Self::resolution`] ticks per beat. Notes outside the
    /// pitch range are dropped, duplicates (same track, onset and pitch) keep
    /// their first occurrence, and with `merge_programs` tracks sharing a
    /// program category are merged.
    pub fn preprocess(&self, score: &Score) -> Score {
        let tpb = u64::from(score.ticks_per_beat.max(1));
        let mut out = Score {
            ticks_per_beat: self.resolution as u16,
            tracks: Vec::new(),
            time_signatures: Vec::new(),
            tempos: score
                .tempos
                .iter()
                .map(|t| Tempo {
                    tick: self.rescale(t.tick, tpb),
                    micros_per_beat: t.micros_per_beat,
                })
                .collect(),
        };

        let mut signatures: Vec<TimeSignature> = score
            .time_signatures
            .iter()
            .map(|ts| TimeSignature {
                tick: self.rescale(ts.tick, tpb),
                ..*ts
            })
            .collect();
        signatures.sort_by_key(|ts| ts.tick);
        // several signatures landing on one tick: the last one wins
        signatures.reverse();
        signatures.dedup_by_key(|ts| ts.tick);
        signatures.reverse();
        out.time_signatures = signatures;

        let mut keys: Vec<ProgramKey> = Vec::new();
        for track in &score.tracks {
            let key = self.merged_program(track);
            let idx = match keys.iter().position(|k| *k == key) {
                Some(i) if self.config.merge_programs => i,
                _ => {
                    keys.push(key);
                    out.tracks.push(match key {
                        ProgramKey::Drums => Track::new(track.program, true),
                        ProgramKey::Program(p) => Track::new(p, false),
                    });
                    out.tracks.len() - 1
                }
            };
            let pitch_range = self.config.pitch_min..=self.config.pitch_max;
            out.tracks[idx].notes.extend(
                track
                    .notes
                    .iter()
                    .filter(|n| pitch_range.contains(&n.pitch))
                    .map(|n| {
                        Note::new(
                            self.snap_onset(n.onset, tpb),
                            self.snap_duration(n.duration, tpb),
                            n.pitch,
                            self.snap_velocity(n.velocity),
                        )
                    }),
            );
        }

        for track in &mut out.tracks {
            track.notes.sort_by_key(|n| (n.onset, n.pitch));
            track.notes.dedup_by_key(|n| (n.onset, n.pitch));
            if self.config.resolve_overlaps {
                self.resolve_overlaps(&mut track.notes);
            }
            track.sort_notes();
        }
        out.normalize_maps();
        out
    }

    /// Expects notes sorted by (onset, pitch) without duplicates.
    fn resolve_overlaps(&self, notes: &mut [Note]) {
        let mut last_by_pitch: [Option<usize>; 128] = [None; 128];
        for i in 0..notes.len() {
            let pitch = usize::from(notes[i].pitch);
            if let Some(j) = last_by_pitch[pitch] {
                let onset = notes[i].onset;
                if notes[j].offset() > onset {
                    if let Some(d) = self.duration_at_most(onset - notes[j].onset) {
                        notes[j].duration = d;
                    }
                }
            }
            last_by_pitch[pitch] = Some(i);
        }
    }
}
