//! Generators and independent oracles shared by the integration suites.

#![allow(dead_code)]

pub mod checks;
pub mod oracles;

use rand::seq::IndexedRandom;
use rand::Rng;
use symtok::score::{
    Note, PreprocessConfig, Preprocessor, ProgramKey, Score, Tempo, TimeSignature, Track,
};
use symtok::tokenizer::{Scheme, Tokenizer};

/// A raw score with arbitrary timing, pitches and velocities.
///
/// Track programs are distinct and at most one track is a drum track, so
/// every program-mode scheme accepts the preprocessed result.
pub fn random_raw_score<R: Rng>(rng: &mut R, max_notes: usize) -> Score {
    let tpb = *[96u16, 120, 384, 480, 960].choose(rng).unwrap();
    let mut score = Score::new(tpb);
    if rng.random_bool(0.3) {
        score.tempos.push(Tempo {
            tick: 0,
            micros_per_beat: rng.random_range(300_000..900_000),
        });
    }
    let mut programs: Vec<u8> = (0..128).collect();
    let track_count = rng.random_range(1..=3);
    for t in 0..track_count {
        let drum = t == 0 && rng.random_bool(0.2);
        let program = programs.swap_remove(rng.random_range(0..programs.len()));
        let mut track = Track::new(program, drum);
        let span = u64::from(tpb) * rng.random_range(2..24);
        for _ in 0..rng.random_range(0..=max_notes) {
            track.notes.push(Note::new(
                rng.random_range(0..span),
                rng.random_range(1..=u64::from(tpb) * 10),
                rng.random_range(15..=115),
                rng.random_range(1..=127),
            ));
        }
        score.tracks.push(track);
    }
    score
}

/// A random score after preprocessing with `config`.
pub fn random_preprocessed<R: Rng>(
    rng: &mut R,
    config: &PreprocessConfig,
    max_notes: usize,
) -> Score {
    let pre = Preprocessor::new(config.clone()).unwrap();
    pre.preprocess(&random_raw_score(rng, max_notes))
}

/// A score suitable for SMF round trips: no same-pitch overlaps within a
/// track, arbitrary resolution and maps.
pub fn random_writable_score<R: Rng>(rng: &mut R) -> Score {
    let mut score = Score::new(rng.random_range(1..=960));
    score.time_signatures = vec![TimeSignature {
        tick: 0,
        numerator: rng.random_range(1..=12),
        denominator: 1 << rng.random_range(0..5),
    }];
    if rng.random_bool(0.5) {
        score.time_signatures.push(TimeSignature {
            tick: rng.random_range(1..5000),
            numerator: rng.random_range(1..=12),
            denominator: 1 << rng.random_range(0..5),
        });
    }
    for i in 0..rng.random_range(0..3) {
        score.tempos.push(Tempo {
            tick: i * 1000,
            micros_per_beat: rng.random_range(1..0xFF_FFFF),
        });
    }
    let track_count = rng.random_range(0..=4);
    for t in 0..track_count {
        let mut track = Track::new(rng.random_range(0..128), t == 1 && rng.random_bool(0.5));
        let mut free_at = [0u64; 128];
        let mut tick = 0;
        for _ in 0..rng.random_range(0..40) {
            tick += rng.random_range(0..500);
            let pitch = rng.random_range(0..128usize);
            let onset = tick.max(free_at[pitch]);
            let duration = rng.random_range(1..2000);
            free_at[pitch] = onset + duration;
            track.notes.push(Note::new(
                onset,
                duration,
                pitch as u8,
                rng.random_range(1..128),
            ));
        }
        track.sort_notes();
        score.tracks.push(track);
    }
    score.normalize_maps();
    score
}

pub fn tokenizer(scheme: Scheme) -> Tokenizer {
    Tokenizer::new(scheme, &PreprocessConfig::default()).unwrap()
}

/// Note content of a score: per track, or as one program-keyed list in
/// program mode.
pub fn content(score: &Score, by_program: bool) -> Vec<Vec<(Option<ProgramKey>, Note)>> {
    if by_program {
        vec![score
            .keyed_notes()
            .into_iter()
            .map(|(k, n)| (Some(k), n))
            .collect()]
    } else {
        score
            .tracks
            .iter()
            .map(|t| {
                let mut n: Vec<_> = t.notes.iter().map(|n| (None, *n)).collect();
                n.sort();
                n
            })
            .collect()
    }
}
