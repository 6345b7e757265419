//! Acceptance checks, parameterised by workload size. Each returns a short
//! summary on success and a description of the first failure otherwise.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use symtok::bpe::{apply_bpe, learn_bpe, undo_bpe};
use symtok::corpus::{matching_weight, max_weight_matching, split_corpus, SplitSpec};
use symtok::geometry::{isoscore, pca_intrinsic_dim, singular_spectrum, DEFAULT_PCA_THRESHOLD};
use symtok::metrics::{tokens_per_beat, tse};
use symtok::midi::{parse_smf, write_smf};
use symtok::score::{PreprocessConfig, Score};
use symtok::tokenizer::{
    is_special, GrammarState, NoteLayout, Scheme, SyntaxError, TimeModel, Tokenizer,
    DEFAULT_MAX_NOTE_BEATS, SPECIAL_COUNT,
};

use super::oracles::{bpe_learn_naive, brute_force_matching, TseOracle};
use super::{content, random_preprocessed, tokenizer};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($arg)*));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scheme_seed(scheme: Scheme) -> u64 {
    scheme
        .to_string()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
        })
}

/// Collects per-item results, keeping the first failure.
fn all_ok<T>(results: Vec<Result<T, String>>) -> Result<Vec<T>, String> {
    results.into_iter().collect()
}

// ---------------------------------------------------------------------------

/// Learning, applying and undoing BPE on `a a b a a b a a c a a`.
pub fn toy_bpe() -> Check {
    let (a, b, c) = (SPECIAL_COUNT, SPECIAL_COUNT + 1, SPECIAL_COUNT + 2);
    let base = SPECIAL_COUNT + 3;
    let (d, e) = (base, base + 1);
    let corpus = vec![vec![a, a, b, a, a, b, a, a, c, a, a]];
    let table = learn_bpe(&corpus, base, base as usize + 2).map_err(|e| e.to_string())?;
    ensure!(
        table.merges() == [(a, a), (d, b)],
        "merges {:?}",
        table.merges()
    );
    let encoded = apply_bpe(&corpus[0], &table).map_err(|e| e.to_string())?;
    ensure!(encoded == [e, e, d, c, d], "encoded {encoded:?}");
    let decoded = undo_bpe(&encoded, &table).map_err(|e| e.to_string())?;
    ensure!(decoded == corpus[0], "decoded {decoded:?}");
    Ok("merges (a,a)->d, (d,b)->e; encoded e e d c d; undo restores the input".into())
}

// ---------------------------------------------------------------------------

/// Round trips without and with a learned merge table, per scheme.
pub fn round_trip(scores_per_scheme: usize, merges: usize) -> Check {
    let config = PreprocessConfig::default();
    let per_scheme: Vec<Result<usize, String>> = Scheme::all()
        .into_par_iter()
        .map(|scheme| {
            let tok = tokenizer(scheme);
            let mut r = rng(scheme_seed(scheme));
            let scores: Vec<Score> = (0..scores_per_scheme)
                .map(|_| random_preprocessed(&mut r, &config, 40))
                .collect();
            let training: Vec<Vec<u32>> = (0..200)
                .map(|_| {
                    tok.tokenize_flat(&random_preprocessed(&mut r, &config, 80))
                        .unwrap()
                        .ids
                })
                .collect();
            let mut seqs = Vec::with_capacity(scores.len());
            for (i, s) in scores.iter().enumerate() {
                let ids = tok
                    .tokenize_flat(s)
                    .map_err(|e| format!("{scheme} #{i}: {e}"))?
                    .ids;
                let again = tok.tokenize_flat(s).unwrap().ids;
                ensure!(
                    ids == again,
                    "{scheme} #{i}: tokenization is not deterministic"
                );
                let (back, diag) = tok
                    .detokenize(&ids)
                    .map_err(|e| format!("{scheme} #{i}: {e}"))?;
                ensure!(
                    diag.total() == 0,
                    "{scheme} #{i}: decoder diagnostics {diag:?}"
                );
                ensure!(
                    content(&back, scheme.use_programs) == content(s, scheme.use_programs),
                    "{scheme} #{i}: decoded notes differ"
                );
                seqs.push(ids);
            }
            let base = tok.vocabulary().len() as u32;
            let table =
                learn_bpe(&training, base, base as usize + merges).map_err(|e| e.to_string())?;
            ensure!(
                table.len() == merges,
                "{scheme}: only {} merges learnable from the corpus",
                table.len()
            );
            for (i, (s, ids)) in scores.iter().zip(&seqs).enumerate() {
                let enc = apply_bpe(ids, &table).map_err(|e| e.to_string())?;
                let dec = undo_bpe(&enc, &table).map_err(|e| e.to_string())?;
                ensure!(&dec == ids, "{scheme} #{i}: undo(apply) differs");
                let (back, _) = tok.detokenize(&dec).map_err(|e| e.to_string())?;
                ensure!(
                    content(&back, scheme.use_programs) == content(s, scheme.use_programs),
                    "{scheme} #{i}: decoded notes differ after BPE"
                );
            }
            Ok(scores.len())
        })
        .collect();
    let total: usize = all_ok(per_scheme)?.iter().sum();
    Ok(format!(
        "{total} scores over {} schemes, plain and with {merges} merges: 0 failures",
        Scheme::all().len()
    ))
}

// ---------------------------------------------------------------------------

/// Random corpora over a small alphabet with framing specials.
fn random_corpus(r: &mut ChaCha8Rng, max_tokens: usize) -> (Vec<Vec<u32>>, u32) {
    let alphabet = r.random_range(2..10u32);
    let base = SPECIAL_COUNT + alphabet;
    let total = r.random_range(10..=max_tokens);
    let mut corpus = Vec::new();
    let mut used = 0;
    while used < total {
        let len = r.random_range(1..=(total - used).min(200));
        let framed = r.random_bool(0.5);
        let mut seq: Vec<u32> = (0..len)
            .map(|_| {
                // skewed so that some pairs dominate
                let x: f64 = r.random();
                SPECIAL_COUNT + ((x * x) * f64::from(alphabet)) as u32
            })
            .collect();
        if framed && len >= 3 {
            seq[0] = 1;
            seq[len - 1] = 2;
        }
        if r.random_bool(0.05) {
            let i = r.random_range(0..len);
            seq[i] = r.random_range(0..SPECIAL_COUNT);
        }
        used += len;
        corpus.push(seq);
    }
    (corpus, base)
}

/// Learner versus the naive recount-every-step oracle.
pub fn bpe_oracle(corpora: usize) -> Check {
    let results: Vec<Result<usize, String>> = (0..corpora as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(1000 + k);
            let (corpus, base) = random_corpus(&mut r, 2000);
            let target = base as usize + r.random_range(1..=64);
            let got = learn_bpe(&corpus, base, target).map_err(|e| e.to_string())?;
            let want = bpe_learn_naive(&corpus, base, target);
            ensure!(
                got.merges() == want.as_slice(),
                "corpus {k}: learner {:?} oracle {:?}",
                got.merges(),
                want
            );
            Ok(want.len())
        })
        .collect();
    let merges: usize = all_ok(results)?.iter().sum();
    Ok(format!(
        "{corpora} corpora, {merges} merges, all equal to the oracle"
    ))
}

/// `undo(apply(s)) == s` on random sequences, specials included.
pub fn bpe_inverse(sequences: usize) -> Check {
    let mut r = rng(77);
    let (corpus, base) = random_corpus(&mut r, 2000);
    let table = learn_bpe(&corpus, base, base as usize + 40).map_err(|e| e.to_string())?;
    for i in 0..sequences {
        let len = r.random_range(0..120);
        let seq: Vec<u32> = (0..len).map(|_| r.random_range(0..base)).collect();
        let enc = apply_bpe(&seq, &table).map_err(|e| e.to_string())?;
        ensure!(enc.len() <= seq.len(), "sequence {i} grew");
        ensure!(
            undo_bpe(&enc, &table).unwrap() == seq,
            "sequence {i} not restored"
        );
    }
    for id in base..table.vocab_size() as u32 {
        ensure!(
            table.expansion(id).unwrap().iter().all(|&x| !is_special(x)),
            "token {id} expands to a special token"
        );
    }
    Ok(format!(
        "{sequences} sequences restored; no special token inside any of {} merges",
        table.len()
    ))
}

/// Tokens per beat never increases as the merge budget grows, on several
/// held-out corpora per scheme.
pub fn compression_monotonicity(train: usize, test_corpora: usize) -> Check {
    let budgets = [0usize, 50, 100, 200];
    let config = PreprocessConfig::default();
    let schemes: Vec<Scheme> = Scheme::all()
        .into_iter()
        .filter(|s| !s.use_programs)
        .collect();
    let lines: Vec<Result<String, String>> = schemes
        .par_iter()
        .map(|&scheme| {
            let tok = tokenizer(scheme);
            let mut r = rng(scheme_seed(scheme) ^ 0xabc);
            let seqs: Vec<Vec<u32>> = (0..train)
                .map(|_| {
                    tok.tokenize_flat(&random_preprocessed(&mut r, &config, 80))
                        .unwrap()
                        .ids
                })
                .collect();
            let base = tok.vocabulary().len();
            let full = learn_bpe(&seqs, base as u32, base + 200).map_err(|e| e.to_string())?;
            ensure!(
                full.len() == 200,
                "{scheme}: only {} merges learnable",
                full.len()
            );
            for &n in &budgets[1..] {
                let direct = learn_bpe(&seqs, base as u32, base + n).unwrap();
                ensure!(
                    direct == full.truncated(n),
                    "{scheme}: budget {n} is not a prefix of the larger table"
                );
            }
            let mut first = Vec::new();
            for c in 0..test_corpora {
                let test: Vec<Score> = (0..10)
                    .map(|_| random_preprocessed(&mut r, &config, 40))
                    .collect();
                let mut values = Vec::new();
                for &n in &budgets {
                    let table = full.truncated(n);
                    values.push(
                        tokens_per_beat(&test, &tok, Some(&table)).map_err(|e| e.to_string())?,
                    );
                }
                ensure!(
                    values.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                    "{scheme} corpus {c}: tokens/beat {values:?}"
                );
                if c == 0 {
                    first = values;
                }
            }
            let f: Vec<String> = first.iter().map(|v| format!("{v:.2}")).collect();
            Ok(format!("{scheme} {}", f.join(">=")))
        })
        .collect();
    Ok(format!(
        "{test_corpora} test corpora per scheme, first: {}",
        all_ok(lines)?.join("; ")
    ))
}

// ---------------------------------------------------------------------------

/// Short valid token sequences for a scheme.
fn short_sequences(tok: &Tokenizer, count: usize, max_len: usize, seed: u64) -> Vec<Vec<u32>> {
    let config = PreprocessConfig::default();
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let score = random_preprocessed(&mut r, &config, 6);
        let ids = tok.tokenize_flat(&score).unwrap().ids;
        if ids.len() <= max_len && ids.len() > 3 {
            out.push(ids);
        }
    }
    out
}

fn counts_of(tok: &Tokenizer, ids: &[u32]) -> ([usize; 5], usize) {
    let report = tse(tok, ids, 0).unwrap();
    (report.counts(), report.denominator)
}

/// Insertion sites after the end of a note, with the context needed to
/// build a deliberate violation there.
struct Site {
    index: usize,
    position: Option<u32>,
    started: Vec<u8>,
    sounding: Vec<u8>,
}

fn sites(tok: &Tokenizer, ids: &[u32]) -> Vec<Site> {
    let vocab = tok.vocabulary();
    let onoff = tok.scheme().note_layout() == NoteLayout::NoteOnOff;
    let mut out = Vec::new();
    let (mut position, mut started, mut sounding) = (None, Vec::new(), Vec::new());
    for (i, &id) in ids.iter().enumerate() {
        let text = &vocab.get(id).unwrap().text;
        let (head, rest) = text.split_once('_').unwrap_or((text.as_str(), ""));
        let value = || rest.split('_').next().unwrap().parse::<u32>().unwrap();
        let mut note_end = false;
        match head {
            "BOS" | "EOS" => {
                position = None;
                started.clear();
                sounding.clear();
            }
            "Bar" => {
                position = None;
                started.clear();
            }
            "Position" => {
                position = Some(value());
                started.clear();
            }
            "TimeShift" => started.clear(),
            "Pitch" | "PV" => started.push(value() as u8),
            "PVD" => {
                started.push(value() as u8);
                note_end = true;
            }
            "NoteOn" => {
                started.push(value() as u8);
                sounding.push(value() as u8);
            }
            "NoteOff" => {
                let p = value() as u8;
                let k = sounding.iter().position(|&x| x == p).unwrap();
                sounding.remove(k);
                note_end = true;
            }
            "Duration" => note_end = true,
            "Velocity" if onoff => note_end = true,
            _ => {}
        }
        if note_end {
            out.push(Site {
                index: i + 1,
                position,
                started: started.clone(),
                sounding: sounding.clone(),
            });
        }
    }
    out
}

fn expect_single(
    tok: &Tokenizer,
    oracle: &TseOracle,
    ids: &[u32],
    category: SyntaxError,
    what: &str,
) -> Result<(), String> {
    let (counts, _) = counts_of(tok, ids);
    let mut want = [0usize; 5];
    want[category as usize] = 1;
    ensure!(
        counts == want,
        "{}: {what} gave {counts:?}, expected one {category} error; ids {ids:?}",
        tok.scheme()
    );
    let o = oracle.score(ids, 0);
    ensure!(
        o.counts == want,
        "{}: oracle disagrees on {what}: {:?}",
        tok.scheme(),
        o.counts
    );
    Ok(())
}

fn insert(ids: &[u32], at: usize, id: u32) -> Vec<u32> {
    let mut v = ids.to_vec();
    v.insert(at, id);
    v
}

/// Zero errors on tokenizer output, deliberate single violations, and
/// agreement with the oracle under systematic one-token mutations.
pub fn tse_soundness(sequences_per_scheme: usize, samples_per_position: usize) -> Check {
    let results: Vec<Result<[usize; 6], String>> = Scheme::all()
        .into_par_iter()
        .map(|scheme| {
            let tok = tokenizer(scheme);
            let vocab = tok.vocabulary();
            let oracle = TseOracle::new(scheme, vocab, DEFAULT_MAX_NOTE_BEATS);
            let id = |t: &str| vocab.id_of(t).unwrap();
            let first_with = |prefix: &str| {
                vocab
                    .entries()
                    .iter()
                    .find(|d| d.text.starts_with(prefix))
                    .map(|d| d.id)
            };
            let layout = scheme.note_layout();
            let stray = vocab
                .id_of("Velocity_15")
                .or_else(|| first_with("Duration_"));
            let note_start = ["Pitch_60", "NoteOn_60", "PV_60_", "PVD_60_"]
                .iter()
                .find_map(|p| first_with(p))
                .unwrap();
            let mut injected = [0usize; 6];
            let mut r = rng(scheme_seed(scheme) ^ 0x75e);
            let seqs = short_sequences(&tok, sequences_per_scheme, 64, scheme_seed(scheme));

            // valid output scores zero
            let mut longer = short_sequences(&tok, 5, usize::MAX, scheme_seed(scheme) ^ 1);
            longer.extend(seqs.iter().cloned());
            for ids in &longer {
                let (counts, den) = counts_of(&tok, ids);
                ensure!(
                    counts == [0; 5],
                    "{scheme}: tokenizer output scored {counts:?}"
                );
                let o = oracle.score(ids, 0);
                ensure!(
                    o.counts == [0; 5] && o.denominator == den,
                    "{scheme}: oracle {o:?}"
                );
            }

            for ids in &seqs {
                if scheme.time_model() == TimeModel::BarPosition {
                    for (j, &tid) in ids.iter().enumerate() {
                        if vocab.get(tid).unwrap().text == "Bar" {
                            let m = insert(ids, j + 1, note_start);
                            expect_single(
                                &tok,
                                &oracle,
                                &m,
                                SyntaxError::Type,
                                "note right after a bar",
                            )?;
                            injected[0] += 1;
                        }
                    }
                }
                for site in sites(&tok, ids) {
                    if let Some(t) = stray {
                        expect_single(
                            &tok,
                            &oracle,
                            &insert(ids, site.index, t),
                            SyntaxError::Type,
                            "stray token after a note",
                        )?;
                        injected[0] += 1;
                    }
                    if let (Some(p), TimeModel::BarPosition) = (site.position, scheme.time_model())
                    {
                        let back = id(&format!("Position_{p}"));
                        expect_single(
                            &tok,
                            &oracle,
                            &insert(ids, site.index, back),
                            SyntaxError::Time,
                            "repeated position",
                        )?;
                        injected[1] += 1;
                    }
                    if scheme.use_programs {
                        continue;
                    }
                    if let Some(&p) = site.started.first() {
                        let dup = match layout {
                            NoteLayout::Separate => Some(id(&format!("Pitch_{p}"))),
                            NoteLayout::PitchVelocity => first_with(&format!("PV_{p}_")),
                            NoteLayout::PitchVelocityDuration => first_with(&format!("PVD_{p}_")),
                            NoteLayout::NoteOnOff => Some(id(&format!("NoteOn_{p}"))),
                        }
                        .unwrap();
                        expect_single(
                            &tok,
                            &oracle,
                            &insert(ids, site.index, dup),
                            SyntaxError::DuplicateNote,
                            "duplicate onset",
                        )?;
                        injected[2] += 1;
                    }
                    if layout == NoteLayout::NoteOnOff {
                        let q = (21..=108u8).find(|q| !site.sounding.contains(q)).unwrap();
                        let off = id(&format!("NoteOff_{q}"));
                        expect_single(
                            &tok,
                            &oracle,
                            &insert(ids, site.index, off),
                            SyntaxError::NoNoteOn,
                            "release without note",
                        )?;
                        injected[4] += 1;
                    }
                }
                // delete a release whose pitch never starts again in its segment
                if layout == NoteLayout::NoteOnOff && !scheme.use_programs {
                    for (j, &tid) in ids.iter().enumerate() {
                        let text = &vocab.get(tid).unwrap().text;
                        if let Some(p) = text.strip_prefix("NoteOff_") {
                            let again = ids[j..]
                                .iter()
                                .take_while(|&&x| x != 2)
                                .any(|&x| vocab.get(x).unwrap().text == format!("NoteOn_{p}"));
                            if !again {
                                let mut m = ids.clone();
                                m.remove(j);
                                expect_single(
                                    &tok,
                                    &oracle,
                                    &m,
                                    SyntaxError::NoNoteOff,
                                    "missing release",
                                )?;
                                injected[3] += 1;
                            }
                        }
                    }
                }

                // systematic mutations checked against the oracle
                let n = vocab.len() as u32;
                for i in 1..ids.len() {
                    let mut candidates: Vec<u32> = (0..samples_per_position)
                        .map(|_| r.random_range(0..n))
                        .collect();
                    candidates.extend(ids.iter().copied());
                    candidates.sort_unstable();
                    candidates.dedup();
                    let mut variants = vec![{
                        let mut m = ids.clone();
                        m.remove(i);
                        m
                    }];
                    for &c in &candidates {
                        let mut m = ids.clone();
                        m[i] = c;
                        variants.push(m);
                        variants.push(insert(ids, i, c));
                    }
                    for m in variants {
                        let (counts, den) = counts_of(&tok, &m);
                        let o = oracle.score(&m, 0);
                        ensure!(
                            counts == o.counts && den == o.denominator,
                            "{scheme}: library {counts:?}/{den} oracle {:?}/{} on {m:?}",
                            o.counts,
                            o.denominator
                        );
                        ensure!(
                            counts.iter().sum::<usize>() <= den + 1,
                            "{scheme}: counts exceed tokens"
                        );
                        injected[5] += 1;
                    }
                }
            }
            Ok(injected)
        })
        .collect();
    let mut total = [0usize; 6];
    for r in all_ok(results)? {
        for k in 0..6 {
            total[k] += r[k];
        }
    }
    Ok(format!(
        "valid output scores 0; single violations type {} time {} dupn {} nnof {} nnon {} each counted once; {} mutated sequences match the oracle",
        total[0], total[1], total[2], total[3], total[4], total[5]
    ))
}

// ---------------------------------------------------------------------------

/// Random valid prefix: either a cut of a tokenizer output or a walk drawn
/// from the mask.
fn random_prefix(
    tok: &Tokenizer,
    r: &mut ChaCha8Rng,
    by_type: &BTreeMap<String, Vec<u32>>,
) -> Vec<u32> {
    if r.random_bool(0.5) {
        let score = random_preprocessed(r, &PreprocessConfig::default(), 30);
        let ids = tok.tokenize(&score).unwrap().swap_remove(0).ids;
        let end = ids.len() - 1;
        let cut = r.random_range(1..=end);
        return ids[1..cut].to_vec();
    }
    let mut st = GrammarState::new();
    let mut out = Vec::new();
    for _ in 0..r.random_range(0..64) {
        let next = tok.valid_next(&st);
        let types: Vec<_> = next.types.iter().collect();
        let Some(kind) = types.choose(r) else { break };
        let mut pool = by_type[kind.name()].clone();
        pool.shuffle(r);
        let Some(&id) = pool.iter().find(|&&id| tok.allows(&next, id)) else {
            break;
        };
        tok.advance(&mut st, id).unwrap().unwrap();
        out.push(id);
    }
    out
}

/// `classify` reports a type/time/dupn/nnon error exactly for the ids the
/// mask rejects, and every admitted id leaves a non-empty mask.
pub fn mask_duality(prefixes_per_scheme: usize) -> Check {
    let results: Vec<Result<usize, String>> = Scheme::all()
        .into_par_iter()
        .map(|scheme| {
            let tok = tokenizer(scheme);
            let vocab = tok.vocabulary();
            let mut by_type: BTreeMap<String, Vec<u32>> = BTreeMap::new();
            for d in vocab.entries() {
                by_type.entry(d.kind.name().to_string()).or_default().push(d.id);
            }
            let mut r = rng(scheme_seed(scheme) ^ 0xd0a1);
            let mut checked = 0;
            for k in 0..prefixes_per_scheme {
                let prefix = random_prefix(&tok, &mut r, &by_type);
                let mut st = GrammarState::new();
                for &id in &prefix {
                    let verdict = tok.advance(&mut st, id).unwrap();
                    ensure!(verdict.is_ok(), "{scheme}: prefix {k} is not valid");
                }
                let next = tok.valid_next(&st);
                let mut admitted = Vec::new();
                for id in SPECIAL_COUNT..vocab.len() as u32 {
                    let err = tok.classify(&st, id).unwrap();
                    let allowed = tok.allows(&next, id);
                    ensure!(
                        err.is_none() == allowed && err != Some(SyntaxError::NoNoteOff),
                        "{scheme}: prefix {prefix:?} token {} classified {err:?}, mask says {allowed}",
                        vocab.get(id).unwrap().text
                    );
                    if allowed {
                        admitted.push(id);
                    }
                    checked += 1;
                }
                ensure!(!admitted.is_empty(), "{scheme}: empty mask after {prefix:?}");
                for &id in admitted.choose_multiple(&mut r, 16) {
                    let mut after = st.clone();
                    tok.advance(&mut after, id).unwrap().unwrap();
                    ensure!(
                        !tok.valid_next(&after).types.is_empty(),
                        "{scheme}: dead end after {}",
                        vocab.get(id).unwrap().text
                    );
                }
            }
            Ok(checked)
        })
        .collect();
    let checked: usize = all_ok(results)?.iter().sum();
    Ok(format!(
        "{prefixes_per_scheme} prefixes x {} schemes, {checked} candidate tokens agree",
        Scheme::all().len()
    ))
}

// ---------------------------------------------------------------------------

fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

pub fn random_orthogonal(r: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    gaussian(r, d, d).qr().q()
}

/// `±e_i` for every axis: exactly equal variance in every direction.
pub fn cross(d: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(2 * d, d, |row, col| {
        if row % d == col {
            if row < d {
                scale
            } else {
                -scale
            }
        } else {
            0.0
        }
    })
}

pub fn geometry() -> Check {
    let d = 16;
    let mut r = rng(16);
    let iso = isoscore(&cross(d, 1.0)).map_err(|e| e.to_string())?;
    ensure!((iso - 1.0).abs() <= 1e-9, "uniform variance isoscore {iso}");

    let line = DMatrix::from_fn(50, d, |i, j| (i as f64 - 20.0) * [3.0, -1.0, 2.0][j % 3]);
    let flat = isoscore(&line).map_err(|e| e.to_string())?;
    ensure!(flat.abs() <= 1e-9, "one-directional isoscore {flat}");

    let sample = gaussian(&mut r, 10_000, d);
    let gauss = isoscore(&sample).map_err(|e| e.to_string())?;
    ensure!(gauss >= 0.95, "isotropic sample isoscore {gauss}");

    for k in 1..=8 {
        let basis = random_orthogonal(&mut r, d).columns(0, k).transpose();
        let coeff = DMatrix::from_fn(500, k, |_, _| r.random_range(-1.0..1.0));
        let points = coeff * basis;
        let id = pca_intrinsic_dim(&points, DEFAULT_PCA_THRESHOLD).map_err(|e| e.to_string())?;
        ensure!(id == k, "rank {k} data gave intrinsic dimension {id}");
    }

    let scales = DMatrix::from_fn(1, d, |_, j| 1.0 + j as f64);
    let data = DMatrix::from_fn(400, d, |i, j| {
        let z: f64 = StandardNormal.sample(&mut r);
        z * scales[(0, j)] + (i % 7) as f64 * 0.1
    });
    let q = random_orthogonal(&mut r, d);
    let rotated = &data * &q;
    let (a, b) = (isoscore(&data).unwrap(), isoscore(&rotated).unwrap());
    ensure!((a - b).abs() <= 1e-6, "isoscore {a} vs rotated {b}");
    let (a, b) = (
        pca_intrinsic_dim(&data, DEFAULT_PCA_THRESHOLD).unwrap(),
        pca_intrinsic_dim(&rotated, DEFAULT_PCA_THRESHOLD).unwrap(),
    );
    ensure!(a == b, "intrinsic dimension {a} vs rotated {b}");
    let (sa, sb) = (
        singular_spectrum(&data).unwrap(),
        singular_spectrum(&rotated).unwrap(),
    );
    let worst = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    ensure!(worst <= 1e-6, "spectrum moved by {worst} under rotation");

    // rank-1 towards isotropic: variance t on every axis but the first
    let mut family = Vec::new();
    for step in 0..5 {
        let t = step as f64 / 4.0;
        let m = DMatrix::from_fn(2 * d, d, |row, col| {
            let s = if col == 0 { 1.0 } else { t.sqrt() };
            if row % d == col {
                if row < d {
                    s
                } else {
                    -s
                }
            } else {
                0.0
            }
        });
        family.push(isoscore(&m).map_err(|e| e.to_string())?);
    }
    ensure!(
        family.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        "family isoscores {family:?}"
    );
    ensure!(
        family[0].abs() <= 1e-9 && (family[4] - 1.0).abs() <= 1e-9,
        "family ends {family:?}"
    );

    let f: Vec<String> = family.iter().map(|v| format!("{v:.3}")).collect();
    Ok(format!(
        "uniform {iso:.12}, line {flat:.1e}, gaussian {gauss:.4}, ranks 1..8 recovered, rotation drift {worst:.1e}, family {}",
        f.join("<=")
    ))
}

// ---------------------------------------------------------------------------

pub fn matching(graphs: usize) -> Check {
    let mut r = rng(8);
    let mut exact_lists = 0;
    for g in 0..graphs {
        let (nl, nr) = (r.random_range(1..=8u32), r.random_range(1..=8u32));
        let density = r.random_range(0.2..1.0);
        let integral = g % 2 == 0;
        let mut edges = Vec::new();
        for i in 0..nl {
            for j in 0..nr {
                if r.random_bool(density) {
                    let w = if integral {
                        f64::from(r.random_range(1..=4u32))
                    } else {
                        r.random_range(0.01..10.0)
                    };
                    edges.push((i, j, w));
                }
            }
        }
        let got = max_weight_matching(&edges).map_err(|e| e.to_string())?;
        let weight = matching_weight(&edges, &got);
        let (best, lex) = brute_force_matching(&edges, 1e-9);
        ensure!(
            (weight - best).abs() <= 1e-9 * (1.0 + best),
            "graph {g}: weight {weight} optimum {best}"
        );
        let mut lefts: Vec<u32> = got.iter().map(|p| p.0).collect();
        let mut rights: Vec<u32> = got.iter().map(|p| p.1).collect();
        lefts.sort_unstable();
        rights.sort_unstable();
        lefts.dedup();
        rights.dedup();
        ensure!(
            lefts.len() == got.len() && rights.len() == got.len(),
            "graph {g}: node reused"
        );
        let heaviest = edges.iter().map(|e| e.2).fold(0.0, f64::max);
        ensure!(
            weight >= heaviest - 1e-12,
            "graph {g}: lighter than its heaviest edge"
        );
        if integral {
            ensure!(
                got == lex,
                "graph {g}: {got:?} but the smallest optimal list is {lex:?}"
            );
            exact_lists += 1;
        }
    }
    Ok(format!(
        "{graphs} graphs up to 8x8 equal the exhaustive optimum; {exact_lists} tie-heavy graphs give the lexicographically smallest list"
    ))
}

pub fn split_ratios() -> Check {
    let ids: Vec<String> = (0..100).map(|i| format!("f{i:03}")).collect();
    let mut out = Vec::new();
    for (valid, test, want) in [(0.10, 0.15, [75, 10, 15]), (0.02, 0.05, [93, 2, 5])] {
        let spec = SplitSpec {
            valid_fraction: valid,
            test_fraction: test,
            seed: 1,
        };
        let s = split_corpus(&ids, spec).map_err(|e| e.to_string())?;
        let got = [s.train.len(), s.valid.len(), s.test.len()];
        ensure!(got == want, "valid {valid} test {test}: sizes {got:?}");
        ensure!(
            split_corpus(&ids, spec).unwrap() == s,
            "split is not deterministic"
        );
        let mut all: Vec<&String> = s.train.iter().chain(&s.valid).chain(&s.test).collect();
        all.sort();
        all.dedup();
        ensure!(all.len() == 100, "split is not a partition");
        out.push(format!("{}/{}/{}", got[0], got[1], got[2]));
    }
    Ok(out.join(" and "))
}

// ---------------------------------------------------------------------------

pub fn smf_robustness(iterations: usize) -> Check {
    let golden: &[u8] = include_bytes!("../data/golden_single_note.mid");
    let score = parse_smf(golden).map_err(|e| e.to_string())?;
    ensure!(
        score.tracks.len() == 1 && score.note_count() == 1,
        "golden parse {score:?}"
    );
    let n = score.tracks[0].notes[0];
    ensure!(
        (n.pitch, n.velocity, n.duration) == (60, 64, 480),
        "golden note {n:?}"
    );
    let back = parse_smf(&write_smf(&score).unwrap()).unwrap();
    ensure!(back == score, "golden round trip differs");

    let mut r = rng(0xf022);
    let seeds: Vec<Vec<u8>> = (0..16)
        .map(|_| write_smf(&super::random_writable_score(&mut r)).unwrap())
        .chain([golden.to_vec()])
        .collect();
    let mut parsed = 0;
    for i in 0..iterations {
        let mut bytes = seeds[i % seeds.len()].clone();
        for _ in 0..r.random_range(1..=4) {
            if bytes.is_empty() {
                break;
            }
            let k = r.random_range(0..bytes.len());
            match r.random_range(0..4) {
                0 => bytes[k] ^= 1 << r.random_range(0..8),
                1 => bytes[k] = r.random(),
                2 => bytes.truncate(k),
                _ => bytes.insert(k, r.random()),
            }
        }
        let outcome = std::panic::catch_unwind(|| parse_smf(&bytes).is_ok());
        match outcome {
            Ok(ok) => parsed += usize::from(ok),
            Err(_) => return Err(format!("parser panicked on iteration {i}")),
        }
    }
    Ok(format!(
        "golden file parses and round-trips; {iterations} fuzz inputs, {parsed} parsed, rest rejected, no panic"
    ))
}
