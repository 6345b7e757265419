//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use symtok::bpe::{apply_bpe, learn_bpe, merge_stats, undo_bpe, MergeTable};
use symtok::corpus::{
    filter_valid, matching_weight, max_weight_matching, parse_edge_list, split_corpus,
    FilterConfig, SplitSpec,
};
use symtok::geometry::{geometry_report, load_embeddings, DEFAULT_PCA_THRESHOLD};
use symtok::metrics::{self, TseReport};
use symtok::midi::{parse_smf, write_smf};
use symtok::score::{PreprocessConfig, Preprocessor, Score};
use symtok::tokenizer::{is_special, Scheme, TokenSequence, Tokenizer};

use crate::files::{self, Manifest, TOKEN_SUFFIX, VOCAB_FILE};
use crate::CliError;

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<Scheme>,
    pub preprocess: PreprocessConfig,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => serde_json::from_str(&files::read_text(p)?).map_err(|e| CliError::data(p, e)),
    }
}

fn parse_scheme(text: &str) -> Result<Scheme, CliError> {
    text.parse().map_err(|e| CliError::Usage(format!("{e}")))
}

fn snapshot<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("serializable")
}

/// The single scheme shared by all token files of a directory.
fn uniform_scheme(dir: &Path, seqs: &[(String, TokenSequence)]) -> Result<Scheme, CliError> {
    let first = seqs
        .first()
        .ok_or_else(|| CliError::data(dir, "no token files found"))?
        .1
        .scheme;
    if let Some((rel, s)) = seqs.iter().find(|(_, s)| s.scheme != first) {
        return Err(CliError::data(
            &dir.join(rel),
            format!(
                "scheme {} differs from {first} used by the other files",
                s.scheme
            ),
        ));
    }
    Ok(first)
}

fn tokenizer_from_vocab(path: &Path, scheme: Scheme) -> Result<Tokenizer, CliError> {
    Tokenizer::from_vocabulary(scheme, files::read_vocab(path)?)
        .map_err(|e| CliError::data(path, e))
}

fn out_file(out: &Path, rel: &str, suffix: &str) -> PathBuf {
    out.join(format!("{}{suffix}", files::stem(rel)))
}

#[derive(Debug, Args, Serialize)]
pub struct TokenizeArgs {
    /// Directory searched recursively for .mid/.midi files.
    pub in_dir: PathBuf,
    /// Tokenization scheme, e.g. `remi`, `tsd+programs`, `pvdm-tsd`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// JSON file with `scheme` and `preprocess` settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for token files, vocab.json and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Record unreadable files in the manifest instead of failing.
    #[arg(long)]
    pub skip_errors: bool,
}

pub fn tokenize(args: TokenizeArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let scheme = match (&args.scheme, config.scheme) {
        (Some(s), _) => parse_scheme(s)?,
        (None, Some(s)) => s,
        (None, None) => {
            return Err(CliError::Usage(
                "no scheme given (--scheme or config)".into(),
            ))
        }
    };
    let cfg_path = args.config.clone().unwrap_or_default();
    let pre =
        Preprocessor::new(config.preprocess.clone()).map_err(|e| CliError::data(&cfg_path, e))?;
    let tok =
        Tokenizer::new(scheme, &config.preprocess).map_err(|e| CliError::data(&cfg_path, e))?;

    let inputs = files::list(&args.in_dir, &files::is_midi)?;
    let results: Vec<Result<TokenSequence, CliError>> = inputs
        .par_iter()
        .map(|(_, path)| {
            let score = parse_smf(&files::read(path)?).map_err(|e| CliError::data(path, e))?;
            tok.tokenize_flat(&pre.preprocess(&score))
                .map_err(|e| CliError::data(path, e))
        })
        .collect();

    let mut manifest = Manifest::start(
        "tokenize",
        json!({"args": snapshot(&args), "scheme": scheme, "preprocess": config.preprocess}),
    );
    manifest.input(&args.in_dir);
    let mut skipped = Vec::new();
    let mut tokens = 0usize;
    let mut written = 0usize;
    for ((rel, _), result) in inputs.iter().zip(results) {
        match result {
            Ok(seq) => {
                tokens += seq.ids.len();
                written += 1;
                files::write_tokens(&out_file(&args.out, rel, TOKEN_SUFFIX), &seq)?;
            }
            Err(e) if args.skip_errors => {
                skipped.push(json!({"file": rel, "error": e.to_string()}))
            }
            Err(e) => return Err(e),
        }
    }
    let vocab_path = args.out.join(VOCAB_FILE);
    files::write(&vocab_path, tok.vocabulary().to_json())?;
    manifest.output(&args.out);
    manifest.note("files", json!(written));
    manifest.note("tokens", json!(tokens));
    manifest.note("vocab_size", json!(tok.vocabulary().len()));
    manifest.note("skipped", json!(skipped));
    manifest.finish(&files::manifest_path(&args.out, true), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct DetokenizeArgs {
    /// Directory of token files.
    pub in_dir: PathBuf,
    /// Base vocabulary; defaults to vocab.json inside the input directory.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Merge table to undo before decoding.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    /// Output directory for the MIDI files.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn detokenize(args: DetokenizeArgs) -> Result<(), CliError> {
    let seqs = files::read_token_dir(&args.in_dir)?;
    let vocab_path = files::vocab_path(args.vocab.as_deref(), &args.in_dir);
    let vocab = files::read_vocab(&vocab_path)?;
    let mut tokenizers: BTreeMap<String, Tokenizer> = BTreeMap::new();
    for (_, s) in &seqs {
        if let std::collections::btree_map::Entry::Vacant(e) =
            tokenizers.entry(s.scheme.to_string())
        {
            let t = Tokenizer::from_vocabulary(s.scheme, vocab.clone())
                .map_err(|e| CliError::data(&vocab_path, e))?;
            e.insert(t);
        }
    }
    let table = args.merges.as_deref().map(files::read_merges).transpose()?;

    let results: Vec<Result<(Vec<u8>, usize), CliError>> = seqs
        .par_iter()
        .map(|(rel, seq)| {
            let path = args.in_dir.join(rel);
            let ids = match &table {
                Some(t) => undo_bpe(&seq.ids, t).map_err(|e| CliError::data(&path, e))?,
                None => seq.ids.clone(),
            };
            let (score, diag) = tokenizers[&seq.scheme.to_string()]
                .detokenize(&ids)
                .map_err(|e| CliError::data(&path, e))?;
            let bytes = write_smf(&score).map_err(|e| CliError::data(&path, e))?;
            Ok((bytes, diag.total()))
        })
        .collect();

    let mut manifest = Manifest::start("detokenize", json!({"args": snapshot(&args)}));
    manifest.input(&args.in_dir);
    let mut recovered = BTreeMap::new();
    for ((rel, _), result) in seqs.iter().zip(results) {
        let (bytes, problems) = result?;
        if problems > 0 {
            recovered.insert(rel.clone(), problems);
        }
        files::write(&out_file(&args.out, rel, ".mid"), bytes)?;
    }
    manifest.output(&args.out);
    manifest.note("files", json!(seqs.len()));
    manifest.note("recovered_errors", json!(recovered));
    manifest.finish(&files::manifest_path(&args.out, true), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct BpeLearnArgs {
    /// Directory of base token files.
    pub token_dir: PathBuf,
    /// Target vocabulary size, base tokens included.
    #[arg(long)]
    pub vocab_size: usize,
    /// Base vocabulary; defaults to vocab.json inside the token directory.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output merge table (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn bpe_learn(args: BpeLearnArgs) -> Result<(), CliError> {
    let seqs = files::read_token_dir(&args.token_dir)?;
    let vocab_path = files::vocab_path(args.vocab.as_deref(), &args.token_dir);
    let vocab = files::read_vocab(&vocab_path)?;
    let base = vocab.len() as u32;
    if args.vocab_size < base as usize {
        return Err(CliError::Usage(format!(
            "--vocab-size {} is below the base vocabulary size {base}",
            args.vocab_size
        )));
    }
    for (rel, seq) in &seqs {
        if let Some((i, id)) = seq.ids.iter().enumerate().find(|(_, &id)| id >= base) {
            return Err(CliError::data(
                &args.token_dir.join(rel),
                format!("token id {id} at index {i} is outside the base vocabulary of {base}"),
            ));
        }
    }
    let corpus: Vec<Vec<u32>> = seqs.into_iter().map(|(_, s)| s.ids).collect();
    let table = learn_bpe(&corpus, base, args.vocab_size)
        .map_err(|e| CliError::data(&args.token_dir, e))?;
    files::write(&args.out, table.to_json())?;

    let stats = merge_stats(&table, &vocab);
    let mut manifest = Manifest::start("bpe-learn", json!({"args": snapshot(&args)}));
    manifest.input(&args.token_dir);
    manifest.input(&vocab_path);
    manifest.output(&args.out);
    manifest.note("base_size", json!(base));
    manifest.note("merges", json!(table.len()));
    manifest.note("average_length", json!(stats.average_length));
    manifest.note("max_length", json!(stats.max_length));
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct BpeArgs {
    /// Directory of token files.
    pub token_dir: PathBuf,
    /// Merge table (JSON).
    #[arg(long)]
    pub merges: PathBuf,
    /// Output directory for the converted token files.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn bpe_apply(args: BpeArgs, encode: bool) -> Result<(), CliError> {
    let name = if encode { "bpe-apply" } else { "bpe-undo" };
    let table = files::read_merges(&args.merges)?;
    let seqs = files::read_token_dir(&args.token_dir)?;
    let results: Vec<Result<TokenSequence, CliError>> = seqs
        .par_iter()
        .map(|(rel, seq)| {
            let ids = if encode {
                apply_bpe(&seq.ids, &table)
            } else {
                undo_bpe(&seq.ids, &table)
            };
            ids.map(|ids| TokenSequence::new(seq.scheme, ids))
                .map_err(|e| CliError::data(&args.token_dir.join(rel), e))
        })
        .collect();

    let mut manifest = Manifest::start(name, json!({"args": snapshot(&args)}));
    manifest.input(&args.token_dir);
    manifest.input(&args.merges);
    let (mut before, mut after) = (0usize, 0usize);
    for ((rel, seq), result) in seqs.iter().zip(results) {
        let out = result?;
        before += seq.ids.len();
        after += out.ids.len();
        files::write_tokens(&args.out.join(rel), &out)?;
    }
    let vocab = args.token_dir.join(VOCAB_FILE);
    if vocab.is_file() {
        files::write(&args.out.join(VOCAB_FILE), files::read(&vocab)?)?;
    }
    manifest.output(&args.out);
    manifest.note("files", json!(seqs.len()));
    manifest.note("tokens_in", json!(before));
    manifest.note("tokens_out", json!(after));
    manifest.finish(&files::manifest_path(&args.out, true), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    /// Directory of token files, BPE-encoded when --merges is given.
    pub token_dir: PathBuf,
    /// Merge table the token files were encoded with.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    /// Base vocabulary; defaults to vocab.json inside the token directory.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Timed encode/decode passes (at least 3).
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Output report (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn stats(args: StatsArgs) -> Result<(), CliError> {
    let seqs = files::read_token_dir(&args.token_dir)?;
    let scheme = uniform_scheme(&args.token_dir, &seqs)?;
    let vocab_path = files::vocab_path(args.vocab.as_deref(), &args.token_dir);
    let tok = tokenizer_from_vocab(&vocab_path, scheme)?;
    let table = args.merges.as_deref().map(files::read_merges).transpose()?;
    if let Some(t) = &table {
        if t.base_size() as usize != tok.vocabulary().len() {
            return Err(CliError::data(
                args.merges.as_deref().unwrap_or(Path::new("")),
                format!(
                    "merge table base size {} does not match the vocabulary size {}",
                    t.base_size(),
                    tok.vocabulary().len()
                ),
            ));
        }
    }

    let decoded: Vec<Result<(Score, f64), CliError>> = seqs
        .par_iter()
        .map(|(rel, seq)| {
            let path = args.token_dir.join(rel);
            let base = match &table {
                Some(t) => undo_bpe(&seq.ids, t).map_err(|e| CliError::data(&path, e))?,
                None => seq.ids.clone(),
            };
            let (score, _) = tok
                .detokenize(&base)
                .map_err(|e| CliError::data(&path, e))?;
            let n = seq.ids.iter().filter(|&&id| !is_special(id)).count();
            let tpb = n as f64 / metrics::beats(&score);
            Ok((score, tpb))
        })
        .collect();
    let mut scores = Vec::with_capacity(seqs.len());
    let mut per_file = BTreeMap::new();
    for ((rel, _), r) in seqs.iter().zip(decoded) {
        let (score, tpb) = r?;
        per_file.insert(rel.clone(), tpb);
        scores.push(score);
    }
    let mean = per_file.values().sum::<f64>() / per_file.len() as f64;
    let vocab_size = table
        .as_ref()
        .map_or(tok.vocabulary().len(), MergeTable::vocab_size);
    let encoded: Vec<Vec<u32>> = seqs.iter().map(|(_, s)| s.ids.clone()).collect();
    let coverage = metrics::vocab_coverage(&encoded, vocab_size);
    let bpe = table.as_ref().map(|t| merge_stats(t, tok.vocabulary()));
    let timing = metrics::timing_profile(&scores, &tok, table.as_ref(), args.repetitions)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let report = json!({
        "scheme": scheme,
        "files": seqs.len(),
        "vocab_size": vocab_size,
        "tokens_per_beat": mean,
        "tokens_per_beat_by_file": per_file,
        "vocab_coverage": coverage,
        "merge_stats": bpe,
        "deterministic": timing.deterministic,
        "timing": {
            "repetitions": timing.repetitions,
            "tokenize_seconds_per_file": timing.tokenize_seconds_per_file,
            "detokenize_seconds_per_file": timing.detokenize_seconds_per_file,
        },
    });
    files::write_json(&args.out, &report)?;
    let mut manifest = Manifest::start("stats", json!({"args": snapshot(&args)}));
    manifest.input(&args.token_dir);
    manifest.output(&args.out);
    manifest.note("tokens_per_beat", json!(mean));
    manifest.finish(
        &files::manifest_path(&args.out, false),
        report["timing"].clone(),
    )
}

#[derive(Debug, Args, Serialize)]
pub struct TseArgs {
    /// Directory of token files.
    pub token_dir: PathBuf,
    /// Expected scheme; files under another scheme are rejected.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Base vocabulary; defaults to vocab.json inside the token directory,
    /// then to the vocabulary built from --config.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// JSON config used when no vocabulary file is available.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Merge table to undo before scoring.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    /// Number of leading tokens excluded from scoring.
    #[arg(long, default_value_t = 0)]
    pub prompt_offset: usize,
    /// Output report (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn tse(args: TseArgs) -> Result<(), CliError> {
    let seqs = files::read_token_dir(&args.token_dir)?;
    let scheme = uniform_scheme(&args.token_dir, &seqs)?;
    if let Some(expected) = args.scheme.as_deref().map(parse_scheme).transpose()? {
        if expected != scheme {
            return Err(CliError::data(
                &args.token_dir,
                format!("token files use scheme {scheme}, expected {expected}"),
            ));
        }
    }
    let vocab_path = files::vocab_path(args.vocab.as_deref(), &args.token_dir);
    let tok = if args.vocab.is_some() || vocab_path.is_file() {
        tokenizer_from_vocab(&vocab_path, scheme)?
    } else {
        let cfg = load_config(args.config.as_deref())?;
        Tokenizer::new(scheme, &cfg.preprocess)
            .map_err(|e| CliError::data(args.config.as_deref().unwrap_or(Path::new("")), e))?
    };
    let table = args.merges.as_deref().map(files::read_merges).transpose()?;

    let reports: Vec<Result<TseReport, CliError>> = seqs
        .par_iter()
        .map(|(rel, seq)| {
            let path = args.token_dir.join(rel);
            match &table {
                Some(t) => metrics::tse_bpe(&tok, t, &seq.ids, args.prompt_offset)
                    .map_err(|e| CliError::data(&path, e)),
                None => metrics::tse(&tok, &seq.ids, args.prompt_offset)
                    .map_err(|e| CliError::data(&path, e)),
            }
        })
        .collect();
    let mut per_file = Vec::with_capacity(seqs.len());
    let mut all = Vec::with_capacity(seqs.len());
    for ((rel, _), r) in seqs.iter().zip(reports) {
        let r = r?;
        per_file.push(json!({"file": rel, "report": r}));
        all.push(r);
    }
    let report = json!({
        "scheme": scheme,
        "prompt_offset": args.prompt_offset,
        "files": per_file,
        "aggregate": TseReport::aggregate(scheme, &all),
    });
    files::write_json(&args.out, &report)?;
    let mut manifest = Manifest::start("tse", json!({"args": snapshot(&args)}));
    manifest.input(&args.token_dir);
    manifest.output(&args.out);
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct GeometryArgs {
    /// Embedding matrix in EMB1 format.
    pub emb: PathBuf,
    /// Eigenvalue ratio cut-off for the PCA intrinsic dimension.
    #[arg(long, default_value_t = DEFAULT_PCA_THRESHOLD)]
    pub threshold: f64,
    /// Output report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the spectrum as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn embed_geometry(args: GeometryArgs) -> Result<(), CliError> {
    let m = load_embeddings(&files::read(&args.emb)?).map_err(|e| CliError::data(&args.emb, e))?;
    let report = geometry_report(&m.to_dmatrix(), args.threshold)
        .map_err(|e| CliError::data(&args.emb, e))?;
    files::write_json(
        &args.out,
        &json!({
            "rows": m.rows,
            "cols": m.cols,
            "isoscore": report.isoscore,
            "pca_id": report.pca_id,
            "pca_threshold": args.threshold,
            "spectrum": report.spectrum,
        }),
    )?;
    let mut manifest = Manifest::start("embed-geometry", json!({"args": snapshot(&args)}));
    manifest.input(&args.emb);
    manifest.output(&args.out);
    if let Some(csv) = &args.csv {
        let mut text = String::from("index,singular_value\n");
        for (i, s) in report.spectrum.iter().enumerate() {
            text.push_str(&format!("{i},{s}\n"));
        }
        files::write(csv, text)?;
        manifest.output(csv);
    }
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    /// Directory searched recursively for .mid/.midi files.
    pub in_dir: PathBuf,
    /// JSON file with `time_signature_numerator` and `min_tracks`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output report (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn filter(args: FilterArgs) -> Result<(), CliError> {
    let config: FilterConfig = match &args.config {
        None => FilterConfig::default(),
        Some(p) => serde_json::from_str(&files::read_text(p)?).map_err(|e| CliError::data(p, e))?,
    };
    let inputs = files::list(&args.in_dir, &files::is_midi)?;
    let loaded: Vec<(String, Vec<u8>)> = inputs
        .par_iter()
        .map(|(rel, path)| Ok((rel.clone(), files::read(path)?)))
        .collect::<Result<_, CliError>>()?;
    let report = filter_valid(&loaded, &config);
    files::write_json(&args.out, &report)?;
    let mut manifest =
        Manifest::start("filter", json!({"args": snapshot(&args), "filter": config}));
    manifest.input(&args.in_dir);
    manifest.output(&args.out);
    manifest.note("accepted", json!(report.accepted.len()));
    manifest.note("rejected", json!(report.rejected.len()));
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct DedupArgs {
    /// Edge list: `left<TAB>right<TAB>weight` per line.
    pub edges: PathBuf,
    /// Output matching as TSV.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn dedup(args: DedupArgs) -> Result<(), CliError> {
    let edges = parse_edge_list(&files::read_text(&args.edges)?)
        .map_err(|e| CliError::data(&args.edges, e))?;
    let pairs = max_weight_matching(&edges).map_err(|e| CliError::data(&args.edges, e))?;
    let weights: BTreeMap<(&str, &str), f64> = edges
        .iter()
        .map(|(l, r, w)| ((l.as_str(), r.as_str()), *w))
        .collect();
    let mut text = String::new();
    for (l, r) in &pairs {
        text.push_str(&format!(
            "{l}\t{r}\t{}\n",
            weights[&(l.as_str(), r.as_str())]
        ));
    }
    files::write(&args.out, text)?;
    let mut manifest = Manifest::start("dedup", json!({"args": snapshot(&args)}));
    manifest.input(&args.edges);
    manifest.output(&args.out);
    manifest.note("edges", json!(edges.len()));
    manifest.note("pairs", json!(pairs.len()));
    manifest.note("total_weight", json!(matching_weight(&edges, &pairs)));
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Text file with one id per line.
    pub list: PathBuf,
    /// Fraction of ids in the validation set.
    #[arg(long)]
    pub valid: f64,
    /// Fraction of ids in the test set.
    #[arg(long)]
    pub test: f64,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output split manifest (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn split(args: SplitArgs) -> Result<(), CliError> {
    let text = files::read_text(&args.list)?;
    let mut ids: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::data(
            &args.list,
            format!("duplicate id {:?}", w[0]),
        ));
    }
    let spec = SplitSpec {
        valid_fraction: args.valid,
        test_fraction: args.test,
        seed: args.seed,
    };
    let split = split_corpus(&ids, spec).map_err(|e| CliError::data(&args.list, e))?;
    files::write_json(&args.out, &split)?;
    let mut manifest = Manifest::start("split", json!({"args": snapshot(&args)}));
    manifest.input(&args.list);
    manifest.output(&args.out);
    manifest.note(
        "sizes",
        json!({"train": split.train.len(), "valid": split.valid.len(), "test": split.test.len()}),
    );
    manifest.finish(&files::manifest_path(&args.out, false), json!({}))
}
