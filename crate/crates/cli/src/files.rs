//! File discovery, JSON artifacts and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use symtok::bpe::MergeTable;
use symtok::tokenizer::{TokenSequence, Vocabulary};

use crate::CliError;

/// Suffix of token files written by `tokenize` and the BPE commands.
pub const TOKEN_SUFFIX: &str = ".tokens.json";
pub const VOCAB_FILE: &str = "vocab.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(path, text)
}

/// Files under `dir` whose names satisfy `keep`, recursively, as
/// `(relative path, full path)` sorted by relative path.
pub fn list(dir: &Path, keep: &dyn Fn(&str) -> bool) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|e| CliError::io(&d, e))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if keep(name) {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap_or(&path)
                    .to_string_lossy()
                    .replace('\\', "/");
                out.push((rel, path));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn is_midi(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.ends_with(".mid") || lower.ends_with(".midi")
}

pub fn is_tokens(name: &str) -> bool {
    name.ends_with(TOKEN_SUFFIX)
}

/// `a/b.mid` → `a/b`; `a/b.tokens.json` → `a/b`.
pub fn stem(rel: &str) -> String {
    if let Some(s) = rel.strip_suffix(TOKEN_SUFFIX) {
        return s.to_string();
    }
    match rel.rfind('.') {
        Some(i) if !rel[i..].contains('/') => rel[..i].to_string(),
        _ => rel.to_string(),
    }
}

pub fn read_tokens(path: &Path) -> Result<TokenSequence, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::data(path, e))
}

pub fn write_tokens(path: &Path, seq: &TokenSequence) -> Result<(), CliError> {
    let mut text = serde_json::to_string(seq).expect("serializable");
    text.push('\n');
    write(path, text)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    Vocabulary::from_json(&read_text(path)?).map_err(|e| CliError::data(path, e))
}

pub fn read_merges(path: &Path) -> Result<MergeTable, CliError> {
    MergeTable::from_json(&read_text(path)?).map_err(|e| CliError::data(path, e))
}

/// Explicit vocabulary path, or `vocab.json` inside the token directory.
pub fn vocab_path(explicit: Option<&Path>, token_dir: &Path) -> PathBuf {
    explicit.map_or_else(|| token_dir.join(VOCAB_FILE), Path::to_path_buf)
}

/// All token files of a directory with their relative names.
pub fn read_token_dir(dir: &Path) -> Result<Vec<(String, TokenSequence)>, CliError> {
    list(dir, &is_tokens)?
        .into_iter()
        .map(|(rel, path)| Ok((rel, read_tokens(&path)?)))
        .collect()
}

/// Record of one run; everything except `timing` is reproducible.
pub struct Manifest {
    command: &'static str,
    config: Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    extra: Value,
    started: Instant,
}

impl Manifest {
    pub fn start(command: &'static str, config: Value) -> Self {
        Self {
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: json!({}),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Adds a reproducible result field.
    pub fn note(&mut self, key: &str, value: Value) {
        self.extra[key] = value;
    }

    pub fn finish(self, path: &Path, timing: Value) -> Result<(), CliError> {
        let mut timing = timing;
        if !timing.is_object() {
            timing = json!({});
        }
        timing["wall_seconds"] = json!(self.started.elapsed().as_secs_f64());
        let manifest = json!({
            "command": self.command,
            "engine_version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": self.extra,
            "timing": timing,
        });
        write_json(path, &manifest)
    }
}

/// Manifest location for a directory output or a single-file output.
pub fn manifest_path(out: &Path, out_is_dir: bool) -> PathBuf {
    if out_is_dir {
        out.join(MANIFEST_FILE)
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}
