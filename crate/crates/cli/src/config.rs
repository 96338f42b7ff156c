//! JSON config files and output paths.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fran_core::model::{parse_rational, Rational};
use serde::Deserialize;

/// Environment variable that relocates relative output paths.
pub const OUT_DIR_VAR: &str = "FRAN_OUT_DIR";

/// A number given either as JSON number or as text such as `"3/8"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn text(&self) -> String {
        match self {
            Num::Int(i) => i.to_string(),
            Num::Float(f) => f.to_string(),
            Num::Text(t) => t.clone(),
        }
    }
}

/// Either a JSON array or a comma-separated string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum List {
    Items(Vec<Num>),
    Text(String),
}

impl List {
    fn text(&self) -> String {
        match self {
            List::Items(v) => v.iter().map(Num::text).collect::<Vec<_>>().join(","),
            List::Text(t) => t.clone(),
        }
    }
}

/// Keys of a `--config` file. Names match the long flags with `-` replaced
/// by `_`; flags given on the command line take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kt: Option<u32>,
    pub kr: Option<u32>,
    pub nt: Option<u32>,
    pub n_files: Option<u32>,
    pub mu: Option<Num>,
    pub r: Option<Num>,
    pub mode: Option<String>,
    pub format: Option<String>,
    pub mu_list: Option<List>,
    pub mu_steps: Option<u32>,
    pub r_list: Option<List>,
    pub kt_list: Option<List>,
    pub kr_list: Option<List>,
    pub nt_list: Option<List>,
    pub example: Option<u8>,
    pub m: Option<u32>,
    pub demand: Option<List>,
    pub seeds: Option<u64>,
    pub seed_start: Option<u64>,
    pub snr_db: Option<List>,
    pub snr_out: Option<PathBuf>,
    pub block_markov: Option<u32>,
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub sequential: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fills `slot` from the config file unless the flag was given.
pub fn fill<T: Clone>(slot: &mut Option<T>, file: &Option<T>) {
    if slot.is_none() {
        slot.clone_from(file);
    }
}

pub fn fill_num(slot: &mut Option<String>, file: &Option<Num>) {
    if slot.is_none() {
        *slot = file.as_ref().map(Num::text);
    }
}

pub fn fill_list(slot: &mut Option<String>, file: &Option<List>) {
    if slot.is_none() {
        *slot = file.as_ref().map(List::text);
    }
}

/// Rejects keys that are given together, whether as flags or from the file.
pub fn exclusive(a: (&str, bool), b: (&str, bool)) -> Result<()> {
    if a.1 && b.1 {
        bail!("--{} and --{} are mutually exclusive", a.0, b.0);
    }
    Ok(())
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().with_context(|| format!("missing --{flag} (flag or config key)"))
}

pub fn rational(s: &str) -> Result<Rational> {
    Ok(parse_rational(s)?)
}

pub fn rational_list(s: &str) -> Result<Vec<Rational>> {
    let v = split(s).map(rational).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list `{s}`");
    }
    Ok(v)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v =
        split(s).map(|t| t.parse::<T>().with_context(|| format!("bad list item `{t}`"))).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list `{s}`");
    }
    Ok(v)
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Resolves an output path against the override directory, if set, and
/// creates missing parent directories.
pub fn output_path(path: &Path) -> Result<PathBuf> {
    let p = match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(p)
}

/// Writes `text` to `path` (after override resolution) or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let p = output_path(p)?;
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
