//! Dataset manifests and the score CSV interchange format.
//!
//! Both are CSV files preceded by `#` comment lines. The first comment names
//! the format and version (`# noiseflood-manifest v1`, `# noiseflood-scores v1`);
//! further comments carry provenance and are ignored by readers.
//!
//! Manifest columns: `id,path,is_adversarial,source,target`. Relative paths
//! are resolved against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::Label;
use crate::flooding::{FloodingScore, ScoreVector, ScoredRow, BAND_KEYS, NUM_BANDS};

pub const MANIFEST_VERSION_LINE: &str = "# noiseflood-manifest v1";
pub const SCORES_VERSION_LINE: &str = "# noiseflood-scores v1";

pub const MANIFEST_HEADER: [&str; 5] = ["id", "path", "is_adversarial", "source", "target"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

fn format_err(context: impl Into<String>, message: impl Into<String>) -> DatasetError {
    DatasetError::Format { context: context.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    pub is_adversarial: Option<bool>,
    pub source: Option<Label>,
    pub target: Option<Label>,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    /// Directory that relative WAV paths are resolved against.
    pub base_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

pub(crate) fn parse_truth(raw: &str) -> Result<Option<bool>, String> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "1" | "true" | "adversarial" => Ok(Some(true)),
        "0" | "false" | "benign" => Ok(Some(false)),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

pub(crate) fn format_truth(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

fn opt_label(raw: &str) -> Option<Label> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| Label::from(raw))
}

fn check_version(text: &str, expected: &str, context: &str) -> Result<(), DatasetError> {
    let kind = expected.split_whitespace().nth(1).unwrap_or_default();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut words = rest.split_whitespace();
            if words.next() == Some(kind) {
                return match words.next() {
                    Some("v1") => Ok(()),
                    other => Err(format_err(context, format!("unsupported {kind} version {other:?}"))),
                };
            }
        } else if !line.is_empty() {
            break;
        }
    }
    // files without a version line are read as v1
    Ok(())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_owned(), source })
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = read_text(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base_dir, &path.display().to_string())
    }

    pub fn parse(text: &str, base_dir: PathBuf, context: &str) -> Result<Self, DatasetError> {
        check_version(text, MANIFEST_VERSION_LINE, context)?;
        let mut rdr = reader(text);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| format_err(context, format!("missing column `{name}`")))
        };
        let (id_c, path_c, adv_c) = (col("id")?, col("path")?, col("is_adversarial")?);
        let src_c = headers.iter().position(|h| h == "source");
        let tgt_c = headers.iter().position(|h| h == "target");

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let ctx = format!("{context} row {}", i + 1);
            let get = |c: usize| rec.get(c).unwrap_or("");
            let row = ManifestRow {
                id: get(id_c).to_owned(),
                path: get(path_c).to_owned(),
                is_adversarial: parse_truth(get(adv_c)).map_err(|m| format_err(&ctx, m))?,
                source: src_c.and_then(|c| opt_label(get(c))),
                target: tgt_c.and_then(|c| opt_label(get(c))),
            };
            rows.push(row);
        }
        let manifest = Self { base_dir, rows };
        manifest.validate(context)?;
        Ok(manifest)
    }

    fn validate(&self, context: &str) -> Result<(), DatasetError> {
        let mut ids = HashSet::new();
        for row in &self.rows {
            if row.id.is_empty() {
                return Err(format_err(context, "empty id"));
            }
            if row.path.is_empty() {
                return Err(format_err(context, format!("row `{}` has no path", row.id)));
            }
            if !ids.insert(row.id.as_str()) {
                return Err(format_err(context, format!("duplicate id `{}`", row.id)));
            }
            match row.is_adversarial {
                Some(true) => {
                    if row.source.is_some() && row.source == row.target {
                        return Err(format_err(context, format!("adversarial row `{}` has source == target", row.id)));
                    }
                }
                _ => {
                    if row.target.is_some() {
                        return Err(format_err(context, format!("non-adversarial row `{}` has a target label", row.id)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_csv_string(&self) -> Result<String, DatasetError> {
        let mut out = format!("{MANIFEST_VERSION_LINE}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(MANIFEST_HEADER)?;
            for r in &self.rows {
                w.write_record([
                    r.id.as_str(),
                    r.path.as_str(),
                    format_truth(r.is_adversarial),
                    r.source.as_ref().map_or("", Label::as_str),
                    r.target.as_ref().map_or("", Label::as_str),
                ])?;
            }
            w.flush().map_err(|source| DatasetError::Io { path: PathBuf::new(), source })?;
        }
        Ok(String::from_utf8(out).expect("csv output is UTF-8"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()?).map_err(|source| DatasetError::Io { path: path.to_owned(), source })
    }
}

/// Search parameters recorded on every score row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreParams {
    pub seed: u64,
    pub step: u32,
    pub eps_max: u32,
}

pub fn score_header() -> Vec<String> {
    let mut h: Vec<String> = MANIFEST_HEADER.iter().map(|s| s.to_string()).collect();
    h.extend(BAND_KEYS.iter().map(|k| format!("eps_{k}")));
    h.extend(BAND_KEYS.iter().map(|k| format!("flipped_{k}")));
    h.extend(["seed", "s", "eps_max"].map(String::from));
    h
}

/// Writes the score CSV. `comments` are emitted as `# ` lines after the
/// version line.
pub fn write_scores<W: Write>(
    out: W,
    rows: &[ScoredRow],
    params: ScoreParams,
    comments: &[String],
) -> Result<(), DatasetError> {
    let mut out = out;
    let io_err = |source| DatasetError::Io { path: PathBuf::new(), source };
    writeln!(out, "{SCORES_VERSION_LINE}").map_err(io_err)?;
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}").map_err(io_err)?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(score_header())?;
    for r in rows {
        let v = &r.vector;
        let mut rec = vec![
            r.id.clone(),
            r.path.clone(),
            format_truth(v.is_adversarial).to_owned(),
            v.source.as_ref().map_or_else(String::new, |l| l.to_string()),
            v.target.as_ref().map_or_else(String::new, |l| l.to_string()),
        ];
        rec.extend(v.scores.iter().map(|s| s.map_or_else(String::new, |s| s.epsilon.to_string())));
        rec.extend(v.scores.iter().map(|s| s.map_or_else(String::new, |s| u8::from(s.flipped).to_string())));
        rec.extend([params.seed.to_string(), params.step.to_string(), params.eps_max.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub rows: Vec<ScoredRow>,
    /// Shared search parameters; `None` for an empty table.
    pub params: Option<ScoreParams>,
}

impl ScoreTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, context: &str) -> Result<Self, DatasetError> {
        check_version(text, SCORES_VERSION_LINE, context)?;
        let mut rdr = reader(text);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| format_err(context, format!("missing column `{name}`")))
        };
        let id_c = col("id")?;
        let path_c = col("path")?;
        let adv_c = col("is_adversarial")?;
        let src_c = col("source")?;
        let tgt_c = col("target")?;
        let mut eps_c = [0; NUM_BANDS];
        let mut flip_c = [0; NUM_BANDS];
        for (i, key) in BAND_KEYS.iter().enumerate() {
            eps_c[i] = col(&format!("eps_{key}"))?;
            flip_c[i] = col(&format!("flipped_{key}"))?;
        }
        let (seed_c, s_c, max_c) = (col("seed")?, col("s")?, col("eps_max")?);

        let mut rows = Vec::new();
        let mut params: Option<ScoreParams> = None;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let ctx = format!("{context} row {}", i + 1);
            let get = |c: usize| rec.get(c).unwrap_or("");
            let num = |c: usize, what: &str| -> Result<u64, DatasetError> {
                get(c).parse::<u64>().map_err(|_| format_err(&ctx, format!("bad {what} `{}`", get(c))))
            };
            let row_params = ScoreParams {
                seed: num(seed_c, "seed")?,
                step: num(s_c, "s")? as u32,
                eps_max: num(max_c, "eps_max")? as u32,
            };
            match params {
                None => params = Some(row_params),
                Some(p) if p != row_params => {
                    return Err(format_err(&ctx, "rows were scored with different seed/s/eps_max settings"))
                }
                _ => {}
            }
            let mut v = ScoreVector::default();
            for b in 0..NUM_BANDS {
                let eps = get(eps_c[b]);
                if eps.is_empty() {
                    continue;
                }
                let epsilon = eps.parse::<u32>().map_err(|_| format_err(&ctx, format!("bad score `{eps}`")))?;
                let flipped = parse_truth(get(flip_c[b]))
                    .map_err(|m| format_err(&ctx, m))?
                    .unwrap_or(epsilon < row_params.eps_max);
                // calls are not stored; reconstruct the count implied by the grid
                let calls_used = epsilon / row_params.step.max(1) + 1;
                v.scores[b] = Some(FloodingScore { epsilon, flipped, calls_used });
            }
            v.is_adversarial = parse_truth(get(adv_c)).map_err(|m| format_err(&ctx, m))?;
            v.source = opt_label(get(src_c));
            v.target = opt_label(get(tgt_c));
            rows.push(ScoredRow { id: get(id_c).to_owned(), path: get(path_c).to_owned(), vector: v });
        }
        Ok(Self { rows, params })
    }

    pub fn vectors(&self) -> Vec<ScoreVector> {
        self.rows.iter().map(|r| r.vector.clone()).collect()
    }
}
