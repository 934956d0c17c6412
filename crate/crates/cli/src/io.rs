//! Reading inputs and writing report files.

use std::fs;
use std::path::{Path, PathBuf};

use bt_core::model::RawGaussianPrior;
use bt_core::{EventStudy, GaussianPrior, PriorSpec, RawEventStudy};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Raw bytes of an input file together with their SHA-256.
pub struct Source {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Source {
            path: path.to_path_buf(),
            bytes,
        })
    }
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Deserializes JSON, reporting the failing field path and position.
pub fn parse_json<T: DeserializeOwned>(src: &Source) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_slice(&src.bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let at = if path == "." { String::new() } else { format!(" at `{path}`") };
        // Errors raised from buffered content (tagged enums) carry no position.
        let pos = if inner.line() > 0 {
            format!("line {} column {}", inner.line(), inner.column())
        } else {
            "invalid value".to_string()
        };
        CliError::parse(&src.path, format!("{pos}{at}: {inner}"))
    })?;
    de.end().map_err(|e| CliError::parse(&src.path, e))?;
    Ok(value)
}

/// Event study read either from JSON or from a `period,estimate` CSV plus a covariance CSV.
/// The returned hash covers every byte that was read.
pub fn read_event_study(input: &Path, cov: Option<&Path>) -> Result<(EventStudy, String), CliError> {
    let src = Source::read(input)?;
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    match (is_csv, cov) {
        (false, None) => {
            let raw: RawEventStudy = parse_json(&src)?;
            Ok((EventStudy::validate(raw)?, sha256_hex(&[&src.bytes])))
        }
        (true, Some(cov)) => {
            let cov_src = Source::read(cov)?;
            let raw = raw_from_csv(&src, &cov_src)?;
            Ok((EventStudy::validate(raw)?, sha256_hex(&[&src.bytes, &cov_src.bytes])))
        }
        (true, None) => Err(CliError::Parse(format!(
            "{}: CSV estimates need a covariance matrix via --cov",
            input.display()
        ))),
        (false, Some(_)) => Err(CliError::Parse("--cov only applies to CSV estimates".into())),
    }
}

#[derive(Deserialize)]
struct EstimateRow {
    period: i64,
    estimate: f64,
}

fn csv_reader(bytes: &[u8], headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
    CliError::parse(path, format!("{line}{e}"))
}

fn raw_from_csv(est: &Source, cov: &Source) -> Result<RawEventStudy, CliError> {
    let mut rows = Vec::new();
    for rec in csv_reader(&est.bytes, true).deserialize() {
        let row: EstimateRow = rec.map_err(|e| csv_error(&est.path, e))?;
        rows.push(row);
    }
    let n_pre = rows.iter().take_while(|r| r.period < 0).count();
    let (pre, post) = rows.split_at(n_pre);

    let mut sigma = Vec::new();
    for rec in csv_reader(&cov.bytes, false).records() {
        let rec = rec.map_err(|e| csv_error(&cov.path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| CliError::parse(&cov.path, format!("line {line}: `{f}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        sigma.push(row);
    }
    Ok(RawEventStudy {
        pre_periods: pre.iter().map(|r| r.period).collect(),
        post_periods: post.iter().map(|r| r.period).collect(),
        beta_pre: pre.iter().map(|r| r.estimate).collect(),
        beta_post: post.iter().map(|r| r.estimate).collect(),
        sigma,
    })
}

/// Prior file schema before covariance validation, so that a malformed file (exit 3) is
/// distinguished from a well-formed but invalid prior (exit 2).
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawPriorSpec {
    Explicit(RawGaussianPrior),
    RandomWalk { mu: f64, sigma2: f64 },
    #[serde(rename = "ar1")]
    Ar1 { rho: f64, sigma_eps2: f64 },
}

pub fn read_prior(path: &Path) -> Result<(PriorSpec, String), CliError> {
    let src = Source::read(path)?;
    let spec = match parse_json::<RawPriorSpec>(&src)? {
        RawPriorSpec::Explicit(raw) => PriorSpec::Explicit(GaussianPrior::try_from(raw)?),
        RawPriorSpec::RandomWalk { mu, sigma2 } => PriorSpec::RandomWalk { mu, sigma2 },
        RawPriorSpec::Ar1 { rho, sigma_eps2 } => PriorSpec::Ar1 { rho, sigma_eps2 },
    };
    Ok((spec, sha256_hex(&[&src.bytes])))
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<(T, String), CliError> {
    let src = Source::read(path)?;
    let value = parse_json(&src)?;
    Ok((value, sha256_hex(&[&src.bytes])))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// `out.csv` gets its JSON sidecar at `out.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let side = out.with_extension("json");
    if side == out {
        out.with_extension("sidecar.json")
    } else {
        side
    }
}
