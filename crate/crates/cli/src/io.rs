//! Input parsing, output writing and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gsm_core::{Observations, Transform};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Raw bytes of an input file with their SHA-256 digest.
pub struct Input {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub sha256: String,
}

impl Input {
    pub fn read(path: &Path) -> CliResult<Input> {
        let bytes = fs::read(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        let sha256 = format!("{:x}", Sha256::digest(&bytes));
        Ok(Input {
            path: path.to_path_buf(),
            bytes,
            sha256,
        })
    }
}

/// Parses a single-column CSV of positive reals with an optional `value`
/// header.
pub fn parse_values(input: &Input) -> CliResult<Observations> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input.bytes.as_slice());
    let mut values = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let line = reader.position().line();
        let more = reader.read_record(&mut record).map_err(|e| CliError::DataLine {
            path: input.path.clone(),
            line: e.position().map_or(line, |p| p.line()),
            msg: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(line, |p| p.line());
        let bad = |msg: String| CliError::DataLine {
            path: input.path.clone(),
            line,
            msg,
        };
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 1 {
            return Err(bad(format!("expected one column, found {}", record.len())));
        }
        let field = record[0].trim();
        if first && field == "value" {
            first = false;
            continue;
        }
        first = false;
        let v: f64 = field
            .parse()
            .map_err(|_| bad(format!("'{field}' is not a number")))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(format!("value {field} is not a positive finite number")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{} contains no values", input.path.display())));
    }
    Ok(Observations::new(values)?)
}

/// Parses JSON, mapping schema violations to config errors.
pub fn parse_json<T: DeserializeOwned>(input: &Input) -> CliResult<T> {
    serde_json::from_slice(&input.bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse_json(&Input::read(path)?)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

/// Writes a CSV with the given header and rows.
pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let file = fs::File::create(path).map_err(CliError::io(format!("writing {}", path.display())))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let err = |e: csv::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(CliError::io(format!("writing {}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(name: &str, input: &Input) -> Self {
        InputDigest {
            name: name.into(),
            path: input.path.display().to_string(),
            sha256: input.sha256.clone(),
        }
    }
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Transform applied to the data before fitting; thresholds given in
    /// original units are mapped through it.
    pub transform: Transform,
    pub inputs: Vec<InputDigest>,
    pub config: serde_json::Value,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, transform: Transform, inputs: Vec<InputDigest>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            transform,
            inputs,
            config,
            duration_secs: 0.0,
        }
    }

    pub fn finish(mut self, out_dir: &Path, elapsed: Duration) -> CliResult<()> {
        self.duration_secs = (elapsed.as_secs_f64() * 1e3).round() / 1e3;
        write_json(&out_dir.join(MANIFEST_FILE), &self)
    }
}

/// Transform recorded by the run that produced `artifact`, read from the
/// manifest in the same directory. Identity when there is none.
pub fn sibling_transform(artifact: &Path) -> CliResult<Transform> {
    let dir = artifact.parent().unwrap_or(Path::new("."));
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        log::warn!("no {MANIFEST_FILE} next to {}; assuming untransformed data", artifact.display());
        return Ok(Transform::Identity);
    }
    let manifest: RunManifest = read_json(&path)?;
    Ok(manifest.transform)
}

/// Refuses to write into the directory holding `artifact`, whose manifest
/// would be replaced.
pub fn check_distinct_dir(artifact: &Path, out_dir: &Path) -> CliResult<()> {
    let a = artifact.parent().unwrap_or(Path::new(".")).canonicalize().ok();
    let b = out_dir.canonicalize().ok();
    if a.is_some() && a == b {
        return Err(CliError::Config(format!(
            "output directory {} holds the input's manifest; choose another --out",
            out_dir.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(text: &str) -> Input {
        Input {
            path: "data.csv".into(),
            bytes: text.as_bytes().to_vec(),
            sha256: String::new(),
        }
    }

    #[test]
    fn header_and_quotes() {
        let y = parse_values(&input("value\n1.5\n\"2\"\n3e2\n")).unwrap();
        assert_eq!(y.values(), &[1.5, 2.0, 300.0]);
        let y = parse_values(&input("4\r\n5\r\n")).unwrap();
        assert_eq!(y.values(), &[4.0, 5.0]);
    }

    #[test]
    fn bad_lines_are_reported() {
        let text = "value\n1\n2\n3\n4\n5\n-1\n8\n";
        match parse_values(&input(text)) {
            Err(CliError::DataLine { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        match parse_values(&input("1\nabc\n")) {
            Err(CliError::DataLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_values(&input("1\n2,3\n")) {
            Err(CliError::DataLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_values(&input("value\n")), Err(CliError::Data(_))));
        assert!(matches!(parse_values(&input("0\n")), Err(CliError::DataLine { line: 1, .. })));
    }
}
