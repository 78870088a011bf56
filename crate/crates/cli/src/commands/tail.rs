use std::path::PathBuf;
use std::time::Instant;

use gsm_core::inference::tail_curve;
use gsm_core::PosteriorDraws;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{self, Input, InputDigest, RunManifest};

pub struct TailArgs {
    pub draws: PathBuf,
    pub k: Vec<f64>,
    pub k_file: Option<PathBuf>,
    pub level: f64,
    pub out: PathBuf,
}

pub fn run(args: &TailArgs) -> CliResult<()> {
    let start = Instant::now();
    io::check_distinct_dir(&args.draws, &args.out)?;
    let draws_in = Input::read(&args.draws)?;
    let draws: PosteriorDraws = serde_json::from_slice(&draws_in.bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.draws.display())))?;
    let transform = io::sibling_transform(&args.draws)?;

    let mut inputs = vec![InputDigest::of("draws", &draws_in)];
    let mut ks = args.k.clone();
    if let Some(path) = &args.k_file {
        let k_in = Input::read(path)?;
        ks.extend(parse_thresholds(&k_in)?);
        inputs.push(InputDigest::of("thresholds", &k_in));
    }
    if ks.is_empty() {
        return Err(CliError::Config("no thresholds given; use --k or --k-file".into()));
    }
    if let Some(k) = ks.iter().find(|k| !(**k >= 0.0) || !k.is_finite()) {
        return Err(CliError::Data(format!("threshold {k} must be a nonnegative number")));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Config(format!("level must lie in (0, 1), got {}", args.level)));
    }

    let mapped: Vec<f64> = ks.iter().map(|&k| transform.apply(k)).collect();
    let estimates = tail_curve(&draws, &mapped, args.level)?;

    io::create_dir(&args.out)?;
    io::write_csv(
        &args.out.join("tail.csv"),
        &["k", "point", "ci_low", "ci_high"],
        ks.iter().zip(&estimates).map(|(k, e)| (k, e.point, e.ci_low, e.ci_high)),
    )?;
    RunManifest::new(
        "tail",
        None,
        transform,
        inputs,
        json!({ "k": ks, "level": args.level }),
    )
    .finish(&args.out, start.elapsed())
}

/// One threshold per line; blank lines and a `k` header are skipped.
fn parse_thresholds(input: &Input) -> CliResult<Vec<f64>> {
    let text = std::str::from_utf8(&input.bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", input.path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim().trim_matches('"');
        if field.is_empty() || (i == 0 && field == "k") {
            continue;
        }
        let k: f64 = field.parse().map_err(|_| CliError::DataLine {
            path: input.path.clone(),
            line: i as u64 + 1,
            msg: format!("'{field}' is not a number"),
        })?;
        out.push(k);
    }
    Ok(out)
}
