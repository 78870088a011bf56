use std::path::PathBuf;
use std::time::Instant;

use gsm_core::inference::{density_curve, moment_trace, qq_probabilities, weight_summary, MomentKind};
use gsm_core::PosteriorDraws;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{self, Input, InputDigest, RunManifest};

const DENSITY_POINTS: usize = 200;

pub struct DiagnoseArgs {
    pub draws: PathBuf,
    pub data: PathBuf,
    pub out: PathBuf,
}

/// Writes density.csv, qq.csv, weights.csv, occupied.csv and moments.csv, all
/// on the fitted (transformed) scale.
pub fn run(args: &DiagnoseArgs) -> CliResult<()> {
    let start = Instant::now();
    io::check_distinct_dir(&args.draws, &args.out)?;
    let draws_in = Input::read(&args.draws)?;
    let data_in = Input::read(&args.data)?;
    let draws: PosteriorDraws = serde_json::from_slice(&draws_in.bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.draws.display())))?;
    let transform = io::sibling_transform(&args.draws)?;
    let y = io::parse_values(&data_in)?.transformed(transform);

    let top = y.max() * 1.1;
    let grid: Vec<f64> = (1..=DENSITY_POINTS)
        .map(|i| top * i as f64 / DENSITY_POINTS as f64)
        .collect();
    let density = density_curve(&draws, &grid)?;
    let qq = qq_probabilities(&draws, &y)?;
    let weights = weight_summary(&draws);
    let means = moment_trace(&draws, MomentKind::Mean);
    let vars = moment_trace(&draws, MomentKind::Variance);

    io::create_dir(&args.out)?;
    io::write_csv(&args.out.join("density.csv"), &["y", "density"], grid.iter().zip(&density))?;
    io::write_csv(
        &args.out.join("qq.csv"),
        &["y", "empirical_p", "model_p"],
        (0..qq.sorted.len()).map(|i| (qq.sorted[i], qq.empirical_p[i], qq.model_p[i])),
    )?;
    io::write_csv(
        &args.out.join("weights.csv"),
        &["component", "posterior_mean_weight"],
        weights
            .posterior_mean_weights
            .iter()
            .enumerate()
            .map(|(j, w)| (j + 1, w)),
    )?;
    io::write_csv(
        &args.out.join("occupied.csv"),
        &["occupied", "fraction"],
        weights.occupied_histogram.iter(),
    )?;
    io::write_csv(
        &args.out.join("moments.csv"),
        &["draw", "mean", "variance"],
        means.iter().zip(&vars).enumerate().map(|(m, (a, b))| (m, a, b)),
    )?;
    RunManifest::new(
        "diagnose",
        None,
        transform,
        vec![InputDigest::of("draws", &draws_in), InputDigest::of("data", &data_in)],
        json!({ "density_points": DENSITY_POINTS }),
    )
    .finish(&args.out, start.elapsed())
}
