use std::path::Path;

use gsm_core::calibrate::{calibrate_with_report, CalibrationInput};
use gsm_core::Transform;

use crate::error::{CliError, CliResult};
use crate::io::{self, Input};

/// Prints `{"J", "alpha", "beta"}` on stdout. A failed range check goes to
/// the log (stderr).
pub fn run(data: &Path, n_components: usize, omega: f64, transform: Transform) -> CliResult<()> {
    let raw = io::parse_values(&Input::read(data)?)?;
    let y = raw.transformed(transform);
    let cal = calibrate_with_report(&y, &CalibrationInput::new(omega, n_components)?)?;
    let text = serde_json::to_string(&cal.hyper).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}
