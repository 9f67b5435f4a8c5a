//! State specifications: `preset:` strings or JSON state files.
//!
//! ```json
//! {"dims":[2,2],"kind":"pure","amplitudes":[[0.7071,0],[0,0],[0,0],[0.7071,0]]}
//! {"dims":[2,2],"kind":"mixed","matrix":[[[0.25,0],[0,0],…],…]}
//! ```

use std::path::Path;

use nlq_core::matcore::ComplexMatrix;
use nlq_core::states::{pure_state, DensityMatrix, StatePreset};
use num_complex::Complex64;
use serde::Deserialize;

use crate::format::exact;
use crate::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum StateFile {
    Pure {
        dims: [usize; 2],
        amplitudes: Vec<[f64; 2]>,
    },
    Mixed {
        dims: [usize; 2],
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Parses the JSON text of a state file and validates the state.
pub fn parse_state_text(text: &str) -> CliResult<DensityMatrix> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed state file: {e}")))?;
    match file {
        StateFile::Pure { dims, amplitudes } => {
            let d = dims[0] * dims[1];
            if amplitudes.len() != d {
                return Err(CliError::Input(format!(
                    "dimension mismatch: dims {dims:?} need {d} amplitudes, got {}",
                    amplitudes.len()
                )));
            }
            let amps: Vec<Complex64> = amplitudes.into_iter().map(complex).collect();
            Ok(pure_state(&amps, (dims[0], dims[1]))?)
        }
        StateFile::Mixed { dims, matrix } => {
            let d = dims[0] * dims[1];
            if matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
                return Err(CliError::Input(format!(
                    "dimension mismatch: dims {dims:?} need a {d}x{d} matrix"
                )));
            }
            let data = matrix.into_iter().flatten().map(complex).collect();
            let m = ComplexMatrix::from_vec(d, d, data)?;
            Ok(DensityMatrix::new(m, (dims[0], dims[1]))?)
        }
    }
}

pub fn parse_state_file(path: &Path) -> CliResult<DensityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_state_text(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A `preset:` string or a path to a state file.
pub fn parse_state_spec(spec: &str) -> CliResult<DensityMatrix> {
    if spec.starts_with("preset:") {
        let preset: StatePreset = spec.parse()?;
        Ok(preset.build()?)
    } else {
        parse_state_file(Path::new(spec))
    }
}

fn pair(z: Complex64) -> String {
    format!("[{},{}]", exact(z.re), exact(z.im))
}

/// Mixed-state file text with 17 significant digits per number.
pub fn write_mixed(rho: &DensityMatrix) -> String {
    let (da, db) = rho.dims();
    let m = rho.matrix();
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let cells: Vec<String> = (0..m.cols()).map(|j| pair(m[(i, j)])).collect();
            format!("[{}]", cells.join(","))
        })
        .collect();
    format!(
        "{{\"dims\":[{da},{db}],\"kind\":\"mixed\",\"matrix\":[{}]}}\n",
        rows.join(",")
    )
}

/// Pure-state file text with 17 significant digits per number.
pub fn write_pure(amplitudes: &[Complex64], dims: (usize, usize)) -> String {
    let cells: Vec<String> = amplitudes.iter().map(|&z| pair(z)).collect();
    format!(
        "{{\"dims\":[{},{}],\"kind\":\"pure\",\"amplitudes\":[{}]}}\n",
        dims.0,
        dims.1,
        cells.join(",")
    )
}

/// Canonical serialisation used for hashing: every entry at 17 digits.
pub fn canonical_matrix(rho: &DensityMatrix) -> String {
    write_mixed(rho)
}
