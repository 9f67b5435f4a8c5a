//! Bipartite density matrices and the state families used throughout.

pub mod random;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::matcore::{eig_hermitian, kron, partial_trace, ComplexMatrix};

/// Trace must equal one within this bound.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue.
pub const PSD_TOL: f64 = 1e-9;
/// Entrywise Hermiticity bound.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Which side of the bipartition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    A,
    B,
}

/// Unit-trace positive semidefinite operator on C^{d_a} ⊗ C^{d_b}.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: (usize, usize),
    mat: ComplexMatrix,
}

/// Outcome of checking a candidate density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub hermitian_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub passed: bool,
}

impl ValidationReport {
    /// Human-readable list of the violated invariants, empty when passed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.hermitian_defect <= HERMITIAN_TOL) {
            out.push(format!("hermiticity defect {}", short(self.hermitian_defect)));
        }
        if !(self.trace_defect <= TRACE_TOL) {
            out.push(format!("trace defect {}", short(self.trace_defect)));
        }
        if !(self.min_eigenvalue >= -PSD_TOL) {
            out.push(format!("negative eigenvalue {}", short(self.min_eigenvalue)));
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: hermiticity defect {:.3e}, trace defect {:.3e}, min eigenvalue {:.6e}",
            if self.passed { "pass" } else { "fail" },
            self.hermitian_defect,
            self.trace_defect,
            self.min_eigenvalue
        )
    }
}

/// Six significant digits with trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        format!("{x:.3e}")
    } else {
        s.to_string()
    }
}

/// Reports the Hermiticity defect, trace defect and smallest eigenvalue of `m`.
pub fn validate(m: &ComplexMatrix) -> ValidationReport {
    let hermitian_defect = m.hermitian_defect();
    let trace_defect = if m.is_square() {
        (m.trace() - Complex64::new(1.0, 0.0)).norm()
    } else {
        f64::INFINITY
    };
    // The eigensolver symmetrises, so report the spectrum of the Hermitian part.
    let min_eigenvalue = if m.is_square() {
        eig_hermitian(&m.hermitian_part())
            .map(|e| e.values.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let passed = hermitian_defect <= HERMITIAN_TOL && trace_defect <= TRACE_TOL && min_eigenvalue >= -PSD_TOL;
    ValidationReport {
        hermitian_defect,
        trace_defect,
        min_eigenvalue,
        passed,
    }
}

impl DensityMatrix {
    /// Validates `mat` against the density-matrix invariants.
    pub fn new(mat: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 {
            return invalid("subsystem dimensions must be positive");
        }
        if mat.rows() != da * db || mat.cols() != da * db {
            return invalid(format!(
                "matrix is {}x{}, expected side {} for dims ({da},{db})",
                mat.rows(),
                mat.cols(),
                da * db
            ));
        }
        let report = validate(&mat);
        if !report.passed {
            return invalid(format!("not a density matrix: {}", report.violations().join(", ")));
        }
        Ok(Self { dims, mat })
    }

    fn new_unchecked(mat: ComplexMatrix, dims: (usize, usize)) -> Self {
        Self { dims, mat }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Total dimension d_a·d_b.
    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn is_real(&self) -> bool {
        self.mat.is_real()
    }

    pub fn report(&self) -> ValidationReport {
        validate(&self.mat)
    }

    /// Reduced state of one party.
    pub fn reduced(&self, party: Party) -> ComplexMatrix {
        let keep = match party {
            Party::A => 0,
            Party::B => 1,
        };
        partial_trace(&self.mat, &[self.dims.0, self.dims.1], &[keep]).expect("dims checked at construction")
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        crate::matcore::trace_product(&self.mat, &self.mat).re
    }

    /// (U_a ⊗ U_b) ρ (U_a ⊗ U_b)†.
    pub fn apply_local_unitaries(&self, ua: &ComplexMatrix, ub: &ComplexMatrix) -> Result<Self> {
        if ua.rows() != self.dims.0 || ub.rows() != self.dims.1 || !ua.is_square() || !ub.is_square() {
            return invalid("local unitary dimensions do not match the state");
        }
        let u = kron(ua, ub);
        Ok(Self::new_unchecked(
            self.mat.conjugate_by(&u).hermitian_part(),
            self.dims,
        ))
    }
}

/// Rank-one state from (possibly unnormalised) amplitudes.
pub fn pure_state(amplitudes: &[Complex64], dims: (usize, usize)) -> Result<DensityMatrix> {
    let n = dims.0 * dims.1;
    if dims.0 == 0 || dims.1 == 0 {
        return invalid("subsystem dimensions must be positive");
    }
    if amplitudes.len() != n {
        return invalid(format!(
            "expected {n} amplitudes for dims {dims:?}, got {}",
            amplitudes.len()
        ));
    }
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return invalid("amplitude vector has zero (or non-finite) norm");
    }
    let v: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
    Ok(DensityMatrix::new_unchecked(ComplexMatrix::projector(&v), dims))
}

pub(crate) fn real_amplitudes(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// λ·I/d + (1−λ)·ρ.
pub fn mix_white_noise(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("noise fraction {lambda} outside [0, 1]"));
    }
    let d = rho.dim();
    let noise = ComplexMatrix::identity(d).scale(lambda / d as f64);
    let mixed = &rho.mat.scale(1.0 - lambda) + &noise;
    Ok(DensityMatrix::new_unchecked(mixed, rho.dims))
}

/// Maximally mixed state I/d on dims (d_a, d_b).
pub fn white_noise(dims: (usize, usize)) -> DensityMatrix {
    let d = dims.0 * dims.1;
    DensityMatrix::new_unchecked(ComplexMatrix::identity(d).scale(1.0 / d as f64), dims)
}

/// (1/√d) Σ_k |kk>.
pub fn maximally_entangled(d: usize) -> DensityMatrix {
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        amps[k * d + k] = Complex64::new(1.0, 0.0);
    }
    pure_state(&amps, (d, d)).expect("nonzero amplitudes")
}

/// |Φ⁺> = (|00> + |11>)/√2.
pub fn bell() -> DensityMatrix {
    maximally_entangled(2)
}

/// sinθ|00> + cosθ|11>.
pub fn pure_theta(theta: f64) -> Result<DensityMatrix> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return invalid(format!("theta {theta} outside [0, π/2]"));
    }
    pure_state(&real_amplitudes(&[theta.sin(), 0.0, 0.0, theta.cos()]), (2, 2))
}

/// MEMS weight f(γ).
pub fn mems_weight(gamma: f64) -> f64 {
    if gamma >= 2.0 / 3.0 {
        gamma / 2.0
    } else {
        1.0 / 3.0
    }
}

/// Maximally entangled mixed state of two qubits.
pub fn mems(gamma: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return invalid(format!("gamma {gamma} outside [0, 1]"));
    }
    let f = mems_weight(gamma);
    let g = gamma / 2.0;
    #[rustfmt::skip]
    let entries = [
        f,   0.0,           0.0, g,
        0.0, 1.0 - 2.0 * f, 0.0, 0.0,
        0.0, 0.0,           0.0, 0.0,
        g,   0.0,           0.0, f,
    ];
    Ok(DensityMatrix::new_unchecked(
        ComplexMatrix::from_real(4, 4, &entries)?,
        (2, 2),
    ))
}

/// sinξ sinβ|00> + sinξ cosβ|11> + cosξ|22>.
pub fn ghz_two_qutrit(xi: f64, beta: f64) -> Result<DensityMatrix> {
    for (name, v) in [("xi", xi), ("beta", beta)] {
        if !(0.0..=FRAC_PI_2).contains(&v) {
            return invalid(format!("{name} {v} outside [0, π/2]"));
        }
    }
    let mut amps = vec![0.0; 9];
    amps[0] = xi.sin() * beta.sin();
    amps[4] = xi.sin() * beta.cos();
    amps[8] = xi.cos();
    pure_state(&real_amplitudes(&amps), (3, 3))
}

/// Parameterised state families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateFamily {
    PureTheta { theta: f64 },
    Mems { gamma: f64 },
    Ghz3 { xi: f64, beta: f64 },
}

impl StateFamily {
    pub fn build(&self) -> Result<DensityMatrix> {
        match *self {
            StateFamily::PureTheta { theta } => pure_theta(theta),
            StateFamily::Mems { gamma } => mems(gamma),
            StateFamily::Ghz3 { xi, beta } => ghz_two_qutrit(xi, beta),
        }
    }
}

/// Named states reachable from `preset:` strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StatePreset {
    Bell,
    Family(StateFamily),
    /// I/d with d a perfect square, split evenly between the parties.
    Noise(usize),
}

impl StatePreset {
    pub fn build(&self) -> Result<DensityMatrix> {
        match *self {
            StatePreset::Bell => Ok(bell()),
            StatePreset::Family(f) => f.build(),
            StatePreset::Noise(d) => {
                let side = (d as f64).sqrt().round() as usize;
                if side < 2 || side * side != d {
                    return invalid(format!("noise dimension {d} is not a square of a local dimension ≥ 2"));
                }
                Ok(white_noise((side, side)))
            }
        }
    }
}

impl FromStr for StatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .strip_prefix("preset:")
            .ok_or_else(|| Error::InvalidInput(format!("'{s}' does not start with 'preset:'")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            let raw = parts
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("'{s}': missing parameter {i}")))?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("'{s}': cannot parse '{raw}' as a number")))
        };
        let expect_len = |n: usize| -> Result<()> {
            if parts.len() != n {
                return invalid(format!("'{s}': expected {} parameter(s)", n - 1));
            }
            Ok(())
        };
        let preset = match parts[0] {
            "bell" => {
                expect_len(1)?;
                StatePreset::Bell
            }
            "pure-theta" => {
                expect_len(2)?;
                StatePreset::Family(StateFamily::PureTheta { theta: num(1)? })
            }
            "mems" => {
                expect_len(2)?;
                StatePreset::Family(StateFamily::Mems { gamma: num(1)? })
            }
            "ghz3" => {
                expect_len(3)?;
                StatePreset::Family(StateFamily::Ghz3 {
                    xi: num(1)?,
                    beta: num(2)?,
                })
            }
            "noise" => {
                expect_len(2)?;
                let d = parts[1]
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("'{s}': noise dimension must be an integer")))?;
                StatePreset::Noise(d)
            }
            other => return invalid(format!("unknown preset '{other}'")),
        };
        Ok(preset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::eig_hermitian;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn bell_from_theta() {
        let rho = pure_state(&real_amplitudes(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]), (2, 2)).unwrap();
        assert!(rho.matrix().max_abs_diff(bell().matrix()) < 1e-15);
        assert!(rho.reduced(Party::A).max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.5])) < 1e-15);
        assert!(pure_theta(FRAC_PI_4).unwrap().matrix().max_abs_diff(bell().matrix()) < 1e-15);
    }

    #[test]
    fn theta_zero_is_product() {
        let rho = pure_theta(0.0).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.0, 0.0, 0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn pure_state_normalises() {
        let a = pure_state(&[c(2.0), c(0.0), c(0.0), c(0.0)], (2, 2)).unwrap();
        let b = pure_state(&[c(1.0), c(0.0), c(0.0), c(0.0)], (2, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pure_state_rejects_zero_and_bad_length() {
        assert!(pure_state(&[c(0.0); 4], (2, 2)).is_err());
        assert!(pure_state(&[c(1.0); 3], (2, 2)).is_err());
    }

    #[test]
    fn noise_mixing_endpoints() {
        let rho = bell();
        assert_eq!(
            mix_white_noise(&rho, 0.0).unwrap().matrix().max_abs_diff(rho.matrix()),
            0.0
        );
        let full = mix_white_noise(&rho, 1.0).unwrap();
        assert!(full.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale(0.25)) < 1e-16);
        assert!(mix_white_noise(&rho, -0.1).is_err());
        assert!(mix_white_noise(&rho, 1.5).is_err());
    }

    #[test]
    fn werner_spectrum_at_one_third() {
        let rho = mix_white_noise(&bell(), 1.0 / 3.0).unwrap();
        let e = eig_hermitian(rho.matrix()).unwrap();
        let expect = [1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 0.75];
        for (w, x) in e.values.iter().zip(expect) {
            assert!((w - x).abs() < 1e-14);
        }
    }

    #[test]
    fn mems_branches() {
        let one = mems(1.0).unwrap();
        assert!(one.matrix().max_abs_diff(bell().matrix()) < 1e-15);
        let two_thirds = mems(2.0 / 3.0).unwrap();
        let m = two_thirds.matrix();
        for (i, want) in [1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0].iter().enumerate() {
            assert!((m[(i, i)].re - want).abs() < 1e-15);
        }
        for g in [2.0 / 3.0, 0.2, 0.5, 0.0] {
            let r = mems(g).unwrap();
            assert!(r.report().passed, "gamma {g}");
        }
        assert!(mems(1.2).is_err());
        assert_eq!(mems_weight(0.5), 1.0 / 3.0);
        assert_eq!(mems_weight(0.8), 0.4);
    }

    #[test]
    fn ghz_special_points() {
        let sym = ghz_two_qutrit((1.0f64 / 3.0).sqrt().acos(), FRAC_PI_4).unwrap();
        assert!(sym.matrix().max_abs_diff(maximally_entangled(3).matrix()) < 1e-14);
        assert!(
            sym.reduced(Party::B)
                .max_abs_diff(&ComplexMatrix::identity(3).scale(1.0 / 3.0))
                < 1e-14
        );

        let two = ghz_two_qutrit(FRAC_PI_2, FRAC_PI_4).unwrap();
        let mut amps = vec![c(0.0); 9];
        amps[0] = c(FRAC_1_SQRT_2);
        amps[4] = c(FRAC_1_SQRT_2);
        assert!(two.matrix().max_abs_diff(&ComplexMatrix::projector(&amps)) < 1e-15);

        let prod = ghz_two_qutrit(0.0, 0.3).unwrap();
        assert!((prod.matrix()[(8, 8)].re - 1.0).abs() < 1e-15);
        for (xi, beta) in [(0.3, 1.1), (1.2, 0.2)] {
            let r = ghz_two_qutrit(xi, beta).unwrap();
            assert!((r.matrix().trace().re - 1.0).abs() < 1e-10);
            assert!((r.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn validation_reports() {
        let noise = validate(white_noise((2, 2)).matrix());
        assert!(noise.passed);
        assert!((noise.min_eigenvalue - 0.25).abs() < 1e-15);

        let b = validate(bell().matrix());
        assert!(b.passed);
        assert!(b.min_eigenvalue.abs() < 1e-12);

        let bad = validate(&ComplexMatrix::diag(&[1.2, -0.2, 0.0, 0.0]));
        assert!(!bad.passed);
        assert!((bad.min_eigenvalue + 0.2).abs() < 1e-12);
        assert!(bad.violations()[0].contains("negative eigenvalue -0.2"));
    }

    #[test]
    fn trace_defect_message() {
        let err = DensityMatrix::new(ComplexMatrix::diag(&[0.5, 0.4, 0.0, 0.0]), (2, 2)).unwrap_err();
        assert!(err.to_string().contains("trace defect 0.1"), "{err}");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn presets_parse() {
        assert_eq!("preset:bell".parse::<StatePreset>().unwrap(), StatePreset::Bell);
        assert_eq!(
            "preset:ghz3:1.5707963:0.7853982".parse::<StatePreset>().unwrap(),
            StatePreset::Family(StateFamily::Ghz3 {
                xi: 1.5707963,
                beta: 0.7853982
            })
        );
        let noise = "preset:noise:4".parse::<StatePreset>().unwrap().build().unwrap();
        assert_eq!(noise.dims(), (2, 2));
        assert!("preset:noise:5".parse::<StatePreset>().unwrap().build().is_err());
        assert!("preset:mems".parse::<StatePreset>().is_err());
        assert!("preset:unknown".parse::<StatePreset>().is_err());
        assert!("bell".parse::<StatePreset>().is_err());
        assert!("preset:mems:abc".parse::<StatePreset>().is_err());
        assert!("preset:mems:1.5".parse::<StatePreset>().unwrap().build().is_err());
    }
}
