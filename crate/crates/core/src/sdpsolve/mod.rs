//! Standard-form semidefinite programming.
//!
//! ```text
//!   minimize    Tr[C X]
//!   subject to  Tr[A_k X] = b_k,  k = 1..m
//!               X ⪰ 0  (block diagonal, Hermitian blocks)
//! ```
//!
//! with Lagrangian dual `maximize bᵀy s.t. C − Σ y_k A_k ⪰ 0`. Complex
//! Hermitian blocks are mapped onto real symmetric ones before the
//! interior-point engine runs: blocks whose data are all real are solved in
//! the reals directly, others through the embedding
//! [`hermitian_to_real_embedding`] with data halved so objective values are
//! unchanged.

mod dual;
mod engine;
mod lmi;
mod oracle;
mod presolve;
pub mod sdpa;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matcore::{eig_hermitian, trace_product, ComplexMatrix, RealMatrix, HERMITIAN_TOL};

pub use dual::{assemble_dual_view, DualView};
pub use lmi::{LmiProblem, LmiSolution};
pub use oracle::{feasibility_oracle, OracleOptions, OracleOutcome, OracleVerdict};

use engine::{solve_real, RealSdp, RealSolution};

/// Block-diagonal Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    blocks: Vec<ComplexMatrix>,
}

impl BlockMatrix {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            blocks: sizes.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<ComplexMatrix>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut ComplexMatrix {
        &mut self.blocks[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows()).collect()
    }

    /// Σ_blocks Re Tr[self · other].
    pub fn trace_with(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| trace_product(a, b).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a = &*a + &b.scale(s);
        }
    }

    /// Smallest eigenvalue across blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.rows() > 0)
            .map(|b| {
                eig_hermitian(&b.hermitian_part())
                    .map(|e| e.values[0])
                    .unwrap_or(f64::NAN)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Linear equality Tr[A X] = b.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub a: BlockMatrix,
    pub b: f64,
}

/// A standard-form SDP.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    sizes: Vec<usize>,
    objective: BlockMatrix,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    /// Checks that every matrix conforms to `sizes` and is Hermitian.
    pub fn new(sizes: Vec<usize>, objective: BlockMatrix, constraints: Vec<Constraint>) -> Result<Self> {
        if sizes.contains(&0) {
            return invalid("block sizes must be positive");
        }
        let check = |what: &str, m: &BlockMatrix| -> Result<()> {
            if m.sizes() != sizes || m.blocks.iter().any(|b| !b.is_square()) {
                return invalid(format!("{what} does not conform to block sizes {sizes:?}"));
            }
            for (k, b) in m.blocks.iter().enumerate() {
                let defect = b.hermitian_defect();
                if defect > HERMITIAN_TOL * b.max_abs().max(1.0) {
                    return invalid(format!("{what}, block {k}: not Hermitian (defect {defect:.2e})"));
                }
                if b.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return invalid(format!("{what}, block {k}: non-finite entry"));
                }
            }
            Ok(())
        };
        check("objective", &objective)?;
        for (k, c) in constraints.iter().enumerate() {
            check(&format!("constraint {k}"), &c.a)?;
            if !c.b.is_finite() {
                return invalid(format!("constraint {k}: non-finite right-hand side"));
            }
        }
        Ok(Self {
            sizes,
            objective,
            constraints,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn objective(&self) -> &BlockMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_real(&self) -> bool {
        (0..self.sizes.len()).all(|k| self.block_is_real(k))
    }

    fn block_is_real(&self, k: usize) -> bool {
        self.objective.blocks[k].is_real() && self.constraints.iter().all(|c| c.a.blocks[k].is_real())
    }

    /// A(X) − b.
    pub fn primal_residual(&self, x: &BlockMatrix) -> Vec<f64> {
        self.constraints.iter().map(|c| c.a.trace_with(x) - c.b).collect()
    }

    /// C − Σ y_k A_k.
    pub fn dual_slack(&self, y: &[f64]) -> BlockMatrix {
        let mut s = self.objective.clone();
        for (c, &yk) in self.constraints.iter().zip(y) {
            s.axpy(-yk, &c.a);
        }
        s
    }
}

/// Solver tolerances and limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Relative duality gap |Tr[CX] − bᵀy| / (1 + |Tr[CX]|).
    pub gap_tol: f64,
    /// Relative primal and dual residual norms.
    pub feasibility_tol: f64,
    pub max_iterations: usize,
    /// τ/κ below which the iterate is tested as an infeasibility certificate.
    pub infeasibility_ratio: f64,
    /// Residual bound on a normalised Farkas ray.
    pub certificate_tol: f64,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feasibility_tol: 1e-8,
            max_iterations: 200,
            infeasibility_ratio: 1e-8,
            certificate_tol: 1e-6,
            step_fraction: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

impl SdpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::PrimalInfeasible => "primal-infeasible",
            SdpStatus::DualInfeasible => "dual-infeasible",
            SdpStatus::MaxIterations => "max-iterations",
            SdpStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative residuals of a returned pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Farkas certificate attached to an infeasible status.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// y with bᵀy = 1 and Σ y_k A_k ⪯ 0 up to `residual`.
    PrimalInfeasible { y: Vec<f64>, residual: f64 },
    /// X ⪰ 0 with Tr[CX] = −1 and A(X) = 0 up to `residual`.
    DualInfeasible { x: BlockMatrix, residual: f64 },
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: BlockMatrix,
    pub y: Vec<f64>,
    pub s: BlockMatrix,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
}

/// [[Re h, −Im h], [Im h, Re h]].
pub fn hermitian_to_real_embedding(h: &ComplexMatrix) -> Result<RealMatrix> {
    if !h.is_square() || !h.is_hermitian(HERMITIAN_TOL * h.max_abs().max(1.0)) {
        return invalid("real embedding needs a Hermitian matrix");
    }
    Ok(embed(h))
}

fn embed(h: &ComplexMatrix) -> RealMatrix {
    let n = h.rows();
    RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of the embedding on arbitrary real symmetric input: projects onto
/// the complex-structured part.
fn unembed(x: &RealMatrix) -> ComplexMatrix {
    let n = x.rows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (x[(i, j)] + x[(i + n, j + n)]),
            0.5 * (x[(i + n, j)] - x[(i, j + n)]),
        )
    })
}

fn real_part(h: &ComplexMatrix) -> RealMatrix {
    RealMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)].re)
}

fn from_real(x: &RealMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(x.rows(), x.cols(), |i, j| Complex64::new(x[(i, j)], 0.0))
}

/// How each complex block is represented in the real problem.
#[derive(Clone, Debug)]
pub(crate) struct RealForm {
    pub sdp: RealSdp,
    embedded: Vec<bool>,
}

impl RealForm {
    pub fn new(p: &SdpProblem) -> Self {
        let embedded: Vec<bool> = (0..p.sizes.len()).map(|k| !p.block_is_real(k)).collect();
        let conv = |k: usize, m: &ComplexMatrix| -> RealMatrix {
            if embedded[k] {
                embed(m).scale(0.5)
            } else {
                real_part(m)
            }
        };
        let sizes = p
            .sizes
            .iter()
            .zip(&embedded)
            .map(|(&n, &e)| if e { 2 * n } else { n })
            .collect();
        let c = p.objective.blocks.iter().enumerate().map(|(k, m)| conv(k, m)).collect();
        let a = p
            .constraints
            .iter()
            .map(|con| {
                con.a
                    .blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.max_abs() > 0.0)
                    .map(|(k, m)| (k, conv(k, m)))
                    .collect()
            })
            .collect();
        let b = p.constraints.iter().map(|c| c.b).collect();
        Self {
            sdp: RealSdp { sizes, c, a, b },
            embedded,
        }
    }

    /// Maps a real primal block matrix back to the complex variable.
    pub fn primal_to_complex(&self, x: &[RealMatrix]) -> BlockMatrix {
        BlockMatrix::from_blocks(
            x.iter()
                .zip(&self.embedded)
                .map(|(b, &e)| if e { unembed(b) } else { from_real(b) })
                .collect(),
        )
    }

    /// Maps a real dual slack back; the embedded data were halved.
    pub fn slack_to_complex(&self, s: &[RealMatrix]) -> BlockMatrix {
        BlockMatrix::from_blocks(
            s.iter()
                .zip(&self.embedded)
                .map(|(b, &e)| if e { unembed(b).scale(2.0) } else { from_real(b) })
                .collect(),
        )
    }
}

/// Solves a standard-form SDP.
///
/// Non-convergence is reported through [`SdpStatus::MaxIterations`] or
/// [`SdpStatus::NumericalFailure`], not as an error.
pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let form = RealForm::new(p);
    let pre = presolve::orthonormalize(&form.sdp);

    let m = p.constraints.len();
    if let Some(ray) = pre.inconsistent {
        // Dependent rows with incompatible right-hand sides.
        let residual = ray_residual(p, &ray);
        return Ok(SdpSolution {
            status: SdpStatus::PrimalInfeasible,
            x: BlockMatrix::zeros(&p.sizes),
            y: vec![0.0; m],
            s: p.objective.clone(),
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            residuals: Residuals::default(),
            iterations: 0,
            certificate: Some(Certificate::PrimalInfeasible { y: ray, residual }),
        });
    }

    let raw: RealSolution = solve_real(&pre.reduced, opts);
    let y = pre.lift_dual(&raw.y);
    let x = form.primal_to_complex(&raw.x);
    let s = form.slack_to_complex(&raw.s);

    let primal_objective = p.objective.trace_with(&x);
    let dual_objective: f64 = p.constraints.iter().zip(&y).map(|(c, yk)| c.b * yk).sum();
    let b_norm = p.constraints.iter().map(|c| c.b * c.b).sum::<f64>().sqrt();
    let c_norm = p.objective.frobenius_norm();
    let pres = p.primal_residual(&x).iter().map(|r| r * r).sum::<f64>().sqrt() / (1.0 + b_norm);
    let mut slack_gap = p.dual_slack(&y);
    slack_gap.axpy(-1.0, &s);
    let dres = slack_gap.frobenius_norm() / (1.0 + c_norm);
    let gap = (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs());

    let certificate = match raw.status {
        SdpStatus::PrimalInfeasible => raw.ray_y.as_ref().map(|ray| {
            let y = pre.lift_dual(ray);
            let residual = ray_residual(p, &y);
            Certificate::PrimalInfeasible { y, residual }
        }),
        SdpStatus::DualInfeasible => raw.ray_x.as_ref().map(|ray| {
            let x = form.primal_to_complex(ray);
            let residual = p
                .constraints
                .iter()
                .map(|c| c.a.trace_with(&x).powi(2))
                .sum::<f64>()
                .sqrt();
            Certificate::DualInfeasible { x, residual }
        }),
        _ => None,
    };

    Ok(SdpSolution {
        status: raw.status,
        x,
        y,
        s,
        primal_objective,
        dual_objective,
        residuals: Residuals {
            primal: pres,
            dual: dres,
            gap,
        },
        iterations: raw.iterations,
        certificate,
    })
}

/// Normalises a candidate Farkas ray to bᵀy = 1 and returns the size of the
/// positive part of Σ y_k A_k (zero for a valid certificate).
fn ray_residual(p: &SdpProblem, y: &[f64]) -> f64 {
    let mut aty = BlockMatrix::zeros(&p.sizes);
    for (c, &yk) in p.constraints.iter().zip(y) {
        aty.axpy(yk, &c.a);
    }
    let top = aty
        .blocks
        .iter()
        .map(|b| {
            eig_hermitian(&b.hermitian_part())
                .map(|e| *e.values.last().unwrap_or(&0.0))
                .unwrap_or(f64::NAN)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let by: f64 = p.constraints.iter().zip(y).map(|(c, yk)| c.b * yk).sum();
    top.max(0.0) / by.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> BlockMatrix {
        BlockMatrix::from_blocks(vec![ComplexMatrix::diag(&[v])])
    }

    #[test]
    fn embedding_of_identity() {
        let e = hermitian_to_real_embedding(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e, RealMatrix::identity(4));
        assert_eq!(e.trace(), 4.0);
    }

    #[test]
    fn embedding_of_sigma_y_doubles_spectrum() {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let sy = ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z]).unwrap();
        let e = hermitian_to_real_embedding(&sy).unwrap();
        let (w, _) = crate::matcore::jacobi_symmetric(&e);
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn embedding_preserves_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let g = crate::states::random::random_hermitian(4, &mut rng);
            let psd = &g * &g.adjoint();
            let e = hermitian_to_real_embedding(&psd).unwrap();
            let (w, _) = crate::matcore::jacobi_symmetric(&e);
            assert!(w[0] >= -1e-12);
            assert!(unembed(&e).max_abs_diff(&psd) < 1e-15);
        }
    }

    #[test]
    fn embedding_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(hermitian_to_real_embedding(&m).is_err());
    }

    #[test]
    fn scalar_program() {
        // min x s.t. x = 1 (as a 1x1 PSD block).
        let p = SdpProblem::new(vec![1], scalar(1.0), vec![Constraint { a: scalar(1.0), b: 1.0 }]).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-7);
        assert!((sol.dual_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn smallest_eigenvalue_program() {
        // max t s.t. diag(1,3) − tI ⪰ 0, i.e. min Tr[diag(1,3) X] s.t. Tr X = 1.
        let c = BlockMatrix::from_blocks(vec![ComplexMatrix::diag(&[1.0, 3.0])]);
        let a = BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]);
        let p = SdpProblem::new(vec![2], c, vec![Constraint { a, b: 1.0 }]).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.y[0] - 1.0).abs() < 1e-8);
        assert!(sol.x.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn complex_smallest_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = crate::states::random::random_hermitian(3, &mut rng);
        let expect = eig_hermitian(&h).unwrap().values[0];
        let p = SdpProblem::new(
            vec![3],
            BlockMatrix::from_blocks(vec![h]),
            vec![Constraint {
                a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(3)]),
                b: 1.0,
            }],
        )
        .unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - expect).abs() < 1e-8);
        assert!((sol.dual_objective - expect).abs() < 1e-8);
    }

    #[test]
    fn rejects_malformed_problems() {
        let bad = BlockMatrix::from_blocks(vec![ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()]);
        assert!(SdpProblem::new(vec![2], bad, vec![]).is_err());
        assert!(SdpProblem::new(vec![3], BlockMatrix::zeros(&[2]), vec![]).is_err());
        assert!(SdpProblem::new(vec![0], BlockMatrix::zeros(&[0]), vec![]).is_err());
    }

    #[test]
    fn negative_trace_is_infeasible() {
        let p = SdpProblem::new(
            vec![2],
            BlockMatrix::zeros(&[2]),
            vec![Constraint {
                a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]),
                b: -1.0,
            }],
        )
        .unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
        match sol.certificate {
            Some(Certificate::PrimalInfeasible { residual, .. }) => assert!(residual <= 1e-6),
            other => panic!("expected a certificate, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_duplicate_rows() {
        let a = BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]);
        let p = SdpProblem::new(
            vec![2],
            BlockMatrix::zeros(&[2]),
            vec![Constraint { a: a.clone(), b: 1.0 }, Constraint { a, b: 2.0 }],
        )
        .unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn consistent_duplicate_rows_are_dropped() {
        let a = BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]);
        let c = BlockMatrix::from_blocks(vec![ComplexMatrix::diag(&[2.0, 5.0])]);
        let p = SdpProblem::new(
            vec![2],
            c,
            vec![
                Constraint { a: a.clone(), b: 1.0 },
                Constraint {
                    a: a.scale2(2.0),
                    b: 2.0,
                },
            ],
        )
        .unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 2.0).abs() < 1e-7);
        assert!((sol.dual_objective - 2.0).abs() < 1e-7);
    }

    impl BlockMatrix {
        fn scale2(&self, s: f64) -> Self {
            Self::from_blocks(self.blocks.iter().map(|b| b.scale(s)).collect())
        }
    }
}
