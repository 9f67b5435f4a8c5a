//! Feasibility of {X ⪰ 0, A(X) = b} by Dykstra's alternating projections.
//!
//! Independent of the interior-point engine apart from the shared real form
//! and constraint orthonormalisation; used to cross-check it.

use serde::{Deserialize, Serialize};

use std::collections::VecDeque;

use crate::matcore::{jacobi_symmetric, RealMatrix};

use super::presolve::orthonormalize;
use super::{BlockMatrix, RealForm, SdpProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub max_iterations: usize,
    /// Residual below which the problem is declared feasible.
    pub feasible_tol: f64,
    /// Residual at the cap above which it is declared infeasible.
    pub infeasible_tol: f64,
    /// Iterations between stagnation checks; the run stops early when the
    /// residual fell by less than 0.1% over one window.
    pub stall_window: usize,
    /// Anderson acceleration depth on the Dykstra map; 0 runs plain Dykstra.
    pub anderson_memory: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            feasible_tol: 1e-7,
            infeasible_tol: 1e-4,
            stall_window: 2_000,
            anderson_memory: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleVerdict {
    Feasible,
    Infeasible,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub verdict: OracleVerdict,
    /// Last PSD iterate; a feasible point when the verdict is feasible.
    pub witness: BlockMatrix,
    /// Distance from the witness to the affine set. At the cap this is the
    /// gap between the last pair of projections, which converges to the
    /// distance between the two sets.
    pub residual: f64,
    pub iterations: usize,
    /// An infeasible verdict backed by a Farkas multiplier rather than by
    /// the residual threshold alone.
    pub certified: bool,
}

/// Projection onto the PSD cone. `basis` holds the previous eigenvectors;
/// consecutive iterates are close, so rotating into that basis first leaves
/// Jacobi only a few sweeps.
fn project_psd(m: &RealMatrix, basis: &mut RealMatrix) -> RealMatrix {
    let rotated = basis.transpose().matmul(m).matmul(basis);
    let (vals, u) = jacobi_symmetric(&rotated);
    *basis = basis.matmul(&u);
    let n = m.rows();
    let scaled = RealMatrix::from_fn(n, n, |i, k| basis[(i, k)] * vals[k].max(0.0));
    scaled.matmul(&basis.transpose()).symmetrized()
}

fn min_eigenvalue(m: &RealMatrix) -> f64 {
    jacobi_symmetric(m).0.first().copied().unwrap_or(0.0)
}

/// Type-II Anderson acceleration of a fixed-point map u ↦ T(u), restarted
/// whenever the fixed-point residual jumps.
struct Anderson {
    memory: usize,
    du: VecDeque<Vec<f64>>,
    dg: VecDeque<Vec<f64>>,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    prev_norm: f64,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            du: VecDeque::new(),
            dg: VecDeque::new(),
            prev: None,
            prev_norm: f64::INFINITY,
        }
    }

    fn restart(&mut self) {
        self.du.clear();
        self.dg.clear();
        self.prev = None;
    }

    /// Next iterate given the current point `u` and its image `t = T(u)`.
    fn step(&mut self, u: Vec<f64>, t: Vec<f64>) -> Vec<f64> {
        if self.memory == 0 {
            return t;
        }
        let g: Vec<f64> = t.iter().zip(&u).map(|(t, u)| t - u).collect();
        let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let jumped = !g_norm.is_finite() || g_norm > 10.0 * self.prev_norm;
        self.prev_norm = g_norm;
        if jumped {
            self.restart();
            return t;
        }
        if let Some((pu, pg)) = self.prev.take() {
            self.du.push_back(u.iter().zip(&pu).map(|(a, b)| a - b).collect());
            self.dg.push_back(g.iter().zip(&pg).map(|(a, b)| a - b).collect());
            if self.du.len() > self.memory {
                self.du.pop_front();
                self.dg.pop_front();
            }
        }
        self.prev = Some((u, g.clone()));
        let m = self.dg.len();
        if m == 0 {
            return t;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut gram = RealMatrix::from_fn(m, m, |i, j| dot(&self.dg[i], &self.dg[j]));
        let reg = 1e-10 * gram.trace() + 1e-300;
        for i in 0..m {
            gram[(i, i)] += reg;
        }
        let rhs: Vec<f64> = self.dg.iter().map(|d| dot(d, &g)).collect();
        let Some(l) = gram.cholesky() else {
            self.restart();
            return t;
        };
        let gamma = l.cholesky_solve(&rhs);
        let mut next = t;
        for (k, c) in gamma.iter().enumerate() {
            for ((n, du), dg) in next.iter_mut().zip(&self.du[k]).zip(&self.dg[k]) {
                *n -= c * (du + dg);
            }
        }
        next
    }
}

fn flatten(parts: &[&[RealMatrix]]) -> Vec<f64> {
    parts
        .iter()
        .flat_map(|p| p.iter())
        .flat_map(|m| m.as_slice().iter().copied())
        .collect()
}

fn unflatten(data: &[f64], out: &mut [&mut [RealMatrix]]) {
    let mut at = 0;
    for part in out.iter_mut() {
        for m in part.iter_mut() {
            let len = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&data[at..at + len]);
            at += len;
        }
    }
}

const CERTIFICATE_EVERY: usize = 25;
const BASIS_RESET_EVERY: usize = 500;

pub fn feasibility_oracle(p: &SdpProblem, opts: &OracleOptions) -> OracleOutcome {
    let form = RealForm::new(p);
    let pre = orthonormalize(&form.sdp);
    let sizes = form.sdp.sizes.clone();
    let zeros = || -> Vec<RealMatrix> { sizes.iter().map(|&n| RealMatrix::zeros(n, n)).collect() };
    let identities = || -> Vec<RealMatrix> { sizes.iter().map(|&n| RealMatrix::identity(n)).collect() };

    if pre.inconsistent.is_some() {
        return OracleOutcome {
            verdict: OracleVerdict::Infeasible,
            witness: form.primal_to_complex(&zeros()),
            residual: f64::INFINITY,
            iterations: 0,
            certified: true,
        };
    }
    let q = &pre.reduced;

    let affine_defect =
        |x: &[RealMatrix]| -> Vec<f64> { q.apply_a(x).iter().zip(&q.b).map(|(ax, b)| ax - b).collect() };
    let norm = |v: &[f64]| v.iter().map(|r| r * r).sum::<f64>().sqrt();

    // Tr X is pinned on the affine set when the identity lies in the row
    // space; that bound turns an approximately PSD multiplier into a proof.
    let trace_bound = {
        let u = q.apply_a(&identities());
        let back = q.apply_at(&u);
        let off: f64 = back
            .iter()
            .zip(identities())
            .map(|(b, i)| b.sub(&i).frobenius_norm())
            .sum();
        (off <= 1e-9).then(|| u.iter().zip(&q.b).map(|(u, b)| u * b).sum::<f64>())
    };
    let b_norm = norm(&q.b);

    let mut x = zeros();
    let mut correction = zeros();
    let mut y = zeros();
    let mut bases = identities();
    let mut anderson = Anderson::new(opts.anderson_memory);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut window_start = f64::INFINITY;
    let mut certified = false;
    for it in 0..opts.max_iterations {
        iterations = it + 1;
        if it % BASIS_RESET_EVERY == 0 {
            bases = identities();
        }
        // PSD step with Dykstra correction.
        let mut next_correction = zeros();
        for k in 0..sizes.len() {
            let shifted = x[k].add(&correction[k]);
            y[k] = project_psd(&shifted, &mut bases[k]);
            next_correction[k] = shifted.sub(&y[k]);
        }
        let defect = affine_defect(&y);
        residual = norm(&defect);
        if residual < opts.feasible_tol {
            break;
        }
        // Affine step; the rows are orthonormal so this is exact.
        let fix = q.apply_at(&defect);
        let next_x: Vec<RealMatrix> = y.iter().zip(&fix).map(|(y, f)| y.sub(f)).collect();

        if iterations % CERTIFICATE_EVERY == 0 {
            // Farkas test with z = defect: every feasible X would give
            // b·z = <A*(z), X> ≥ λ_min(A*(z)) Tr X.
            let negative = fix.iter().map(|w| (-min_eigenvalue(w)).max(0.0)).fold(0.0, f64::max);
            let bz: f64 = defect.iter().zip(&q.b).map(|(z, b)| z * b).sum();
            let slack = match trace_bound {
                Some(t) => negative * t.max(0.0),
                None if negative == 0.0 => 0.0,
                None => f64::INFINITY,
            };
            if bz + slack < -1e-12 * residual * (1.0 + b_norm) {
                certified = true;
                break;
            }
            // The affine iterate is exactly feasible once it is PSD.
            if next_x.iter().all(|b| min_eigenvalue(b) >= 0.0) {
                let r = norm(&affine_defect(&next_x));
                if r < opts.feasible_tol {
                    y = next_x;
                    residual = r;
                    break;
                }
            }
        }
        if opts.stall_window > 0 && iterations % opts.stall_window == 0 {
            if residual > 0.999 * window_start {
                break;
            }
            window_start = residual;
        }
        let u = flatten(&[&x, &correction]);
        let t = flatten(&[&next_x, &next_correction]);
        let next = anderson.step(u, t);
        unflatten(&next, &mut [&mut x, &mut correction]);
    }

    let verdict = if residual < opts.feasible_tol {
        OracleVerdict::Feasible
    } else if certified || residual >= opts.infeasible_tol {
        OracleVerdict::Infeasible
    } else {
        OracleVerdict::Indeterminate
    };
    OracleOutcome {
        verdict,
        witness: form.primal_to_complex(&y),
        residual,
        iterations,
        certified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::ComplexMatrix;
    use crate::sdpsolve::Constraint;

    fn trace_problem(b: f64) -> SdpProblem {
        SdpProblem::new(
            vec![2],
            BlockMatrix::zeros(&[2]),
            vec![Constraint {
                a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]),
                b,
            }],
        )
        .unwrap()
    }

    #[test]
    fn unit_trace_is_feasible_with_maximally_mixed_witness() {
        let out = feasibility_oracle(&trace_problem(1.0), &OracleOptions::default());
        assert_eq!(out.verdict, OracleVerdict::Feasible);
        let w = out.witness.block(0);
        assert!(w.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-7);
    }

    #[test]
    fn plain_dykstra_reaches_the_same_verdicts() {
        let opts = OracleOptions {
            anderson_memory: 0,
            ..OracleOptions::default()
        };
        assert_eq!(
            feasibility_oracle(&trace_problem(1.0), &opts).verdict,
            OracleVerdict::Feasible
        );
        assert_eq!(
            feasibility_oracle(&trace_problem(-1.0), &opts).verdict,
            OracleVerdict::Infeasible
        );
    }

    #[test]
    fn negative_trace_is_infeasible() {
        let out = feasibility_oracle(&trace_problem(-1.0), &OracleOptions::default());
        assert_eq!(out.verdict, OracleVerdict::Infeasible);
        assert!(out.residual > 0.5);
        assert!(out.certified);
    }
}
