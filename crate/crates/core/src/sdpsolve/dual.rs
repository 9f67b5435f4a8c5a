//! The Lagrangian dual recast in standard form.
//!
//! `maximize bᵀy s.t. C − Σ y_k A_k = S ⪰ 0` becomes, with the free vector
//! split as y = y⁺ − y⁻ on 1×1 blocks,
//!
//! ```text
//!   minimize −bᵀy⁺ + bᵀy⁻
//!   subject to  S_ij + Σ_k (A_k)_ij (y⁺_k − y⁻_k) = C_ij   (real and imaginary parts)
//!               S ⪰ 0, y⁺ ⪰ 0, y⁻ ⪰ 0
//! ```

use num_complex::Complex64;

use crate::matcore::ComplexMatrix;

use super::{BlockMatrix, Constraint, SdpProblem, SdpSolution};

#[derive(Clone, Debug)]
pub struct DualView {
    pub problem: SdpProblem,
    m: usize,
    n_blocks: usize,
}

impl DualView {
    /// Optimal value of the original dual, max bᵀy.
    pub fn dual_objective(&self, sol: &SdpSolution) -> f64 {
        -sol.primal_objective
    }

    /// y = y⁺ − y⁻ read from a solution of the view.
    pub fn multipliers(&self, sol: &SdpSolution) -> Vec<f64> {
        (0..self.m)
            .map(|k| {
                let plus = sol.x.block(self.n_blocks + k)[(0, 0)].re;
                let minus = sol.x.block(self.n_blocks + self.m + k)[(0, 0)].re;
                plus - minus
            })
            .collect()
    }

    /// Dual slack S read from a solution of the view.
    pub fn slack(&self, sol: &SdpSolution) -> BlockMatrix {
        BlockMatrix::from_blocks(sol.x.blocks()[..self.n_blocks].to_vec())
    }
}

fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::diag(&[v])
}

pub fn assemble_dual_view(p: &SdpProblem) -> DualView {
    let m = p.constraints.len();
    let nb = p.sizes.len();
    let mut sizes = p.sizes.clone();
    sizes.extend(std::iter::repeat_n(1, 2 * m));

    let mut objective: Vec<ComplexMatrix> = p.sizes.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
    objective.extend(p.constraints.iter().map(|c| scalar(-c.b)));
    objective.extend(p.constraints.iter().map(|c| scalar(c.b)));

    let mut constraints = Vec::new();
    for (blk, &n) in p.sizes.iter().enumerate() {
        let complex = !p.block_is_real(blk);
        for i in 0..n {
            for j in i..n {
                let parts: &[bool] = if complex && i != j { &[false, true] } else { &[false] };
                for &imag in parts {
                    // Selector H with Tr[H M] = Re M_ij (or Im M_ij).
                    let h = ComplexMatrix::from_fn(n, n, |r, c| match (imag, (r, c) == (i, j), (r, c) == (j, i)) {
                        (_, true, true) => Complex64::new(1.0, 0.0),
                        (false, true, _) | (false, _, true) => Complex64::new(0.5, 0.0),
                        (true, true, _) => Complex64::new(0.0, 0.5),
                        (true, _, true) => Complex64::new(0.0, -0.5),
                        _ => Complex64::new(0.0, 0.0),
                    });
                    let pick = |mat: &ComplexMatrix| {
                        let z = mat[(i, j)];
                        if imag {
                            z.im
                        } else {
                            z.re
                        }
                    };
                    let mut blocks: Vec<ComplexMatrix> = sizes.iter().map(|&s| ComplexMatrix::zeros(s, s)).collect();
                    blocks[blk] = h;
                    for (k, c) in p.constraints.iter().enumerate() {
                        let a = pick(c.a.block(blk));
                        blocks[nb + k] = scalar(a);
                        blocks[nb + m + k] = scalar(-a);
                    }
                    constraints.push(Constraint {
                        a: BlockMatrix::from_blocks(blocks),
                        b: pick(p.objective.block(blk)),
                    });
                }
            }
        }
    }

    let problem = SdpProblem::new(sizes, BlockMatrix::from_blocks(objective), constraints)
        .expect("dual view of a valid problem is valid");
    DualView {
        problem,
        m,
        n_blocks: nb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpsolve::{solve, SdpOptions, SdpStatus};

    #[test]
    fn scalar_dual_view() {
        let one = BlockMatrix::from_blocks(vec![scalar(1.0)]);
        let p = SdpProblem::new(vec![1], one.clone(), vec![Constraint { a: one, b: 1.0 }]).unwrap();
        let view = assemble_dual_view(&p);
        let sol = solve(&view.problem, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((view.dual_objective(&sol) - 1.0).abs() < 1e-6);
        assert!((view.multipliers(&sol)[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn complex_block_gets_imaginary_rows() {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let sy = ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z]).unwrap();
        let p = SdpProblem::new(
            vec![2],
            BlockMatrix::from_blocks(vec![sy]),
            vec![Constraint {
                a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]),
                b: 1.0,
            }],
        )
        .unwrap();
        let view = assemble_dual_view(&p);
        assert_eq!(view.problem.constraints().len(), 4);
        let sol = solve(&view.problem, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        // max t s.t. σ_y − tI ⪰ 0 → t = −1.
        assert!((view.dual_objective(&sol) + 1.0).abs() < 1e-6);
    }
}
