//! Linear matrix inequality form: minimize cᵀx subject to F0 + Σ x_i F_i ⪰ 0.

use crate::error::{invalid, Result};

use super::{solve, BlockMatrix, Constraint, SdpOptions, SdpProblem, SdpStatus};

#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub c: Vec<f64>,
    pub f0: BlockMatrix,
    pub f: Vec<BlockMatrix>,
}

#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    /// Dual matrix Z ⪰ 0 with Tr[F_i Z] = c_i.
    pub z: BlockMatrix,
    /// cᵀx.
    pub primal_objective: f64,
    /// −Tr[F0 Z].
    pub dual_objective: f64,
}

impl LmiProblem {
    /// The dual as a standard-form problem: minimize Tr[F0 Z] subject to
    /// Tr[F_i Z] = c_i, Z ⪰ 0. Its multipliers are −x.
    pub fn to_standard(&self) -> Result<SdpProblem> {
        if self.c.len() != self.f.len() {
            return invalid(format!("{} costs for {} matrices", self.c.len(), self.f.len()));
        }
        let constraints = self
            .f
            .iter()
            .zip(&self.c)
            .map(|(a, &b)| Constraint { a: a.clone(), b })
            .collect();
        SdpProblem::new(self.f0.sizes(), self.f0.clone(), constraints)
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<LmiSolution> {
        let sol = solve(&self.to_standard()?, opts)?;
        let x: Vec<f64> = sol.y.iter().map(|v| -v).collect();
        let primal_objective = self.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        Ok(LmiSolution {
            status: sol.status,
            x,
            dual_objective: -sol.primal_objective,
            z: sol.x,
            primal_objective,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::ComplexMatrix;

    #[test]
    fn largest_eigenvalue_as_lmi() {
        // minimize t s.t. tI − H ⪰ 0 gives λ_max(H).
        let h = ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 3.0]).unwrap();
        let lmi = LmiProblem {
            c: vec![1.0],
            f0: BlockMatrix::from_blocks(vec![h.scale(-1.0)]),
            f: vec![BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)])],
        };
        let sol = lmi.solve(&SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let expect = 2.5 + 1.25f64.sqrt();
        assert!((sol.primal_objective - expect).abs() < 1e-7);
        assert!((sol.dual_objective - expect).abs() < 1e-7);
    }

    #[test]
    fn mismatched_lengths() {
        let lmi = LmiProblem {
            c: vec![1.0, 2.0],
            f0: BlockMatrix::zeros(&[1]),
            f: vec![BlockMatrix::zeros(&[1])],
        };
        assert!(lmi.to_standard().is_err());
    }
}
