//! Seedable random states and unitaries, mainly for property tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{pure_state, DensityMatrix};
use crate::matcore::{kron, ComplexMatrix};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn random_pure(dims: (usize, usize), rng: &mut impl Rng) -> DensityMatrix {
    let amps: Vec<Complex64> = (0..dims.0 * dims.1).map(|_| gaussian(rng)).collect();
    pure_state(&amps, dims).expect("gaussian vector is nonzero")
}

/// Random state G G† / Tr[G G†] with G a d×rank Ginibre matrix.
/// `rank == d` gives the Hilbert–Schmidt measure.
pub fn random_density(dims: (usize, usize), rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = dims.0 * dims.1;
    let g = ComplexMatrix::from_fn(d, rank.max(1), |_, _| gaussian(rng));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new_unchecked(w.scale(1.0 / tr).hermitian_part(), dims)
}

/// Haar-random unitary via Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng)).collect();
        for u in &cols {
            let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= overlap * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Convex mixture of `terms` random product pure states.
pub fn random_separable(dims: (usize, usize), terms: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = dims.0 * dims.1;
    let mut acc = ComplexMatrix::zeros(d, d);
    let weights: Vec<f64> = (0..terms.max(1)).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a: Vec<Complex64> = (0..dims.0).map(|_| gaussian(rng)).collect();
        let b: Vec<Complex64> = (0..dims.1).map(|_| gaussian(rng)).collect();
        let pa = pure_state(&a, (dims.0, 1)).expect("nonzero");
        let pb = pure_state(&b, (dims.1, 1)).expect("nonzero");
        let prod = kron(pa.matrix(), pb.matrix());
        acc = &acc + &prod.scale(w / total);
    }
    DensityMatrix::new_unchecked(acc.hermitian_part(), dims)
}

/// Random Hermitian matrix with entries uniform in [-1, 1] + i[-1, 1].
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .hermitian_part()
}
