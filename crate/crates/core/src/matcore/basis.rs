use num_complex::Complex64;

use super::{kron, trace_product, ComplexMatrix};

/// Orthonormal Hermitian operator basis on C^{d_a} ⊗ C^{d_b}.
///
/// Element 0 is I/√(d_a d_b). The remaining elements are ordered
/// lexicographically by (A-factor index, B-factor index), where each factor
/// comes from [`gell_mann_single`].
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    pub dims: (usize, usize),
    pub elements: Vec<ComplexMatrix>,
}

impl HermitianBasis {
    /// Hilbert-space dimension d_a·d_b.
    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of the product element with factors (i, j).
    pub fn product_index(&self, a_index: usize, b_index: usize) -> usize {
        a_index * self.dims.1 * self.dims.1 + b_index
    }

    /// Real coordinates Tr[λ_i H].
    pub fn coordinates(&self, h: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|l| trace_product(l, h).re).collect()
    }

    /// Σ_i c_i λ_i.
    pub fn reconstruct(&self, coords: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (c, l) in coords.iter().zip(&self.elements) {
            out = &out + &l.scale(*c);
        }
        out
    }
}

/// Generalised Gell-Mann operators for one d-level system, normalised so
/// that Tr[g_i g_j] = δ_ij.
///
/// Order: I/√d, then symmetric (|j><k| + |k><j|)/√2 for j < k, then
/// antisymmetric (-i|j><k| + i|k><j|)/√2 for j < k, then the diagonal ones.
/// For d = 2 this is (I, σx, σy, σz)/√2.
pub fn gell_mann_single(d: usize) -> Vec<ComplexMatrix> {
    assert!(d >= 1);
    let mut out = Vec::with_capacity(d * d);
    out.push(ComplexMatrix::identity(d).scale(1.0 / (d as f64).sqrt()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, k)] = Complex64::new(h, 0.0);
        m[(k, j)] = Complex64::new(h, 0.0);
        out.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, k)] = Complex64::new(0.0, -h);
        m[(k, j)] = Complex64::new(0.0, h);
        out.push(m);
    }
    for l in 0..d.saturating_sub(1) {
        let norm = (((l + 1) * (l + 2)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l + 1) {
            *x = 1.0 / norm;
        }
        diag[l + 1] = -((l + 1) as f64) / norm;
        out.push(ComplexMatrix::diag(&diag));
    }
    out
}

/// Product Gell-Mann basis for a bipartite system.
pub fn gell_mann_basis(d_a: usize, d_b: usize) -> HermitianBasis {
    let ga = gell_mann_single(d_a);
    let gb = gell_mann_single(d_b);
    let mut elements = Vec::with_capacity(ga.len() * gb.len());
    for a in &ga {
        for b in &gb {
            elements.push(kron(a, b));
        }
    }
    HermitianBasis {
        dims: (d_a, d_b),
        elements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gram_defect(b: &HermitianBasis) -> f64 {
        let mut worst = 0.0f64;
        for (i, x) in b.elements.iter().enumerate() {
            for (j, y) in b.elements.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((trace_product(x, y) - expect).norm());
            }
        }
        worst
    }

    #[test]
    fn qubit_pair_basis() {
        let b = gell_mann_basis(2, 2);
        assert_eq!(b.len(), 16);
        assert!(b.elements[0].max_abs_diff(&ComplexMatrix::identity(4).scale(0.5)) < 1e-14);
        assert!(gram_defect(&b) < 1e-10);
        assert!(b.elements.iter().all(|e| e.is_hermitian(1e-15)));
        assert!(b.elements[1..].iter().all(|e| e.trace().norm() < 1e-14));
    }

    #[test]
    fn qutrit_pair_basis() {
        let b = gell_mann_basis(3, 3);
        assert_eq!(b.len(), 81);
        assert_eq!(b.len() - 1, 80);
        assert!(gram_defect(&b) < 1e-10);
    }

    #[test]
    fn mixed_dimension_basis() {
        let b = gell_mann_basis(2, 3);
        assert_eq!(b.len(), 36);
        assert!(gram_defect(&b) < 1e-10);
        assert_eq!(b.product_index(1, 2), 11);
    }

    #[test]
    fn qubit_factors_are_paulis() {
        let g = gell_mann_single(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(g[3].max_abs_diff(&ComplexMatrix::diag(&[h, -h])) < 1e-15);
        assert_eq!(g[2][(1, 0)], Complex64::new(0.0, h));
    }

    #[test]
    fn expansion_reconstructs_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (da, db) in [(2, 2), (3, 3), (2, 3)] {
            let b = gell_mann_basis(da, db);
            let n = da * db;
            let h = ComplexMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .hermitian_part();
            let back = b.reconstruct(&b.coordinates(&h));
            assert!(back.max_abs_diff(&h) < 1e-10);
        }
    }
}
