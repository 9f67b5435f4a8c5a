//! Bell values and entanglement measures plotted next to the quantifier.

use std::f64::consts::{LN_2, PI, SQRT_2};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matcore::{eig_hermitian, jacobi_symmetric, kron, trace_product, ComplexMatrix, RealMatrix};
use crate::states::{DensityMatrix, Party};

/// Quantum maximum of CHSH, used to normalise it.
pub const CHSH_NORMALIZATION: f64 = 2.0 * SQRT_2;
/// Plotting constant for the CGLMP value.
pub const CGLMP_NORMALIZATION: f64 = 4.0 * SQRT_2;
/// Canonical CGLMP phases (α₁, α₂, β₁, β₂).
pub const CANONICAL_PHASES: [f64; 4] = [0.0, 0.5, 0.25, -0.25];

const PROB_TOL: f64 = 1e-10;
const BASIS_TOL: f64 = 1e-10;

fn require_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dims() != (2, 2) {
        return invalid(format!("expected a two-qubit state, got dims {:?}", rho.dims()));
    }
    Ok(())
}

fn pauli() -> [ComplexMatrix; 3] {
    let (o, z, i) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::i());
    [
        ComplexMatrix::from_vec(2, 2, vec![z, o, o, z]).expect("2x2"),
        ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z]).expect("2x2"),
        ComplexMatrix::from_vec(2, 2, vec![o, z, z, -o]).expect("2x2"),
    ]
}

/// Correlation matrix T_ij = Tr[ρ σ_i ⊗ σ_j].
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<RealMatrix> {
    require_qubits(rho)?;
    let s = pauli();
    Ok(RealMatrix::from_fn(3, 3, |i, j| {
        trace_product(rho.matrix(), &kron(&s[i], &s[j])).re
    }))
}

/// Maximal CHSH value 2√(m₁ + m₂), m₁ ≥ m₂ the top eigenvalues of TᵀT.
pub fn chsh_max(rho: &DensityMatrix) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let (vals, _) = jacobi_symmetric(&t.transpose().matmul(&t));
    Ok(2.0 * (vals[2] + vals[1]).max(0.0).sqrt())
}

/// Violation mapped onto [0, 1]: max(value − 2, 0)/(2√2 − 2).
pub fn chsh_violation_fraction(value: f64) -> f64 {
    (value - 2.0).max(0.0) / (CHSH_NORMALIZATION - 2.0)
}

/// Wootters concurrence.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho)?;
    let s = &pauli()[1];
    let yy = kron(s, s);
    let tilde = rho.matrix().conj().conjugate_by(&yy);
    let sqrt_rho = eig_hermitian(rho.matrix())?.reconstruct_with(|x| x.max(0.0).sqrt());
    let r = (&(&sqrt_rho * &tilde) * &sqrt_rho).hermitian_part();
    let mut sv: Vec<f64> = eig_hermitian(&r)?.values.iter().map(|x| x.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok((sv[0] - sv[1] - sv[2] - sv[3]).clamp(0.0, 1.0))
}

/// Binary entropy in bits.
fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Entanglement of formation in ebits from the concurrence.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt()))
}

pub fn eof(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

/// −Tr[ρ_X ln ρ_X] of one reduction, in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix, party: Party) -> f64 {
    let reduced = rho.reduced(party);
    let vals = eig_hermitian(&reduced.hermitian_part())
        .map(|e| e.values)
        .unwrap_or_default();
    vals.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy in bits, for comparisons with EOF.
pub fn von_neumann_entropy_bits(rho: &DensityMatrix, party: Party) -> f64 {
    von_neumann_entropy(rho, party) / LN_2
}

/// Joint outcome probabilities p(a, b | A_i, B_j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    settings: (usize, usize),
    outcomes: (usize, usize),
    data: Vec<f64>,
}

impl ProbabilityTable {
    /// `data` is indexed [i][j][a][b] in row-major order.
    pub fn new(settings: (usize, usize), outcomes: (usize, usize), data: Vec<f64>) -> Result<Self> {
        let n = settings.0 * settings.1 * outcomes.0 * outcomes.1;
        if n == 0 || data.len() != n {
            return invalid(format!(
                "table with settings {settings:?} and outcomes {outcomes:?} needs {n} entries, got {}",
                data.len()
            ));
        }
        let t = Self {
            settings,
            outcomes,
            data,
        };
        for i in 0..settings.0 {
            for j in 0..settings.1 {
                let mut total = 0.0;
                for a in 0..outcomes.0 {
                    for b in 0..outcomes.1 {
                        let p = t.get(i, j, a, b);
                        if !(p >= -1e-12) {
                            return invalid(format!("negative probability {p} at ({i},{j},{a},{b})"));
                        }
                        total += p;
                    }
                }
                if (total - 1.0).abs() > PROB_TOL {
                    return invalid(format!("settings ({i},{j}) sum to {total}"));
                }
            }
        }
        Ok(t)
    }

    pub fn settings(&self) -> (usize, usize) {
        self.settings
    }

    pub fn outcomes(&self) -> (usize, usize) {
        self.outcomes
    }

    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let (_, sb) = self.settings;
        let (oa, ob) = self.outcomes;
        self.data[((i * sb + j) * oa + a) * ob + b]
    }

    /// w·self + (1−w)·other.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.settings != other.settings || self.outcomes != other.outcomes {
            return invalid("tables of different shapes");
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        Self::new(self.settings, self.outcomes, data)
    }

    /// Largest change of a one-party marginal under a change of the other
    /// party's setting.
    pub fn signaling_defect(&self) -> f64 {
        let (sa, sb) = self.settings;
        let (oa, ob) = self.outcomes;
        let marg_a = |i: usize, j: usize, a: usize| (0..ob).map(|b| self.get(i, j, a, b)).sum::<f64>();
        let marg_b = |i: usize, j: usize, b: usize| (0..oa).map(|a| self.get(i, j, a, b)).sum::<f64>();
        let mut worst: f64 = 0.0;
        for i in 0..sa {
            for a in 0..oa {
                for j in 1..sb {
                    worst = worst.max((marg_a(i, j, a) - marg_a(i, 0, a)).abs());
                }
            }
        }
        for j in 0..sb {
            for b in 0..ob {
                for i in 1..sa {
                    worst = worst.max((marg_b(i, j, b) - marg_b(0, j, b)).abs());
                }
            }
        }
        worst
    }
}

/// Table of the local deterministic strategy with outcome `alice[i]` for
/// setting i and `bob[j]` for setting j.
pub fn deterministic_table(alice: &[usize], bob: &[usize], outcomes: (usize, usize)) -> Result<ProbabilityTable> {
    if alice.iter().any(|&a| a >= outcomes.0) || bob.iter().any(|&b| b >= outcomes.1) {
        return invalid("strategy outcome out of range");
    }
    let (sa, sb) = (alice.len(), bob.len());
    let mut data = vec![0.0; sa * sb * outcomes.0 * outcomes.1];
    for (i, &a) in alice.iter().enumerate() {
        for (j, &b) in bob.iter().enumerate() {
            data[((i * sb + j) * outcomes.0 + a) * outcomes.1 + b] = 1.0;
        }
    }
    ProbabilityTable::new((sa, sb), outcomes, data)
}

/// One orthonormal basis per setting.
pub type LocalMeasurements = Vec<Vec<Vec<Complex64>>>;

/// Rank-one projective measurements for both parties.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    alice: LocalMeasurements,
    bob: LocalMeasurements,
}

fn check_basis(vectors: &[Vec<Complex64>], who: &str, setting: usize) -> Result<()> {
    let d = vectors.first().map_or(0, Vec::len);
    if d == 0 || vectors.len() != d || vectors.iter().any(|v| v.len() != d) {
        return invalid(format!("{who} setting {setting}: need {d} vectors of length {d}"));
    }
    for (x, u) in vectors.iter().enumerate() {
        for (y, v) in vectors.iter().enumerate() {
            let overlap: Complex64 = u.iter().zip(v).map(|(p, q)| p.conj() * q).sum();
            let expect = if x == y { 1.0 } else { 0.0 };
            if (overlap - expect).norm() > BASIS_TOL {
                return invalid(format!("{who} setting {setting}: vectors {x},{y} not orthonormal"));
            }
        }
    }
    Ok(())
}

impl MeasurementSet {
    /// Checks each setting is an orthonormal (hence complete) basis.
    pub fn new(alice: LocalMeasurements, bob: LocalMeasurements) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return invalid("each party needs at least one setting");
        }
        for (k, s) in alice.iter().enumerate() {
            check_basis(s, "Alice", k)?;
        }
        for (k, s) in bob.iter().enumerate() {
            check_basis(s, "Bob", k)?;
        }
        let da = alice[0].len();
        let db = bob[0].len();
        if alice.iter().any(|s| s.len() != da) || bob.iter().any(|s| s.len() != db) {
            return invalid("all settings of a party must share one dimension");
        }
        Ok(Self { alice, bob })
    }

    /// Computational-basis measurement for every setting.
    pub fn computational(dims: (usize, usize), settings: (usize, usize)) -> Self {
        let basis = |d: usize| -> Vec<Vec<Complex64>> {
            (0..d)
                .map(|k| {
                    (0..d)
                        .map(|j| Complex64::new(if j == k { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect()
        };
        Self {
            alice: vec![basis(dims.0); settings.0],
            bob: vec![basis(dims.1); settings.1],
        }
    }

    pub fn alice(&self) -> &LocalMeasurements {
        &self.alice
    }

    pub fn bob(&self) -> &LocalMeasurements {
        &self.bob
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.alice[0].len(), self.bob[0].len())
    }
}

/// Born-rule probabilities Tr[ρ Π^A_{i,a} ⊗ Π^B_{j,b}].
pub fn joint_probabilities(rho: &DensityMatrix, m: &MeasurementSet) -> Result<ProbabilityTable> {
    if rho.dims() != m.dims() {
        return invalid(format!(
            "measurements for {:?} on a state of dims {:?}",
            m.dims(),
            rho.dims()
        ));
    }
    let (sa, sb) = (m.alice.len(), m.bob.len());
    let (oa, ob) = m.dims();
    let mut data = Vec::with_capacity(sa * sb * oa * ob);
    for ai in &m.alice {
        for bj in &m.bob {
            for u in ai {
                for v in bj {
                    let w: Vec<Complex64> = u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect();
                    data.push(rho.matrix().expectation(&w).re);
                }
            }
        }
    }
    ProbabilityTable::new((sa, sb), (oa, ob), data)
}

/// P(X ≐ Y + m) = Σ_y P(X = y + m mod 3, Y = y), X being the first listed
/// party.
fn p_shift(t: &ProbabilityTable, alice_first: bool, i: usize, j: usize, m: i64) -> f64 {
    (0..3)
        .map(|y| {
            let x = (y as i64 + m).rem_euclid(3) as usize;
            if alice_first {
                t.get(i, j, x, y)
            } else {
                t.get(i, j, y, x)
            }
        })
        .sum()
}

/// I₃ = [P(A₁≐B₁) + P(B₁≐A₂+1) + P(A₂≐B₂) + P(B₂≐A₁)]
///    − [P(A₁≐B₁−1) + P(B₁≐A₂) + P(A₂≐B₂−1) + P(B₂≐A₁−1)]
/// with equalities taken mod 3.
pub fn cglmp_value(t: &ProbabilityTable) -> Result<f64> {
    if t.settings != (2, 2) || t.outcomes != (3, 3) {
        return invalid(format!(
            "CGLMP needs 2 settings and 3 outcomes per party, got {:?} and {:?}",
            t.settings, t.outcomes
        ));
    }
    let ab = |i, j, m| p_shift(t, true, i, j, m);
    let ba = |i, j, m| p_shift(t, false, i, j, m);
    let plus = ab(0, 0, 0) + ba(1, 0, 1) + ab(1, 1, 0) + ba(0, 1, 0);
    let minus = ab(0, 0, -1) + ba(1, 0, 0) + ab(1, 1, -1) + ba(0, 1, -1);
    Ok(plus - minus)
}

fn fourier_basis(phase: f64, sign: f64) -> Vec<Vec<Complex64>> {
    let norm = 1.0 / 3f64.sqrt();
    (0..3)
        .map(|k| {
            (0..3)
                .map(|j| Complex64::from_polar(norm, 2.0 * PI / 3.0 * j as f64 * (sign * k as f64 + phase)))
                .collect()
        })
        .collect()
}

/// CGLMP measurements with phases (α₁, α₂, β₁, β₂):
/// |k⟩_{A,a} = Σ_j e^{2πi j(k+α_a)/3}|j⟩/√3 and
/// |l⟩_{B,b} = Σ_j e^{2πi j(−l+β_b)/3}|j⟩/√3.
pub fn cglmp_measurements(phases: [f64; 4]) -> MeasurementSet {
    MeasurementSet {
        alice: vec![fourier_basis(phases[0], 1.0), fourier_basis(phases[1], 1.0)],
        bob: vec![fourier_basis(phases[2], -1.0), fourier_basis(phases[3], -1.0)],
    }
}

/// I₃ of ρ with the CGLMP measurements at `phases`.
pub fn cglmp_at(rho: &DensityMatrix, phases: [f64; 4]) -> Result<f64> {
    cglmp_value(&joint_probabilities(rho, &cglmp_measurements(phases))?)
}

/// Nelder–Mead minimisation of `f` from `start`.
fn nelder_mead(f: &impl Fn(&[f64; 4]) -> f64, start: [f64; 4], step: f64, max_iter: usize) -> ([f64; 4], f64) {
    let mut simplex: Vec<([f64; 4], f64)> = (0..5)
        .map(|k| {
            let mut p = start;
            if k > 0 {
                p[k - 1] += step;
            }
            (p, f(&p))
        })
        .collect();
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[4].1 - simplex[0].1).abs() < 1e-14 {
            break;
        }
        let mut centroid = [0.0; 4];
        for (p, _) in &simplex[..4] {
            for d in 0..4 {
                centroid[d] += p[d] / 4.0;
            }
        }
        let along = |t: f64| {
            let mut p = [0.0; 4];
            for d in 0..4 {
                p[d] = centroid[d] + t * (simplex[4].0[d] - centroid[d]);
            }
            p
        };
        let r = along(-1.0);
        let fr = f(&r);
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = f(&e);
            simplex[4] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (r, fr);
        } else {
            let c = if fr < simplex[4].1 { along(-0.5) } else { along(0.5) };
            let fc = f(&c);
            if fc < fr.min(simplex[4].1) {
                simplex[4] = (c, fc);
            } else {
                let best = simplex[0].0;
                for (p, fp) in simplex.iter_mut().skip(1) {
                    for d in 0..4 {
                        p[d] = best[d] + 0.5 * (p[d] - best[d]);
                    }
                    *fp = f(p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

#[derive(Clone, Debug)]
pub struct CglmpOptimum {
    pub value: f64,
    pub phases: [f64; 4],
    pub measurements: MeasurementSet,
}

impl CglmpOptimum {
    pub fn normalized(&self) -> f64 {
        self.value / CGLMP_NORMALIZATION
    }
}

/// Number of Nelder–Mead starts, the canonical phases among them.
pub const CGLMP_STARTS: usize = 8;

/// Maximises I₃ over the CGLMP phase family from [`CGLMP_STARTS`] starts:
/// the canonical phases and seeded random ones.
pub fn cglmp_optimize(rho: &DensityMatrix) -> Result<CglmpOptimum> {
    if rho.dims() != (3, 3) {
        return invalid(format!("expected a two-qutrit state, got dims {:?}", rho.dims()));
    }
    let objective = |p: &[f64; 4]| -cglmp_at(rho, *p).unwrap_or(f64::NEG_INFINITY);
    let mut rng = StdRng::seed_from_u64(0xC61A);
    let mut starts = vec![CANONICAL_PHASES];
    while starts.len() < CGLMP_STARTS {
        starts.push([(); 4].map(|_| rng.gen_range(-1.5..1.5)));
    }
    let mut best = (CANONICAL_PHASES, f64::INFINITY);
    for s in starts {
        let (p, v) = nelder_mead(&objective, s, 0.1, 2_000);
        if v < best.1 {
            best = (p, v);
        }
    }
    Ok(CglmpOptimum {
        value: -best.1,
        phases: best.0,
        measurements: cglmp_measurements(best.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell, maximally_entangled, mems, pure_state, pure_theta, white_noise};

    fn product(a: usize, b: usize, dims: (usize, usize)) -> DensityMatrix {
        let mut v = vec![Complex64::new(0.0, 0.0); dims.0 * dims.1];
        v[a * dims.1 + b] = Complex64::new(1.0, 0.0);
        pure_state(&v, dims).unwrap()
    }

    #[test]
    fn chsh_anchors() {
        assert!((chsh_max(&bell()).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((chsh_max(&product(1, 1, (2, 2))).unwrap() - 2.0).abs() < 1e-12);
        for theta in [0.1f64, 0.4, 0.7, 1.2] {
            let expect = 2.0 * (1.0 + (2.0 * theta).sin().powi(2)).sqrt();
            assert!((chsh_max(&pure_theta(theta).unwrap()).unwrap() - expect).abs() < 1e-10);
        }
        assert!(chsh_max(&maximally_entangled(3)).is_err());
    }

    #[test]
    fn concurrence_anchors() {
        assert!((concurrence(&bell()).unwrap() - 1.0).abs() < 1e-9);
        assert!((eof(&bell()).unwrap() - 1.0).abs() < 1e-9);
        assert!(concurrence(&product(0, 1, (2, 2))).unwrap() < 1e-9);
        assert!(eof(&product(0, 1, (2, 2))).unwrap() < 1e-9);
        assert!((concurrence(&mems(0.8).unwrap()).unwrap() - 0.8).abs() < 1e-9);
        assert!(concurrence(&white_noise((2, 2))).unwrap() == 0.0);
    }

    #[test]
    fn entropy_anchors() {
        assert!(von_neumann_entropy(&product(0, 1, (2, 2)), Party::A).abs() < 1e-12);
        assert!((von_neumann_entropy(&bell(), Party::B) - LN_2).abs() < 1e-12);
        let q = maximally_entangled(3);
        assert!((von_neumann_entropy(&q, Party::A) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn probabilities_of_bell_in_computational_basis() {
        let t = joint_probabilities(&bell(), &MeasurementSet::computational((2, 2), (2, 2))).unwrap();
        assert!((t.get(0, 0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((t.get(1, 1, 1, 1) - 0.5).abs() < 1e-15);
        assert!(t.get(0, 1, 0, 1).abs() < 1e-15);
    }

    #[test]
    fn noise_gives_uniform_table_and_zero_cglmp() {
        let t = joint_probabilities(&white_noise((3, 3)), &cglmp_measurements(CANONICAL_PHASES)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..3 {
                    for b in 0..3 {
                        assert!((t.get(i, j, a, b) - 1.0 / 9.0).abs() < 1e-15);
                    }
                }
            }
        }
        assert!(cglmp_value(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn canonical_cglmp_on_maximally_entangled() {
        let v = cglmp_at(&maximally_entangled(3), CANONICAL_PHASES).unwrap();
        assert!((v - 2.872_934).abs() < 1e-6, "{v}");
    }

    #[test]
    fn malformed_inputs() {
        assert!(ProbabilityTable::new((2, 2), (3, 3), vec![0.0; 5]).is_err());
        assert!(ProbabilityTable::new((1, 1), (1, 1), vec![0.5]).is_err());
        let t = deterministic_table(&[0, 1], &[1, 0], (2, 2)).unwrap();
        assert!(cglmp_value(&t).is_err());
        let bad = vec![vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]; 2]];
        assert!(MeasurementSet::new(bad.clone(), bad).is_err());
        assert!(joint_probabilities(&bell(), &cglmp_measurements(CANONICAL_PHASES)).is_err());
    }

    #[test]
    fn cglmp_measurements_are_orthonormal() {
        let m = cglmp_measurements([0.3, -0.7, 1.1, 0.05]);
        assert!(MeasurementSet::new(m.alice.clone(), m.bob.clone()).is_ok());
    }

    #[test]
    fn optimizer_bounds() {
        let q = cglmp_optimize(&maximally_entangled(3)).unwrap();
        assert!(q.value >= 2.872_9 - 1e-6);
        assert!(cglmp_optimize(&product(2, 2, (3, 3))).unwrap().value <= 2.0 + 1e-9);
        assert!(cglmp_optimize(&white_noise((3, 3))).unwrap().value.abs() < 1e-9);
    }
}
