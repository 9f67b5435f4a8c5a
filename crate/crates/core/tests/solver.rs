use nlq_core::matcore::{eig_hermitian, ComplexMatrix};
use nlq_core::sdpsolve::sdpa::{read_sdpa, write_sdpa};
use nlq_core::sdpsolve::{
    assemble_dual_view, solve, BlockMatrix, Constraint, LmiProblem, SdpOptions, SdpProblem, SdpStatus,
};
use nlq_core::states::random::random_hermitian;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trace_one(n: usize) -> Vec<Constraint> {
    vec![Constraint {
        a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(n)]),
        b: 1.0,
    }]
}

fn real_part(m: &ComplexMatrix) -> ComplexMatrix {
    m.map(|z| Complex64::new(z.re, 0.0))
}

fn random_pd(n: usize, real: bool, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = random_hermitian(n, rng);
    let g = if real { real_part(&g) } else { g };
    &(&g * &g.adjoint()) + &ComplexMatrix::identity(n).scale(0.2)
}

fn random_block(sizes: &[usize], real: bool, rng: &mut ChaCha8Rng) -> BlockMatrix {
    BlockMatrix::from_blocks(
        sizes
            .iter()
            .map(|&n| {
                let h = random_hermitian(n, rng);
                if real {
                    real_part(&h)
                } else {
                    h
                }
            })
            .collect(),
    )
}

/// b = A(X0) and C = S0 + Σ y0_k A_k with X0, S0 ≻ 0, so both the primal
/// and the dual are strictly feasible.
fn strictly_feasible(sizes: &[usize], m: usize, real: bool, rng: &mut ChaCha8Rng) -> (SdpProblem, BlockMatrix) {
    let x0 = BlockMatrix::from_blocks(sizes.iter().map(|&n| random_pd(n, real, rng)).collect());
    let mut c = BlockMatrix::from_blocks(sizes.iter().map(|&n| random_pd(n, real, rng)).collect());
    let mut constraints = Vec::new();
    for _ in 0..m {
        let a = random_block(sizes, real, rng);
        let y0: f64 = rng.gen_range(-1.0..1.0);
        c.axpy(y0, &a);
        let b = a.trace_with(&x0);
        constraints.push(Constraint { a, b });
    }
    (SdpProblem::new(sizes.to_vec(), c, constraints).unwrap(), x0)
}

#[test]
fn smallest_eigenvalue_of_twenty_random_hermitian_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let n = 2 + k % 5;
        let h = random_hermitian(n, &mut rng);
        let expect = eig_hermitian(&h).unwrap().values[0];
        let p = SdpProblem::new(vec![n], BlockMatrix::from_blocks(vec![h]), trace_one(n)).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "case {k}");
        assert!(
            (sol.primal_objective - expect).abs() < 1e-8,
            "case {k}: {} vs {expect}",
            sol.primal_objective
        );
        assert!((sol.y[0] - expect).abs() < 1e-8, "case {k}");
    }
}

#[test]
fn strictly_feasible_programs_close_the_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..12 {
        let sizes: Vec<usize> = match k % 3 {
            0 => vec![4],
            1 => vec![3, 2],
            _ => vec![2, 3, 1],
        };
        let (p, _) = strictly_feasible(&sizes, 3 + k % 4, k % 2 == 0, &mut rng);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "case {k}");
        let gap = (sol.primal_objective - sol.dual_objective).abs() / (1.0 + sol.primal_objective.abs());
        assert!(gap <= 1e-6, "case {k}: gap {gap}");
        let res: f64 = p.primal_residual(&sol.x).iter().map(|r| r.abs()).fold(0.0, f64::max);
        assert!(res < 1e-6, "case {k}: residual {res}");
        assert!(sol.x.min_eigenvalue() > -1e-7);
        assert!(p.dual_slack(&sol.y).min_eigenvalue() > -1e-7);
    }
}

#[test]
fn dual_view_bounds_every_feasible_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..6 {
        let (p, x0) = strictly_feasible(&[3, 2], 3, k % 2 == 1, &mut rng);
        let primal = solve(&p, &SdpOptions::default()).unwrap();
        let view = assemble_dual_view(&p);
        let dual = solve(&view.problem, &SdpOptions::default()).unwrap();
        assert_eq!(dual.status, SdpStatus::Optimal, "case {k}");
        let d = view.dual_objective(&dual);
        assert!((d - primal.primal_objective).abs() < 1e-6 * (1.0 + d.abs()), "case {k}");
        // Weak duality against the feasible point used to build b.
        assert!(d <= p.objective().trace_with(&x0) + 1e-9);
        let y = view.multipliers(&dual);
        let b: f64 = p.constraints().iter().zip(&y).map(|(c, y)| c.b * y).sum();
        assert!((b - d).abs() < 1e-6 * (1.0 + d.abs()));
        assert!(view.slack(&dual).min_eigenvalue() > -1e-7);
    }
}

#[test]
fn sdpa_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (p, _) = strictly_feasible(&[3, 2], 4, true, &mut rng);
    let text = write_sdpa(&p).unwrap();
    let q = read_sdpa(&text).unwrap();
    assert_eq!(q.sizes(), p.sizes());
    assert_eq!(q.objective(), p.objective());
    assert_eq!(q.constraints(), p.constraints());
    let (a, b) = (
        solve(&p, &SdpOptions::default()).unwrap(),
        solve(&q, &SdpOptions::default()).unwrap(),
    );
    assert_eq!(a.primal_objective, b.primal_objective);
}

#[test]
fn lmi_largest_eigenvalue() {
    // minimize t s.t. tI − H ⪰ 0.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random_hermitian(4, &mut rng);
    let lmax = *eig_hermitian(&h).unwrap().values.last().unwrap();
    let lmi = LmiProblem {
        c: vec![1.0],
        f0: BlockMatrix::from_blocks(vec![h.scale(-1.0)]),
        f: vec![BlockMatrix::from_blocks(vec![ComplexMatrix::identity(4)])],
    };
    let sol = lmi.solve(&SdpOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.x[0] - lmax).abs() < 1e-8);
    assert!((sol.dual_objective - lmax).abs() < 1e-8);
}

#[test]
fn infeasible_and_unbounded_programs_are_classified() {
    // Tr X = −1 has no PSD solution.
    let p = SdpProblem::new(
        vec![2],
        BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]),
        vec![Constraint {
            a: BlockMatrix::from_blocks(vec![ComplexMatrix::identity(2)]),
            b: -1.0,
        }],
    )
    .unwrap();
    assert_eq!(
        solve(&p, &SdpOptions::default()).unwrap().status,
        SdpStatus::PrimalInfeasible
    );

    // min −X11 with X12 = 0 fixed only: unbounded below.
    let e12 = ComplexMatrix::from_real(2, 2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
    let p = SdpProblem::new(
        vec![2],
        BlockMatrix::from_blocks(vec![ComplexMatrix::diag(&[-1.0, 0.0])]),
        vec![Constraint {
            a: BlockMatrix::from_blocks(vec![e12]),
            b: 0.0,
        }],
    )
    .unwrap();
    assert_eq!(
        solve(&p, &SdpOptions::default()).unwrap().status,
        SdpStatus::DualInfeasible
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minimum_eigenvalue_matches_jacobi(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(n, &mut rng);
        let expect = eig_hermitian(&h).unwrap().values[0];
        let p = SdpProblem::new(vec![n], BlockMatrix::from_blocks(vec![h]), trace_one(n)).unwrap();
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!((sol.primal_objective - expect).abs() < 1e-8);
    }

    #[test]
    fn primal_objective_never_below_dual(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, x0) = strictly_feasible(&[2, 2], 2, false, &mut rng);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!(sol.dual_objective <= p.objective().trace_with(&x0) + 1e-8);
        prop_assert!(sol.primal_objective >= sol.dual_objective - 1e-7 * (1.0 + sol.dual_objective.abs()));
    }
}
