//! Homogeneous self-dual interior-point method over real symmetric blocks.
//!
//! Problem: minimize <C, X> subject to <A_k, X> = b_k, X ⪰ 0 (block
//! diagonal). The homogeneous model
//!
//! ```text
//!   A(X) − b τ = 0,   C τ − Aᵀ y − S = 0,   bᵀy − <C, X> − κ = 0,
//!   X, S ⪰ 0,  τ, κ ≥ 0
//! ```
//!
//! is followed with HKM search directions and a Mehrotra predictor-corrector.
//! At the end either τ > 0 (an optimal pair after dividing by τ) or κ > 0
//! (a Farkas certificate of primal or dual infeasibility).

use crate::matcore::{jacobi_symmetric, RealMatrix};

use super::{SdpOptions, SdpStatus};

/// One block entry of a sparse block-diagonal matrix.
pub(crate) type BlockEntry = (usize, RealMatrix);

#[derive(Clone, Debug)]
pub(crate) struct RealSdp {
    pub sizes: Vec<usize>,
    pub c: Vec<RealMatrix>,
    /// Constraint matrices listed by nonzero block.
    pub a: Vec<Vec<BlockEntry>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct RealSolution {
    pub status: SdpStatus,
    pub x: Vec<RealMatrix>,
    pub y: Vec<f64>,
    pub s: Vec<RealMatrix>,
    pub iterations: usize,
    /// Farkas ray when infeasibility was detected: y (primal) or X (dual).
    pub ray_y: Option<Vec<f64>>,
    pub ray_x: Option<Vec<RealMatrix>>,
}

fn zeros_like(sizes: &[usize]) -> Vec<RealMatrix> {
    sizes.iter().map(|&n| RealMatrix::zeros(n, n)).collect()
}

fn block_dot(a: &[RealMatrix], b: &[RealMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn block_norm(a: &[RealMatrix]) -> f64 {
    block_dot(a, a).sqrt()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl RealSdp {
    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn order(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// <A_k, Y> for every k (Y need not be symmetric).
    pub fn apply_a(&self, y: &[RealMatrix]) -> Vec<f64> {
        self.a
            .iter()
            .map(|row| row.iter().map(|(blk, m)| m.dot(&y[*blk])).sum())
            .collect()
    }

    /// Σ_k y_k A_k.
    pub fn apply_at(&self, y: &[f64]) -> Vec<RealMatrix> {
        let mut out = zeros_like(&self.sizes);
        for (row, &yk) in self.a.iter().zip(y) {
            if yk == 0.0 {
                continue;
            }
            for (blk, m) in row {
                out[*blk].axpy(yk, m);
            }
        }
        out
    }
}

/// Largest α ≤ cap with M + α·D ⪰ 0, given the Cholesky factor of M.
fn max_step(chol: &RealMatrix, d: &RealMatrix) -> f64 {
    let li = chol.lower_inverse();
    let w = li.matmul(d).matmul(&li.transpose());
    let (vals, _) = jacobi_symmetric(&w);
    let lo = vals.first().copied().unwrap_or(0.0);
    if lo < 0.0 {
        -1.0 / lo
    } else {
        f64::INFINITY
    }
}

fn block_max_step(chols: &[RealMatrix], d: &[RealMatrix]) -> f64 {
    chols
        .iter()
        .zip(d)
        .map(|(l, dm)| max_step(l, dm))
        .fold(f64::INFINITY, f64::min)
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

fn cholesky_blocks(m: &[RealMatrix]) -> Option<Vec<RealMatrix>> {
    m.iter().map(|b| b.cholesky()).collect()
}

struct Direction {
    dx: Vec<RealMatrix>,
    dy: Vec<f64>,
    ds: Vec<RealMatrix>,
    dtau: f64,
    dkappa: f64,
}

/// Quantities fixed within one interior-point iteration.
struct Linearisation<'a> {
    p: &'a RealSdp,
    x: &'a [RealMatrix],
    s_inv: Vec<RealMatrix>,
    m_chol: RealMatrix,
    q: Vec<f64>,
    u: Vec<f64>,
    g: f64,
    rp: Vec<f64>,
    rd: Vec<RealMatrix>,
    rg: f64,
    v_rd: Vec<f64>,
    h: f64,
    tau: f64,
    kappa: f64,
}

impl Linearisation<'_> {
    /// Solves the Newton system for a given complementarity target.
    /// `rc` is the X-side right-hand side (σμS⁻¹ − X − corrector), `rhs_tk`
    /// the τκ one, and `eta` the fraction of the residuals to remove.
    fn solve(&self, rc: &[RealMatrix], rhs_tk: f64, eta: f64) -> Direction {
        let p = self.p;
        let a_rc = p.apply_a(rc);
        let rhs: Vec<f64> = (0..p.m())
            .map(|i| eta * self.rp[i] - a_rc[i] + eta * self.v_rd[i])
            .collect();
        let pv = self.m_chol.cholesky_solve(&rhs);
        let c_rc = block_dot(&p.c, rc);
        let num = -eta * self.rg - rhs_tk / self.tau - c_rc - vdot(&self.u, &pv) + eta * self.h + vdot(&p.b, &pv);
        let den = -self.kappa / self.tau - self.g + vdot(&self.u, &self.q) - vdot(&p.b, &self.q);
        let dtau = num / den;
        let dy: Vec<f64> = pv.iter().zip(&self.q).map(|(a, b)| a + b * dtau).collect();
        let aty = p.apply_at(&dy);
        let ds: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| {
                let mut d = p.c[k].scale(dtau);
                d.axpy(-1.0, &aty[k]);
                d.axpy(eta, &self.rd[k]);
                d
            })
            .collect();
        let dx: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| {
                let t = self.x[k].matmul(&ds[k]).matmul(&self.s_inv[k]);
                let mut d = rc[k].clone();
                d.axpy(-1.0, &t.symmetrized());
                d.symmetrized()
            })
            .collect();
        let dkappa = (rhs_tk - self.kappa * dtau) / self.tau;
        Direction {
            dx,
            dy,
            ds,
            dtau,
            dkappa,
        }
    }
}

/// Scaled residuals of the current iterate, used for termination.
struct Progress {
    pres: f64,
    dres: f64,
    gap: f64,
}

pub(crate) fn solve_real(p: &RealSdp, opts: &SdpOptions) -> RealSolution {
    let n_order = p.order() as f64;
    let m = p.m();
    let b_norm = vec_norm(&p.b);
    let c_norm = block_norm(&p.c);
    let c_max = p.c.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    let b_max = p.b.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let init = 1.0 + b_max + c_max;

    let mut x: Vec<RealMatrix> = p.sizes.iter().map(|&n| RealMatrix::scaled_identity(n, init)).collect();
    let mut s: Vec<RealMatrix> = p.sizes.iter().map(|&n| RealMatrix::scaled_identity(n, init)).collect();
    let mut y = vec![0.0; m];
    let mut tau = 1.0;
    let mut kappa = init * init;

    let finish = |status: SdpStatus, x: &[RealMatrix], y: &[f64], s: &[RealMatrix], tau: f64, it: usize| {
        let scale = 1.0 / tau;
        RealSolution {
            status,
            x: x.iter().map(|b| b.scale(scale)).collect(),
            y: y.iter().map(|v| v * scale).collect(),
            s: s.iter().map(|b| b.scale(scale)).collect(),
            iterations: it,
            ray_y: None,
            ray_x: None,
        }
    };

    let mut stalls = 0usize;
    let mut polished: Option<(RealSolution, f64)> = None;
    for it in 0..opts.max_iterations {
        // Residuals of the homogeneous system.
        let ax = p.apply_a(&x);
        let rp: Vec<f64> = (0..m).map(|k| p.b[k] * tau - ax[k]).collect();
        let aty = p.apply_at(&y);
        let rd: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| {
                let mut r = p.c[k].scale(tau);
                r.axpy(-1.0, &aty[k]);
                r.axpy(-1.0, &s[k]);
                r
            })
            .collect();
        let cx = block_dot(&p.c, &x);
        let by = vdot(&p.b, &y);
        let rg = kappa + cx - by;
        let mu = (block_dot(&x, &s) + tau * kappa) / (n_order + 1.0);

        let pobj = cx / tau;
        let dobj = by / tau;
        let progress = Progress {
            pres: vec_norm(&rp) / tau / (1.0 + b_norm),
            dres: block_norm(&rd) / tau / (1.0 + c_norm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        };
        // Once the tolerances hold, one more step is taken and the better of
        // the two iterates is returned; the last step is nearly free and
        // usually gains an order of magnitude.
        let merit = progress.pres.max(progress.dres).max(progress.gap);
        if progress.pres <= opts.feasibility_tol
            && progress.dres <= opts.feasibility_tol
            && progress.gap <= opts.gap_tol
        {
            let sol = finish(SdpStatus::Optimal, &x, &y, &s, tau, it);
            match polished {
                None => polished = Some((sol, merit)),
                Some((prev, prev_merit)) => return if merit < prev_merit { sol } else { prev },
            }
        } else if let Some((prev, _)) = polished {
            return prev;
        }

        // Infeasibility: τ has collapsed relative to κ and the normalised ray
        // is a certificate.
        if tau <= opts.infeasibility_ratio * kappa {
            let aty_s: Vec<RealMatrix> = aty.iter().zip(&s).map(|(a, sk)| a.add(sk)).collect();
            if by > 0.0 && block_norm(&aty_s) / by <= opts.certificate_tol {
                let mut sol = finish(SdpStatus::PrimalInfeasible, &x, &y, &s, 1.0, it);
                sol.ray_y = Some(y.iter().map(|v| v / by).collect());
                return sol;
            }
            if cx < 0.0 && vec_norm(&ax) / (-cx) <= opts.certificate_tol {
                let mut sol = finish(SdpStatus::DualInfeasible, &x, &y, &s, 1.0, it);
                sol.ray_x = Some(x.iter().map(|b| b.scale(-1.0 / cx)).collect());
                return sol;
            }
        }

        let (Some(x_chol), Some(s_chol)) = (cholesky_blocks(&x), cholesky_blocks(&s)) else {
            return or_polished(polished, finish(SdpStatus::NumericalFailure, &x, &y, &s, tau, it));
        };
        let s_inv: Vec<RealMatrix> = s_chol.iter().map(RealMatrix::inverse_from_cholesky).collect();

        // Schur complement M_ij = <A_i, X A_j S⁻¹>.
        let mut schur = RealMatrix::zeros(m, m);
        let mut xa_sinv: Vec<Vec<(usize, RealMatrix)>> = Vec::with_capacity(m);
        for row in &p.a {
            xa_sinv.push(
                row.iter()
                    .map(|(blk, a)| (*blk, x[*blk].matmul(a).matmul(&s_inv[*blk])))
                    .collect(),
            );
        }
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for (bi, ai) in &p.a[i] {
                    for (bj, g) in &xa_sinv[j] {
                        if bi == bj {
                            acc += ai.dot(g);
                        }
                    }
                }
                schur[(i, j)] = acc;
            }
        }
        for i in 0..m {
            for j in 0..i {
                schur[(i, j)] = schur[(j, i)];
            }
        }
        let m_chol = match schur.cholesky() {
            Some(l) => l,
            None => {
                let diag_max = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max);
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[(i, i)] += 1e-14 * diag_max.max(1e-300);
                }
                match reg.cholesky() {
                    Some(l) => l,
                    None => return or_polished(polished, finish(SdpStatus::NumericalFailure, &x, &y, &s, tau, it)),
                }
            }
        };

        let xc_sinv: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| x[k].matmul(&p.c[k]).matmul(&s_inv[k]))
            .collect();
        let u = p.apply_a(&xc_sinv);
        let g = block_dot(&p.c, &xc_sinv);
        let bu: Vec<f64> = p.b.iter().zip(&u).map(|(a, b)| a + b).collect();
        let q = m_chol.cholesky_solve(&bu);
        let xrd_sinv: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| x[k].matmul(&rd[k]).matmul(&s_inv[k]))
            .collect();
        let v_rd = p.apply_a(&xrd_sinv);
        let h = block_dot(&p.c, &xrd_sinv);

        let lin = Linearisation {
            p,
            x: &x,
            s_inv,
            m_chol,
            q,
            u,
            g,
            rp,
            rd,
            rg,
            v_rd,
            h,
            tau,
            kappa,
        };

        let step_to_boundary = |d: &Direction| -> f64 {
            block_max_step(&x_chol, &d.dx)
                .min(block_max_step(&s_chol, &d.ds))
                .min(scalar_step(tau, d.dtau))
                .min(scalar_step(kappa, d.dkappa))
        };

        // Predictor.
        let rc_aff: Vec<RealMatrix> = x.iter().map(|b| b.scale(-1.0)).collect();
        let aff = lin.solve(&rc_aff, -tau * kappa, 1.0);
        let alpha_aff = step_to_boundary(&aff).min(1.0);
        let mut mu_aff = (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa);
        for k in 0..p.sizes.len() {
            let mut xa = x[k].clone();
            xa.axpy(alpha_aff, &aff.dx[k]);
            let mut sa = s[k].clone();
            sa.axpy(alpha_aff, &aff.ds[k]);
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= n_order + 1.0;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Vec<RealMatrix> = (0..p.sizes.len())
            .map(|k| {
                let mut r = lin.s_inv[k].scale(sigma * mu);
                r.axpy(-1.0, &x[k]);
                let corr = aff.dx[k].matmul(&aff.ds[k]).matmul(&lin.s_inv[k]);
                r.axpy(-1.0, &corr);
                r.symmetrized()
            })
            .collect();
        let rhs_tk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let dir = lin.solve(&rc, rhs_tk, 1.0 - sigma);
        let alpha = (opts.step_fraction * step_to_boundary(&dir)).min(1.0);

        if !alpha.is_finite() || alpha < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                return or_polished(polished, finish(SdpStatus::NumericalFailure, &x, &y, &s, tau, it));
            }
        }

        for k in 0..p.sizes.len() {
            x[k].axpy(alpha, &dir.dx[k]);
            s[k].axpy(alpha, &dir.ds[k]);
            x[k] = x[k].symmetrized();
            s[k] = s[k].symmetrized();
        }
        for (yk, dk) in y.iter_mut().zip(&dir.dy) {
            *yk += alpha * dk;
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;

        if !(tau > 0.0 && kappa > 0.0) || !tau.is_finite() || !kappa.is_finite() {
            return or_polished(
                polished,
                finish(
                    SdpStatus::NumericalFailure,
                    &x,
                    &y,
                    &s,
                    tau.max(f64::MIN_POSITIVE),
                    it + 1,
                ),
            );
        }

        // Keep τ, κ and the matrix iterates O(1) in the homogeneous scaling.
        let scale = tau.max(kappa).max(1.0);
        if scale > 1e8 {
            let inv = 1.0 / scale;
            for k in 0..p.sizes.len() {
                x[k].scale_in_place(inv);
                s[k].scale_in_place(inv);
            }
            y.iter_mut().for_each(|v| *v *= inv);
            tau *= inv;
            kappa *= inv;
        }
    }
    or_polished(
        polished,
        finish(SdpStatus::MaxIterations, &x, &y, &s, tau, opts.max_iterations),
    )
}

fn or_polished(polished: Option<(RealSolution, f64)>, fallback: RealSolution) -> RealSolution {
    polished.map_or(fallback, |(sol, _)| sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SdpOptions {
        SdpOptions::default()
    }

    #[test]
    fn scalar_lp() {
        // min x s.t. x = 1, x ≥ 0
        let p = RealSdp {
            sizes: vec![1],
            c: vec![RealMatrix::identity(1)],
            a: vec![vec![(0, RealMatrix::identity(1))]],
            b: vec![1.0],
        };
        let sol = solve_real(&p, &opts());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0][(0, 0)] - 1.0).abs() < 1e-7);
        assert!((sol.y[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn min_eigenvalue() {
        // min <H, X> s.t. Tr X = 1
        let h = RealMatrix::from_vec(2, 2, vec![2.0, 1.0, 1.0, 3.0]);
        let p = RealSdp {
            sizes: vec![2],
            c: vec![h],
            a: vec![vec![(0, RealMatrix::identity(2))]],
            b: vec![1.0],
        };
        let sol = solve_real(&p, &opts());
        assert_eq!(sol.status, SdpStatus::Optimal);
        let lam_min = 2.5 - 1.25f64.sqrt();
        assert!((sol.y[0] - lam_min).abs() < 1e-7, "{}", sol.y[0]);
    }

    #[test]
    fn detects_negative_trace_infeasibility() {
        let p = RealSdp {
            sizes: vec![2],
            c: vec![RealMatrix::zeros(2, 2)],
            a: vec![vec![(0, RealMatrix::identity(2))]],
            b: vec![-1.0],
        };
        let sol = solve_real(&p, &opts());
        assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
        let ray = sol.ray_y.unwrap();
        assert!(-ray[0] > 0.0);
    }

    #[test]
    fn detects_unbounded_primal() {
        // min -x11 s.t. x22 = 1: x11 unbounded.
        let mut c = RealMatrix::zeros(2, 2);
        c[(0, 0)] = -1.0;
        let mut a = RealMatrix::zeros(2, 2);
        a[(1, 1)] = 1.0;
        let p = RealSdp {
            sizes: vec![2],
            c: vec![c],
            a: vec![vec![(0, a)]],
            b: vec![1.0],
        };
        let sol = solve_real(&p, &opts());
        assert_eq!(sol.status, SdpStatus::DualInfeasible);
    }
}
