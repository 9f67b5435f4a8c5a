//! Constraint orthonormalisation.
//!
//! Modified Gram–Schmidt on the constraint matrices in the trace inner
//! product, with the same transform applied to b. Linearly dependent rows are
//! dropped when consistent; otherwise the dependency is a Farkas ray.

use crate::matcore::RealMatrix;

use super::engine::RealSdp;

const DEPENDENT_TOL: f64 = 1e-12;
const CONSISTENT_TOL: f64 = 1e-8;

pub(crate) struct Presolved {
    pub reduced: RealSdp,
    /// Row j of the reduced problem is Σ_i transform[j][i] · (row i).
    transform: Vec<Vec<f64>>,
    /// y with bᵀy = 1 and Σ y_i A_i = 0 when the rows are inconsistent.
    pub inconsistent: Option<Vec<f64>>,
    m: usize,
}

impl Presolved {
    /// Maps reduced multipliers back to the original rows.
    pub fn lift_dual(&self, y_hat: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (t, &yj) in self.transform.iter().zip(y_hat) {
            for (yi, ti) in y.iter_mut().zip(t) {
                *yi += yj * ti;
            }
        }
        y
    }
}

type Dense = Vec<Option<RealMatrix>>;

fn densify(p: &RealSdp, k: usize) -> Dense {
    let mut v: Dense = vec![None; p.sizes.len()];
    for (blk, m) in &p.a[k] {
        match &mut v[*blk] {
            Some(acc) => acc.axpy(1.0, m),
            slot => *slot = Some(m.clone()),
        }
    }
    v
}

fn dot(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x.dot(y),
            _ => 0.0,
        })
        .sum()
}

fn axpy(acc: &mut Dense, s: f64, v: &Dense) {
    for (a, b) in acc.iter_mut().zip(v) {
        if let Some(b) = b {
            match a {
                Some(a) => a.axpy(s, b),
                slot => *slot = Some(b.scale(s)),
            }
        }
    }
}

pub(crate) fn orthonormalize(p: &RealSdp) -> Presolved {
    let m = p.m();
    let b_scale = p.b.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut basis: Vec<Dense> = Vec::new();
    let mut b_hat: Vec<f64> = Vec::new();
    let mut transform: Vec<Vec<f64>> = Vec::new();

    for k in 0..m {
        let mut v = densify(p, k);
        let norm0 = dot(&v, &v).sqrt();
        let mut beta = p.b[k];
        let mut t = vec![0.0; m];
        t[k] = 1.0;
        // Two passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for j in 0..basis.len() {
                let r = dot(&basis[j], &v);
                if r == 0.0 {
                    continue;
                }
                axpy(&mut v, -r, &basis[j]);
                beta -= r * b_hat[j];
                for (ti, tj) in t.iter_mut().zip(&transform[j]) {
                    *ti -= r * tj;
                }
            }
        }
        let nu = dot(&v, &v).sqrt();
        if nu <= DEPENDENT_TOL * norm0.max(1.0) {
            if beta.abs() > CONSISTENT_TOL * b_scale {
                let ray = t.iter().map(|ti| ti / beta).collect();
                return Presolved {
                    reduced: p.clone(),
                    transform: Vec::new(),
                    inconsistent: Some(ray),
                    m,
                };
            }
            continue;
        }
        let inv = 1.0 / nu;
        for blk in v.iter_mut().flatten() {
            blk.scale_in_place(inv);
        }
        basis.push(v);
        b_hat.push(beta * inv);
        transform.push(t.into_iter().map(|ti| ti * inv).collect());
    }

    let a = basis
        .into_iter()
        .map(|v| {
            v.into_iter()
                .enumerate()
                .filter_map(|(blk, m)| m.filter(|m| !m.is_zero()).map(|m| (blk, m)))
                .collect()
        })
        .collect();
    Presolved {
        reduced: RealSdp {
            sizes: p.sizes.clone(),
            c: p.c.clone(),
            a,
            b: b_hat,
        },
        transform,
        inconsistent: None,
        m,
    }
}
