//! Symmetric extensions and the nonlocality quantifier.
//!
//! A state ρ on C^{d_A} ⊗ C^{d_B} has an (M_a, M_b) symmetric extension if
//! some Z ⪰ 0 on A_1…A_{M_a} B_1…B_{M_b} is invariant under permutations of
//! the A copies and of the B copies and reduces to ρ on A_1 B_1. Such a Z
//! yields a local-hidden-variable model for M_a and M_b settings, so
//!
//! ```text
//!   N(ρ) = min { λ : λ I/d + (1−λ) ρ has an (M_a, M_b) extension }
//! ```
//!
//! is an extension-certified nonlocality. Invariant Z are searched as
//! (V_A⊗V_B) Z̃ (V_A⊗V_B)† with V the isometry onto the symmetric subspace,
//! and the marginal condition is imposed through Gell-Mann coordinates:
//! Tr[F_i Z̃] = Tr[λ_i ρ] with F_i = V†(λ_i ⊗ I)V.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::{
    eig_hermitian, gell_mann_basis, gell_mann_single, kron, partial_trace, partial_transpose, ComplexMatrix,
};
use crate::sdpsolve::{
    feasibility_oracle, solve, BlockMatrix, Certificate, Constraint, OracleOptions, OracleVerdict, Residuals,
    SdpOptions, SdpProblem, SdpSolution, SdpStatus,
};
use crate::states::{mix_white_noise, DensityMatrix};

/// Numbers of measurement settings (M_a, M_b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingsCount {
    pub ma: usize,
    pub mb: usize,
}

/// Largest copy count accepted for a local dimension.
pub fn settings_cap(local_dim: usize) -> usize {
    if local_dim <= 2 {
        4
    } else {
        2
    }
}

impl SettingsCount {
    pub fn new(ma: usize, mb: usize) -> Result<Self> {
        if ma == 0 || mb == 0 {
            return invalid(format!("settings must be at least 1, got ({ma},{mb})"));
        }
        Ok(Self { ma, mb })
    }

    /// Rejects copy counts whose extension space is too large to solve.
    pub fn check_size(&self, dims: (usize, usize)) -> Result<()> {
        let (ca, cb) = (settings_cap(dims.0), settings_cap(dims.1));
        if self.ma > ca || self.mb > cb {
            return Err(Error::ResourceLimit(format!(
                "settings ({},{}) exceed the cap ({ca},{cb}) for local dimensions ({},{})",
                self.ma, self.mb, dims.0, dims.1
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SettingsCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.ma, self.mb)
    }
}

impl FromStr for SettingsCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad settings {s:?}: expected MA,MB")))
        };
        match parts.as_slice() {
            [a, b] => Self::new(parse(a)?, parse(b)?),
            _ => invalid(format!("bad settings {s:?}: expected MA,MB")),
        }
    }
}

/// Which relaxation of the extension is searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionMode {
    /// Z ⪰ 0.
    #[default]
    Positive,
    /// Z̃ = P + Q^Γ with P, Q ⪰ 0 and Γ the partial transpose across the A|B
    /// cut of the compressed space. Contains the positive set, so λ* can only
    /// decrease.
    PptQuasi,
}

impl ExtensionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtensionMode::Positive => "positive",
            ExtensionMode::PptQuasi => "ppt-quasi",
        }
    }
}

impl fmt::Display for ExtensionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtensionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(ExtensionMode::Positive),
            "ppt-quasi" => Ok(ExtensionMode::PptQuasi),
            _ => invalid(format!("unknown mode {s:?}: expected positive or ppt-quasi")),
        }
    }
}

/// Upper bound 1 − 1/√((d²−1)(d−1)) on the nonlocality of any d-dimensional
/// bipartite state.
pub fn nonlocality_upper_bound(d: usize) -> f64 {
    let d = d as f64;
    1.0 - 1.0 / ((d * d - 1.0) * (d - 1.0)).sqrt()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Moves subsystem s to slot perm[s] by reindexing: returns P m P†.
fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let n = m.rows();
    let mut src = vec![0usize; dims.len()];
    let mut dst = vec![0usize; dims.len()];
    let map: Vec<usize> = (0..n)
        .map(|mut i| {
            for s in (0..dims.len()).rev() {
                src[s] = i % dims[s];
                i /= dims[s];
            }
            for s in 0..dims.len() {
                dst[perm[s]] = src[s];
            }
            dst.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// Average of Λ m Λ† over all permutations Λ of `copies` subsystems.
pub fn symmetrizer_twirl(m: &ComplexMatrix, copies: usize, local_dim: usize) -> Result<ComplexMatrix> {
    if copies == 0 || local_dim == 0 {
        return invalid("copies and local dimension must be positive");
    }
    let n = (local_dim as u32)
        .checked_pow(copies as u32)
        .map(|n| n as usize)
        .ok_or_else(|| Error::ResourceLimit("twirl dimension overflows".into()))?;
    if !m.is_square() || m.rows() != n {
        return invalid(format!(
            "twirl of {}x{} matrix over {copies} copies of dimension {local_dim}",
            m.rows(),
            m.cols()
        ));
    }
    if copies > 8 {
        return Err(Error::ResourceLimit(format!("{copies} copies is too many to twirl")));
    }
    let dims = vec![local_dim; copies];
    let perms = permutations(copies);
    let mut acc = ComplexMatrix::zeros(n, n);
    for p in &perms {
        acc = &acc + &permute_subsystems(m, &dims, p);
    }
    Ok(acc.scale(1.0 / perms.len() as f64))
}

/// C(n, k).
fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension C(d+M−1, M) of the symmetric subspace of (C^d)^{⊗M}.
pub fn symmetric_dimension(local_dim: usize, copies: usize) -> usize {
    binomial(local_dim + copies - 1, copies)
}

/// Isometry onto Sym^M(C^d).
///
/// Column c is the normalised uniform superposition of the computational
/// basis states whose digits form the c-th multiset, multisets taken in
/// lexicographic order of their sorted digits.
pub fn symmetric_isometry(local_dim: usize, copies: usize) -> ComplexMatrix {
    let n = local_dim.pow(copies as u32);
    let keys: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut digits = vec![0usize; copies];
            let mut r = i;
            for s in (0..copies).rev() {
                digits[s] = r % local_dim;
                r /= local_dim;
            }
            digits.sort_unstable();
            digits
        })
        .collect();
    let multisets: Vec<&Vec<usize>> = keys.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let column_of: Vec<usize> = keys
        .iter()
        .map(|k| multisets.binary_search(&k).expect("multiset recorded"))
        .collect();
    let mut counts = vec![0usize; multisets.len()];
    for &c in &column_of {
        counts[c] += 1;
    }
    let mut v = ComplexMatrix::zeros(n, multisets.len());
    for (i, &c) in column_of.iter().enumerate() {
        v[(i, c)] = Complex64::new(1.0 / (counts[c] as f64).sqrt(), 0.0);
    }
    v
}

/// V†(m ⊗ I)V with m acting on the first copy.
fn compress_local(v: &ComplexMatrix, m: &ComplexMatrix, copies: usize) -> ComplexMatrix {
    let rest = m.rows().pow(copies as u32 - 1);
    let full = kron(m, &ComplexMatrix::identity(rest));
    &(&v.adjoint() * &full) * v
}

/// The assembled extension program for one state.
#[derive(Clone, Debug)]
pub struct ExtensionProblem {
    pub settings: SettingsCount,
    pub dims: (usize, usize),
    pub mode: ExtensionMode,
    pub iso_a: ComplexMatrix,
    pub iso_b: ComplexMatrix,
    /// Compressed F_i for every basis element λ_i, i = 0 (identity) first.
    pub constraint_matrices: Vec<ComplexMatrix>,
    /// Tr[λ_i ρ].
    pub rhs: Vec<f64>,
    /// Tr[λ_i (ρ − I/d)], the coefficients of λ in the parametric program.
    pub noise_coefficients: Vec<f64>,
    pub parametric: bool,
    /// Upper limit imposed on λ in the parametric program.
    pub lambda_cap: f64,
    pub sdp: SdpProblem,
}

impl ExtensionProblem {
    /// Uncompressed extension dimension d_A^{M_a} d_B^{M_b}.
    pub fn mu(&self) -> usize {
        self.dims.0.pow(self.settings.ma as u32) * self.dims.1.pow(self.settings.mb as u32)
    }

    /// Number of non-trivial marginal constraints, (d_A d_B)² − 1.
    pub fn nu(&self) -> usize {
        self.constraint_matrices.len() - 1
    }

    /// Side of the compressed extension block.
    pub fn compressed_dim(&self) -> usize {
        self.iso_a.cols() * self.iso_b.cols()
    }

    fn compressed_dims(&self) -> [usize; 2] {
        [self.iso_a.cols(), self.iso_b.cols()]
    }

    /// Subsystem dimensions of the uncompressed space, A copies first.
    pub fn subsystem_dims(&self) -> Vec<usize> {
        let mut d = vec![self.dims.0; self.settings.ma];
        d.extend(std::iter::repeat_n(self.dims.1, self.settings.mb));
        d
    }

    /// Compressed variable Z̃ from a solution (P + Q^Γ in quasi mode).
    pub fn compressed_witness(&self, x: &BlockMatrix) -> ComplexMatrix {
        match self.mode {
            ExtensionMode::Positive => x.block(0).clone(),
            ExtensionMode::PptQuasi => {
                let q = partial_transpose(x.block(1), &self.compressed_dims(), &[1]).expect("conforming block");
                x.block(0) + &q
            }
        }
    }

    /// Z = (V_A⊗V_B) Z̃ (V_A⊗V_B)†.
    pub fn lift(&self, z_tilde: &ComplexMatrix) -> ComplexMatrix {
        let w = kron(&self.iso_a, &self.iso_b);
        &(&w * z_tilde) * &w.adjoint()
    }

    /// λ from a parametric solution.
    pub fn lambda_of(&self, x: &BlockMatrix) -> f64 {
        let k = match self.mode {
            ExtensionMode::Positive => 1,
            ExtensionMode::PptQuasi => 2,
        };
        x.block(k)[(0, 0)].re
    }
}

/// Builds the extension SDP of ρ.
///
/// Without `parametric_lambda` the program is the feasibility problem for ρ
/// itself. With it the variables are (Z̃, λ, slack) and the program
/// minimises λ subject to the marginal of Z equalling λ I/d + (1−λ) ρ and
/// λ + slack = cap, where cap is [`nonlocality_upper_bound`].
pub fn build_extension_sdp(
    rho: &DensityMatrix,
    settings: SettingsCount,
    mode: ExtensionMode,
    parametric_lambda: bool,
) -> Result<ExtensionProblem> {
    let dims = rho.dims();
    settings.check_size(dims)?;
    let (da, db) = dims;
    let d = da * db;
    let iso_a = symmetric_isometry(da, settings.ma);
    let iso_b = symmetric_isometry(db, settings.mb);
    let local_a: Vec<ComplexMatrix> = gell_mann_single(da)
        .iter()
        .map(|g| compress_local(&iso_a, g, settings.ma))
        .collect();
    let local_b: Vec<ComplexMatrix> = gell_mann_single(db)
        .iter()
        .map(|g| compress_local(&iso_b, g, settings.mb))
        .collect();

    // A real state admits a real compressed extension (conjugate any
    // extension and average), so the imaginary parts of F_i can be dropped.
    let real = rho.is_real();
    let restrict = |m: ComplexMatrix| if real { m.map(|z| Complex64::new(z.re, 0.0)) } else { m };

    let mut constraint_matrices = Vec::with_capacity(d * d);
    let mut transposed = Vec::new();
    for fa in &local_a {
        for fb in &local_b {
            constraint_matrices.push(restrict(kron(fa, fb)));
            if mode == ExtensionMode::PptQuasi {
                transposed.push(restrict(kron(fa, &fb.transpose())));
            }
        }
    }

    let basis = gell_mann_basis(da, db);
    let rhs = basis.coordinates(rho.matrix());
    let mut noise_coefficients = rhs.clone();
    noise_coefficients[0] = 0.0;
    let lambda_cap = nonlocality_upper_bound(d);

    let n = iso_a.cols() * iso_b.cols();
    let mut sizes = vec![n];
    if mode == ExtensionMode::PptQuasi {
        sizes.push(n);
    }
    let var_blocks = sizes.len();
    if parametric_lambda {
        sizes.extend([1, 1]);
    }
    let zero = |k: usize| ComplexMatrix::zeros(sizes[k], sizes[k]);
    let scalar = |v: f64| ComplexMatrix::diag(&[v]);

    let mut constraints = Vec::with_capacity(d * d + 1);
    for (i, f) in constraint_matrices.iter().enumerate() {
        let mut blocks = vec![f.clone()];
        if mode == ExtensionMode::PptQuasi {
            blocks.push(transposed[i].clone());
        }
        if parametric_lambda {
            blocks.push(scalar(noise_coefficients[i]));
            blocks.push(zero(var_blocks + 1));
        }
        constraints.push(Constraint {
            a: BlockMatrix::from_blocks(blocks),
            b: rhs[i],
        });
    }
    let objective = if parametric_lambda {
        let mut blocks: Vec<ComplexMatrix> = (0..var_blocks).map(zero).collect();
        blocks.push(scalar(1.0));
        blocks.push(scalar(0.0));
        let mut cap_row: Vec<ComplexMatrix> = (0..var_blocks).map(zero).collect();
        cap_row.push(scalar(1.0));
        cap_row.push(scalar(1.0));
        constraints.push(Constraint {
            a: BlockMatrix::from_blocks(cap_row),
            b: lambda_cap,
        });
        BlockMatrix::from_blocks(blocks)
    } else {
        BlockMatrix::zeros(&sizes)
    };
    let sdp = SdpProblem::new(sizes, objective, constraints)?;

    Ok(ExtensionProblem {
        settings,
        dims,
        mode,
        iso_a,
        iso_b,
        constraint_matrices,
        rhs,
        noise_coefficients,
        parametric: parametric_lambda,
        lambda_cap,
        sdp,
    })
}

/// Diagnostics of a lifted witness Z against a target marginal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// Smallest eigenvalue of Z (0 is included when Z is rank-deficient by
    /// construction).
    pub min_eigenvalue: f64,
    /// Largest entry of Λ Z Λ† − Z over adjacent copy swaps.
    pub symmetry_defect: f64,
    /// Largest entry of Tr_rest Z − target.
    pub marginal_defect: f64,
}

/// Checks positivity, copy-permutation invariance and the A_1 B_1 marginal.
pub fn check_witness(problem: &ExtensionProblem, z_tilde: &ComplexMatrix, target: &ComplexMatrix) -> WitnessCheck {
    let z = problem.lift(z_tilde);
    let dims = problem.subsystem_dims();
    let (ma, mb) = (problem.settings.ma, problem.settings.mb);

    let lo = eig_hermitian(&z_tilde.hermitian_part())
        .map(|e| e.values[0])
        .unwrap_or(f64::NAN);
    let min_eigenvalue = if problem.mu() > problem.compressed_dim() {
        lo.min(0.0)
    } else {
        lo
    };

    let mut symmetry_defect: f64 = 0.0;
    let swaps = (0..ma.saturating_sub(1)).chain((ma..ma + mb).take(mb.saturating_sub(1)));
    for s in swaps {
        let mut perm: Vec<usize> = (0..dims.len()).collect();
        perm.swap(s, s + 1);
        symmetry_defect = symmetry_defect.max(permute_subsystems(&z, &dims, &perm).max_abs_diff(&z));
    }

    let marginal = partial_trace(&z, &dims, &[0, ma]).expect("valid subsystem layout");
    WitnessCheck {
        min_eigenvalue,
        symmetry_defect,
        marginal_defect: marginal.max_abs_diff(target),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionVerdict {
    Extendible,
    NotExtendible,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct ExtensionDecision {
    pub verdict: ExtensionVerdict,
    pub status: SdpStatus,
    /// Lifted extension Z when extendible.
    pub witness: Option<ComplexMatrix>,
    pub check: Option<WitnessCheck>,
    /// Farkas ray from the solver when not extendible.
    pub certificate: Option<Certificate>,
}

/// Decides whether ρ has an (M_a, M_b) extension in the given mode.
pub fn has_symmetric_extension(
    rho: &DensityMatrix,
    settings: SettingsCount,
    mode: ExtensionMode,
    opts: &SdpOptions,
) -> Result<ExtensionDecision> {
    let problem = build_extension_sdp(rho, settings, mode, false)?;
    let sol = solve(&problem.sdp, opts)?;
    Ok(match sol.status {
        SdpStatus::Optimal => {
            let zt = problem.compressed_witness(&sol.x);
            let check = check_witness(&problem, &zt, rho.matrix());
            ExtensionDecision {
                verdict: ExtensionVerdict::Extendible,
                status: sol.status,
                witness: Some(problem.lift(&zt)),
                check: Some(check),
                certificate: None,
            }
        }
        SdpStatus::PrimalInfeasible => ExtensionDecision {
            verdict: ExtensionVerdict::NotExtendible,
            status: sol.status,
            witness: None,
            check: None,
            certificate: sol.certificate,
        },
        status => ExtensionDecision {
            verdict: ExtensionVerdict::Indeterminate,
            status,
            witness: None,
            check: None,
            certificate: None,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantifyOptions {
    pub mode: ExtensionMode,
    pub solver: SdpOptions,
    /// Bisect on λ with the alternating-projection oracle instead of solving
    /// the parametric program.
    pub bisect: bool,
    /// Bracket width at which bisection stops.
    pub bisection_tol: f64,
    pub oracle: OracleOptions,
}

impl Default for QuantifyOptions {
    fn default() -> Self {
        Self {
            mode: ExtensionMode::Positive,
            solver: SdpOptions::default(),
            bisect: false,
            bisection_tol: 1e-4,
            oracle: OracleOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantifyMethod {
    /// ρ itself is extendible, so λ* = 0 without the parametric program.
    ZeroFeasible,
    ParametricSdp,
    Bisection,
}

#[derive(Clone, Debug)]
pub struct QuantifyResult {
    pub lambda_star: f64,
    pub settings: SettingsCount,
    pub mode: ExtensionMode,
    pub method: QuantifyMethod,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Final bisection bracket (infeasible end, feasible end).
    pub bracket: Option<(f64, f64)>,
    /// Compressed witness Z̃ at λ*; lift with [`ExtensionProblem::lift`].
    pub witness: Option<ComplexMatrix>,
    pub check: Option<WitnessCheck>,
    pub mu: usize,
    pub nu: usize,
    pub compressed_dim: usize,
}

fn witness_parts(
    problem: &ExtensionProblem,
    sol: &SdpSolution,
    target: &ComplexMatrix,
) -> (ComplexMatrix, WitnessCheck) {
    let zt = problem.compressed_witness(&sol.x);
    let check = check_witness(problem, &zt, target);
    (zt, check)
}

/// Computes λ* for ρ.
///
/// Solver trouble is reported through `status`; `lambda_star` is then the
/// best available estimate.
pub fn quantify(rho: &DensityMatrix, settings: SettingsCount, opts: &QuantifyOptions) -> Result<QuantifyResult> {
    if opts.bisect {
        return quantify_bisection(rho, settings, opts);
    }
    let feasibility = build_extension_sdp(rho, settings, opts.mode, false)?;
    let base = |method, status, residuals: Residuals, iterations| QuantifyResult {
        lambda_star: 0.0,
        settings,
        mode: opts.mode,
        method,
        status,
        residuals,
        iterations,
        bracket: None,
        witness: None,
        check: None,
        mu: feasibility.mu(),
        nu: feasibility.nu(),
        compressed_dim: feasibility.compressed_dim(),
    };

    let sol = solve(&feasibility.sdp, &opts.solver)?;
    if sol.status == SdpStatus::Optimal {
        let (zt, check) = witness_parts(&feasibility, &sol, rho.matrix());
        let mut out = base(QuantifyMethod::ZeroFeasible, sol.status, sol.residuals, sol.iterations);
        out.witness = Some(zt);
        out.check = Some(check);
        return Ok(out);
    }
    let spent = sol.iterations;

    let problem = build_extension_sdp(rho, settings, opts.mode, true)?;
    let sol = solve(&problem.sdp, &opts.solver)?;
    let mut out = base(
        QuantifyMethod::ParametricSdp,
        sol.status,
        sol.residuals,
        spent + sol.iterations,
    );
    let raw = problem.lambda_of(&sol.x);
    out.lambda_star = if raw.is_finite() {
        raw.clamp(0.0, 1.0)
    } else {
        problem.lambda_cap
    };
    if sol.status == SdpStatus::Optimal {
        let target = mix_white_noise(rho, raw.clamp(0.0, 1.0))?;
        let (zt, check) = witness_parts(&problem, &sol, target.matrix());
        out.witness = Some(zt);
        out.check = Some(check);
    }
    Ok(out)
}

/// λ* by bisection, each midpoint decided by the alternating-projection
/// oracle. Indeterminate oracle outcomes count as not extendible, so the
/// returned value is the feasible end of the bracket.
fn quantify_bisection(rho: &DensityMatrix, settings: SettingsCount, opts: &QuantifyOptions) -> Result<QuantifyResult> {
    let probe = |lambda: f64| -> Result<(ExtensionProblem, OracleVerdict, BlockMatrix, usize)> {
        let target = mix_white_noise(rho, lambda)?;
        let p = build_extension_sdp(&target, settings, opts.mode, false)?;
        let out = feasibility_oracle(&p.sdp, &opts.oracle);
        Ok((p, out.verdict, out.witness, out.iterations))
    };

    let (p0, v0, w0, it0) = probe(0.0)?;
    let mut iterations = it0;
    let mut result = QuantifyResult {
        lambda_star: 0.0,
        settings,
        mode: opts.mode,
        method: QuantifyMethod::Bisection,
        status: SdpStatus::Optimal,
        residuals: Residuals::default(),
        iterations,
        bracket: Some((0.0, 0.0)),
        witness: None,
        check: None,
        mu: p0.mu(),
        nu: p0.nu(),
        compressed_dim: p0.compressed_dim(),
    };
    let finish = |result: &mut QuantifyResult, p: &ExtensionProblem, w: &BlockMatrix, lambda: f64| -> Result<()> {
        let target = mix_white_noise(rho, lambda)?;
        let zt = p.compressed_witness(w);
        result.check = Some(check_witness(p, &zt, target.matrix()));
        result.witness = Some(zt);
        Ok(())
    };
    if v0 == OracleVerdict::Feasible {
        finish(&mut result, &p0, &w0, 0.0)?;
        return Ok(result);
    }

    let mut lo = 0.0;
    let mut hi = p0.lambda_cap;
    let (ph, vh, wh, ith) = probe(hi)?;
    iterations += ith;
    if vh != OracleVerdict::Feasible {
        result.status = SdpStatus::NumericalFailure;
        result.lambda_star = hi;
        result.bracket = Some((lo, hi));
        result.iterations = iterations;
        return Ok(result);
    }
    let mut best = (ph, wh);
    while hi - lo >= opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let (pm, vm, wm, itm) = probe(mid)?;
        iterations += itm;
        if vm == OracleVerdict::Feasible {
            hi = mid;
            best = (pm, wm);
        } else {
            lo = mid;
        }
    }
    result.lambda_star = hi;
    result.bracket = Some((lo, hi));
    result.iterations = iterations;
    finish(&mut result, &best.0, &best.1, hi)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell, maximally_entangled, white_noise};

    #[test]
    fn settings_parse_and_guard() {
        let s: SettingsCount = "2,3".parse().unwrap();
        assert_eq!((s.ma, s.mb), (2, 3));
        assert!("0,2".parse::<SettingsCount>().is_err());
        assert!("2".parse::<SettingsCount>().is_err());
        assert!(SettingsCount::new(4, 4).unwrap().check_size((2, 2)).is_ok());
        assert!(matches!(
            SettingsCount::new(5, 1).unwrap().check_size((2, 2)),
            Err(Error::ResourceLimit(_))
        ));
        assert!(matches!(
            SettingsCount::new(3, 2).unwrap().check_size((3, 3)),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn twirl_single_copy_is_identity_map() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(symmetrizer_twirl(&m, 1, 2).unwrap(), m);
    }

    #[test]
    fn twirl_of_01_projector() {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        let t = symmetrizer_twirl(&m, 2, 2).unwrap();
        let expect = ComplexMatrix::diag(&[0.0, 0.5, 0.5, 0.0]);
        assert!(t.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn twirl_rejects_wrong_size() {
        assert!(symmetrizer_twirl(&ComplexMatrix::identity(3), 2, 2).is_err());
    }

    #[test]
    fn isometry_shapes() {
        for (d, m, rows, cols) in [(2, 2, 4, 3), (3, 2, 9, 6), (2, 4, 16, 5), (2, 1, 2, 2)] {
            let v = symmetric_isometry(d, m);
            assert_eq!((v.rows(), v.cols()), (rows, cols));
            assert!((&v.adjoint() * &v).max_abs_diff(&ComplexMatrix::identity(cols)) < 1e-14);
        }
    }

    #[test]
    fn isometry_projector_is_permutation_average() {
        for (d, m) in [(2, 2), (3, 2), (2, 3)] {
            let v = symmetric_isometry(d, m);
            let proj = &v * &v.adjoint();
            let dims = vec![d; m];
            let perms = permutations(m);
            let n = d.pow(m as u32);
            let mut avg = ComplexMatrix::zeros(n, n);
            for p in &perms {
                avg = &avg + &crate::matcore::permutation_operator(&dims, p).unwrap();
            }
            assert!(proj.max_abs_diff(&avg.scale(1.0 / perms.len() as f64)) < 1e-12);
            assert!(symmetrizer_twirl(&proj, m, d).unwrap().max_abs_diff(&proj) < 1e-12);
        }
    }

    #[test]
    fn problem_sizes() {
        let p = build_extension_sdp(
            &bell(),
            SettingsCount::new(2, 2).unwrap(),
            ExtensionMode::Positive,
            false,
        )
        .unwrap();
        assert_eq!((p.nu(), p.mu(), p.compressed_dim()), (15, 16, 9));
        let q = build_extension_sdp(
            &maximally_entangled(3),
            SettingsCount::new(2, 2).unwrap(),
            ExtensionMode::Positive,
            false,
        )
        .unwrap();
        assert_eq!((q.nu(), q.mu(), q.compressed_dim()), (80, 81, 36));
    }

    #[test]
    fn one_copy_extension_is_the_state() {
        let rho = crate::states::mems(0.6).unwrap();
        let d = has_symmetric_extension(
            &rho,
            SettingsCount::new(1, 1).unwrap(),
            ExtensionMode::Positive,
            &SdpOptions::default(),
        )
        .unwrap();
        assert_eq!(d.verdict, ExtensionVerdict::Extendible);
        assert!(d.witness.unwrap().max_abs_diff(rho.matrix()) < 1e-7);
    }

    #[test]
    fn noise_extends_and_bell_does_not() {
        let s = SettingsCount::new(2, 2).unwrap();
        let opts = SdpOptions::default();
        let noise = has_symmetric_extension(&white_noise((2, 2)), s, ExtensionMode::Positive, &opts).unwrap();
        assert_eq!(noise.verdict, ExtensionVerdict::Extendible);
        let check = noise.check.unwrap();
        assert!(check.marginal_defect < 1e-7 && check.symmetry_defect < 1e-8 && check.min_eigenvalue > -1e-8);
        let b = has_symmetric_extension(&bell(), s, ExtensionMode::Positive, &opts).unwrap();
        assert_eq!(b.verdict, ExtensionVerdict::NotExtendible);
        assert!(b.certificate.is_some());
    }

    #[test]
    fn bell_value() {
        let r = quantify(&bell(), SettingsCount::new(2, 2).unwrap(), &QuantifyOptions::default()).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.lambda_star - 1.0 / 3.0).abs() < 1e-6, "{}", r.lambda_star);
        let c = r.check.unwrap();
        assert!(c.marginal_defect < 1e-7, "{c:?}");
        assert!(c.symmetry_defect < 1e-8);
        assert!(c.min_eigenvalue > -1e-8);
    }

    #[test]
    fn quasi_mode_is_not_larger() {
        let s = SettingsCount::new(2, 2).unwrap();
        let pos = quantify(&bell(), s, &QuantifyOptions::default()).unwrap();
        let quasi = quantify(
            &bell(),
            s,
            &QuantifyOptions {
                mode: ExtensionMode::PptQuasi,
                ..QuantifyOptions::default()
            },
        )
        .unwrap();
        assert_eq!(quasi.status, SdpStatus::Optimal);
        assert!(quasi.lambda_star <= pos.lambda_star + 1e-6);
    }

    #[test]
    fn upper_bound_values() {
        assert!((nonlocality_upper_bound(4) - 0.850_9).abs() < 1e-4);
        assert!((nonlocality_upper_bound(9) - (1.0 - 1.0 / 640f64.sqrt())).abs() < 1e-15);
        assert!((nonlocality_upper_bound(9) - 0.960_9).abs() < 5e-4);
    }
}
