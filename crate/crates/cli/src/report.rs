//! Quantification and metric reports in text and JSON.

use std::fmt::Write as _;

use nlq_core::extension::{nonlocality_upper_bound, ExtensionDecision, QuantifyMethod, QuantifyResult, WitnessCheck};
use nlq_core::metrics::{cglmp_optimize, chsh_max, concurrence, eof, von_neumann_entropy, CHSH_NORMALIZATION};
use nlq_core::sdpsolve::{Residuals, SdpStatus};
use nlq_core::states::{DensityMatrix, Party};
use serde::{Deserialize, Serialize};

use crate::format::significant;
use crate::CliResult;

/// Divisor of the reduced-state entropy in qutrit reports, 2 ln 3.
pub fn entropy_normalization() -> f64 {
    2.0 * 3f64.ln()
}

/// Everything printed by `quantify`; also the cached payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantifySummary {
    pub dims: [usize; 2],
    pub settings: String,
    pub mode: String,
    pub method: QuantifyMethod,
    pub lambda_star: f64,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    pub mu: usize,
    pub nu: usize,
    pub compressed_dim: usize,
    pub upper_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_check: Option<WitnessCheck>,
}

impl QuantifySummary {
    pub fn new(rho: &DensityMatrix, r: &QuantifyResult) -> Self {
        let (da, db) = rho.dims();
        Self {
            dims: [da, db],
            settings: r.settings.to_string(),
            mode: r.mode.to_string(),
            method: r.method,
            lambda_star: r.lambda_star,
            status: r.status,
            residuals: r.residuals,
            iterations: r.iterations,
            bracket: r.bracket.map(|(lo, hi)| [lo, hi]),
            mu: r.mu,
            nu: r.nu,
            compressed_dim: r.compressed_dim,
            upper_bound: nonlocality_upper_bound(da * db),
            witness_check: r.check,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda*        {}", significant(self.lambda_star, 10));
        let _ = writeln!(s, "settings       {}", self.settings);
        let _ = writeln!(s, "mode           {}", self.mode);
        let _ = writeln!(s, "method         {}", method_name(self.method));
        let _ = writeln!(s, "status         {}", self.status);
        let _ = writeln!(
            s,
            "residuals      primal {:.3e}  dual {:.3e}  gap {:.3e}",
            self.residuals.primal, self.residuals.dual, self.residuals.gap
        );
        let _ = writeln!(s, "iterations     {}", self.iterations);
        if let Some([lo, hi]) = self.bracket {
            let _ = writeln!(s, "bracket        [{}, {}]", significant(lo, 8), significant(hi, 8));
        }
        let _ = writeln!(
            s,
            "extension      local dims {}x{}, full dim {}, constraints {}, compressed {}",
            self.dims[0], self.dims[1], self.mu, self.nu, self.compressed_dim
        );
        let _ = writeln!(s, "upper bound    {}", significant(self.upper_bound, 10));
        if let Some(c) = &self.witness_check {
            let _ = writeln!(
                s,
                "witness        min eig {:.3e}  symmetry {:.3e}  marginal {:.3e}",
                c.min_eigenvalue, c.symmetry_defect, c.marginal_defect
            );
        }
        s
    }
}

fn method_name(m: QuantifyMethod) -> &'static str {
    match m {
        QuantifyMethod::ZeroFeasible => "zero-feasible",
        QuantifyMethod::ParametricSdp => "parametric-sdp",
        QuantifyMethod::Bisection => "bisection",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionSummary {
    pub settings: String,
    pub mode: String,
    pub verdict: nlq_core::extension::ExtensionVerdict,
    pub status: SdpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_check: Option<WitnessCheck>,
    pub has_certificate: bool,
}

impl ExtensionSummary {
    pub fn new(settings: &str, mode: &str, d: &ExtensionDecision) -> Self {
        Self {
            settings: settings.to_string(),
            mode: mode.to_string(),
            verdict: d.verdict,
            status: d.status,
            witness_check: d.check,
            has_certificate: d.certificate.is_some(),
        }
    }

    pub fn to_text(&self) -> String {
        let verdict = serde_json::to_value(self.verdict).expect("verdict serialises");
        let mut s = String::new();
        let _ = writeln!(s, "verdict        {}", verdict.as_str().unwrap_or("?"));
        let _ = writeln!(s, "settings       {}", self.settings);
        let _ = writeln!(s, "mode           {}", self.mode);
        let _ = writeln!(s, "status         {}", self.status);
        if let Some(c) = &self.witness_check {
            let _ = writeln!(
                s,
                "witness        min eig {:.3e}  symmetry {:.3e}  marginal {:.3e}",
                c.min_eigenvalue, c.symmetry_defect, c.marginal_defect
            );
        }
        if self.has_certificate {
            let _ = writeln!(s, "certificate    infeasibility ray found");
        }
        s
    }
}

/// Bell and entanglement metrics appropriate to the local dimensions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricsReport {
    Qubits {
        chsh: f64,
        chsh_normalized: f64,
        concurrence: f64,
        eof: f64,
    },
    Qutrits {
        cglmp: f64,
        cglmp_normalized: f64,
        phases: [f64; 4],
        entropy: f64,
        entropy_normalized: f64,
    },
    Other {
        entropy: f64,
    },
}

impl MetricsReport {
    pub fn compute(rho: &DensityMatrix) -> CliResult<Self> {
        Ok(match rho.dims() {
            (2, 2) => {
                let chsh = chsh_max(rho)?;
                MetricsReport::Qubits {
                    chsh,
                    chsh_normalized: chsh / CHSH_NORMALIZATION,
                    concurrence: concurrence(rho)?,
                    eof: eof(rho)?,
                }
            }
            (3, 3) => {
                let opt = cglmp_optimize(rho)?;
                let entropy = von_neumann_entropy(rho, Party::A);
                MetricsReport::Qutrits {
                    cglmp: opt.value,
                    cglmp_normalized: opt.normalized(),
                    phases: opt.phases,
                    entropy,
                    entropy_normalized: entropy / entropy_normalization(),
                }
            }
            _ => MetricsReport::Other {
                entropy: von_neumann_entropy(rho, Party::A),
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialise")
    }

    pub fn to_text(&self) -> String {
        let f = |x: f64| significant(x, 10);
        let mut s = String::new();
        match self {
            MetricsReport::Qubits {
                chsh,
                chsh_normalized,
                concurrence,
                eof,
            } => {
                let _ = writeln!(s, "chsh           {}", f(*chsh));
                let _ = writeln!(s, "chsh/2sqrt2    {}", f(*chsh_normalized));
                let _ = writeln!(s, "concurrence    {}", f(*concurrence));
                let _ = writeln!(s, "eof            {}", f(*eof));
            }
            MetricsReport::Qutrits {
                cglmp,
                cglmp_normalized,
                phases,
                entropy,
                entropy_normalized,
            } => {
                let _ = writeln!(s, "cglmp          {}", f(*cglmp));
                let _ = writeln!(s, "cglmp/4sqrt2   {}", f(*cglmp_normalized));
                let p: Vec<String> = phases.iter().map(|&x| significant(x, 6)).collect();
                let _ = writeln!(s, "phases         {}", p.join(" "));
                let _ = writeln!(s, "entropy (nats) {}", f(*entropy));
                let _ = writeln!(s, "entropy/2ln3   {}", f(*entropy_normalized));
            }
            MetricsReport::Other { entropy } => {
                let _ = writeln!(s, "entropy (nats) {}", f(*entropy));
            }
        }
        s
    }
}
