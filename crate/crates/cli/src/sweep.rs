//! Figure-data sweeps over the state families, written as CSV.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use nlq_core::extension::{QuantifyOptions, SettingsCount};
use nlq_core::metrics::{
    cglmp_optimize, chsh_max, chsh_violation_fraction, eof, von_neumann_entropy, CHSH_NORMALIZATION,
};
use nlq_core::states::{DensityMatrix, Party, StateFamily};
use rayon::prelude::*;

use crate::cache::{quantify_cached, ResultsCache};
use crate::format::csv_number;
use crate::report::entropy_normalization;
use crate::{CliError, CliResult};

pub const DEFAULT_POINTS: usize = 61;

/// Fraction of optimal rows below which a sweep exits with a solver failure.
pub const MIN_OPTIMAL_FRACTION: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    PureTheta,
    Mems,
    Ghz3,
}

impl FromStr for FamilyKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "pure-theta" => Ok(FamilyKind::PureTheta),
            "mems" => Ok(FamilyKind::Mems),
            "ghz3" => Ok(FamilyKind::Ghz3),
            _ => Err(CliError::Input(format!(
                "unknown family {s:?}: expected pure-theta, mems or ghz3"
            ))),
        }
    }
}

impl FamilyKind {
    fn domain(&self) -> (f64, f64) {
        match self {
            FamilyKind::PureTheta | FamilyKind::Ghz3 => (0.0, FRAC_PI_2),
            FamilyKind::Mems => (0.0, 1.0),
        }
    }
}

/// A one-parameter sweep; ghz3 sweeps β at fixed ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomGrid {
    pub family: FamilyKind,
    pub start: f64,
    pub end: f64,
    pub xi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Fig2a,
    Fig2b,
    Fig3,
    Custom(CustomGrid),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig2a => "fig2a",
            Experiment::Fig2b => "fig2b",
            Experiment::Fig3 => "fig3",
            Experiment::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub points: usize,
    pub settings: SettingsCount,
    pub options: QuantifyOptions,
    /// Worker count; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Write max(0, (CHSH−2)/(2√2−2)) instead of CHSH/(2√2).
    pub chsh_violation: bool,
}

impl SweepSpec {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            points: DEFAULT_POINTS,
            settings: SettingsCount { ma: 2, mb: 2 },
            options: QuantifyOptions::default(),
            threads: None,
            chsh_violation: false,
        }
    }
}

/// One CSV file of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Per-row solver status, kept alongside the text for summaries.
    pub statuses: Vec<String>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of a numeric column, NaN where unparseable.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].parse().unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub tables: Vec<SweepTable>,
    pub rows: usize,
    pub optimal_rows: usize,
}

impl SweepReport {
    pub fn optimal_fraction(&self) -> f64 {
        if self.rows == 0 {
            1.0
        } else {
            self.optimal_rows as f64 / self.rows as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.optimal_fraction() >= MIN_OPTIMAL_FRACTION
    }

    /// Writes every table into `dir`, returning the file paths.
    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(&t.file_name);
                std::fs::write(&path, t.to_csv()).map_err(|e| CliError::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// One grid point: the leading parameter columns and the state.
struct Point {
    params: Vec<f64>,
    family: StateFamily,
}

#[derive(Clone, Copy)]
enum MetricSet {
    Qubit,
    Qutrit,
}

fn nan_cell(x: Option<f64>) -> String {
    x.map(csv_number).unwrap_or_else(|| "nan".to_string())
}

fn qubit_metrics(rho: &DensityMatrix, violation: bool) -> [Option<f64>; 2] {
    let chsh = chsh_max(rho).ok().map(|c| {
        if violation {
            chsh_violation_fraction(c)
        } else {
            c / CHSH_NORMALIZATION
        }
    });
    [chsh, eof(rho).ok()]
}

fn qutrit_metrics(rho: &DensityMatrix) -> [Option<f64>; 2] {
    let cglmp = cglmp_optimize(rho).ok().map(|o| o.normalized());
    let entropy = von_neumann_entropy(rho, Party::A) / entropy_normalization();
    [cglmp, Some(entropy)]
}

fn run_points(
    spec: &SweepSpec,
    points: &[Point],
    metrics: MetricSet,
    cache: Option<&Mutex<ResultsCache>>,
) -> Vec<(Vec<String>, String)> {
    points
        .par_iter()
        .map(|p| {
            let mut row: Vec<String> = p.params.iter().map(|&x| csv_number(x)).collect();
            let rho = match p.family.build() {
                Ok(r) => r,
                Err(e) => {
                    row.extend(["nan", "nan", "nan", "error"].map(String::from));
                    eprintln!("warning: {e}");
                    return (row, "error".to_string());
                }
            };
            let (lambda, status) = match quantify_cached(&rho, spec.settings, &spec.options, cache) {
                Ok((s, _)) => (Some(s.lambda_star), s.status.as_str().to_string()),
                Err(e) => {
                    eprintln!("warning: {e}");
                    (None, "error".to_string())
                }
            };
            let m = match metrics {
                MetricSet::Qubit => qubit_metrics(&rho, spec.chsh_violation),
                MetricSet::Qutrit => qutrit_metrics(&rho),
            };
            row.push(nan_cell(lambda));
            row.extend(m.iter().map(|&x| nan_cell(x)));
            row.push(status.clone());
            (row, status)
        })
        .collect()
}

fn table(
    spec: &SweepSpec,
    file_name: String,
    param_names: &[&str],
    metric_names: [&str; 2],
    metrics: MetricSet,
    points: Vec<Point>,
    cache: Option<&Mutex<ResultsCache>>,
) -> SweepTable {
    let mut header: Vec<String> = param_names.iter().map(|s| s.to_string()).collect();
    header.push(format!("n{}{}", spec.settings.ma, spec.settings.mb));
    header.extend(metric_names.iter().map(|s| s.to_string()));
    header.push("status".to_string());
    let (rows, statuses) = run_points(spec, &points, metrics, cache).into_iter().unzip();
    SweepTable {
        file_name,
        header,
        rows,
        statuses,
    }
}

fn ghz_points(xi: f64, betas: &[f64]) -> Vec<Point> {
    betas
        .iter()
        .map(|&beta| Point {
            params: vec![xi, beta],
            family: StateFamily::Ghz3 { xi, beta },
        })
        .collect()
}

fn chsh_column(spec: &SweepSpec) -> &'static str {
    if spec.chsh_violation {
        "chsh_violation"
    } else {
        "chsh_norm"
    }
}

/// Runs the sweep on a worker pool. Rows keep grid order.
pub fn run_sweep(spec: &SweepSpec, cache: Option<&Mutex<ResultsCache>>) -> CliResult<SweepReport> {
    if spec.points < 2 {
        return Err(CliError::Input(format!(
            "--points must be at least 2, got {}",
            spec.points
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    let n = spec.points;
    let chsh = chsh_column(spec);
    let tables = pool.install(|| -> CliResult<Vec<SweepTable>> {
        Ok(match &spec.experiment {
            Experiment::Fig2a => {
                let pts = linspace(0.0, FRAC_PI_2, n)
                    .into_iter()
                    .map(|theta| Point {
                        params: vec![theta],
                        family: StateFamily::PureTheta { theta },
                    })
                    .collect();
                vec![table(
                    spec,
                    "fig2a.csv".into(),
                    &["theta"],
                    [chsh, "eof"],
                    MetricSet::Qubit,
                    pts,
                    cache,
                )]
            }
            Experiment::Fig2b => {
                let pts = linspace(0.0, 1.0, n)
                    .into_iter()
                    .map(|gamma| Point {
                        params: vec![gamma],
                        family: StateFamily::Mems { gamma },
                    })
                    .collect();
                vec![table(
                    spec,
                    "fig2b.csv".into(),
                    &["gamma"],
                    [chsh, "eof"],
                    MetricSet::Qubit,
                    pts,
                    cache,
                )]
            }
            Experiment::Fig3 => {
                let betas = linspace(0.0, FRAC_PI_2, n);
                [(FRAC_PI_6, "pi6"), (FRAC_PI_3, "pi3"), (FRAC_PI_2, "pi2")]
                    .into_iter()
                    .map(|(xi, tag)| {
                        table(
                            spec,
                            format!("fig3_xi_{tag}.csv"),
                            &["xi", "beta"],
                            ["cglmp_norm", "entropy_norm"],
                            MetricSet::Qutrit,
                            ghz_points(xi, &betas),
                            cache,
                        )
                    })
                    .collect()
            }
            Experiment::Custom(g) => vec![custom_table(spec, g, cache)?],
        })
    })?;
    let rows = tables.iter().map(|t| t.rows.len()).sum();
    let optimal_rows = tables
        .iter()
        .flat_map(|t| &t.statuses)
        .filter(|s| s.as_str() == "optimal")
        .count();
    Ok(SweepReport {
        tables,
        rows,
        optimal_rows,
    })
}

fn custom_table(spec: &SweepSpec, g: &CustomGrid, cache: Option<&Mutex<ResultsCache>>) -> CliResult<SweepTable> {
    let (lo, hi) = g.family.domain();
    for (name, v) in [("start", g.start), ("end", g.end)] {
        if !(lo..=hi).contains(&v) {
            return Err(CliError::Input(format!(
                "--{name} {v} outside the family domain [{lo}, {hi}]"
            )));
        }
    }
    let grid = linspace(g.start, g.end, spec.points);
    let chsh = chsh_column(spec);
    Ok(match g.family {
        FamilyKind::PureTheta => {
            let pts = grid
                .into_iter()
                .map(|theta| Point {
                    params: vec![theta],
                    family: StateFamily::PureTheta { theta },
                })
                .collect();
            table(
                spec,
                "custom.csv".into(),
                &["theta"],
                [chsh, "eof"],
                MetricSet::Qubit,
                pts,
                cache,
            )
        }
        FamilyKind::Mems => {
            let pts = grid
                .into_iter()
                .map(|gamma| Point {
                    params: vec![gamma],
                    family: StateFamily::Mems { gamma },
                })
                .collect();
            table(
                spec,
                "custom.csv".into(),
                &["gamma"],
                [chsh, "eof"],
                MetricSet::Qubit,
                pts,
                cache,
            )
        }
        FamilyKind::Ghz3 => {
            let xi =
                g.xi.ok_or_else(|| CliError::Input("the ghz3 family needs --xi".to_string()))?;
            if !(0.0..=FRAC_PI_2).contains(&xi) {
                return Err(CliError::Input(format!("--xi {xi} outside [0, π/2]")));
            }
            table(
                spec,
                "custom.csv".into(),
                &["xi", "beta"],
                ["cglmp_norm", "entropy_norm"],
                MetricSet::Qutrit,
                ghz_points(xi, &grid),
                cache,
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(0.0, FRAC_PI_2, 61);
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[60], FRAC_PI_2);
        assert!((g[30] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn small_fig2a_sweep() {
        let mut spec = SweepSpec::new(Experiment::Fig2a);
        spec.points = 3;
        spec.threads = Some(2);
        let r = run_sweep(&spec, None).unwrap();
        let t = &r.tables[0];
        assert_eq!(t.header, ["theta", "n22", "chsh_norm", "eof", "status"]);
        let n = t.column("n22").unwrap();
        assert!(n[0].abs() < 1e-6 && (n[1] - 1.0 / 3.0).abs() < 1e-3 && n[2].abs() < 1e-6);
        assert!(r.passed());
        assert!(t.to_csv().ends_with("optimal\n"));
    }

    #[test]
    fn custom_rejects_out_of_domain() {
        let mut spec = SweepSpec::new(Experiment::Custom(CustomGrid {
            family: FamilyKind::Mems,
            start: 0.0,
            end: 1.5,
            xi: None,
        }));
        spec.points = 2;
        assert!(run_sweep(&spec, None).is_err());
        spec.points = 1;
        assert!(run_sweep(&spec, None).is_err());
    }
}
