//! Experiment driver behind the command-line tool: JSON run configuration,
//! the five experiments, and CSV export.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Deserialize;

use crate::boundary::{self, BoundaryUnitary, Preset, SymmetryRep};
use crate::eigensolve::{self, Discretization, SpectralResult};
use crate::error::{Error, Result};
use crate::fem;
use crate::linalg::{self, CMatrix, I};
use crate::manifold::{IntervalManifold, Mesh};
use crate::oracles::{self, ClassicalKind, OracleSpectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Solve,
    Converge,
    Condition,
    Stability,
    Symmetry,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub intervals: Vec<[f64; 2]>,
    #[serde(default)]
    pub metric: Option<Vec<f64>>,
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<IntervalManifold> {
        let intervals: Vec<(f64, f64)> = self.intervals.iter().map(|iv| (iv[0], iv[1])).collect();
        match &self.metric {
            Some(m) => IntervalManifold::new(&intervals, m),
            None => IntervalManifold::euclidean(&intervals),
        }
    }
}

/// Complex matrix given by real and (optional) imaginary parts, row by row.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn build(&self) -> Result<CMatrix> {
        let im = match &self.im {
            Some(im) => im.clone(),
            None => self.re.iter().map(|row| vec![0.0; row.len()]).collect(),
        };
        CMatrix::from_parts(&self.re, &im)
    }
}

/// Boundary condition. Angles are in radians; endpoint pairs use the
/// endpoint order `a_1, b_1, a_2, b_2, …` counted from 0, and default to
/// pairing the two ends of every interval.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Dirichlet {},
    Neumann {},
    Robin {
        angles: Vec<f64>,
    },
    Periodic {
        #[serde(default)]
        pairs: Option<Vec<[usize; 2]>>,
    },
    QuasiPeriodic {
        #[serde(default)]
        pairs: Option<Vec<[usize; 2]>>,
        /// Phase `α`; the Bloch parameter is `ε = α/2π`.
        alpha: f64,
    },
    RobinLocal {
        theta: f64,
    },
    Matrix(MatrixSpec),
}

fn pairs_or_default(pairs: &Option<Vec<[usize; 2]>>, intervals: usize) -> Vec<(usize, usize)> {
    match pairs {
        Some(p) => p.iter().map(|q| (q[0], q[1])).collect(),
        None => (0..intervals).map(|a| (2 * a, 2 * a + 1)).collect(),
    }
}

impl BoundarySpec {
    pub fn preset(&self, intervals: usize) -> Option<Preset> {
        Some(match self {
            BoundarySpec::Dirichlet {} => Preset::Dirichlet,
            BoundarySpec::Neumann {} => Preset::Neumann,
            BoundarySpec::Robin { angles } => Preset::Robin { angles: angles.clone() },
            BoundarySpec::Periodic { pairs } => Preset::Periodic {
                pairs: pairs_or_default(pairs, intervals),
            },
            BoundarySpec::QuasiPeriodic { pairs, alpha } => Preset::QuasiPeriodic {
                pairs: pairs_or_default(pairs, intervals),
                alpha: *alpha,
            },
            BoundarySpec::RobinLocal { theta } => Preset::RobinLocal { theta: *theta },
            BoundarySpec::Matrix(_) => return None,
        })
    }

    pub fn build(&self, manifold: &IntervalManifold) -> Result<BoundaryUnitary> {
        let n = manifold.num_intervals();
        match self.preset(n) {
            Some(p) => p.build(manifold.boundary_dim()),
            None => match self {
                BoundarySpec::Matrix(m) => BoundaryUnitary::for_intervals(m.build()?, n),
                _ => unreachable!(),
            },
        }
    }
}

/// One resolution or a ladder of them.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    Single(usize),
    Many(Vec<usize>),
}

impl Ladder {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Ladder::Single(n) => vec![*n],
            Ladder::Many(v) => v.clone(),
        }
    }

    /// Parses `"250"` or `"50,100,200"`.
    pub fn parse(s: &str) -> Result<Self> {
        let values: std::result::Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
        match values {
            Ok(v) if v.len() == 1 => Ok(Ladder::Single(v[0])),
            Ok(v) if !v.is_empty() => Ok(Ladder::Many(v)),
            _ => Err(Error::Config(format!("invalid resolution list '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_eigen_tol")]
    pub eigen_backward_error: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_residual: f64,
}

fn default_eigen_tol() -> f64 {
    1e-9
}

fn default_boundary_tol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigen_backward_error: default_eigen_tol(),
            boundary_residual: default_boundary_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    /// Direction `A` of the family `U + iεA`; defaults to `[[0, 1], [−1, 0]]`.
    #[serde(default)]
    pub direction: Option<MatrixSpec>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    (0..=12).map(|j| 10f64.powf(-4.0 + 0.25 * j as f64)).collect()
}

impl Default for StabilitySpec {
    fn default() -> Self {
        Self {
            direction: None,
            epsilons: default_epsilons(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    /// Random unitaries of the boundary dimension with random steps.
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_step_range")]
    pub step_range: [f64; 2],
}

fn default_step_range() -> [f64; 2] {
    [1e-3, 1e-1]
}

impl Default for ConditionSpec {
    fn default() -> Self {
        Self {
            trials: 0,
            seed: 0,
            step_range: default_step_range(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub generators: Vec<MatrixSpec>,
    #[serde(default = "default_symmetry_tol")]
    pub tol: f64,
}

fn default_symmetry_tol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    pub manifold: ManifoldSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub n: Option<Ladder>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<String>,
    /// Export node samples of every computed eigenfunction.
    #[serde(default)]
    pub eigenfunctions: bool,
    /// Export `F`, `C`, `V`, `A` and `B` entry lists.
    #[serde(default)]
    pub dump_matrices: bool,
    #[serde(default)]
    pub stability: Option<StabilitySpec>,
    #[serde(default)]
    pub condition: Option<ConditionSpec>,
    #[serde(default)]
    pub symmetry: Option<SymmetrySpec>,
}

fn default_k() -> usize {
    10
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that does not need a solve: manifold, resolutions,
    /// boundary unitary, `k` and experiment-specific sections.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(IntervalManifold, BoundaryUnitary)> {
        if let Some(declared) = self.experiment {
            if declared != kind {
                return Err(Error::Config(format!(
                    "config declares experiment {declared:?}, but {kind:?} was requested"
                )));
            }
        }
        let manifold = self.manifold.build()?;
        if kind != ExperimentKind::Symmetry {
            for n in self.resolutions()? {
                Mesh::new(&manifold, n)?;
            }
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let u = self.boundary.build(&manifold)?;
        if let Some(s) = &self.stability {
            if s.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(Error::Config("stability epsilons must be finite and non-negative".into()));
            }
        }
        if let Some(c) = &self.condition {
            let [lo, hi] = c.step_range;
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config("condition step_range must satisfy 0 < lo <= hi".into()));
            }
        }
        if kind == ExperimentKind::Symmetry && self.symmetry.is_none() {
            return Err(Error::Config("symmetry experiment needs a 'symmetry' section".into()));
        }
        Ok((manifold, u))
    }

    pub fn resolutions(&self) -> Result<Vec<usize>> {
        let values = self
            .n
            .as_ref()
            .ok_or_else(|| Error::Config("missing resolution 'n'".into()))?
            .values();
        if values.is_empty() {
            return Err(Error::Config("empty resolution ladder".into()));
        }
        Ok(values)
    }

    fn single_resolution(&self) -> Result<usize> {
        match self.resolutions()?.as_slice() {
            [n] => Ok(*n),
            _ => Err(Error::Config("this experiment takes a single resolution".into())),
        }
    }
}

/// Where output files go: a directory, or a file-name prefix.
#[derive(Clone, Debug)]
pub struct OutputPrefix(pub String);

impl OutputPrefix {
    pub fn file(&self, name: &str) -> PathBuf {
        let p = Path::new(&self.0);
        if self.0.ends_with('/') || p.is_dir() {
            p.join(name)
        } else {
            PathBuf::from(format!("{}{}", self.0, name))
        }
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.file(name);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(&path, contents)?;
        Ok(path)
    }
}

/// Fixed numeric format for every CSV: 17 significant digits, lowercase exponent.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a CSV written by this module into its header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn solve_checked(d: &Discretization, u: &BoundaryUnitary, k: usize, tol: &Tolerances) -> Result<SpectralResult> {
    let k = k.min(d.pencil.dim());
    let r = d.solve(k)?;
    for (i, be) in r.backward_errors.iter().enumerate() {
        if *be > tol.eigen_backward_error {
            log::warn!("eigenpair {i}: backward error {be:e} above tolerance");
        }
    }
    for (i, ((phi, dphi), c)) in r.traces.iter().zip(&r.coefficients).enumerate() {
        let res = u.residual(phi, dphi)?.full;
        if res > tol.boundary_residual * linalg::norm2(c) {
            log::warn!("eigenpair {i}: boundary residual {res:e} above tolerance");
        }
    }
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub resolution: usize,
    pub discretization: Discretization,
    pub result: SpectralResult,
}

impl SolveReport {
    pub fn eigenvalue_table(&self) -> String {
        let header = ["index", "lambda", "residual"].map(String::from);
        let rows: Vec<Vec<String>> = (0..self.result.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    fmt_num(self.result.eigenvalues[i]),
                    fmt_num(self.result.residuals[i]),
                ]
            })
            .collect();
        csv(&header, &rows)
    }

    pub fn eigenfunction_table(&self, index: usize) -> Result<String> {
        let f = eigensolve::reconstruct(&self.result, index, &self.discretization.functions)?;
        let header = ["interval", "x", "re", "im"].map(String::from);
        let mut rows = Vec::new();
        for (alpha, (xs, vs)) in f.pieces.iter().enumerate() {
            for (x, v) in xs.iter().zip(vs) {
                rows.push(vec![alpha.to_string(), fmt_num(*x), fmt_num(v.re), fmt_num(v.im)]);
            }
        }
        Ok(csv(&header, &rows))
    }
}

pub fn run_solve(config: &RunConfig) -> Result<SolveReport> {
    let (manifold, u) = config.validate(ExperimentKind::Solve)?;
    let resolution = config.single_resolution()?;
    let discretization = Discretization::new(&manifold, &u, resolution)?;
    let result = solve_checked(&discretization, &u, config.k, &config.tolerances)?;
    Ok(SolveReport {
        resolution,
        discretization,
        result,
    })
}

pub fn write_solve(report: &SolveReport, config: &RunConfig, out: &OutputPrefix) -> Result<Vec<PathBuf>> {
    let mut written = vec![out.write("eigenvalues.csv", &report.eigenvalue_table())?];
    if config.eigenfunctions {
        for i in 0..report.result.len() {
            written.push(out.write(&format!("eigenfunction_{i}.csv"), &report.eigenfunction_table(i)?)?);
        }
    }
    if config.dump_matrices {
        let d = &report.discretization;
        let dumps = [
            ("matrix_f.csv", fem::dense_entries(&d.system.f)),
            ("matrix_c.csv", fem::dense_entries(&d.system.c)),
            ("matrix_v.csv", fem::dense_entries(&d.functions.v)),
            ("matrix_a.csv", d.pencil.a.entries()),
            ("matrix_b.csv", d.pencil.b.entries()),
        ];
        for (name, entries) in dumps {
            let mut buf = Vec::new();
            fem::write_entries_csv(&mut buf, &entries)?;
            written.push(out.write(name, &String::from_utf8_lossy(&buf))?);
        }
    }
    Ok(written)
}

/// Reference spectrum for a single interval `[0, 2π]` with a boundary
/// condition whose spectrum is known.
pub fn oracle_for(config: &RunConfig, count: usize) -> Result<OracleSpectrum> {
    let on_standard_interval = config.manifold.intervals.len() == 1
        && config.manifold.intervals[0] == [0.0, 2.0 * PI]
        && config.manifold.metric.as_ref().is_none_or(|m| m == &[1.0]);
    if !on_standard_interval {
        return Err(Error::Config(
            "reference spectra need the single interval [0, 2π] with unit metric".into(),
        ));
    }
    match &config.boundary {
        BoundarySpec::Dirichlet {} => Ok(oracles::classical_spectrum(ClassicalKind::Dirichlet, count)),
        BoundarySpec::Neumann {} => Ok(oracles::classical_spectrum(ClassicalKind::Neumann, count)),
        BoundarySpec::Periodic { pairs: None } => Ok(oracles::classical_spectrum(ClassicalKind::Periodic, count)),
        BoundarySpec::QuasiPeriodic { pairs: None, alpha } => {
            Ok(oracles::quasi_periodic_spectrum(alpha / (2.0 * PI), count))
        }
        BoundarySpec::RobinLocal { theta } => {
            oracles::robin_interval_spectrum(oracles::robin_local_constant(*theta), count)
        }
        _ => Err(Error::Config("no reference spectrum for this boundary condition".into())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenvalue_errors: Vec<f64>,
    /// `NaN` for modes whose reference eigenvalue is degenerate.
    pub h1_errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub oracle: OracleSpectrum,
    pub rows: Vec<ConvergenceRow>,
    pub eigenvalue_slopes: Vec<f64>,
    pub h1_slopes: Vec<f64>,
}

/// Least-squares slope of `ln y` against `ln x`; `NaN` unless all values are positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceReport> {
    let (manifold, u) = config.validate(ExperimentKind::Converge)?;
    let ladder = config.resolutions()?;
    let k = config.k;
    let oracle = oracle_for(config, k)?;
    let degenerate: Vec<bool> = (0..k)
        .map(|i| {
            let l = oracle.eigenvalues[i];
            oracle.eigenvalues.iter().enumerate().any(|(j, &m)| j != i && m == l)
        })
        .collect();
    let rows: Vec<Result<ConvergenceRow>> = ladder
        .par_iter()
        .map(|&n| {
            let d = Discretization::new(&manifold, &u, n)?;
            let r = solve_checked(&d, &u, k, &config.tolerances)?;
            let eigenvalue_errors = (0..r.len()).map(|i| (r.eigenvalues[i] - oracle.eigenvalues[i]).abs()).collect();
            let h1_errors = (0..r.len())
                .map(|i| {
                    if degenerate[i] {
                        return Ok(f64::NAN);
                    }
                    let f = eigensolve::reconstruct(&r, i, &d.functions)?;
                    Ok(eigensolve::h1_error(&f, &oracle.eigenfunctions[i]))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ConvergenceRow {
                resolution: n,
                eigenvalues: r.eigenvalues.clone(),
                eigenvalue_errors,
                h1_errors,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let modes = rows.iter().map(|r| r.eigenvalues.len()).min().unwrap_or(0);
    let ns: Vec<f64> = rows.iter().map(|r| r.resolution as f64).collect();
    let slope = |pick: &dyn Fn(&ConvergenceRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(pick).collect();
        loglog_slope(&ns, &ys)
    };
    let eigenvalue_slopes = (0..modes).map(|i| slope(&|r| r.eigenvalue_errors[i])).collect();
    let h1_slopes = (0..modes).map(|i| slope(&|r| r.h1_errors[i])).collect();
    Ok(ConvergenceReport {
        oracle,
        rows,
        eigenvalue_slopes,
        h1_slopes,
    })
}

impl ConvergenceReport {
    pub fn table(&self) -> String {
        let modes = self.eigenvalue_slopes.len();
        let mut header = vec!["n".to_string()];
        header.extend((0..modes).map(|i| format!("eig_err_{i}")));
        header.extend((0..modes).map(|i| format!("h1_err_{i}")));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.resolution.to_string()];
                row.extend(r.eigenvalue_errors[..modes].iter().map(|&x| fmt_num(x)));
                row.extend(r.h1_errors[..modes].iter().map(|&x| fmt_num(x)));
                row
            })
            .collect();
        csv(&header, &rows)
    }

    pub fn slope_table(&self) -> String {
        let header = ["mode", "eigenvalue_slope", "h1_slope"].map(String::from);
        let rows: Vec<Vec<String>> = (0..self.eigenvalue_slopes.len())
            .map(|i| vec![i.to_string(), fmt_num(self.eigenvalue_slopes[i]), fmt_num(self.h1_slopes[i])])
            .collect();
        csv(&header, &rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub resolution: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub kappa: f64,
    pub kappa_bound: f64,
    pub ill_conditioned: bool,
    /// Estimate `(h_max/h_min)/δh` for the step change to resolution `N + 1`; `NaN` if unavailable.
    pub kappa_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub dim: usize,
    pub kappa: f64,
    pub kappa_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    pub trials: Vec<TrialRow>,
}

fn condition_row(manifold: &IntervalManifold, u: &BoundaryUnitary, n: usize) -> Result<ConditionRow> {
    let mesh = Mesh::new(manifold, n)?;
    let sys = fem::boundary_system(u, &mesh)?;
    let kappa = sys.condition_number()?;
    let ill_conditioned = kappa > fem::ILL_CONDITIONED;
    if ill_conditioned {
        log::warn!("N = {n}: kappa(F) = {kappa:e}; increase N to move the steps");
    }
    let next = Mesh::new(manifold, n + 1)?.boundary_metric_steps();
    let dh: Vec<f64> = sys.steps.iter().zip(&next).map(|(a, b)| b - a).collect();
    let kappa_estimate = match fem::perturbation_bounds(&sys, &dh, 1.0) {
        Ok(b) => b.kappa_estimate,
        Err(Error::PerturbationTooLarge { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(ConditionRow {
        resolution: n,
        h_min: sys.steps.iter().copied().fold(f64::INFINITY, f64::min),
        h_max: sys.steps.iter().copied().fold(0.0, f64::max),
        kappa,
        kappa_bound: sys.kappa_bound,
        ill_conditioned,
        kappa_estimate,
    })
}

pub fn run_condition(config: &RunConfig) -> Result<ConditionReport> {
    let (manifold, u) = config.validate(ExperimentKind::Condition)?;
    let ladder = config.resolutions()?;
    let rows: Vec<Result<ConditionRow>> = ladder.par_iter().map(|&n| condition_row(&manifold, &u, n)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let spec = config.condition.clone().unwrap_or_default();
    let mut trials = Vec::with_capacity(spec.trials);
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let dim = manifold.boundary_dim();
    let mesh = Mesh::new(&manifold, ladder[0])?;
    let [lo, hi] = spec.step_range;
    while trials.len() < spec.trials {
        let w = BoundaryUnitary::new(linalg::random_unitary(dim, &mut rng))?;
        let steps: Vec<f64> = (0..dim).map(|_| lo * (hi / lo).powf(rng.random::<f64>())).collect();
        let sys = match fem::boundary_system_with_steps(&w, &mesh, steps) {
            Ok(s) => s,
            Err(Error::SingularBoundaryMatrix { .. }) => continue,
            Err(e) => return Err(e),
        };
        trials.push(TrialRow {
            trial: trials.len(),
            dim,
            kappa: sys.condition_number()?,
            kappa_bound: sys.kappa_bound,
        });
    }
    Ok(ConditionReport { rows, trials })
}

impl ConditionReport {
    pub fn table(&self) -> String {
        let header = ["n", "h_min", "h_max", "kappa", "kappa_bound", "ill_conditioned", "kappa_estimate"]
            .map(String::from);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.resolution.to_string(),
                    fmt_num(r.h_min),
                    fmt_num(r.h_max),
                    fmt_num(r.kappa),
                    fmt_num(r.kappa_bound),
                    r.ill_conditioned.to_string(),
                    fmt_num(r.kappa_estimate),
                ]
            })
            .collect();
        csv(&header, &rows)
    }

    pub fn trial_table(&self) -> String {
        let header = ["trial", "dim", "kappa", "kappa_bound"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .trials
            .iter()
            .map(|t| vec![t.trial.to_string(), t.dim.to_string(), fmt_num(t.kappa), fmt_num(t.kappa_bound)])
            .collect();
        csv(&header, &rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub epsilon: f64,
    /// Spectral norm `‖U_ε − U‖₂`.
    pub delta_u: f64,
    pub eigenvalues: Vec<f64>,
    /// `|λ_i(U_ε) − λ_i(U)| / ‖U_ε − U‖₂`; `NaN` at `ε = 0`.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub base_eigenvalues: Vec<f64>,
    pub rows: Vec<StabilityRow>,
}

/// Nearest unitary to `U + iεA`.
pub fn perturbed_unitary(u: &CMatrix, direction: &CMatrix, epsilon: f64) -> Result<CMatrix> {
    linalg::polar_unitary(&u.add(&direction.scale(I * epsilon)))
}

pub fn run_stability(config: &RunConfig) -> Result<StabilityReport> {
    let (manifold, u) = config.validate(ExperimentKind::Stability)?;
    let n = config.single_resolution()?;
    let spec = config.stability.clone().unwrap_or_default();
    let dim = u.dim();
    let direction = match &spec.direction {
        Some(m) => m.build()?,
        None if dim == 2 => CMatrix::from_parts(&[vec![0.0, 1.0], vec![-1.0, 0.0]], &[vec![0.0; 2], vec![0.0; 2]])?,
        None => return Err(Error::Config("stability direction required for boundary dimension > 2".into())),
    };
    if direction.nrows() != dim || direction.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: direction.nrows(),
        });
    }
    let k = config.k;
    let base = Discretization::new(&manifold, &u, n)?;
    let base_values = solve_checked(&base, &u, k, &config.tolerances)?.eigenvalues;
    let rows: Vec<Result<StabilityRow>> = spec
        .epsilons
        .par_iter()
        .map(|&eps| {
            let m = perturbed_unitary(u.matrix(), &direction, eps)?;
            let delta_u = linalg::spectral_norm(&m.sub(u.matrix()))?;
            let ue = BoundaryUnitary::new(m)?;
            let d = Discretization::new(&manifold, &ue, n)?;
            let values = solve_checked(&d, &ue, k, &config.tolerances)?.eigenvalues;
            let ratios = values
                .iter()
                .zip(&base_values)
                .map(|(a, b)| if delta_u > 0.0 { (a - b).abs() / delta_u } else { f64::NAN })
                .collect();
            Ok(StabilityRow {
                epsilon: eps,
                delta_u,
                eigenvalues: values,
                ratios,
            })
        })
        .collect();
    Ok(StabilityReport {
        base_eigenvalues: base_values,
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

impl StabilityReport {
    pub fn table(&self) -> String {
        let modes = self.base_eigenvalues.len();
        let mut header = vec!["epsilon".to_string(), "delta_u_spectral_norm".to_string()];
        header.extend((0..modes).map(|i| format!("k_{i}")));
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![fmt_num(r.epsilon), fmt_num(r.delta_u)];
                row.extend(r.ratios.iter().map(|&x| fmt_num(x)));
                row
            })
            .collect();
        csv(&header, &rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub commutator_norms: Vec<f64>,
    pub tol: f64,
    pub invariant: bool,
}

impl SymmetryReport {
    pub fn max_commutator_norm(&self) -> f64 {
        self.commutator_norms.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the first generator that does not commute with `U`.
    pub fn offending_generator(&self) -> Option<usize> {
        self.commutator_norms.iter().position(|&c| c > self.tol)
    }

    pub fn table(&self) -> String {
        let header = ["generator", "commutator_norm", "commutes"].map(String::from);
        let rows: Vec<Vec<String>> = self
            .commutator_norms
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![i.to_string(), fmt_num(c), (c <= self.tol).to_string()])
            .collect();
        csv(&header, &rows)
    }
}

pub fn run_symmetry(config: &RunConfig) -> Result<SymmetryReport> {
    let (_, u) = config.validate(ExperimentKind::Symmetry)?;
    let spec = config
        .symmetry
        .as_ref()
        .ok_or_else(|| Error::Config("missing 'symmetry' section".into()))?;
    let elements = spec
        .generators
        .iter()
        .map(|g| g.build())
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Config(format!("malformed generator: {e}")))?;
    let rep = SymmetryRep::new(elements).map_err(|e| Error::Config(format!("malformed representation: {e}")))?;
    let commutator_norms = rep
        .commutator_norms(&u)
        .map_err(|e| Error::Config(format!("malformed representation: {e}")))?;
    let invariant = boundary::commutant_check(&u, &rep, spec.tol)?;
    Ok(SymmetryReport {
        commutator_norms,
        tol: spec.tol,
        invariant,
    })
}

/// One line summary per experiment, printed by the command-line tool.
pub fn describe_solve(report: &SolveReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "N = {}: ", report.resolution);
    let values: Vec<String> = report.result.eigenvalues.iter().map(|v| format!("{v:.10}")).collect();
    s.push_str(&values.join(", "));
    s
}

