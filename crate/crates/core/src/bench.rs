//! Experiment campaigns: the six solvers on the four DNA fixtures, and
//! damping sweeps of multilinear PageRank over seeded random tensors.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{Fixture, FixtureName};
use crate::pagerank::{gen_random_tensor, PageRankProblem};
use crate::solvers::{solve, Method, SolveReport, SolverConfig};
use crate::tensor::ProbVector;

/// Allowed `|IT - reference|` per method.
pub fn it_tolerance(method: Method) -> usize {
    match method {
        Method::Geap => 4,
        _ => 2,
    }
}

/// Residual ceiling for a converged solve.
pub const RR_CEILING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// Fixture name, or `r<seed>` for generated instances.
    pub fixture: String,
    pub method: Method,
    pub params: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub converged: bool,
    pub iterations: usize,
    /// `||Px^{m-1} - x||_1` recomputed from `final_x`.
    pub residual: f64,
    pub final_x: ProbVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_residual: Option<f64>,
    /// Comparison against the reference, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub name: String,
    pub tol: f64,
    pub max_iter: usize,
    pub start: String,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub thetas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub campaign: Campaign,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn without_wall_time(&self) -> BenchReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.wall_time = None;
        }
        r
    }

    /// Rows carrying a reference that they fail to meet.
    pub fn failures(&self) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| r.pass == Some(false)).collect()
    }

    pub fn converged_count(&self, theta: f64, method: Method) -> usize {
        self.rows
            .iter()
            .filter(|r| r.theta == Some(theta) && r.method == method && r.converged)
            .count()
    }
}

fn row_from_report(fixture: String, params: String, report: &SolveReport, residual: f64) -> BenchRow {
    BenchRow {
        fixture,
        method: report.method,
        params,
        theta: None,
        seed: None,
        converged: report.converged,
        iterations: report.iterations,
        residual,
        final_x: report.final_x.clone(),
        wall_time: Some(report.wall_time),
        expected_iterations: None,
        expected_residual: None,
        pass: None,
    }
}

/// All six methods on fixtures (i)-(iv): uniform start, tol 1e-10,
/// at most 1000 iterations.
pub fn run_table1() -> Result<BenchReport> {
    let fixtures = Fixture::all()?;
    let jobs: Vec<(&Fixture, Method)> = fixtures
        .iter()
        .flat_map(|f| Method::ALL.into_iter().map(move |m| (f, m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(f, method)| -> Result<BenchRow> {
            let report = solve(&f.tensor, &f.config(method))?;
            let residual = f.tensor.residual(&report.final_x)?;
            let expected = f.expected(method);
            let mut row = row_from_report(f.name.as_str().into(), f.params(method), &report, residual);
            row.expected_iterations = Some(expected.iterations);
            row.expected_residual = Some(expected.residual);
            row.pass = Some(
                report.converged
                    && residual <= RR_CEILING
                    && report.iterations.abs_diff(expected.iterations) <= it_tolerance(method),
            );
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        campaign: Campaign {
            name: "table1".into(),
            tol: 1e-10,
            max_iter: 1000,
            start: "uniform".into(),
            seeds: Vec::new(),
            thetas: Vec::new(),
        },
        rows,
    })
}

/// Generated instance family for PageRank sweeps: instance `s` is an
/// order-`order` tensor of dimension `dims[s % dims.len()]` drawn by
/// [`gen_random_tensor`] with seed `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub seeds: Vec<u64>,
    pub thetas: Vec<f64>,
    pub methods: Vec<Method>,
    pub order: usize,
    pub dims: Vec<usize>,
    pub density: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Momentum for HOPMM-I rows.
    pub beta: Option<f64>,
    /// Momentum for HOPMM-II rows.
    pub eta: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            seeds: (0..29).collect(),
            thetas: vec![0.7, 0.85, 0.9, 0.95, 0.99],
            methods: vec![Method::Hopm, Method::Rhopm, Method::Qehopm],
            order: 3,
            dims: vec![3, 4, 6],
            density: 0.5,
            tol: 1e-10,
            max_iter: 1000,
            beta: None,
            eta: None,
        }
    }
}

impl SweepSpec {
    pub fn dim_for(&self, seed: u64) -> usize {
        self.dims[(seed % self.dims.len() as u64) as usize]
    }
}

fn sweep_config(method: Method, spec: &SweepSpec) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::new(method)
        .with_tol(spec.tol)
        .with_max_iter(spec.max_iter);
    cfg.beta = spec.beta;
    cfg.eta = spec.eta;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_pagerank_sweep(spec: &SweepSpec) -> Result<BenchReport> {
    if spec.dims.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one dimension".into()));
    }
    for &method in &spec.methods {
        sweep_config(method, spec)?;
    }
    let mut jobs = Vec::new();
    for &seed in &spec.seeds {
        for &theta in &spec.thetas {
            for &method in &spec.methods {
                jobs.push((seed, theta, method));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(seed, theta, method)| -> Result<BenchRow> {
            let base = gen_random_tensor(spec.order, spec.dim_for(seed), spec.density, seed)?;
            let problem = PageRankProblem::with_uniform_teleport(base, theta)?;
            let cfg = sweep_config(method, spec)?;
            let report = solve(&problem, &cfg)?;
            let residual = crate::solvers::FixedPointMap::residual(&problem, &report.final_x)?;
            let params = match method {
                Method::Rhopm => format!("theta={theta} gamma={}", cfg.gamma),
                Method::Hopmm1 => format!("theta={theta} beta={}", cfg.beta.unwrap_or(0.0)),
                Method::Hopmm2 => format!("theta={theta} eta={}", cfg.eta.unwrap_or(0.0)),
                _ => format!("theta={theta}"),
            };
            let mut row = row_from_report(format!("r{seed}"), params, &report, residual);
            row.theta = Some(theta);
            row.seed = Some(seed);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        campaign: Campaign {
            name: "pagerank".into(),
            tol: spec.tol,
            max_iter: spec.max_iter,
            start: "uniform".into(),
            seeds: spec.seeds.clone(),
            thetas: spec.thetas.clone(),
        },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(EmitFormat::Json),
            "csv" => Ok(EmitFormat::Csv),
            "md" | "md-table" | "markdown" => Ok(EmitFormat::Markdown),
            _ => Err(Error::InvalidConfig(format!("unknown format '{s}'"))),
        }
    }
}

fn it_cell(row: &BenchRow) -> String {
    if row.converged {
        row.iterations.to_string()
    } else {
        "-".into()
    }
}

fn time_cell(row: &BenchRow) -> String {
    row.wall_time.map(|t| format!("{t:.4}")).unwrap_or_default()
}

/// Render a report. With `wall_time = false` timings are dropped and the
/// output is a pure function of the solver results.
pub fn render(report: &BenchReport, format: EmitFormat, wall_time: bool) -> Result<String> {
    let stripped;
    let report = if wall_time {
        report
    } else {
        stripped = report.without_wall_time();
        &stripped
    };
    Ok(match format {
        EmitFormat::Json => serde_json::to_string_pretty(report)?,
        EmitFormat::Csv => {
            let mut out = String::from("fixture,method,params,it,rr,wall_time\n");
            for row in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:e},{}",
                    row.fixture,
                    row.method,
                    row.params,
                    it_cell(row),
                    row.residual,
                    time_cell(row)
                );
            }
            out
        }
        EmitFormat::Markdown => {
            let mut out = String::from(
                "| Examples | Algorithm | CPU | IT | RR | ref IT | ref RR | check |\n\
                 |---|---|---|---|---|---|---|---|\n",
            );
            let mut last = None;
            for row in &report.rows {
                let name = if last.as_deref() == Some(row.fixture.as_str()) {
                    String::new()
                } else {
                    match FixtureName::parse(&row.fixture) {
                        Some(f) => format!("({})", f.as_str()),
                        None => row.fixture.clone(),
                    }
                };
                last = Some(row.fixture.clone());
                let algo = if row.params.is_empty() || row.method == Method::Geap {
                    row.method.label().to_string()
                } else {
                    format!("{} ({})", row.method.label(), row.params)
                };
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {:.2e} | {} | {} | {} |",
                    name,
                    algo,
                    time_cell(row),
                    it_cell(row),
                    row.residual,
                    row.expected_iterations.map(|v| v.to_string()).unwrap_or_default(),
                    row.expected_residual.map(|v| format!("{v:.2e}")).unwrap_or_default(),
                    match row.pass {
                        Some(true) => "ok",
                        Some(false) => "FAIL",
                        None => "",
                    }
                );
            }
            out
        }
    })
}

pub fn emit(report: &BenchReport, format: EmitFormat, wall_time: bool, path: &Path) -> Result<()> {
    let body = render(report, format, wall_time)?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn parse_report(json: &str) -> Result<BenchReport> {
    Ok(serde_json::from_str(json)?)
}
