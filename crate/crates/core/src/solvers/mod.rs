//! Fixed-point solvers for `x = Px^{m-1}` sharing one iteration driver.
//!
//! Every method performs one contraction `Px_{k-1}^{m-1}` per iteration and
//! stops when `||x_k - x_{k-1}||_1 < tol`. The accelerated methods add a
//! contraction-free step every `period` iterations (at `k % period == 0`):
//!
//! | method  | per-iteration update                                  |
//! |---------|-------------------------------------------------------|
//! | HOPM    | `x_k = Px_{k-1}^{m-1}`                                |
//! | GEAP    | `x_k = proj(Px_{k-1}^{m-1} + a_k x_{k-1})`, shift from the Hessian |
//! | RHOPM   | `x_k = proj(g Px_{k-1}^{m-1} + (1 - g) x_{k-1})`      |
//! | HOPMM-I | power step, then periodically `proj(x_k + b (x_{k-1} - x_{k-2}))` |
//! | HOPMM-II| power step, then periodically `proj(x_k + e (x_k - x_{k-1}))` |
//! | QEHOPM  | power step, then periodically quadratic extrapolation |
//!
//! For the momentum methods the stopping test uses the iterate after the
//! momentum step; for QEHOPM it uses the power step, before extrapolation.

mod extrapolation;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use extrapolation::{
    gram_schmidt_lstsq, quadratic_extrapolation, Extrapolation, ExtrapolationCoeffs,
    ExtrapolationSkip, DEGENERACY_TOL,
};

use crate::error::{Error, Result};
use crate::tensor::{proj, ContractionMatrix, ProbVector, StochasticTensor};

/// Largest dimension for the dense eigensolver used by GEAP.
pub const GEAP_MAX_DIM: usize = 512;

/// A map whose fixed point on the simplex is sought.
pub trait FixedPointMap {
    fn dim(&self) -> usize;
    fn order(&self) -> usize;
    /// `Px^{m-1}` as a probability vector.
    fn apply(&self, x: &ProbVector) -> Result<ProbVector>;
    /// `||Px^{m-1} - x||_1` from the raw contraction.
    fn residual(&self, x: &ProbVector) -> Result<f64>;
    /// Hessian of `x -> Px^m` at `x` (symmetric).
    fn hessian(&self, x: &ProbVector) -> Result<ContractionMatrix>;
}

impl FixedPointMap for StochasticTensor {
    fn dim(&self) -> usize {
        StochasticTensor::dim(self)
    }
    fn order(&self) -> usize {
        StochasticTensor::order(self)
    }
    fn apply(&self, x: &ProbVector) -> Result<ProbVector> {
        StochasticTensor::apply(self, x)
    }
    fn residual(&self, x: &ProbVector) -> Result<f64> {
        StochasticTensor::residual(self, x)
    }
    fn hessian(&self, x: &ProbVector) -> Result<ContractionMatrix> {
        StochasticTensor::hessian(self, x.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hopm,
    Geap,
    Rhopm,
    Hopmm1,
    Hopmm2,
    Qehopm,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Hopm,
        Method::Geap,
        Method::Rhopm,
        Method::Hopmm1,
        Method::Hopmm2,
        Method::Qehopm,
    ];

    /// Name used in tables, e.g. `HOPMM-I`.
    pub fn label(self) -> &'static str {
        match self {
            Method::Hopm => "HOPM",
            Method::Geap => "GEAP",
            Method::Rhopm => "RHOPM",
            Method::Hopmm1 => "HOPMM-I",
            Method::Hopmm2 => "HOPMM-II",
            Method::Qehopm => "QEHOPM",
        }
    }

    /// Default acceleration cadence, for methods that have one.
    pub fn default_period(self) -> Option<usize> {
        match self {
            Method::Hopmm1 => Some(3),
            Method::Hopmm2 => Some(2),
            Method::Qehopm => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Hopm => "hopm",
            Method::Geap => "geap",
            Method::Rhopm => "rhopm",
            Method::Hopmm1 => "hopmm1",
            Method::Hopmm2 => "hopmm2",
            Method::Qehopm => "qehopm",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// HOPMM-I momentum; required for that method.
    pub beta: Option<f64>,
    /// HOPMM-II momentum; required for that method.
    pub eta: Option<f64>,
    /// RHOPM relaxation.
    pub gamma: f64,
    /// GEAP positive-definiteness tolerance.
    pub tau: f64,
    /// Acceleration cadence; `None` selects the method default.
    pub period: Option<usize>,
    /// Start vector; `None` is the uniform vector.
    pub x0: Option<ProbVector>,
    /// Keep every stored iterate `x_0, x_1, ..` in the report.
    pub keep_iterates: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            tol: 1e-10,
            max_iter: 1000,
            beta: None,
            eta: None,
            gamma: 1.2,
            tau: 1e-6,
            period: None,
            x0: None,
            keep_iterates: false,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_x0(mut self, x0: ProbVector) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn effective_period(&self) -> usize {
        self.period
            .or_else(|| self.method.default_period())
            .unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1".into());
        }
        if self.period == Some(0) {
            return bad("period must be >= 1".into());
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        match self.method {
            Method::Hopmm1 => match self.beta {
                None => return bad("HOPMM-I requires beta".into()),
                Some(b) if !(b >= 0.0) => return bad(format!("beta must be >= 0, got {b}")),
                _ => {}
            },
            Method::Hopmm2 => match self.eta {
                None => return bad("HOPMM-II requires eta".into()),
                Some(e) if !(e >= 0.0) => return bad(format!("eta must be >= 0, got {e}")),
                _ => {}
            },
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// `||x_k - x_{k-1}||_1` as used by the stopping test.
    pub step_norm: f64,
    /// `||Px_k^{m-1} - x_k||_1`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationEvent {
    pub iteration: usize,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<ExtrapolationSkip>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<ExtrapolationCoeffs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    /// Number of contractions `Px^{m-1}` performed.
    pub iterations: usize,
    pub final_x: ProbVector,
    /// Recomputed from `final_x` after the loop.
    pub residual: f64,
    pub residual_history: Vec<TraceRow>,
    pub extrapolation_events: Vec<ExtrapolationEvent>,
    /// Seconds.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<ProbVector>>,
}

impl SolveReport {
    /// `iteration,step_norm,residual` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,step_norm,residual\n");
        for row in &self.residual_history {
            out.push_str(&format!(
                "{},{:e},{:e}\n",
                row.iteration, row.step_norm, row.residual
            ));
        }
        out
    }
}

fn combine(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

fn smallest_eigenvalue(h: &ContractionMatrix, iteration: usize) -> Result<f64> {
    let n = h.dim();
    let m = DMatrix::from_column_slice(n, n, h.column_major());
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or(Error::Eigen { iteration })?;
    eig.eigenvalues
        .iter()
        .copied()
        .reduce(f64::min)
        .filter(|v| v.is_finite())
        .ok_or(Error::Eigen { iteration })
}

/// Run the configured method on `map`.
pub fn solve<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let n = map.dim();
    let m = map.order();
    if cfg.method == Method::Geap && n > GEAP_MAX_DIM {
        return Err(Error::InvalidConfig(format!(
            "GEAP needs n <= {GEAP_MAX_DIM} for the dense eigensolver, got {n}"
        )));
    }
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => ProbVector::uniform(n),
    };
    let period = cfg.effective_period();
    let start = Instant::now();

    // last four stored iterates, newest at the back
    let mut recent: VecDeque<ProbVector> = VecDeque::with_capacity(4);
    recent.push_back(x0.clone());
    let mut all = cfg.keep_iterates.then(|| vec![x0]);
    let mut history = Vec::new();
    let mut events = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let prev = recent.back().expect("history is never empty");
        let y = map.apply(prev)?;
        iterations = k;

        let mut x = match cfg.method {
            Method::Geap => {
                let h = map.hessian(prev)?;
                let lambda_min = smallest_eigenvalue(&h, k)?;
                let shift = ((cfg.tau - lambda_min) / m as f64).max(0.0);
                proj(&combine(1.0, y.as_slice(), shift, prev.as_slice()))?
            }
            Method::Rhopm => proj(&combine(
                cfg.gamma,
                y.as_slice(),
                1.0 - cfg.gamma,
                prev.as_slice(),
            ))?,
            _ => y,
        };
        let mut step_norm = x.l1_distance(prev);

        if k % period == 0 {
            match cfg.method {
                Method::Hopmm1 if recent.len() >= 2 => {
                    let beta = cfg.beta.unwrap_or(0.0);
                    let older = &recent[recent.len() - 2];
                    let momentum: Vec<f64> = x
                        .as_slice()
                        .iter()
                        .zip(prev.as_slice().iter().zip(older.as_slice()))
                        .map(|(xk, (a, b))| xk + beta * (a - b))
                        .collect();
                    x = proj(&momentum)?;
                    step_norm = x.l1_distance(prev);
                    events.push(ExtrapolationEvent {
                        iteration: k,
                        accepted: true,
                        skipped: None,
                        coeffs: None,
                    });
                }
                Method::Hopmm2 => {
                    let eta = cfg.eta.unwrap_or(0.0);
                    x = proj(&combine(1.0 + eta, x.as_slice(), -eta, prev.as_slice()))?;
                    step_norm = x.l1_distance(prev);
                    events.push(ExtrapolationEvent {
                        iteration: k,
                        accepted: true,
                        skipped: None,
                        coeffs: None,
                    });
                }
                Method::Qehopm if recent.len() >= 3 => {
                    let len = recent.len();
                    let result = quadratic_extrapolation(
                        &recent[len - 3],
                        &recent[len - 2],
                        &recent[len - 1],
                        &x,
                    );
                    match result {
                        Ok(ext) => {
                            x = ext.x;
                            events.push(ExtrapolationEvent {
                                iteration: k,
                                accepted: true,
                                skipped: None,
                                coeffs: Some(ext.coeffs),
                            });
                        }
                        Err(reason) => events.push(ExtrapolationEvent {
                            iteration: k,
                            accepted: false,
                            skipped: Some(reason),
                            coeffs: None,
                        }),
                    }
                }
                _ => {}
            }
        }
        debug_assert!(x.is_valid(), "iterate {k} left the simplex");

        history.push(TraceRow {
            iteration: k,
            step_norm,
            residual: map.residual(&x)?,
        });
        if let Some(all) = all.as_mut() {
            all.push(x.clone());
        }
        if recent.len() == 4 {
            recent.pop_front();
        }
        recent.push_back(x);

        if step_norm < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_x = recent.pop_back().expect("history is never empty");
    let residual = map.residual(&final_x)?;
    Ok(SolveReport {
        method: cfg.method,
        converged,
        iterations,
        final_x,
        residual,
        residual_history: history,
        extrapolation_events: events,
        wall_time: start.elapsed().as_secs_f64(),
        iterates: all,
    })
}

pub fn solve_hopm<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Hopm, ..cfg.clone() })
}

pub fn solve_geap<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Geap, ..cfg.clone() })
}

pub fn solve_rhopm<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Rhopm, ..cfg.clone() })
}

pub fn solve_hopmm1<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Hopmm1, ..cfg.clone() })
}

pub fn solve_hopmm2<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Hopmm2, ..cfg.clone() })
}

pub fn solve_qehopm<M: FixedPointMap + ?Sized>(map: &M, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(map, &SolverConfig { method: Method::Qehopm, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor() -> StochasticTensor {
        // small positive order-3 tensor
        let raw: Vec<f64> = (0..27).map(|i| 1.0 + ((i * 7) % 5) as f64).collect();
        StochasticTensor::from_dense(3, 3, raw)
            .unwrap()
            .repaired()
            .unwrap()
    }

    #[test]
    fn uniform_tensor_is_fixed_immediately() {
        let t = StochasticTensor::uniform(3, 4).unwrap();
        for method in Method::ALL {
            let cfg = SolverConfig::new(method).with_beta(0.1).with_eta(0.1);
            let r = solve(&t, &cfg).unwrap();
            assert!(r.converged, "{method}");
            assert_eq!(r.iterations, 1, "{method}");
            assert!(r.residual < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        let t = tensor();
        assert!(solve(&t, &SolverConfig::new(Method::Hopmm1)).is_err());
        assert!(solve(&t, &SolverConfig::new(Method::Hopmm2)).is_err());
        assert!(solve(&t, &SolverConfig::new(Method::Hopm).with_tol(0.0)).is_err());
        assert!(solve(&t, &SolverConfig::new(Method::Hopm).with_max_iter(0)).is_err());
        assert!(solve(&t, &SolverConfig::new(Method::Rhopm).with_gamma(-1.0)).is_err());
        assert!(solve(&t, &SolverConfig::new(Method::Hopmm1).with_beta(-0.1)).is_err());
        let mut cfg = SolverConfig::new(Method::Qehopm);
        cfg.period = Some(0);
        assert!(solve(&t, &cfg).is_err());
        let cfg = SolverConfig::new(Method::Hopm).with_x0(ProbVector::uniform(4));
        assert!(matches!(solve(&t, &cfg), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn max_iter_is_an_outcome_not_an_error() {
        let t = tensor();
        let r = solve(&t, &SolverConfig::new(Method::Hopm).with_max_iter(2)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert_eq!(r.residual_history.len(), 2);
    }

    #[test]
    fn report_invariants() {
        let t = tensor();
        for method in Method::ALL {
            let cfg = SolverConfig::new(method).with_beta(0.05).with_eta(0.1);
            let r = solve(&t, &cfg).unwrap();
            assert!(r.converged);
            let last = r.residual_history.last().unwrap();
            assert!(last.step_norm < cfg.tol);
            assert_eq!(r.residual, t.residual(&r.final_x).unwrap());
            assert!(r.residual <= 1e-10, "{method}: {}", r.residual);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn trace_csv_header() {
        let t = tensor();
        let r = solve(&t, &SolverConfig::new(Method::Hopm)).unwrap();
        let csv = r.trace_csv();
        assert!(csv.starts_with("iteration,step_norm,residual\n1,"));
        assert_eq!(csv.lines().count(), r.iterations + 1);
    }

    #[test]
    fn events_recorded_on_cadence() {
        let t = tensor();
        let r = solve(&t, &SolverConfig::new(Method::Hopmm2).with_eta(0.1)).unwrap();
        assert!(r.extrapolation_events.iter().all(|e| e.iteration % 2 == 0));
        let r = solve(&t, &SolverConfig::new(Method::Qehopm)).unwrap();
        assert!(r.extrapolation_events.iter().all(|e| e.iteration % 4 == 0));
    }
}
