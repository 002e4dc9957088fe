//! Multilinear PageRank: the fixed point of `x = theta P^x^{m-1} + (1 - theta) v`.
//!
//! This is the stationary vector of the tensor `P = theta P^ + (1 - theta) V`
//! with `V(i1, .., im) = v(i1)`. `V` is never built; [`PageRankProblem`]
//! applies it in operator form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::solvers::{solve, FixedPointMap, SolveReport, SolverConfig};
use crate::tensor::{l1_distance, ContractionMatrix, ProbVector, StochasticTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankProblem {
    base: StochasticTensor,
    teleport: ProbVector,
    damping: f64,
}

impl PageRankProblem {
    pub fn new(base: StochasticTensor, teleport: ProbVector, damping: f64) -> Result<Self> {
        if !(damping > 0.0 && damping < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1), got {damping}"
            )));
        }
        if teleport.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: teleport.len(),
            });
        }
        base.validate().into_result()?;
        Ok(PageRankProblem {
            base,
            teleport,
            damping,
        })
    }

    /// Uniform teleportation vector `e/n`.
    pub fn with_uniform_teleport(base: StochasticTensor, damping: f64) -> Result<Self> {
        let n = base.dim();
        Self::new(base, ProbVector::uniform(n), damping)
    }

    pub fn base(&self) -> &StochasticTensor {
        &self.base
    }

    pub fn teleport(&self) -> &ProbVector {
        &self.teleport
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// `theta P^x^{m-1} + (1 - theta) v (sum x)^{m-1}` for any real `x`.
    pub fn contract(&self, x: &[f64]) -> Result<Vec<f64>> {
        let px = self.base.contract(x)?;
        let scale = (1.0 - self.damping) * x.iter().sum::<f64>().powi(self.base.order() as i32 - 1);
        Ok(px
            .iter()
            .zip(self.teleport.as_slice())
            .map(|(p, v)| self.damping * p + scale * v)
            .collect())
    }

    /// Materialize the combined tensor. Only for small oracle checks.
    pub fn materialize(&self) -> Result<StochasticTensor> {
        let dense = self.base.to_dense()?;
        let n = dense.dim();
        let m = dense.order();
        let len = n.pow(m as u32);
        let mut values = vec![0.0; len];
        let mut idx = vec![0usize; m];
        for (offset, slot) in values.iter_mut().enumerate() {
            let mut rest = offset;
            for i in idx.iter_mut() {
                *i = rest % n;
                rest /= n;
            }
            *slot = self.damping * dense.get(&idx)
                + (1.0 - self.damping) * self.teleport.as_slice()[idx[0]];
        }
        StochasticTensor::from_dense(m, n, values)
    }
}

/// The operator `theta P^x^{m-1} + (1 - theta) v` applied to a probability
/// vector.
pub fn pagerank_apply(p: &PageRankProblem, x: &ProbVector) -> Result<ProbVector> {
    let px = p.base.apply(x)?;
    let theta = p.damping;
    let out: Vec<f64> = px
        .as_slice()
        .iter()
        .zip(p.teleport.as_slice())
        .map(|(a, v)| theta * a + (1.0 - theta) * v)
        .collect();
    Ok(ProbVector::normalized(out))
}

impl FixedPointMap for PageRankProblem {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn order(&self) -> usize {
        self.base.order()
    }

    fn apply(&self, x: &ProbVector) -> Result<ProbVector> {
        pagerank_apply(self, x)
    }

    fn residual(&self, x: &ProbVector) -> Result<f64> {
        Ok(l1_distance(&self.contract(x.as_slice())?, x.as_slice()))
    }

    /// `theta H_{P^} + (1 - theta) H_V` where, with `s = sum x`,
    /// `H_V(i, j) = (m-1) s^{m-2} (v_i + v_j) + (m-1)(m-2) (v.x) s^{m-3}`.
    fn hessian(&self, x: &ProbVector) -> Result<ContractionMatrix> {
        let hb = self.base.hessian(x.as_slice())?;
        let n = self.base.dim();
        let m = self.base.order() as i32;
        let v = self.teleport.as_slice();
        let s: f64 = x.as_slice().iter().sum();
        let vx: f64 = v.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        let mf = m as f64;
        let cross = if m >= 3 {
            (mf - 1.0) * (mf - 2.0) * vx * s.powi(m - 3)
        } else {
            0.0
        };
        let theta = self.damping;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let hv = (mf - 1.0) * s.powi(m - 2) * (v[i] + v[j]) + cross;
                values.push(theta * hb.get(i, j) + (1.0 - theta) * hv);
            }
        }
        ContractionMatrix::from_column_major(n, values)
    }
}

pub fn solve_pagerank(p: &PageRankProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(p, cfg)
}

/// Random column-stochastic tensor: entries uniform on `[0, 1)`, each kept
/// with probability `density`, every column keeping at least one nonzero,
/// then columns normalized. Deterministic per seed. Dense storage when
/// `density == 1`, sparse otherwise.
pub fn gen_random_tensor(order: usize, dim: usize, density: f64, seed: u64) -> Result<StochasticTensor> {
    if order < 2 || dim < 1 {
        return Err(Error::InvalidConfig(format!(
            "need order >= 2 and dim >= 1, got order {order}, dim {dim}"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let columns = dim
        .checked_pow(order as u32 - 1)
        .filter(|c| c.checked_mul(dim).is_some())
        .ok_or_else(|| Error::InvalidConfig("n^m overflows".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut tail = vec![0usize; order - 1];
    let mut column = vec![0.0; dim];
    for col in 0..columns {
        let mut rest = col;
        for t in tail.iter_mut() {
            *t = rest % dim;
            rest /= dim;
        }
        for slot in column.iter_mut() {
            let value: f64 = rng.random();
            let keep = density >= 1.0 || rng.random::<f64>() < density;
            *slot = if keep { value } else { 0.0 };
        }
        if column.iter().all(|v| *v <= 0.0) {
            let i = rng.random_range(0..dim);
            column[i] = rng.random_range(1e-3..1.0);
        }
        let sum: f64 = column.iter().sum();
        for (i, v) in column.iter().enumerate() {
            if *v > 0.0 {
                let mut idx = Vec::with_capacity(order);
                idx.push(i);
                idx.extend_from_slice(&tail);
                entries.push((idx, v / sum));
            }
        }
    }
    let t = StochasticTensor::from_entries(order, dim, entries)?;
    if density >= 1.0 {
        t.to_dense()
    } else {
        Ok(t)
    }
}
