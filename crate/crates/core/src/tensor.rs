//! Transition probability tensors, probability vectors and the two tensor
//! contractions the solvers are built on.
//!
//! Index convention: the first index `i1` is the destination state and every
//! fibre `p[:, i2, .., im]` (a "column") is a probability distribution. Dense
//! storage is column-major with `i1` varying fastest, so a column is a
//! contiguous run of `n` values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on column sums and on probability-vector sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest `n^m` kept in dense storage.
pub const DENSE_LIMIT: usize = 1_000_000;

/// A nonnegative vector with unit 1-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NotProbVector("empty vector".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::NotProbVector(format!("component {} is {v}", i + 1)));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotProbVector(format!("components sum to {sum}")));
        }
        Ok(ProbVector(values))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform vector needs n >= 1");
        ProbVector(vec![1.0 / n as f64; n])
    }

    /// Unit vector `e_i` (0-based).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ProbVector(v)
    }

    /// Rescales a nonnegative vector with positive sum. Used where the
    /// input is a probability vector up to rounding.
    pub(crate) fn normalized(mut values: Vec<f64>) -> Self {
        let sum: f64 = values.iter().sum();
        debug_assert!(sum > 0.0);
        for v in &mut values {
            *v /= sum;
        }
        ProbVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_distance(&self, other: &ProbVector) -> f64 {
        l1_distance(&self.0, &other.0)
    }

    /// True when the components are nonnegative (up to `-1e-15`) and sum to
    /// one within [`STOCHASTIC_TOL`].
    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && *v >= -1e-15)
            && (self.0.iter().sum::<f64>() - 1.0).abs() <= STOCHASTIC_TOL
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// `proj(x) = x+ / ||x+||_1` with `x+ = max(x, 0)`.
pub fn proj(x: &[f64]) -> Result<ProbVector> {
    let clamped: Vec<f64> = x
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    let mass: f64 = clamped.iter().sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::NoPositiveMass);
    }
    Ok(ProbVector(clamped.into_iter().map(|v| v / mass).collect()))
}

/// Dense `n x n` matrix stored column-major; entry `(i1, i2)` of `Px^{m-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl ContractionMatrix {
    pub fn from_column_major(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: values.len(),
            });
        }
        Ok(ContractionMatrix { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row + self.dim * col]
    }

    pub fn column_major(&self) -> &[f64] {
        &self.values
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (col, xj) in self.values.chunks_exact(n).zip(x) {
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * xj;
            }
        }
        Ok(out)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.dim)
            .map(|c| c.iter().sum())
            .collect()
    }

    pub fn transpose(&self) -> ContractionMatrix {
        let n = self.dim;
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                values[j + n * i] = self.values[i + n * j];
            }
        }
        ContractionMatrix { dim: n, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    /// Entry `k` has 0-based indices `indices[k*m .. (k+1)*m]`; entries are
    /// sorted by column-major offset and unique.
    Sparse { indices: Vec<usize>, values: Vec<f64> },
}

/// Order-`m`, dimension-`n` tensor meant to be column-stochastic along its
/// first index. Construction checks structure only; call
/// [`StochasticTensor::validate`] for the probabilistic invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTensor {
    order: usize,
    dim: usize,
    storage: Storage,
}

/// One failed invariant. Indices are 1-based, as in the tensor file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeEntry { index: Vec<usize>, value: f64 },
    ColumnSum { column: Vec<usize>, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry { index, value } => {
                write!(f, "negative entry {value} at {index:?}")
            }
            Violation::ColumnSum { column, sum } => {
                write!(f, "column (:, {}) sums to {sum}", join_indices(column))
            }
        }
    }
}

fn join_indices(idx: &[usize]) -> String {
    idx.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(first) => Err(Error::NotStochastic {
                count: self.violations.len(),
                first: first.to_string(),
            }),
        }
    }
}

fn checked_pow(n: usize, e: usize) -> Option<usize> {
    (0..e).try_fold(1usize, |acc, _| acc.checked_mul(n))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Decode a column-major offset into 0-based indices.
fn decode(mut offset: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut() {
        *slot = offset % n;
        offset /= n;
    }
}

fn encode(idx: &[usize], n: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * n + i)
}

/// Contract the `levels` slowest indices of a column-major dense block with
/// `x`, one index at a time.
fn contract_slowest(values: &[f64], n: usize, levels: usize, x: &[f64]) -> Vec<f64> {
    let mut cur: Vec<f64> = values.to_vec();
    for _ in 0..levels {
        let len = cur.len() / n;
        let mut next = vec![0.0; len];
        for (block, xj) in cur.chunks_exact(len).zip(x) {
            if *xj == 0.0 {
                continue;
            }
            for (o, v) in next.iter_mut().zip(block) {
                *o += v * xj;
            }
        }
        cur = next;
    }
    cur
}

impl StochasticTensor {
    /// Dense tensor from column-major values (`i1` fastest).
    pub fn from_dense(order: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(order, dim)?;
        let len = checked_pow(dim, order)
            .filter(|&l| l <= DENSE_LIMIT)
            .ok_or_else(|| {
                Error::Structural(format!(
                    "dense storage limited to {DENSE_LIMIT} entries (n = {dim}, m = {order})"
                ))
            })?;
        check_dim(len, values.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Structural(format!("non-finite entry {v}")));
        }
        Ok(StochasticTensor {
            order,
            dim,
            storage: Storage::Dense(values),
        })
    }

    /// Sparse tensor from 0-based index tuples. Zero values are dropped;
    /// duplicate index tuples are rejected.
    pub fn from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        Self::check_shape(order, dim)?;
        checked_pow(dim, order)
            .ok_or_else(|| Error::Structural("n^m overflows the index space".into()))?;
        let mut keyed: Vec<(usize, Vec<usize>, f64)> = Vec::new();
        for (idx, value) in entries {
            if idx.len() != order {
                return Err(Error::Structural(format!(
                    "entry {idx:?} has {} indices, expected {order}",
                    idx.len()
                )));
            }
            if idx.iter().any(|&i| i >= dim) {
                return Err(Error::IndexOutOfRange { index: idx, dim });
            }
            if !value.is_finite() {
                return Err(Error::Structural(format!("non-finite entry {value}")));
            }
            if value == 0.0 {
                continue;
            }
            keyed.push((encode(&idx, dim), idx, value));
        }
        keyed.sort_by_key(|(k, _, _)| *k);
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Structural(format!(
                "duplicate entry at {:?}",
                w[0].1.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        let mut indices = Vec::with_capacity(keyed.len() * order);
        let mut values = Vec::with_capacity(keyed.len());
        for (_, idx, v) in keyed {
            indices.extend(idx);
            values.push(v);
        }
        Ok(StochasticTensor {
            order,
            dim,
            storage: Storage::Sparse { indices, values },
        })
    }

    /// Tensor with every entry equal to `1/n`.
    pub fn uniform(order: usize, dim: usize) -> Result<Self> {
        Self::check_shape(order, dim)?;
        let len = checked_pow(dim, order).unwrap_or(usize::MAX);
        Self::from_dense(order, dim, vec![1.0 / dim as f64; len])
    }

    fn check_shape(order: usize, dim: usize) -> Result<()> {
        if order < 2 {
            return Err(Error::Structural(format!("order must be >= 2, got {order}")));
        }
        if dim < 1 {
            return Err(Error::Structural("dimension must be >= 1".into()));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of stored entries (all `n^m` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse { values, .. } => values.len(),
        }
    }

    /// Number of columns, `n^{m-1}`.
    pub fn columns(&self) -> usize {
        checked_pow(self.dim, self.order - 1).unwrap_or(usize::MAX)
    }

    /// Entry at 0-based indices.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order);
        let key = encode(idx, self.dim);
        match &self.storage {
            Storage::Dense(v) => v[key],
            Storage::Sparse { indices, values } => {
                let m = self.order;
                // entries are sorted by offset
                let (mut lo, mut hi) = (0usize, values.len());
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    let k = encode(&indices[mid * m..(mid + 1) * m], self.dim);
                    match k.cmp(&key) {
                        std::cmp::Ordering::Less => lo = mid + 1,
                        std::cmp::Ordering::Greater => hi = mid,
                        std::cmp::Ordering::Equal => return values[mid],
                    }
                }
                0.0
            }
        }
    }

    /// Visit every stored nonzero entry with its 0-based indices.
    pub fn for_each_entry(&self, mut f: impl FnMut(&[usize], f64)) {
        match &self.storage {
            Storage::Dense(values) => {
                let mut idx = vec![0usize; self.order];
                for (offset, &v) in values.iter().enumerate() {
                    if v != 0.0 {
                        decode(offset, self.dim, &mut idx);
                        f(&idx, v);
                    }
                }
            }
            Storage::Sparse { indices, values } => {
                for (idx, &v) in indices.chunks_exact(self.order).zip(values) {
                    f(idx, v);
                }
            }
        }
    }

    pub fn to_dense(&self) -> Result<StochasticTensor> {
        match &self.storage {
            Storage::Dense(_) => Ok(self.clone()),
            Storage::Sparse { .. } => {
                let len = checked_pow(self.dim, self.order)
                    .filter(|&l| l <= DENSE_LIMIT)
                    .ok_or_else(|| {
                        Error::Structural(format!(
                            "dense storage limited to {DENSE_LIMIT} entries"
                        ))
                    })?;
                let mut values = vec![0.0; len];
                self.for_each_entry(|idx, v| values[encode(idx, self.dim)] = v);
                Ok(StochasticTensor {
                    order: self.order,
                    dim: self.dim,
                    storage: Storage::Dense(values),
                })
            }
        }
    }

    pub fn to_sparse(&self) -> StochasticTensor {
        match &self.storage {
            Storage::Sparse { .. } => self.clone(),
            Storage::Dense(_) => {
                let m = self.order;
                let mut indices = Vec::new();
                let mut values = Vec::new();
                self.for_each_entry(|idx, v| {
                    indices.extend_from_slice(idx);
                    values.push(v);
                });
                debug_assert_eq!(indices.len(), values.len() * m);
                StochasticTensor {
                    order: m,
                    dim: self.dim,
                    storage: Storage::Sparse { indices, values },
                }
            }
        }
    }

    /// Sum of each column, indexed by the column-major offset of `(i2..im)`.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.dim;
        match &self.storage {
            Storage::Dense(values) => values.chunks_exact(n).map(|c| c.iter().sum()).collect(),
            Storage::Sparse { indices, values } => {
                let mut sums = vec![0.0; self.columns()];
                for (idx, v) in indices.chunks_exact(self.order).zip(values) {
                    sums[encode(&idx[1..], n)] += v;
                }
                sums
            }
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        self.for_each_entry(|idx, v| {
            if v < 0.0 {
                violations.push(Violation::NegativeEntry {
                    index: idx.iter().map(|i| i + 1).collect(),
                    value: v,
                });
            }
        });
        let mut tail = vec![0usize; self.order - 1];
        for (col, sum) in self.column_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                decode(col, self.dim, &mut tail);
                violations.push(Violation::ColumnSum {
                    column: tail.iter().map(|i| i + 1).collect(),
                    sum,
                });
            }
        }
        ValidationReport { violations }
    }

    /// Rescale every column to unit sum. Fails on negative entries and on
    /// columns with no mass.
    pub fn repaired(&self) -> Result<StochasticTensor> {
        let report = self.validate();
        if let Some(v @ Violation::NegativeEntry { .. }) = report
            .violations
            .iter()
            .find(|v| matches!(v, Violation::NegativeEntry { .. }))
        {
            return Err(Error::NotStochastic {
                count: 1,
                first: v.to_string(),
            });
        }
        let sums = self.column_sums();
        if let Some(col) = sums.iter().position(|s| *s <= 0.0) {
            let mut tail = vec![0usize; self.order - 1];
            decode(col, self.dim, &mut tail);
            return Err(Error::NotStochastic {
                count: 1,
                first: format!(
                    "column (:, {}) has no mass",
                    join_indices(&tail.iter().map(|i| i + 1).collect::<Vec<_>>())
                ),
            });
        }
        let n = self.dim;
        let storage = match &self.storage {
            Storage::Dense(values) => Storage::Dense(
                values
                    .chunks_exact(n)
                    .zip(&sums)
                    .flat_map(|(c, s)| c.iter().map(move |v| v / s))
                    .collect(),
            ),
            Storage::Sparse { indices, values } => Storage::Sparse {
                indices: indices.clone(),
                values: indices
                    .chunks_exact(self.order)
                    .zip(values)
                    .map(|(idx, v)| v / sums[encode(&idx[1..], n)])
                    .collect(),
            },
        };
        Ok(StochasticTensor {
            order: self.order,
            dim: self.dim,
            storage,
        })
    }

    /// `Px^{m-1}` for an arbitrary real vector, without normalization.
    pub fn contract(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        Ok(match &self.storage {
            Storage::Dense(values) => contract_slowest(values, n, self.order - 1, x),
            Storage::Sparse { indices, values } => {
                let mut out = vec![0.0; n];
                for (idx, v) in indices.chunks_exact(self.order).zip(values) {
                    let w = idx[1..].iter().fold(*v, |acc, &i| acc * x[i]);
                    out[idx[0]] += w;
                }
                out
            }
        })
    }

    /// `Px^{m-2}` for an arbitrary real vector.
    pub fn contract_matrix(&self, x: &[f64]) -> Result<ContractionMatrix> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        let values = match &self.storage {
            Storage::Dense(values) => contract_slowest(values, n, self.order - 2, x),
            Storage::Sparse { indices, values } => {
                let mut out = vec![0.0; n * n];
                for (idx, v) in indices.chunks_exact(self.order).zip(values) {
                    let w = idx[2..].iter().fold(*v, |acc, &i| acc * x[i]);
                    out[idx[0] + n * idx[1]] += w;
                }
                out
            }
        };
        ContractionMatrix::from_column_major(n, values)
    }

    /// `Px^{m-1}` as a probability vector. The result is renormalized: a
    /// column-sum error of `e` would otherwise be amplified by `m - 1` on
    /// every iteration of a power method.
    pub fn apply(&self, x: &ProbVector) -> Result<ProbVector> {
        let y = self.contract(x.as_slice())?;
        if y.iter().sum::<f64>() <= 0.0 {
            return Err(Error::NoPositiveMass);
        }
        Ok(ProbVector::normalized(y))
    }

    pub fn apply_matrix(&self, x: &ProbVector) -> Result<ContractionMatrix> {
        self.contract_matrix(x.as_slice())
    }

    /// `||Px^{m-1} - x||_1`, from the raw contraction.
    pub fn residual(&self, x: &ProbVector) -> Result<f64> {
        let y = self.contract(x.as_slice())?;
        Ok(l1_distance(&y, x.as_slice()))
    }

    /// Hessian of `f(x) = Px^m`: the sum over ordered pairs of distinct index
    /// positions `(a, b)` of the matrix obtained by fixing `i_a`, `i_b` and
    /// contracting every other position with `x`. Equals `m(m-1) Sx^{m-2}`
    /// for the fully symmetrized tensor `S`, and is symmetric.
    pub fn hessian(&self, x: &[f64]) -> Result<ContractionMatrix> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        let m = self.order;
        let mut h = vec![0.0; n * n];
        self.for_each_entry(|idx, v| {
            for a in 0..m {
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    let w = idx
                        .iter()
                        .enumerate()
                        .filter(|(c, _)| *c != a && *c != b)
                        .fold(v, |acc, (_, &i)| acc * x[i]);
                    h[idx[a] + n * idx[b]] += w;
                }
            }
        });
        ContractionMatrix::from_column_major(n, h)
    }
}
