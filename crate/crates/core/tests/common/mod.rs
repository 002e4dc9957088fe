//! Generators and brute-force oracles shared by the integration tests. None
//! of these reuse the library's contraction or enumeration code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use hopm::{condition_report, ProbVector, SolverConfig, StochasticTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All multi-indices of `order` positions over `0..dim`, first index fastest.
pub fn multi_indices(order: usize, dim: usize) -> Vec<Vec<usize>> {
    let total = dim.pow(order as u32);
    (0..total)
        .map(|mut k| {
            (0..order)
                .map(|_| {
                    let i = k % dim;
                    k /= dim;
                    i
                })
                .collect()
        })
        .collect()
}

/// `(Px^{m-1})_i` by looping over every entry through `get`.
pub fn brute_contract(t: &StochasticTensor, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.dim()];
    for idx in multi_indices(t.order(), t.dim()) {
        let mut w = t.get(&idx);
        for &i in &idx[1..] {
            w *= x[i];
        }
        out[idx[0]] += w;
    }
    out
}

/// `(Px^{m-2})_{ij}` by looping over every entry, as `rows[i][j]`.
pub fn brute_contract_matrix(t: &StochasticTensor, x: &[f64]) -> Vec<Vec<f64>> {
    let n = t.dim();
    let mut out = vec![vec![0.0; n]; n];
    for idx in multi_indices(t.order(), n) {
        let mut w = t.get(&idx);
        for &i in &idx[2..] {
            w *= x[i];
        }
        out[idx[0]][idx[1]] += w;
    }
    out
}

/// `delta_m` over every nonempty proper subset `S` (not just half of them)
/// and every tail tuple.
pub fn brute_delta(t: &StochasticTensor) -> f64 {
    let n = t.dim();
    let tails = multi_indices(t.order() - 1, n);
    let mass = |members: &[bool], in_set: bool| -> f64 {
        tails
            .iter()
            .map(|tail| {
                let mut s = 0.0;
                for i in 0..n {
                    if members[i] == in_set {
                        let mut idx = vec![i];
                        idx.extend_from_slice(tail);
                        s += t.get(&idx);
                    }
                }
                s
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = f64::INFINITY;
    for mask in 1..(1usize << n) - 1 {
        let members: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        best = best.min(mass(&members, false) + mass(&members, true));
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform-ish random point of the simplex.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> ProbVector {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    ProbVector::new(v.into_iter().map(|a| a / s).collect()).unwrap()
}

/// Dense column-stochastic tensor with entries zeroed at rate `1 - density`
/// (each column keeps one nonzero).
pub fn random_tensor(rng: &mut impl Rng, order: usize, dim: usize, density: f64) -> StochasticTensor {
    let cols = dim.pow(order as u32 - 1);
    let mut values = Vec::with_capacity(cols * dim);
    for _ in 0..cols {
        let mut col: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.random::<f64>() < density {
                    rng.random::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        let keep = rng.random_range(0..dim);
        if col[keep] == 0.0 {
            col[keep] = 0.5;
        }
        let s: f64 = col.iter().sum();
        values.extend(col.into_iter().map(|v| v / s));
    }
    StochasticTensor::from_dense(order, dim, values).unwrap()
}

/// `lambda * uniform + (1 - lambda) * random`; `delta_m >= lambda`.
pub fn mixed_tensor(rng: &mut impl Rng, order: usize, dim: usize, lambda: f64) -> StochasticTensor {
    let r = random_tensor(rng, order, dim, 1.0);
    let u = 1.0 / dim as f64;
    let values: Vec<f64> = multi_indices(order, dim)
        .iter()
        .map(|idx| lambda * u + (1.0 - lambda) * r.get(idx))
        .collect();
    StochasticTensor::from_dense(order, dim, values).unwrap().repaired().unwrap()
}

/// A random tensor satisfying the uniqueness condition.
pub fn unique_tensor(rng: &mut impl Rng, order: usize, dim: usize) -> StochasticTensor {
    let floor = (order as f64 - 2.0) / (order as f64 - 1.0);
    loop {
        let lambda = rng.random_range(floor + 0.05..1.0);
        let t = mixed_tensor(rng, order, dim, lambda);
        if condition_report(&t).unwrap().uniqueness_holds {
            return t;
        }
    }
}

/// Fixed point to step norm 1e-14.
pub fn reference_fixed_point(t: &StochasticTensor) -> ProbVector {
    let cfg = SolverConfig::new(hopm::Method::Hopm)
        .with_tol(1e-14)
        .with_max_iter(10_000);
    let r = hopm::solve(t, &cfg).unwrap();
    assert!(r.converged, "reference solve did not converge");
    r.final_x
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Column-stochastic 3x3 matrix with spectrum `{1, a, b}`, drawn as
/// `pi 1^T + a u l^T + b w r^T` with `1^T u = 1^T w = 0`, rejected until
/// every entry is nonnegative. Returned column-major with its eigenvector.
pub fn markov_with_spectrum(rng: &mut impl Rng, a: f64, b: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    use nalgebra::{Matrix3, Vector3};
    for _ in 0..10_000 {
        let pi = random_simplex(rng, 3);
        let pi = Vector3::from_column_slice(pi.as_slice());
        let mut zero_sum = || {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            v.add_scalar(-v.sum() / 3.0)
        };
        let s = Matrix3::from_columns(&[pi, zero_sum(), zero_sum()]);
        let Some(s_inv) = s.try_inverse() else {
            continue;
        };
        let d = Matrix3::from_diagonal(&Vector3::new(1.0, a, b));
        let m = s * d * s_inv;
        if m.iter().all(|v| *v >= 0.0) {
            return Some((m.as_slice().to_vec(), pi.as_slice().to_vec()));
        }
    }
    None
}

/// Principal eigenvector of a column-stochastic matrix from the SVD null
/// vector of `B - I`.
pub fn eigen_oracle(b: &[f64]) -> Vec<f64> {
    let m = nalgebra::Matrix3::from_column_slice(b) - nalgebra::Matrix3::identity();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|a| a / s).collect()
}

pub fn power_iterates(b: &[f64], x0: &ProbVector, count: usize) -> Vec<ProbVector> {
    let m = nalgebra::Matrix3::from_column_slice(b);
    let mut out = vec![x0.clone()];
    for _ in 0..count {
        let y = m * nalgebra::Vector3::from_column_slice(out.last().unwrap().as_slice());
        out.push(ProbVector::new(y.as_slice().to_vec()).unwrap());
    }
    out
}

pub struct MarkovCase {
    pub matrix: Vec<f64>,
    pub spectrum: (f64, f64),
    /// `x0, Bx0, B^2x0, B^3x0`.
    pub iterates: Vec<ProbVector>,
    pub oracle: Vec<f64>,
}

/// `count` seeded 3x3 Markov matrices with spectrum `{1, a, b}`, `a != b`,
/// and three power iterates from a random start.
pub fn markov_cases(seed: u64, count: usize) -> Vec<MarkovCase> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a: f64 = r.random_range(-0.6..0.9);
        let b: f64 = r.random_range(-0.6..0.9);
        // trace >= 0 forces a + b >= -1
        if (a - b).abs() < 0.05 || a + b < -0.9 {
            continue;
        }
        let Some((matrix, _)) = markov_with_spectrum(&mut r, a, b) else {
            continue;
        };
        let oracle = eigen_oracle(&matrix);
        let x0 = random_simplex(&mut r, 3);
        let iterates = power_iterates(&matrix, &x0, 3);
        out.push(MarkovCase {
            matrix,
            spectrum: (a, b),
            iterates,
            oracle,
        });
    }
    out
}
