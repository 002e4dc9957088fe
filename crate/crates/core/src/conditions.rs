//! Structural constants of a transition tensor that decide uniqueness of the
//! stationary vector and the contraction rate of the power-type solvers.
//!
//! For a subset `S` of states and its complement `S'`,
//!
//! ```text
//! delta_m = min_S [ min_cols sum_{i in S'} p(i, cols) + min_cols sum_{i in S} p(i, cols) ]
//! eta_m   = (1 - delta_m)(m - 1)
//! ```
//!
//! The stationary vector is unique when `delta_m > (m-2)/(m-1)`, and then
//! `||P(x^{m-1} - y^{m-1})||_1 <= eta_m ||x - y||_1` for probability vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::StochasticTensor;

/// Largest dimension accepted by the exact subset enumeration.
pub const MAX_EXACT_DIM: usize = 20;

/// Upper bound on `2^(n-1) * n^(m-1) * n` additions for [`delta_m`].
pub const MAX_EXACT_WORK: u128 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub order: usize,
    pub dim: usize,
    pub delta_m: f64,
    pub eta_m: f64,
    /// `delta_m > (m-2)/(m-1)`.
    pub uniqueness_holds: bool,
    /// Momentum bound `eta < (1 - eta_m)/(1 + eta_m)` for HOPMM-II, or 0.
    ///
    /// Uses `eta_m`, the actual contraction factor, not `delta_m`.
    pub hopmm2_eta_max: f64,
    /// Momentum bound `beta < 1 - eta_m` for HOPMM-I, or 0.
    pub hopmm1_beta_max: f64,
    /// No nonempty proper subset `I` with `p(i1, ..) = 0` for all `i1 in I`
    /// and all tails outside `I`. `None` when `n` is too large to enumerate.
    pub irreducible: Option<bool>,
}

fn check_size(t: &StochasticTensor) -> Result<()> {
    let (n, m) = (t.dim(), t.order());
    let too_large = Error::TooLarge { order: m, dim: n };
    if n > MAX_EXACT_DIM {
        return Err(too_large);
    }
    let cols = (n as u128)
        .checked_pow((m - 1) as u32)
        .ok_or(Error::TooLarge { order: m, dim: n })?;
    let work = (1u128 << n.saturating_sub(1)) * cols * n as u128;
    if work > MAX_EXACT_WORK {
        return Err(too_large);
    }
    Ok(())
}

/// Columns of the tensor as dense `n`-vectors, in column-major tail order.
fn dense_columns(t: &StochasticTensor) -> Vec<Vec<f64>> {
    let n = t.dim();
    let mut cols = vec![vec![0.0; n]; t.columns()];
    t.for_each_entry(|idx, v| {
        let tail = idx[1..].iter().rev().fold(0, |acc, &i| acc * n + i);
        cols[tail][idx[0]] = v;
    });
    cols
}

/// Exact `delta_m` by enumerating subsets and columns.
///
/// `S` and `S'` give the same bracket, so only subsets not containing the
/// last state are visited. Both masses are summed in increasing state order.
/// For `n = 1` there is no nonempty proper subset and the value is 1.
pub fn delta_m(t: &StochasticTensor) -> Result<f64> {
    check_size(t)?;
    let n = t.dim();
    if n == 1 {
        return Ok(1.0);
    }
    let cols = dense_columns(t);
    let mut best = f64::INFINITY;
    // nonempty subsets of {0, .., n-2}; the last state always lies in S'
    for mask in 1u32..(1u32 << (n - 1)) {
        let mut min_in = f64::INFINITY;
        let mut min_out = f64::INFINITY;
        for col in &cols {
            let mut inside = 0.0;
            let mut outside = 0.0;
            for (i, p) in col.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    inside += p;
                } else {
                    outside += p;
                }
            }
            min_in = min_in.min(inside);
            min_out = min_out.min(outside);
        }
        best = best.min(min_out + min_in);
    }
    Ok(best)
}

/// Irreducibility test by subset enumeration (`n <= 20`).
pub fn is_irreducible(t: &StochasticTensor) -> Result<bool> {
    check_size(t)?;
    let n = t.dim();
    if n == 1 {
        return Ok(true);
    }
    let full: u32 = (1 << n) - 1;
    // a subset I is closed when no stored entry with i1 in I has all tail
    // indices outside I
    let mut entries: Vec<(u32, u32)> = Vec::new();
    t.for_each_entry(|idx, v| {
        if v != 0.0 {
            let tail = idx[1..].iter().fold(0u32, |acc, &i| acc | (1 << i));
            entries.push((1 << idx[0], tail));
        }
    });
    for mask in 1..full {
        let reducible = entries
            .iter()
            .all(|&(head, tail)| head & mask == 0 || tail & mask != 0);
        if reducible {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn condition_report(t: &StochasticTensor) -> Result<ConditionReport> {
    let delta = delta_m(t)?;
    let m = t.order();
    let eta_m = (1.0 - delta) * (m as f64 - 1.0);
    let threshold = (m as f64 - 2.0) / (m as f64 - 1.0);
    let positive = |v: f64| if v > 0.0 { v } else { 0.0 };
    Ok(ConditionReport {
        order: m,
        dim: t.dim(),
        delta_m: delta,
        eta_m,
        uniqueness_holds: delta > threshold,
        hopmm2_eta_max: positive((1.0 - eta_m) / (1.0 + eta_m)),
        hopmm1_beta_max: positive(1.0 - eta_m),
        irreducible: is_irreducible(t).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_matrix(n: usize) -> StochasticTensor {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i + n * i] = 1.0;
        }
        StochasticTensor::from_dense(2, n, v).unwrap()
    }

    #[test]
    fn uniform_tensor() {
        let t = StochasticTensor::uniform(3, 2).unwrap();
        assert_eq!(delta_m(&t).unwrap(), 1.0);
        let r = condition_report(&t).unwrap();
        assert_eq!(r.eta_m, 0.0);
        assert!(r.uniqueness_holds);
        assert_eq!(r.hopmm1_beta_max, 1.0);
        assert_eq!(r.hopmm2_eta_max, 1.0);
        assert_eq!(r.irreducible, Some(true));
    }

    #[test]
    fn identity_matrix_has_zero_delta() {
        let t = identity_matrix(2);
        assert_eq!(delta_m(&t).unwrap(), 0.0);
        let r = condition_report(&t).unwrap();
        assert_eq!(r.eta_m, 1.0);
        assert!(!r.uniqueness_holds);
        assert_eq!(r.hopmm1_beta_max, 0.0);
        assert_eq!(r.hopmm2_eta_max, 0.0);
        assert_eq!(r.irreducible, Some(false));
    }

    #[test]
    fn size_guard() {
        let t = StochasticTensor::from_entries(3, 21, vec![]).unwrap();
        assert!(matches!(delta_m(&t), Err(Error::TooLarge { .. })));
        assert!(condition_report(&t).is_err());
        let t = StochasticTensor::from_entries(6, 18, vec![]).unwrap();
        assert!(matches!(delta_m(&t), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn single_state() {
        let t = StochasticTensor::uniform(3, 1).unwrap();
        assert_eq!(delta_m(&t).unwrap(), 1.0);
        assert!(is_irreducible(&t).unwrap());
    }

    #[test]
    fn cycle_is_irreducible_but_block_is_not() {
        // 0 -> 1 -> 0
        let swap = StochasticTensor::from_dense(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(is_irreducible(&swap).unwrap());
        assert_eq!(delta_m(&swap).unwrap(), 0.0);
    }
}
