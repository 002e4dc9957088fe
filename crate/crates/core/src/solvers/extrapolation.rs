//! Quadratic extrapolation from four consecutive iterates.
//!
//! If `x_{k-2} = B x_{k-3}`, `x_{k-1} = B x_{k-2}`, `x_k = B x_{k-1}` for a
//! Markov matrix `B` whose minimal polynomial `p(t) = g0 + g1 t + g2 t^2 + t^3`
//! has a simple root at 1, then with `y_j = x_j - x_{k-3}` the coefficients
//! solve `g1 y_{k-2} + g2 y_{k-1} = -y_k`. Writing `p(t) = (t - 1) q(t)` with
//! `q(t) = b0 + b1 t + b2 t^2`, the vector `q(B) x_{k-2}` lies in the
//! eigenspace of eigenvalue 1, so
//!
//! ```text
//! x^ = (b0 x_{k-2} + b1 x_{k-1} + b2 x_k) / (b0 + b1 + b2)
//! ```
//!
//! is the principal eigenvector. For a general iteration it is an estimate.

use serde::{Deserialize, Serialize};

use crate::tensor::{l1_norm, proj, ProbVector};

/// Below this, a residual, a Gram-Schmidt column norm or the weight sum is
/// treated as zero and the extrapolation is skipped.
pub const DEGENERACY_TOL: f64 = 1e-13;

/// Coefficients recovered by one extrapolation. `gamma3` is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationCoeffs {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Weight on `x_k`.
    pub alpha1: f64,
    /// Weight on `x_{k-1}`.
    pub alpha2: f64,
    /// Weight on `x_{k-2}`; `1 - alpha1 - alpha2`.
    pub alpha3: f64,
}

impl ExtrapolationCoeffs {
    pub fn from_gammas(gamma1: f64, gamma2: f64) -> Option<Self> {
        let gamma3 = 1.0;
        let beta0 = gamma1 + gamma2 + gamma3;
        let beta1 = gamma2 + gamma3;
        let beta2 = gamma3;
        let total = beta0 + beta1 + beta2;
        if !(total.abs() >= DEGENERACY_TOL) {
            return None;
        }
        let alpha1 = beta2 / total;
        let alpha2 = beta1 / total;
        Some(ExtrapolationCoeffs {
            gamma1,
            gamma2,
            gamma3,
            beta0,
            beta1,
            beta2,
            alpha1,
            alpha2,
            alpha3: 1.0 - alpha1 - alpha2,
        })
    }

    /// All three combination weights are nonnegative.
    pub fn is_convex(&self) -> bool {
        self.alpha1 >= 0.0 && self.alpha2 >= 0.0 && self.alpha3 >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationSkip {
    /// `||x_k - x_{k-3}||_1` is negligible.
    Stationary,
    /// `Y = [y_{k-2} y_{k-1}]` has (numerically) dependent columns.
    RankDeficient,
    /// `|b0 + b1 + b2|` is negligible.
    DegenerateWeights,
    /// The combination has no positive component.
    NoPositiveMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    /// `proj` of the combination.
    pub x: ProbVector,
    /// The combination before projection.
    pub raw: Vec<f64>,
    pub coeffs: ExtrapolationCoeffs,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares solution of `[c1 c2] g = rhs` through a reduced QR
/// factorization by two steps of Gram-Schmidt and back substitution.
/// `None` when a column norm falls below [`DEGENERACY_TOL`].
pub fn gram_schmidt_lstsq(c1: &[f64], c2: &[f64], rhs: &[f64]) -> Option<(f64, f64)> {
    let r11 = dot(c1, c1).sqrt();
    if !(r11 >= DEGENERACY_TOL) {
        return None;
    }
    let q1: Vec<f64> = c1.iter().map(|v| v / r11).collect();
    let r12 = dot(&q1, c2);
    let v: Vec<f64> = c2.iter().zip(&q1).map(|(a, q)| a - r12 * q).collect();
    let r22 = dot(&v, &v).sqrt();
    if !(r22 >= DEGENERACY_TOL) {
        return None;
    }
    let q2: Vec<f64> = v.iter().map(|a| a / r22).collect();
    let b1 = dot(&q1, rhs);
    let b2 = dot(&q2, rhs);
    let g2 = b2 / r22;
    let g1 = (b1 - r12 * g2) / r11;
    Some((g1, g2))
}

/// Combine `x_{k-3}, .., x_k` into an estimate of the fixed point.
///
/// # Panics
/// If the four iterates do not share one dimension.
pub fn quadratic_extrapolation(
    x_km3: &ProbVector,
    x_km2: &ProbVector,
    x_km1: &ProbVector,
    x_k: &ProbVector,
) -> Result<Extrapolation, ExtrapolationSkip> {
    let n = x_k.len();
    assert!(
        x_km3.len() == n && x_km2.len() == n && x_km1.len() == n,
        "extrapolation iterates must share one dimension"
    );
    let base = x_km3.as_slice();
    let diff = |x: &ProbVector| -> Vec<f64> {
        x.as_slice().iter().zip(base).map(|(a, b)| a - b).collect()
    };
    let y_km2 = diff(x_km2);
    let y_km1 = diff(x_km1);
    let y_k = diff(x_k);
    if !(l1_norm(&y_k) >= DEGENERACY_TOL) {
        return Err(ExtrapolationSkip::Stationary);
    }
    let neg_y_k: Vec<f64> = y_k.iter().map(|v| -v).collect();
    let (gamma1, gamma2) =
        gram_schmidt_lstsq(&y_km2, &y_km1, &neg_y_k).ok_or(ExtrapolationSkip::RankDeficient)?;
    let coeffs = ExtrapolationCoeffs::from_gammas(gamma1, gamma2)
        .ok_or(ExtrapolationSkip::DegenerateWeights)?;
    let raw: Vec<f64> = x_km2
        .as_slice()
        .iter()
        .zip(x_km1.as_slice())
        .zip(x_k.as_slice())
        .map(|((a, b), c)| coeffs.alpha3 * a + coeffs.alpha2 * b + coeffs.alpha1 * c)
        .collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(ExtrapolationSkip::DegenerateWeights);
    }
    let x = proj(&raw).map_err(|_| ExtrapolationSkip::NoPositiveMass)?;
    Ok(Extrapolation { x, raw, coeffs })
}
