//! Four transition tensors estimated from DNA sequence data, with the
//! per-method parameters and reference iteration counts they ship with.
//!
//! The values are kept as printed (four decimals), one `n x n` slice
//! `P(:, :, k..)` at a time, rows indexed by `i1` and columns by `i2`;
//! slices are listed with the third index varying fastest. Columns are
//! renormalized on load.

use crate::error::Result;
use crate::solvers::{Method, SolverConfig};
use crate::tensor::StochasticTensor;

const TENSOR_I: [[[f64; 3]; 3]; 3] = [
    [[0.6000, 0.4083, 0.4935], [0.2000, 0.2568, 0.2426], [0.2000, 0.3349, 0.2639]],
    [[0.5217, 0.3300, 0.4152], [0.2232, 0.2800, 0.2658], [0.2551, 0.3900, 0.3190]],
    [[0.5565, 0.3648, 0.4500], [0.2174, 0.2742, 0.2600], [0.2261, 0.3610, 0.2900]],
];

const TENSOR_II: [[[f64; 3]; 3]; 3] = [
    [[0.5200, 0.2986, 0.4462], [0.2700, 0.3930, 0.3192], [0.2100, 0.3084, 0.2346]],
    [[0.6514, 0.4300, 0.5776], [0.1970, 0.3200, 0.2462], [0.1516, 0.2500, 0.1762]],
    [[0.5638, 0.3424, 0.4900], [0.2408, 0.3638, 0.2900], [0.1954, 0.2938, 0.2200]],
];

const TENSOR_III: [[[f64; 4]; 4]; 4] = [
    [
        [0.2091, 0.2834, 0.2194, 0.1830],
        [0.3371, 0.3997, 0.3219, 0.3377],
        [0.3265, 0.0560, 0.3119, 0.2961],
        [0.1723, 0.2608, 0.1468, 0.1832],
    ],
    [
        [0.1952, 0.2695, 0.2055, 0.1690],
        [0.3336, 0.3962, 0.3184, 0.3342],
        [0.2954, 0.0249, 0.2808, 0.2650],
        [0.1758, 0.3094, 0.1953, 0.2318],
    ],
    [
        [0.3145, 0.3887, 0.3248, 0.2883],
        [0.0603, 0.1203, 0.0451, 0.0609],
        [0.2293, 0.3628, 0.2487, 0.2852],
        [0.2293, 0.3628, 0.2487, 0.2852],
    ],
    [
        [0.1685, 0.2429, 0.1789, 0.1425],
        [0.3553, 0.4180, 0.3402, 0.3559],
        [0.3189, 0.0484, 0.3043, 0.2885],
        [0.1571, 0.2907, 0.1766, 0.2131],
    ],
];

/// Slices `(1,1), (2,1), (3,1), (1,2), .., (3,3)` of an order-4 tensor.
const TENSOR_IV: [[[f64; 3]; 3]; 9] = [
    [[0.3721, 0.2600, 0.4157], [0.4477, 0.5000, 0.4270], [0.1802, 0.2400, 0.1573]],
    [[0.3692, 0.2673, 0.3175], [0.4667, 0.5594, 0.5079], [0.1641, 0.1733, 0.1746]],
    [[0.4227, 0.2958, 0.2353], [0.4124, 0.5563, 0.5588], [0.1649, 0.1479, 0.2059]],
    [[0.3178, 0.2632, 0.3194], [0.5212, 0.6228, 0.5833], [0.1610, 0.1140, 0.0972]],
    [[0.2836, 0.2636, 0.3042], [0.5012, 0.6000, 0.5250], [0.2152, 0.1364, 0.1708]],
    [[0.3382, 0.2396, 0.3766], [0.5147, 0.6406, 0.4935], [0.1471, 0.1198, 0.1299]],
    [[0.3204, 0.2985, 0.3500], [0.4854, 0.5000, 0.5000], [0.1942, 0.2015, 0.1500]],
    [[0.4068, 0.2816, 0.3594], [0.3898, 0.5143, 0.4219], [0.2034, 0.2041, 0.2188]],
    [[0.3721, 0.3529, 0.3000], [0.5349, 0.3971, 0.5500], [0.0930, 0.2500, 0.1500]],
];

/// Printing errors in tensor (iii), as `(i1, i2, i3, value)` with 1-based
/// indices:
/// - `P(4,1,1)` is printed as 0.1723, a transposition of 0.1273 (its
///   column sums to 1.045 otherwise, and 0.1273 continues the
///   slice-to-slice offsets of that row).
/// - Row 3 of `P(:,:,3)` is printed as a copy of row 4, leaving those
///   columns summing to 0.83..1.23; it is restored as the complement of
///   the other three rows.
pub const TENSOR_III_CORRECTIONS: [(usize, usize, usize, f64); 5] = [
    (4, 1, 1, 0.1273),
    (3, 1, 3, 0.3959),
    (3, 2, 3, 0.1282),
    (3, 3, 3, 0.3814),
    (3, 4, 3, 0.3656),
];

fn flatten<const N: usize, const S: usize>(slices: &[[[f64; N]; N]; S]) -> Vec<f64> {
    let mut out = Vec::with_capacity(N * N * S);
    for slice in slices {
        for i2 in 0..N {
            for row in slice {
                out.push(row[i2]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureName {
    I,
    II,
    III,
    IV,
}

impl FixtureName {
    pub const ALL: [FixtureName; 4] = [FixtureName::I, FixtureName::II, FixtureName::III, FixtureName::IV];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureName::I => "i",
            FixtureName::II => "ii",
            FixtureName::III => "iii",
            FixtureName::IV => "iv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim_start_matches('(').trim_end_matches(')');
        FixtureName::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
    }
}

/// Reference `(IT, RR)` for one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expected {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: FixtureName,
    /// Values as printed (with corrections for tensor (iii)), not normalized.
    pub printed: StochasticTensor,
    /// Columns renormalized.
    pub tensor: StochasticTensor,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
    expected: [Expected; 6],
}

const fn exp(iterations: usize, residual: f64) -> Expected {
    Expected {
        iterations,
        residual,
    }
}

impl Fixture {
    pub fn load(name: FixtureName) -> Result<Fixture> {
        let (order, dim, values, beta, eta, expected) = match name {
            FixtureName::I => (
                3,
                3,
                flatten(&TENSOR_I),
                0.045,
                0.2,
                [exp(15, 2.76e-11), exp(14, 9.06e-11), exp(16, 2.90e-11), exp(9, 6.21e-11), exp(10, 3.82e-11), exp(5, 1.11e-16)],
            ),
            FixtureName::II => (
                3,
                3,
                flatten(&TENSOR_II),
                0.0045,
                0.07,
                [exp(9, 6.58e-11), exp(9, 7.58e-12), exp(15, 3.52e-11), exp(7, 9.24e-11), exp(6, 3.82e-11), exp(5, 5.55e-17)],
            ),
            FixtureName::III => {
                let mut values = flatten(&TENSOR_III);
                for (i1, i2, i3, v) in TENSOR_III_CORRECTIONS {
                    values[(i1 - 1) + 4 * (i2 - 1) + 16 * (i3 - 1)] = v;
                }
                (
                    3,
                    4,
                    values,
                    0.1,
                    0.1,
                    [exp(21, 3.97e-11), exp(27, 5.98e-11), exp(29, 9.08e-11), exp(17, 7.76e-11), exp(19, 3.82e-11), exp(13, 1.26e-12)],
                )
            }
            FixtureName::IV => (
                4,
                3,
                flatten(&TENSOR_IV),
                0.03,
                0.2,
                [exp(13, 3.42e-11), exp(12, 9.52e-11), exp(16, 4.12e-11), exp(10, 8.25e-11), exp(9, 3.82e-11), exp(8, 3.95e-11)],
            ),
        };
        let printed = StochasticTensor::from_dense(order, dim, values)?;
        let tensor = printed.repaired()?;
        Ok(Fixture {
            name,
            printed,
            tensor,
            beta,
            eta,
            gamma: 1.2,
            expected,
        })
    }

    pub fn all() -> Result<Vec<Fixture>> {
        FixtureName::ALL.into_iter().map(Fixture::load).collect()
    }

    /// Values exactly as printed, before the tensor (iii) corrections.
    pub fn printed_uncorrected(name: FixtureName) -> Result<StochasticTensor> {
        match name {
            FixtureName::III => StochasticTensor::from_dense(3, 4, flatten(&TENSOR_III)),
            other => Ok(Fixture::load(other)?.printed),
        }
    }

    pub fn expected(&self, method: Method) -> Expected {
        let k = Method::ALL.iter().position(|m| *m == method).expect("method listed");
        self.expected[k]
    }

    /// Solver configuration with this fixture's parameters.
    pub fn config(&self, method: Method) -> SolverConfig {
        let mut cfg = SolverConfig::new(method).with_gamma(self.gamma);
        match method {
            Method::Hopmm1 => cfg.beta = Some(self.beta),
            Method::Hopmm2 => cfg.eta = Some(self.eta),
            _ => {}
        }
        cfg
    }

    /// Human-readable parameter annotation, e.g. `beta=0.045`.
    pub fn params(&self, method: Method) -> String {
        match method {
            Method::Rhopm => format!("gamma={}", self.gamma),
            Method::Hopmm1 => format!("beta={}", self.beta),
            Method::Hopmm2 => format!("eta={}", self.eta),
            Method::Geap => "tau=1e-6".to_string(),
            _ => String::new(),
        }
    }
}
