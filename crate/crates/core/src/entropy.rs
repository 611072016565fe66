//! Von Neumann and partition entropies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::states::DensityState;

/// Eigenvalues within this distance of `[0, 1]` are clipped.
pub const SPECTRUM_TOL: f64 = 1e-12;
pub const WEIGHT_TOL: f64 = 1e-12;
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    E,
    Two,
}

impl LogBase {
    fn ln_scale(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

fn shannon(p: &[f64], base: LogBase) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    (h / base.ln_scale()).max(0.0)
}

/// `−Σ λ log λ` over the spectrum of `ρ`, with `0 log 0 = 0`.
pub fn vn_entropy(rho: &DensityState, base: LogBase) -> Result<f64> {
    let mut spectrum = rho.eigenvalues();
    for x in spectrum.iter_mut() {
        if *x < -SPECTRUM_TOL || *x > 1.0 + SPECTRUM_TOL {
            return Err(Error::SpectrumOutOfRange { value: *x });
        }
        *x = x.clamp(0.0, 1.0);
    }
    Ok(shannon(&spectrum, base))
}

/// Weights `p_1, …, p_n` of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PartitionWeights(Vec<f64>);

impl TryFrom<Vec<f64>> for PartitionWeights {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<PartitionWeights> for Vec<f64> {
    fn from(w: PartitionWeights) -> Self {
        w.0
    }
}

impl PartitionWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("a partition needs at least one cell".into()));
        }
        if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidArgument(format!("weight {x} is not a nonnegative real")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("a partition needs at least one cell".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    fn is_uniform(&self) -> bool {
        self.0.iter().all(|&x| x == self.0[0])
    }
}

/// `−Σ p_j log p_j`; uniform weights return `log n` exactly.
pub fn partition_entropy(w: &PartitionWeights, base: LogBase) -> f64 {
    if w.is_uniform() {
        return (w.n() as f64).ln() / base.ln_scale();
    }
    shannon(w.weights(), base)
}

/// `ρ = (1/n) Σ_k |y_k⟩⟨y_k|` for orthonormal `y_1, …, y_n`, `n ≤ d`.
pub fn no_hair_state(vectors: &[Vec<C64>]) -> Result<DensityState> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidArgument("need at least one vector".into()));
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidArgument("vectors must be non-empty".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: v.len(),
        });
    }
    let n = vectors.len();
    if n > d {
        return Err(Error::InvalidArgument(format!(
            "{n} orthonormal vectors cannot fit in dimension {d}"
        )));
    }
    let mut deviation = 0.0_f64;
    for (a, va) in vectors.iter().enumerate() {
        for (b, vb) in vectors.iter().enumerate() {
            let g: C64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            deviation = deviation.max((g - want).norm());
        }
    }
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    let rho = vectors
        .iter()
        .map(|v| ComplexMatrix::outer(v))
        .reduce(|a, b| a + b)
        .expect("n ≥ 1")
        .scale_real(1.0 / n as f64);
    DensityState::new(rho)
}
