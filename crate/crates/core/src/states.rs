//! Density-matrix states and the dual action of represented groups on them.
//!
//! A state `ρ` pairs with observables as `f(A) = tr(ρA)`. The pullback by a
//! group element is `ν(g)ρ = U(g)^† ρ U(g)`, which is the state satisfying
//! `tr(ν(g)ρ · A) = tr(ρ · α_g(A))`. Distances between states are measured in
//! trace norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{
    haar_quadrature_su2, haar_quadrature_u1, GroupDescriptor, GroupElement, GroupKind, UnitaryRep,
};
use crate::matrix::{c, eig_hermitian, ComplexMatrix, C64};
use crate::rng::{complex_normal, LabRng};

/// Tolerance for the Hermitian, trace and positivity checks on states.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalues below `−CLIP_TOL` are clipped during positivity repair.
pub const CLIP_TOL: f64 = 1e-12;

/// Largest positivity repair accepted after averaging.
pub const MAX_REPAIR: f64 = 1e-10;

/// Default separating tolerance, relative to the largest eigenvalue.
pub const SEPARATING_TOL: f64 = 1e-10;

/// Fresh Haar samples used to report the invariance residual of an average.
pub const INVARIANCE_PROBES: usize = 32;

const PROBE_SEED: u64 = 0x00C0_FFEE_5EED;

/// Wire form `{"d": n, "rho": [[[re, im], …], …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDoc {
    pub d: usize,
    pub rho: ComplexMatrix,
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDoc", into = "StateDoc")]
pub struct DensityState {
    rho: ComplexMatrix,
}

impl TryFrom<StateDoc> for DensityState {
    type Error = Error;

    fn try_from(doc: StateDoc) -> Result<Self> {
        if doc.rho.dim() != doc.d {
            return Err(Error::DimensionMismatch {
                expected: doc.d,
                actual: doc.rho.dim(),
            });
        }
        DensityState::new(doc.rho)
    }
}

impl From<DensityState> for StateDoc {
    fn from(s: DensityState) -> Self {
        StateDoc {
            d: s.d(),
            rho: s.rho,
        }
    }
}

impl DensityState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        let herm = (&rho - &rho.adjoint()).frobenius_norm();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: ‖ρ − ρ†‖_F = {herm:.3e}"
            )));
        }
        let tr = rho.trace();
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let rho = rho.hermitian_part();
        let min = eig_hermitian(&rho)?.values[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite: minimum eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { rho })
    }

    /// Wraps a matrix already known to be a state up to rounding.
    pub(crate) fn from_valid(rho: ComplexMatrix) -> Self {
        Self {
            rho: rho.hermitian_part(),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_valid(ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 || !norm2.is_finite() {
            return Err(Error::InvalidState("pure state needs a non-zero vector".into()));
        }
        Ok(Self::from_valid(ComplexMatrix::outer(v).scale_real(1.0 / norm2)))
    }

    /// Basis state `|e_k><e_k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        Self::from_valid(ComplexMatrix::unit(d, k, k))
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let diag: Vec<C64> = p.iter().map(|&x| c(x, 0.0)).collect();
        Self::new(ComplexMatrix::diagonal(&diag))
    }

    /// Random full-rank state `G G^† / tr(G G^†)` from a complex Ginibre `G`.
    pub fn random(d: usize, rng: &mut LabRng) -> Self {
        let g = ComplexMatrix::from_fn(d, |_, _| complex_normal(rng));
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        Self::from_valid(m.scale_real(1.0 / tr))
    }

    /// Random pure state from a complex Gaussian vector.
    pub fn random_pure(d: usize, rng: &mut LabRng) -> Self {
        let v: Vec<C64> = (0..d).map(|_| complex_normal(rng)).collect();
        Self::pure(&v).expect("Gaussian vector is non-zero")
    }

    pub fn d(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.rho)
            .expect("states are Hermitian")
            .values
    }

    /// `λ·self + (1 − λ)·other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        check_dim(self.d(), other.d())?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0, 1]")));
        }
        Ok(Self::from_valid(
            self.rho.scale_real(lambda) + other.rho.scale_real(1.0 - lambda),
        ))
    }

    /// `‖self − other‖_tr`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        (&self.rho - &other.rho).trace_norm()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `f(A) = tr(ρA)`.
pub fn pair(rho: &DensityState, a: &ComplexMatrix) -> Result<C64> {
    check_dim(rho.d(), a.dim())?;
    Ok((rho.rho() * a).trace())
}

/// `ν(g)ρ = U(g)^† ρ U(g)`.
pub fn pullback(rep: &UnitaryRep, g: &GroupElement, rho: &DensityState) -> Result<DensityState> {
    check_dim(rep.dim(), rho.d())?;
    let u = rep.element_unitary(g)?;
    Ok(pullback_by(&u, rho))
}

pub(crate) fn pullback_by(u: &ComplexMatrix, rho: &DensityState) -> DensityState {
    DensityState::from_valid(rho.rho().conjugate_by_adjoint(u))
}

/// Sum of `f(0), …, f(n−1)` over a fixed binary tree, so the rounding is
/// independent of how the halves are scheduled.
pub fn pairwise_sum<F>(n: usize, f: &F) -> Option<ComplexMatrix>
where
    F: Fn(usize) -> ComplexMatrix + Sync,
{
    fn go<F: Fn(usize) -> ComplexMatrix + Sync>(lo: usize, hi: usize, f: &F) -> ComplexMatrix {
        if hi - lo <= 16 {
            let mut acc = f(lo);
            for i in lo + 1..hi {
                acc = acc + f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| go(lo, mid, f), || go(mid, hi, f));
        a + b
    }
    (n > 0).then(|| go(0, n, f))
}

/// How a group average is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMethod {
    /// Deterministic quadrature (U(1) and SU(2)).
    Quadrature { order: usize },
    /// Monte Carlo over `count` Haar samples drawn from `seed`.
    MonteCarlo { seed: u64, count: usize },
    /// Exact uniform sum over a finite group.
    FiniteExact,
}

impl AveragingMethod {
    fn name(&self) -> &'static str {
        match self {
            AveragingMethod::Quadrature { .. } => "quadrature",
            AveragingMethod::MonteCarlo { .. } => "monte_carlo",
            AveragingMethod::FiniteExact => "finite_exact",
        }
    }

    /// Exact-where-possible default for a group kind.
    pub fn default_for(rep: &UnitaryRep) -> Self {
        match rep.group().kind() {
            GroupKind::FiniteTable => AveragingMethod::FiniteExact,
            GroupKind::U1 | GroupKind::SU2 => AveragingMethod::Quadrature {
                order: default_order(rep.dim()),
            },
            GroupKind::SU3 => AveragingMethod::MonteCarlo {
                seed: 0,
                count: 100_000,
            },
        }
    }
}

/// Quadrature order that integrates the averaging integrand exactly in the
/// periodic angles for a representation of dimension `d`.
pub fn default_order(d: usize) -> usize {
    (2 * d + 4).max(16)
}

/// Result of [`haar_average`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AveragedState {
    pub state: DensityState,
    /// `max ‖ν(g)ρ̄ − ρ̄‖_tr` over all elements (finite groups) or
    /// [`INVARIANCE_PROBES`] fresh Haar samples.
    pub invariance_residual: f64,
    /// Size of the positivity repair applied to the raw average.
    pub repair_magnitude: f64,
    /// Monte Carlo standard error of the mean, in Frobenius norm.
    pub standard_error: Option<f64>,
}

/// Group average `ρ̄ = ∫ U(g)^† ρ U(g) dg`.
pub fn haar_average(
    rep: &UnitaryRep,
    rho: &DensityState,
    method: &AveragingMethod,
) -> Result<AveragedState> {
    check_dim(rep.dim(), rho.d())?;
    let unsupported = || Error::MethodUnsupported {
        method: method.name().into(),
        kind: rep.group().kind().to_string(),
    };
    let mut standard_error = None;
    let raw = match (method, rep.group()) {
        (AveragingMethod::FiniteExact, GroupDescriptor::Finite(g)) => {
            let us: Vec<_> = (0..g.order())
                .map(|i| rep.element_unitary(&GroupElement::Finite(i)))
                .collect::<Result<_>>()?;
            pairwise_sum(us.len(), &|i| rho.rho().conjugate_by_adjoint(&us[i]))
                .expect("groups are non-empty")
                .scale_real(1.0 / us.len() as f64)
        }
        (AveragingMethod::Quadrature { order }, GroupDescriptor::SU2) => haar_quadrature_su2(
            |e| {
                let u = rep
                    .element_unitary(&GroupElement::Su2(*e))
                    .expect("quadrature nodes lie in range");
                rho.rho().conjugate_by_adjoint(&u)
            },
            *order,
        )?,
        (AveragingMethod::Quadrature { order }, GroupDescriptor::U1) => haar_quadrature_u1(
            |t| {
                let u = rep
                    .element_unitary(&GroupElement::U1(t))
                    .expect("quadrature nodes lie in range");
                rho.rho().conjugate_by_adjoint(&u)
            },
            *order,
        )?,
        (AveragingMethod::MonteCarlo { seed, count }, _) => {
            let elements = rep.haar_sample(*seed, *count)?;
            let us: Vec<_> = elements
                .par_iter()
                .map(|g| rep.element_unitary(g))
                .collect::<Result<_>>()?;
            let n = us.len() as f64;
            let term = |i: usize| rho.rho().conjugate_by_adjoint(&us[i]);
            let mean = pairwise_sum(us.len(), &term)
                .expect("count ≥ 1")
                .scale_real(1.0 / n);
            if us.len() > 1 {
                let spread: f64 = (0..us.len())
                    .into_par_iter()
                    .map(|i| (&term(i) - &mean).frobenius_norm().powi(2))
                    .sum();
                standard_error = Some((spread / (n * (n - 1.0))).sqrt());
            }
            mean
        }
        _ => return Err(unsupported()),
    };
    let (state, repair_magnitude) = repair_psd(&raw)?;
    let invariance_residual = invariance_residual(rep, &state)?;
    Ok(AveragedState {
        state,
        invariance_residual,
        repair_magnitude,
        standard_error,
    })
}

/// Clips eigenvalues below `−1e-12` to zero and renormalises the trace. The
/// size of the change is returned and must not exceed `1e-10`.
pub fn repair_psd(m: &ComplexMatrix) -> Result<(DensityState, f64)> {
    let h = m.hermitian_part();
    let eig = eig_hermitian(&h)?;
    let clipped: f64 = eig.values.iter().filter(|&&x| x < -CLIP_TOL).map(|x| -x).sum();
    let repaired = if clipped > 0.0 {
        let vals: Vec<C64> = eig
            .values
            .iter()
            .map(|&x| c(if x < -CLIP_TOL { 0.0 } else { x }, 0.0))
            .collect();
        ComplexMatrix::diagonal(&vals).conjugate_by(&eig.vectors)
    } else {
        h
    };
    let tr = repaired.trace().re;
    let magnitude = clipped.max((tr - 1.0).abs());
    if magnitude > MAX_REPAIR || tr <= 0.0 {
        return Err(Error::RepairTooLarge { magnitude });
    }
    if magnitude > 0.0 {
        log::debug!("positivity repair of magnitude {magnitude:.3e}");
    }
    Ok((DensityState::from_valid(repaired.scale_real(1.0 / tr)), magnitude))
}

/// `max_g ‖ν(g)ρ − ρ‖_tr` over the given elements.
pub fn invariance_residual_over(
    rep: &UnitaryRep,
    rho: &DensityState,
    elements: &[GroupElement],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for g in elements {
        worst = worst.max(pullback(rep, g, rho)?.trace_distance(rho));
    }
    Ok(worst)
}

/// Invariance residual over the whole finite group, or over a fixed set of
/// fresh Haar samples for Lie groups.
pub fn invariance_residual(rep: &UnitaryRep, rho: &DensityState) -> Result<f64> {
    let elements = match rep.group().elements() {
        Some(all) => all,
        None => rep.haar_sample(PROBE_SEED, INVARIANCE_PROBES)?,
    };
    invariance_residual_over(rep, rho, &elements)
}

/// Finite sample of the orbit hull `X(f) = co{ν(g)ρ}`.
#[derive(Clone, Debug)]
pub struct OrbitHull {
    rep: UnitaryRep,
    seed_state: DensityState,
    elements: Vec<GroupElement>,
    samples: Vec<DensityState>,
}

/// Orbit points of `rho`: the full orbit for finite groups, `n_samples` Haar
/// samples from `seed` otherwise.
pub fn orbit_hull(
    rep: &UnitaryRep,
    rho: &DensityState,
    n_samples: usize,
    seed: u64,
) -> Result<OrbitHull> {
    check_dim(rep.dim(), rho.d())?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("orbit hull needs at least one sample".into()));
    }
    let elements = match rep.group().elements() {
        Some(all) => all,
        None => rep.haar_sample(seed, n_samples)?,
    };
    let samples = elements
        .par_iter()
        .map(|g| pullback(rep, g, rho))
        .collect::<Result<_>>()?;
    Ok(OrbitHull {
        rep: rep.clone(),
        seed_state: rho.clone(),
        elements,
        samples,
    })
}

impl OrbitHull {
    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn seed_state(&self) -> &DensityState {
        &self.seed_state
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn samples(&self) -> &[DensityState] {
        &self.samples
    }

    pub fn barycenter(&self) -> DensityState {
        let n = self.samples.len();
        let sum = pairwise_sum(n, &|i| self.samples[i].rho().clone()).expect("hull is non-empty");
        DensityState::from_valid(sum.scale_real(1.0 / n as f64))
    }

    /// Convex combination `Σ w_i ν(g_i)ρ`.
    pub fn combine(&self, weights: &[f64]) -> Result<DensityState> {
        if weights.len() != self.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                actual: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "weights must be non-negative and sum to 1".into(),
            ));
        }
        let sum = pairwise_sum(self.samples.len(), &|i| {
            self.samples[i].rho().scale_real(weights[i])
        })
        .expect("hull is non-empty");
        Ok(DensityState::from_valid(sum))
    }
}

/// Outcome of [`is_separating`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatingCheck {
    pub separating: bool,
    pub min_eigenvalue: f64,
    /// `tol · λ_max`.
    pub threshold: f64,
    /// Projection onto the (near-)null eigenspace when not separating.
    pub witness: Option<ComplexMatrix>,
}

/// A density matrix is separating iff it has full rank: every eigenvalue
/// exceeds `tol · λ_max`. Otherwise the projection `A` onto the eigenvectors
/// below the threshold is a non-zero witness with `tr(ρ A^†A) ≈ 0`.
pub fn is_separating(rho: &DensityState, tol: f64) -> Result<SeparatingCheck> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let eig = eig_hermitian(rho.rho())?;
    let max = *eig.values.last().expect("d ≥ 1");
    let threshold = tol * max;
    let min_eigenvalue = eig.values[0];
    let null: Vec<usize> = (0..rho.d()).filter(|&k| eig.values[k] <= threshold).collect();
    let witness = (!null.is_empty()).then(|| {
        null.iter()
            .map(|&k| {
                let v: Vec<C64> = eig.vectors.inner().column(k).iter().copied().collect();
                ComplexMatrix::outer(&v)
            })
            .reduce(|a, b| a + b)
            .expect("non-empty null set")
    });
    Ok(SeparatingCheck {
        separating: null.is_empty(),
        min_eigenvalue,
        threshold,
        witness,
    })
}

/// Both sides of `‖ν(g)ρ − ν(h)ρ‖_tr ≤ 2‖U(g) − U(h)‖_op`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContinuityBound {
    pub distance: f64,
    pub bound: f64,
}

pub fn continuity_bound(
    rep: &UnitaryRep,
    g: &GroupElement,
    h: &GroupElement,
    rho: &DensityState,
) -> Result<ContinuityBound> {
    let ug = rep.element_unitary(g)?;
    let uh = rep.element_unitary(h)?;
    check_dim(rep.dim(), rho.d())?;
    Ok(ContinuityBound {
        distance: pullback_by(&ug, rho).trace_distance(&pullback_by(&uh, rho)),
        bound: 2.0 * (&ug - &uh).op_norm(),
    })
}
