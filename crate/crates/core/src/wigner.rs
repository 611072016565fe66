//! Wigner sets: fixed-point spaces of the pullbacks `ν(g)`.
//!
//! At the linear level the Wigner set of `g` is
//! `F(ν(g)) = {M ∈ M_d : U(g)^† M U(g) = M}`, the commutant of `U(g)`. For a
//! finite family `g_1, …, g_n` the averaged map is
//! `T = (1/n) Σ_j ν(g_j)`, and the intersection identity states
//! `⋂_j F(ν(g_j)) = F(T)`. Both sides are computed independently here: the
//! left by pairwise intersection of bases (cross-checked by stacking the
//! complementary projectors), the right as the null space of `T − I`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupKind, RepMap, UnitaryRep};
use crate::matrix::{
    largest_principal_angle, null_space_with_scale, principal_cosines, sandwich_superop, ComplexMatrix,
    Subspace, C64, DEFAULT_RANK_TOL,
};
use crate::rng::stream_rng;
use crate::states::{repair_psd, DensityState};

/// Largest principal angle accepted between the two sides of the identity.
pub const ANGLE_TOL: f64 = 1e-8;

pub const DEFAULT_CESARO_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Squarings performed after the residual first drops below `tol`; each one
/// squares the amplitude of every decaying mode.
const EXTRA_DOUBLINGS: usize = 3;

/// A representation together with the finite family `g_1, …, g_n`.
#[derive(Clone, Debug)]
pub struct WignerProblem {
    rep: UnitaryRep,
    elements: Vec<GroupElement>,
}

impl WignerProblem {
    pub fn new(rep: UnitaryRep, elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("a Wigner problem needs n ≥ 1 elements".into()));
        }
        for g in &elements {
            rep.group().validate(g)?;
        }
        Ok(Self { rep, elements })
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn d(&self) -> usize {
        self.rep.dim()
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    fn unitaries(&self) -> Vec<ComplexMatrix> {
        self.elements
            .iter()
            .map(|g| self.rep.element_unitary(g).expect("validated in new"))
            .collect()
    }

    /// Superoperator of `T = (1/n) Σ_j ν(g_j)` on column-stacked matrices.
    pub fn averaged_superop(&self) -> ComplexMatrix {
        let us = self.unitaries();
        let n = us.len() as f64;
        us.iter()
            .map(pullback_superop)
            .reduce(|a, b| a + b)
            .expect("n ≥ 1")
            .scale_real(1.0 / n)
    }

    /// `T(ρ)` evaluated directly on matrices.
    pub fn apply_average(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let us = self.unitaries();
        let n = us.len() as f64;
        us.iter()
            .map(|u| rho.conjugate_by_adjoint(u))
            .reduce(|a, b| a + b)
            .expect("n ≥ 1")
            .scale_real(1.0 / n)
    }
}

/// `M ↦ U^† M U` as `U^T ⊗ U^†`.
fn pullback_superop(u: &ComplexMatrix) -> ComplexMatrix {
    sandwich_superop(&u.adjoint(), u)
}

fn minus_identity(m: &ComplexMatrix) -> ComplexMatrix {
    m - &ComplexMatrix::identity(m.dim())
}

/// Wigner set `F(ν(g))` as a subspace of `C^{d^2}`.
pub fn wigner_subspace(rep: &UnitaryRep, g: &GroupElement) -> Result<Subspace> {
    let u = rep.element_unitary(g)?;
    null_space_with_scale(&minus_identity(&pullback_superop(&u)), DEFAULT_RANK_TOL, 1.0)
}

/// Fixed space of the averaged map `T`.
pub fn averaged_fixed_subspace(problem: &WignerProblem) -> Result<Subspace> {
    null_space_with_scale(&minus_identity(&problem.averaged_superop()), DEFAULT_RANK_TOL, 1.0)
}

/// Both sides of the intersection identity for one problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerReport {
    pub group: GroupKind,
    pub rep: RepMap,
    pub d: usize,
    pub elements: Vec<GroupElement>,
    /// `dim F(ν(g_j))` for each element.
    pub element_dims: Vec<usize>,
    /// `dim ⋂_j F(ν(g_j))` by pairwise intersection.
    pub intersection_dim: usize,
    /// The same intersection by null-space stacking.
    pub intersection_crosscheck_dim: usize,
    /// `dim F(T)`.
    pub averaged_dim: usize,
    /// Smallest singular value of the cross-Gram matrix of the two bases.
    pub min_principal_cosine: f64,
    /// Largest principal angle between `⋂_j F_j` and `F(T)`.
    pub largest_principal_angle: f64,
    /// `max ‖T v − v‖` over the intersection basis.
    pub inclusion_residual: f64,
    /// `‖T(I/d) − I/d‖_F`.
    pub mixed_state_residual: f64,
    pub verdict: bool,
}

/// Computes `⋂_j F(ν(g_j))` and `F(T)` independently and compares them.
pub fn verify_wigner_identity(problem: &WignerProblem) -> Result<WignerReport> {
    let sets: Vec<Subspace> = problem
        .elements
        .iter()
        .map(|g| wigner_subspace(&problem.rep, g))
        .collect::<Result<_>>()?;
    let intersection = Subspace::intersection(&sets)?;
    let crosscheck = Subspace::intersection_by_stacking(&sets, DEFAULT_RANK_TOL)?;
    let averaged = averaged_fixed_subspace(problem)?;

    let t = problem.averaged_superop();
    let inclusion_residual = intersection
        .vectors()
        .iter()
        .map(|v| (t.inner() * v - v).norm())
        .fold(0.0_f64, f64::max);
    let d = problem.d();
    let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
    let mixed_state_residual = (&problem.apply_average(&mixed) - &mixed).frobenius_norm();

    let dims_agree = intersection.dim() == averaged.dim() && crosscheck.dim() == averaged.dim();
    let cosines = principal_cosines(&intersection, &averaged);
    let min_principal_cosine = if dims_agree {
        cosines.last().copied().unwrap_or(1.0)
    } else {
        0.0
    };
    let angle = largest_principal_angle(&intersection, &averaged);
    let verdict = dims_agree && angle <= ANGLE_TOL && min_principal_cosine >= 1.0 - ANGLE_TOL;

    Ok(WignerReport {
        group: problem.rep.group().kind(),
        rep: problem.rep.map().clone(),
        d,
        elements: problem.elements.clone(),
        element_dims: sets.iter().map(Subspace::dim).collect(),
        intersection_dim: intersection.dim(),
        intersection_crosscheck_dim: crosscheck.dim(),
        averaged_dim: averaged.dim(),
        min_principal_cosine,
        largest_principal_angle: angle,
        inclusion_residual,
        mixed_state_residual,
        verdict,
    })
}

/// Verifies a batch of problems in parallel; results keep the input order.
pub fn verify_batch(problems: &[WignerProblem]) -> Vec<Result<WignerReport>> {
    problems.par_iter().map(verify_wigner_identity).collect()
}

/// `dim ⋂_{j ≤ k} F(ν(g_j))` for `k = 1, …, n`.
pub fn nested_intersection_dims(problem: &WignerProblem) -> Result<Vec<usize>> {
    let sets: Vec<Subspace> = problem
        .elements
        .iter()
        .map(|g| wigner_subspace(&problem.rep, g))
        .collect::<Result<_>>()?;
    (1..=sets.len())
        .map(|k| Subspace::intersection(&sets[..k]).map(|s| s.dim()))
        .collect()
}

/// Result of [`cesaro_fixed_point`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CesaroResult {
    pub state: DensityState,
    /// `‖T(ρ*) − ρ*‖_tr`.
    pub residual: f64,
    /// `max_j ‖U_j^† ρ* U_j − ρ*‖_tr`.
    pub per_element_residual: f64,
    /// Number of iterates `K` entering the mean.
    pub iterations: usize,
}

fn devectorize(v: &DVector<C64>) -> ComplexMatrix {
    ComplexMatrix::unvectorize(v.as_slice()).expect("vectorised square matrix")
}

/// Ergodic mean of the iterates of the averaged map `T`, started at `ρ_0`.
///
/// The mean uses binomial weights, `ρ_K = 2^{-K} Σ_k C(K, k) T^k ρ_0`, which
/// is the `K`-th iterate of the lazy map `L = (I + T)/2`. It has the same
/// limit as the uniform mean `(1/K) Σ_k T^k ρ_0`, the projection of `ρ_0`
/// onto the fixed space of `T`. The only unimodular eigenvalue of `L` is 1,
/// so convergence is geometric where the uniform mean only achieves
/// `O(1/K)`. `K` runs through `0, 1, 2, 4, …` by squaring the `d² × d²`
/// superoperator of `L`, and may not exceed `max_iter`.
pub fn cesaro_fixed_point(
    problem: &WignerProblem,
    rho0: &DensityState,
    tol: f64,
    max_iter: usize,
) -> Result<CesaroResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let d = problem.d();
    if rho0.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: rho0.d(),
        });
    }
    let t = problem.averaged_superop().into_inner();
    let n2 = d * d;
    let lazy = (DMatrix::<C64>::identity(n2, n2) + &t) * C64::new(0.5, 0.0);
    let v0 = rho0.rho().vectorize();

    let evaluate = |v: DVector<C64>| -> Result<(DensityState, f64)> {
        let (state, _) = repair_psd(&devectorize(&v))?;
        let image = devectorize(&(&t * state.rho().vectorize()));
        let residual = (&image - state.rho()).trace_norm();
        Ok((state, residual))
    };

    let mut power: Option<DMatrix<C64>> = None;
    let mut iterations = 0usize;
    let (mut state, mut residual) = evaluate(v0.clone())?;
    let mut converged: Option<(DensityState, f64, usize)> = None;
    let mut extra = EXTRA_DOUBLINGS;
    loop {
        if residual <= tol {
            converged = Some((state.clone(), residual, iterations));
            if extra == 0 || residual == 0.0 {
                break;
            }
            extra -= 1;
        } else if converged.is_some() {
            // rounding pushed the residual back up; keep the converged mean
            break;
        }
        let next = if iterations == 0 { 1 } else { 2 * iterations };
        if next > max_iter {
            if converged.is_some() {
                break;
            }
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        let p = match power.take() {
            None => lazy.clone(),
            Some(p) => &p * &p,
        };
        (state, residual) = evaluate(&p * &v0)?;
        power = Some(p);
        iterations = next;
    }
    let (state, residual, iterations) = converged.expect("loop exits only after convergence");
    let per_element_residual = problem
        .unitaries()
        .iter()
        .map(|u| (&state.rho().conjugate_by_adjoint(u) - state.rho()).trace_norm())
        .fold(0.0_f64, f64::max);
    Ok(CesaroResult {
        state,
        residual,
        per_element_residual,
        iterations,
    })
}

/// Deterministic batch of randomised problems cycling through SU(2) spin
/// representations, padded SU(3), cyclic groups and the quaternion group,
/// with `d ∈ {2, …, 6}` and `n ∈ {1, …, 4}`. Problem `i` draws from stream
/// `i` of `seed`.
pub fn random_problems(seed: u64, count: usize) -> Vec<WignerProblem> {
    use rand::Rng;
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let n = rng.random_range(1..=4);
            let rep = match i % 4 {
                0 => UnitaryRep::su2_spin(rng.random_range(2..=6)),
                1 => UnitaryRep::su3_padded(rng.random_range(3..=6)),
                2 => UnitaryRep::cyclic(rng.random_range(2..=6), rng.random_range(2..=6)),
                _ => UnitaryRep::quaternion(rng.random_range(2..=6)),
            }
            .expect("built-in representations are valid");
            let elements = (0..n).map(|_| rep.group().sample_one(&mut rng)).collect();
            WignerProblem::new(rep, elements).expect("sampled elements are valid")
        })
        .collect()
}
