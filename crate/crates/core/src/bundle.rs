//! Fields of invariant states over a finite set of base points.
//!
//! Each base point carries a fibre `M_{d(x)}` with a representation of one
//! common group. Fibres are treated independently: the field is the indexed
//! family of per-fibre invariant separating states.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement, GroupKind, RepMap, UnitaryRep};
use crate::rng::{derive_seed, stream_rng};
use crate::states::{
    haar_average, invariance_residual, is_separating, AveragingMethod, DensityState,
    SEPARATING_TOL,
};
use crate::wigner::{cesaro_fixed_point, WignerProblem, DEFAULT_CESARO_TOL, DEFAULT_MAX_ITER};

/// Largest accepted invariance residual of a fibre state.
pub const FIELD_INVARIANCE_TOL: f64 = 1e-7;
/// Weight of the random perturbation in the first seed.
pub const SEED_PERTURBATION: f64 = 0.5;
pub const MAX_RETRIES: usize = 3;
/// Haar-sampled generators (plus inverses) used for SU(3) fibres.
const SU3_GENERATORS: usize = 4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasePoint {
    pub label: String,
    pub rep: RepMap,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BundleDoc {
    group: GroupDescriptor,
    points: Vec<BasePoint>,
}

/// Base points with fibre representations of a shared group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "BundleDoc", into = "BundleDoc")]
pub struct BundleSpec {
    group: GroupDescriptor,
    points: Vec<(String, UnitaryRep)>,
}

impl TryFrom<BundleDoc> for BundleSpec {
    type Error = Error;

    fn try_from(doc: BundleDoc) -> Result<Self> {
        Self::new(
            doc.group,
            doc.points.into_iter().map(|p| (p.label, p.rep)).collect(),
        )
    }
}

impl From<BundleSpec> for BundleDoc {
    fn from(spec: BundleSpec) -> Self {
        Self {
            group: spec.group,
            points: spec
                .points
                .into_iter()
                .map(|(label, rep)| BasePoint {
                    label,
                    rep: rep.map().clone(),
                })
                .collect(),
        }
    }
}

impl BundleSpec {
    pub fn new(group: GroupDescriptor, points: Vec<(String, RepMap)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a bundle needs at least one base point".into()));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(points.len());
        for (label, map) in points {
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate base point {label:?}")));
            }
            let rep = UnitaryRep::new(group.clone(), map).map_err(|e| Error::Fibre {
                label: label.clone(),
                source: Box::new(e),
            })?;
            out.push((label, rep));
        }
        Ok(Self { group, points: out })
    }

    /// Every point carries the same representation.
    pub fn uniform(rep: &UnitaryRep, labels: &[&str]) -> Result<Self> {
        Self::new(
            rep.group().clone(),
            labels.iter().map(|l| (l.to_string(), rep.map().clone())).collect(),
        )
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.points.iter().map(|(l, _)| l.as_str())
    }

    pub fn rep(&self, label: &str) -> Result<&UnitaryRep> {
        self.points
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, r)| r)
            .ok_or_else(|| Error::UnknownBasePoint(label.into()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How each fibre state is made invariant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMethod {
    /// Exact averaging where available: the finite sum, quadrature for U(1)
    /// and SU(2), and an ergodic mean over Haar-sampled generators for SU(3).
    #[default]
    Auto,
    Average(AveragingMethod),
    /// Ergodic mean of the averaged map over the given generators.
    Cesaro { generators: Vec<GroupElement> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldComponent {
    pub label: String,
    pub state: DensityState,
    pub seed_state: DensityState,
    pub invariance_residual: f64,
    pub min_eigenvalue: f64,
    pub retries: usize,
}

/// A state per base point, in base order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldState {
    pub components: Vec<FieldComponent>,
}

impl FieldState {
    pub fn restrict(&self, label: &str) -> Result<&DensityState> {
        restrict(self, label)
    }
}

/// Component state at base point `label`.
pub fn restrict<'a>(field: &'a FieldState, label: &str) -> Result<&'a DensityState> {
    field
        .components
        .iter()
        .find(|c| c.label == label)
        .map(|c| &c.state)
        .ok_or_else(|| Error::UnknownBasePoint(label.into()))
}

fn invariant_state(
    rep: &UnitaryRep,
    seed_state: &DensityState,
    method: &FieldMethod,
    generator_seed: u64,
) -> Result<DensityState> {
    let cesaro = |generators: Vec<GroupElement>| -> Result<DensityState> {
        let problem = WignerProblem::new(rep.clone(), generators)?;
        Ok(cesaro_fixed_point(&problem, seed_state, DEFAULT_CESARO_TOL, DEFAULT_MAX_ITER)?.state)
    };
    match method {
        FieldMethod::Average(m) => Ok(haar_average(rep, seed_state, m)?.state),
        FieldMethod::Cesaro { generators } => cesaro(generators.clone()),
        FieldMethod::Auto if rep.group().kind() == GroupKind::SU3 => {
            let mut gens = rep.haar_sample(generator_seed, SU3_GENERATORS)?;
            let inverses = gens
                .iter()
                .map(|g| rep.group().inverse(g))
                .collect::<Result<Vec<_>>>()?;
            gens.extend(inverses);
            cesaro(gens)
        }
        FieldMethod::Auto => {
            Ok(haar_average(rep, seed_state, &AveragingMethod::default_for(rep))?.state)
        }
    }
}

fn assign_fibre(
    index: usize,
    label: &str,
    rep: &UnitaryRep,
    method: &FieldMethod,
    seed: u64,
) -> Result<FieldComponent> {
    let d = rep.dim();
    let mixed = DensityState::maximally_mixed(d);
    let perturbation = DensityState::random(d, &mut stream_rng(seed, index as u64));
    let generator_seed = derive_seed(seed, index as u64);
    let mut last = None;
    for retries in 0..=MAX_RETRIES {
        let eps = SEED_PERTURBATION * 0.5f64.powi(retries as i32);
        let seed_state = perturbation.mix(&mixed, eps)?;
        let state = invariant_state(rep, &seed_state, method, generator_seed)?;
        let residual = invariance_residual(rep, &state)?;
        let check = is_separating(&state, SEPARATING_TOL)?;
        if residual <= FIELD_INVARIANCE_TOL && check.separating {
            return Ok(FieldComponent {
                label: label.to_string(),
                state,
                seed_state,
                invariance_residual: residual,
                min_eigenvalue: check.min_eigenvalue,
                retries,
            });
        }
        log::debug!(
            "fibre {label:?}: residual {residual:.3e}, min eigenvalue {:.3e}; retrying",
            check.min_eigenvalue
        );
        last = Some((residual, check.min_eigenvalue));
    }
    let (residual, min) = last.expect("at least one attempt");
    Err(Error::Contract(format!(
        "no invariant separating state after {MAX_RETRIES} retries \
         (residual {residual:.3e}, min eigenvalue {min:.3e})"
    )))
}

/// Invariant separating state on every fibre. Point `i` draws its seed
/// perturbation from stream `i` of `seed`; failures name the base point.
pub fn assign_invariant_field(spec: &BundleSpec, method: &FieldMethod, seed: u64) -> Result<FieldState> {
    if let FieldMethod::Cesaro { generators } = method {
        for g in generators {
            spec.group.validate(g)?;
        }
    }
    let components = spec
        .points
        .par_iter()
        .enumerate()
        .map(|(i, (label, rep))| {
            assign_fibre(i, label, rep, method, seed).map_err(|e| Error::Fibre {
                label: label.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldState { components })
}
