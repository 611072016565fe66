//! Crossed products `A × G` of `A = M_d` by a finite group acting through
//! `α_g(A) = U(g) A U(g)^†`, realised on `C^d ⊗ l²(G)`.
//!
//! Tensor order is fibre first, group second: `x ⊗ ε_g` has index
//! `i·|G| + g`, with `g` in Cayley-table order.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{FiniteGroup, GroupDescriptor, GroupElement, RepMap, UnitaryRep};
use crate::matrix::{double_commutant, kron, ComplexMatrix, C64};

pub const COVARIANCE_TOL: f64 = 1e-12;
/// Relative threshold for accepting a new direction during product closure.
pub const CLOSURE_TOL: f64 = 1e-10;
pub const DEFAULT_AMBIENT_CAP: usize = 64;

/// `M_d` with a finite-group action, and the operators `U_h`, `Φ(A)` on
/// `C^d ⊗ l²(G)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "UnitaryRep", into = "UnitaryRep")]
pub struct CrossedProductModel {
    rep: UnitaryRep,
    group: FiniteGroup,
    unitaries: Vec<ComplexMatrix>,
}

impl TryFrom<UnitaryRep> for CrossedProductModel {
    type Error = Error;

    fn try_from(rep: UnitaryRep) -> Result<Self> {
        Self::new(rep)
    }
}

impl From<CrossedProductModel> for UnitaryRep {
    fn from(m: CrossedProductModel) -> Self {
        m.rep
    }
}

impl CrossedProductModel {
    pub fn new(rep: UnitaryRep) -> Result<Self> {
        let group = rep
            .group()
            .finite()
            .ok_or_else(|| {
                Error::InvalidGroup(format!(
                    "crossed products need a finite group, got {}",
                    rep.group().kind()
                ))
            })?
            .clone();
        let unitaries = (0..group.order())
            .map(|g| rep.element_unitary(&GroupElement::Finite(g)))
            .collect::<Result<_>>()?;
        Ok(Self {
            rep,
            group,
            unitaries,
        })
    }

    /// Trivial action of `group` on `M_d`.
    pub fn trivial(group: FiniteGroup, d: usize) -> Result<Self> {
        Self::new(UnitaryRep::trivial(GroupDescriptor::Finite(group), d)?)
    }

    pub fn rep(&self) -> &UnitaryRep {
        &self.rep
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn d(&self) -> usize {
        self.rep.dim()
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn ambient_dim(&self) -> usize {
        self.d() * self.order()
    }

    fn index(&self, h: &GroupElement) -> Result<usize> {
        match h {
            GroupElement::Finite(i) if *i < self.order() => Ok(*i),
            other => Err(Error::BadElement(format!(
                "{other:?} is not an element of a group of order {}",
                self.order()
            ))),
        }
    }

    /// `α_g(A) = U(g) A U(g)^†`.
    pub fn act(&self, g: usize, a: &ComplexMatrix) -> ComplexMatrix {
        a.conjugate_by(&self.unitaries[g])
    }

    /// `U_h = I_d ⊗ R_h` with `R_h ε_g = ε_{g h⁻¹}`.
    pub fn regular_unitary(&self, h: &GroupElement) -> Result<ComplexMatrix> {
        let h = self.index(h)?;
        Ok(self.regular_unitary_at(h))
    }

    fn regular_unitary_at(&self, h: usize) -> ComplexMatrix {
        let n = self.order();
        let hinv = self.group.inverse(h);
        let mut r = ComplexMatrix::zeros(n).into_inner();
        for g in 0..n {
            r[(self.group.mul(g, hinv), g)] = C64::new(1.0, 0.0);
        }
        kron(&ComplexMatrix::identity(self.d()), &ComplexMatrix::from_inner(r))
    }

    /// `Φ(A) = Σ_g α_g(A) ⊗ E_gg`.
    pub fn embed(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.dim() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                actual: a.dim(),
            });
        }
        let n = self.order();
        let mut out = ComplexMatrix::zeros(self.ambient_dim()).into_inner();
        for g in 0..n {
            let block = self.act(g, a);
            for i in 0..self.d() {
                for j in 0..self.d() {
                    out[(i * n + g, j * n + g)] = block.get(i, j);
                }
            }
        }
        Ok(ComplexMatrix::from_inner(out))
    }

    /// `max ‖U_h Φ(A) U_h^† − Φ(α_h(A))‖_F` over `h ∈ G` and the matrix
    /// units of `M_d`.
    pub fn covariance_check(&self) -> f64 {
        let mut worst = 0.0_f64;
        for h in 0..self.order() {
            let u = self.regular_unitary_at(h);
            for a in ComplexMatrix::units(self.d()) {
                let lhs = self.embed(&a).expect("unit has fibre size").conjugate_by(&u);
                let rhs = self.embed(&self.act(h, &a)).expect("fibre size");
                worst = worst.max((&lhs - &rhs).frobenius_norm());
            }
        }
        worst
    }

    /// Generators `U_h` and `Φ(E_ij)` of the crossed product.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        let mut gens: Vec<ComplexMatrix> =
            (0..self.order()).map(|h| self.regular_unitary_at(h)).collect();
        gens.extend(
            ComplexMatrix::units(self.d())
                .iter()
                .map(|a| self.embed(a).expect("fibre size")),
        );
        gens
    }

    /// Spanning set `{U_h Φ(E_ij)}`.
    pub fn spanning_set(&self) -> Vec<ComplexMatrix> {
        let units = ComplexMatrix::units(self.d());
        let mut out = Vec::with_capacity(self.order() * units.len());
        for h in 0..self.order() {
            let u = self.regular_unitary_at(h);
            for a in &units {
                out.push(&u * &self.embed(a).expect("fibre size"));
            }
        }
        out
    }

    /// Same action with elements renumbered: old index `a` becomes `perm[a]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let group = self.group.relabel(perm)?;
        let mut mats = vec![ComplexMatrix::identity(self.d()); self.order()];
        for (a, &p) in perm.iter().enumerate() {
            mats[p] = self.unitaries[a].clone();
        }
        Self::new(UnitaryRep::finite(group, mats)?)
    }
}

/// Product action of `G_1 × G_2` on `M_{d_1} ⊗ M_{d_2}` through
/// `U(a, b) = U_1(a) ⊗ U_2(b)`.
pub fn product_model(m1: &CrossedProductModel, m2: &CrossedProductModel) -> Result<CrossedProductModel> {
    let group = FiniteGroup::direct_product(&m1.group, &m2.group);
    let mut mats = Vec::with_capacity(group.order());
    for a in &m1.unitaries {
        for b in &m2.unitaries {
            mats.push(kron(a, b));
        }
    }
    CrossedProductModel::new(UnitaryRep::new(
        GroupDescriptor::Finite(group),
        RepMap::Matrices(mats),
    )?)
}

/// Orthonormal (Hilbert–Schmidt) basis of a subspace of `M_n`.
#[derive(Clone, Debug)]
pub struct AlgebraSpan {
    ambient: usize,
    basis: Vec<DVector<C64>>,
}

impl AlgebraSpan {
    pub fn new(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> Vec<ComplexMatrix> {
        self.basis
            .iter()
            .map(|v| ComplexMatrix::unvectorize(v.as_slice()).expect("square"))
            .collect()
    }

    fn project_out(&self, mut v: DVector<C64>) -> DVector<C64> {
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &self.basis {
                let coef = b.dotc(&v);
                v -= b * coef;
            }
        }
        v
    }

    /// Adds `m` if it leaves the span; returns whether it did.
    pub fn insert(&mut self, m: &ComplexMatrix) -> bool {
        let v = m.vectorize();
        let scale = v.norm();
        if scale == 0.0 {
            return false;
        }
        let r = self.project_out(v);
        let norm = r.norm();
        if norm <= CLOSURE_TOL * scale {
            return false;
        }
        self.basis.push(r / C64::new(norm, 0.0));
        true
    }

    /// Frobenius distance from `m` to the span, relative to `‖m‖_F`.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let v = m.vectorize();
        let scale = v.norm();
        if scale == 0.0 {
            return 0.0;
        }
        self.project_out(v).norm() / scale
    }

    /// Largest relative residual of `b^†` over the basis.
    pub fn adjoint_residual(&self) -> f64 {
        self.basis()
            .iter()
            .map(|b| self.residual(&b.adjoint()))
            .fold(0.0, f64::max)
    }

    /// Unital algebra generated by `gens`: the span of the identity and the
    /// generators, closed under left multiplication by the generators.
    pub fn generated_by(gens: &[ComplexMatrix], ambient: usize) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| g.dim() != ambient) {
            return Err(Error::DimensionMismatch {
                expected: ambient,
                actual: g.dim(),
            });
        }
        let mut span = Self::new(ambient);
        span.insert(&ComplexMatrix::identity(ambient));
        for g in gens {
            span.insert(g);
        }
        let limit = ambient * ambient;
        let mut next = 0;
        while next < span.dim() {
            if next >= limit {
                return Err(Error::NonConvergent { rounds: next });
            }
            let b = ComplexMatrix::unvectorize(span.basis[next].as_slice()).expect("square");
            for g in gens {
                span.insert(&(g * &b));
            }
            next += 1;
        }
        Ok(span)
    }
}

/// The two independent dimension counts of a crossed product.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossedReport {
    pub d: usize,
    pub order: usize,
    pub ambient_dim: usize,
    pub covariance_residual: f64,
    pub closure_dim: usize,
    pub double_commutant_dim: usize,
    pub adjoint_residual: f64,
    pub consistent: bool,
}

/// Product closure and double commutant of the crossed product.
pub fn crossed_report(model: &CrossedProductModel) -> Result<CrossedReport> {
    let n = model.ambient_dim();
    let span = AlgebraSpan::generated_by(&model.spanning_set(), n)?;
    let dc = double_commutant(&model.generators(), n)?;
    let covariance_residual = model.covariance_check();
    Ok(CrossedReport {
        d: model.d(),
        order: model.order(),
        ambient_dim: n,
        covariance_residual,
        closure_dim: span.dim(),
        double_commutant_dim: dc.dim(),
        adjoint_residual: span.adjoint_residual(),
        consistent: span.dim() == dc.dim() && covariance_residual <= COVARIANCE_TOL,
    })
}

/// Dimension of `A × G`; fails if product closure and double commutant
/// disagree.
pub fn crossed_dimension(model: &CrossedProductModel) -> Result<usize> {
    let r = crossed_report(model)?;
    if r.closure_dim != r.double_commutant_dim {
        return Err(Error::Contract(format!(
            "product closure has dimension {} but the double commutant has {}",
            r.closure_dim, r.double_commutant_dim
        )));
    }
    Ok(r.closure_dim)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorIsoReport {
    /// `dim(A_j × G_j)` for each factor.
    pub factor_dims: Vec<usize>,
    /// `Π_j dim(A_j × G_j)`.
    pub tensor_dim: usize,
    /// `dim((A_1 ⊗ … ⊗ A_n) × (G_1 × … × G_n))`.
    pub product_dim: usize,
    pub product_ambient_dim: usize,
    pub equal: bool,
}

/// Compares `⊗_j (A_j × G_j)` with `(⊗_j A_j) × Π_j G_j` by dimension.
pub fn tensor_iso_check(models: &[CrossedProductModel], cap: usize) -> Result<TensorIsoReport> {
    let Some((first, rest)) = models.split_first() else {
        return Err(Error::InvalidArgument("tensor_iso_check needs at least one model".into()));
    };
    let ambient: usize = models.iter().map(|m| m.ambient_dim()).product();
    if ambient > cap {
        return Err(Error::ResourceLimit { ambient, cap });
    }
    let factor_dims = models
        .iter()
        .map(crossed_dimension)
        .collect::<Result<Vec<_>>>()?;
    let mut product = first.clone();
    for m in rest {
        product = product_model(&product, m)?;
    }
    let product_dim = crossed_dimension(&product)?;
    let tensor_dim = factor_dims.iter().product();
    Ok(TensorIsoReport {
        factor_dims,
        tensor_dim,
        product_dim,
        product_ambient_dim: product.ambient_dim(),
        equal: tensor_dim == product_dim,
    })
}
