//! Groups, their elements, unitary representations and gauge automorphisms.
//!
//! Finite groups are stored as validated Cayley tables. The compact Lie
//! groups U(1), SU(2) and SU(3) are described by their parameters:
//!
//! * U(1): an angle `θ ∈ [0, 2π)`;
//! * SU(2): Euler angles with
//!   `U(φ, θ, ψ) = diag(e^{iφ/2}, e^{−iφ/2}) · R_y(θ) · diag(e^{iψ/2}, e^{−iψ/2})`,
//!   `φ ∈ [0, 2π)`, `θ ∈ [0, π]`, `ψ ∈ [0, 4π)` (the ψ range makes the chart
//!   cover SU(2) once rather than SO(3));
//! * SU(3): an explicit special-unitary matrix.
//!
//! The automorphism of a represented element is `α_g(A) = U(g) A U(g)^†`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMatrix, C64};
use crate::rng::{complex_normal, stream_rng, LabRng};

/// Unitarity tolerance for represented elements.
pub const UNITARY_TOL: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI: f64 = 4.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    FiniteTable,
    U1,
    SU2,
    SU3,
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroupKind::FiniteTable => "finite",
            GroupKind::U1 => "u1",
            GroupKind::SU2 => "su2",
            GroupKind::SU3 => "su3",
        };
        f.write_str(s)
    }
}

/// Raw Cayley-table form, validated into [`FiniteGroup`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CayleyTable {
    pub labels: Vec<String>,
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
}

/// A finite group given by its multiplication table: `table[a][b] = a·b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CayleyTable", into = "CayleyTable")]
pub struct FiniteGroup {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

impl TryFrom<CayleyTable> for FiniteGroup {
    type Error = Error;

    fn try_from(t: CayleyTable) -> Result<Self> {
        FiniteGroup::new(t.labels, t.table, t.identity)
    }
}

impl From<FiniteGroup> for CayleyTable {
    fn from(g: FiniteGroup) -> Self {
        CayleyTable {
            labels: g.labels,
            table: g.table,
            identity: g.identity,
        }
    }
}

impl FiniteGroup {
    /// Validates a Cayley table: Latin square, two-sided identity,
    /// associativity; inverses are derived.
    pub fn new(labels: Vec<String>, table: Vec<Vec<usize>>, identity: usize) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty Cayley table".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidGroup(format!(
                "{} labels for a table of order {n}",
                labels.len()
            )));
        }
        if identity >= n {
            return Err(Error::InvalidGroup(format!("identity index {identity} out of range")));
        }
        for (a, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!("row {a} has length {}", row.len())));
            }
            if let Some(&x) = row.iter().find(|&&x| x >= n) {
                return Err(Error::InvalidGroup(format!("entry {x} out of range in row {a}")));
            }
        }
        for a in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for b in 0..n {
                row_seen[table[a][b]] = true;
                col_seen[table[b][a]] = true;
            }
            if row_seen.contains(&false) || col_seen.contains(&false) {
                return Err(Error::InvalidGroup(format!(
                    "table is not a Latin square at index {a}"
                )));
            }
        }
        for (a, row) in table.iter().enumerate() {
            if table[identity][a] != a || row[identity] != a {
                return Err(Error::InvalidGroup(format!(
                    "element {identity} is not a two-sided identity"
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "multiplication is not associative at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        let inverses = (0..n)
            .map(|a| {
                (0..n)
                    .find(|&b| table[a][b] == identity)
                    .expect("Latin square guarantees a right inverse")
            })
            .collect();
        Ok(Self {
            labels,
            table,
            identity,
            inverses,
        })
    }

    /// Group formed by a closed list of distinct invertible matrices; the
    /// table is read off by matching products.
    pub fn from_matrices(labels: Vec<String>, mats: &[ComplexMatrix]) -> Result<Self> {
        let n = mats.len();
        let find = |m: &ComplexMatrix| {
            mats.iter()
                .position(|x| x.max_abs_diff(m) < 1e-9)
                .ok_or_else(|| Error::InvalidGroup("matrix set is not closed".into()))
        };
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                table[a][b] = find(&(&mats[a] * &mats[b]))?;
            }
        }
        let identity = find(&ComplexMatrix::identity(mats[0].dim()))?;
        Self::new(labels, table, identity)
    }

    /// The trivial group.
    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// Cyclic group `Z_n` with elements `0..n` and addition mod `n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group order must be positive");
        let labels = (0..n).map(|k| k.to_string()).collect();
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(labels, table, 0).expect("cyclic table is a group")
    }

    /// Quaternion group `Q_8`, labels `1, -1, i, -i, j, -j, k, -k`.
    pub fn quaternion() -> Self {
        let (labels, mats) = quaternion_matrices();
        Self::from_matrices(labels, &mats).expect("quaternion matrices form a group")
    }

    /// Direct product `G × H`; the pair `(a, b)` has index `a·|H| + b`.
    pub fn direct_product(g: &Self, h: &Self) -> Self {
        let (ng, nh) = (g.order(), h.order());
        let mut labels = Vec::with_capacity(ng * nh);
        for a in 0..ng {
            for b in 0..nh {
                labels.push(format!("({},{})", g.labels[a], h.labels[b]));
            }
        }
        let table = (0..ng * nh)
            .map(|x| {
                (0..ng * nh)
                    .map(|y| g.table[x / nh][y / nh] * nh + h.table[x % nh][y % nh])
                    .collect()
            })
            .collect();
        Self::new(labels, table, g.identity * nh + h.identity).expect("product of groups")
    }

    /// Relabels elements: old index `a` becomes `perm[a]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("relabeling is not a permutation".into()));
        }
        let mut labels = vec![String::new(); n];
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            labels[perm[a]] = self.labels[a].clone();
            for b in 0..n {
                table[perm[a]][perm[b]] = perm[self.table[a][b]];
            }
        }
        Self::new(labels, table, perm[self.identity])
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn quaternion_matrices() -> (Vec<String>, Vec<ComplexMatrix>) {
    let one = ComplexMatrix::identity(2);
    let qi = ComplexMatrix::diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]);
    let qj = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
    let qk = &qi * &qj;
    let mut labels = Vec::new();
    let mut mats = Vec::new();
    for (name, m) in [("1", one), ("i", qi), ("j", qj), ("k", qk)] {
        let neg = -&m;
        if name == "1" {
            labels.extend(["1".to_string(), "-1".to_string()]);
        } else {
            labels.extend([name.to_string(), format!("-{name}")]);
        }
        mats.push(m);
        mats.push(neg);
    }
    (labels, mats)
}

/// A compact group: a finite table or one of the built-in Lie groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupDescriptor {
    Finite(FiniteGroup),
    U1,
    SU2,
    SU3,
}

/// SU(2) Euler angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Euler {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Euler {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    fn in_range(&self) -> bool {
        (0.0..TWO_PI).contains(&self.phi)
            && (0.0..=PI).contains(&self.theta)
            && (0.0..FOUR_PI).contains(&self.psi)
    }
}

/// An element of a [`GroupDescriptor`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupElement {
    Finite(usize),
    U1(f64),
    Su2(Euler),
    Su3(ComplexMatrix),
}

fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Fundamental SU(2) matrix of the Euler angles.
pub fn su2_matrix(e: &Euler) -> ComplexMatrix {
    let (s, co) = (e.theta / 2.0).sin_cos();
    let a = (e.phi + e.psi) / 2.0;
    let b = (e.phi - e.psi) / 2.0;
    let ea = C64::from_polar(1.0, a);
    let eb = C64::from_polar(1.0, b);
    ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => ea * co,
        (0, 1) => -eb * s,
        (1, 0) => eb.conj() * s,
        _ => ea.conj() * co,
    })
}

/// Euler angles of an SU(2) matrix, normalised into the element ranges.
pub fn euler_from_su2(u: &ComplexMatrix) -> Result<Euler> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: u.dim(),
        });
    }
    if u.unitarity_defect() > UNITARY_TOL || (u.determinant() - c(1.0, 0.0)).norm() > UNITARY_TOL
    {
        return Err(Error::BadElement("matrix is not in SU(2)".into()));
    }
    let (u00, u10) = (u.get(0, 0), u.get(1, 0));
    let theta = 2.0 * u10.norm().atan2(u00.norm());
    let a = if u00.norm() > 0.0 { u00.arg() } else { 0.0 };
    let b = if u10.norm() > 0.0 { -u10.arg() } else { 0.0 };
    // (φ, ψ) is defined modulo the lattice generated by (2π, 2π) and (0, 4π)
    let phi0 = a + b;
    let psi0 = a - b;
    let k = (phi0 / TWO_PI).floor();
    let phi = wrap(phi0 - k * TWO_PI, TWO_PI);
    let psi = wrap(psi0 - k * TWO_PI, FOUR_PI);
    Ok(Euler::new(phi, theta.clamp(0.0, PI), psi))
}

impl GroupDescriptor {
    pub fn kind(&self) -> GroupKind {
        match self {
            GroupDescriptor::Finite(_) => GroupKind::FiniteTable,
            GroupDescriptor::U1 => GroupKind::U1,
            GroupDescriptor::SU2 => GroupKind::SU2,
            GroupDescriptor::SU3 => GroupKind::SU3,
        }
    }

    pub fn finite(&self) -> Option<&FiniteGroup> {
        match self {
            GroupDescriptor::Finite(g) => Some(g),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<usize> {
        self.finite().map(FiniteGroup::order)
    }

    /// All elements of a finite group in table order.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        self.finite()
            .map(|g| (0..g.order()).map(GroupElement::Finite).collect())
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupDescriptor::Finite(g) => GroupElement::Finite(g.identity()),
            GroupDescriptor::U1 => GroupElement::U1(0.0),
            GroupDescriptor::SU2 => GroupElement::Su2(Euler::identity()),
            GroupDescriptor::SU3 => GroupElement::Su3(ComplexMatrix::identity(3)),
        }
    }

    /// Checks that `g` belongs to this group and its parameters are in range.
    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        match (self, g) {
            (GroupDescriptor::Finite(t), GroupElement::Finite(i)) if *i < t.order() => Ok(()),
            (GroupDescriptor::Finite(t), GroupElement::Finite(i)) => Err(Error::BadElement(
                format!("index {i} out of range for a group of order {}", t.order()),
            )),
            (GroupDescriptor::U1, GroupElement::U1(t)) if (0.0..TWO_PI).contains(t) => Ok(()),
            (GroupDescriptor::U1, GroupElement::U1(t)) => {
                Err(Error::BadElement(format!("U(1) angle {t} outside [0, 2π)")))
            }
            (GroupDescriptor::SU2, GroupElement::Su2(e)) if e.in_range() => Ok(()),
            (GroupDescriptor::SU2, GroupElement::Su2(e)) => Err(Error::BadElement(format!(
                "SU(2) Euler angles {e:?} outside φ∈[0,2π), θ∈[0,π], ψ∈[0,4π)"
            ))),
            (GroupDescriptor::SU3, GroupElement::Su3(m)) => {
                if m.dim() != 3
                    || m.unitarity_defect() > UNITARY_TOL
                    || (m.determinant() - c(1.0, 0.0)).norm() > UNITARY_TOL
                {
                    Err(Error::BadElement("matrix is not in SU(3)".into()))
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::BadElement(format!(
                "element {g:?} does not belong to a {} group",
                self.kind()
            ))),
        }
    }

    /// Group product `g·h`.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.validate(g)?;
        self.validate(h)?;
        Ok(match (self, g, h) {
            (GroupDescriptor::Finite(t), GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(t.mul(*a, *b))
            }
            (_, GroupElement::U1(a), GroupElement::U1(b)) => GroupElement::U1(wrap(a + b, TWO_PI)),
            (_, GroupElement::Su2(a), GroupElement::Su2(b)) => {
                GroupElement::Su2(euler_from_su2(&(&su2_matrix(a) * &su2_matrix(b)))?)
            }
            (_, GroupElement::Su3(a), GroupElement::Su3(b)) => GroupElement::Su3(a * b),
            _ => unreachable!("validated above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.validate(g)?;
        Ok(match (self, g) {
            (GroupDescriptor::Finite(t), GroupElement::Finite(a)) => {
                GroupElement::Finite(t.inverse(*a))
            }
            (_, GroupElement::U1(a)) => GroupElement::U1(wrap(-a, TWO_PI)),
            (_, GroupElement::Su2(e)) => GroupElement::Su2(euler_from_su2(&su2_matrix(e).adjoint())?),
            (_, GroupElement::Su3(m)) => GroupElement::Su3(m.adjoint()),
            _ => unreachable!("validated above"),
        })
    }

    /// Draws one Haar-distributed element (uniform for finite groups).
    pub fn sample_one(&self, rng: &mut LabRng) -> GroupElement {
        use rand::Rng;
        match self {
            GroupDescriptor::Finite(t) => GroupElement::Finite(rng.random_range(0..t.order())),
            GroupDescriptor::U1 => GroupElement::U1(wrap(rng.random::<f64>() * TWO_PI, TWO_PI)),
            GroupDescriptor::SU2 => {
                let u = haar_special_unitary(2, rng);
                GroupElement::Su2(euler_from_su2(&u).expect("sampled matrix lies in SU(2)"))
            }
            GroupDescriptor::SU3 => GroupElement::Su3(haar_special_unitary(3, rng)),
        }
    }

    /// `count` Haar samples; sample `i` uses its own stream of `seed`.
    pub fn haar_sample(&self, seed: u64, count: usize) -> Vec<GroupElement> {
        (0..count)
            .into_par_iter()
            .map(|i| self.sample_one(&mut stream_rng(seed, i as u64)))
            .collect()
    }
}

/// Haar-random unitary in U(n): Ginibre matrix, QR, then the phases of
/// `R`'s diagonal are moved into `Q`.
pub fn haar_unitary(n: usize, rng: &mut LabRng) -> ComplexMatrix {
    let z = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_inner(q)
}

/// Haar-random element of SU(n): a U(n) sample divided by the principal
/// `n`-th root of its determinant.
pub fn haar_special_unitary(n: usize, rng: &mut LabRng) -> ComplexMatrix {
    let u = haar_unitary(n, rng);
    let phase = u.determinant().arg();
    u.scale(C64::from_polar(1.0, -phase / n as f64))
}

/// How group elements map to matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepMap {
    /// One matrix per element of a finite group, in table order.
    Matrices(Vec<ComplexMatrix>),
    /// U(1) character sum `diag(e^{i w_k θ})`.
    U1Weights(Vec<i64>),
    /// Spin-`(dim−1)/2` irreducible representation of SU(2).
    Su2Spin { dim: usize },
    Su3Fundamental,
    /// Complex conjugate of the fundamental representation.
    Su3Conjugate,
    Trivial { dim: usize },
    DirectSum(Vec<RepMap>),
}

impl RepMap {
    pub fn dim(&self) -> usize {
        match self {
            RepMap::Matrices(m) => m.first().map_or(0, ComplexMatrix::dim),
            RepMap::U1Weights(w) => w.len(),
            RepMap::Su2Spin { dim } | RepMap::Trivial { dim } => *dim,
            RepMap::Su3Fundamental | RepMap::Su3Conjugate => 3,
            RepMap::DirectSum(parts) => parts.iter().map(RepMap::dim).sum(),
        }
    }

    fn check_kind(&self, kind: GroupKind, order: Option<usize>) -> Result<()> {
        let ok = match self {
            RepMap::Matrices(m) => {
                kind == GroupKind::FiniteTable && Some(m.len()) == order
            }
            RepMap::U1Weights(_) => kind == GroupKind::U1,
            RepMap::Su2Spin { .. } => kind == GroupKind::SU2,
            RepMap::Su3Fundamental | RepMap::Su3Conjugate => kind == GroupKind::SU3,
            RepMap::Trivial { .. } => true,
            RepMap::DirectSum(parts) => {
                for p in parts {
                    p.check_kind(kind, order)?;
                }
                !parts.is_empty()
            }
        };
        if !ok {
            return Err(Error::InvalidRep(format!(
                "representation {} is not compatible with a {kind} group",
                self.name()
            )));
        }
        if self.dim() == 0 {
            return Err(Error::InvalidRep("representation dimension must be positive".into()));
        }
        if let RepMap::Matrices(m) = self {
            let d = m[0].dim();
            if m.iter().any(|x| x.dim() != d) {
                return Err(Error::InvalidRep("matrices have differing dimensions".into()));
            }
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        match self {
            RepMap::Matrices(_) => "matrices",
            RepMap::U1Weights(_) => "u1_weights",
            RepMap::Su2Spin { .. } => "su2_spin",
            RepMap::Su3Fundamental => "su3_fundamental",
            RepMap::Su3Conjugate => "su3_conjugate",
            RepMap::Trivial { .. } => "trivial",
            RepMap::DirectSum(_) => "direct_sum",
        }
    }

    fn matrix(&self, g: &GroupElement) -> ComplexMatrix {
        match (self, g) {
            (RepMap::Trivial { dim }, _) => ComplexMatrix::identity(*dim),
            (RepMap::Matrices(m), GroupElement::Finite(i)) => m[*i].clone(),
            (RepMap::U1Weights(w), GroupElement::U1(t)) => ComplexMatrix::diagonal(
                &w.iter()
                    .map(|&k| C64::from_polar(1.0, k as f64 * t))
                    .collect::<Vec<_>>(),
            ),
            (RepMap::Su2Spin { dim }, GroupElement::Su2(e)) => spin_matrix(*dim, e),
            (RepMap::Su3Fundamental, GroupElement::Su3(m)) => m.clone(),
            (RepMap::Su3Conjugate, GroupElement::Su3(m)) => m.conj(),
            (RepMap::DirectSum(parts), _) => {
                ComplexMatrix::direct_sum(&parts.iter().map(|p| p.matrix(g)).collect::<Vec<_>>())
            }
            _ => unreachable!("element kind validated by the representation"),
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Wigner small-d matrix `<j m'| e^{−iθ J_y} |j m>`, basis ordered
/// `m = j, j−1, …, −j`.
fn wigner_small_d(dim: usize, theta: f64) -> DMatrix<f64> {
    let j2 = dim - 1;
    let (s, co) = (theta / 2.0).sin_cos();
    DMatrix::from_fn(dim, dim, |ap, a| {
        let pre = (factorial(j2 - ap) * factorial(ap) * factorial(j2 - a) * factorial(a)).sqrt();
        let lo = ap.saturating_sub(a);
        let hi = (j2 - a).min(ap);
        let mut sum = 0.0;
        for k in lo..=hi {
            let sign = if (a + k - ap) % 2 == 0 { 1.0 } else { -1.0 };
            let den = factorial(j2 - a - k) * factorial(k) * factorial(a + k - ap) * factorial(ap - k);
            let cos_pow = (j2 + ap - a - 2 * k) as i32;
            let sin_pow = (a + 2 * k - ap) as i32;
            sum += sign * pre / den * co.powi(cos_pow) * s.powi(sin_pow);
        }
        sum
    })
}

/// Spin representation `e^{iφJ_z} e^{−iθJ_y} e^{iψJ_z}`; dimension 2 is the
/// fundamental matrix [`su2_matrix`].
fn spin_matrix(dim: usize, e: &Euler) -> ComplexMatrix {
    if dim == 2 {
        return su2_matrix(e);
    }
    let small = wigner_small_d(dim, e.theta);
    let m = |a: usize| (dim as f64 - 1.0) / 2.0 - a as f64;
    ComplexMatrix::from_fn(dim, |ap, a| {
        C64::from_polar(1.0, m(ap) * e.phi + m(a) * e.psi) * small[(ap, a)]
    })
}

/// Wire form of [`UnitaryRep`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepDoc {
    pub group: GroupDescriptor,
    pub map: RepMap,
}

impl TryFrom<RepDoc> for UnitaryRep {
    type Error = Error;

    fn try_from(doc: RepDoc) -> Result<Self> {
        Self::new(doc.group, doc.map)
    }
}

impl From<UnitaryRep> for RepDoc {
    fn from(rep: UnitaryRep) -> Self {
        Self {
            group: rep.group,
            map: rep.map,
        }
    }
}

/// A unitary representation of a group on `C^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RepDoc", into = "RepDoc")]
pub struct UnitaryRep {
    group: GroupDescriptor,
    map: RepMap,
    dim: usize,
}

impl UnitaryRep {
    /// Validates compatibility; finite representations are checked for
    /// unitarity and the homomorphism identity over the whole table.
    pub fn new(group: GroupDescriptor, map: RepMap) -> Result<Self> {
        map.check_kind(group.kind(), group.order())?;
        let dim = map.dim();
        let rep = Self { group, map, dim };
        if let Some(t) = rep.group.finite() {
            let mats: Vec<_> = (0..t.order())
                .map(|i| rep.map.matrix(&GroupElement::Finite(i)))
                .collect();
            for (i, u) in mats.iter().enumerate() {
                let defect = u.unitarity_defect();
                if defect > UNITARY_TOL {
                    return Err(Error::InvalidRep(format!(
                        "matrix for element {i} is not unitary (defect {defect:.3e})"
                    )));
                }
            }
            for a in 0..t.order() {
                for b in 0..t.order() {
                    let err = (&(&mats[a] * &mats[b]) - &mats[t.mul(a, b)]).frobenius_norm();
                    if err > UNITARY_TOL {
                        return Err(Error::InvalidRep(format!(
                            "homomorphism fails for ({a}, {b}) with residual {err:.3e}"
                        )));
                    }
                }
            }
        }
        Ok(rep)
    }

    pub fn finite(group: FiniteGroup, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(GroupDescriptor::Finite(group), RepMap::Matrices(matrices))
    }

    pub fn trivial(group: GroupDescriptor, dim: usize) -> Result<Self> {
        Self::new(group, RepMap::Trivial { dim })
    }

    /// `Z_n` acting on `C^d` by `k ↦ diag(ω^{k·0}, ω^{k·1}, …, ω^{k(d−1)})`.
    pub fn cyclic(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidRep("order and dimension must be positive".into()));
        }
        let mats = (0..n)
            .map(|k| {
                ComplexMatrix::diagonal(
                    &(0..d)
                        .map(|i| C64::from_polar(1.0, TWO_PI * ((k * i) % n) as f64 / n as f64))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Self::finite(FiniteGroup::cyclic(n), mats)
    }

    /// `Q_8` through its 2×2 representation inside SU(2), padded by a trivial
    /// block when `d > 2`.
    pub fn quaternion(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidRep("quaternion representation needs d ≥ 2".into()));
        }
        let (_, mats) = quaternion_matrices();
        let group = FiniteGroup::quaternion();
        let mats = mats
            .into_iter()
            .map(|m| {
                if d > 2 {
                    ComplexMatrix::direct_sum(&[m, ComplexMatrix::identity(d - 2)])
                } else {
                    m
                }
            })
            .collect();
        Self::finite(group, mats)
    }

    pub fn u1(weights: Vec<i64>) -> Result<Self> {
        Self::new(GroupDescriptor::U1, RepMap::U1Weights(weights))
    }

    /// Default U(1) weights `d−1, d−3, …, 1−d`; for `d = 2` this is `(1, −1)`.
    pub fn u1_default(d: usize) -> Result<Self> {
        Self::u1((0..d).map(|k| d as i64 - 1 - 2 * k as i64).collect())
    }

    pub fn su2_spin(dim: usize) -> Result<Self> {
        Self::new(GroupDescriptor::SU2, RepMap::Su2Spin { dim })
    }

    pub fn su2_fundamental() -> Self {
        Self::su2_spin(2).expect("fundamental SU(2)")
    }

    pub fn su3_fundamental() -> Self {
        Self::new(GroupDescriptor::SU3, RepMap::Su3Fundamental).expect("fundamental SU(3)")
    }

    /// Fundamental SU(3) representation plus a trivial block of size `d − 3`.
    pub fn su3_padded(d: usize) -> Result<Self> {
        match d {
            3 => Ok(Self::su3_fundamental()),
            d if d > 3 => Self::new(
                GroupDescriptor::SU3,
                RepMap::DirectSum(vec![RepMap::Su3Fundamental, RepMap::Trivial { dim: d - 3 }]),
            ),
            _ => Err(Error::InvalidRep("SU(3) representations need d ≥ 3".into())),
        }
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn map(&self) -> &RepMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `U(g)`.
    pub fn element_unitary(&self, g: &GroupElement) -> Result<ComplexMatrix> {
        self.group.validate(g)?;
        Ok(self.map.matrix(g))
    }

    /// Haar samples of the underlying group; see [`GroupDescriptor::haar_sample`].
    pub fn haar_sample(&self, seed: u64, count: usize) -> Result<Vec<GroupElement>> {
        if count == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        Ok(self.group.haar_sample(seed, count))
    }

    /// Gauge automorphism `α_g(A) = U(g) A U(g)^†`.
    pub fn act(&self, g: &GroupElement, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: a.dim(),
            });
        }
        Ok(a.conjugate_by(&self.element_unitary(g)?))
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p1 = P_n(x), p0 = P_{n−1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Deterministic SU(2) Haar integral of a matrix-valued function: Gauss–
/// Legendre in `θ` with the `sin θ / 2` density and equally spaced nodes in
/// `φ ∈ [0, 2π)` (`order` points) and `ψ ∈ [0, 4π)` (`2·order` points).
pub fn haar_quadrature_su2<F>(f: F, order: usize) -> Result<ComplexMatrix>
where
    F: Fn(&Euler) -> ComplexMatrix,
{
    if order < 4 {
        return Err(Error::InvalidArgument(format!("quadrature order {order} < 4")));
    }
    let (x, w) = gauss_legendre(order);
    let n_psi = 2 * order;
    let mut acc: Option<ComplexMatrix> = None;
    for (xi, wi) in x.iter().zip(&w) {
        // map [−1, 1] → [0, π]
        let theta = PI * (xi + 1.0) / 2.0;
        let wt = wi * PI / 2.0 * theta.sin() / 2.0;
        for a in 0..order {
            let phi = TWO_PI * a as f64 / order as f64;
            for b in 0..n_psi {
                let psi = FOUR_PI * b as f64 / n_psi as f64;
                let term = f(&Euler::new(phi, theta, psi))
                    .scale_real(wt / (order * n_psi) as f64);
                acc = Some(match acc {
                    None => term,
                    Some(s) => s + term,
                });
            }
        }
    }
    Ok(acc.expect("order ≥ 4 gives nodes"))
}

/// U(1) Haar integral by the `order`-point periodic trapezoid rule.
pub fn haar_quadrature_u1<F>(f: F, order: usize) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    if order < 4 {
        return Err(Error::InvalidArgument(format!("quadrature order {order} < 4")));
    }
    let mut acc = f(0.0);
    for k in 1..order {
        acc = acc + f(TWO_PI * k as f64 / order as f64);
    }
    Ok(acc.scale_real(1.0 / order as f64))
}
