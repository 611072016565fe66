use proptest::prelude::*;

use wignerlab::groups::{haar_unitary, UnitaryRep};
use wignerlab::matrix::{
    commutant, double_commutant, eig_hermitian, kron, null_space, ComplexMatrix, Subspace,
    DEFAULT_RANK_TOL,
};
use wignerlab::rng::{complex_normal, stream_rng, LabRng};

fn ginibre(d: usize, rng: &mut LabRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |_, _| complex_normal(rng))
}

/// A few representations with nontrivial commutant structure.
fn rep(kind: usize, d: usize) -> UnitaryRep {
    match kind % 5 {
        0 => UnitaryRep::su2_spin(d),
        1 => UnitaryRep::u1_default(d),
        2 => UnitaryRep::cyclic(3, d),
        3 => UnitaryRep::quaternion(d.max(2)),
        _ => UnitaryRep::su3_padded(d.max(3)),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_reconstruction(seed in any::<u64>(), d in 1usize..8, scale in -6i32..6) {
        let g = ginibre(d, &mut stream_rng(seed, 0));
        let m = g.hermitian_part().scale_real(10f64.powi(scale));
        let eig = eig_hermitian(&m).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let resid = (&m - &eig.reconstruct()).frobenius_norm();
        prop_assert!(resid <= 1e-10 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..4) {
        // small Gaussian integers multiply exactly, so equality is exact
        let mut rng = stream_rng(seed, 0);
        let mut int = |d| ComplexMatrix::from_fn(d, |_, _| {
            let z = complex_normal(&mut rng) * 8.0;
            num_complex::Complex64::new(z.re.round(), z.im.round())
        });
        let (a, b, c) = (int(da), int(db), int(dc));
        prop_assert_eq!(kron(&kron(&a, &b), &c), kron(&a, &kron(&b, &c)));
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let (a, c) = (ginibre(da, &mut rng), ginibre(da, &mut rng));
        let (b, d) = (ginibre(db, &mut rng), ginibre(db, &mut rng));
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * lhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn double_commutant_contains_generators(seed in any::<u64>(), kind in 0usize..5, d in 2usize..5, n in 1usize..3) {
        let r = rep(kind, d);
        let gens: Vec<ComplexMatrix> = r
            .haar_sample(seed, n)
            .unwrap()
            .iter()
            .map(|g| r.element_unitary(g).unwrap())
            .collect();
        let dim = r.dim();
        let dc = double_commutant(&gens, dim).unwrap();
        prop_assert!(dc.orthonormality_defect() <= 1e-10);
        for g in gens.iter().chain(std::iter::once(&ComplexMatrix::identity(dim))) {
            let v = g.vectorize();
            prop_assert!(dc.residual(&v) <= 1e-9 * v.norm());
        }
        // every element of the commutant commutes with every generator
        for m in commutant(&gens, dim).unwrap().matrices() {
            for g in &gens {
                prop_assert!((&(&m * g) - &(g * &m)).frobenius_norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn null_space_of_low_rank(seed in any::<u64>(), d in 2usize..8, r in 1usize..8) {
        let r = r.min(d - 1);
        let mut rng = stream_rng(seed, 0);
        // d×r times r×d through zero-padded square factors
        let left = ComplexMatrix::from_fn(d, |_, j| if j < r { complex_normal(&mut rng) } else { 0.0.into() });
        let right = ginibre(d, &mut rng);
        let m = &left * &right;
        let ns = null_space(&m, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(ns.dim(), d - r);
        prop_assert!(ns.orthonormality_defect() <= 1e-10);
        for v in ns.vectors() {
            prop_assert!((m.inner() * &v).norm() <= 1e-9 * m.frobenius_norm());
        }
    }

    #[test]
    fn intersection_methods_agree(seed in any::<u64>(), n in 4usize..10, k in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        // a common part of dimension k plus independent random parts
        let common: Vec<_> = (0..k).map(|_| ginibre(n, &mut rng).inner().column(0).into_owned()).collect();
        let spaces: Vec<Subspace> = (0..3)
            .map(|_| {
                let mut vs = common.clone();
                vs.push(ginibre(n, &mut rng).inner().column(0).into_owned());
                Subspace::from_spanning(n, &vs, DEFAULT_RANK_TOL)
            })
            .collect();
        let a = Subspace::intersection(&spaces).unwrap();
        let b = Subspace::intersection_by_stacking(&spaces, DEFAULT_RANK_TOL).unwrap();
        let expected = if n >= 2 * k + 2 { k } else { a.dim() };
        prop_assert_eq!(a.dim(), expected);
        prop_assert_eq!(a.dim(), b.dim());
        prop_assert!(wignerlab::matrix::largest_principal_angle(&a, &b) <= 1e-8);
    }

    #[test]
    fn automorphism_properties(seed in any::<u64>(), kind in 0usize..5, d in 2usize..6) {
        let r = rep(kind, d);
        let g = r.haar_sample(seed, 1).unwrap().remove(0);
        let mut rng = stream_rng(seed, 1);
        let dim = r.dim();
        let (a, b) = (ginibre(dim, &mut rng), ginibre(dim, &mut rng));
        let ab = r.act(&g, &(&a * &b)).unwrap();
        let prod = &r.act(&g, &a).unwrap() * &r.act(&g, &b).unwrap();
        prop_assert!((&ab - &prod).frobenius_norm() <= 1e-9);
        let adj = (&r.act(&g, &a.adjoint()).unwrap() - &r.act(&g, &a).unwrap().adjoint()).frobenius_norm();
        prop_assert!(adj <= 1e-10);
        prop_assert!((r.act(&g, &a).unwrap().op_norm() - a.op_norm()).abs() <= 1e-9);
    }

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), n in 1usize..7) {
        let u = haar_unitary(n, &mut stream_rng(seed, 0));
        prop_assert!(u.unitarity_defect() <= 1e-12);
    }
}
