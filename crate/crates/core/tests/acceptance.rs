//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;

use wignerlab::bundle::{assign_invariant_field, BundleSpec, FieldMethod};
use wignerlab::crossed::{
    crossed_report, tensor_iso_check, CrossedProductModel, COVARIANCE_TOL, DEFAULT_AMBIENT_CAP,
};
use wignerlab::entropy::{partition_entropy, vn_entropy, LogBase, PartitionWeights};
use wignerlab::groups::{
    haar_special_unitary, haar_unitary, Euler, FiniteGroup, GroupDescriptor, GroupElement, RepMap,
    UnitaryRep,
};
use wignerlab::matrix::ComplexMatrix;
use wignerlab::rng::stream_rng;
use wignerlab::states::{
    continuity_bound, default_order, haar_average, pullback, AveragingMethod, DensityState,
};
use wignerlab::wigner::{cesaro_fixed_point, random_problems, verify_batch, ANGLE_TOL};

const BATCH_SEED: u64 = 20_240_601;
const BATCH_SIZE: usize = 200;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wigner_identity() -> Outcome {
    let problems = random_problems(BATCH_SEED, BATCH_SIZE);
    let reports = verify_batch(&problems);
    let mut worst_angle = 0.0_f64;
    let mut failures = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        match r {
            Ok(r) => {
                worst_angle = worst_angle.max(r.largest_principal_angle);
                if !(r.verdict
                    && r.intersection_dim == r.averaged_dim
                    && r.largest_principal_angle <= ANGLE_TOL)
                {
                    failures.push(format!(
                        "#{i}: dims {} vs {}, angle {:.2e}",
                        r.intersection_dim, r.averaged_dim, r.largest_principal_angle
                    ));
                }
            }
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{BATCH_SIZE} problems, worst angle {worst_angle:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn invariant_state() -> Outcome {
    let problems = random_problems(BATCH_SEED, BATCH_SIZE);
    let results: Vec<_> = problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let rho0 = DensityState::random(p.d(), &mut stream_rng(BATCH_SEED ^ 0xC0FFEE, i as u64));
            cesaro_fixed_point(p, &rho0, 1e-10, 100_000)
        })
        .collect();
    let mut worst = (0.0_f64, 0.0_f64, 0usize);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                worst = (
                    worst.0.max(r.residual),
                    worst.1.max(r.per_element_residual),
                    worst.2.max(r.iterations),
                );
                if r.residual > 1e-10 || r.per_element_residual > 1e-9 || r.iterations > 100_000 {
                    failures.push(format!(
                        "#{i}: residual {:.2e}, per-element {:.2e}",
                        r.residual, r.per_element_residual
                    ));
                }
            }
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    check(
        failures.is_empty(),
        format!(
            "residual ≤ {:.2e}, per-element ≤ {:.2e}, iterations ≤ {}{}",
            worst.0,
            worst.1,
            worst.2,
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn haar_machinery() -> Outcome {
    let rep = UnitaryRep::su2_fundamental();
    let method = AveragingMethod::Quadrature {
        order: default_order(2),
    };
    let mixed = DensityState::maximally_mixed(2);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let rho = DensityState::random(2, &mut stream_rng(31, k));
        let avg = haar_average(&rep, &rho, &method).map_err(|e| e.to_string())?;
        worst = worst.max(avg.state.trace_distance(&mixed));
    }
    let mut detail = format!("quadrature max ‖ρ̄ − I/2‖_tr = {worst:.2e}");
    let mut ok = worst <= 1e-8;
    for n in [2usize, 3] {
        let samples = 100_000;
        let values: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let u = haar_unitary(n, &mut stream_rng(77 + n as u64, i as u64));
                u.get(0, 0).norm_sqr()
            })
            .collect();
        let m = samples as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        let z = (mean - 1.0 / n as f64).abs() / se;
        ok &= z <= 4.0;
        detail.push_str(&format!("; n={n}: E|U11|² = {mean:.5} ({z:.2} s.e.)"));
    }
    check(ok, detail)
}

fn continuity() -> Outcome {
    let mut worst_slack = f64::NEG_INFINITY;
    for k in 0..100u64 {
        let dim = 2 + (k % 5) as usize;
        let rep = UnitaryRep::su2_spin(dim).map_err(|e| e.to_string())?;
        let gh = rep.haar_sample(1000 + k, 2).map_err(|e| e.to_string())?;
        let rho = DensityState::random(dim, &mut stream_rng(2000, k));
        let b = continuity_bound(&rep, &gh[0], &gh[1], &rho).map_err(|e| e.to_string())?;
        worst_slack = worst_slack.max(b.distance - b.bound);
    }
    let mut ok = worst_slack <= 1e-9;
    let rep = UnitaryRep::su2_spin(4).map_err(|e| e.to_string())?;
    let rho = DensityState::random(4, &mut stream_rng(3000, 0));
    let g = Euler::new(1.1, 0.7, 2.9);
    let mut last = f64::INFINITY;
    let mut monotone = true;
    for j in 0..=10 {
        let t = 10f64.powi(-j);
        let h = Euler::new(
            g.phi * (1.0 - t) + t * PI,
            g.theta * (1.0 - t) + t * PI / 2.0,
            g.psi * (1.0 - t) + t * 2.0 * PI,
        );
        let b = continuity_bound(&rep, &GroupElement::Su2(g), &GroupElement::Su2(h), &rho)
            .map_err(|e| e.to_string())?;
        monotone &= b.distance <= last + 1e-15;
        last = b.distance;
    }
    ok &= monotone && last < 1e-6;
    check(
        ok,
        format!("100 triples, max(distance − bound) = {worst_slack:.2e}; path endpoint distance {last:.2e}"),
    )
}

fn crossed_product() -> Outcome {
    let z = ComplexMatrix::diagonal(&[
        num_complex::Complex64::new(1.0, 0.0),
        num_complex::Complex64::new(-1.0, 0.0),
    ]);
    let inner = CrossedProductModel::new(
        UnitaryRep::finite(FiniteGroup::cyclic(2), vec![ComplexMatrix::identity(2), z])
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let trivial = CrossedProductModel::trivial(FiniteGroup::cyclic(2), 2).map_err(|e| e.to_string())?;
    let q8 = CrossedProductModel::new(UnitaryRep::quaternion(2).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let trivial1 = CrossedProductModel::trivial(FiniteGroup::cyclic(2), 1).map_err(|e| e.to_string())?;
    let z3 = CrossedProductModel::new(UnitaryRep::cyclic(3, 3).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let relabelled = q8.relabel(&[3, 1, 7, 0, 5, 2, 6, 4]).map_err(|e| e.to_string())?;

    let mut ok = true;
    let mut parts = Vec::new();
    for (name, m, want) in [
        ("trivial Z2 on M2", &trivial, Some(8)),
        ("inner Z2 on M2", &inner, Some(8)),
        ("Q8 on M2", &q8, Some(32)),
        ("Q8 relabelled", &relabelled, Some(32)),
        ("Z2 on C", &trivial1, Some(2)),
        ("Z3 on M3", &z3, Some(27)),
    ] {
        let r = crossed_report(m).map_err(|e| e.to_string())?;
        ok &= r.consistent
            && r.covariance_residual <= COVARIANCE_TOL
            && want.is_none_or(|w| r.closure_dim == w);
        parts.push(format!(
            "{name}: dim {}/{} cov {:.1e}",
            r.closure_dim, r.double_commutant_dim, r.covariance_residual
        ));
    }
    for models in [
        vec![trivial1.clone(), trivial1.clone()],
        vec![trivial.clone(), trivial1.clone()],
        vec![trivial1.clone(), trivial1.clone(), trivial1.clone()],
    ] {
        let r = tensor_iso_check(&models, DEFAULT_AMBIENT_CAP).map_err(|e| e.to_string())?;
        ok &= r.equal;
        parts.push(format!("tensor {}={}", r.tensor_dim, r.product_dim));
    }
    check(ok, parts.join(", "))
}

fn entropy() -> Outcome {
    let mut sweep = 0.0_f64;
    for n in 1..=64 {
        let w = PartitionWeights::uniform(n).map_err(|e| e.to_string())?;
        sweep = sweep.max((partition_entropy(&w, LogBase::E) - (n as f64).ln()).abs());
        let two = partition_entropy(&w, LogBase::Two);
        sweep = sweep.max((two * LN_2 - (n as f64).ln()).abs());
    }
    let mut mixed = 0.0_f64;
    for d in 1..=16 {
        let h = vn_entropy(&DensityState::maximally_mixed(d), LogBase::E).map_err(|e| e.to_string())?;
        mixed = mixed.max((h - (d as f64).ln()).abs());
    }
    let mut invariance = 0.0_f64;
    for k in 0..100u64 {
        let d = 2 + (k % 7) as usize;
        let mut rng = stream_rng(4000, k);
        let rho = DensityState::random(d, &mut rng);
        let u = haar_special_unitary(d, &mut rng);
        let moved = DensityState::new(rho.rho().conjugate_by_adjoint(&u)).map_err(|e| e.to_string())?;
        let a = vn_entropy(&rho, LogBase::E).map_err(|e| e.to_string())?;
        let b = vn_entropy(&moved, LogBase::E).map_err(|e| e.to_string())?;
        invariance = invariance.max((a - b).abs());
    }
    check(
        sweep <= 1e-12 && mixed <= 1e-12 && invariance <= 1e-10,
        format!("log n sweep {sweep:.1e}, log d {mixed:.1e}, unitary invariance {invariance:.1e}"),
    )
}

fn bundle() -> Outcome {
    let labels = ["(0,0)", "(0,1)", "(1,0)", "(1,1)", "(2,0)"];
    let specs = [
        (
            "SU(2)",
            BundleSpec::new(
                GroupDescriptor::SU2,
                labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.to_string(), RepMap::Su2Spin { dim: 2 + i }))
                    .collect(),
            ),
        ),
        (
            "U(1)",
            BundleSpec::new(
                GroupDescriptor::U1,
                labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        (l.to_string(), RepMap::U1Weights((0..=i as i64).map(|w| 2 * w - i as i64).collect()))
                    })
                    .collect(),
            ),
        ),
        (
            "Z2",
            BundleSpec::new(
                GroupDescriptor::Finite(FiniteGroup::cyclic(2)),
                labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let rep = UnitaryRep::cyclic(2, 2 + i).expect("cyclic rep");
                        (l.to_string(), rep.map().clone())
                    })
                    .collect(),
            ),
        ),
    ];
    let mut worst = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    for (name, spec) in specs {
        let spec = spec.map_err(|e| format!("{name}: {e}"))?;
        let field = assign_invariant_field(&spec, &FieldMethod::Auto, 55).map_err(|e| format!("{name}: {e}"))?;
        for label in labels {
            let state = field.restrict(label).map_err(|e| e.to_string())?;
            let rep = spec.rep(label).map_err(|e| e.to_string())?;
            for g in rep.haar_sample(66, 50).map_err(|e| e.to_string())? {
                let moved = pullback(rep, &g, state).map_err(|e| e.to_string())?;
                worst = worst.max(moved.trace_distance(state));
            }
            min_eig = min_eig.min(state.eigenvalues()[0]);
        }
    }
    check(
        worst <= 1e-6 && min_eig > 1e-10,
        format!("3 bundles × 5 points, invariance {worst:.1e}, min eigenvalue {min_eig:.2e}"),
    )
}

fn isometry_affinity() -> Outcome {
    let worst = (0..500u64)
        .into_par_iter()
        .map(|k| {
            let d = 2 + (k % 5) as usize;
            let rep = UnitaryRep::su2_spin(d).expect("spin rep");
            let g = rep.haar_sample(5000 + k, 1).expect("sample").remove(0);
            let mut rng = stream_rng(6000, k);
            let a = DensityState::random(d, &mut rng);
            let b = DensityState::random(d, &mut rng);
            let lambda = (k as f64 + 0.5) / 500.0;
            let pa = pullback(&rep, &g, &a).expect("pullback");
            let pb = pullback(&rep, &g, &b).expect("pullback");
            let iso = (pa.trace_distance(&pb) - a.trace_distance(&b)).abs();
            let mix = a.mix(&b, lambda).expect("mix");
            let lhs = pullback(&rep, &g, &mix).expect("pullback");
            let rhs = pa.mix(&pb, lambda).expect("mix");
            iso.max(lhs.trace_distance(&rhs))
        })
        .reduce(|| 0.0, f64::max);
    check(worst <= 1e-9, format!("500 instances, worst deviation {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("wigner set intersection identity", wigner_identity),
        ("invariant state by ergodic averaging", invariant_state),
        ("haar quadrature and sampling", haar_machinery),
        ("continuity of the pullback", continuity),
        ("crossed product covariance and dimensions", crossed_product),
        ("entropy of uniform partitions and states", entropy),
        ("invariant separating bundle field", bundle),
        ("isometry and affinity of pullbacks", isometry_affinity),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
