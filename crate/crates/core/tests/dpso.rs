use num_complex::Complex64;
use proptest::prelude::*;

use qsv::basis::Axis;
use qsv::dpso::{
    build_strategy_operator, build_test_operator, dpso_estimates, dpso_estimator_range, dpso_sample_complexity,
    dpso_trials, dpso_verify, optimize_plan, optimize_plan_in, parse_layout, OptimizeMethod, PlanSpace, SamplingPlan,
    TrialRecord,
};
use qsv::hypotest::TestConfig;
use qsv::linalg::{max_abs_diff, DensityOperator, Operator, PureState, StateVector};
use qsv::measurement::PauliLayout;
use qsv::rng::stream_rng;
use qsv::sop::{build_l_z, sop_sample_complexity};
use qsv::target::{ghz, haar_random, zero_state};
use rand::Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn dense(letters: &str) -> Operator {
    let (o, one) = (c(0.0), c(1.0));
    letters
        .chars()
        .map(|p| match p {
            'I' => Operator::from_row_slice(2, 2, &[one, o, o, one]),
            _ => Operator::from_row_slice(2, 2, &[one, o, o, -one]),
        })
        .reduce(|a, b| a.kronecker(&b))
        .unwrap()
}

/// `|z⟩_J ⊗ |φ⟩_K` on the full register, assembled qubit by qubit from the
/// eigenvectors written out by hand.
fn embed(layout: &PauliLayout, z: &[u8], phi: &PureState) -> StateVector {
    let n = layout.num_qubits();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    let eig = |a: Axis, b: u8| -> [Complex64; 2] {
        let s = if b == 0 { c(1.0) } else { c(-1.0) };
        match a {
            Axis::Z => if b == 0 { [c(1.0), c(0.0)] } else { [c(0.0), c(1.0)] },
            Axis::X => [c(h), s * h],
            Axis::Y => [c(h), s * i * h],
        }
    };
    let k = layout.unmeasured();
    StateVector::from_fn(1 << n, |idx, _| {
        let bit = |q: usize| (idx >> (n - 1 - q)) & 1;
        let kb = k.iter().fold(0usize, |acc, q| (acc << 1) | bit(*q));
        let mut amp = phi.amplitude(kb);
        for ((q, a), zb) in layout.measured().iter().zip(z) {
            amp *= eig(*a, *zb)[bit(*q)];
        }
        amp
    })
}

fn random_layout<R: Rng>(n: usize, r: usize, rng: &mut R) -> PauliLayout {
    let all = PauliLayout::all(n, r).unwrap();
    all[rng.random_range(0..all.len())].clone()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn ghz3_zz_operator() {
    let (g, _) = ghz(3).unwrap();
    let op = build_test_operator(&g, &parse_layout("ZZ_").unwrap()).unwrap();
    let expect = (dense("III") + dense("ZZI") + dense("ZIZ") + dense("IZZ")) * c(0.25);
    assert!(max_abs_diff(&op.matrix, &expect) < 1e-12);
    assert_eq!(op.branches.len(), 2);
}

#[test]
fn zero_state_is_fixed_by_every_layout() {
    let t = zero_state(3).unwrap();
    for l in PauliLayout::all(3, 1).unwrap() {
        let op = build_test_operator(&t, &l).unwrap();
        assert!((op.matrix[(0, 0)].re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn branch_projectors_reassemble_the_operator() {
    let mut rng = stream_rng(3, 0);
    for seed in 0..20u64 {
        let n = rng.random_range(2..=4usize);
        let r = rng.random_range(1..n);
        let t = haar_random(n, seed).unwrap();
        let layout = random_layout(n, r, &mut rng);
        let op = build_test_operator(&t, &layout).unwrap();
        let vecs: Vec<StateVector> = op.branches.iter().map(|(z, phi)| embed(&layout, z, phi)).collect();
        let dim = 1usize << n;
        let mut sum = Operator::zeros(dim, dim);
        for (a, va) in vecs.iter().enumerate() {
            assert!((va.norm() - 1.0).abs() < 1e-12);
            for vb in &vecs[a + 1..] {
                assert!(va.dotc(vb).norm() < 1e-12);
            }
            sum += va * va.adjoint();
        }
        assert!(max_abs_diff(&sum, &op.matrix) < 1e-12);
    }
}

#[test]
fn level_one_z_layouts_match_sop_projectors() {
    for seed in 0..10u64 {
        let n = 2 + (seed % 3) as usize;
        let t = haar_random(n, 40 + seed).unwrap();
        for k in 0..n {
            let layout = PauliLayout::from_unmeasured(n, &[k], &vec![Axis::Z; n - 1]).unwrap();
            let op = build_test_operator(&t, &layout).unwrap();
            assert_eq!(op.branches.len(), 1 << (n - 1));
            for (z, phi) in &op.branches {
                let zi = z.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
                let lz = build_l_z(&t, &[k], zi).unwrap();
                assert!(max_abs_diff(&phi.projector(), &lz) < 1e-12);
            }
        }
    }
}

#[test]
fn ghz3_plan_gaps() {
    let (g, _) = ghz(3).unwrap();
    let cases = [
        (SamplingPlan::naive_uniform(3, 1).unwrap(), 4.0 / 9.0),
        (SamplingPlan::ghz_class_uniform(3, 1).unwrap(), 0.5),
        (SamplingPlan::naive_uniform(3, 2).unwrap(), 2.0 / 3.0),
        (SamplingPlan::ghz_class_uniform(3, 2).unwrap(), 2.0 / 3.0),
    ];
    for (plan, nu) in cases {
        let s = build_strategy_operator(&g, &plan).unwrap();
        assert!((s.gap().unwrap() - nu).abs() < 1e-10);
    }
}

#[test]
fn strategy_matches_weighted_test_operators() {
    let mut rng = stream_rng(4, 0);
    for seed in 0..10u64 {
        let n = rng.random_range(2..=4usize);
        let r = rng.random_range(1..n);
        let t = haar_random(n, 70 + seed).unwrap();
        let plan = SamplingPlan::random_product(n, r, &mut rng).unwrap();
        let dim = 1usize << n;
        let mut sum = Operator::zeros(dim, dim);
        for (l, p) in plan.entries() {
            for (z, phi) in build_test_operator(&t, l).unwrap().branches {
                let v = embed(l, &z, &phi);
                sum += &v * v.adjoint() * c(*p);
            }
        }
        let s = build_strategy_operator(&t, &plan).unwrap();
        assert!(max_abs_diff(s.matrix(), &sum) < 1e-12);
    }
}

#[test]
fn exact_device_mean_is_one() {
    let (g, _) = ghz(3).unwrap();
    let plan = SamplingPlan::naive_uniform(3, 1).unwrap();
    let est = dpso_estimates(&g.state().density(), &g, &plan, 100_000, 5).unwrap();
    let (mean, se) = mean_and_se(&est);
    assert!((mean - 1.0).abs() < 4.0 * se, "{mean}");
}

#[test]
fn maximally_mixed_mean_is_normalized_trace() {
    for r in 1..=2 {
        let t = haar_random(3, 90 + r as u64).unwrap();
        let plan = SamplingPlan::naive_uniform(3, r).unwrap();
        let exact = build_strategy_operator(&t, &plan).unwrap().matrix().trace().re / 8.0;
        let est = dpso_estimates(&DensityOperator::maximally_mixed(3), &t, &plan, 100_000, 6).unwrap();
        let (mean, se) = mean_and_se(&est);
        assert!((mean - exact).abs() < 4.0 * se, "r={r}: {mean} vs {exact}");
        assert!(est.iter().all(|e| e.abs() <= (1u64 << r) as f64 + 1e-12));
    }
}

#[test]
fn trial_records_and_csv() {
    let (g, _) = ghz(3).unwrap();
    let plan = SamplingPlan::ghz_class_uniform(3, 1).unwrap();
    let rho = g.state().density();
    let recs = dpso_trials(&rho, &g, &plan, 50, 9).unwrap();
    assert_eq!(recs, dpso_trials(&rho, &g, &plan, 50, 9).unwrap());
    assert_ne!(recs, dpso_trials(&rho, &g, &plan, 50, 10).unwrap());
    assert_eq!(TrialRecord::CSV_HEADER.split(',').count(), 7);
    for (i, rec) in recs.iter().enumerate() {
        let row = rec.csv_row();
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[0], i.to_string());
        assert_eq!(cols[1], rec.layout.unmeasured()[0].to_string());
        assert_eq!(cols[3].len(), 2);
        assert_eq!(cols[4].len(), 1);
        assert_eq!(cols[6].parse::<f64>().unwrap(), rec.omega_hat);
    }
}

#[test]
fn verify_decisions() {
    let (g, _) = ghz(3).unwrap();
    let plan = SamplingPlan::ghz_class_uniform(3, 1).unwrap();
    let omega = build_strategy_operator(&g, &plan).unwrap();
    let nu = omega.gap().unwrap();
    let (a, b) = dpso_estimator_range(1, false);
    let cfg = TestConfig::new(0.3, 0.1, a, b, nu).unwrap();
    let n = dpso_sample_complexity(1, 0.3, 0.1, nu).unwrap();
    assert_eq!(n, (8.0 * 10f64.ln() / (0.25 * 0.09)).ceil() as u64);
    let accept = dpso_verify(&g.state().density(), &g, &plan, &cfg, n, 1).unwrap();
    assert_eq!(accept.decision.to_string(), "accept");
    let v2 = PureState::new(omega.spectrum().eigenvector(1)).unwrap();
    let worst = DensityOperator::mixture(&[(0.7, &g.state().density()), (0.3, &v2.density())]).unwrap();
    assert!((omega.pass_probability(&worst) - (1.0 - 0.3 * nu)).abs() < 1e-10);
    let reject = dpso_verify(&worst, &g, &plan, &cfg, n, 2).unwrap();
    assert_eq!(reject.decision.to_string(), "reject");
    assert!(dpso_verify(&g.state().density(), &g, &plan, &cfg, 0, 1).is_err());
    let wrong = SamplingPlan::naive_uniform(4, 1).unwrap();
    assert!(dpso_verify(&g.state().density(), &g, &wrong, &cfg, 10, 1).is_err());
}

#[test]
fn complexity_relations() {
    assert_eq!(dpso_sample_complexity(1, 0.1, 0.01, 0.5).unwrap(), 14737);
    for level in 1..=3usize {
        let d = dpso_sample_complexity(level, 0.1, 0.01, 0.5).unwrap() as f64;
        let d_next = dpso_sample_complexity(level + 1, 0.1, 0.01, 0.5).unwrap() as f64;
        assert!((d_next / d - 4.0).abs() < 1e-3);
        let s = sop_sample_complexity(level, 0.1, 0.01, 0.5).unwrap() as f64;
        let factor = (1u64 << (2 * level - 2)) as f64;
        assert!((s / d - factor).abs() / factor < 1e-3);
    }
    assert!(dpso_sample_complexity(1, 0.1, 0.01, 0.0).is_err());
}

#[test]
fn plan_validation_and_json() {
    let l1 = parse_layout("XZ_").unwrap();
    let l2 = parse_layout("_YY").unwrap();
    assert!(SamplingPlan::new(vec![(l1.clone(), 0.5), (l2.clone(), 0.4)]).is_err());
    assert!(SamplingPlan::new(vec![(l1.clone(), 1.5), (l2.clone(), -0.5)]).is_err());
    assert!(SamplingPlan::new(vec![(l1.clone(), 0.5), (parse_layout("X__").unwrap(), 0.5)]).is_err());
    assert!(SamplingPlan::new(vec![]).is_err());
    assert!(parse_layout("XQ_").is_err());
    let plan = SamplingPlan::new(vec![(l1, 0.25), (l2, 0.75)]).unwrap();
    assert_eq!(SamplingPlan::from_json(&plan.to_json()).unwrap(), plan);
    let naive = SamplingPlan::naive_uniform(4, 2).unwrap();
    assert_eq!(naive.entries().len(), 6 * 9);
    assert_eq!(SamplingPlan::from_json(&naive.to_json()).unwrap(), naive);
}

#[test]
fn optimizer_examples() {
    let (g, s) = ghz(3).unwrap();
    let naive = build_strategy_operator(&g, &SamplingPlan::naive_uniform(3, 1).unwrap()).unwrap().gap().unwrap();
    for method in [OptimizeMethod::ProjectedAscent, OptimizeMethod::Grid { resolution: 4 }, OptimizeMethod::StabilizerLp] {
        let out = optimize_plan(&s, 1, method).unwrap();
        assert!(out.nu >= naive - 1e-12 && out.nu <= 1.0 + 1e-9, "{method}: {}", out.nu);
        let check = build_strategy_operator(&g, &out.plan).unwrap().gap().unwrap();
        assert!((check - out.nu).abs() < 1e-8, "{method}");
    }
    let lp = optimize_plan(&s, 1, OptimizeMethod::StabilizerLp).unwrap();
    assert!(lp.nu >= 0.5 - 1e-10);
    assert!(optimize_plan(&g, 1, OptimizeMethod::StabilizerLp).is_err());
    let only = parse_layout("ZX_").unwrap();
    let out = optimize_plan_in(&g, &PlanSpace::Layouts(vec![only.clone()]), OptimizeMethod::ProjectedAscent, 1).unwrap();
    assert_eq!(out.plan.entries(), &[(only, 1.0)]);
    assert_eq!("lp".parse::<OptimizeMethod>().unwrap(), OptimizeMethod::StabilizerLp);
    assert!("simplex".parse::<OptimizeMethod>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn test_operators_are_projectors_fixing_the_target(n in 2usize..=5, seed in any::<u64>(), pick in any::<u64>()) {
        let mut rng = stream_rng(pick, 0);
        let r = rng.random_range(1..n);
        let t = haar_random(n, seed).unwrap();
        let layout = random_layout(n, r, &mut rng);
        let op = build_test_operator(&t, &layout).unwrap();
        prop_assert!(max_abs_diff(&(&op.matrix * &op.matrix), &op.matrix) < 1e-9);
        let psi = t.state().amplitudes();
        prop_assert!((&op.matrix * psi - psi).norm() < 1e-9);
    }
}
