use proptest::prelude::*;

use qsv::devicesim::{density_to_json, DeviceKind, DeviceSource};
use qsv::dpso::{build_strategy_operator, SamplingPlan};
use qsv::linalg::{fidelity, hermitian_eigenvalues, max_abs_diff};
use qsv::rng::stream_rng;
use qsv::sop::build_l;
use qsv::target::{ghz, haar_random};

#[test]
fn exact_source_has_unit_fidelity() {
    let (g, _) = ghz(3).unwrap();
    let src = DeviceSource::exact(g.state());
    assert_eq!(src.kind(), DeviceKind::Exact);
    assert_eq!(src.num_qubits(), 3);
    assert!((fidelity(src.emit(), g.state()).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn worst_case_saturates_the_bound() {
    let (g, _) = ghz(3).unwrap();
    let omega = build_strategy_operator(&g, &SamplingPlan::ghz_class_uniform(3, 1).unwrap()).unwrap();
    let nu = omega.gap().unwrap();
    for eps in [0.01, 0.1, 0.3, 1.0] {
        let src = DeviceSource::worst_case(g.state(), &omega, eps).unwrap();
        assert_eq!(src.kind(), DeviceKind::WorstCase { epsilon: eps });
        assert!((fidelity(src.emit(), g.state()).unwrap() - (1.0 - eps)).abs() < 1e-10);
        assert!((omega.pass_probability(src.emit()) - (1.0 - nu * eps)).abs() < 1e-10);
    }
    assert!(DeviceSource::worst_case(g.state(), &omega, 1.5).is_err());
    let (other, _) = ghz(2).unwrap();
    assert!(DeviceSource::worst_case(other.state(), &omega, 0.1).is_err());
}

#[test]
fn depolarized_fidelity() {
    let psi = haar_random(3, 2).unwrap();
    let src = DeviceSource::depolarized(psi.state(), 0.4).unwrap();
    assert!((fidelity(src.emit(), psi.state()).unwrap() - (0.6 + 0.4 / 8.0)).abs() < 1e-12);
    assert!(DeviceSource::depolarized(psi.state(), -0.1).is_err());
}

#[test]
fn density_json_round_trip() {
    let psi = haar_random(2, 3).unwrap();
    let src = DeviceSource::depolarized(psi.state(), 0.25).unwrap();
    let text = density_to_json(src.emit());
    let back = DeviceSource::from_json(&text).unwrap();
    assert_eq!(back.kind(), DeviceKind::File);
    assert!(max_abs_diff(back.emit().matrix(), src.emit().matrix()) < 1e-15);
    let bare = DeviceSource::from_json("[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]").unwrap();
    assert_eq!(bare.num_qubits(), 1);
}

#[test]
fn invalid_density_files() {
    for bad in [
        "[[[1, 0], [0, 0]]]",
        "[[[1, 0], [0, 0]], [[0, 0]]]",
        "[[[0.5, 0], [0.5, 0]], [[0, 0], [0.5, 0]]]",
        "[[[0.7, 0], [0, 0]], [[0, 0], [0.7, 0]]]",
        "[[[1.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]]",
        "{\"rows\": []}",
        "[]",
    ] {
        assert!(DeviceSource::from_json(bad).is_err(), "{bad}");
    }
    let dir = tempfile::tempdir().unwrap();
    assert!(DeviceSource::load(&dir.path().join("absent.json")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn worst_case_states_are_valid(n in 2usize..=4, seed in any::<u64>(), eps in 0.0f64..=1.0) {
        let psi = haar_random(n, seed).unwrap();
        let mut rng = stream_rng(seed, 1);
        let omega = if seed % 2 == 0 {
            build_l(&psi, 1).unwrap()
        } else {
            build_strategy_operator(&psi, &SamplingPlan::random_product(n, 1, &mut rng).unwrap()).unwrap()
        };
        let src = DeviceSource::worst_case(psi.state(), &omega, eps).unwrap();
        let rho = src.emit();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-10);
        prop_assert!(hermitian_eigenvalues(rho.matrix()).unwrap().iter().all(|v| *v > -1e-10));
        prop_assert!((fidelity(rho, psi.state()).unwrap() - (1.0 - eps)).abs() < 1e-10);
        let nu = omega.gap().unwrap();
        prop_assert!((omega.pass_probability(rho) - (1.0 - nu * eps)).abs() < 1e-10);
    }
}
