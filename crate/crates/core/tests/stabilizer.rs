use num_complex::Complex64;
use proptest::prelude::*;

use qsv::basis::Axis;
use qsv::combinatorics::binomial;
use qsv::dpso::{build_strategy_operator, SamplingPlan};
use qsv::linalg::{max_abs_diff, Operator, PureState};
use qsv::rng::stream_rng;
use qsv::stabilizer::{
    branch_sum_test_operator, general_test_operator, ghz_class_size, ghz_equivalence_classes, lp_optimize,
    measurement_intersection_size, outcome_projector, r_group, stabilizer_basis_diagonal, stabilizer_basis_projector,
    stabilizer_test_operator, uniform_gamma_table, uniform_gap, weighted_gamma, PauliString, StabilizerGroup,
    StabilizerTarget, SymplecticVector, UniformScheme,
};
use qsv::target::haar_random;
use qsv::Error;
use rand::Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense matrix of a letter string such as "ZZI", built independently.
fn dense(letters: &str) -> Operator {
    let (o, one, i) = (c(0.0), c(1.0), Complex64::new(0.0, 1.0));
    letters
        .chars()
        .map(|p| match p {
            'I' => Operator::from_row_slice(2, 2, &[one, o, o, one]),
            'X' => Operator::from_row_slice(2, 2, &[o, one, one, o]),
            'Y' => Operator::from_row_slice(2, 2, &[o, -i, i, o]),
            _ => Operator::from_row_slice(2, 2, &[one, o, o, -one]),
        })
        .reduce(|a, b| a.kronecker(&b))
        .unwrap()
}

fn mu(s: &str) -> SymplecticVector {
    let (mut x, mut z) = (0u64, 0u64);
    for (q, ch) in s.chars().enumerate() {
        if matches!(ch, 'X' | 'Y') {
            x |= 1 << q;
        }
        if matches!(ch, 'Z' | 'Y') {
            z |= 1 << q;
        }
    }
    SymplecticVector::new(s.len(), x, z).unwrap()
}

fn ghz3() -> StabilizerGroup {
    StabilizerGroup::ghz(3).unwrap()
}

fn ghz3_zz_expected() -> Operator {
    (dense("III") + dense("ZZI") + dense("ZIZ") + dense("IZZ")) * c(0.25)
}

/// Uniform weight-`t` vector, `1 <= t <= n`.
fn random_mu<R: Rng>(n: usize, t: usize, rng: &mut R) -> SymplecticVector {
    let mut qubits: Vec<usize> = (0..n).collect();
    for i in 0..t {
        let j = rng.random_range(i..n);
        qubits.swap(i, j);
    }
    let (mut x, mut z) = (0u64, 0u64);
    for &q in &qubits[..t] {
        match rng.random_range(0..3) {
            0 => x |= 1 << q,
            1 => z |= 1 << q,
            _ => {
                x |= 1 << q;
                z |= 1 << q;
            }
        }
    }
    SymplecticVector::new(n, x, z).unwrap()
}

#[test]
fn pauli_parsing_and_display() {
    let p: PauliString = "-XYZ".parse().unwrap();
    assert_eq!(p.to_string(), "-XYZ");
    assert_eq!(p.sign(), Some(-1));
    assert_eq!(p.weight(), 3);
    assert!(max_abs_diff(&p.to_operator().unwrap(), &(dense("XYZ") * c(-1.0))) < 1e-15);
    assert!("+XQ".parse::<PauliString>().is_err());
    // XY = iZ is not Hermitian
    let xy = PauliString::single(1, 0, Axis::X).mul(&PauliString::single(1, 0, Axis::Y));
    assert!(!xy.is_hermitian());
    assert_eq!(xy.sign(), None);
}

#[test]
fn outcome_projector_examples() {
    let z = mu("Z");
    let p = outcome_projector(&z, &[0]).unwrap();
    assert!(max_abs_diff(&p, &Operator::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])) < 1e-15);
    let zz = mu("ZZI");
    let p = outcome_projector(&zz, &[0, 0]).unwrap();
    let mut expect = Operator::zeros(8, 8);
    expect[(0, 0)] = c(1.0);
    expect[(1, 1)] = c(1.0);
    assert!(max_abs_diff(&p, &expect) < 1e-15);
    assert!(outcome_projector(&zz, &[0]).is_err());
}

#[test]
fn ghz3_zz_test_operator() {
    let s = ghz3();
    let rho = s.state().unwrap().density();
    let m = mu("ZZI");
    let expect = ghz3_zz_expected();
    assert!(max_abs_diff(&general_test_operator(&rho, &m).unwrap(), &expect) < 1e-12);
    assert!(max_abs_diff(&branch_sum_test_operator(&rho, &m).unwrap(), &expect) < 1e-12);
    assert!(max_abs_diff(&stabilizer_test_operator(&s, &m).unwrap(), &expect) < 1e-12);
}

#[test]
fn ghz3_r_group() {
    let r = r_group(&ghz3(), &mu("ZZI")).unwrap();
    assert_eq!(r.order(), 4);
    let expected = StabilizerGroup::from_strings(&["+ZZI", "+IZZ"]).unwrap();
    assert!(r.same_group(&expected));
    assert_eq!(measurement_intersection_size(&ghz3(), &mu("ZZI")), 2);
    // T_μ ∩ S = {I}: |R_μ| = 2^{n-t}
    let r = r_group(&ghz3(), &mu("XZI")).unwrap();
    assert_eq!(measurement_intersection_size(&ghz3(), &mu("XZI")), 1);
    assert_eq!(r.order(), 2);
}

#[test]
fn gamma_examples() {
    let s = ghz3();
    let g = stabilizer_basis_diagonal(&s, &mu("ZZI")).unwrap();
    assert!(g[0]);
    // bit 0 flips +XXX, bit 1 flips +ZZI
    assert!(g[0b001]);
    assert!(!g[0b010]);
}

#[test]
fn trivial_measurements_are_rejected() {
    let s = ghz3();
    assert!(matches!(r_group(&s, &mu("III")), Err(Error::Validation(_))));
    assert!(matches!(stabilizer_test_operator(&s, &mu("ZZZ")), Err(Error::Validation(_))));
    let rho = s.state().unwrap().density();
    assert!(general_test_operator(&rho, &mu("III")).is_err());
}

#[test]
fn zero_weight_outcomes_are_skipped() {
    // on |00⟩ the Z outcome 1 never occurs; the operator is built from the
    // populated branch, and a size mismatch is rejected
    let rho = PureState::basis(2, 0).density();
    let op = general_test_operator(&rho, &mu("ZI")).unwrap();
    assert!(max_abs_diff(&op, &branch_sum_test_operator(&rho, &mu("ZI")).unwrap()) < 1e-12);
    assert!((op[(0, 0)].re - 1.0).abs() < 1e-12);
    assert!(general_test_operator(&rho, &mu("ZII")).is_err());
}

#[test]
fn ghz_classes() {
    let classes = ghz_equivalence_classes(3, 2).unwrap();
    assert_eq!(classes.len(), 6);
    for n in 2..=6usize {
        for t in 1..n {
            let classes = ghz_equivalence_classes(n, t).unwrap();
            assert_eq!(classes.len() as u128, binomial(t as u64 + 2, 2));
            let total: u128 = classes.iter().map(|k| k.size).sum();
            assert_eq!(total, binomial(n as u64, t as u64) * 3u128.pow(t as u32));
            assert_eq!(ghz_class_size(n, (t, 0, 0)), binomial(n as u64, t as u64));
            for k in &classes {
                assert_eq!(k.members(n).unwrap().len() as u128, k.size);
            }
        }
    }
}

#[test]
fn ghz_gap_formulas_and_argmax() {
    for n in 3..=6usize {
        let s = StabilizerGroup::ghz(n).unwrap();
        for t in 1..n {
            let r = n - t;
            let naive = uniform_gamma_table(&s, t, UniformScheme::Naive).unwrap();
            let classes = uniform_gamma_table(&s, t, UniformScheme::GhzClasses).unwrap();
            assert!((naive.gap() - (2.0f64 / 3.0).powi(t as i32)).abs() < 1e-10, "n={n} r={r}");
            assert!((classes.gap() - 2.0 / (t as f64 + 2.0)).abs() < 1e-10, "n={n} r={r}");
            // w = (1, 0, …) flips the all-X generator
            assert_eq!(naive.second_largest().0, 1);
            assert_eq!(classes.second_largest().0, 1);
        }
    }
}

#[test]
fn lp_examples() {
    let s = ghz3();
    let lp = lp_optimize(&s, 2).unwrap();
    assert!(lp.nu >= 0.5 - 1e-10);
    assert!(lp.nu <= 1.0 + 1e-10);
    let total: f64 = lp.distribution.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-10);
    // the LP value is the gap of its own distribution
    let table = weighted_gamma(&s, &lp.distribution).unwrap();
    assert!((table.gap() - lp.nu).abs() < 1e-9);
    // single-measurement space: ν = 1 - max_{w≠0} γ_{μ,w}
    let single = weighted_gamma(&s, &[(mu("ZZI"), 1.0)]).unwrap();
    assert!(single.gap().abs() < 1e-12);
}

#[test]
fn lp_beats_uniform_on_random_targets() {
    let mut rng = stream_rng(31, 0);
    for _ in 0..20 {
        let n = rng.random_range(2..=4usize);
        let s = StabilizerGroup::random(n, &mut rng).unwrap();
        let t = rng.random_range(1..n);
        let lp = lp_optimize(&s, t).unwrap();
        let naive = uniform_gap(&s, t, UniformScheme::Naive).unwrap();
        assert!(lp.nu >= naive - 1e-9, "lp {} naive {naive}", lp.nu);
    }
}

#[test]
fn symbolic_gap_matches_dense_eigensolve() {
    let mut rng = stream_rng(32, 0);
    for _ in 0..10 {
        let n = rng.random_range(2..=4usize);
        let s = StabilizerGroup::random(n, &mut rng).unwrap();
        let target = StabilizerTarget::new(s.clone()).unwrap();
        let r = rng.random_range(1..n);
        let symbolic = uniform_gap(&s, n - r, UniformScheme::Naive).unwrap();
        let plan = SamplingPlan::naive_uniform(n, r).unwrap();
        let dense_gap = build_strategy_operator(&target, &plan).unwrap().gap().unwrap();
        assert!((symbolic - dense_gap).abs() < 1e-10);
    }
}

#[test]
fn closed_form_is_specific_to_stabilizer_states() {
    // for a Haar state the branch-sum operator is still a projector fixing
    // the target, while the trace-expansion formula no longer reproduces it
    let psi = haar_random(3, 4).unwrap();
    let rho = psi.state().density();
    let m = mu("ZZI");
    let branch = branch_sum_test_operator(&rho, &m).unwrap();
    assert!(max_abs_diff(&(&branch * &branch), &branch) < 1e-10);
    let amps = psi.state().amplitudes();
    assert!((&branch * amps - amps).norm() < 1e-10);
    let general = general_test_operator(&rho, &m).unwrap();
    assert!(max_abs_diff(&general, &branch) > 1e-3);
}

fn random_pauli(n: usize, seed: u64) -> PauliString {
    let mut rng = stream_rng(seed, 0);
    let mask = (1u64 << n) - 1;
    PauliString::from_masks(n, rng.random::<u64>() & mask, rng.random::<u64>() & mask, rng.random_range(0..4)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_matrices(n in 1usize..=3, a in any::<u64>(), b in any::<u64>()) {
        let (p, q) = (random_pauli(n, a), random_pauli(n, b));
        let (pm, qm) = (p.to_operator().unwrap(), q.to_operator().unwrap());
        prop_assert!(max_abs_diff(&p.mul(&q).to_operator().unwrap(), &(&pm * &qm)) < 1e-12);
        let commutator = &pm * &qm - &qm * &pm;
        prop_assert_eq!(p.commutes_with(&q), commutator.iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn outcome_projectors_resolve_identity(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 1);
        let t = rng.random_range(1..=n);
        let m = random_mu(n, t, &mut rng);
        let dim = 1usize << n;
        let mut sum = Operator::zeros(dim, dim);
        for v in 0..1usize << t {
            let bits: Vec<u8> = (0..t).map(|i| ((v >> i) & 1) as u8).collect();
            let p = outcome_projector(&m, &bits).unwrap();
            prop_assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
            prop_assert!((p.trace().re - (1u64 << (n - t)) as f64).abs() < 1e-10);
            sum += p;
        }
        prop_assert!(max_abs_diff(&sum, &Operator::identity(dim, dim)) < 1e-12);
    }

    #[test]
    fn r_group_properties(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 2);
        let s = StabilizerGroup::random(n, &mut rng).unwrap();
        let t = rng.random_range(1..n);
        let m = random_mu(n, t, &mut rng);
        let r = r_group(&s, &m).unwrap();
        prop_assert_eq!(r.order(), (1usize << (n - t)) * measurement_intersection_size(&s, &m));
        let elems = r.elements();
        for a in &elems {
            prop_assert!(s.contains(a));
            for b in &elems {
                prop_assert!(r.contains(&a.mul(b)));
            }
        }
        // every element agrees with μ on each measured site (identity or the letter)
        for e in &elems {
            for (q, axis) in m.measured() {
                let l = e.letter(q);
                prop_assert!(l.is_none() || l == Some(axis));
            }
        }
    }

    #[test]
    fn test_operators_agree_and_commute(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 3);
        let s = StabilizerGroup::random(n, &mut rng).unwrap();
        let psi = s.state().unwrap();
        let rho = psi.density();
        let t = rng.random_range(1..n);
        let (m1, m2) = (random_mu(n, t, &mut rng), random_mu(n, rng.random_range(1..n), &mut rng));
        let o1 = stabilizer_test_operator(&s, &m1).unwrap();
        let o2 = stabilizer_test_operator(&s, &m2).unwrap();
        prop_assert!(max_abs_diff(&o1, &general_test_operator(&rho, &m1).unwrap()) < 1e-10);
        prop_assert!(max_abs_diff(&o1, &branch_sum_test_operator(&rho, &m1).unwrap()) < 1e-10);
        prop_assert!(max_abs_diff(&(&o1 * &o2), &(&o2 * &o1)) < 1e-10);
        prop_assert!((&o1 * psi.amplitudes() - psi.amplitudes()).norm() < 1e-10);
        // diagonal in the stabilizer basis with 0/1 entries matching γ
        let gamma = stabilizer_basis_diagonal(&s, &m1).unwrap();
        for (w, g) in gamma.iter().enumerate() {
            let pw = stabilizer_basis_projector(&s, w as u64).unwrap();
            let val = (&pw * &o1).trace().re;
            let expect = if *g { 1.0 } else { 0.0 };
            prop_assert!((val - expect).abs() < 1e-10);
        }
    }
}
