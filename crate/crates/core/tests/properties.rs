mod common;

use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use rand::Rng;
use rvrcheck::bell::{
    hvm_chsh, maximize_chsh, quantum_chsh, BlochAngles, ChshSettings, SearchMode, TwoQubitScenario,
};
use rvrcheck::classical_prob::{
    ch_value, chsh_value, distance, quadrilateral_check, shannon_entropy, triangle_check, ChshExpectations,
};
use rvrcheck::entropy::{information_inequality_report, separability_probe};
use rvrcheck::hilbert::{
    c64, partial_trace, spectral_decompose, tensor_product, DensityOperator, Operator, Projector,
};
use rvrcheck::lp::oracle::{hull_membership_oracle, rational_vec};
use rvrcheck::lp::{solve_feasibility, verify_farkas, LpOutcome, LpProblem};
use rvrcheck::quantum_prob::{commuting_joint, observable_distribution};
use rvrcheck::rvr::{build_rvr, completeness_lp, kochen_specker_witness, scan_quadrilaterals, LabeledProjector};

/// Fixed seed so every run draws the same cases.
fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x0b5e_55ed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn random_qubit_projector(rng: &mut rand_chacha::ChaCha8Rng) -> Projector {
    Projector::onto(&common::random_ket(rng, 2)).expect("nonzero ket")
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn spectral_decomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=16) {
        let mut rng = common::rng(seed);
        let a = common::random_hermitian(&mut rng, dim);
        let d = spectral_decompose(&a).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(d.reconstruct().max_abs_diff(&a).unwrap() <= 1e-9 * scale);
        let total = d.eigenprojectors.iter().fold(Operator::zeros(dim), |acc, p| acc.add(p.op()).unwrap());
        prop_assert!(total.max_abs_diff(&Operator::identity(dim)).unwrap() <= 1e-9);
        prop_assert!(d.eigenvalues.windows(2).all(|w| w[0] < w[1]));
        for (i, p) in d.eigenprojectors.iter().enumerate() {
            for q in &d.eigenprojectors[i + 1..] {
                prop_assert!(p.op().matmul(q.op()).unwrap().max_abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3, dc in 1usize..=2) {
        let mut rng = common::rng(seed);
        let (a, b, c) = (
            common::random_hermitian(&mut rng, da),
            common::random_hermitian(&mut rng, db),
            common::random_hermitian(&mut rng, dc),
        );
        let left = tensor_product(&tensor_product(&a, &b), &c);
        let right = tensor_product(&a, &tensor_product(&b, &c));
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(seed in any::<u64>(), d1 in 1usize..=3, d2 in 1usize..=3) {
        let mut rng = common::rng(seed);
        let r1 = common::random_density(&mut rng, d1, 2);
        let r2 = common::random_density(&mut rng, d2, 2);
        let joint = r1.tensor(&r2);
        let kept = partial_trace(&joint, &[d1, d2], 1).unwrap();
        prop_assert!(kept.op().max_abs_diff(r1.op()).unwrap() <= 1e-12);
        let kept = partial_trace(&joint, &[d1, d2], 0).unwrap();
        prop_assert!(kept.op().max_abs_diff(r2.op()).unwrap() <= 1e-12);
    }

    #[test]
    fn commuting_joint_marginals_match(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 4, 2);
        // two commuting observables: functions of a shared diagonal basis
        let x = Operator::diag(&[1.0, 1.0, -1.0, -1.0]);
        let y = Operator::diag(&[0.0, 2.0, 0.0, 5.0]);
        let joint = commuting_joint(&rho, &[x.clone(), y.clone()]).unwrap();
        prop_assert!((joint.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for (var, op) in [(0, &x), (1, &y)] {
            let direct = observable_distribution(&rho, op).unwrap();
            let m = joint.marginal(var);
            prop_assert_eq!(&m.support, &direct.support);
            for (p, q) in m.weights.iter().zip(&direct.weights) {
                prop_assert!((p - q).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn distance_is_a_pseudometric_on_genuine_tables(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = common::rng(seed);
        let m = common::random_table(&mut rng, n).all_pair_marginals().unwrap();
        for j in 0..n {
            prop_assert!(distance(&m, j, j).unwrap().abs() <= 1e-12);
            for k in 0..n {
                let d = distance(&m, j, k).unwrap();
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert!((d - distance(&m, k, j).unwrap()).abs() <= 1e-15);
                for l in 0..n {
                    prop_assert!(triangle_check(&m, j, k, l).unwrap() >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn ch_chsh_quadrilateral_identities(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::random_chsh_marginals(&mut rng);
        let ch = ch_value(&m, 0, 1, 2, 3).unwrap();
        prop_assert!((2.0 * ch - quadrilateral_check(&m, 1, 3, 2, 0).unwrap()).abs() <= 1e-12);
        let chsh = chsh_value(&ChshExpectations::from_marginals(&m, 0, 1, 2, 3).unwrap()).unwrap();
        prop_assert!((chsh - (2.0 - 4.0 * ch)).abs() <= 1e-12);
    }

    #[test]
    fn hidden_variable_models_obey_chsh(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::random_hvm(&mut rng, 64);
        prop_assert!(hvm_chsh(&m, "a1", "a2", "b1", "b2").unwrap().abs() <= 2.0 + 1e-12);
        prop_assert!(hvm_chsh(&m, "b2", "a1", "a2", "b1").unwrap().abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn quantum_chsh_obeys_tsirelson(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 4, rank);
        let p: Vec<Projector> = (0..4).map(|_| random_qubit_projector(&mut rng)).collect();
        let s = TwoQubitScenario::from_local(rho, [&p[0], &p[1]], [&p[2], &p[3]]).unwrap();
        prop_assert!(quantum_chsh(&s).unwrap().abs() <= 2.0 * SQRT_2 + 1e-9);
    }

    #[test]
    fn product_states_obey_chsh(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 2, 2).tensor(&common::random_density(&mut rng, 2, 2));
        let p: Vec<Projector> = (0..4).map(|_| random_qubit_projector(&mut rng)).collect();
        let s = TwoQubitScenario::from_local(rho, [&p[0], &p[1]], [&p[2], &p[3]]).unwrap();
        prop_assert!(quantum_chsh(&s).unwrap().abs() <= 2.0 + 1e-9);
    }

    #[test]
    fn von_neumann_subadditivity(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 4, rank);
        let r = information_inequality_report(&rho, &[2, 2]).unwrap();
        prop_assert!(r.total >= -1e-9 && r.subsystems.iter().all(|&s| s >= -1e-9));
        prop_assert!(r.subadditivity_slack >= -1e-9);
        if r.violation {
            let probe = separability_probe(&rho, [2, 2]).unwrap();
            prop_assert!(!probe.found_decomposition());
            prop_assert!(probe.entangled());
        }
    }

    #[test]
    fn shannon_information_inequality(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = common::rng(seed);
        let t = common::random_table(&mut rng, n);
        let total = shannon_entropy(&t);
        let mut sum = 0.0;
        for j in 0..n {
            let sj = shannon_entropy(&t.marginal_table(&[j]).unwrap());
            prop_assert!(sj <= total + 1e-9);
            sum += sj;
        }
        prop_assert!(total <= sum + 1e-9);
    }

    #[test]
    fn lp_outcomes_are_sound(seed in any::<u64>(), vars in 1usize..=8, rows in 1usize..=6) {
        let mut rng = common::rng(seed);
        let mut lp = LpProblem::new(vars).unwrap();
        for _ in 0..rows {
            let coeffs: Vec<f64> = (0..vars).map(|_| f64::from(rng.random_range(-3..=3i32))).collect();
            let rhs = f64::from(rng.random_range(-4..=4i32)) / 2.0;
            let band = if rng.random_bool(0.5) { 0.0 } else { 1e-9 };
            lp.add_equality(coeffs, rhs, band).unwrap();
        }
        match solve_feasibility(&lp).unwrap() {
            LpOutcome::Feasible { point, .. } => {
                prop_assert!(point.iter().all(|&x| x >= -1e-12));
                prop_assert!(lp.band_violation(&point) <= 1e-7 + 1e-9);
            }
            LpOutcome::Infeasible { certificate, .. } => {
                let margin = verify_farkas(&lp, &certificate.multipliers);
                prop_assert!(margin.is_some_and(|m| m > 1e-7), "margin {:?}", margin);
            }
            LpOutcome::Ambiguous { .. } => {}
        }
        prop_assert_eq!(solve_feasibility(&lp).unwrap(), solve_feasibility(&lp).unwrap());
    }

    #[test]
    fn lp_agrees_with_exact_oracle(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = common::rng(seed);
        // random dyadic singles and pairs within Fréchet bounds
        let singles: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..=8u32)) / 8.0).collect();
        let mut pairs = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                let lo = ((singles[j] + singles[k] - 1.0).max(0.0) * 32.0) as u32;
                let hi = (singles[j].min(singles[k]) * 32.0) as u32;
                pairs.push((j, k, f64::from(rng.random_range(lo..=hi)) / 32.0));
            }
        }
        let coords = |atom: usize| -> Vec<f64> {
            let bit = |j: usize| (atom >> j & 1) as f64;
            (0..n).map(bit).chain(pairs.iter().map(|&(j, k, _)| bit(j) * bit(k))).collect()
        };
        let target: Vec<f64> = singles.iter().copied().chain(pairs.iter().map(|p| p.2)).collect();
        let vertices: Vec<Vec<f64>> = (0..1usize << n).map(coords).collect();
        let mut lp = LpProblem::new(1 << n).unwrap();
        lp.add_equality(vec![1.0; 1 << n], 1.0, 0.0).unwrap();
        for (c, &t) in target.iter().enumerate() {
            lp.add_equality(vertices.iter().map(|v| v[c]).collect(), t, 0.0).unwrap();
        }
        let float = solve_feasibility(&lp).unwrap();
        let exact_vertices: Vec<_> = vertices.iter().map(|v| rational_vec(v)).collect();
        let exact = hull_membership_oracle(&exact_vertices, &rational_vec(&target)).unwrap();
        if !matches!(float, LpOutcome::Ambiguous { .. }) {
            prop_assert_eq!(float.is_feasible(), exact.is_inside());
        }
    }

    #[test]
    fn qubit_models_are_always_complete(seed in any::<u64>(), count in 1usize..=3) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 2, 2);
        let projectors = (0..count)
            .map(|i| LabeledProjector::new(format!("p{i}"), random_qubit_projector(&mut rng)))
            .collect();
        let model = build_rvr(projectors, &rho, 4).unwrap();
        prop_assert!(completeness_lp(&model).unwrap().is_complete());
        prop_assert!(kochen_specker_witness(&model).unwrap().is_none());
    }

    #[test]
    fn rvr_matches_hull_oracle(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = common::rng(seed);
        let rho = common::random_density(&mut rng, 4, rank);
        let angles = |rng: &mut rand_chacha::ChaCha8Rng| BlochAngles::new(rng.random::<f64>() * 3.2, rng.random::<f64>() * 6.3);
        let settings = ChshSettings { alice: [angles(&mut rng), angles(&mut rng)], bob: [angles(&mut rng), angles(&mut rng)] };
        let model = build_rvr(settings.four_projectors(), &rho, 2).unwrap();
        prop_assert!(model.marginal_consistency_residual() <= 1e-9);
        let result = completeness_lp(&model);
        let (vertices, target) = model.marginal_polytope().unwrap();
        let exact_vertices: Vec<_> = vertices.iter().map(|v| rational_vec(v)).collect();
        let exact = hull_membership_oracle(&exact_vertices, &rational_vec(&target)).unwrap();
        // a float target on the hull boundary may land either side of it
        let min_slack = scan_quadrilaterals(&model).unwrap().first().map_or(0.0, |q| q.slack);
        if let Ok(result) = result {
            if min_slack.abs() > 1e-6 {
                prop_assert_eq!(result.is_complete(), exact.is_inside());
            }
            if result.is_complete() {
                prop_assert!(min_slack >= -1e-7);
            }
        }
    }
}

#[test]
fn maximize_chsh_dominates_probe_points() {
    let mut rng = common::rng(11);
    for _ in 0..4 {
        let rho = common::random_density(&mut rng, 4, 2);
        let best = maximize_chsh(&rho, SearchMode::XzPlane).unwrap();
        assert!(best.value >= best.grid_value - 1e-12);
        for _ in 0..20 {
            let deg = |rng: &mut rand_chacha::ChaCha8Rng| BlochAngles::from_degrees(5.0 * f64::from(rng.random_range(0..72u32)), 0.0);
            let s = ChshSettings { alice: [deg(&mut rng), deg(&mut rng)], bob: [deg(&mut rng), deg(&mut rng)] };
            let v = quantum_chsh(&TwoQubitScenario::from_settings(rho.clone(), &s).unwrap()).unwrap();
            assert!(v <= best.value + 1e-9);
        }
        assert_eq!(maximize_chsh(&rho, SearchMode::XzPlane).unwrap(), best);
    }
}

#[test]
fn full_sphere_never_below_plane() {
    let mut rng = common::rng(12);
    for _ in 0..3 {
        let rho = common::random_density(&mut rng, 4, 1);
        let plane = maximize_chsh(&rho, SearchMode::XzPlane).unwrap().value;
        let sphere = maximize_chsh(&rho, SearchMode::FullSphere).unwrap().value;
        assert!(sphere >= plane - 1e-6, "sphere {sphere} < plane {plane}");
    }
}

#[test]
fn same_projectors_flip_with_the_state() {
    let projectors = ChshSettings::singlet_optimal().four_projectors();
    let singlet = build_rvr(projectors.clone(), &rvrcheck::entropy::make_singlet(), 4).unwrap();
    assert!(!completeness_lp(&singlet).unwrap().is_complete());
    let up = DensityOperator::pure(&[c64(1.0, 0.0), c64(0.0, 0.0)]).unwrap();
    let product = build_rvr(projectors, &up.tensor(&DensityOperator::maximally_mixed(2)), 4).unwrap();
    assert!(completeness_lp(&product).unwrap().is_complete());
}
