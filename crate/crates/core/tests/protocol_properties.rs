use entshape::channels::depolarizing;
use entshape::entanglement::SolverSettings;
use entshape::protocols::{
    calibrate_pes, dejmps_monte_carlo, dejmps_recursive, pes_pipeline, DistillationOutcome, MonteCarloSettings,
};
use entshape::qstate::BellDiagonalState;
use entshape::Convention;
use proptest::prelude::*;

fn check_tree(o: &DistillationOutcome) {
    let total: f64 = o.branches.iter().map(|b| b.probability).sum();
    assert!((total - 1.0).abs() < 1e-12, "branch mass {total}");
    let succ: f64 = o.branches.iter().filter(|b| b.success).map(|b| b.probability).sum();
    assert!((succ - o.success_probability).abs() < 1e-12);
    if let Some(g) = &o.global_state {
        assert!((g.matrix().trace().re - 1.0).abs() < 1e-12);
        let assembled = o.assemble_global().unwrap();
        assert!(assembled.matrix().max_abs_diff(g.matrix()) < 1e-10);
    }
}

#[test]
fn branch_trees_are_consistent() {
    for conv in Convention::ALL {
        for p in [0.05, 0.2, 0.4] {
            let s = conv.pair_state(p).unwrap();
            for (n, r) in [(2, 1), (4, 1), (4, 2), (8, 3)] {
                check_tree(&dejmps_recursive(n, &s, r).unwrap());
            }
        }
    }
}

#[test]
fn global_er_respects_convexity_split() {
    for f in [0.55, 0.7, 0.85, 0.95] {
        let s = BellDiagonalState::werner_paper(f).unwrap();
        for (n, r) in [(2, 1), (4, 2), (8, 3)] {
            let o = dejmps_recursive(n, &s, r).unwrap();
            let ps = o.success_probability;
            let bound = ps * o.er_selected().unwrap().unwrap() + (1.0 - ps) * o.er_trash().unwrap().unwrap_or(0.0);
            assert!(o.er_global().unwrap() <= bound + 1e-9, "F = {f}, n = {n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn successful_branch_improves_fidelity(f in 0.501f64..0.999) {
        let s = BellDiagonalState::werner_paper(f).unwrap();
        let o = dejmps_recursive(2, &s, 1).unwrap();
        prop_assert!(o.selected_fidelity().unwrap() > s.fidelity());
    }
}

fn output_fidelity_exact(o: &DistillationOutcome) -> f64 {
    o.branches
        .iter()
        .map(|b| b.probability * b.pairs.iter().map(|x| x.fidelity()).sum::<f64>() / b.pairs.len() as f64)
        .sum()
}

#[test]
fn monte_carlo_agrees_with_exact_tree() {
    for (k, f) in [0.7, 0.8, 0.9].into_iter().enumerate() {
        let s = BellDiagonalState::werner_paper(f).unwrap();
        let exact = dejmps_recursive(4, &s, 2).unwrap();
        let mc = dejmps_monte_carlo(4, &s, 2, &MonteCarloSettings::new(10_000, 100 + k as u64)).unwrap();
        let tol = |se: f64| (3.0 * se).max(1e-12);
        assert!(
            (mc.success_probability.mean - exact.success_probability).abs() <= tol(mc.success_probability.std_error)
        );
        let sel = mc.selected_fidelity.unwrap();
        assert!((sel.mean - exact.selected_fidelity().unwrap()).abs() <= tol(sel.std_error));
        let out = mc.output_fidelity;
        assert!((out.mean - output_fidelity_exact(&exact)).abs() <= tol(out.std_error));
    }
}

#[test]
fn monte_carlo_is_independent_of_worker_count() {
    let s = Convention::Oracle.pair_state(0.2).unwrap();
    let base = MonteCarloSettings::new(3_000, 9);
    let serial = dejmps_monte_carlo(
        4,
        &s,
        2,
        &MonteCarloSettings {
            workers: Some(1),
            ..base.clone()
        },
    )
    .unwrap();
    for w in [2, 3, 8] {
        let par = dejmps_monte_carlo(
            4,
            &s,
            2,
            &MonteCarloSettings {
                workers: Some(w),
                ..base.clone()
            },
        )
        .unwrap();
        assert_eq!(serial, par, "{w} workers");
    }
    let other_seed = dejmps_monte_carlo(4, &s, 2, &MonteCarloSettings::new(3_000, 10)).unwrap();
    assert_ne!(serial.success_probability, other_seed.success_probability);
}

#[test]
fn pes_is_deterministic() {
    let ch = depolarizing(0.2).unwrap();
    let dd = entshape::channels::DDConfig::parametric_for_target(0.2, 0.17);
    let settings = SolverSettings::default();
    for use_u_pre in [false, true] {
        let a = pes_pipeline(4, &ch, Some(&dd), use_u_pre, &settings).unwrap();
        let b = pes_pipeline(4, &ch, Some(&dd), use_u_pre, &settings).unwrap();
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.pair_er, b.pair_er);
        assert_eq!(a.per_pair_er.to_bits(), b.per_pair_er.to_bits());
    }
}

#[test]
fn shaping_beats_post_distillation() {
    for conv in Convention::ALL {
        let post = dejmps_recursive(4, &conv.pair_state(0.2).unwrap(), 2).unwrap();
        let post_per_pair = post.er_global().unwrap() / 4.0;
        let pes = conv.pair_er(0.17).unwrap();
        assert!(pes > post_per_pair, "{conv}");
        let cal = calibrate_pes(0.2, 0.187, conv).unwrap();
        assert!(conv.pair_er(cal.p_prime).unwrap() > post_per_pair, "{conv}");
    }
}
