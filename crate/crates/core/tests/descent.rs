use proptest::prelude::*;
use scgrade_core::grade::{
    grade_cycles, grade_objects, CycleObjective, GradeConfig, GradeResult, ObjectKind, ObjectMode,
};
use scgrade_core::model::CodeParams;

fn check_best(r: &GradeResult) -> Result<(), TestCaseError> {
    prop_assert_eq!(r.trace[0], r.objective_initial);
    prop_assert!(r.objective_final <= r.objective_initial);
    let min = r.trace.iter().copied().fold(f64::INFINITY, f64::min);
    prop_assert_eq!(min, r.objective_final);
    let sum: f64 = r.distribution.probs().iter().sum();
    prop_assert!((sum - 1.0).abs() < 1e-12);
    Ok(())
}

fn check_monotone(r: &GradeResult) -> Result<(), TestCaseError> {
    for w in r.trace.windows(2) {
        prop_assert!(w[1] <= w[0], "objective rose from {} to {}", w[0], w[1]);
    }
    prop_assert_eq!(*r.trace.last().unwrap(), r.objective_final);
    Ok(())
}

fn cycle_objective(w: Option<f64>) -> CycleObjective {
    match w {
        None => CycleObjective::Cycle6Only,
        Some(w) => CycleObjective::Weighted { w },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cycle_descent_never_rises(
        gamma in 3usize..=4,
        kappa in 5usize..=12,
        memory in 1usize..=6,
        w in prop_oneof![Just(None), (0.0f64..200.0).prop_map(Some)],
    ) {
        let params = CodeParams::full_memory(gamma, kappa, memory, 1, 1).unwrap();
        let r = grade_cycles(&params, &GradeConfig::default(), cycle_objective(w)).unwrap();
        check_best(&r)?;
        check_monotone(&r)?;
        prop_assert!(r.converged());
    }

    #[test]
    fn object_descent_never_rises(memory in 1usize..=4, kind in 0usize..4) {
        let params = CodeParams::full_memory(4, 24, memory, 1, 1).unwrap();
        let objects = [(ObjectKind::ALL[kind].graph(), 1.0)];
        let r = grade_objects(&objects, &params, &GradeConfig::default(), ObjectMode::Typical).unwrap();
        check_best(&r)?;
        check_monotone(&r)?;
        prop_assert!(r.converged());
    }

    #[test]
    fn fixed_step_descent_returns_its_best_iterate(
        gamma in 3usize..=4,
        kappa in 5usize..=12,
        memory in 1usize..=6,
        w in prop_oneof![Just(None), (0.0f64..200.0).prop_map(Some)],
    ) {
        let params = CodeParams::full_memory(gamma, kappa, memory, 1, 1).unwrap();
        let config = GradeConfig { backtrack: false, ..GradeConfig::default() };
        let r = grade_cycles(&params, &config, cycle_objective(w)).unwrap();
        check_best(&r)?;
        prop_assert!(r.converged());
    }
}
