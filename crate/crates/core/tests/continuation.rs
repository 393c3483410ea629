use cgpe::bdg::ground_state;
use cgpe::collocation::{solve_stationary, Parameter};
use cgpe::continuation::{
    tangent_at, trace, trace_branch, ContinuationSettings, GpContinuation, ParametricSystem,
};
use cgpe::linalg::{inf_norm, SparseMatrix};
use cgpe::{ModelParams, Result};
use proptest::prelude::*;

fn template() -> ModelParams {
    ModelParams::new(4.4, 0.3, 2.0).unwrap()
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), wi)| wi * x * y).sum()
}

#[test]
fn gp_tangent_solves_the_linearized_system() {
    let start = ground_state(&template(), 2.0).unwrap();
    let state = start.state.clone().unwrap();
    let sys = GpContinuation::new(start.params.clone(), Parameter::Sigma, state.clone()).unwrap();
    let t = tangent_at(&sys, &state.values, 0.3, None).unwrap();
    let (_, fu) = sys.linearize(&state.values, 0.3).unwrap();
    let fl = sys.parameter_derivative(&state.values, 0.3).unwrap();
    let r: Vec<f64> = fu
        .matvec(&t.du)
        .iter()
        .zip(&fl)
        .map(|(a, b)| a + b * t.dlambda)
        .collect();
    assert!(inf_norm(&r) < 1e-8, "{}", inf_norm(&r));
    assert!((t.norm(&sys.weights()) - 1.0).abs() < 1e-10);
}

#[test]
fn short_sigma_branch_matches_direct_solves() {
    let start = ground_state(&template(), 2.0).unwrap();
    let settings = ContinuationSettings {
        max_points: 12,
        ..ContinuationSettings::default()
    };
    let (sys, branch) = trace_branch(&start, Parameter::Sigma, (0.29, 0.31), &settings).unwrap();
    assert!(branch.len() >= 3);
    let w = sys.weights();
    for (i, p) in branch.points.iter().enumerate() {
        assert!(p.residual_norm < 1e-8);
        assert!((p.tangent.norm(&w) - 1.0).abs() < 1e-10);
        if let Some((a, nu)) = p.anchor {
            let q = &branch.points[a];
            let du: Vec<f64> = p.state.iter().zip(&q.state).map(|(x, y)| x - y).collect();
            // Stored tangents follow list order; the step sign records the direction.
            let arc =
                weighted_dot(&q.tangent.du, &du, &w) + q.tangent.dlambda * (p.lambda - q.lambda);
            assert!((arc - nu).abs() < 1e-10, "point {i}: {arc} vs {nu}");
        }
        let params = sys.params_at(p.lambda).unwrap();
        let direct = solve_stationary(&params, &sys.state_at(&p.state), 0).unwrap();
        let on_branch = sys.profile(p).unwrap();
        assert!(direct.sup_distance(&on_branch, 1000).unwrap() < 1e-6);
    }
    let at_start = &branch.points[branch.start];
    assert!((at_start.mu - start.mu).abs() < 1e-9);
}

#[test]
fn chemical_potential_saturates_in_pump_radius() {
    let start = ground_state(&template(), 8.0).unwrap();
    let settings = ContinuationSettings {
        max_points: 200,
        ..ContinuationSettings::default()
    };
    let (_, branch) = trace_branch(&start, Parameter::PumpRadius, (8.0, 9.0), &settings).unwrap();
    assert!(branch.points.last().unwrap().lambda > 8.99);
    for w in branch.points.windows(2) {
        let slope = (w[1].mu - w[0].mu) / (w[1].lambda - w[0].lambda);
        assert!(slope.abs() < 1e-3, "dmu/dR = {slope}");
    }
}

#[test]
fn degenerate_range_gives_the_start_point() {
    let start = ground_state(&template(), 2.0).unwrap();
    let (_, branch) = trace_branch(
        &start,
        Parameter::Sigma,
        (0.3, 0.3),
        &ContinuationSettings::default(),
    )
    .unwrap();
    assert_eq!(branch.len(), 1);
    assert_eq!(branch.points[0].lambda, 0.3);
}

/// `u − aλ²` on a single unknown: a parabola in `(λ, u)` with no folds.
struct Parabola(f64);

impl ParametricSystem for Parabola {
    fn len(&self) -> usize {
        1
    }
    fn linearize(&self, u: &[f64], l: f64) -> Result<(Vec<f64>, SparseMatrix)> {
        let mut j = SparseMatrix::new(1);
        j.push(0, 0, 1.0);
        Ok((self.residual(u, l)?, j))
    }
    fn residual(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
        Ok(vec![u[0] - self.0 * l * l])
    }
    fn parameter_derivative(&self, _u: &[f64], l: f64) -> Result<Vec<f64>> {
        Ok(vec![-2.0 * self.0 * l])
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graphs_are_traced_across_the_whole_range(a in -2.0f64..2.0, lo in -1.0f64..-0.1, hi in 0.1f64..1.0) {
        let sys = Parabola(a);
        let settings = ContinuationSettings { nu_max: 0.05, nu_initial: 0.05, ..ContinuationSettings::default() };
        let branch = trace(&sys, &[0.0], 0.0, (lo, hi), &settings, "lambda").unwrap();
        let first = branch.points.first().unwrap().lambda;
        let last = branch.points.last().unwrap().lambda;
        prop_assert!((first.min(last) - lo).abs() < 1e-9);
        prop_assert!((first.max(last) - hi).abs() < 1e-9);
        for p in &branch.points {
            prop_assert!((p.state[0] - a * p.lambda * p.lambda).abs() < 1e-10);
            prop_assert!(!p.fold_flag);
        }
        for w in branch.points.windows(2) {
            prop_assert!((w[1].lambda - w[0].lambda) * (last - first) > 0.0);
        }
    }
}
