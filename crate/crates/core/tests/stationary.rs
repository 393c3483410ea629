use cgpe::collocation::{
    default_mesh, gp_problem, solve_stationary, thomas_fermi_guess, zero_guess, CollocationProblem,
    FirstOrderSystem,
};
use cgpe::diagnostics::{chemical_potential_integral, mass_balance};
use cgpe::{LobattoScheme, ModelParams, RadialMesh, RadialProfile};
use std::f64::consts::PI;

fn ground(r: f64) -> RadialProfile {
    let params = ModelParams::new(4.4, 0.3, r).unwrap();
    let guess = thomas_fermi_guess(&params, default_mesh(&params).unwrap()).unwrap();
    solve_stationary(&params, &guess, 0).unwrap()
}

#[test]
fn ground_state_invariants() {
    let p = ground(2.0);
    assert!(p.residual_norm < 1e-9);
    assert!(mass_balance(&p).abs() < 1e-8);
    let mu = chemical_potential_integral(&p).unwrap();
    assert!((mu - p.mu).abs() < 1e-6 * p.mu);
    assert!(p.phi[0].im.abs() < 1e-14 * p.phi[0].re);
    assert!(p.phi[0].re > 0.0);
    assert!(p.phi.last().unwrap().norm() < 1e-12);
}

#[test]
fn zero_pump_needs_no_newton_steps() {
    let params = ModelParams::new(0.0, 0.3, 2.0).unwrap();
    let state = zero_guess(&params, RadialMesh::uniform(15.0, 100).unwrap());
    let problem = gp_problem(&params, &state, 0).unwrap();
    let mut u = state.values.clone();
    let report = problem.newton_solve(&mut u).unwrap();
    assert_eq!(report.iterations, 0);
    let profile = solve_stationary(&params, &state, 0).unwrap();
    assert!(profile.phi.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    assert_eq!(profile.mu, 0.0);
}

#[test]
fn global_phase_of_the_guess_is_removed() {
    let p = ground(2.0);
    let mut guess = p.state.clone().unwrap();
    guess.rotate_phase(0.7);
    let q = solve_stationary(&p.params, &guess, 0).unwrap();
    let diff = p.sup_distance_abs(&q, 2000).unwrap();
    assert!(diff < 1e-8, "{diff}");
    assert!(q.phi[0].im.abs() < 1e-12);
    assert!((q.mu - p.mu).abs() < 1e-9);
}

#[test]
fn central_vortices_peak_lower_with_winding() {
    let params = ModelParams::new(4.4, 0.3, 5.0).unwrap();
    let guess = thomas_fermi_guess(&params, default_mesh(&params).unwrap()).unwrap();
    let mut last_peak = f64::INFINITY;
    for m in 1..=5 {
        let p = solve_stationary(&params, &guess, m).unwrap();
        assert_eq!(p.winding, m);
        assert_eq!(p.phi[0].norm(), 0.0);
        assert!(p.residual_norm < 1e-9);
        let mu = chemical_potential_integral(&p).unwrap();
        assert!((mu - p.mu).abs() < 1e-6 * p.mu, "m = {m}");
        let peak = p.peak_density();
        assert!(peak < last_peak, "m = {m}: {peak} >= {last_peak}");
        last_peak = peak;
    }
}

#[test]
fn profile_csv_round_trip() {
    let p = ground(3.0);
    let q = RadialProfile::parse_csv(&p.to_csv_string()).unwrap();
    assert_eq!(q.r.len(), p.r.len());
    assert_eq!(q.winding, 0);
    assert!((q.mu - p.mu).abs() < 1e-12 * p.mu);
    assert_eq!(q.r, p.r);
    assert_eq!(q.phi, p.phi);
}

/// `y'' = y³ − s³ − π² sin πx` with `s = sin πx + x`, so `y = s`.
struct Manufactured;

fn exact(x: f64) -> (f64, f64) {
    ((PI * x).sin() + x, PI * (PI * x).cos() + 1.0)
}

impl FirstOrderSystem for Manufactured {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, x: f64, u: &[f64], f: &mut [f64]) {
        let s = exact(x).0;
        f[0] = u[1];
        f[1] = u[0].powi(3) - s.powi(3) - PI * PI * (PI * x).sin();
    }
    fn rhs_jacobian(&self, _x: f64, u: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&[0.0, 1.0, 3.0 * u[0] * u[0], 0.0]);
    }
    fn left_count(&self) -> usize {
        1
    }
    fn left_bc(&self, u: &[f64], res: &mut [f64]) {
        res[0] = u[0];
    }
    fn left_bc_jacobian(&self, _u: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&[1.0, 0.0]);
    }
    fn right_bc(&self, u: &[f64], res: &mut [f64]) {
        res[0] = u[0] - 1.0;
    }
    fn right_bc_jacobian(&self, _u: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&[1.0, 0.0]);
    }
}

fn manufactured_error(intervals: usize) -> f64 {
    let mesh = RadialMesh::uniform(1.0, intervals).unwrap();
    let scheme = LobattoScheme::four_point();
    let x = mesh.collocation_points(&scheme);
    let problem = CollocationProblem::new(Manufactured, mesh, scheme).unwrap();
    let mut u = vec![0.0; problem.unknowns()];
    problem.newton_solve(&mut u).unwrap();
    x.iter()
        .enumerate()
        .map(|(p, &xp)| {
            let (y, dy) = exact(xp);
            (u[2 * p] - y).abs().max((u[2 * p + 1] - dy).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn collocation_converges_at_least_at_stage_order() {
    let errors: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&n| manufactured_error(n))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "errors {errors:?}");
    }
}
