//! Lobatto collocation for the stationary radial problem.

mod guess;
mod profile;
mod system;

pub use guess::{multi_bump_guess, profile_guess, thomas_fermi_guess, thomas_fermi_mu, zero_guess};
pub use profile::RadialProfile;
pub use system::{
    rhs_at_origin, ExponentialTest, FirstOrderSystem, GpRadialSystem, Parameter, DETA, DTHETA, ETA,
    GP_DIM, MU, ORIGIN_GUARD, RHO, THETA, XI,
};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, SparseMatrix};
use crate::mesh::{LobattoScheme, RadialMesh};
use crate::model::ModelParams;

/// Discrete state: every component at every collocation point, point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpState {
    /// Interval endpoints in the physical radius.
    pub mesh: RadialMesh,
    pub scheme: LobattoScheme,
    /// Winding the `χ` components refer to (`φ = r^m χ`).
    pub winding: u32,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl BvpState {
    pub fn zeros(mesh: RadialMesh, scheme: LobattoScheme, dim: usize, winding: u32) -> Self {
        let n = mesh.collocation_points(&scheme).len();
        Self {
            mesh,
            scheme,
            winding,
            dim,
            values: vec![0.0; n * dim],
        }
    }

    pub fn points(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Physical radii of the collocation points.
    pub fn radii(&self) -> Vec<f64> {
        self.mesh.collocation_points(&self.scheme)
    }

    /// Scaled abscissae `x = r/b` in `[0, 1]`.
    pub fn abscissae(&self) -> Vec<f64> {
        let b = self.mesh.radius();
        let mut x: Vec<f64> = self.radii().iter().map(|r| r / b).collect();
        *x.last_mut().unwrap() = 1.0;
        x
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn point_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.points())
            .map(|p| self.values[p * self.dim + k])
            .collect()
    }

    /// Multiply the complex amplitude (and its derivative) by `e^{iγ}`.
    pub fn rotate_phase(&mut self, gamma: f64) {
        assert_eq!(
            self.dim, GP_DIM,
            "phase rotation needs the radial GP layout"
        );
        let (s, c) = gamma.sin_cos();
        for p in 0..self.points() {
            let u = self.point_mut(p);
            for (re, im) in [(THETA, ETA), (DTHETA, DETA)] {
                let (a, b) = (u[re], u[im]);
                u[re] = c * a - s * b;
                u[im] = s * a + c * b;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub tolerance: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            max_halvings: 30,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// A first-order system together with its discretization.
#[derive(Debug, Clone)]
pub struct CollocationProblem<S> {
    pub system: S,
    pub mesh: RadialMesh,
    pub scheme: LobattoScheme,
    pub newton: NewtonSettings,
}

impl<S: FirstOrderSystem> CollocationProblem<S> {
    pub fn new(system: S, mesh: RadialMesh, scheme: LobattoScheme) -> Result<Self> {
        let s = scheme.stages();
        let c = scheme.abscissae();
        if c[0] != 0.0 || c[s - 1] != 1.0 || c.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "collocation abscissae must run 0 = c_1 < ... < c_s = 1",
            ));
        }
        if system.left_count() > system.dim() {
            return Err(Error::invalid("more left conditions than unknowns"));
        }
        Ok(Self {
            system,
            mesh,
            scheme,
            newton: NewtonSettings::default(),
        })
    }

    pub fn with_newton(mut self, newton: NewtonSettings) -> Self {
        self.newton = newton;
        self
    }

    pub fn unknowns(&self) -> usize {
        self.points() * self.system.dim()
    }

    fn points(&self) -> usize {
        self.mesh.intervals() * (self.scheme.stages() - 1) + 1
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.unknowns() {
            return Err(Error::DimensionMismatch {
                expected: self.unknowns(),
                found: u.len(),
            });
        }
        Ok(())
    }

    fn scaled_points(&self) -> (Vec<f64>, Vec<f64>) {
        let b = self.mesh.radius();
        let nodes: Vec<f64> = self.mesh.nodes().iter().map(|r| r / b).collect();
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let s = self.scheme.stages();
        let mut x = Vec::with_capacity(self.points());
        x.push(0.0);
        for (n, w) in nodes.windows(2).enumerate() {
            for &c in &self.scheme.abscissae()[1..s - 1] {
                x.push(w[0] + c * h[n]);
            }
            x.push(w[1]);
        }
        (x, h)
    }

    /// Residual of the collocation equations: left conditions, the stage
    /// equations `u_i − u_1 − h Σ_j a_ij f(u_j)` of every interval in order,
    /// right conditions.
    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let d = self.system.dim();
        let (x, h) = self.scaled_points();
        let mut f = vec![0.0; u.len()];
        for p in 0..x.len() {
            self.system
                .rhs(x[p], &u[p * d..(p + 1) * d], &mut f[p * d..(p + 1) * d]);
        }
        Ok(self.stack_residual(u, &f, &h))
    }

    fn stack_residual(&self, u: &[f64], f: &[f64], h: &[f64]) -> Vec<f64> {
        let d = self.system.dim();
        let s = self.scheme.stages();
        let nl = self.system.left_count();
        let mut res = vec![0.0; u.len()];
        self.system.left_bc(&u[..d], &mut res[..nl]);
        let mut row = nl;
        for (n, &hn) in h.iter().enumerate() {
            let p0 = n * (s - 1);
            for i in 1..s {
                for k in 0..d {
                    let mut quad = 0.0;
                    for j in 0..s {
                        quad += self.scheme.weight(i, j) * f[(p0 + j) * d + k];
                    }
                    res[row + k] = u[(p0 + i) * d + k] - u[p0 * d + k] - hn * quad;
                }
                row += d;
            }
        }
        let last = u.len() - d;
        self.system.right_bc(&u[last..], &mut res[row..]);
        res
    }

    /// `∂F/∂λ` of the residual when the right-hand side depends on a parameter
    /// through `dfdl(x, u, out)`; boundary rows do not depend on it.
    pub fn parameter_derivative(
        &self,
        u: &[f64],
        dfdl: impl Fn(f64, &[f64], &mut [f64]),
    ) -> Result<Vec<f64>> {
        self.check(u)?;
        let d = self.system.dim();
        let s = self.scheme.stages();
        let nl = self.system.left_count();
        let (x, h) = self.scaled_points();
        let mut g = vec![0.0; u.len()];
        for p in 0..x.len() {
            dfdl(x[p], &u[p * d..(p + 1) * d], &mut g[p * d..(p + 1) * d]);
        }
        let mut out = vec![0.0; u.len()];
        let mut row = nl;
        for n in 0..h.len() {
            let p0 = n * (s - 1);
            for i in 1..s {
                for k in 0..d {
                    out[row + k] = -h[n]
                        * (0..s)
                            .map(|j| self.scheme.weight(i, j) * g[(p0 + j) * d + k])
                            .sum::<f64>();
                }
                row += d;
            }
        }
        Ok(out)
    }

    /// Residual and its exact Jacobian.
    pub fn assemble(&self, u: &[f64]) -> Result<(Vec<f64>, SparseMatrix)> {
        self.check(u)?;
        let d = self.system.dim();
        let s = self.scheme.stages();
        let nl = self.system.left_count();
        let nr = d - nl;
        let (x, h) = self.scaled_points();
        let np = x.len();
        let mut f = vec![0.0; u.len()];
        let mut jf = vec![0.0; np * d * d];
        for p in 0..np {
            let up = &u[p * d..(p + 1) * d];
            self.system.rhs(x[p], up, &mut f[p * d..(p + 1) * d]);
            self.system
                .rhs_jacobian(x[p], up, &mut jf[p * d * d..(p + 1) * d * d]);
        }
        let res = self.stack_residual(u, &f, &h);

        let n = u.len();
        let mut jac = SparseMatrix::with_capacity(n, h.len() * (s - 1) * d * (s * d + 1) + d * d);
        let mut bc = vec![0.0; nl.max(nr) * d];
        self.system.left_bc_jacobian(&u[..d], &mut bc[..nl * d]);
        for i in 0..nl {
            for k in 0..d {
                jac.push(i, k, bc[i * d + k]);
            }
        }
        let mut row = nl;
        for (m, &hm) in h.iter().enumerate() {
            let p0 = m * (s - 1);
            for i in 1..s {
                for j in 0..s {
                    let a = self.scheme.weight(i, j);
                    let col0 = (p0 + j) * d;
                    let block = &jf[(p0 + j) * d * d..(p0 + j + 1) * d * d];
                    for k in 0..d {
                        for l in 0..d {
                            let mut v = -hm * a * block[k * d + l];
                            if k == l {
                                if j == i {
                                    v += 1.0;
                                } else if j == 0 {
                                    v -= 1.0;
                                }
                            }
                            jac.push(row + k, col0 + l, v);
                        }
                    }
                }
                row += d;
            }
        }
        let last = n - d;
        self.system.right_bc_jacobian(&u[last..], &mut bc[..nr * d]);
        for i in 0..nr {
            for k in 0..d {
                jac.push(row + i, last + k, bc[i * d + k]);
            }
        }
        Ok((res, jac))
    }

    /// Damped Newton iteration in place.
    pub fn newton_solve(&self, u: &mut [f64]) -> Result<NewtonReport> {
        let settings = self.newton;
        let (mut res, mut jac) = self.assemble(u)?;
        let mut norm = inf_norm(&res);
        for iteration in 0..settings.max_iterations {
            if !norm.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual: norm,
                });
            }
            if norm < settings.tolerance {
                return Ok(NewtonReport {
                    iterations: iteration,
                    residual: norm,
                });
            }
            let lu = jac.factor()?;
            let neg: Vec<f64> = res.iter().map(|v| -v).collect();
            let delta = lu.solve(&neg)?;
            // Natural monotonicity: the simplified Newton correction at the
            // trial point, measured with the current Jacobian, must shrink.
            let delta_norm = l2(&delta);
            let mut lambda = 1.0;
            let mut trial = u.to_vec();
            let mut accepted = false;
            for _ in 0..=settings.max_halvings {
                for (t, (ui, di)) in trial.iter_mut().zip(u.iter().zip(&delta)) {
                    *t = ui + lambda * di;
                }
                let r = self.residual(&trial)?;
                if r.iter().all(|v| v.is_finite()) {
                    let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
                    let simplified = lu.solve(&neg_r)?;
                    if l2(&simplified) <= (1.0 - 0.25 * lambda) * delta_norm
                        || inf_norm(&r) < settings.tolerance
                    {
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                // No decrease along the Newton direction: take the smallest
                // damped step anyway and let the iteration cap decide.
                if !trial.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonConvergence {
                        iterations: iteration + 1,
                        residual: norm,
                    });
                }
            }
            u.copy_from_slice(&trial);
            let (r, j) = self.assemble(u)?;
            res = r;
            jac = j;
            norm = inf_norm(&res);
        }
        if norm < settings.tolerance {
            return Ok(NewtonReport {
                iterations: settings.max_iterations,
                residual: norm,
            });
        }
        Err(Error::NonConvergence {
            iterations: settings.max_iterations,
            residual: norm,
        })
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Estimate of `‖J‖₁ ‖J⁻¹‖₁` by a few rounds of Hager's method.
pub fn condition_estimate(jac: &SparseMatrix) -> Result<f64> {
    let n = jac.dim();
    let mut col_sums = vec![0.0; n];
    for (_, c, v) in jac.entries() {
        col_sums[c] += v.abs();
    }
    let norm = col_sums.iter().cloned().fold(0.0, f64::max);
    let lu = jac.factor()?;
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x)?;
        let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
        if y_norm <= estimate {
            break;
        }
        estimate = y_norm;
        let xi: Vec<f64> = y
            .iter()
            .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        let z = lu.solve_transpose(&xi)?;
        let (jmax, zmax) =
            z.iter().enumerate().fold(
                (0, 0.0),
                |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) },
            );
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= zx {
            break;
        }
        x.fill(0.0);
        x[jmax] = 1.0;
    }
    Ok(norm * estimate)
}

const DEFAULT_INTERVALS_PER_UNIT: f64 = 1600.0 / 15.0;

/// Default mesh for the stationary solver: uniform with width `15/1600`
/// (1600 intervals on `[0, 15]`).
pub fn default_mesh(params: &ModelParams) -> Result<RadialMesh> {
    RadialMesh::uniform(
        params.b,
        (params.b * DEFAULT_INTERVALS_PER_UNIT).ceil() as usize,
    )
}

/// Solve the stationary problem of winding `m` starting from `guess`.
pub fn solve_stationary(
    params: &ModelParams,
    guess: &BvpState,
    winding: u32,
) -> Result<RadialProfile> {
    solve_stationary_with(params, guess, winding, NewtonSettings::default())
}

pub fn solve_stationary_with(
    params: &ModelParams,
    guess: &BvpState,
    winding: u32,
    newton: NewtonSettings,
) -> Result<RadialProfile> {
    params.validate()?;
    if guess.dim != GP_DIM {
        return Err(Error::DimensionMismatch {
            expected: GP_DIM,
            found: guess.dim,
        });
    }
    if (guess.mesh.radius() - params.b).abs() > 1e-12 * params.b {
        return Err(Error::invalid("guess mesh does not span [0, b]"));
    }
    let start = if guess.winding == winding {
        guess.clone()
    } else {
        guess.rewound(winding)
    };
    let problem = gp_problem(params, &start, winding)?.with_newton(newton);
    let mut state = start;
    let report = problem.newton_solve(&mut state.values)?;
    RadialProfile::from_state(params, state, report.residual)
}

pub fn gp_problem(
    params: &ModelParams,
    state: &BvpState,
    winding: u32,
) -> Result<CollocationProblem<GpRadialSystem>> {
    CollocationProblem::new(
        GpRadialSystem::new(params.clone(), winding),
        state.mesh.clone(),
        state.scheme.clone(),
    )
}

impl BvpState {
    /// Re-express the amplitude for another winding, keeping `|φ|` roughly in shape.
    ///
    /// The new unknown is `χ_new = χ_old r^{m_old} / (1 + r²)^{m_new/2}`, i.e. the
    /// physical amplitude picks up a factor `(r²/(1+r²))^{m_new/2}` that vanishes
    /// at the origin as a vortex core must.
    pub fn rewound(&self, winding: u32) -> BvpState {
        let mut out = self.clone();
        out.winding = winding;
        let radii = self.radii();
        for (p, &r) in radii.iter().enumerate() {
            let old = (self.winding as i32, winding as i32);
            let factor = r.powi(old.0) / (1.0 + r * r).powf(old.1 as f64 / 2.0);
            let u = out.point_mut(p);
            u[THETA] *= factor;
            u[ETA] *= factor;
        }
        // Rebuild derivatives by differencing the new amplitude.
        let th = out.component(THETA);
        let et = out.component(ETA);
        let dth = guess::differentiate(&radii, &th);
        let det = guess::differentiate(&radii, &et);
        for p in 0..out.points() {
            let u = out.point_mut(p);
            u[DTHETA] = dth[p];
            u[DETA] = det[p];
        }
        let u0 = out.point_mut(0);
        u0[DTHETA] = 0.0;
        u0[DETA] = 0.0;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_solution_has_tiny_residual() {
        let mesh = RadialMesh::uniform(1.0, 100).unwrap();
        let problem =
            CollocationProblem::new(ExponentialTest, mesh.clone(), LobattoScheme::four_point())
                .unwrap();
        let pts = mesh.collocation_points(&LobattoScheme::four_point());
        let u: Vec<f64> = pts.iter().map(|x| x.exp()).collect();
        let res = problem.residual(&u).unwrap();
        assert!(inf_norm(&res) < 1e-12, "{}", inf_norm(&res));
    }

    #[test]
    fn linear_problem_solves_in_one_step() {
        let mesh = RadialMesh::uniform(1.0, 20).unwrap();
        let problem =
            CollocationProblem::new(ExponentialTest, mesh, LobattoScheme::four_point()).unwrap();
        let mut u = vec![0.0; problem.unknowns()];
        let report = problem.newton_solve(&mut u).unwrap();
        assert!(report.iterations <= 2);
        assert!((u.last().unwrap() - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn zero_state_is_exact_without_pumping() {
        let params = ModelParams::new(0.0, 0.3, 2.0).unwrap();
        let guess = zero_guess(&params, RadialMesh::uniform(params.b, 50).unwrap());
        let problem = gp_problem(&params, &guess, 0).unwrap();
        let res = problem.residual(&guess.values).unwrap();
        // Only the radius rows carry rounding; the amplitude rows vanish exactly.
        for (i, v) in res.iter().enumerate() {
            if i < 4 || (i - 4) % GP_DIM != RHO {
                assert_eq!(*v, 0.0, "row {i}");
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
        let profile = solve_stationary(&params, &guess, 0).unwrap();
        assert!(profile.phi.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn assembled_jacobian_matches_directional_differences() {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let mesh = RadialMesh::uniform(params.b, 30).unwrap();
        let mut state = thomas_fermi_guess(&params, mesh).unwrap();
        // Deterministic pseudo-random perturbation.
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for v in state.values.iter_mut() {
            *v += 0.1 * next();
        }
        let problem = gp_problem(&params, &state, 0).unwrap();
        let (_, jac) = problem.assemble(&state.values).unwrap();
        let dir: Vec<f64> = (0..state.values.len()).map(|_| next()).collect();
        let jd = jac.matvec(&dir);
        let eps = 1e-6;
        let plus: Vec<f64> = state
            .values
            .iter()
            .zip(&dir)
            .map(|(u, d)| u + eps * d)
            .collect();
        let minus: Vec<f64> = state
            .values
            .iter()
            .zip(&dir)
            .map(|(u, d)| u - eps * d)
            .collect();
        let rp = problem.residual(&plus).unwrap();
        let rm = problem.residual(&minus).unwrap();
        let scale = inf_norm(&jd);
        for i in 0..jd.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            assert!(
                (fd - jd[i]).abs() < 1e-6 * scale,
                "row {i}: {fd} vs {}",
                jd[i]
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mesh = RadialMesh::uniform(1.0, 4).unwrap();
        let problem =
            CollocationProblem::new(ExponentialTest, mesh, LobattoScheme::four_point()).unwrap();
        assert!(matches!(
            problem.residual(&[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
