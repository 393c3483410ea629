//! Keller pseudo-arclength continuation with fold detection.
//!
//! A branch of `F(u, λ) = 0` is parameterized by approximate arclength: from an
//! anchor `(u₀, λ₀)` with unit tangent `(u̇₀, λ̇₀)` the next point solves
//!
//! ```text
//! F(u, λ) = 0,    ⟨u̇₀, u − u₀⟩ + λ̇₀(λ − λ₀) − ν = 0.
//! ```
//!
//! Inner products on `u` are weighted (see [`ParametricSystem::weights`]).

use std::fmt::Write as _;

use crate::collocation::{
    gp_problem, BvpState, CollocationProblem, GpRadialSystem, Parameter, RadialProfile, GP_DIM, MU,
};
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, SparseMatrix};
use crate::model::ModelParams;

/// `F(u, λ)` with its derivatives.
pub trait ParametricSystem {
    fn len(&self) -> usize;

    /// `(F, F_u)`.
    fn linearize(&self, u: &[f64], lambda: f64) -> Result<(Vec<f64>, SparseMatrix)>;

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>>;

    fn parameter_derivative(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>>;

    /// Weights `w` of the inner product `Σ w_i a_i b_i` on the state.
    fn weights(&self) -> Vec<f64> {
        vec![1.0; self.len()]
    }

    /// Scalar recorded with every branch point.
    fn monitor(&self, _u: &[f64], _lambda: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_initial: f64,
    pub max_points: usize,
    pub max_corrector_iterations: usize,
    /// A step converging within this many iterations doubles `ν`.
    pub fast_iterations: usize,
    pub tolerance: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            nu_min: 1e-6,
            nu_max: 1e-2,
            nu_initial: 1e-2,
            max_points: 2000,
            max_corrector_iterations: 10,
            fast_iterations: 3,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub du: Vec<f64>,
    pub dlambda: f64,
}

impl Tangent {
    fn dot(&self, other: &Tangent, w: &[f64]) -> f64 {
        weighted_dot(&self.du, &other.du, w) + self.dlambda * other.dlambda
    }

    fn negated(&self) -> Tangent {
        Tangent {
            du: self.du.iter().map(|v| -v).collect(),
            dlambda: -self.dlambda,
        }
    }

    pub fn norm(&self, w: &[f64]) -> f64 {
        self.dot(self, w).sqrt()
    }
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), wi)| wi * x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub state: Vec<f64>,
    /// Monitored scalar (the chemical potential for the GP system).
    pub mu: f64,
    /// Unit tangent, oriented along the branch list order.
    pub tangent: Tangent,
    pub fold_flag: bool,
    /// Index of the point this one was corrected from and the signed step,
    /// measured along the anchor's list-order tangent.
    pub anchor: Option<(usize, f64)>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    RangeExhausted,
    StepFailure,
    MaxPoints,
    ClosedLoop,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub parameter: String,
    /// Termination of the two legs (decreasing list order, increasing list order).
    pub termination: [Termination; 2],
    /// Index of the starting point within `points`.
    pub start: usize,
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("index,lambda,mu,fold_flag,residual_norm\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{:.15e},{:.15e},{},{:.6e}",
                i,
                p.lambda,
                p.mu,
                u8::from(p.fold_flag),
                p.residual_norm
            );
        }
        s
    }
}

/// Bordered solve `[[F_u, F_λ], [cᵀ, d]] [x; y] = [f; g]`.
///
/// Uses block elimination with one factorization of `F_u`, and falls back to
/// factoring the bordered matrix when `F_u` is (nearly) singular.
fn bordered_solve(
    fu: &SparseMatrix,
    fl: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = fu.dim();
    let attempt = || -> Result<(Vec<f64>, f64)> {
        let lu = fu.factor()?;
        let z1 = lu.solve(f)?;
        let z2 = lu.solve(fl)?;
        let denom = d - c.iter().zip(&z2).map(|(a, b)| a * b).sum::<f64>();
        let y = (g - c.iter().zip(&z1).map(|(a, b)| a * b).sum::<f64>()) / denom;
        if !y.is_finite() {
            return Err(Error::RankDeficient);
        }
        let x: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - y * b).collect();
        Ok((x, y))
    };
    let check = |x: &[f64], y: f64| -> bool {
        let mut r = fu.matvec(x);
        let mut scale = inf_norm(f).max(g.abs());
        for i in 0..n {
            r[i] += fl[i] * y - f[i];
        }
        let last = c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + d * y - g;
        scale = scale.max(1e-300);
        inf_norm(&r).max(last.abs()) <= 1e-8 * scale.max(1.0)
    };
    if let Ok((x, y)) = attempt() {
        if check(&x, y) {
            return Ok((x, y));
        }
    }
    let g_mat = fu.bordered(fl, c, d);
    let lu = g_mat.factor().map_err(|_| Error::RankDeficient)?;
    let mut rhs = f.to_vec();
    rhs.push(g);
    let mut sol = lu.solve(&rhs).map_err(|_| Error::RankDeficient)?;
    let y = sol.pop().unwrap();
    Ok((sol, y))
}

/// Unit tangent at a solution point, oriented to agree with `previous` when given
/// (otherwise with increasing `λ`).
pub fn tangent_at<S: ParametricSystem>(
    sys: &S,
    u: &[f64],
    lambda: f64,
    previous: Option<&Tangent>,
) -> Result<Tangent> {
    let w = sys.weights();
    let (_, fu) = sys.linearize(u, lambda)?;
    let fl = sys.parameter_derivative(u, lambda)?;
    let n = sys.len();
    let zero = vec![0.0; n];
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    if let Some(t) = previous {
        rows.push((t.du.iter().zip(&w).map(|(a, b)| a * b).collect(), t.dlambda));
    }
    rows.push((zero.clone(), 1.0));
    // At a fold of the λ-parameterization, border with a state direction instead.
    rows.push((w.clone(), 0.0));
    for (c, d) in rows {
        if let Ok((du, dl)) = bordered_solve(&fu, &fl, &c, d, &zero, 1.0) {
            let mut t = Tangent { du, dlambda: dl };
            let norm = t.norm(&w);
            if !(norm.is_finite() && norm > 0.0) {
                continue;
            }
            t.du.iter_mut().for_each(|v| *v /= norm);
            t.dlambda /= norm;
            let flip = match previous {
                Some(p) => t.dot(p, &w) < 0.0,
                None => t.dlambda < 0.0,
            };
            return Ok(if flip { t.negated() } else { t });
        }
    }
    Err(Error::RankDeficient)
}

/// Result of one corrector run.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Newton on the augmented system, starting from the tangent predictor.
pub fn keller_corrector<S: ParametricSystem>(
    sys: &S,
    anchor_u: &[f64],
    anchor_lambda: f64,
    tangent: &Tangent,
    nu: f64,
    settings: &ContinuationSettings,
) -> Result<Corrected> {
    let w = sys.weights();
    let c: Vec<f64> = tangent.du.iter().zip(&w).map(|(a, b)| a * b).collect();
    let mut u: Vec<f64> = anchor_u
        .iter()
        .zip(&tangent.du)
        .map(|(a, t)| a + nu * t)
        .collect();
    let mut lambda = anchor_lambda + nu * tangent.dlambda;
    let arclength = |u: &[f64], lambda: f64| -> f64 {
        let mut s = tangent.dlambda * (lambda - anchor_lambda) - nu;
        for i in 0..u.len() {
            s += c[i] * (u[i] - anchor_u[i]);
        }
        s
    };
    let diverged = || Error::CorrectorDiverged { nu };
    for iteration in 0..=settings.max_corrector_iterations {
        let (f, fu) = sys.linearize(&u, lambda).map_err(|_| diverged())?;
        let fnorm = inf_norm(&f);
        let n_res = arclength(&u, lambda);
        if !fnorm.is_finite() {
            return Err(diverged());
        }
        if fnorm < settings.tolerance && n_res.abs() < 1e-12 * (1.0 + nu.abs()) {
            return Ok(Corrected {
                u,
                lambda,
                iterations: iteration,
                residual_norm: fnorm,
            });
        }
        if iteration == settings.max_corrector_iterations {
            break;
        }
        let fl = sys
            .parameter_derivative(&u, lambda)
            .map_err(|_| diverged())?;
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let (du, dl) = bordered_solve(&fu, &fl, &c, tangent.dlambda, &neg_f, -n_res)
            .map_err(|_| diverged())?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        lambda += dl;
    }
    Err(diverged())
}

/// Newton on `F(u, λ) = 0` with `λ` held fixed.
fn pinned_corrector<S: ParametricSystem>(
    sys: &S,
    guess: &[f64],
    lambda: f64,
    settings: &ContinuationSettings,
) -> Result<Corrected> {
    let mut u = guess.to_vec();
    let diverged = || Error::CorrectorDiverged { nu: 0.0 };
    for iteration in 0..=settings.max_corrector_iterations {
        let (f, fu) = sys.linearize(&u, lambda)?;
        let fnorm = inf_norm(&f);
        if !fnorm.is_finite() {
            return Err(diverged());
        }
        if fnorm < settings.tolerance {
            return Ok(Corrected {
                u,
                lambda,
                iterations: iteration,
                residual_norm: fnorm,
            });
        }
        if iteration == settings.max_corrector_iterations {
            break;
        }
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let du = fu.factor()?.solve(&neg_f)?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
    }
    Err(diverged())
}

/// Trace a branch in both directions from a converged point `(u0, λ0)`.
pub fn trace<S: ParametricSystem>(
    sys: &S,
    u0: &[f64],
    lambda0: f64,
    range: (f64, f64),
    settings: &ContinuationSettings,
    parameter: &str,
) -> Result<Branch> {
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    if !(lo <= lambda0 && lambda0 <= hi) {
        return Err(Error::invalid(format!(
            "start value {lambda0} lies outside [{lo}, {hi}]"
        )));
    }
    let f0 = sys.residual(u0, lambda0)?;
    let r0 = inf_norm(&f0);
    if !(r0 < 1e2 * settings.tolerance.max(1e-12)) {
        return Err(Error::CorrectorDiverged { nu: 0.0 });
    }
    let t0 = tangent_at(sys, u0, lambda0, None)?;
    let start = BranchPoint {
        lambda: lambda0,
        state: u0.to_vec(),
        mu: sys.monitor(u0, lambda0),
        tangent: t0.clone(),
        fold_flag: false,
        anchor: None,
        residual_norm: r0,
    };
    if lo == hi {
        return Ok(Branch {
            points: vec![start],
            parameter: parameter.to_string(),
            termination: [Termination::RangeExhausted; 2],
            start: 0,
        });
    }
    let (forward, t_fwd) = leg(sys, &start, &t0, (lo, hi), settings)?;
    let (mut backward, t_bwd) = if t_fwd == Termination::ClosedLoop {
        (Vec::new(), Termination::ClosedLoop)
    } else {
        leg(sys, &start, &t0.negated(), (lo, hi), settings)?
    };

    // Merge: reversed backward leg, start, forward leg.
    let nb = backward.len();
    backward.reverse();
    let mut points = Vec::with_capacity(nb + 1 + forward.len());
    for (i, mut p) in backward.into_iter().enumerate() {
        p.tangent = p.tangent.negated();
        // Leg point k (list index nb-1-k) was anchored at leg point k-1, i.e. at list index i+1.
        p.anchor = p.anchor.map(|(_, nu)| (i + 1, -nu));
        points.push(p);
    }
    points.push(start);
    for mut p in forward {
        p.anchor = p.anchor.map(|(k, nu)| (k + nb, nu));
        points.push(p);
    }
    for i in 1..points.len() {
        if points[i - 1].tangent.dlambda * points[i].tangent.dlambda < 0.0 {
            points[i].fold_flag = true;
        }
    }
    Ok(Branch {
        points,
        parameter: parameter.to_string(),
        termination: [t_bwd, t_fwd],
        start: nb,
    })
}

/// One direction; anchors are indices into the leg with 0 = the start point.
fn leg<S: ParametricSystem>(
    sys: &S,
    start: &BranchPoint,
    t0: &Tangent,
    (lo, hi): (f64, f64),
    settings: &ContinuationSettings,
) -> Result<(Vec<BranchPoint>, Termination)> {
    let w = sys.weights();
    let mut out: Vec<BranchPoint> = Vec::new();
    let mut nu = settings.nu_initial.min(settings.nu_max);
    let mut anchor_u = start.state.clone();
    let mut anchor_l = start.lambda;
    let mut tangent = t0.clone();
    let mut travelled = 0.0;
    loop {
        if out.len() + 1 >= settings.max_points {
            return Ok((out, Termination::MaxPoints));
        }
        let step = keller_corrector(sys, &anchor_u, anchor_l, &tangent, nu, settings);
        let c = match step {
            Ok(c) => c,
            Err(_) => {
                nu *= 0.5;
                if nu < settings.nu_min {
                    return Ok((out, Termination::StepFailure));
                }
                continue;
            }
        };
        if c.lambda < lo || c.lambda > hi {
            // Land the last point on the range end when a fixed-parameter solve converges there.
            let edge = if c.lambda < lo { lo } else { hi };
            let s = (edge - anchor_l) / (c.lambda - anchor_l);
            let guess: Vec<f64> = anchor_u
                .iter()
                .zip(&c.u)
                .map(|(a, b)| a + s * (b - a))
                .collect();
            if let Ok(e) = pinned_corrector(sys, &guess, edge, settings) {
                if let Ok(t) = tangent_at(sys, &e.u, edge, Some(&tangent)) {
                    let du: Vec<f64> = e.u.iter().zip(&anchor_u).map(|(a, b)| a - b).collect();
                    let arc =
                        weighted_dot(&tangent.du, &du, &w) + tangent.dlambda * (edge - anchor_l);
                    if arc > 0.0 {
                        out.push(BranchPoint {
                            lambda: edge,
                            mu: sys.monitor(&e.u, edge),
                            state: e.u,
                            tangent: t,
                            fold_flag: false,
                            anchor: Some((out.len(), arc)),
                            residual_norm: e.residual_norm,
                        });
                    }
                }
            }
            return Ok((out, Termination::RangeExhausted));
        }
        let new_t = match tangent_at(sys, &c.u, c.lambda, Some(&tangent)) {
            Ok(t) => t,
            Err(_) => {
                nu *= 0.5;
                if nu < settings.nu_min {
                    return Ok((out, Termination::StepFailure));
                }
                continue;
            }
        };
        travelled += nu;
        let anchor_index = out.len();
        out.push(BranchPoint {
            lambda: c.lambda,
            mu: sys.monitor(&c.u, c.lambda),
            state: c.u,
            tangent: new_t.clone(),
            fold_flag: false,
            anchor: Some((anchor_index, nu)),
            residual_norm: c.residual_norm,
        });
        let last = out.last().unwrap();
        // Back near the start after a long excursion: the branch is a closed curve.
        let du: Vec<f64> = last
            .state
            .iter()
            .zip(&start.state)
            .map(|(a, b)| a - b)
            .collect();
        let gap = (weighted_dot(&du, &du, &w) + (last.lambda - start.lambda).powi(2)).sqrt();
        if travelled > 4.0 * settings.nu_max && gap < 0.75 * nu {
            out.pop();
            return Ok((out, Termination::ClosedLoop));
        }
        anchor_u = last.state.clone();
        anchor_l = last.lambda;
        tangent = new_t;
        if c.iterations <= settings.fast_iterations {
            nu = (2.0 * nu).min(settings.nu_max);
        }
    }
}

/// A located fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub lambda: f64,
    pub state: Vec<f64>,
    /// Parameter values of the final bisection bracket.
    pub bracket: (f64, f64),
}

/// Localize every sign change of `λ̇` along the branch by bisection on the step.
pub fn fold_report<S: ParametricSystem>(
    sys: &S,
    branch: &Branch,
    settings: &ContinuationSettings,
) -> Result<Vec<Fold>> {
    let w = sys.weights();
    let mut folds = Vec::new();
    for i in 1..branch.points.len() {
        let (a, b) = (&branch.points[i - 1], &branch.points[i]);
        if a.tangent.dlambda * b.tangent.dlambda >= 0.0 {
            continue;
        }
        // Arclength of b measured from a along a's tangent.
        let du: Vec<f64> = b.state.iter().zip(&a.state).map(|(x, y)| x - y).collect();
        let span = weighted_dot(&a.tangent.du, &du, &w) + a.tangent.dlambda * (b.lambda - a.lambda);
        let (mut s_lo, mut s_hi) = (0.0, span);
        let (mut l_lo, mut l_hi) = (a.lambda, b.lambda);
        let (mut d_lo, mut d_hi) = (a.tangent.dlambda, b.tangent.dlambda);
        let mut state_lo = a.state.clone();
        let mut state_hi = b.state.clone();
        for _ in 0..60 {
            if (l_hi - l_lo).abs() < 1e-7 && (s_hi - s_lo).abs() < 1e-4 {
                break;
            }
            let mid = 0.5 * (s_lo + s_hi);
            let c = keller_corrector(sys, &a.state, a.lambda, &a.tangent, mid, settings)?;
            let t = tangent_at(sys, &c.u, c.lambda, Some(&a.tangent))?;
            if t.dlambda * d_lo > 0.0 {
                s_lo = mid;
                l_lo = c.lambda;
                d_lo = t.dlambda;
                state_lo = c.u;
            } else {
                s_hi = mid;
                l_hi = c.lambda;
                d_hi = t.dlambda;
                state_hi = c.u;
            }
        }
        // λ̇ is close to linear across the bracket: integrate it to its zero.
        let frac = if d_lo != d_hi {
            d_lo / (d_lo - d_hi)
        } else {
            0.5
        };
        let s_star = frac * (s_hi - s_lo);
        let lambda = l_lo + 0.5 * d_lo * s_star;
        let state = if frac <= 0.5 { state_lo } else { state_hi };
        folds.push(Fold {
            lambda,
            state,
            bracket: (l_lo, l_hi),
        });
    }
    Ok(folds)
}

/// `u² + λ² − 1`: the unit circle, with folds at `λ = ±1`.
#[derive(Debug, Clone, Copy)]
pub struct CircleProblem;

impl ParametricSystem for CircleProblem {
    fn len(&self) -> usize {
        1
    }

    fn linearize(&self, u: &[f64], lambda: f64) -> Result<(Vec<f64>, SparseMatrix)> {
        let mut j = SparseMatrix::new(1);
        j.push(0, 0, 2.0 * u[0]);
        Ok((self.residual(u, lambda)?, j))
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        Ok(vec![u[0] * u[0] + lambda * lambda - 1.0])
    }

    fn parameter_derivative(&self, _u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        Ok(vec![2.0 * lambda])
    }

    fn monitor(&self, u: &[f64], _lambda: f64) -> f64 {
        u[0]
    }
}

/// The discretized stationary problem as a function of one model parameter.
#[derive(Debug, Clone)]
pub struct GpContinuation {
    pub template: ModelParams,
    pub parameter: Parameter,
    pub base: BvpState,
    problem: CollocationProblem<GpRadialSystem>,
}

impl GpContinuation {
    pub fn new(template: ModelParams, parameter: Parameter, base: BvpState) -> Result<Self> {
        let problem = gp_problem(&template, &base, base.winding)?;
        Ok(Self {
            template,
            parameter,
            base,
            problem,
        })
    }

    pub fn params_at(&self, lambda: f64) -> Result<ModelParams> {
        let mut p = self.template.clone();
        self.parameter.set(&mut p, lambda);
        p.validate()?;
        Ok(p)
    }

    fn problem_at(&self, lambda: f64) -> Result<CollocationProblem<GpRadialSystem>> {
        let mut problem = self.problem.clone();
        problem.system.params = self.params_at(lambda)?;
        Ok(problem)
    }

    pub fn state_at(&self, u: &[f64]) -> BvpState {
        let mut s = self.base.clone();
        s.values.copy_from_slice(u);
        s
    }

    pub fn profile(&self, point: &BranchPoint) -> Result<RadialProfile> {
        let params = self.params_at(point.lambda)?;
        RadialProfile::from_state(&params, self.state_at(&point.state), point.residual_norm)
    }
}

impl ParametricSystem for GpContinuation {
    fn len(&self) -> usize {
        self.base.values.len()
    }

    fn linearize(&self, u: &[f64], lambda: f64) -> Result<(Vec<f64>, SparseMatrix)> {
        self.problem_at(lambda)?.assemble(u)
    }

    fn residual(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.problem_at(lambda)?.residual(u)
    }

    fn parameter_derivative(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let problem = self.problem_at(lambda)?;
        let param = self.parameter;
        let sys = problem.system.clone();
        problem.parameter_derivative(u, |_, ui, out| sys.rhs_parameter_derivative(param, ui, out))
    }

    /// Mean over collocation points, so the norm does not grow with the mesh.
    fn weights(&self) -> Vec<f64> {
        let n = self.base.points() as f64;
        vec![1.0 / n; self.len()]
    }

    fn monitor(&self, u: &[f64], _lambda: f64) -> f64 {
        u[MU]
    }
}

/// Continue a converged stationary profile in one parameter over `range`.
pub fn trace_branch(
    start: &RadialProfile,
    parameter: Parameter,
    range: (f64, f64),
    settings: &ContinuationSettings,
) -> Result<(GpContinuation, Branch)> {
    let state = start
        .state
        .clone()
        .ok_or_else(|| Error::invalid("continuation needs a profile produced by the solver"))?;
    if state.dim != GP_DIM {
        return Err(Error::DimensionMismatch {
            expected: GP_DIM,
            found: state.dim,
        });
    }
    let sys = GpContinuation::new(start.params.clone(), parameter, state.clone())?;
    let lambda0 = parameter.get(&start.params);
    let branch = trace(
        &sys,
        &state.values,
        lambda0,
        range,
        settings,
        parameter.name(),
    )?;
    Ok((sys, branch))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `u − λ`.
    struct Line;
    impl ParametricSystem for Line {
        fn len(&self) -> usize {
            1
        }
        fn linearize(&self, u: &[f64], l: f64) -> Result<(Vec<f64>, SparseMatrix)> {
            let mut j = SparseMatrix::new(1);
            j.push(0, 0, 1.0);
            Ok((self.residual(u, l)?, j))
        }
        fn residual(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
            Ok(vec![u[0] - l])
        }
        fn parameter_derivative(&self, _u: &[f64], _l: f64) -> Result<Vec<f64>> {
            Ok(vec![-1.0])
        }
    }

    #[test]
    fn line_tangent() {
        let t = tangent_at(&Line, &[0.3], 0.3, None).unwrap();
        let s = 0.5f64.sqrt();
        assert!((t.du[0] - s).abs() < 1e-14 && (t.dlambda - s).abs() < 1e-14);
    }

    #[test]
    fn circle_tangent_at_fold_free_point() {
        let t = tangent_at(&CircleProblem, &[1.0], 0.0, None).unwrap();
        assert!(t.du[0].abs() < 1e-14);
        assert!((t.dlambda.abs() - 1.0).abs() < 1e-14);
        // At the fold itself F_u vanishes and the state border takes over.
        let t = tangent_at(&CircleProblem, &[0.0], 1.0, None).unwrap();
        assert!((t.du[0].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_step_returns_anchor() {
        let t = tangent_at(&CircleProblem, &[1.0], 0.0, None).unwrap();
        let c = keller_corrector(
            &CircleProblem,
            &[1.0],
            0.0,
            &t,
            0.0,
            &ContinuationSettings::default(),
        )
        .unwrap();
        assert_eq!(c.u, vec![1.0]);
        assert_eq!(c.lambda, 0.0);
        assert_eq!(c.iterations, 0);
    }

    #[test]
    fn circle_step_lands_on_circle() {
        let t = tangent_at(&CircleProblem, &[1.0], 0.0, None).unwrap();
        let c = keller_corrector(
            &CircleProblem,
            &[1.0],
            0.0,
            &t,
            0.1,
            &ContinuationSettings::default(),
        )
        .unwrap();
        assert!((c.u[0] * c.u[0] + c.lambda * c.lambda - 1.0).abs() < 1e-12);
        assert!((c.lambda - 0.1).abs() < 1e-12);
    }

    #[test]
    fn circle_branch_is_closed_with_two_folds() {
        let settings = ContinuationSettings {
            nu_max: 0.05,
            nu_initial: 0.05,
            ..Default::default()
        };
        let branch = trace(
            &CircleProblem,
            &[1.0],
            0.0,
            (-2.0, 2.0),
            &settings,
            "lambda",
        )
        .unwrap();
        assert_eq!(branch.termination[1], Termination::ClosedLoop);
        let flagged = branch.points.iter().filter(|p| p.fold_flag).count();
        assert_eq!(flagged, 2);
        let mut folds: Vec<f64> = fold_report(&CircleProblem, &branch, &settings)
            .unwrap()
            .iter()
            .map(|f| f.lambda)
            .collect();
        folds.sort_by(f64::total_cmp);
        assert_eq!(folds.len(), 2);
        assert!((folds[0] + 1.0).abs() < 1e-4, "{folds:?}");
        assert!((folds[1] - 1.0).abs() < 1e-4, "{folds:?}");
    }

    #[test]
    fn line_branch_is_monotone() {
        let settings = ContinuationSettings {
            nu_max: 0.1,
            ..Default::default()
        };
        let branch = trace(&Line, &[0.0], 0.0, (-1.0, 1.0), &settings, "lambda").unwrap();
        assert_eq!(branch.termination, [Termination::RangeExhausted; 2]);
        assert!(fold_report(&Line, &branch, &settings).unwrap().is_empty());
        assert!(branch.points.windows(2).all(|w| w[1].lambda > w[0].lambda));
    }

    #[test]
    fn degenerate_range_gives_single_point() {
        let b = trace(
            &Line,
            &[0.5],
            0.5,
            (0.5, 0.5),
            &ContinuationSettings::default(),
            "lambda",
        )
        .unwrap();
        assert_eq!(b.len(), 1);
    }
}
