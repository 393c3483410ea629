//! First-order boundary-value systems and the radial Gross–Pitaevskii instance.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// A first-order system `u' = f(x, u)` on `[0, 1]` with separated boundary conditions.
///
/// The left and right conditions together must number exactly `dim()`.
pub trait FirstOrderSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, x: f64, u: &[f64], f: &mut [f64]);

    /// Row-major `∂f/∂u`, `dim × dim`.
    fn rhs_jacobian(&self, x: f64, u: &[f64], jac: &mut [f64]);

    fn left_count(&self) -> usize;

    fn left_bc(&self, u: &[f64], res: &mut [f64]);

    /// Row-major `left_count × dim`.
    fn left_bc_jacobian(&self, u: &[f64], jac: &mut [f64]);

    fn right_bc(&self, u: &[f64], res: &mut [f64]);

    /// Row-major `(dim - left_count) × dim`.
    fn right_bc_jacobian(&self, u: &[f64], jac: &mut [f64]);
}

pub const THETA: usize = 0;
pub const DTHETA: usize = 1;
pub const ETA: usize = 2;
pub const DETA: usize = 3;
pub const XI: usize = 4;
pub const MU: usize = 5;
pub const RHO: usize = 6;
pub const GP_DIM: usize = 7;

/// Parameter the continuation module may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Sigma,
    PumpRadius,
    Alpha,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Sigma => "sigma",
            Parameter::PumpRadius => "R",
            Parameter::Alpha => "alpha",
        }
    }

    pub fn get(self, params: &ModelParams) -> f64 {
        match self {
            Parameter::Sigma => params.sigma,
            Parameter::PumpRadius => params.pump_radius,
            Parameter::Alpha => params.alpha,
        }
    }

    pub fn set(self, params: &mut ModelParams, value: f64) {
        match self {
            Parameter::Sigma => params.sigma = value,
            Parameter::PumpRadius => params.pump_radius = value,
            Parameter::Alpha => params.alpha = value,
        }
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(Parameter::Sigma),
            "R" | "r" | "pump_radius" => Ok(Parameter::PumpRadius),
            "alpha" => Ok(Parameter::Alpha),
            other => Err(Error::invalid(format!(
                "unknown continuation parameter '{other}'"
            ))),
        }
    }
}

/// The stationary radial problem written as a real autonomous system in `x = r/b`.
///
/// For winding `m` the unknown is `χ = φ / r^m` (so `φ = r^m χ`), which turns the
/// `m²/r²` term into `(2m+1)/r · χ'` and keeps every component smooth at the
/// origin. For `m = 0` this is exactly the system for `φ` itself. Components:
/// `(Re χ, Re χ', Im χ, Im χ', ξ, μ, r)` with primes taken in the physical radius.
#[derive(Debug, Clone)]
pub struct GpRadialSystem {
    pub params: ModelParams,
    pub winding: u32,
}

/// Below `ORIGIN_GUARD · b` the right-hand side uses its `r → 0` limit.
pub const ORIGIN_GUARD: f64 = 1e-12;

struct Local {
    p: f64,
    dp: f64,
    s: f64,
    n: f64,
    g: f64,
    w: f64,
    theta_pump: f64,
    dtheta_dr: f64,
}

impl GpRadialSystem {
    pub fn new(params: ModelParams, winding: u32) -> Self {
        Self { params, winding }
    }

    fn c(&self) -> f64 {
        (2 * self.winding + 1) as f64
    }

    fn local(&self, u: &[f64]) -> Local {
        let r = u[RHO];
        let m = self.winding as i32;
        let (p, dp) = if m == 0 {
            (1.0, 0.0)
        } else {
            (r.powi(2 * m), 2.0 * m as f64 * r.powi(2 * m - 1))
        };
        let s = u[THETA] * u[THETA] + u[ETA] * u[ETA];
        let n = p * s;
        let theta_pump = self.params.theta(r);
        let g = self.params.alpha * theta_pump - self.params.sigma * n;
        let w = self.params.potential(r) - u[MU] + n;
        Local {
            p,
            dp,
            s,
            n,
            g,
            w,
            theta_pump,
            dtheta_dr: -self.params.theta_slope(r),
        }
    }

    fn at_origin(&self, u: &[f64]) -> bool {
        u[RHO].abs() < ORIGIN_GUARD * self.params.b
    }

    /// Derivative of the right-hand side with respect to a model parameter.
    pub fn rhs_parameter_derivative(&self, param: Parameter, u: &[f64], out: &mut [f64]) {
        let b = self.params.b;
        let l = self.local(u);
        let dg = match param {
            Parameter::Sigma => -l.n,
            Parameter::Alpha => l.theta_pump,
            Parameter::PumpRadius => self.params.alpha * self.params.theta_slope(u[RHO]),
        };
        let factor = if self.at_origin(u) {
            1.0 / (self.c() + 1.0)
        } else {
            1.0
        };
        out.fill(0.0);
        out[DTHETA] = -b * dg * u[ETA] * factor;
        out[DETA] = b * dg * u[THETA] * factor;
        out[XI] = b * u[RHO] * dg * l.n;
    }
}

impl FirstOrderSystem for GpRadialSystem {
    fn dim(&self) -> usize {
        GP_DIM
    }

    fn rhs(&self, _x: f64, u: &[f64], f: &mut [f64]) {
        let b = self.params.b;
        let l = self.local(u);
        let (th, et) = (u[THETA], u[ETA]);
        f[THETA] = b * u[DTHETA];
        f[ETA] = b * u[DETA];
        if self.at_origin(u) {
            let k = 1.0 / (self.c() + 1.0);
            f[DTHETA] = b * k * (l.w * th - l.g * et);
            f[DETA] = b * k * (l.w * et + l.g * th);
        } else {
            let c = self.c() / u[RHO];
            f[DTHETA] = b * (-c * u[DTHETA] + l.w * th - l.g * et);
            f[DETA] = b * (-c * u[DETA] + l.w * et + l.g * th);
        }
        f[XI] = b * l.g * l.n * u[RHO];
        f[MU] = 0.0;
        f[RHO] = b;
    }

    fn rhs_jacobian(&self, _x: f64, u: &[f64], jac: &mut [f64]) {
        let b = self.params.b;
        let sigma = self.params.sigma;
        let alpha = self.params.alpha;
        let l = self.local(u);
        let (th, et, r) = (u[THETA], u[ETA], u[RHO]);
        let d = GP_DIM;
        jac[..d * d].fill(0.0);
        let mut set = |i: usize, j: usize, v: f64| jac[i * d + j] = v;

        set(THETA, DTHETA, b);
        set(ETA, DETA, b);

        let vp = self.params.potential_derivative(r);
        let dn_dr = l.dp * l.s;
        let dw_dr = vp + dn_dr;
        let dg_dr = alpha * l.dtheta_dr - sigma * dn_dr;
        let origin = self.at_origin(u);
        let k = if origin { 1.0 / (self.c() + 1.0) } else { 1.0 };

        // Re χ' row.
        set(
            DTHETA,
            THETA,
            b * k * (l.w + 2.0 * l.p * th * th + 2.0 * sigma * l.p * th * et),
        );
        set(
            DTHETA,
            ETA,
            b * k * (2.0 * l.p * th * et - l.g + 2.0 * sigma * l.p * et * et),
        );
        set(DTHETA, MU, -b * k * th);
        // Im χ' row.
        set(
            DETA,
            THETA,
            b * k * (2.0 * l.p * th * et + l.g - 2.0 * sigma * l.p * th * th),
        );
        set(
            DETA,
            ETA,
            b * k * (l.w + 2.0 * l.p * et * et - 2.0 * sigma * l.p * th * et),
        );
        set(DETA, MU, -b * k * et);
        if origin {
            set(DTHETA, RHO, b * k * (dw_dr * th - dg_dr * et));
            set(DETA, RHO, b * k * (dw_dr * et + dg_dr * th));
        } else {
            let c = self.c();
            set(DTHETA, DTHETA, -b * c / r);
            set(DETA, DETA, -b * c / r);
            set(
                DTHETA,
                RHO,
                b * (c * u[DTHETA] / (r * r) + dw_dr * th - dg_dr * et),
            );
            set(
                DETA,
                RHO,
                b * (c * u[DETA] / (r * r) + dw_dr * et + dg_dr * th),
            );
        }

        // ξ row: b r g n.
        let common = 2.0 * b * r * l.p * (alpha * l.theta_pump - 2.0 * sigma * l.n);
        set(XI, THETA, common * th);
        set(XI, ETA, common * et);
        set(XI, RHO, b * (l.g * l.n + r * (dg_dr * l.n + l.g * dn_dr)));
    }

    fn left_count(&self) -> usize {
        4
    }

    fn left_bc(&self, u: &[f64], res: &mut [f64]) {
        res[0] = u[DTHETA];
        res[1] = u[DETA];
        res[2] = u[ETA];
        res[3] = u[RHO];
    }

    fn left_bc_jacobian(&self, _u: &[f64], jac: &mut [f64]) {
        jac[..4 * GP_DIM].fill(0.0);
        jac[DTHETA] = 1.0;
        jac[GP_DIM + DETA] = 1.0;
        jac[2 * GP_DIM + ETA] = 1.0;
        jac[3 * GP_DIM + RHO] = 1.0;
    }

    fn right_bc(&self, u: &[f64], res: &mut [f64]) {
        res[0] = u[THETA];
        res[1] = u[ETA];
        res[2] = u[XI];
    }

    fn right_bc_jacobian(&self, _u: &[f64], jac: &mut [f64]) {
        jac[..3 * GP_DIM].fill(0.0);
        jac[THETA] = 1.0;
        jac[GP_DIM + ETA] = 1.0;
        jac[2 * GP_DIM + XI] = 1.0;
    }
}

/// Regularized right-hand side at `r = 0`, in physical-radius derivatives.
///
/// The `1/r` terms are replaced by their limits, which requires the state to
/// have vanishing radial derivative there.
pub fn rhs_at_origin(
    u0: &[f64; GP_DIM],
    params: &ModelParams,
    winding: u32,
) -> Result<[f64; GP_DIM]> {
    let scale = 1.0 + u0[THETA].abs() + u0[ETA].abs();
    if u0[DTHETA].abs() > 1e-12 * scale || u0[DETA].abs() > 1e-12 * scale {
        return Err(Error::invalid(
            "origin state must have zero radial derivative",
        ));
    }
    if u0[RHO] != 0.0 {
        return Err(Error::invalid("origin state must have r = 0"));
    }
    let sys = GpRadialSystem::new(params.clone(), winding);
    let mut f = [0.0; GP_DIM];
    sys.rhs(0.0, u0, &mut f);
    for v in f.iter_mut() {
        *v /= params.b;
    }
    Ok(f)
}

/// `u' = u` on `[0, 1]` with `u(0) = 1`. Useful for checking the discretization.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialTest;

impl FirstOrderSystem for ExponentialTest {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _x: f64, u: &[f64], f: &mut [f64]) {
        f[0] = u[0];
    }
    fn rhs_jacobian(&self, _x: f64, _u: &[f64], jac: &mut [f64]) {
        jac[0] = 1.0;
    }
    fn left_count(&self) -> usize {
        1
    }
    fn left_bc(&self, u: &[f64], res: &mut [f64]) {
        res[0] = u[0] - 1.0;
    }
    fn left_bc_jacobian(&self, _u: &[f64], jac: &mut [f64]) {
        jac[0] = 1.0;
    }
    fn right_bc(&self, _u: &[f64], _res: &mut [f64]) {}
    fn right_bc_jacobian(&self, _u: &[f64], _jac: &mut [f64]) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard(r: f64) -> ModelParams {
        ModelParams::new(4.4, 0.3, r).unwrap()
    }

    #[test]
    fn origin_limit_values() {
        let u = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let f = rhs_at_origin(&u, &standard(2.0), 0).unwrap();
        assert!((f[DTHETA] - 4.0).abs() < 1e-12);
        let g = 4.4 * standard(2.0).theta(0.0) - 0.3 * 4.0;
        assert!((f[DETA] - 0.5 * g * 2.0).abs() < 1e-12);
        assert!((f[DETA] - 3.2).abs() < 1e-12);

        let zero = [0.0; GP_DIM];
        let f = rhs_at_origin(&zero, &standard(2.0), 0).unwrap();
        assert_eq!(f[DTHETA], 0.0);
        assert_eq!(f[DETA], 0.0);

        let free = ModelParams::new(0.0, 0.0, 2.0).unwrap();
        let u = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let f = rhs_at_origin(&u, &free, 0).unwrap();
        assert_eq!(f[DTHETA], 0.0);
        assert_eq!(f[DETA], 0.0);
    }

    #[test]
    fn origin_limit_matches_nearby_interior() {
        // Near the origin a regular solution has χ'(r) ≈ χ''(0) r, so the full
        // right-hand side at tiny r should reproduce the limit value.
        let p = standard(2.0);
        let sys = GpRadialSystem::new(p.clone(), 0);
        let u0 = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let lim = rhs_at_origin(&u0, &p, 0).unwrap();
        let r = 1e-8;
        let u = [2.0, lim[DTHETA] * r, 0.0, lim[DETA] * r, 0.0, 0.0, r];
        let mut f = [0.0; GP_DIM];
        sys.rhs(0.0, &u, &mut f);
        assert!((f[DTHETA] / p.b - lim[DTHETA]).abs() < 1e-6);
        assert!((f[DETA] / p.b - lim[DETA]).abs() < 1e-6);
    }

    #[test]
    fn origin_requires_flat_state() {
        let u = [2.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(rhs_at_origin(&u, &standard(2.0), 0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for winding in [0u32, 1, 2] {
            let sys = GpRadialSystem::new(standard(3.0), winding);
            for &r in &[0.0, 0.7, 2.9, 3.1, 8.0] {
                let u = [1.3, -0.4, 0.6, 0.2, 0.1, 5.0, r];
                let mut jac = vec![0.0; 49];
                sys.rhs_jacobian(0.0, &u, &mut jac);
                for j in 0..GP_DIM {
                    if r == 0.0 && j == RHO {
                        continue;
                    }
                    let h = 1e-6 * (1.0 + u[j].abs());
                    let mut up = u;
                    let mut dn = u;
                    up[j] += h;
                    dn[j] -= h;
                    let (mut fp, mut fm) = ([0.0; 7], [0.0; 7]);
                    sys.rhs(0.0, &up, &mut fp);
                    sys.rhs(0.0, &dn, &mut fm);
                    for i in 0..GP_DIM {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        let an = jac[i * GP_DIM + j];
                        assert!(
                            (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                            "m={winding} r={r} d f{i}/d u{j}: fd {fd} vs {an}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_derivatives_match_finite_differences() {
        for param in [Parameter::Sigma, Parameter::Alpha, Parameter::PumpRadius] {
            let base = standard(3.0);
            let u = [1.3, -0.4, 0.6, 0.2, 0.1, 5.0, 2.95];
            let sys = GpRadialSystem::new(base.clone(), 1);
            let mut an = [0.0; 7];
            sys.rhs_parameter_derivative(param, &u, &mut an);
            let h = 1e-6;
            let mut fp = [0.0; 7];
            let mut fm = [0.0; 7];
            let mut p = base.clone();
            param.set(&mut p, param.get(&base) + h);
            GpRadialSystem::new(p.clone(), 1).rhs(0.0, &u, &mut fp);
            param.set(&mut p, param.get(&base) - h);
            GpRadialSystem::new(p, 1).rhs(0.0, &u, &mut fm);
            for i in 0..7 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!(
                    (fd - an[i]).abs() < 1e-5 * (1.0 + fd.abs()),
                    "{param:?} {i}: {fd} vs {}",
                    an[i]
                );
            }
        }
    }
}
