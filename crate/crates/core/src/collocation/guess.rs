use super::{BvpState, RadialProfile, DTHETA, GP_DIM, MU, RHO, THETA};
use crate::error::{Error, Result};
use crate::mesh::{LobattoScheme, RadialMesh};
use crate::model::ModelParams;

/// Thomas–Fermi chemical potential `3α / 2σ`.
pub fn thomas_fermi_mu(params: &ModelParams) -> Result<f64> {
    if !(params.sigma > 0.0) {
        return Err(Error::invalid("Thomas-Fermi guess needs sigma > 0"));
    }
    Ok(1.5 * params.alpha / params.sigma)
}

/// `|φ|² = μ̃ − r²` inside `r < √μ̃`, zero outside.
pub fn thomas_fermi_guess(params: &ModelParams, mesh: RadialMesh) -> Result<BvpState> {
    let mu = thomas_fermi_mu(params)?;
    build(params, mesh, mu, |r| (mu - r * r).max(0.0).sqrt())
}

/// Real profile with `n_bumps` local maxima (counting the one at the origin)
/// under the Thomas–Fermi envelope.
pub fn multi_bump_guess(
    params: &ModelParams,
    mesh: RadialMesh,
    n_bumps: usize,
) -> Result<BvpState> {
    if n_bumps == 0 {
        return Err(Error::invalid("multi-bump guess needs at least one bump"));
    }
    let mu = thomas_fermi_mu(params)?;
    let edge = mu.sqrt();
    let k = n_bumps as f64 - 0.5;
    build(params, mesh, mu, move |r| {
        let tf = (mu - r * r).max(0.0).sqrt();
        if n_bumps == 1 {
            return tf;
        }
        let wave = (std::f64::consts::PI * k * r / edge).cos().powi(2);
        tf * (0.05 + 0.95 * wave)
    })
}

/// Guess from a stored profile: its modulus, interpolated onto `mesh`, and its `μ`.
pub fn profile_guess(
    params: &ModelParams,
    mesh: RadialMesh,
    profile: &RadialProfile,
) -> Result<BvpState> {
    let reach = profile.radius();
    build(params, mesh, profile.mu, |r| {
        if r <= reach {
            profile.eval(r).map(|z| z.norm()).unwrap_or(0.0)
        } else {
            0.0
        }
    })
}

/// The trivial state `φ ≡ 0`, `μ = 0`.
pub fn zero_guess(params: &ModelParams, mesh: RadialMesh) -> BvpState {
    let mut state = BvpState::zeros(mesh, LobattoScheme::four_point(), GP_DIM, 0);
    let radii = state.radii();
    let b = params.b;
    for (p, &r) in radii.iter().enumerate() {
        state.point_mut(p)[RHO] = if p + 1 == radii.len() { b } else { r };
    }
    state
}

fn build(
    params: &ModelParams,
    mesh: RadialMesh,
    mu: f64,
    amplitude: impl Fn(f64) -> f64,
) -> Result<BvpState> {
    if (mesh.radius() - params.b).abs() > 1e-12 * params.b {
        return Err(Error::invalid("mesh must span [0, b]"));
    }
    let mut state = zero_guess(params, mesh);
    let radii = state.radii();
    let theta: Vec<f64> = radii.iter().map(|&r| amplitude(r)).collect();
    let mut dtheta = differentiate(&radii, &theta);
    dtheta[0] = 0.0;
    let last = radii.len() - 1;
    for p in 0..radii.len() {
        let u = state.point_mut(p);
        u[THETA] = if p == last { 0.0 } else { theta[p] };
        u[DTHETA] = dtheta[p];
        u[MU] = mu;
    }
    Ok(state)
}

/// Three-point derivative on a nonuniform grid (one-sided at the ends).
pub(crate) fn differentiate(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    for i in 0..n {
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        // Derivative at x[i] of the parabola through the three points.
        let (xa, xb, xc) = (x[a], x[b], x[c]);
        let t = x[i];
        let la = (2.0 * t - xb - xc) / ((xa - xb) * (xa - xc));
        let lb = (2.0 * t - xa - xc) / ((xb - xa) * (xb - xc));
        let lc = (2.0 * t - xa - xb) / ((xc - xa) * (xc - xb));
        d[i] = la * y[a] + lb * y[b] + lc * y[c];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::XI;

    fn params() -> ModelParams {
        ModelParams::new(4.4, 0.3, 2.0).unwrap()
    }

    #[test]
    fn thomas_fermi_values() {
        let p = params();
        let state = thomas_fermi_guess(&p, RadialMesh::uniform(15.0, 60).unwrap()).unwrap();
        assert!((state.point(0)[MU] - 22.0).abs() < 1e-12);
        assert!((state.point(0)[THETA] - 22f64.sqrt()).abs() < 1e-12);
        for (p, r) in state.radii().iter().enumerate() {
            let u = state.point(p);
            assert!(u[THETA] >= 0.0);
            assert_eq!(u[XI], 0.0);
            if *r >= 22f64.sqrt() {
                assert_eq!(u[THETA], 0.0);
            }
        }
    }

    #[test]
    fn thomas_fermi_needs_decay() {
        let p = ModelParams::new(4.4, 0.0, 2.0).unwrap();
        assert!(thomas_fermi_guess(&p, RadialMesh::uniform(15.0, 10).unwrap()).is_err());
    }

    #[test]
    fn vanishing_pump_gives_vanishing_guess() {
        let p = ModelParams::new(1e-12, 0.3, 2.0).unwrap();
        let state = thomas_fermi_guess(&p, RadialMesh::uniform(15.0, 10).unwrap()).unwrap();
        assert!(state.component(THETA).iter().all(|v| v.abs() < 1e-5));
    }

    fn count_maxima(y: &[f64]) -> usize {
        let mut count = usize::from(y[0] > y[1]);
        for w in y.windows(3) {
            if w[1] > w[0] && w[1] > w[2] {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn bump_counts() {
        let p = params();
        let mesh = RadialMesh::uniform(15.0, 300).unwrap();
        let tf = thomas_fermi_guess(&p, mesh.clone()).unwrap();
        let one = multi_bump_guess(&p, mesh.clone(), 1).unwrap();
        assert_eq!(tf, one);
        for n in 1..=5 {
            let g = multi_bump_guess(&p, mesh.clone(), n).unwrap();
            assert_eq!(count_maxima(&g.component(THETA)), n, "n_bumps = {n}");
        }
        assert!(multi_bump_guess(&p, mesh, 0).is_err());
    }

    #[test]
    fn nonuniform_derivative_is_exact_for_quadratics() {
        let x = [0.0, 0.3, 0.35, 1.0, 1.7];
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t * t - t + 3.0).collect();
        let d = differentiate(&x, &y);
        for (t, dv) in x.iter().zip(d) {
            assert!((dv - (4.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
