use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{BvpState, DETA, DTHETA, ETA, MU, THETA};
use crate::error::{Error, Result};
use crate::mesh::RadialMesh;
use crate::model::ModelParams;
use crate::quadrature::derivative4;

/// A converged stationary state `ψ = e^{−iμt} φ(r) e^{imθ}` on `[0, b]`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub mesh: RadialMesh,
    /// Sample radii, increasing, `r[0] = 0` and `r[last] = b`.
    pub r: Vec<f64>,
    pub phi: Vec<Complex64>,
    /// `dφ/dr` at the sample radii.
    pub dphi: Vec<Complex64>,
    pub mu: f64,
    pub winding: u32,
    pub residual_norm: f64,
    pub params: ModelParams,
    /// Solver state, when the profile came straight from the solver.
    pub state: Option<BvpState>,
}

impl RadialProfile {
    pub fn from_state(params: &ModelParams, state: BvpState, residual: f64) -> Result<Self> {
        let r = state.radii();
        let m = state.winding as i32;
        let mut phi = Vec::with_capacity(r.len());
        let mut dphi = Vec::with_capacity(r.len());
        for (p, &rp) in r.iter().enumerate() {
            let u = state.point(p);
            let chi = Complex64::new(u[THETA], u[ETA]);
            let dchi = Complex64::new(u[DTHETA], u[DETA]);
            let (pw, dpw) = if m == 0 {
                (1.0, 0.0)
            } else {
                (rp.powi(m), m as f64 * rp.powi(m - 1))
            };
            phi.push(chi * pw);
            dphi.push(chi * dpw + dchi * pw);
        }
        let mu = state.point(0)[MU];
        Ok(Self {
            mesh: state.mesh.clone(),
            r,
            phi,
            dphi,
            mu,
            winding: state.winding,
            residual_norm: residual,
            params: params.clone(),
            state: Some(state),
        })
    }

    /// Profile from samples alone; derivatives are reconstructed by differences.
    pub fn from_samples(
        params: &ModelParams,
        r: Vec<f64>,
        phi: Vec<Complex64>,
        mu: f64,
        winding: u32,
        residual_norm: f64,
    ) -> Result<Self> {
        if r.len() != phi.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                found: phi.len(),
            });
        }
        if r.len() < 5 {
            return Err(Error::EmptyProfile(
                "a profile needs at least five samples".into(),
            ));
        }
        let mesh = RadialMesh::from_nodes(r.clone())?;
        let re: Vec<f64> = phi.iter().map(|z| z.re).collect();
        let im: Vec<f64> = phi.iter().map(|z| z.im).collect();
        let dre = derivative4(&r, &re);
        let dim = derivative4(&r, &im);
        let dphi = dre
            .iter()
            .zip(&dim)
            .map(|(a, b)| Complex64::new(*a, *b))
            .collect();
        Ok(Self {
            mesh,
            r,
            phi,
            dphi,
            mu,
            winding,
            residual_norm,
            params: params.clone(),
            state: None,
        })
    }

    pub fn radius(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn bracket(&self, r: f64) -> Result<usize> {
        let b = self.radius();
        if !(r >= 0.0) || r > b * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { r });
        }
        let i = self.r.partition_point(|&x| x <= r);
        Ok(i.clamp(1, self.r.len() - 1) - 1)
    }

    /// Cubic Hermite interpolation of `φ`.
    pub fn eval(&self, r: f64) -> Result<Complex64> {
        let i = self.bracket(r)?;
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = ((r - x0) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(self.phi[i] * h00
            + self.dphi[i] * (h10 * h)
            + self.phi[i + 1] * h01
            + self.dphi[i + 1] * (h11 * h))
    }

    /// Derivative of the Hermite interpolant.
    pub fn eval_derivative(&self, r: f64) -> Result<Complex64> {
        let i = self.bracket(r)?;
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = ((r - x0) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        Ok(self.phi[i] * d00 + self.dphi[i] * d10 + self.phi[i + 1] * d01 + self.dphi[i + 1] * d11)
    }

    pub fn density(&self) -> Vec<f64> {
        self.phi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn peak_density(&self) -> f64 {
        self.density().into_iter().fold(0.0, f64::max)
    }

    /// `sup |φ_self − φ_other|` over `samples + 1` equispaced radii of the common range.
    pub fn sup_distance(&self, other: &RadialProfile, samples: usize) -> Result<f64> {
        let b = self.radius().min(other.radius());
        let mut worst: f64 = 0.0;
        for i in 0..=samples {
            let r = b * i as f64 / samples as f64;
            worst = worst.max((self.eval(r)? - other.eval(r)?).norm());
        }
        Ok(worst)
    }

    /// Same as [`sup_distance`](Self::sup_distance) but on `|φ|`, which ignores the gauge.
    pub fn sup_distance_abs(&self, other: &RadialProfile, samples: usize) -> Result<f64> {
        let b = self.radius().min(other.radius());
        let mut worst: f64 = 0.0;
        for i in 0..=samples {
            let r = b * i as f64 / samples as f64;
            worst = worst.max((self.eval(r)?.norm() - other.eval(r)?.norm()).abs());
        }
        Ok(worst)
    }

    pub fn to_csv_string(&self) -> String {
        let p = &self.params;
        let mut s = String::with_capacity(self.r.len() * 64);
        let _ = writeln!(
            s,
            "# mu={:.17e} m={} residual={:.6e} alpha={} sigma={} R={} kappa={} b={}",
            self.mu,
            self.winding,
            self.residual_norm,
            p.alpha,
            p.sigma,
            p.pump_radius,
            p.kappa,
            p.b
        );
        s.push_str("r,re_phi,im_phi\n");
        for (r, z) in self.r.iter().zip(&self.phi) {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", r, z.re, z.im);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text).map_err(|e| match e {
            Error::Format(message) => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut r = Vec::new();
        let mut phi = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            if line.starts_with('r') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Format(format!("expected 3 columns, got '{line}'")));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("'{s}': {e}")))
            };
            r.push(num(cols[0])?);
            phi.push(Complex64::new(num(cols[1])?, num(cols[2])?));
        }
        let get = |k: &str| -> Result<f64> {
            meta.get(k)
                .ok_or_else(|| Error::Format(format!("missing '{k}' in header comment")))?
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("{k}: {e}")))
        };
        let params = ModelParams::new(get("alpha")?, get("sigma")?, get("R")?)?
            .with_kappa(get("kappa")?)?
            .with_truncation(get("b")?)?;
        let winding = get("m")? as u32;
        Self::from_samples(&params, r, phi, get("mu")?, winding, get("residual")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> RadialProfile {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let r: Vec<f64> = (0..=1500).map(|i| 15.0 * i as f64 / 1500.0).collect();
        let phi = r
            .iter()
            .map(|x| Complex64::new((-x * x / 2.0f64).exp(), 0.0))
            .collect();
        RadialProfile::from_samples(&params, r, phi, 2.5, 0, 0.0).unwrap()
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let p = gaussian();
        for &x in &[0.0, 0.013, 1.234, 3.3, 15.0] {
            let exact = (-x * x / 2.0f64).exp();
            assert!((p.eval(x).unwrap().re - exact).abs() < 1e-9);
            assert!((p.eval_derivative(x).unwrap().re + x * exact).abs() < 1e-6);
        }
        assert!(matches!(p.eval(15.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(p.eval(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let p = gaussian();
        let q = RadialProfile::parse_csv(&p.to_csv_string()).unwrap();
        assert_eq!(p.r, q.r);
        assert_eq!(p.phi, q.phi);
        assert_eq!(p.mu, q.mu);
        assert_eq!(q.params.pump_radius, 2.0);
        assert!(RadialProfile::parse_csv("r,re_phi,im_phi\n1,2\n").is_err());
    }
}
