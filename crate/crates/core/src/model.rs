//! Model definition: trap, pump profile and the parameter set shared by every
//! solver in the crate.
//!
//! The dynamics are
//!
//! ```text
//! i ψ_t = -Δψ + V(x) ψ + |ψ|² ψ + i (ω(x) - σ|ψ|²) ψ,   ω(x) = α Θ(R - |x|)
//! ```
//!
//! with the smoothed step `Θ(x) = (1 + tanh κx) / 2`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Steepness of the smoothed pump edge used throughout the literature runs.
pub const DEFAULT_KAPPA: f64 = 10.0;
/// Radial truncation of the stationary problem.
pub const DEFAULT_TRUNCATION: f64 = 15.0;

/// `(1 + tanh(κx)) / 2`.
///
/// Evaluated in the equivalent logistic form `1 / (1 + e^{-2κx})`, which keeps
/// full relative precision in the lower tail where `1 + tanh` cancels.
pub fn smoothed_heaviside(x: f64, kappa: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * kappa * x).exp())
}

/// d/dx of [`smoothed_heaviside`].
pub fn smoothed_heaviside_derivative(x: f64, kappa: f64) -> f64 {
    let t = smoothed_heaviside(x, kappa);
    2.0 * kappa * t * (1.0 - t)
}

/// Pump strength `α Θ(R - r)` at radius `r`.
pub fn pump_profile(r: f64, params: &ModelParams) -> f64 {
    params.alpha * smoothed_heaviside(params.pump_radius - r, params.kappa)
}

/// Trapping potential selector.
#[derive(Debug, Clone, PartialEq)]
pub enum Trap {
    /// `V(r) = r²`.
    Harmonic,
    /// Radial table interpolated by a natural cubic spline.
    Tabulated(Arc<TabulatedPotential>),
}

impl Trap {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Trap::Harmonic => r * r,
            Trap::Tabulated(table) => table.eval(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Trap::Harmonic => 2.0 * r,
            Trap::Tabulated(table) => table.derivative(r),
        }
    }
}

/// Physical and truncation parameters of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub sigma: f64,
    pub pump_radius: f64,
    pub kappa: f64,
    pub trap: Trap,
    /// Outer radius `b` of the truncated radial domain.
    pub b: f64,
}

impl ModelParams {
    /// Harmonic trap, `κ = 10`, `b = 15`.
    pub fn new(alpha: f64, sigma: f64, pump_radius: f64) -> Result<Self> {
        let params = Self {
            alpha,
            sigma,
            pump_radius,
            kappa: DEFAULT_KAPPA,
            trap: Trap::Harmonic,
            b: DEFAULT_TRUNCATION,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, b: f64) -> Result<Self> {
        self.b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_trap(mut self, trap: Trap) -> Self {
        self.trap = trap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.sigma, self.pump_radius, self.kappa, self.b]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("parameters must be finite"));
        }
        // α = 0 is admitted as the degenerate unpumped case.
        if self.alpha < 0.0 {
            return Err(Error::invalid(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.pump_radius <= 0.0 {
            return Err(Error::invalid(format!(
                "R must be > 0, got {}",
                self.pump_radius
            )));
        }
        if self.kappa <= 0.0 {
            return Err(Error::invalid(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if self.b <= self.pump_radius {
            return Err(Error::invalid(format!(
                "truncation radius b = {} must exceed R = {}",
                self.b, self.pump_radius
            )));
        }
        Ok(())
    }

    /// `Θ(R - r)`.
    pub fn theta(&self, r: f64) -> f64 {
        smoothed_heaviside(self.pump_radius - r, self.kappa)
    }

    /// `∂Θ(R - r)/∂R`; the derivative in `r` is its negative.
    pub fn theta_slope(&self, r: f64) -> f64 {
        smoothed_heaviside_derivative(self.pump_radius - r, self.kappa)
    }

    pub fn pump(&self, r: f64) -> f64 {
        pump_profile(r, self)
    }

    pub fn potential(&self, r: f64) -> f64 {
        self.trap.value(r)
    }

    pub fn potential_derivative(&self, r: f64) -> f64 {
        self.trap.derivative(r)
    }
}

/// Natural cubic spline through `(r_i, V_i)`, held constant outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    r: Vec<f64>,
    v: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                found: v.len(),
            });
        }
        if r.len() < 2 {
            return Err(Error::invalid(
                "tabulated potential needs at least two rows",
            ));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "tabulated radii must be strictly increasing",
            ));
        }
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "tabulated potential contains non-finite values",
            ));
        }
        let m = natural_spline_moments(&r, &v);
        Ok(Self { r, v, m })
    }

    /// Reads a two-column `r,V` CSV. A non-numeric first line is taken as a header
    /// and lines starting with `#` are skipped.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(parse_err(idx + 1, "expected two columns".into())),
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if r.is_empty() && idx == 0 => continue,
                _ => return Err(parse_err(idx + 1, format!("cannot parse `{line}`"))),
            }
        }
        Self::new(r, v).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    fn locate(&self, r: f64) -> Option<usize> {
        let n = self.r.len();
        if r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let k = self.r.partition_point(|&x| x <= r);
        Some(k.clamp(1, n - 1) - 1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        let Some(k) = self.locate(r) else {
            return if r < self.r[0] {
                self.v[0]
            } else {
                self.v[n - 1]
            };
        };
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - r) / h;
        let b = (r - self.r[k]) / h;
        a * self.v[k]
            + b * self.v[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let Some(k) = self.locate(r) else {
            return 0.0;
        };
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - r) / h;
        let b = (r - self.r[k]) / h;
        (self.v[k + 1] - self.v[k]) / h
            + (-(3.0 * a * a - 1.0) * self.m[k] + (3.0 * b * b - 1.0) * self.m[k + 1]) * h / 6.0
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("r,V\n");
        for (r, v) in self.r.iter().zip(&self.v) {
            out.push_str(&format!("{r:.17e},{v:.17e}\n"));
        }
        fs::write(path, out)?;
        Ok(())
    }
}

fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for interior moments (Thomas algorithm).
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let lower = h0 / 6.0;
        let diag = (h0 + h1) / 3.0;
        let upper = h1 / 6.0;
        let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = diag - lower * c_prime[i - 1];
        c_prime[i] = upper / denom;
        d_prime[i] = (rhs - lower * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// Spacing of the auxiliary grid used for the finite-difference Laplacian.
const MANUFACTURED_FD_STEP: f64 = 2e-3;

/// Potential for which `ρ = ω/σ`, `J ≡ 0` is an exact stationary state:
///
/// `V(r) = C + Δ√ω / √ω - ω/σ`
///
/// evaluated at each of `radii`. The radial Laplacian `(√ω)'' + (√ω)'/r` uses
/// fourth-order centred differences (`2 (√ω)''` at the origin), with `ω` extended
/// evenly to negative arguments.
pub fn manufactured_potential<F>(
    omega: F,
    sigma: f64,
    c: f64,
    radii: &[f64],
) -> Result<TabulatedPotential>
where
    F: Fn(f64) -> f64,
{
    if !(sigma > 0.0) {
        return Err(Error::invalid("manufactured potential needs sigma > 0"));
    }
    let h = MANUFACTURED_FD_STEP;
    let root = |x: f64| -> Result<f64> {
        let w = omega(x.abs());
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!(
                "pump profile must be strictly positive, got ω({}) = {w}",
                x.abs()
            )));
        }
        Ok(w.sqrt())
    };
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        if r < 0.0 {
            return Err(Error::invalid("radii must be nonnegative"));
        }
        let s = [
            root(r - 2.0 * h)?,
            root(r - h)?,
            root(r)?,
            root(r + h)?,
            root(r + 2.0 * h)?,
        ];
        let d2 = (-s[4] + 16.0 * s[3] - 30.0 * s[2] + 16.0 * s[1] - s[0]) / (12.0 * h * h);
        let lap = if r == 0.0 {
            2.0 * d2
        } else {
            let d1 = (-s[4] + 8.0 * s[3] - 8.0 * s[1] + s[0]) / (12.0 * h);
            d2 + d1 / r
        };
        values.push(c + lap / s[2] - s[2] * s[2] / sigma);
    }
    TabulatedPotential::new(radii.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_values() {
        assert_eq!(smoothed_heaviside(0.0, 10.0), 0.5);
        assert_eq!(smoothed_heaviside(0.0, 0.3), 0.5);
        assert!((smoothed_heaviside(10.0, 10.0) - 1.0).abs() <= f64::EPSILON);
        let expected = (1.0 + 1.0f64.tanh()) / 2.0;
        assert!((smoothed_heaviside(0.1, 10.0) - expected).abs() < 1e-15);
        assert!((smoothed_heaviside(0.1, 10.0) - 0.8807971).abs() < 1e-7);
    }

    #[test]
    fn heaviside_monotone_and_limits() {
        let mut prev = 0.0;
        for i in -400..=400 {
            let t = smoothed_heaviside(i as f64 * 0.01, 10.0);
            assert!(t >= prev);
            prev = t;
        }
        assert_eq!(smoothed_heaviside(-1e3, 10.0), 0.0);
        assert_eq!(smoothed_heaviside(1e3, 10.0), 1.0);
    }

    #[test]
    fn pump_profile_values() {
        let p = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        assert!((pump_profile(2.0, &p) - 2.2).abs() < 1e-15);
        assert!((pump_profile(0.0, &p) - 4.4).abs() <= 4.4 * 1e-15);
        let zero = ModelParams::new(0.0, 0.3, 2.0).unwrap();
        for r in [0.0, 1.0, 2.0, 7.5] {
            assert_eq!(pump_profile(r, &zero), 0.0);
        }
    }

    #[test]
    fn pump_monotone_nonincreasing() {
        let p = ModelParams::new(4.4, 0.3, 5.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..1500 {
            let v = p.pump(i as f64 * 0.01);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn harmonic_trap_is_r_squared() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        for r in [0.0, 0.5, 3.0, 14.0] {
            assert_eq!(p.potential(r), r * r);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(-1.0, 0.3, 2.0).is_err());
        assert!(ModelParams::new(1.0, -0.3, 2.0).is_err());
        assert!(ModelParams::new(1.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.3, 16.0).is_err());
        assert!(ModelParams::new(1.0, 0.3, 2.0)
            .unwrap()
            .with_kappa(0.0)
            .is_err());
        assert!(ModelParams::new(f64::NAN, 0.3, 2.0).is_err());
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let r: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let v: Vec<f64> = r.iter().map(|x| x * x).collect();
        let t = TabulatedPotential::new(r, v).unwrap();
        for x in [1.03, 4.5, 7.77] {
            assert!((t.eval(x) - x * x).abs() < 1e-6);
            assert!((t.derivative(x) - 2.0 * x).abs() < 1e-4);
        }
    }

    #[test]
    fn manufactured_gaussian() {
        let sigma = 0.3;
        let radii: Vec<f64> = (0..=300).map(|i| i as f64 * 0.02).collect();
        let table = manufactured_potential(|r| sigma * (-r * r).exp(), sigma, 0.0, &radii).unwrap();
        for (&r, &v) in table.radii().iter().zip(table.values()) {
            let exact = r * r - 2.0 - (-r * r).exp();
            assert!((v - exact).abs() < 1e-7, "r={r} v={v} exact={exact}");
        }
    }

    #[test]
    fn manufactured_constant_disk() {
        let radii: Vec<f64> = (0..50).map(|i| i as f64 * 0.05).collect();
        let table = manufactured_potential(|_| 0.7, 0.7, 0.0, &radii).unwrap();
        for &v in table.values() {
            assert!((v + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn manufactured_rejects_zero() {
        let radii = [0.0, 0.5, 1.0, 1.5];
        let res = manufactured_potential(|r| (1.0 - r).max(0.0), 1.0, 0.0, &radii);
        assert!(res.is_err());
        assert!(manufactured_potential(|_| 1.0, 0.0, 0.0, &radii).is_err());
    }

    #[test]
    fn deterministic() {
        let p = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let a: Vec<u64> = (0..100).map(|i| p.pump(i as f64 * 0.1).to_bits()).collect();
        let b: Vec<u64> = (0..100).map(|i| p.pump(i as f64 * 0.1).to_bits()).collect();
        assert_eq!(a, b);
    }
}
