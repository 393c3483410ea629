//! Observables of radial profiles and 2D fields.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::collocation::RadialProfile;
use crate::error::{Error, Result};
use crate::quadrature::{derivative4, simpson};
use crate::splitstep::{wavenumbers, Fft2, Field2D};

/// `∫|ψ|² dx` by the trapezoid rule on the periodic grid.
pub fn mass(field: &Field2D) -> f64 {
    field.norm_sqr()
}

/// `2π ∫₀^b |φ|² r dr` by Simpson's rule on the profile samples.
pub fn radial_mass(profile: &RadialProfile) -> f64 {
    let y: Vec<f64> = profile
        .r
        .iter()
        .zip(&profile.phi)
        .map(|(r, z)| z.norm_sqr() * r)
        .collect();
    2.0 * PI * simpson(&profile.r, &y)
}

/// `∫₀^b (αΘ(R − r) − σ|φ|²)|φ|² r dr`, which vanishes for a stationary state.
pub fn mass_balance(profile: &RadialProfile) -> f64 {
    let p = &profile.params;
    let y: Vec<f64> = profile
        .r
        .iter()
        .zip(&profile.phi)
        .map(|(&r, z)| {
            let rho = z.norm_sqr();
            (p.pump(r) - p.sigma * rho) * rho * r
        })
        .collect();
    simpson(&profile.r, &y)
}

/// `μ = ∫(|φ'|² + m²|φ|²/r² + V|φ|² + |φ|⁴) r dr / ∫|φ|² r dr` by Simpson's rule,
/// with `φ'` from fourth-order differences on the samples.
pub fn chemical_potential_integral(profile: &RadialProfile) -> Result<f64> {
    let r = &profile.r;
    let re: Vec<f64> = profile.phi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = profile.phi.iter().map(|z| z.im).collect();
    let dre = derivative4(r, &re);
    let dim = derivative4(r, &im);
    let m2 = (profile.winding as f64).powi(2);
    let p = &profile.params;
    let mut num = Vec::with_capacity(r.len());
    let mut den = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let rho = profile.phi[i].norm_sqr();
        let grad = dre[i] * dre[i] + dim[i] * dim[i];
        let centrifugal = if r[i] > 0.0 { m2 * rho / r[i] } else { 0.0 };
        num.push((grad + p.potential(r[i]) * rho + rho * rho) * r[i] + centrifugal);
        den.push(rho * r[i]);
    }
    let d = simpson(r, &den);
    if !(d > 1e-300) {
        return Err(Error::EmptyProfile("profile has no mass".into()));
    }
    Ok(simpson(r, &num) / d)
}

/// `J = Im(ψ* ∇ψ)` on the grid.
#[derive(Debug, Clone)]
pub struct CurrentField {
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
}

/// Spectral `(∂_x ψ, ∂_y ψ)`; the Nyquist modes are dropped.
pub fn spectral_gradient(field: &Field2D, fft: &Fft2) -> (Vec<Complex64>, Vec<Complex64>) {
    let (nx, ny) = (field.nx, field.ny);
    let mut kx = wavenumbers(nx, field.bounds[1] - field.bounds[0]);
    let mut ky = wavenumbers(ny, field.bounds[3] - field.bounds[2]);
    kx[nx / 2] = 0.0;
    ky[ny / 2] = 0.0;
    let mut hat = field.values.clone();
    fft.forward(&mut hat);
    let scale = 1.0 / (nx * ny) as f64;
    let mut dx = hat.clone();
    let mut dy = hat;
    for j in 0..nx {
        for k in 0..ny {
            let i = j * ny + k;
            dx[i] *= Complex64::new(0.0, kx[j] * scale);
            dy[i] *= Complex64::new(0.0, ky[k] * scale);
        }
    }
    fft.inverse(&mut dx);
    fft.inverse(&mut dy);
    (dx, dy)
}

pub fn current(field: &Field2D) -> CurrentField {
    let fft = Fft2::new(field.nx, field.ny);
    current_with(field, &fft)
}

pub fn current_with(field: &Field2D, fft: &Fft2) -> CurrentField {
    let (dx, dy) = spectral_gradient(field, fft);
    let jx = field
        .values
        .iter()
        .zip(&dx)
        .map(|(p, d)| (p.conj() * d).im)
        .collect();
    let jy = field
        .values
        .iter()
        .zip(&dy)
        .map(|(p, d)| (p.conj() * d).im)
        .collect();
    CurrentField { jx, jy }
}

/// `|∇θ| = |J|/ρ` where `ρ ≥ floor`, `NaN` elsewhere.
pub fn phase_gradient_magnitude(field: &Field2D, floor: f64) -> Vec<f64> {
    let j = current(field);
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let rho = z.norm_sqr();
            if rho < floor || rho == 0.0 {
                f64::NAN
            } else {
                j.jx[i].hypot(j.jy[i]) / rho
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub winding: i32,
    /// Sum of principal-value phase increments around the detection loop.
    pub phase_sum: f64,
}

#[derive(Debug, Clone)]
pub struct VortexCensus {
    pub vortices: Vec<Vortex>,
    pub density_floor: f64,
    pub nx: usize,
    pub ny: usize,
}

impl VortexCensus {
    pub fn total_winding(&self) -> i32 {
        self.vortices.iter().map(|v| v.winding).sum()
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("x,y,winding\n");
        for v in &self.vortices {
            let _ = writeln!(s, "{:.10},{:.10},{}", v.x, v.y, v.winding);
        }
        s
    }
}

/// Default floor: `10⁻³` of the peak density.
pub fn default_density_floor(field: &Field2D) -> f64 {
    1e-3 * field.max_density()
}

/// Cells between a plaquette and the ring used to decide whether a
/// low-density detection sits in a localized hole.
const RING: usize = 3;

/// Plaquette phase-winding detection.
pub fn vortex_census(field: &Field2D, density_floor: f64) -> Result<VortexCensus> {
    if !(density_floor > 0.0) {
        return Err(Error::invalid("density floor must be positive"));
    }
    let (nx, ny) = (field.nx, field.ny);
    let (hx, hy) = (field.hx(), field.hy());
    let rho: Vec<f64> = field.values.iter().map(|z| z.norm_sqr()).collect();
    let mut vortices = Vec::new();
    for j in 0..nx - 1 {
        for k in 0..ny - 1 {
            let corners = [
                field.at(j, k),
                field.at(j + 1, k),
                field.at(j + 1, k + 1),
                field.at(j, k + 1),
            ];
            // Exact nodal zeros are handled on the surrounding 8-cell loop below.
            if corners.iter().any(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let sum = loop_phase(&corners);
            let winding = (sum / (2.0 * PI)).round() as i32;
            if winding == 0 {
                continue;
            }
            let cell = [(j, k), (j + 1, k), (j + 1, k + 1), (j, k + 1)];
            let low = cell.iter().any(|&(a, b)| rho[a * ny + b] < density_floor);
            if low && !surrounded(&rho, nx, ny, j, k, density_floor) {
                continue;
            }
            vortices.push(Vortex {
                x: field.x(j) + 0.5 * hx,
                y: field.y(k) + 0.5 * hy,
                winding,
                phase_sum: sum,
            });
        }
    }
    for j in 1..nx - 1 {
        for k in 1..ny - 1 {
            if rho[j * ny + k] != 0.0 {
                continue;
            }
            let ring = [
                (j - 1, k - 1),
                (j, k - 1),
                (j + 1, k - 1),
                (j + 1, k),
                (j + 1, k + 1),
                (j, k + 1),
                (j - 1, k + 1),
                (j - 1, k),
            ];
            let loop_values: Vec<Complex64> = ring.iter().map(|&(a, b)| field.at(a, b)).collect();
            if loop_values.iter().any(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let sum = loop_phase(&loop_values);
            let winding = (sum / (2.0 * PI)).round() as i32;
            let low = ring.iter().any(|&(a, b)| rho[a * ny + b] < density_floor);
            if winding == 0 || (low && !surrounded(&rho, nx, ny, j - 1, k - 1, density_floor)) {
                continue;
            }
            vortices.push(Vortex {
                x: field.x(j),
                y: field.y(k),
                winding,
                phase_sum: sum,
            });
        }
    }
    Ok(VortexCensus {
        vortices,
        density_floor,
        nx,
        ny,
    })
}

/// Sum of principal-value phase increments around a closed loop.
fn loop_phase(values: &[Complex64]) -> f64 {
    let n = values.len();
    (0..n)
        .map(|c| (values[(c + 1) % n] * values[c].conj()).arg())
        .sum()
}

/// Every cell on the square ring `RING` cells around plaquette `(j, k)` reaches
/// the floor, so a low-density detection is a hole in the condensate.
fn surrounded(rho: &[f64], nx: usize, ny: usize, j: usize, k: usize, floor: f64) -> bool {
    let (j0, j1) = (j as i64 - RING as i64, (j + 1 + RING) as i64);
    let (k0, k1) = (k as i64 - RING as i64, (k + 1 + RING) as i64);
    if j0 < 0 || k0 < 0 || j1 >= nx as i64 || k1 >= ny as i64 {
        return false;
    }
    for a in j0..=j1 {
        for b in k0..=k1 {
            if (a == j0 || a == j1 || b == k0 || b == k1)
                && rho[a as usize * ny + b as usize] < floor
            {
                return false;
            }
        }
    }
    true
}

/// Azimuthal averages of `|ψ|` about the origin.
#[derive(Debug, Clone)]
pub struct RadialExtract {
    pub r: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub variance: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialExtract {
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("r,mean_abs_psi,az_variance\n");
        for i in 0..self.r.len() {
            let _ = writeln!(
                s,
                "{:.12},{:.15e},{:.6e}",
                self.r[i], self.mean_abs[i], self.variance[i]
            );
        }
        s
    }
}

/// Group grid points by distance from the origin, within the inscribed disk.
///
/// On a square grid containing the origin, points are grouped by their exact
/// integer squared index distance, so each group shares one radius. Otherwise
/// radii are binned with width `max(h_x, h_y)`.
pub fn radial_extract(field: &Field2D) -> RadialExtract {
    let (hx, hy) = (field.hx(), field.hy());
    let j0 = -field.bounds[0] / hx;
    let k0 = -field.bounds[2] / hy;
    let exact = (hx - hy).abs() <= 1e-12 * hx
        && (j0 - j0.round()).abs() < 1e-9
        && (k0 - k0.round()).abs() < 1e-9;
    let rmax = field.bounds[1]
        .min(-field.bounds[0])
        .min(field.bounds[3])
        .min(-field.bounds[2]);
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    let h = hx.max(hy);
    for j in 0..field.nx {
        for k in 0..field.ny {
            let (x, y) = (field.x(j), field.y(k));
            let r = x.hypot(y);
            if r > rmax {
                continue;
            }
            let (key, radius) = if exact {
                let dj = j as i64 - j0.round() as i64;
                let dk = k as i64 - k0.round() as i64;
                let d2 = (dj * dj + dk * dk) as u64;
                (d2, hx * (d2 as f64).sqrt())
            } else {
                let bin = (r / h).round() as u64;
                (bin, bin as f64 * h)
            };
            groups
                .entry(key)
                .or_insert_with(|| (radius, Vec::new()))
                .1
                .push(field.at(j, k).norm());
        }
    }
    let mut out = RadialExtract {
        r: Vec::new(),
        mean_abs: Vec::new(),
        variance: Vec::new(),
        counts: Vec::new(),
    };
    for (_, (radius, vals)) in groups {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        out.r.push(radius);
        out.mean_abs.push(mean);
        out.variance.push(var);
        out.counts.push(vals.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn gaussian_profile(n: usize) -> RadialProfile {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let r: Vec<f64> = (0..=n).map(|i| 15.0 * i as f64 / n as f64).collect();
        let phi = r
            .iter()
            .map(|x| Complex64::new((-x * x / 2.0f64).exp(), 0.0))
            .collect();
        RadialProfile::from_samples(&params, r, phi, 0.0, 0, 0.0).unwrap()
    }

    #[test]
    fn gaussian_masses() {
        let f = Field2D::oscillator_ground_state(256, 15.0).unwrap();
        assert!((mass(&f) - PI).abs() < 1e-8);
        assert!((radial_mass(&gaussian_profile(3000)) - PI).abs() < 1e-8);
        assert_eq!(mass(&Field2D::square(8, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn gaussian_chemical_potential() {
        // ∫(r² + r² + e^{−r²}) e^{−r²} r dr / ∫ e^{−r²} r dr = (1/2 + 1/2 + 1/4)/(1/2).
        let mu = chemical_potential_integral(&gaussian_profile(3000)).unwrap();
        assert!((mu - 2.5).abs() < 1e-8, "{mu}");
    }

    #[test]
    fn empty_profile_has_no_mu() {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let r: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let p = RadialProfile::from_samples(
            &params,
            r,
            vec![Complex64::new(0.0, 0.0); 21],
            0.0,
            0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            chemical_potential_integral(&p),
            Err(Error::EmptyProfile(_))
        ));
    }

    fn vortex(n: usize, sign: f64) -> Field2D {
        Field2D::from_fn(n, n, [-8.0, 8.0, -8.0, 8.0], |x, y| {
            Complex64::new(x, sign * y) * (-(x * x + y * y) / 2.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn real_field_carries_no_current() {
        let f = Field2D::oscillator_ground_state(64, 8.0).unwrap();
        let j = current(&f);
        assert!(j.jx.iter().chain(&j.jy).all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn vortex_current_is_azimuthal() {
        let f = vortex(128, 1.0);
        let j = current(&f);
        for jj in 0..f.nx {
            for k in 0..f.ny {
                let (x, y) = (f.x(jj), f.y(k));
                let r = x.hypot(y);
                if !(0.5..=3.0).contains(&r) {
                    continue;
                }
                let i = jj * f.ny + k;
                let radial = (j.jx[i] * x + j.jy[i] * y) / r;
                let azimuthal = (-j.jx[i] * y + j.jy[i] * x) / r;
                let rho = f.values[i].norm_sqr();
                assert!(radial.abs() < 1e-8);
                assert!((azimuthal - rho / r).abs() < 1e-8);
            }
        }
        let conj = vortex(128, -1.0);
        let jc = current(&conj);
        for i in 0..j.jx.len() {
            assert!((jc.jx[i] + j.jx[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_gradient_near_vortex_core() {
        let f = vortex(256, 1.0);
        let g = phase_gradient_magnitude(&f, 1e-12);
        for jj in 0..f.nx {
            for k in 0..f.ny {
                let r = f.x(jj).hypot(f.y(k));
                if (0.5..=2.0).contains(&r) {
                    let v = g[jj * f.ny + k];
                    assert!((v * r - 1.0).abs() < 0.05, "r={r} v={v}");
                }
            }
        }
        let k = 2.0;
        let plane = Field2D::from_fn(64, 64, [-PI, PI, -PI, PI], |x, _| {
            Complex64::from_polar(1.0, k * x)
        })
        .unwrap();
        assert!(phase_gradient_magnitude(&plane, 0.1)
            .iter()
            .all(|v| (v - k).abs() < 1e-10));
    }

    #[test]
    fn canonical_vortex_census() {
        let f = vortex(64, 1.0);
        let c = vortex_census(&f, default_density_floor(&f)).unwrap();
        assert_eq!(c.len(), 1);
        let v = c.vortices[0];
        assert_eq!(v.winding, 1);
        assert!(v.x.abs() <= f.hx() && v.y.abs() <= f.hy());
        // Off-node core.
        let shifted = Field2D::from_fn(64, 64, [-8.0, 8.0, -8.0, 8.0], |x, y| {
            Complex64::new(x - 0.1, y - 0.07) * (-(x * x + y * y) / 2.0).exp()
        })
        .unwrap();
        let c = vortex_census(&shifted, default_density_floor(&shifted)).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.vortices[0].x - 0.1).abs() < f.hx() && (c.vortices[0].y - 0.07).abs() < f.hy());
        assert!((c.vortices[0].phase_sum - 2.0 * PI).abs() < 1e-9);
        let c = vortex_census(&vortex(64, -1.0), 1e-3).unwrap();
        assert_eq!(
            c.vortices.iter().map(|v| v.winding).collect::<Vec<_>>(),
            vec![-1]
        );
        assert!(vortex_census(&f, 0.0).is_err());
    }

    #[test]
    fn symmetric_field_has_no_azimuthal_variance() {
        let f = Field2D::oscillator_ground_state(128, 10.0).unwrap();
        let e = radial_extract(&f);
        for i in 0..e.r.len() {
            assert!(e.variance[i] <= 1e-20 * e.mean_abs[i].powi(2).max(1e-300));
            assert!((e.mean_abs[i] - (-e.r[i] * e.r[i] / 2.0).exp()).abs() < 1e-14);
        }
        let ones = Field2D::from_fn(32, 32, [-1.0, 1.0, -1.0, 1.0], |_, _| {
            Complex64::new(1.0, 0.0)
        })
        .unwrap();
        assert!(radial_extract(&ones)
            .mean_abs
            .iter()
            .all(|m| (m - 1.0).abs() < 1e-15));
    }
}
