//! Strang-split Fourier integrator for the 2D equation on a periodic box.
//!
//! Each step is a half step of the local pump/decay/potential flow, solved in
//! closed form, a full step of free dispersion, exact in Fourier space, and
//! another local half step.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::collocation::RadialProfile;
use crate::error::{Error, Result};
use crate::model::{manufactured_potential, ModelParams};

/// Grid points with `Θ` below this use the pump-free formulas.
pub const THETA_CUTOFF: f64 = 1e-14;

/// Relative slack allowed on the per-step norm bound for floating-point rounding.
pub const NORM_BOUND_SLACK: f64 = 1e-13;

/// Complex field on the periodic grid `x_j = a_x + j h_x`, `y_k = a_y + k h_y`,
/// stored row-major with index `j·ny + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    /// `[a_x, b_x, a_y, b_y]`.
    pub bounds: [f64; 4],
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl Field2D {
    pub fn zeros(nx: usize, ny: usize, bounds: [f64; 4]) -> Result<Self> {
        if nx == 0 || ny == 0 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::invalid(format!(
                "grid sizes must be even and positive, got {nx}x{ny}"
            )));
        }
        if !bounds.iter().all(|v| v.is_finite())
            || !(bounds[1] > bounds[0])
            || !(bounds[3] > bounds[2])
        {
            return Err(Error::invalid("domain bounds must be finite with b > a"));
        }
        Ok(Self {
            nx,
            ny,
            bounds,
            values: vec![Complex64::new(0.0, 0.0); nx * ny],
            time: 0.0,
        })
    }

    /// Square box `[−half, half]²` with `n` points per axis.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Self::zeros(n, n, [-half, half, -half, half])
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        bounds: [f64; 4],
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut field = Self::zeros(nx, ny, bounds)?;
        for j in 0..nx {
            let x = field.x(j);
            for k in 0..ny {
                field.values[j * ny + k] = f(x, field.y(k));
            }
        }
        Ok(field)
    }

    /// The Gaussian `e^{−r²/2}`, ground state of the 2D harmonic oscillator.
    pub fn oscillator_ground_state(n: usize, half: f64) -> Result<Self> {
        Self::from_fn(n, n, [-half, half, -half, half], |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        })
    }

    /// `φ(r) e^{imθ}` sampled on the grid; zero beyond the profile's radius.
    pub fn from_profile(
        profile: &RadialProfile,
        nx: usize,
        ny: usize,
        bounds: [f64; 4],
    ) -> Result<Self> {
        let b = profile.radius();
        let m = profile.winding as i32;
        let mut field = Self::zeros(nx, ny, bounds)?;
        for j in 0..nx {
            let x = field.x(j);
            for k in 0..ny {
                let y = field.y(k);
                let r = x.hypot(y);
                if r >= b {
                    continue;
                }
                let mut v = profile.eval(r)?;
                if m != 0 {
                    v *= Complex64::from_polar(1.0, m as f64 * y.atan2(x));
                }
                field.values[j * ny + k] = v;
            }
        }
        Ok(field)
    }

    pub fn hx(&self) -> f64 {
        (self.bounds[1] - self.bounds[0]) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.bounds[3] - self.bounds[2]) / self.ny as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.bounds[0] + j as f64 * self.hx()
    }

    pub fn y(&self, k: usize) -> f64 {
        self.bounds[2] + k as f64 * self.hy()
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.ny + k]
    }

    /// `Σ |Ψ_jk|² h_x h_y`, the squared discrete l² norm (and the trapezoid mass).
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.hx() * self.hy()
    }

    pub fn max_density(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn same_grid(&self, other: &Field2D) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.bounds == other.bounds
    }

    /// Add independent uniform noise in `[−amplitude, amplitude]` to both parts.
    pub fn add_noise(&mut self, amplitude: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for z in self.values.iter_mut() {
            let re: f64 = rng.random_range(-1.0..=1.0);
            let im: f64 = rng.random_range(-1.0..=1.0);
            *z += Complex64::new(re, im) * amplitude;
        }
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"CGPE")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.nx as u32).to_le_bytes())?;
        w.write_all(&(self.ny as u32).to_le_bytes())?;
        for v in self.bounds {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.time.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for z in &self.values {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"CGPE" {
            return Err(Error::Format("not a CGPE snapshot".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!(
                "unsupported snapshot version {version}"
            )));
        }
        let nx = read_u32(&mut r)? as usize;
        let ny = read_u32(&mut r)? as usize;
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let mut bounds = [0.0; 4];
        for b in bounds.iter_mut() {
            *b = read_f64(&mut r)?;
        }
        let time = read_f64(&mut r)?;
        let mut field = Self::zeros(nx, ny, bounds).map_err(|e| Error::Format(e.to_string()))?;
        field.time = time;
        let mut data = vec![0u8; nx * ny * 16];
        r.read_exact(&mut data)?;
        for (z, chunk) in field.values.iter_mut().zip(data.chunks_exact(16)) {
            let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
            *z = Complex64::new(re, im);
        }
        Ok(field)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_snapshot(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_snapshot(std::io::BufReader::new(f)).map_err(|e| match e {
            Error::Format(message) => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}

/// 2D FFT on a row-major `nx × ny` array.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.nx, self.ny)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(ny),
            row_inv: planner.plan_fft_inverse(ny),
            col_fwd: planner.plan_fft_forward(nx),
            col_inv: planner.plan_fft_inverse(nx),
        }
    }

    fn run(&self, data: &mut [Complex64], forward: bool) {
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        row.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); self.nx];
        for k in 0..self.ny {
            for j in 0..self.nx {
                column[j] = data[j * self.ny + k];
            }
            col.process(&mut column);
            for j in 0..self.nx {
                data[j * self.ny + k] = column[j];
            }
        }
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }
}

/// Angular wavenumbers in FFT order for `n` points on a period `length`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|l| {
            let signed = if l < n / 2 {
                l as i64
            } else {
                l as i64 - n as i64
            };
            base * signed as f64
        })
        .collect()
}

/// Everything one step needs that does not change between steps.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    pub tau: f64,
    pub sigma: f64,
    /// Pump strength `α`; the local gain is `α Θ_j`.
    pub alpha: f64,
    pub theta: Vec<f64>,
    pub potential: Vec<f64>,
    /// `exp(−i(k_x² + k_y²)τ)` in FFT order.
    pub fourier_phase: Vec<Complex64>,
    pub k2: Vec<f64>,
    fft: Fft2,
}

impl StepPlan {
    /// Plan for the model: `V(|x|)` from the trap and `Θ_j = Θ(R − |x_j|)`.
    pub fn new(params: &ModelParams, grid: &Field2D, tau: f64) -> Result<Self> {
        params.validate()?;
        let mut theta = Vec::with_capacity(grid.nx * grid.ny);
        let mut potential = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.nx {
            for k in 0..grid.ny {
                let r = grid.x(j).hypot(grid.y(k));
                theta.push(params.theta(r));
                potential.push(params.potential(r));
            }
        }
        Self::from_tables(grid, tau, params.alpha, params.sigma, theta, potential)
    }

    /// Plan whose exact stationary state is `ψ = √(ω/σ) e^{−iCt}`: gain `ω(|x|)`
    /// and the potential from [`manufactured_potential`], both evaluated at the
    /// exact grid radii.
    pub fn manufactured(
        grid: &Field2D,
        tau: f64,
        sigma: f64,
        omega: impl Fn(f64) -> f64,
        c: f64,
    ) -> Result<Self> {
        let radii: Vec<f64> = (0..grid.nx)
            .flat_map(|j| (0..grid.ny).map(move |k| (j, k)))
            .map(|(j, k)| grid.x(j).hypot(grid.y(k)))
            .collect();
        let mut knots = radii.clone();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let table = manufactured_potential(&omega, sigma, c, &knots)?;
        let values = table.values();
        let potential = radii
            .iter()
            .map(|r| values[knots.partition_point(|k| k < r)])
            .collect();
        let gain = radii.iter().map(|&r| omega(r)).collect();
        Self::with_gain(grid, tau, sigma, gain, potential)
    }

    /// Plan with an arbitrary nonnegative gain `ω_j` and potential table.
    pub fn with_gain(
        grid: &Field2D,
        tau: f64,
        sigma: f64,
        gain: Vec<f64>,
        potential: Vec<f64>,
    ) -> Result<Self> {
        if gain.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gain must be finite and nonnegative"));
        }
        let alpha = gain.iter().cloned().fold(0.0, f64::max);
        let theta = if alpha > 0.0 {
            gain.iter().map(|g| g / alpha).collect()
        } else {
            vec![0.0; gain.len()]
        };
        Self::from_tables(grid, tau, alpha, sigma, theta, potential)
    }

    fn from_tables(
        grid: &Field2D,
        tau: f64,
        alpha: f64,
        sigma: f64,
        theta: Vec<f64>,
        potential: Vec<f64>,
    ) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!(
                "time step must be finite and >= 0, got {tau}"
            )));
        }
        if !(sigma >= 0.0) || !(alpha >= 0.0) {
            return Err(Error::invalid("alpha and sigma must be >= 0"));
        }
        let n = grid.nx * grid.ny;
        if theta.len() != n || potential.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: theta.len().min(potential.len()),
            });
        }
        let kx = wavenumbers(grid.nx, grid.bounds[1] - grid.bounds[0]);
        let ky = wavenumbers(grid.ny, grid.bounds[3] - grid.bounds[2]);
        let mut k2 = Vec::with_capacity(n);
        let mut fourier_phase = Vec::with_capacity(n);
        for &a in &kx {
            for &b in &ky {
                let q = a * a + b * b;
                k2.push(q);
                fourier_phase.push(Complex64::from_polar(1.0, -q * tau));
            }
        }
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            bounds: grid.bounds,
            tau,
            sigma,
            alpha,
            theta,
            potential,
            fourier_phase,
            k2,
            fft: Fft2::new(grid.nx, grid.ny),
        })
    }

    fn check(&self, field: &Field2D) -> Result<()> {
        if field.nx != self.nx || field.ny != self.ny || field.bounds != self.bounds {
            return Err(Error::invalid("field grid does not match the step plan"));
        }
        Ok(())
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Growth factor `e^{2ατ}` bounding `‖Ψⁿ⁺¹‖² / ‖Ψⁿ‖²`.
    pub fn norm_growth_bound(&self) -> f64 {
        (2.0 * self.alpha * self.tau).exp()
    }

    /// Estimate of `μ = ∫(|∇ψ|² + V|ψ|² + |ψ|⁴) / ∫|ψ|²`, gradient taken spectrally.
    pub fn mu_estimate(&self, field: &Field2D) -> Result<f64> {
        self.check(field)?;
        let mass: f64 = field.values.iter().map(|z| z.norm_sqr()).sum();
        if mass == 0.0 {
            return Err(Error::EmptyProfile(
                "cannot estimate mu of a zero field".into(),
            ));
        }
        let mut hat = field.values.clone();
        self.fft.forward(&mut hat);
        let n = (self.nx * self.ny) as f64;
        let kinetic: f64 = hat
            .iter()
            .zip(&self.k2)
            .map(|(z, q)| q * z.norm_sqr())
            .sum::<f64>()
            / n;
        let local: f64 = field
            .values
            .iter()
            .zip(&self.potential)
            .map(|(z, v)| {
                let rho = z.norm_sqr();
                v * rho + rho * rho
            })
            .sum();
        Ok((kinetic + local) / mass)
    }
}

/// Local flow over `τ/2`: `ρ_t = 2(g − σρ)ρ`, `θ_t = −V − ρ` for `ρ = |ψ|²`.
#[inline]
fn local_factor(psi: Complex64, gain: f64, sigma: f64, potential: f64, tau: f64) -> Complex64 {
    let rho = psi.norm_sqr();
    // E = (e^{gτ} − 1)/g, with its g → 0 limit τ.
    let (growth, e) = if gain > 0.0 {
        ((gain * tau).exp(), (gain * tau).exp_m1() / gain)
    } else {
        (1.0, tau)
    };
    let d = 1.0 + sigma * rho * e;
    let amplitude = (growth / d).sqrt();
    let phase = if sigma > 0.0 {
        -0.5 * potential * tau - d.ln() / (2.0 * sigma)
    } else {
        -0.5 * potential * tau - 0.5 * rho * e
    };
    Complex64::from_polar(amplitude, phase)
}

/// Half step of the local pump/decay/potential flow, in place.
pub fn nonlinear_half_step_in_place(field: &mut Field2D, plan: &StepPlan) -> Result<()> {
    plan.check(field)?;
    for (i, z) in field.values.iter_mut().enumerate() {
        let th = plan.theta[i];
        let gain = if th < THETA_CUTOFF {
            0.0
        } else {
            plan.alpha * th
        };
        *z *= local_factor(*z, gain, plan.sigma, plan.potential[i], plan.tau);
    }
    field.time += 0.5 * plan.tau;
    Ok(())
}

pub fn nonlinear_half_step(field: &Field2D, plan: &StepPlan) -> Result<Field2D> {
    let mut out = field.clone();
    nonlinear_half_step_in_place(&mut out, plan)?;
    Ok(out)
}

/// Free dispersion `iψ_t = −Δψ` over a full step, in place.
pub fn fourier_full_step_in_place(field: &mut Field2D, plan: &StepPlan) -> Result<()> {
    plan.check(field)?;
    plan.fft.forward(&mut field.values);
    let scale = 1.0 / (plan.nx * plan.ny) as f64;
    for (z, p) in field.values.iter_mut().zip(&plan.fourier_phase) {
        *z *= p * scale;
    }
    plan.fft.inverse(&mut field.values);
    Ok(())
}

pub fn fourier_full_step(field: &Field2D, plan: &StepPlan) -> Result<Field2D> {
    let mut out = field.clone();
    fourier_full_step_in_place(&mut out, plan)?;
    Ok(out)
}

/// One Strang step; the time stamp advances by `τ`.
pub fn strang_step_in_place(field: &mut Field2D, plan: &StepPlan) -> Result<()> {
    let t0 = field.time;
    nonlinear_half_step_in_place(field, plan)?;
    fourier_full_step_in_place(field, plan)?;
    nonlinear_half_step_in_place(field, plan)?;
    field.time = t0 + plan.tau;
    Ok(())
}

pub fn strang_step(field: &Field2D, plan: &StepPlan) -> Result<Field2D> {
    let mut out = field.clone();
    strang_step_in_place(&mut out, plan)?;
    Ok(out)
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub mass: f64,
    pub mu_estimate: f64,
    pub max_density: f64,
}

pub fn series_to_csv(rows: &[SeriesRow]) -> String {
    let mut s = String::from("t,mass,mu_estimate,max_density\n");
    for r in rows {
        s.push_str(&format!(
            "{:.10},{:.15e},{:.15e},{:.15e}\n",
            r.t, r.mass, r.mu_estimate, r.max_density
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub steps: usize,
    /// Snapshots are emitted every this many steps (and for the initial field).
    pub snapshot_every: usize,
    /// Time-series rows are recorded every this many steps.
    pub series_every: usize,
}

impl EvolveOptions {
    /// Options for reaching `t_final` with step `τ`.
    pub fn for_duration(tau: f64, t_final: f64, snapshot_every: usize) -> Result<Self> {
        if !(t_final > 0.0) || !(tau > 0.0) {
            return Err(Error::invalid("final time and step must be positive"));
        }
        let steps = (t_final / tau).round();
        if steps < 1.0 || ((steps * tau - t_final).abs() > 1e-9 * t_final) {
            return Err(Error::invalid(format!(
                "final time {t_final} is not a multiple of the step {tau}"
            )));
        }
        let steps = steps as usize;
        if snapshot_every == 0 || steps % snapshot_every != 0 {
            return Err(Error::invalid(format!(
                "snapshot cadence {snapshot_every} does not divide {steps} steps"
            )));
        }
        Ok(Self {
            steps,
            snapshot_every,
            series_every: snapshot_every,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvolveSummary {
    pub series: Vec<SeriesRow>,
    /// Largest `‖Ψⁿ⁺¹‖² / (e^{2ατ}‖Ψⁿ‖²)` seen over all steps.
    pub worst_growth_ratio: f64,
    /// Steps whose norm growth exceeded the bound beyond rounding slack.
    pub bound_violations: usize,
    pub final_field: Field2D,
}

/// Evolve, handing each snapshot (including the initial field) to `on_snapshot`.
pub fn evolve_with(
    initial: &Field2D,
    plan: &StepPlan,
    options: EvolveOptions,
    mut on_snapshot: impl FnMut(&Field2D) -> Result<()>,
) -> Result<EvolveSummary> {
    plan.check(initial)?;
    if options.snapshot_every == 0 || options.series_every == 0 {
        return Err(Error::invalid("cadences must be positive"));
    }
    if !initial.is_finite() {
        return Err(Error::invalid("initial field has non-finite values"));
    }
    let bound = plan.norm_growth_bound();
    let mut field = initial.clone();
    let mut series = Vec::new();
    let record = |f: &Field2D, series: &mut Vec<SeriesRow>| {
        series.push(SeriesRow {
            t: f.time,
            mass: f.norm_sqr(),
            mu_estimate: plan.mu_estimate(f).unwrap_or(f64::NAN),
            max_density: f.max_density(),
        });
    };
    record(&field, &mut series);
    on_snapshot(&field)?;
    let mut previous = field.clone();
    let mut norm = field.norm_sqr();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for step in 1..=options.steps {
        strang_step_in_place(&mut field, plan)?;
        let next = field.norm_sqr();
        if !next.is_finite() || !field.is_finite() {
            return Err(Error::NonFinite {
                step,
                time: field.time,
                last_good: Box::new(previous),
            });
        }
        if norm > 0.0 {
            let ratio = next / (bound * norm);
            worst = worst.max(ratio);
            if ratio > 1.0 + NORM_BOUND_SLACK {
                violations += 1;
            }
        }
        norm = next;
        if step % options.series_every == 0 {
            record(&field, &mut series);
        }
        if step % options.snapshot_every == 0 {
            on_snapshot(&field)?;
            previous.clone_from(&field);
        }
    }
    Ok(EvolveSummary {
        series,
        worst_growth_ratio: worst,
        bound_violations: violations,
        final_field: field,
    })
}

/// Evolve and keep every snapshot in memory.
pub fn evolve(
    initial: &Field2D,
    plan: &StepPlan,
    options: EvolveOptions,
) -> Result<(Vec<Field2D>, EvolveSummary)> {
    let mut snaps = Vec::new();
    let summary = evolve_with(initial, plan, options, |f| {
        snaps.push(f.clone());
        Ok(())
    })?;
    Ok((snaps, summary))
}
