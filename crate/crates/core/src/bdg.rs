//! Bogoliubov–de Gennes stability of radial stationary states.
//!
//! Perturbing `ψ = e^{−iμt} e^{imθ}[φ(r) + u(r) e^{i(nθ − ωt)} + v*(r) e^{−i(nθ − ω*t)}]`
//! and linearizing gives the block problem
//!
//! ```text
//! [ L1⁽ᵐ⁺ⁿ⁾      L2       ] [u]     [u]
//! [ −L2*      −L1*⁽ᵐ⁻ⁿ⁾  ] [v] = ω [v]
//! ```
//!
//! with `L1⁽ᵏ⁾ = −μ − ∂²_r − r⁻¹∂_r + k²/r² + V + 2(1 − iσ)|φ|² + iαΘ` and
//! `L2 = (1 − iσ)φ²`. For `m = 0` both diagonal blocks share the index `n`.
//! The state is unstable iff some `Im ω > 0`.

use faer::Mat;
use num_complex::Complex64;

use crate::collocation::{default_mesh, solve_stationary, thomas_fermi_guess, RadialProfile};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DEFAULT_GRID: usize = 600;

/// Growth rates below this are treated as neutral. Modes living outside the
/// condensate have `Im ω` that is zero up to rounding, about `ε‖M‖ ≈ 10⁻¹²`
/// on the default grid.
pub const NEUTRAL_TOLERANCE: f64 = 1e-8;

/// One `L1`-type block: tridiagonal with complex diagonal and real off-diagonals.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<f64>,
}

/// Discretized BdG operator on the staggered grid `r_j = (j + ½)h`, `h = b/(n + ½)`,
/// with `u = v = 0` at `r = b`.
#[derive(Debug, Clone)]
pub struct BdgOperator {
    pub r: Vec<f64>,
    pub h: f64,
    /// Azimuthal mode of the perturbation.
    pub mode: u32,
    /// Winding of the background state.
    pub background_winding: u32,
    /// `L1` acting on `u` (index `m + n`).
    pub l1_u: Tridiagonal,
    /// `L1` acting on `v` (index `m − n`), before conjugation.
    pub l1_v: Tridiagonal,
    /// Diagonal of `L2`.
    pub l2: Vec<Complex64>,
}

fn l1_block(r: &[f64], h: f64, index: i64, mu: f64, diag_extra: &[Complex64]) -> Tridiagonal {
    let n = r.len();
    let k2 = (index * index) as f64;
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    let ih2 = 1.0 / (h * h);
    for j in 0..n {
        let a = 1.0 / (2.0 * r[j] * h);
        // −(d² + r⁻¹ d): the j = 0 lower coefficient vanishes exactly on this grid.
        lower[j] = if j == 0 { 0.0 } else { -(ih2 - a) };
        upper[j] = if j + 1 == n { 0.0 } else { -(ih2 + a) };
        diag[j] = Complex64::new(-mu + 2.0 * ih2 + k2 / (r[j] * r[j]), 0.0) + diag_extra[j];
    }
    Tridiagonal { lower, diag, upper }
}

/// Build the operator for mode `n ≥ 1` on `n_grid` interior points.
pub fn assemble_bdg(profile: &RadialProfile, mode: u32, n_grid: usize) -> Result<BdgOperator> {
    if mode == 0 {
        return Err(Error::invalid("BdG modes start at 1"));
    }
    if n_grid < 2 {
        return Err(Error::invalid("BdG grid needs at least two points"));
    }
    let params = &profile.params;
    let b = profile.radius();
    let h = b / (n_grid as f64 + 0.5);
    let r: Vec<f64> = (0..n_grid).map(|j| (j as f64 + 0.5) * h).collect();
    let sigma = params.sigma;
    let mut extra = Vec::with_capacity(n_grid);
    let mut l2 = Vec::with_capacity(n_grid);
    let loss = Complex64::new(1.0, -sigma);
    for &rj in &r {
        let f = profile.eval(rj)?;
        let rho = f.norm_sqr();
        extra.push(
            Complex64::new(params.potential(rj), params.alpha * params.theta(rj))
                + loss * (2.0 * rho),
        );
        l2.push(loss * f * f);
    }
    let m = profile.winding as i64;
    let n = mode as i64;
    let l1_u = l1_block(&r, h, m + n, profile.mu, &extra);
    let l1_v = if m == 0 {
        l1_u.clone()
    } else {
        l1_block(&r, h, m - n, profile.mu, &extra)
    };
    Ok(BdgOperator {
        r,
        h,
        mode,
        background_winding: profile.winding,
        l1_u,
        l1_v,
        l2,
    })
}

impl BdgOperator {
    pub fn grid_len(&self) -> usize {
        self.r.len()
    }

    /// The full `2n × 2n` complex matrix.
    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.grid_len();
        let mut a = Mat::<Complex64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            a[(j, j)] = self.l1_u.diag[j];
            a[(n + j, n + j)] = -self.l1_v.diag[j].conj();
            if j > 0 {
                a[(j, j - 1)] = self.l1_u.lower[j].into();
                a[(n + j, n + j - 1)] = (-self.l1_v.lower[j]).into();
            }
            if j + 1 < n {
                a[(j, j + 1)] = self.l1_u.upper[j].into();
                a[(n + j, n + j + 1)] = (-self.l1_v.upper[j]).into();
            }
            a[(j, n + j)] = self.l2[j];
            a[(n + j, j)] = -self.l2[j].conj();
        }
        a
    }

    /// Apply `L1` (the `u` block) to a vector.
    pub fn apply_l1(&self, x: &[Complex64]) -> Vec<Complex64> {
        let t = &self.l1_u;
        let n = self.grid_len();
        (0..n)
            .map(|j| {
                let mut y = t.diag[j] * x[j];
                if j > 0 {
                    y += x[j - 1] * t.lower[j];
                }
                if j + 1 < n {
                    y += x[j + 1] * t.upper[j];
                }
                y
            })
            .collect()
    }

    /// Real matrix similar to `iA`, available when both diagonal blocks coincide.
    ///
    /// With `Q = [[I, iI], [I, −iI]]/√2` one gets
    /// `Q*(iA)Q = [[−Im(X+Y), Re(Y−X)], [Re(X+Y), Im(Y−X)]]` for `X = L1`, `Y = L2`.
    fn real_form(&self) -> Option<Mat<f64>> {
        if self.background_winding != 0 {
            return None;
        }
        let n = self.grid_len();
        let x = &self.l1_u;
        let mut m = Mat::<f64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            let (xd, yd) = (x.diag[j], self.l2[j]);
            m[(j, j)] = -(xd.im + yd.im);
            m[(j, n + j)] = yd.re - xd.re;
            m[(n + j, j)] = xd.re + yd.re;
            m[(n + j, n + j)] = yd.im - xd.im;
            // Off-diagonals of X are real: they only enter the Re X blocks.
            if j > 0 {
                m[(j, n + j - 1)] = -x.lower[j];
                m[(n + j, j - 1)] = x.lower[j];
            }
            if j + 1 < n {
                m[(j, n + j + 1)] = -x.upper[j];
                m[(n + j, j + 1)] = x.upper[j];
            }
        }
        Some(m)
    }
}

fn sort_by_im_desc(mut ev: Vec<Complex64>) -> Vec<Complex64> {
    ev.sort_by(|a, b| b.im.total_cmp(&a.im).then(b.re.total_cmp(&a.re)));
    ev
}

/// Eigenvalues of a dense complex matrix, sorted by descending imaginary part.
pub fn dense_eigenvalues(a: &Mat<Complex64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if (0..a.nrows())
        .any(|i| (0..a.ncols()).any(|j| !(a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite())))
    {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let ev = a
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(sort_by_im_desc(ev))
}

/// All `2n` eigenvalues `ω`, sorted by descending `Im ω`.
pub fn eigen_spectrum(op: &BdgOperator) -> Result<Vec<Complex64>> {
    match op.real_form() {
        Some(m) => {
            if m.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
                return Err(Error::Eigensolver("matrix has non-finite entries".into()));
            }
            let lambda: Vec<Complex64> = m
                .eigenvalues()
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            // iA w = λ w  ⇒  ω = −iλ.
            Ok(sort_by_im_desc(
                lambda
                    .into_iter()
                    .map(|l| Complex64::new(l.im, -l.re))
                    .collect(),
            ))
        }
        None => dense_eigenvalues(&op.to_dense()),
    }
}

/// Result for one azimuthal mode.
#[derive(Debug, Clone)]
pub struct ModeStability {
    pub mode: u32,
    pub max_im: f64,
    /// Eigenvalues with the largest imaginary parts, descending.
    pub leading: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub modes: Vec<ModeStability>,
    pub max_im: f64,
    pub stable: bool,
}

impl StabilityReport {
    fn from_modes(modes: Vec<ModeStability>) -> Self {
        let max_im = modes
            .iter()
            .map(|m| m.max_im)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            stable: max_im < NEUTRAL_TOLERANCE,
            max_im,
            modes,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.stable {
            "stable"
        } else {
            "unstable"
        }
    }

    /// The mode with the largest growth rate.
    pub fn dominant_mode(&self) -> Option<u32> {
        self.modes
            .iter()
            .max_by(|a, b| a.max_im.total_cmp(&b.max_im))
            .map(|m| m.mode)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("m,max_im_omega\n");
        for m in &self.modes {
            s.push_str(&format!("{},{:.12e}\n", m.mode, m.max_im));
        }
        s
    }
}

/// Scan settings shared by the stability operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub n_grid: usize,
    /// How many leading eigenvalues to keep per mode.
    pub keep: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            n_grid: DEFAULT_GRID,
            keep: 8,
        }
    }
}

fn scan_mode(profile: &RadialProfile, mode: u32, settings: ScanSettings) -> Result<ModeStability> {
    let op = assemble_bdg(profile, mode, settings.n_grid)?;
    let ev = eigen_spectrum(&op)?;
    Ok(ModeStability {
        mode,
        max_im: ev[0].im,
        leading: ev.into_iter().take(settings.keep.max(1)).collect(),
    })
}

/// Scan modes `1..=m_max` around a winding-0 profile.
pub fn stability_scan(
    profile: &RadialProfile,
    m_max: u32,
    settings: ScanSettings,
) -> Result<StabilityReport> {
    if m_max == 0 {
        return Err(Error::invalid("mode range is empty"));
    }
    stability_scan_modes(profile, &(1..=m_max).collect::<Vec<_>>(), settings)
}

/// Scan an explicit list of modes.
pub fn stability_scan_modes(
    profile: &RadialProfile,
    modes: &[u32],
    settings: ScanSettings,
) -> Result<StabilityReport> {
    if modes.is_empty() {
        return Err(Error::invalid("mode range is empty"));
    }
    let modes = modes
        .iter()
        .map(|&m| scan_mode(profile, m, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport::from_modes(modes))
}

/// Scan perturbation modes `1..=n_max` around a central vortex.
pub fn central_vortex_stability(
    profile: &RadialProfile,
    n_max: u32,
    settings: ScanSettings,
) -> Result<StabilityReport> {
    if profile.winding == 0 {
        return Err(Error::invalid("central vortex analysis needs winding >= 1"));
    }
    stability_scan(profile, n_max, settings)
}

/// Whether any mode in `1..=m_max` is unstable, stopping at the first one found.
/// Modes listed in `first` are tried before the rest.
pub fn is_unstable(
    profile: &RadialProfile,
    m_max: u32,
    first: &[u32],
    settings: ScanSettings,
) -> Result<Option<(u32, f64)>> {
    let mut order: Vec<u32> = first
        .iter()
        .copied()
        .filter(|m| (1..=m_max).contains(m))
        .collect();
    order.extend((1..=m_max).filter(|m| !first.contains(m)));
    for m in order {
        let s = scan_mode(profile, m, settings)?;
        if s.max_im >= NEUTRAL_TOLERANCE {
            return Ok(Some((m, s.max_im)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub pump_radius: f64,
    /// `None` when the stationary solve failed at this radius.
    pub max_im: Option<f64>,
}

/// Solve the ground state at pump radius `r` from the Thomas–Fermi guess.
pub fn ground_state(template: &ModelParams, r: f64) -> Result<RadialProfile> {
    let mut params = template.clone();
    params.pump_radius = r;
    params.validate()?;
    let guess = thomas_fermi_guess(&params, default_mesh(&params)?)?;
    solve_stationary(&params, &guess, 0)
}

/// `max Im ω` over modes `1..=m_max` for each pump radius.
pub fn stability_curve(
    template: &ModelParams,
    radii: &[f64],
    m_max: u32,
    settings: ScanSettings,
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let max_im = match ground_state(template, r) {
            Ok(profile) => Some(stability_scan(&profile, m_max, settings)?.max_im),
            Err(e) if e.is_usage() => return Err(e),
            Err(_) => None,
        };
        out.push(CurvePoint {
            pump_radius: r,
            max_im,
        });
    }
    Ok(out)
}

/// Bisect on the pump radius between a stable `stable_r` and an unstable
/// `unstable_r` until the bracket is narrower than `width`.
/// Returns the final bracket `(stable side, unstable side)`.
pub fn locate_threshold(
    template: &ModelParams,
    stable_r: f64,
    unstable_r: f64,
    width: f64,
    m_max: u32,
    settings: ScanSettings,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (stable_r, unstable_r);
    let mut hint: Vec<u32> = Vec::new();
    while (hi - lo).abs() > width {
        let mid = 0.5 * (lo + hi);
        let profile = ground_state(template, mid)?;
        match is_unstable(&profile, m_max, &hint, settings)? {
            Some((m, _)) => {
                hint.retain(|&x| x != m);
                hint.insert(0, m);
                hi = mid;
            }
            None => lo = mid,
        }
    }
    Ok((lo, hi))
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("R,max_im_omega\n");
    for p in points {
        match p.max_im {
            Some(v) => s.push_str(&format!("{},{:.12e}\n", p.pump_radius, v)),
            None => s.push_str(&format!("{},\n", p.pump_radius)),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_profile(alpha: f64, sigma: f64, winding: u32) -> RadialProfile {
        let params = ModelParams::new(alpha, sigma, 2.0).unwrap();
        let r: Vec<f64> = (0..=300).map(|i| 15.0 * i as f64 / 300.0).collect();
        let phi = vec![Complex64::new(0.0, 0.0); r.len()];
        RadialProfile::from_samples(&params, r, phi, 0.0, winding, 0.0).unwrap()
    }

    #[test]
    fn oscillator_ladder_for_empty_state() {
        let p = empty_profile(0.0, 0.3, 0);
        let op = assemble_bdg(&p, 1, 400).unwrap();
        assert!(op.l2.iter().all(|z| z.norm() == 0.0));
        let ev = eigen_spectrum(&op).unwrap();
        // The u block carries E = 2(2n_r + m + 1); the v block its negatives.
        let mut positive: Vec<f64> = ev.iter().map(|z| z.re).filter(|&x| x > 0.0).collect();
        positive.sort_by(f64::total_cmp);
        assert!((positive[0] - 4.0).abs() < 1e-2, "{}", positive[0]);
        assert!((positive[1] - 8.0).abs() < 3e-2, "{}", positive[1]);
        assert!(ev.iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn real_form_matches_complex_solver() {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let r: Vec<f64> = (0..=400).map(|i| 15.0 * i as f64 / 400.0).collect();
        let phi = r
            .iter()
            .map(|x| Complex64::new(3.0 * (-x * x / 8.0f64).exp(), 0.4 * (-x * x / 3.0f64).exp()))
            .collect();
        let p = RadialProfile::from_samples(&params, r, phi, 7.0, 0, 0.0).unwrap();
        let op = assemble_bdg(&p, 3, 120).unwrap();
        let fast = eigen_spectrum(&op).unwrap();
        let slow = dense_eigenvalues(&op.to_dense()).unwrap();
        assert_eq!(fast.len(), slow.len());
        for z in &fast {
            let best = slow
                .iter()
                .map(|w| (w - z).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7 * (1.0 + z.norm()), "{z} unmatched ({best})");
        }
    }

    #[test]
    fn spectrum_pairs_under_reflection() {
        let params = ModelParams::new(4.4, 0.3, 2.0).unwrap();
        let r: Vec<f64> = (0..=400).map(|i| 15.0 * i as f64 / 400.0).collect();
        let phi = r
            .iter()
            .map(|x| Complex64::new(4.0 * (-x * x / 10.0f64).exp(), 0.3))
            .collect();
        let p = RadialProfile::from_samples(&params, r, phi, 9.0, 0, 0.0).unwrap();
        let ev = eigen_spectrum(&assemble_bdg(&p, 2, 150).unwrap()).unwrap();
        for z in &ev {
            let mirror = Complex64::new(-z.re, z.im);
            let best = ev
                .iter()
                .map(|w| (w - mirror).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6 * (1.0 + z.norm()), "{z}");
        }
    }

    #[test]
    fn l1_matches_operator_on_smooth_function() {
        let p = empty_profile(0.0, 0.0, 0);
        let k = 2u32;
        let err = |n: usize| {
            let op = assemble_bdg(&p, k, n).unwrap();
            // g(r) = r² e^{−r²}: L1 g = −g'' − g'/r + k²g/r² + r² g.
            let g: Vec<Complex64> =
                op.r.iter()
                    .map(|r| Complex64::new(r * r * (-r * r).exp(), 0.0))
                    .collect();
            let lg = op.apply_l1(&g);
            op.r.iter()
                .zip(lg)
                .map(|(&r, y)| {
                    let e = (-r * r).exp();
                    let g = r * r * e;
                    let d1 = (2.0 * r - 2.0 * r.powi(3)) * e;
                    let d2 = (2.0 - 10.0 * r * r + 4.0 * r.powi(4)) * e;
                    let exact = -d2 - d1 / r + 4.0 * g / (r * r) + r * r * g;
                    (y.re - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(300), err(600));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn empty_vortex_background_is_neutral() {
        let p = empty_profile(0.0, 0.3, 1);
        let report = central_vortex_stability(
            &p,
            3,
            ScanSettings {
                n_grid: 100,
                keep: 4,
            },
        )
        .unwrap();
        for m in &report.modes {
            assert!(m.leading.iter().all(|z| z.im.abs() < 1e-10));
        }
    }

    #[test]
    fn small_matrices() {
        let mut a = Mat::<Complex64>::zeros(2, 2);
        a[(0, 1)] = 1.0.into();
        a[(1, 0)] = (-1.0).into();
        let ev = dense_eigenvalues(&a).unwrap();
        assert!((ev[0] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_mode_zero_and_empty_range() {
        let p = empty_profile(0.0, 0.3, 0);
        assert!(assemble_bdg(&p, 0, 100).is_err());
        assert!(stability_scan(&p, 0, ScanSettings::default()).is_err());
    }
}
