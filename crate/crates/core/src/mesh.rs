use crate::error::{Error, Result};

/// Interval endpoints `0 = r_0 < r_1 < … < r_N = b` of the radial domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    nodes: Vec<f64>,
}

impl RadialMesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("mesh needs at least one interval"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::invalid("first mesh node must be exactly 0"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("mesh nodes must be strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(b: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 || !(b > 0.0) {
            return Err(Error::invalid(
                "uniform mesh needs b > 0 and at least one interval",
            ));
        }
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| b * i as f64 / intervals as f64)
            .collect();
        nodes[intervals] = b;
        Ok(Self { nodes })
    }

    /// Mesh equidistributing the density `1 + (factor - 1) exp(-((r - center)/width)²)`,
    /// i.e. locally up to `factor` times finer around `center`.
    pub fn refined(b: f64, intervals: usize, center: f64, width: f64, factor: f64) -> Result<Self> {
        if intervals == 0 || !(b > 0.0) || !(width > 0.0) || !(factor >= 1.0) {
            return Err(Error::invalid(
                "refined mesh needs b > 0, width > 0, factor >= 1",
            ));
        }
        // Cumulative density on a fine auxiliary grid, then inverted.
        let fine = 64 * intervals;
        let density = |r: f64| 1.0 + (factor - 1.0) * (-((r - center) / width).powi(2)).exp();
        let mut cumulative = Vec::with_capacity(fine + 1);
        cumulative.push(0.0);
        let dr = b / fine as f64;
        for i in 0..fine {
            let r0 = i as f64 * dr;
            let r1 = r0 + dr;
            let last = cumulative[i];
            cumulative.push(last + 0.5 * dr * (density(r0) + density(r1)));
        }
        let total = cumulative[fine];
        let mut nodes = Vec::with_capacity(intervals + 1);
        nodes.push(0.0);
        let mut j = 0;
        for k in 1..intervals {
            let target = total * k as f64 / intervals as f64;
            while cumulative[j + 1] < target {
                j += 1;
            }
            let frac = (target - cumulative[j]) / (cumulative[j + 1] - cumulative[j]);
            nodes.push((j as f64 + frac) * dr);
        }
        nodes.push(b);
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// All collocation abscissae `r_{n-1} + c_i h_n`, shared endpoints listed once.
    pub fn collocation_points(&self, scheme: &LobattoScheme) -> Vec<f64> {
        let s = scheme.stages();
        let mut pts = Vec::with_capacity(self.intervals() * (s - 1) + 1);
        pts.push(self.nodes[0]);
        for w in self.nodes.windows(2) {
            let h = w[1] - w[0];
            for &c in &scheme.abscissae()[1..s - 1] {
                pts.push(w[0] + c * h);
            }
            pts.push(w[1]);
        }
        pts
    }
}

/// Lobatto collocation family on `[0, 1]`: abscissae `0 = c_1 < … < c_s = 1`
/// and the integration weights `a_ij = ∫_0^{c_i} L_j(t) dt` of the Lagrange basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LobattoScheme {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
}

impl LobattoScheme {
    pub fn new(stages: usize) -> Result<Self> {
        if stages < 2 {
            return Err(Error::invalid("Lobatto family needs at least two points"));
        }
        let c = lobatto_points(stages);
        let mut a = vec![vec![0.0; stages]; stages];
        for j in 0..stages {
            let coeffs = lagrange_coefficients(&c, j);
            for i in 0..stages {
                a[i][j] = integrate_poly(&coeffs, c[i]);
            }
        }
        Ok(Self { c, a })
    }

    /// The four-point member (piecewise quartic interpolant).
    pub fn four_point() -> Self {
        Self::new(4).expect("four-point Lobatto scheme")
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.c
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }
}

/// Gauss–Lobatto points mapped to `[0, 1]`.
fn lobatto_points(k: usize) -> Vec<f64> {
    let n = k - 1;
    if n == 1 {
        return vec![0.0, 1.0];
    }
    let mut x: Vec<f64> = (0..=n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let mut p = vec![0.0; n + 1];
    for xi in x.iter_mut() {
        for _ in 0..100 {
            p[0] = 1.0;
            p[1] = *xi;
            for l in 2..=n {
                p[l] = ((2 * l - 1) as f64 * *xi * p[l - 1] - (l - 1) as f64 * p[l - 2]) / l as f64;
            }
            let step = (*xi * p[n] - p[n - 1]) / ((n + 1) as f64 * p[n]);
            *xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    let mut c: Vec<f64> = x.iter().map(|xi| 0.5 * (1.0 - xi)).collect();
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    c[0] = 0.0;
    c[n] = 1.0;
    c
}

/// Monomial coefficients of the `j`-th Lagrange polynomial on `nodes`.
fn lagrange_coefficients(nodes: &[f64], j: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    let mut denom = 1.0;
    for (k, &ck) in nodes.iter().enumerate() {
        if k == j {
            continue;
        }
        let mut next = vec![0.0; coeffs.len() + 1];
        for (p, &v) in coeffs.iter().enumerate() {
            next[p + 1] += v;
            next[p] -= ck * v;
        }
        coeffs = next;
        denom *= nodes[j] - ck;
    }
    coeffs.iter().map(|v| v / denom).collect()
}

fn integrate_poly(coeffs: &[f64], upper: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(p, &v)| v * upper.powi(p as i32 + 1) / (p + 1) as f64)
        .sum()
}
