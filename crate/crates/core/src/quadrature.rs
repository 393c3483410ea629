//! Quadrature and finite-difference helpers on nonuniform grids.

/// Composite Simpson rule on an arbitrary increasing grid.
///
/// Pairs of intervals use the nonuniform three-point rule; with an odd number
/// of intervals the last one is integrated with the quadratic through the
/// final three points.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut total = 0.0;
    let mut i = 0;
    while i < paired {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * y[i]
                + hs * hs / (h0 * h1) * y[i + 1]
                + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        let h0 = x[n - 2] - x[n - 3];
        let h1 = x[n - 1] - x[n - 2];
        let a = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let b = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let c = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        total += a * y[n - 1] + b * y[n - 2] - c * y[n - 3];
    }
    total
}

/// Fornberg weights for the `order`-th derivative at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// First derivative by five-point (fourth-order) stencils, shifted at the ends.
pub fn derivative4(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let width = 5.min(n);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let w = fd_weights(x[i], &x[start..start + width], 1);
            w.iter()
                .zip(&y[start..start + width])
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}
