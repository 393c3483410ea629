//! An exact stationary state of a manufactured problem: with gain `ω(r)` and
//! the matching potential, `ψ = √(ω/σ)` should only rotate in phase. The
//! density drift measures the combined splitting and spatial error.
//!
//! cargo run --release --example manufactured_state -- [tau]

use cgpe::splitstep::{strang_step_in_place, Field2D, StepPlan};
use cgpe::Complex64;

fn main() -> cgpe::Result<()> {
    let tau: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("tau"))
        .unwrap_or(0.00125);
    let sigma = 0.3;
    let omega = |r: f64| 2.0 + 2.4 * (-r * r / 4.0).exp();
    let mut field = Field2D::from_fn(256, 256, [-15.0, 15.0, -15.0, 15.0], |x, y| {
        Complex64::new((omega(x.hypot(y)) / sigma).sqrt(), 0.0)
    })?;
    let target: Vec<f64> = field.values.iter().map(|z| z.norm_sqr()).collect();
    let plan = StepPlan::manufactured(&field, tau, sigma, omega, 0.0)?;
    let drift = |f: &Field2D| {
        f.values
            .iter()
            .zip(&target)
            .map(|(z, t)| (z.norm_sqr() - t).abs())
            .fold(0.0, f64::max)
    };
    let steps = (1.0 / tau).round() as usize;
    let mut worst: f64 = 0.0;
    let mut baseline = 0.0;
    for step in 1..=steps {
        strang_step_in_place(&mut field, &plan)?;
        let d = drift(&field);
        if step == 1 {
            baseline = d;
        }
        worst = worst.max(d);
        if step % (steps / 10).max(1) == 0 {
            println!("t = {:.3}: drift {d:.3e}", field.time);
        }
    }
    println!(
        "single-step baseline {baseline:.3e}, worst drift over [0, 1] {worst:.3e}, ratio {:.2}",
        worst / baseline
    );
    Ok(())
}
