//! Time evolution from the oscillator ground state relaxes onto the
//! collocation solution (R = 2, 256² grid on [−15, 15]², τ = 0.00125).
//!
//! cargo run --release --example steady_state -- [t_final] [R] [tau] [grid]

use std::time::Instant;

use cgpe::bdg::ground_state;
use cgpe::diagnostics::radial_extract;
use cgpe::splitstep::{evolve_with, EvolveOptions, Field2D, StepPlan};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|s| s.parse::<f64>().expect("number"));
    let t_final = args.next().unwrap_or(100.0);
    let r = args.next().unwrap_or(2.0);
    let tau = args.next().unwrap_or(0.00125);
    let n = args.next().map(|v| v as usize).unwrap_or(256);
    let params = ModelParams::new(4.4, 0.3, r)?;
    let profile = ground_state(&params, r)?;
    let initial = Field2D::oscillator_ground_state(n, 15.0)?;
    let plan = StepPlan::new(&params, &initial, tau)?;
    let options = EvolveOptions::for_duration(tau, t_final, (10.0 / tau).round() as usize)?;
    let start = Instant::now();
    let summary = evolve_with(&initial, &plan, options, |f| {
        let e = radial_extract(f);
        let mut worst: f64 = 0.0;
        for (radius, mean) in e.r.iter().zip(&e.mean_abs) {
            worst = worst.max((mean - profile.eval(*radius)?.norm()).abs());
        }
        println!(
            "t = {:6.1}: mass {:.8}, sup | |psi| - |phi| | = {worst:.3e}  [{:.1?}]",
            f.time,
            f.norm_sqr(),
            start.elapsed()
        );
        Ok(())
    })?;
    println!(
        "bound violations: {}, worst growth ratio {:.15}",
        summary.bound_violations, summary.worst_growth_ratio
    );
    Ok(())
}
