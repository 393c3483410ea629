//! The doubly quantized central vortex at R = 5: its BdG spectrum, then a
//! time evolution in which it splits into two singly quantized vortices.
//!
//! cargo run --release --example central_vortex -- [t_final] [winding]

use cgpe::bdg::{central_vortex_stability, ScanSettings};
use cgpe::collocation::{default_mesh, solve_stationary, thomas_fermi_guess};
use cgpe::diagnostics::{default_density_floor, vortex_census};
use cgpe::splitstep::{evolve_with, EvolveOptions, Field2D, StepPlan};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let mut args = std::env::args().skip(1);
    let t_final: f64 = args
        .next()
        .map(|s| s.parse().expect("t_final"))
        .unwrap_or(40.0);
    let winding: u32 = args
        .next()
        .map(|s| s.parse().expect("winding"))
        .unwrap_or(2);
    let params = ModelParams::new(4.4, 0.3, 5.0)?;
    let guess = thomas_fermi_guess(&params, default_mesh(&params)?)?;
    let profile = solve_stationary(&params, &guess, winding)?;
    println!(
        "m = {winding}: mu = {:.8}, peak density {:.6}",
        profile.mu,
        profile.peak_density()
    );
    let report = central_vortex_stability(&profile, 10, ScanSettings::default())?;
    println!(
        "BdG n = 1..10: max Im omega = {:.4e} at n = {}, {}",
        report.max_im,
        report.dominant_mode().unwrap_or(0),
        report.verdict()
    );

    let tau = 0.00125;
    let mut field = Field2D::from_profile(&profile, 256, 256, [-15.0, 15.0, -15.0, 15.0])?;
    field.add_noise(1e-10, 1);
    let plan = StepPlan::new(&params, &field, tau)?;
    let options = EvolveOptions::for_duration(tau, t_final, (1.0 / tau).round() as usize)?;
    evolve_with(&field, &plan, options, |f| {
        let census = vortex_census(f, default_density_floor(f))?;
        let list: Vec<String> = census
            .vortices
            .iter()
            .map(|v| format!("({:+.2}, {:+.2}) w={}", v.x, v.y, v.winding))
            .collect();
        println!(
            "t = {:5.1}: {} vortices {}",
            f.time,
            census.len(),
            list.join(" ")
        );
        Ok(())
    })?;
    Ok(())
}
