//! Ground state at the paper parameters from the Thomas–Fermi guess.
//!
//! cargo run --release --example stationary_state -- [R]

use std::time::Instant;

use cgpe::collocation::{default_mesh, solve_stationary, thomas_fermi_guess};
use cgpe::diagnostics::{chemical_potential_integral, mass_balance};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let r: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("R must be a number"))
        .unwrap_or(2.0);
    let params = ModelParams::new(4.4, 0.3, r)?;
    let guess = thomas_fermi_guess(&params, default_mesh(&params)?)?;
    let start = Instant::now();
    let profile = solve_stationary(&params, &guess, 0)?;
    println!(
        "R = {r}: mu = {:.10}, residual = {:.2e}, {:.2?}",
        profile.mu,
        profile.residual_norm,
        start.elapsed()
    );
    println!("phi(0) = {:.8}", profile.phi[0]);
    println!("mass balance = {:.3e}", mass_balance(&profile));
    let mu_int = chemical_potential_integral(&profile)?;
    println!(
        "mu from integral identity = {mu_int:.10} (rel. diff {:.2e})",
        (mu_int - profile.mu).abs() / profile.mu
    );
    Ok(())
}
