//! Linear stability of the radially symmetric ground state across pump radii.
//!
//! cargo run --release --example stability_scan -- [m_max] [R...]

use std::time::Instant;

use cgpe::bdg::{ground_state, stability_scan, ScanSettings};
use cgpe::diagnostics::{chemical_potential_integral, mass_balance};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let mut args = std::env::args().skip(1);
    let m_max: u32 = args.next().map(|s| s.parse().expect("m_max")).unwrap_or(50);
    let mut radii: Vec<f64> = args.map(|s| s.parse().expect("R")).collect();
    if radii.is_empty() {
        radii = vec![2.0, 3.0, 4.0, 5.0, 8.0, 9.0];
    }
    let template = ModelParams::new(4.4, 0.3, 2.0)?;
    for r in radii {
        let start = Instant::now();
        let profile = ground_state(&template, r)?;
        let mu_int = chemical_potential_integral(&profile)?;
        let report = stability_scan(&profile, m_max, ScanSettings::default())?;
        println!(
            "R = {r}: mu = {:.8} (identity {:.1e}), mass balance {:.1e}, max Im w = {:+.6e} at m = {}, {} [{:.1?}]",
            profile.mu,
            (mu_int - profile.mu).abs() / profile.mu,
            mass_balance(&profile),
            report.max_im,
            report.dominant_mode().unwrap_or(0),
            report.verdict(),
            start.elapsed()
        );
    }
    Ok(())
}
