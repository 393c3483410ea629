//! Largest BdG growth rate against the pump radius, then a bisection for the
//! radius where the ground state turns unstable.
//!
//! cargo run --release --example stability_curve -- [m_max] [step]

use cgpe::bdg::{curve_to_csv, locate_threshold, stability_curve, ScanSettings};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let mut args = std::env::args().skip(1);
    let m_max: u32 = args.next().map(|s| s.parse().expect("m_max")).unwrap_or(20);
    let step: f64 = args.next().map(|s| s.parse().expect("step")).unwrap_or(0.5);
    let template = ModelParams::new(4.4, 0.3, 2.0)?;
    let settings = ScanSettings::default();
    let radii: Vec<f64> = (1..)
        .map(|i| i as f64 * step)
        .take_while(|&r| r <= 9.0 + 1e-9)
        .collect();
    let curve = stability_curve(&template, &radii, m_max, settings)?;
    print!("{}", curve_to_csv(&curve));
    let transition = curve.windows(2).find(|w| match (w[0].max_im, w[1].max_im) {
        (Some(a), Some(b)) => a < cgpe::bdg::NEUTRAL_TOLERANCE && b >= cgpe::bdg::NEUTRAL_TOLERANCE,
        _ => false,
    });
    if let Some(w) = transition {
        let (lo, hi) = locate_threshold(
            &template,
            w[0].pump_radius,
            w[1].pump_radius,
            0.01,
            m_max,
            settings,
        )?;
        println!("instability sets in between R = {lo:.3} and R = {hi:.3}");
    }
    Ok(())
}
