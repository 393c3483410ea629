//! Ground-state branch of the R = 2 problem continued in the decay rate σ.
//!
//! cargo run --release --example sigma_continuation -- [sigma_min] [sigma_max]

use std::time::Instant;

use cgpe::bdg::ground_state;
use cgpe::collocation::{solve_stationary, Parameter};
use cgpe::continuation::{trace_branch, ContinuationSettings};
use cgpe::ModelParams;

fn main() -> cgpe::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|s| s.parse::<f64>().expect("sigma bound"));
    let lo = args.next().unwrap_or(0.1);
    let hi = args.next().unwrap_or(1.0);
    let template = ModelParams::new(4.4, 0.3, 2.0)?;
    let start = ground_state(&template, 2.0)?;
    let t = Instant::now();
    let settings = ContinuationSettings::default();
    let (_, branch) = trace_branch(&start, Parameter::Sigma, (lo, hi), &settings)?;
    println!(
        "{} points in {:.1?}, termination {:?}",
        branch.points.len(),
        t.elapsed(),
        branch.termination
    );
    let worst = branch
        .points
        .iter()
        .map(|p| p.residual_norm)
        .fold(0.0, f64::max);
    println!("worst branch residual {worst:.2e}");
    for p in branch
        .points
        .iter()
        .step_by((branch.points.len() / 12).max(1))
    {
        println!("  sigma = {:.6}  mu = {:.8}", p.lambda, p.mu);
    }
    // Re-solve at the last point as an independent check.
    let last = branch.points.last().expect("branch has its start point");
    let mut params = template.clone();
    params.sigma = last.lambda;
    let direct = solve_stationary(&params, start.state.as_ref().expect("solver profile"), 0)?;
    println!(
        "direct solve at sigma = {:.6}: mu = {:.8} (branch {:.8})",
        last.lambda, direct.mu, last.mu
    );
    Ok(())
}
