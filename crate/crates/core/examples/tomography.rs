//! Reconstruct Bob's post-selected state from four homodyne angles.

use cv_rsp::conditioning::{condition_windowed, HomodyneProjection};
use cv_rsp::gaussian::{epr_state, EprParams};
use cv_rsp::montecarlo::{gaussian_fidelity, simulate_remote_angles, tomography_fit, TOMOGRAPHY_ANGLES};

fn main() -> cv_rsp::error::Result<()> {
    let state = epr_state(&EprParams::new(0.24, 1.3, 0.9, 0.9)?)?;
    let herald = HomodyneProjection::windowed(0, 0.0, 0.0, 0.1);
    let estimates = simulate_remote_angles(&state, &herald, 1, &TOMOGRAPHY_ANGLES, 70_000, 11)?;
    for e in &estimates {
        println!(
            "theta = {:.4}: {} kept, var = {:.4} ± {:.4}",
            e.theta, e.estimate.survivors, e.estimate.variance, e.estimate.variance_se
        );
    }
    let fit = tomography_fit(&estimates)?;
    let predicted = condition_windowed(&state, &herald)?.moments().clone();
    println!("reconstructed cov = {:.4}", fit.state.cov());
    println!("predicted cov     = {:.4}", predicted.cov());
    if let Some(nu) = fit.clipped_from {
        println!("projected onto physical states from nu = {nu:.4}");
    }
    println!("agreement fidelity = {:.5}", gaussian_fidelity(&fit.state, &predicted)?);
    Ok(())
}
