//! One measurement on a GHZ-like state prepares squeezed states at every other station.

use std::f64::consts::FRAC_PI_2;

use cv_rsp::conditioning::{condition_sequence, HomodyneProjection};
use cv_rsp::gaussian::{ghz_like, squeezing_db, SqueezingParameter};
use cv_rsp::metrics::estimate_squeezed_fit;

fn main() -> cv_rsp::error::Result<()> {
    let r = SqueezingParameter::from_db(10.0)?;
    for n in 2..=8 {
        let state = ghz_like(n, r)?;
        let out = condition_sequence(&state, &[HomodyneProjection::exact(0, 0.0, 0.0)])?;
        let bob = out.state.marginal(&[0])?;
        println!(
            "N = {n}: x_A = 0 leaves {} stations at {:.3} dB (x)",
            out.labels.len(),
            squeezing_db(bob.quad_variance(0, 0.0)?)?
        );
    }

    let state = ghz_like(3, r)?;
    let out = condition_sequence(
        &state,
        &[
            HomodyneProjection::exact(0, FRAC_PI_2, 0.0),
            HomodyneProjection::exact(1, FRAC_PI_2, 0.0),
        ],
    )?;
    let claire = out.state;
    let fit = estimate_squeezed_fit(&claire)?;
    println!(
        "p_A = p_B = 0: Claire at {:.3} dB (p), fidelity {:.9}",
        squeezing_db(claire.quad_variance(0, FRAC_PI_2)?)?,
        fit.fidelity
    );
    Ok(())
}
