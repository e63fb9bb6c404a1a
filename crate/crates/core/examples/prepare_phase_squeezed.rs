//! Project Alice's phase quadrature on a 10 dB two-mode squeezed vacuum and
//! inspect the state left at Bob's station.

use std::f64::consts::FRAC_PI_2;

use cv_rsp::conditioning::{condition_exact, predicted_conditional_squeezing, HomodyneProjection};
use cv_rsp::gaussian::{squeezing_db, tmsv, SqueezingParameter};
use cv_rsp::metrics::estimate_squeezed_fit;

fn main() -> cv_rsp::error::Result<()> {
    let r = SqueezingParameter::from_db(10.0)?;
    let pair = tmsv(r);
    let bob = condition_exact(&pair, &HomodyneProjection::exact(0, FRAC_PI_2, 0.0))?.state;

    let var_p = bob.quad_variance(0, FRAC_PI_2)?;
    println!("source r = {:.4}", r.value());
    println!("Bob: var_x = {:.5}, var_p = {:.5}", bob.quad_variance(0, 0.0)?, var_p);
    println!("squeezing = {:.3} dB", squeezing_db(var_p)?);
    println!(
        "closed form 1/(2 cosh 2r) = {:.5}",
        predicted_conditional_squeezing(r).squeezed_variance()
    );

    let fit = estimate_squeezed_fit(&bob)?;
    println!(
        "best pure target: r = {:.5}, phi = {:.4}, fidelity = {:.9}",
        fit.target.r, fit.target.phi, fit.fidelity
    );
    Ok(())
}
