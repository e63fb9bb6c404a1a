//! Changing Alice's homodyne angle rotates the squeezed state prepared at Bob.

use std::f64::consts::PI;

use cv_rsp::conditioning::{condition_exact, HomodyneProjection};
use cv_rsp::gaussian::{tmsv, SqueezingParameter};

fn main() -> cv_rsp::error::Result<()> {
    let pair = tmsv(SqueezingParameter::from_db(10.0)?);
    let reference = condition_exact(&pair, &HomodyneProjection::exact(0, 0.0, 0.0))?.state;

    for k in 0..4 {
        let theta = k as f64 * PI / 4.0;
        let bob = condition_exact(&pair, &HomodyneProjection::exact(0, theta, 0.0))?.state;
        // Bob is squeezed along (cos θ, −sin θ): the reference turned clockwise by θ.
        let expected = reference.rotate(0, -theta)?;
        let diff = (bob.cov() - expected.cov()).abs().max();
        let c = bob.cov();
        println!(
            "theta = {theta:.4}: cov = [[{:.4}, {:.4}], [{:.4}, {:.4}]], |Σ - R(-θ)Σ0R(-θ)ᵀ| = {diff:.1e}",
            c[(0, 0)],
            c[(0, 1)],
            c[(1, 0)],
            c[(1, 1)]
        );
    }
    Ok(())
}
