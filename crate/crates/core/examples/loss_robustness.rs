//! Squeezing survives loss on Bob's arm; purity does not.

use cv_rsp::conditioning::{condition_exact, HomodyneProjection};
use cv_rsp::gaussian::{epr_state, squeezing_db, EprParams};
use cv_rsp::metrics::estimate_squeezed_fit;

fn main() -> cv_rsp::error::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "eta_b", "var_x", "dB", "fidelity");
    for k in 1..=20 {
        let eta_b = k as f64 * 0.05;
        let state = epr_state(&EprParams::new(0.24, 1.0 / 0.96, 1.0, eta_b)?)?;
        let bob = condition_exact(&state, &HomodyneProjection::exact(0, 0.0, 0.0))?.state;
        let v = bob.quad_variance(0, 0.0)?;
        let fit = estimate_squeezed_fit(&bob)?;
        println!("{eta_b:>6.2} {v:>10.5} {:>10.4} {:>10.6}", squeezing_db(v)?, fit.fidelity);
    }
    Ok(())
}
