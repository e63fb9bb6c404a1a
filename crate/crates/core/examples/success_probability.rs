//! Acceptance probability and prepared-state quality for a lossy EPR source
//! as the selection window narrows.

use cv_rsp::conditioning::{condition_windowed, success_probability, HomodyneProjection};
use cv_rsp::gaussian::{epr_state, squeezing_db, EprParams};
use cv_rsp::metrics::estimate_squeezed_fit;

fn main() -> cv_rsp::error::Result<()> {
    let state = epr_state(&EprParams::new(0.24, 1.3, 0.9, 0.9)?)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "delta", "P", "dB", "fidelity");
    for delta in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
        let proj = HomodyneProjection::windowed(0, 0.0, 0.0, delta);
        let p = success_probability(&state, &proj)?.probability();
        let bob = condition_windowed(&state, &proj)?;
        let db = squeezing_db(bob.moments().quad_variance(0, 0.0)?)?;
        let fit = estimate_squeezed_fit(&bob)?;
        println!("{delta:>6} {p:>10.5} {db:>10.4} {:>10.6}", fit.fidelity);
    }

    let ideal = success_probability(&state, &HomodyneProjection::exact(0, 0.0, 0.0))?;
    println!("ideal projection: density-only = {}", ideal.is_density_only());
    Ok(())
}
