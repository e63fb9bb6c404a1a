//! Simulated homodyne records, post-selected and compared with the analytic window.

use cv_rsp::conditioning::{condition_windowed, HomodyneProjection};
use cv_rsp::gaussian::{epr_state, EprParams};
use cv_rsp::montecarlo::{estimate_conditional, postselect, sample_joint, MeasurementPlan};

fn main() -> cv_rsp::error::Result<()> {
    let state = epr_state(&EprParams::new(0.24, 1.3, 0.9, 0.9)?)?;
    let proj = HomodyneProjection::windowed(0, 0.0, 0.0, 0.1);
    let analytic = condition_windowed(&state, &proj)?;

    let plan = MeasurementPlan::new(vec![0.0, 0.0], 1_000_000, 7)?;
    let batch = sample_joint(&state, &plan)?;
    let sel = postselect(&batch, 0, 0.0, 0.1)?;
    let est = estimate_conditional(&batch, &sel, 1)?;

    println!(
        "survival {:.5} (analytic {:.5})",
        sel.survival_fraction,
        analytic.success_probability()
    );
    println!(
        "Bob mean {:+.5} ± {:.5} (analytic {:+.5})",
        est.mean,
        est.mean_se,
        analytic.moments().quad_mean(0, 0.0)?
    );
    println!(
        "Bob var  {:.5} ± {:.5} (analytic {:.5})",
        est.variance,
        est.variance_se,
        analytic.moments().quad_variance(0, 0.0)?
    );

    let mut head = Vec::new();
    let small = sample_joint(&state, &MeasurementPlan::new(vec![0.0, 0.0], 5, 7)?)?;
    small.write_csv(&mut head)?;
    print!("{}", String::from_utf8_lossy(&head));
    Ok(())
}
