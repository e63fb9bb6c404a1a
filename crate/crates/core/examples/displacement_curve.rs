//! Remote displacement: the projected value α reaches Bob scaled by tanh 2r.

use cv_rsp::conditioning::{condition_exact, predicted_displacement, HomodyneProjection};
use cv_rsp::gaussian::{tmsv, SqueezingParameter};

fn main() -> cv_rsp::error::Result<()> {
    let alphas = [0.25, 0.5, 0.75, 1.0];
    print!("{:>6}", "dB");
    for a in alphas {
        print!(" {:>10}", format!("a={a}"));
    }
    println!();
    for db in (0..=20).step_by(2) {
        let r = SqueezingParameter::from_db(db as f64)?;
        let pair = tmsv(r);
        print!("{db:>6}");
        for a in alphas {
            let bob = condition_exact(&pair, &HomodyneProjection::exact(0, 0.0, a))?.state;
            assert!((bob.mean()[0] - predicted_displacement(r, a)).abs() < 1e-9);
            print!(" {:>10.6}", bob.mean()[0]);
        }
        println!();
    }
    Ok(())
}
