//! Run a scenario file through the same pipeline as the command-line tool.
//!
//! cargo run --example scenario_file -- scenarios/lossy_epr.toml

use cv_rsp::scenario::{run, Command, Overrides, Scenario};

fn main() -> cv_rsp::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/lossy_epr.toml").into());
    let text = std::fs::read_to_string(&path)?;
    let scenario = Scenario::from_toml_str(&text, &Overrides::default(), false)?;
    println!("config-sha256 = {}", scenario.hash());
    for command in [Command::Prepare, Command::Simulate] {
        let out = run(command, &scenario)?;
        print!("{}", out.table.to_csv_string());
    }
    Ok(())
}
