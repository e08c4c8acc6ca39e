//! A time scan of the plus/minus boundary gap in the constrained system, from a JSON config.
//!
//! `cargo run --release --example gap_scan -- crates/core/configs/beta0_trivial.json`
use gibbsflow::analysis::{parse_scan_config, transition_scan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/beta0_trivial.json").into()
    });
    let cfg = parse_scan_config(&std::fs::read_to_string(&path)?)?;
    let result = transition_scan(&cfg)?;
    result.write_csv(std::io::stdout().lock())?;
    match result.crossover {
        Some(t) => println!("crossover at t = {t}"),
        None => println!("no significant gap"),
    }
    Ok(())
}
