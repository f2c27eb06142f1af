//! Runs the energy and natural-frequency validation suites and prints their checks.
//!
//! `cargo run --release --example validate_suites`

use springsim::validate::{energy_suite, natfreq_suite, EnergySuite, NatfreqSuite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, report) in [
        ("energy", energy_suite(&EnergySuite::default())?),
        ("natfreq", natfreq_suite(&NatfreqSuite::default())?),
    ] {
        println!("== {name}");
        print!("{}", report.summary);
        for c in &report.checks {
            println!("{c}");
        }
    }
    Ok(())
}
