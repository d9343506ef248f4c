//! Runs every brute-force verification suite at full size.
//!
//! ```text
//! cargo run --release --example oracle_suites -- [seed]
//! ```

use prafd::oracle::run_all;

fn main() -> prafd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut all_passed = true;
    for report in run_all(seed)? {
        println!("{report}");
        all_passed &= report.passed();
    }
    if !all_passed {
        std::process::exit(1);
    }
    Ok(())
}
