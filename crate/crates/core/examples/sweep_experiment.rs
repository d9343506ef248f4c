//! Sweeps the region size and writes trials.csv and aggregates.csv.
//!
//! ```text
//! cargo run --release --example sweep_experiment -- [out_dir]
//! ```

use prafd::experiment::{run_experiment, ExperimentSpec};
use prafd::report::emit_csv;

const SPEC: &str = r#"
[scenario]
K = 2
N = 2

[experiment]
trials = 50
seed = 1
sweep = "A=1,2,3,4,5"
algos = ["fp-bsum", "fpas"]
"#;

fn main() -> prafd::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "results/region_sweep".into());
    let spec = ExperimentSpec::from_toml_str(SPEC)?;
    let res = run_experiment(&spec)?;
    for a in &res.aggregates {
        println!(
            "A = {}λ {:>8}: mean {:.4}, IQR [{:.4}, {:.4}]",
            a.sweep_value.unwrap_or_default(),
            a.algorithm.id(),
            a.mean,
            a.p25,
            a.p75
        );
    }
    let (trials, aggregates) = emit_csv(&res, &out)?;
    println!("wrote {} and {}", trials.display(), aggregates.display());
    Ok(())
}
