//! End-to-end federated run of a builtin or TOML scenario: traffic, sensing,
//! local training, one-hop sharing, aggregation and evaluation.
//!
//! ```text
//! cargo run --release --example federated_run -- [scenario | file.toml] [seed]
//! ```

use std::path::Path;

use fedsense::scenario::{builtin_scenario, run, Scenario, Seeds};

fn main() -> fedsense::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("three-neighbor", String::as_str);
    let mut scenario = if name.ends_with(".toml") {
        Scenario::from_file(Path::new(name))?
    } else {
        builtin_scenario(name)?
    };
    if let Some(seed) = args.get(1) {
        scenario = scenario.with_seeds(Seeds::from_base(seed.parse().expect("seed")));
    }

    let out = run(&scenario)?;
    let r = &out.report;
    println!(
        "{}: {} params per model, {} payload bytes, {:.1} s",
        r.scenario,
        r.param_count,
        r.payload_bytes,
        r.total_ms / 1000.0
    );
    for n in &r.nodes {
        println!(
            "node {} (neighbors {:?}): busy {:.4}, persistence {:.4}, local {:.4}, global {:.4}",
            n.node_id,
            n.neighbors,
            n.val_busy_fraction,
            n.persistence_accuracy,
            n.local_val_accuracy.unwrap_or(f64::NAN),
            n.global_val_accuracy.unwrap_or(f64::NAN),
        );
    }
    println!(
        "primary {}: eta1 {:.4}, eta2 {:.4}",
        r.primary,
        r.eta1.unwrap_or(f64::NAN),
        r.eta2.unwrap_or(f64::NAN)
    );
    for f in r.invariant_failures() {
        println!("invariant failed: {f}");
    }
    Ok(())
}
