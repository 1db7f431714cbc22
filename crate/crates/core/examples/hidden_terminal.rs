//! Hidden-terminal scenario: N1 and N3 cannot hear each other, N2 hears both.
//! N1's local model has never seen N3's traffic; its global model, averaged
//! with N2's, has.
//!
//! ```text
//! cargo run --release --example hidden_terminal -- [N3 rates ...]
//! ```

use fedsense::scenario::{builtin_scenario, hidden_terminal, hidden_terminal_margin, run};

fn main() -> fedsense::Result<()> {
    let rates: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("rates must be numbers"))
        .collect();
    let scenario = if rates.is_empty() {
        builtin_scenario("hidden-terminal")?
    } else {
        hidden_terminal(rates)
    };
    let out = run(&scenario)?;
    let r = &out.report;
    for node in &r.nodes {
        println!(
            "node {}: busy {:.4}, persistence {:.4}, local {:.4}, global {:.4}",
            node.node_id,
            node.val_busy_fraction,
            node.persistence_accuracy,
            node.local_val_accuracy.unwrap_or(f64::NAN),
            node.global_val_accuracy.unwrap_or(f64::NAN),
        );
        for c in &node.cross {
            println!(
                "  on node {}'s traffic: local {:.4}, global {:.4}, persistence {:.4}",
                c.trace_of, c.local_accuracy, c.global_accuracy, c.persistence_accuracy
            );
        }
    }
    println!(
        "N1 margin on N2 traffic: {:+.4}",
        hidden_terminal_margin(r)?
    );
    Ok(())
}
