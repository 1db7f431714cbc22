//! Long reproduction run: three-neighbor scenario, 250,000 training slots per
//! node, the {60, 120} network and 40 epochs. Expect hours on a single core.
//! The target is a primary global accuracy of about 0.98 (within 0.02).
//!
//! ```text
//! cargo run --release --example paper_full -- [epochs]
//! ```

use fedsense::scenario::{builtin_scenario, run, ArchChoice, Profile};

fn main() -> fedsense::Result<()> {
    let mut scenario = builtin_scenario("three-neighbor")?
        .with_profile(Profile::PaperFull)
        .with_arch(ArchChoice::TB);
    if let Some(e) = std::env::args().nth(1) {
        scenario.epochs = e.parse().expect("epochs");
    }
    println!(
        "{} params, {} slots per node, {} epochs at lr {}",
        scenario.arch.param_count(),
        scenario.train_slots(),
        scenario.epochs,
        scenario.learning_rate
    );
    let out = run(&scenario)?;
    let r = &out.report;
    for n in &r.nodes {
        for e in &n.epochs {
            println!(
                "node {} epoch {:>2}: loss {:.5}, train {:.4}, val {:.4}",
                n.node_id,
                e.epoch,
                e.loss,
                e.train_acc,
                e.val_acc.unwrap_or(f64::NAN)
            );
        }
    }
    let global = r
        .node(r.primary)
        .and_then(|n| n.global_val_accuracy)
        .unwrap_or(f64::NAN);
    let verdict = if (global - 0.98).abs() <= 0.02 {
        "within"
    } else {
        "outside"
    };
    println!("primary global accuracy {global:.4} ({verdict} 0.98 +/- 0.02)");
    Ok(())
}
