//! Trains one node's local model on its own sensing trace and compares it
//! with the persistence baseline.
//!
//! ```text
//! cargo run --release --example train_local -- [scenario] [node] [epochs] [learning_rate]
//! ```

use fedsense::neuralnet::{evaluate, init_params, train, TrainConfig};
use fedsense::scenario::ScenarioTraffic;
use fedsense::scenario::{accuracy, baseline_persistence, builtin_scenario, split_validation};

fn main() -> fedsense::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("three-neighbor", String::as_str);
    let mut scenario = builtin_scenario(name)?;
    let node = args
        .get(1)
        .map_or(scenario.primary, |a| a.parse().expect("node id"));
    if let Some(e) = args.get(2) {
        scenario.epochs = e.parse().expect("epochs");
    }
    if let Some(lr) = args.get(3) {
        scenario.learning_rate = lr.parse().expect("learning rate");
    }
    let seeds = scenario.seeds;

    let (train_set, val_set) = split_validation(&scenario, node, seeds.traffic, seeds.validation)?;
    let val_trace =
        ScenarioTraffic::generate(&scenario, seeds.validation, scenario.validation_horizon())?
            .trace(&scenario, node)?;
    let targets: Vec<usize> = val_trace.slots[1..]
        .iter()
        .map(|&s| usize::from(s))
        .collect();
    let persistence = accuracy(&baseline_persistence(&val_trace)?, &targets)?;

    let init = init_params(scenario.arch, seeds.init)?;
    let config = TrainConfig::new(scenario.epochs, scenario.learning_rate, seeds.shuffle);
    let outcome = train(&init, &train_set, Some(&val_set), &config)?;
    for m in &outcome.metrics {
        println!(
            "epoch {:>3}  loss {:.5}  train {:.4}  val {:.4}  {:.0} ms",
            m.epoch,
            m.loss,
            m.train_acc,
            m.val_acc.unwrap_or(f64::NAN),
            m.wall_time_ms
        );
    }
    let eval = evaluate(&outcome.params, &val_set)?;
    println!(
        "node {node}: {} windows, val accuracy {:.4}, persistence {persistence:.4}, busy {:.4}",
        train_set.len(),
        eval.accuracy,
        val_trace.busy_fraction()
    );
    Ok(())
}
