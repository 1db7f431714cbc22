//! Senses a node's channel in 20 µs slots, writes the trace in both file
//! formats and slices it into training windows.
//!
//! ```text
//! cargo run --release --example sensing -- [scenario] [node] [out_dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use fedsense::scenario::{builtin_scenario, ScenarioTraffic};
use fedsense::sensing::{build_dataset, read_packed, write_packed, write_text};

fn main() -> fedsense::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("three-neighbor", String::as_str);
    let scenario = builtin_scenario(name)?;
    let node = args
        .get(1)
        .map_or(scenario.primary, |a| a.parse().expect("node id"));
    let out = PathBuf::from(args.get(2).map_or("out/sensing", String::as_str));

    let traffic = ScenarioTraffic::generate(&scenario, scenario.seeds.traffic, scenario.horizon)?;
    let trace = traffic.trace(&scenario, node)?;
    let busy = traffic.busy_set(&scenario, node)?;
    println!(
        "node {node}: {} slots, busy slots {:.4}, busy time {:.4}",
        trace.len(),
        trace.busy_fraction(),
        busy.busy_fraction()
    );
    let head: String = trace
        .slots
        .iter()
        .take(80)
        .map(|s| if *s == 1 { '#' } else { '.' })
        .collect();
    println!("first slots: {head}");

    std::fs::create_dir_all(&out)?;
    let packed = out.join(format!("node{node}.trace"));
    write_packed(&trace, BufWriter::new(File::create(&packed)?))?;
    write_text(
        &trace,
        BufWriter::new(File::create(out.join(format!("node{node}.txt")))?),
    )?;
    assert_eq!(read_packed(File::open(&packed)?)?, trace);
    println!(
        "wrote {} ({} bytes)",
        packed.display(),
        std::fs::metadata(&packed)?.len()
    );

    let ds = build_dataset(&trace, scenario.window_len)?;
    let busy_targets = ds.targets().filter(|&t| t == 1).count();
    println!(
        "{} windows of {} slots, {} targets, {busy_targets} busy",
        ds.len(),
        ds.window_len,
        ds.num_targets()
    );
    Ok(())
}
