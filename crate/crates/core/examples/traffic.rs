//! Samples Poisson packet traffic, merges it into busy intervals and compares
//! the busy fraction with the M/G/∞ value.
//!
//! ```text
//! cargo run --release --example traffic -- [horizon_s] [rate ...]
//! ```

use fedsense::traffic::{compose_node_traffic, sample_arrivals, ArrivalProcess};

fn main() -> fedsense::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("arguments must be numbers"))
        .collect();
    let horizon = args.first().copied().unwrap_or(1.0);
    let rates = if args.len() > 1 {
        args[1..].to_vec()
    } else {
        vec![5.0, 9.5, 12.0]
    };

    let shared = ArrivalProcess::new("shared", rates[..1].to_vec());
    let own = ArrivalProcess::new("own", rates[1..].to_vec());
    let shared_pkts = vec![sample_arrivals(&shared, horizon, 1)?];
    let own_pkts = if own.rates.is_empty() {
        vec![]
    } else {
        vec![sample_arrivals(&own, horizon, 2)?]
    };

    let busy = compose_node_traffic(&shared_pkts, &own_pkts, horizon)?;
    let all = ArrivalProcess::new("all", rates.clone());
    println!("rates {rates:?} over {horizon} s");
    println!(
        "packets: {} shared, {} own",
        shared_pkts[0].len(),
        own_pkts.iter().flatten().count()
    );
    println!("expected packets: {:.1}", all.total_rate() * horizon);
    println!("mean airtime: {:.1} us", all.mean_airtime() * 1e6);
    println!("busy intervals: {}", busy.intervals().len());
    println!(
        "busy fraction: {:.6} (M/G/inf {:.6})",
        busy.busy_fraction(),
        all.busy_probability()
    );
    for (a, b) in busy.intervals().iter().take(5) {
        println!("  busy {:.6} .. {:.6} s", a, b);
    }
    Ok(())
}
