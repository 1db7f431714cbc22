//! One round of model sharing on a small topology: every node broadcasts a
//! model message to its one-hop neighbors and averages what it receives.
//!
//! ```text
//! cargo run --release --example model_exchange
//! ```

use fedsense::federation::{aggregate_average, exchange, ModelMessage, Topology};
use fedsense::neuralnet::{init_params, Architecture};

fn main() -> fedsense::Result<()> {
    let topo = Topology::from_edges(0..4, [(0, 1), (0, 2), (0, 3), (2, 3)])?;
    let arch = Architecture::t_s();
    let locals: Vec<_> = (0..4)
        .map(|n| init_params(arch, n))
        .collect::<fedsense::Result<_>>()?;
    let outgoing: Vec<ModelMessage> = locals
        .iter()
        .enumerate()
        .map(|(n, p)| ModelMessage::new(n as u32, 0, p))
        .collect::<fedsense::Result<_>>()?;
    let m = &outgoing[0];
    println!(
        "message: {} params, {} payload bytes, {} bytes on the wire",
        m.param_count(),
        m.payload_bytes(),
        m.encoded_len()
    );

    for (node, inbox) in exchange(&topo, &outgoing)? {
        // what actually arrives is the decoded byte stream
        let received: Vec<_> = inbox
            .iter()
            .map(|msg| {
                Ok((
                    msg.node_id,
                    ModelMessage::from_bytes(&msg.to_bytes())?.params(),
                ))
            })
            .collect::<fedsense::Result<_>>()?;
        let global = aggregate_average(node, &locals[node as usize], &received, None)?;
        let shift: f64 = global
            .params
            .values()
            .iter()
            .zip(locals[node as usize].values())
            .map(|(g, l)| (g - l).abs())
            .fold(0.0, f64::max);
        println!(
            "node {node}: averaged {:?}, largest change from local {shift:.4}",
            global.contributors
        );
    }
    Ok(())
}
