mod common;

use common::mean_oracle;
use fedsense::federation::{
    aggregate, aggregate_average, broadcast, corrupt, deserialize, exchange, serialize,
    AggregationRule, ChannelModelRegistry, GlobalModel, ModelMessage, Topology, HEADER_LEN,
};
use fedsense::neuralnet::{init_params, predict, Architecture, ParamVector};
use fedsense::sensing::one_hot;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(arch: Architecture, rng: &mut ChaCha8Rng, scale: f64) -> ParamVector {
    let v = (0..arch.param_count())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    ParamVector::new(arch, v).unwrap()
}

fn models(n: usize, seed: u64) -> Vec<ParamVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| random_params(Architecture::t_s(), &mut rng, 1.0))
        .collect()
}

fn received(ms: &[ParamVector]) -> Vec<(u32, ParamVector)> {
    ms.iter()
        .enumerate()
        .map(|(i, p)| (i as u32 + 1, p.clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mean_matches_elementwise_oracle(n in 0usize..7, seed: u64) {
        let ms = models(n + 1, seed);
        let g = aggregate_average(0, &ms[0], &received(&ms[1..]), None).unwrap();
        let refs: Vec<&ParamVector> = ms.iter().collect();
        for (a, b) in g.params.values().iter().zip(mean_oracle(&refs)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert_eq!(g.contributors.len(), n + 1);
        prop_assert_eq!(g.contributors[0], 0);
    }

    #[test]
    fn permutation_invariance(n in 2usize..7, seed: u64, shuffle_seed: u64) {
        use rand::seq::SliceRandom;
        let ms = models(n + 1, seed);
        let mut rx = received(&ms[1..]);
        let a = aggregate_average(0, &ms[0], &rx, None).unwrap();
        rx.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let b = aggregate_average(0, &ms[0], &rx, None).unwrap();
        for (x, y) in a.params.values().iter().zip(b.params.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_contributors_are_a_fixed_point(n in 0usize..6, seed: u64) {
        let p = models(1, seed).remove(0);
        let rx: Vec<_> = (0..n).map(|i| (i as u32 + 1, p.clone())).collect();
        let g = aggregate_average(0, &p, &rx, None).unwrap();
        for (x, y) in g.params.values().iter().zip(p.values()) {
            prop_assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }

    #[test]
    fn mean_survives_the_wire(n in 1usize..6, seed: u64) {
        let ms = models(n + 1, seed);
        let rx: Vec<(u32, ParamVector)> = ms[1..]
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let bytes = serialize(i as u32 + 1, 0, p).unwrap();
                (i as u32 + 1, deserialize(&bytes).unwrap().params())
            })
            .collect();
        let g = aggregate_average(0, &ms[0], &rx, None).unwrap();
        let refs: Vec<&ParamVector> = ms.iter().collect();
        for (a, b) in g.params.values().iter().zip(mean_oracle(&refs)) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn codec_round_trip(seed: u64, node: u32, channel: u32) {
        let p = models(1, seed).remove(0);
        let bytes = serialize(node, channel, &p).unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + 4 * 392);
        let msg = deserialize(&bytes).unwrap();
        prop_assert_eq!(msg.node_id, node);
        prop_assert_eq!(msg.channel_id, channel);
        for (a, b) in msg.params().values().iter().zip(p.values()) {
            prop_assert_eq!(*a, f64::from(*b as f32));
        }
        prop_assert_eq!(msg.to_bytes(), bytes);
    }

    #[test]
    fn broadcasts_stay_one_hop(
        edges in prop::collection::vec((0u32..8, 0u32..8), 0..16),
    ) {
        let edges: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let topo = Topology::from_edges(0..8, edges).unwrap();
        let arch = Architecture::new(2, 1, 1);
        let out: Vec<ModelMessage> = (0..8)
            .map(|n| ModelMessage::new(n, 0, &ParamVector::zeros(arch)).unwrap())
            .collect();
        let inboxes = exchange(&topo, &out).unwrap();
        for (to, inbox) in &inboxes {
            let senders: Vec<u32> = inbox.iter().map(|m| m.node_id).collect();
            let expected: Vec<u32> = topo.neighbors(*to).unwrap().iter().copied().collect();
            prop_assert_eq!(senders, expected);
        }
        for n in 0..8 {
            let reached = broadcast(&topo, n).unwrap();
            prop_assert!(!reached.contains(&n));
            let dist = topo.distances(n).unwrap();
            for r in reached {
                prop_assert_eq!(dist[&r], 1);
            }
        }
    }
}

#[test]
fn weighted_and_literal_rules() {
    let ms = models(3, 9);
    let rx = received(&ms[1..]);
    let g = aggregate(
        0,
        &ms[0],
        &rx,
        Some(&[3.0, 0.0]),
        AggregationRule::UniformMean,
    )
    .unwrap();
    for i in 0..ms[0].len() {
        let want = (ms[0].values()[i] + 3.0 * ms[1].values()[i]) / 4.0;
        assert!((g.params.values()[i] - want).abs() < 1e-12);
    }
    let g = aggregate(0, &ms[0], &rx, None, AggregationRule::SelfPlusScaledSum).unwrap();
    for i in 0..ms[0].len() {
        let want = ms[0].values()[i] + (ms[1].values()[i] + ms[2].values()[i]) / 2.0;
        assert!((g.params.values()[i] - want).abs() < 1e-12);
    }
    assert!(aggregate_average(0, &ms[0], &rx, Some(&[1.0])).is_err());
    let other = init_params(Architecture::new(2, 2, 2), 1).unwrap();
    assert!(aggregate_average(0, &ms[0], &[(1, other)], None).is_err());
}

#[test]
fn corruption_has_requested_spread() {
    let zeros = ParamVector::zeros(Architecture::t_s());
    let mut draws = Vec::new();
    let mut seed = 0;
    while draws.len() < 10_000 {
        draws.extend_from_slice(corrupt(&zeros, 0.1, seed).unwrap().values());
        seed += 1;
    }
    draws.truncate(10_000);
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((std - 0.1).abs() < 0.005, "std {std}");
    assert!(mean.abs() < 3.0 * 0.1 / n.sqrt(), "mean {mean}");

    let p = models(1, 4).remove(0);
    assert_eq!(corrupt(&p, 0.0, 1).unwrap(), p);
    assert!(corrupt(&p, -1.0, 1).is_err());
    assert_eq!(corrupt(&p, 0.2, 5).unwrap(), corrupt(&p, 0.2, 5).unwrap());
}

#[test]
fn registry_routes_by_channel() {
    let ms = models(4, 12);
    let mut reg = ChannelModelRegistry::new(0, 2).unwrap();
    assert!(reg.is_empty());
    reg.set_global(GlobalModel {
        owner: 7,
        params: ms[0].clone(),
        contributors: vec![7],
    });
    assert!(reg.register_foreign(0, ms[1].clone()).is_err());
    assert_eq!(reg.register_foreign(5, ms[1].clone()).unwrap(), None);
    assert_eq!(reg.register_foreign(6, ms[2].clone()).unwrap(), None);
    assert_eq!(reg.model_for(0), Some(&ms[0]));
    assert_eq!(reg.model_for(5), Some(&ms[1]));
    // 6 is now least recently used
    assert_eq!(reg.register_foreign(9, ms[3].clone()).unwrap(), Some(6));
    assert_eq!(reg.foreign_channels(), vec![5, 9]);
    assert!(!reg.contains(6));
    assert_eq!(reg.model_for(6), None);
    assert_eq!(reg.len(), 3);

    let inputs: Vec<Vec<f64>> = [0, 1, 1, 0]
        .iter()
        .map(|&s| one_hot(s, 2).unwrap())
        .collect();
    assert_eq!(
        reg.predict_on(9, &inputs).unwrap(),
        predict(&ms[3], &inputs).unwrap()
    );
    assert_eq!(
        reg.predict_on(0, &inputs).unwrap(),
        predict(&ms[0], &inputs).unwrap()
    );
    assert!(reg.predict_on(6, &inputs).is_err());
}

#[test]
fn malformed_messages_are_rejected() {
    let p = models(1, 2).remove(0);
    let bytes = serialize(1, 2, &p).unwrap();
    assert!(deserialize(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(deserialize(&bad).is_err());
    let mut long = bytes.clone();
    long.push(0);
    assert!(deserialize(&long).is_err());
    assert!(deserialize(&[]).is_err());
}
