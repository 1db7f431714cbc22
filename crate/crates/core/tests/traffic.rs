use fedsense::scenario::{builtin_scenario, ScenarioTraffic};
use fedsense::traffic::{
    compose_node_traffic, occupancy_union, sample_arrivals, sample_component, ArrivalProcess,
    BusyIntervalSet, Packet,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn zero_rate_and_empty_rates_give_no_packets() {
    let p = ArrivalProcess::new("z", vec![0.0]);
    assert!(sample_arrivals(&p, 5.0, 1).unwrap().is_empty());
    let p = ArrivalProcess::new("e", vec![]);
    assert!(sample_arrivals(&p, 5.0, 1).unwrap().is_empty());
    assert!(sample_arrivals(&p, 0.0, 1).is_err());
}

#[test]
fn poisson_count_mean_matches_rate() {
    let p = ArrivalProcess::new("a", vec![5.0]);
    let counts: Vec<f64> = (0..10_000)
        .map(|seed| sample_arrivals(&p, 5.0, seed).unwrap().len() as f64)
        .collect();
    let (mean, _) = mean_and_se(&counts);
    // 3 · √25 / √10000
    assert!((mean - 25.0).abs() < 0.15, "mean count {mean}");
}

#[test]
fn superposed_mix_has_summed_intensity() {
    let p = ArrivalProcess::new("n1", vec![5.0, 9.5, 12.0]);
    let runs = 2_000;
    let counts: Vec<f64> = (0..runs)
        .map(|seed| sample_arrivals(&p, 5.0, seed).unwrap().len() as f64)
        .collect();
    let (mean, _) = mean_and_se(&counts);
    let tol = 3.0 * (132.5f64 / runs as f64).sqrt();
    assert!((mean - 132.5).abs() < tol, "mean count {mean}");
}

#[test]
fn packet_lengths_and_order() {
    let p = ArrivalProcess::new("a", vec![50.0, 70.0]);
    let pkts = sample_arrivals(&p, 5.0, 3).unwrap();
    let lo = 2000.0 * 8.0 / 24e6;
    let hi = 2364.0 * 8.0 / 24e6;
    for w in pkts.windows(2) {
        assert!(w[0].arrival <= w[1].arrival);
    }
    for pk in &pkts {
        assert!(pk.arrival >= 0.0 && pk.arrival < 5.0);
        assert!(pk.airtime >= lo - 1e-15 && pk.airtime <= hi + 1e-15);
    }
}

#[test]
fn busy_fraction_matches_infinite_server_probability() {
    let p = ArrivalProcess::new("a", vec![200.0]);
    let mean_airtime: f64 = (2000.0 + 2364.0) / 2.0 * 8.0 / 24e6;
    let expected = 1.0 - (-200.0 * mean_airtime).exp();
    let fractions: Vec<f64> = (0..300)
        .map(|seed| {
            let pk = sample_arrivals(&p, 5.0, seed).unwrap();
            occupancy_union(&pk, 5.0).unwrap().busy_fraction()
        })
        .collect();
    let (mean, se) = mean_and_se(&fractions);
    assert!(
        (mean - expected).abs() < 3.0 * se,
        "busy fraction {mean} vs {expected} (se {se})"
    );
    assert!((p.busy_probability() - expected).abs() < 1e-12);
}

#[test]
fn union_matches_microsecond_rasterization() {
    let horizon_us = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let packets: Vec<Packet> = (0..1000)
        .map(|_| Packet {
            arrival: rng.random_range(0..horizon_us) as f64 * 1e-6,
            airtime: rng.random_range(1..300) as f64 * 1e-6,
        })
        .collect();
    let busy = occupancy_union(&packets, horizon_us as f64 * 1e-6).unwrap();

    let mut oracle = vec![false; horizon_us];
    for p in &packets {
        let s = (p.arrival * 1e6).round() as usize;
        let e = ((p.arrival + p.airtime) * 1e6).round() as usize;
        for cell in oracle.iter_mut().take(e.min(horizon_us)).skip(s) {
            *cell = true;
        }
    }
    let mut from_union = vec![false; horizon_us];
    for &(s, e) in busy.intervals() {
        let s = (s * 1e6).round() as usize;
        let e = (e * 1e6).round() as usize;
        for cell in from_union.iter_mut().take(e).skip(s) {
            *cell = true;
        }
    }
    assert_eq!(oracle, from_union);
    for w in busy.intervals().windows(2) {
        assert!(w[0].1 < w[1].0, "intervals must be disjoint and sorted");
    }
}

#[test]
fn union_examples() {
    let us = 1e-6;
    let pk = |a: f64, d: f64| Packet {
        arrival: a * us,
        airtime: d * us,
    };
    let b = occupancy_union(&[pk(0.0, 10.0), pk(5.0, 10.0)], 1e-3).unwrap();
    assert_eq!(b.intervals().len(), 1);
    assert!((b.intervals()[0].1 - 15.0 * us).abs() < 1e-15);
    assert!(occupancy_union(&[], 1.0).unwrap().is_empty());
    // clipped to the horizon
    let b = occupancy_union(&[pk(990.0, 50.0)], 1e-3).unwrap();
    assert_eq!(b.intervals()[0].1, 1e-3);
}

#[test]
fn nodes_sharing_a_component_see_it_identically() {
    let common = sample_arrivals(&ArrivalProcess::new("c", vec![5.0]), 5.0, 1).unwrap();
    let a = compose_node_traffic(std::slice::from_ref(&common), &[], 5.0).unwrap();
    let b = compose_node_traffic(&[common], &[], 5.0).unwrap();
    assert_eq!(a, b);
    assert!(compose_node_traffic(&[], &[], 5.0).unwrap().is_empty());
}

#[test]
fn neighbor_busy_set_contains_primary() {
    let s = builtin_scenario("five-neighbor").unwrap();
    let t = ScenarioTraffic::generate(&s, 5, 5.0).unwrap();
    let primary = t.busy_set(&s, 0).unwrap();
    for n in 1..=5 {
        let nb = t.busy_set(&s, n).unwrap();
        assert!(nb.is_superset_of(&primary), "node {n}");
        assert!(nb.busy_time() > primary.busy_time());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn superposition(a in 0.0f64..400.0, b in 0.0f64..400.0, seed: u64) {
        let p = ArrivalProcess::new("ab", vec![a, b]);
        let joint = occupancy_union(&sample_arrivals(&p, 0.5, seed).unwrap(), 0.5).unwrap();
        let sep: BusyIntervalSet = (0..2)
            .map(|i| occupancy_union(&sample_component(&p, i, 0.5, seed).unwrap(), 0.5).unwrap())
            .fold(BusyIntervalSet::empty(0.5), |acc, s| acc.union(&s));
        prop_assert_eq!(joint, sep);
    }

    #[test]
    fn sampling_is_deterministic(rates in prop::collection::vec(0.0f64..300.0, 0..4), seed: u64) {
        let p = ArrivalProcess::new("d", rates);
        prop_assert_eq!(
            sample_arrivals(&p, 0.5, seed).unwrap(),
            sample_arrivals(&p, 0.5, seed).unwrap()
        );
    }

    #[test]
    fn union_is_normalized(
        raw in prop::collection::vec((0.0f64..1.0, 0.0f64..0.05), 0..60)
    ) {
        let packets: Vec<Packet> = raw
            .iter()
            .map(|&(arrival, airtime)| Packet { arrival, airtime })
            .collect();
        let b = occupancy_union(&packets, 1.0).unwrap();
        for &(s, e) in b.intervals() {
            prop_assert!(0.0 <= s && s <= e && e <= 1.0);
        }
        for w in b.intervals().windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
        for p in &packets {
            let end = p.end().min(1.0);
            prop_assert!(b.intervals().iter().any(|&(s, e)| s <= p.arrival && end <= e));
        }
    }
}
