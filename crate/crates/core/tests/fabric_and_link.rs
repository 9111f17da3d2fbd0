use num_rational::Ratio;
use proptest::prelude::*;
use qecfabric::fabric::{global_sync, NodeClock, NodeId, Role, SimTime, SyncPath, Topology, TopologyConfig};
use qecfabric::link::{uniform_jitter, LinkChannel, LinkModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(cfg: TopologyConfig, offsets: &[i64]) -> Topology {
    let mut t = Topology::build(cfg).unwrap();
    for i in 0..t.len() {
        t.node_mut(NodeId(i as u32)).clock = NodeClock::new(offsets[i % offsets.len()], 0);
    }
    t
}

fn topology() -> impl Strategy<Value = TopologyConfig> {
    (1u32..=5, 2u32..=4, 0u32..=2).prop_flat_map(|(ports, children, layers)| {
        let cap = ports * children.pow(layers);
        (1..=cap).prop_map(move |leaves| TopologyConfig { root_ports: ports, router_children: children, router_layers: layers, leaves })
    })
}

proptest! {
    #[test]
    fn tree_shape_matches_closed_form(cfg in topology()) {
        let t = Topology::build(cfg).unwrap();
        let span = |k: u32| cfg.router_children.pow(cfg.router_layers - k + 1);
        let routers: u32 = (1..=cfg.router_layers).map(|k| cfg.leaves.div_ceil(span(k))).sum();
        prop_assert_eq!(t.len() as u32, 1 + routers + cfg.leaves);
        prop_assert_eq!(t.leaves().len() as u32, cfg.leaves);
        prop_assert_eq!(t.depth(), cfg.router_layers + 1);
        for n in t.nodes() {
            match n.role {
                Role::Leaf => prop_assert_eq!(n.depth, cfg.router_layers + 1),
                Role::Root => prop_assert_eq!(n.depth, 0),
                Role::Router => prop_assert!(n.children.len() as u32 <= cfg.router_children),
            }
        }
    }

    #[test]
    fn symmetric_sync_aligns_exactly(cfg in topology(), offsets in prop::collection::vec(-1_000_000i64..=1_000_000, 1..40), one_way in 1u64..500_000, start in 0u64..10_000_000) {
        let mut t = tree(cfg, &offsets);
        let r = global_sync(&mut t, |_| SyncPath::symmetric(one_way), SimTime::from_ps(start)).unwrap();
        prop_assert_eq!(r.max_abs_residual_ps, 0);
        prop_assert!(r.residual_ps.iter().all(|&x| x == 0));
    }

    #[test]
    fn asymmetry_leaves_half_per_edge(cfg in topology(), offsets in prop::collection::vec(-1_000_000i64..=1_000_000, 1..40), half in -50_000i64..=50_000) {
        let delta = 2 * half;
        let down = 200_000u64;
        let up = (down as i64 + delta) as u64;
        let mut t = tree(cfg, &offsets);
        let r = global_sync(&mut t, |_| SyncPath { down_ps: down, up_ps: up }, SimTime::ZERO).unwrap();
        for n in t.nodes() {
            if let Some(p) = n.parent {
                prop_assert_eq!(r.residual_ps[n.id.index()] - r.residual_ps[p.index()], half);
            }
            prop_assert_eq!(r.residual_ps[n.id.index()], half * n.depth as i64);
        }
    }

    #[test]
    fn sub_ns_alignment_below_two_ns_asymmetry(offsets in prop::collection::vec(-1_000_000i64..=1_000_000, 1..10), delta in -1_999i64..=1_999) {
        let cfg = TopologyConfig { root_ports: 4, router_children: 29, router_layers: 0, leaves: 4 };
        let mut t = tree(cfg, &offsets);
        let up = (156_000 + delta) as u64;
        let r = global_sync(&mut t, |_| SyncPath { down_ps: 156_000, up_ps: up }, SimTime::ZERO).unwrap();
        prop_assert!(r.max_abs_residual_ps < 1_000);
    }

    #[test]
    fn serialization_monotone_in_bits(rate in 1u64..=100_000_000_000, lanes in 1u32..=8, a in 0u64..100_000, b in 0u64..100_000) {
        let link = LinkModel::new(rate, lanes, 1, 0).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(link.serialization_delay(lo) <= link.serialization_delay(hi));
    }

    #[test]
    fn serialization_non_increasing_in_capacity(bits in 0u64..100_000, r1 in 1u64..=50_000_000_000, r2 in 1u64..=50_000_000_000, l1 in 1u32..=8, l2 in 1u32..=8) {
        let slow = LinkModel::new(r1, l1, 1, 0).unwrap();
        let fast = LinkModel::new(r2, l2, 1, 0).unwrap();
        if slow.aggregate_line_rate_bps() <= fast.aggregate_line_rate_bps() {
            prop_assert!(fast.serialization_delay(bits) <= slow.serialization_delay(bits));
        }
    }

    #[test]
    fn throughput_is_exact(rate in 1u64..=400_000_000_000, lanes in 1u32..=16) {
        let link = LinkModel::new(rate, lanes, 1, 0).unwrap();
        let expected = Ratio::new(rate as i128 * lanes as i128 * 64, 66);
        prop_assert_eq!(link.effective_throughput_exact(), expected);
        let f = link.effective_throughput::<f64>();
        prop_assert!((f - rate as f64 * lanes as f64 * 64.0 / 66.0).abs() <= 1e-9 * f);
    }

    #[test]
    fn transfers_are_fifo(seed in any::<u64>(), sends in prop::collection::vec((0u64..2_000_000, 0u64..4_096), 1..50)) {
        let link = LinkModel::new(10_000_000_000, 1, 157_000, 16_000).unwrap();
        let mut ch = LinkChannel::new(link);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut now = 0;
        let mut last = SimTime::ZERO;
        for (gap, bits) in sends {
            now += gap;
            let j = link.draw_jitter(&mut rng);
            prop_assert!(j.unsigned_abs() <= 16_000);
            let at = ch.transfer(bits, SimTime::from_ps(now), j);
            prop_assert!(at >= last);
            prop_assert!(at.as_ps() >= now);
            last = at;
        }
    }
}

#[test]
fn jitter_fills_its_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws: Vec<i64> = (0..10_000).map(|_| uniform_jitter(&mut rng, 16_000)).collect();
    let (lo, hi) = (*draws.iter().min().unwrap(), *draws.iter().max().unwrap());
    assert!(lo >= -16_000 && hi <= 16_000);
    assert!(lo < -15_800 && hi > 15_800, "[{lo}, {hi}]");
}
