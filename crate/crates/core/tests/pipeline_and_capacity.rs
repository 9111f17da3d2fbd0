use std::collections::BTreeMap;

use proptest::prelude::*;
use qecfabric::capacity::{self, odd_distances, PlatformProfile, ScalingModel};
use qecfabric::code_model::{build_layout, FaultId};
use qecfabric::pipeline::{
    run_campaign, DecodeTable, JitterMode, Pipeline, PipelineConfig, PipelineError, RoutedFault, Stage,
};

fn pipeline(d: u32, mode: JitterMode) -> Pipeline {
    let mut cfg = PipelineConfig::prototype().with_distance(d);
    cfg.jitter_mode = mode;
    cfg.physical_error_rate = 0.01;
    Pipeline::new(cfg).unwrap()
}

fn mode() -> impl Strategy<Value = JitterMode> {
    prop_oneof![Just(JitterMode::CommonMode), Just(JitterMode::PerNode)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shot_accounting(d in prop_oneof![Just(3u32), Just(5), Just(7)], m in mode(), seed in any::<u64>(), shot in 0u64..1_000) {
        let pipe = pipeline(d, m);
        let t = pipe.run_shot_traced(seed, shot).unwrap();
        let r = &t.report;
        prop_assert_eq!(r.intervals.iter().map(|i| i.ps).sum::<i64>(), r.end_to_end_ps);
        prop_assert!(r.intervals.iter().all(|i| i.ps >= 0));
        prop_assert_eq!(r.syndrome_bits_received, (d as u64 * d as u64 - 1) * d as u64);
        prop_assert!(r.valid);

        let layout = pipe.layout();
        let map = pipe.leaf_map();
        let mut applied: [Vec<FaultId>; 2] = [Vec::new(), Vec::new()];
        for msg in &t.correction_messages {
            for RoutedFault { sector, fault } in &msg.faults {
                prop_assert_eq!(map.owner(layout, *sector, *fault) as u32, msg.leaf);
                applied[sector.index()].push(pipe.graph(*sector).fault_id(*fault).unwrap());
            }
        }
        for (s, mut got) in applied.into_iter().enumerate() {
            got.sort_unstable();
            prop_assert_eq!(&got, &t.corrections[s].faults);
        }
        let total: usize = t.corrections.iter().map(|c| c.weight()).sum();
        prop_assert_eq!(r.correction_faults, total as u64);
    }

    #[test]
    fn zero_jitter_timing_ignores_seed(d in prop_oneof![Just(3u32), Just(5)], seed in any::<u64>(), shot in 0u64..100) {
        let pipe = Pipeline::new(PipelineConfig::prototype().with_distance(d).zero_jitter()).unwrap();
        let a = pipe.run_shot(seed, shot).unwrap();
        let b = pipe.run_shot(seed.wrapping_add(1), shot + 1).unwrap();
        prop_assert_eq!(&a.intervals, &b.intervals);
        prop_assert_eq!(a.end_to_end_ps, 395_000 + DecodeTable::prototype().lookup(d) as i64);
        prop_assert_eq!(&a, &pipe.run_shot(seed, shot).unwrap());
    }

    #[test]
    fn latency_non_decreasing_in_distance(anchors in prop::collection::vec(1u64..400, 1..6), ports in 1u32..40) {
        let mut acc = 0;
        let points: BTreeMap<u32, u64> = anchors.iter().enumerate().map(|(i, step)| {
            acc += step * 1_000;
            (3 + 2 * i as u32, acc)
        }).collect();
        let table = DecodeTable::new(points).unwrap();
        let profile = PlatformProfile { root_ports: ports, ..PlatformProfile::vcu129() };
        let lat: Vec<u64> = odd_distances(3, 41).map(|d| capacity::estimate_latency(d, &profile, &table).unwrap()).collect();
        prop_assert!(lat.windows(2).all(|w| w[0] <= w[1]), "{:?}", lat);
    }

    #[test]
    fn router_step_is_the_configured_add_on(proc_ns in 0u64..200, net_ns in 0u64..1_000) {
        let profile = PlatformProfile {
            router_processing_ps: proc_ns * 1_000,
            router_network_round_trip_ps: net_ns * 1_000,
            ..PlatformProfile::vcu129()
        };
        let flat = DecodeTable::new([(3, 100_000)].into_iter().collect()).unwrap();
        let step = capacity::estimate_latency(17, &profile, &flat).unwrap() - capacity::estimate_latency(15, &profile, &flat).unwrap();
        prop_assert_eq!(step, (proc_ns + net_ns) * 1_000);
    }

    #[test]
    fn feasibility_matches_its_definition(d in (1u32..30).prop_map(|x| 2 * x + 1), ports in 1u32..40, cycle_ns in 1u64..2_000) {
        let mut m = ScalingModel::prototype(PlatformProfile { root_ports: ports, ..PlatformProfile::vcu129() });
        m.cycle_ps = cycle_ns * 1_000;
        let e = m.estimate(d).unwrap();
        let layers_minimal = e.router_layers == 0 || capacity::max_qubits(&m.profile, e.router_layers - 1) < e.required_qubits;
        prop_assert!(layers_minimal);
        prop_assert_eq!(e.feasible, e.required_qubits <= e.max_qubits && e.throughput_required_bps <= e.throughput_available_bps);
        prop_assert_eq!(e.leaves_needed, e.required_qubits.div_ceil(14));
    }
}

#[test]
fn required_qubits_match_layouts() {
    for d in odd_distances(1, 31) {
        assert_eq!(capacity::required_qubits(d), build_layout(d as usize).unwrap().total_qubits() as u64);
    }
}

#[test]
fn d21_is_feasible_under_a_microsecond() {
    let e = ScalingModel::prototype(PlatformProfile::vcu129()).estimate(21).unwrap();
    assert!(e.feasible);
    assert!(e.predicted_latency_ps < 1_000_000);
}

#[test]
fn stage_jitter_reaches_its_bounds() {
    let cfg = PipelineConfig::prototype();
    let pipe = Pipeline::new(cfg.clone()).unwrap();
    let report = run_campaign(&pipe, 10_000, 21, 0).unwrap();
    let s = &cfg.stages;
    for (stage, spec) in [
        (Stage::LeafAgg, s.leaf_aggregate),
        (Stage::Uplink, s.uplink),
        (Stage::RootAgg, s.root_aggregate),
        (Stage::RootDist, s.root_distribute),
        (Stage::Downlink, s.downlink),
        (Stage::LeafDist, s.leaf_distribute),
    ] {
        let st = report.stage(stage).unwrap();
        let (lo, hi) = spec.bounds();
        let slack = (spec.jitter_ps / 20) as i64;
        assert!(st.min_ps >= lo as i64 && st.max_ps <= hi as i64, "{stage}: [{}, {}]", st.min_ps, st.max_ps);
        assert!(st.min_ps <= lo as i64 + slack && st.max_ps >= hi as i64 - slack, "{stage} does not approach its bounds");
    }
}

#[test]
fn traces_repeat_for_equal_seeds() {
    let pipe = pipeline(5, JitterMode::PerNode);
    for shot in 0..5 {
        let a = pipe.run_shot_traced(3, shot).unwrap();
        let b = pipe.run_shot_traced(3, shot).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.report.trace_hash, b.report.trace_hash);
    }
    assert_ne!(pipe.run_shot(3, 0).unwrap().trace_hash, pipe.run_shot(4, 0).unwrap().trace_hash);
}

#[test]
fn worker_count_does_not_change_results() {
    let pipe = pipeline(3, JitterMode::CommonMode);
    assert_eq!(run_campaign(&pipe, 300, 8, 1).unwrap(), run_campaign(&pipe, 300, 8, 4).unwrap());
}

#[test]
fn capacity_overflow_is_reported() {
    let mut cfg = PipelineConfig::prototype().with_distance(17);
    cfg.root_ports = 34;
    cfg.router_layers = Some(0);
    assert!(matches!(Pipeline::new(cfg), Err(PipelineError::Capacity { required_qubits: 577, max_qubits: 476, .. })));
}
