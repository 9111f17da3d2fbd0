//! CSV and JSON rendering. Output depends only on its inputs, so equal
//! (config, seed, version) triples give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::capacity::{CapacityEstimate, ThroughputMargin};
use crate::pipeline::{CampaignReport, LerEstimate, Stage, StageLatencyConfig, StageSpec};

pub const TOOL: &str = "qecfabric";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ReportMeta {
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Self {
        ReportMeta { tool: TOOL.into(), version: VERSION.into(), config_hash: config_hash(config), seed }
    }

    fn csv_header(&self) -> String {
        format!("# {} {} config={} seed={}\n", self.tool, self.version, self.config_hash, self.seed)
    }
}

/// SHA-256 of the config's compact JSON form.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let json = serde_json::to_string(config).expect("configs serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn ns(ps: f64) -> String {
    format!("{:.3}", ps / 1_000.0)
}

fn ns_int(ps: i64) -> String {
    ns(ps as f64)
}

fn stage_spec(stages: &StageLatencyConfig, stage: Stage, distance: u32) -> Option<StageSpec> {
    Some(match stage {
        Stage::LeafAgg => stages.leaf_aggregate,
        Stage::Uplink => stages.uplink,
        Stage::RootAgg => stages.root_aggregate,
        Stage::Decode => StageSpec { mean_ps: stages.decode.lookup(distance), jitter_ps: stages.decode_jitter_ps },
        Stage::RootDist => stages.root_distribute,
        Stage::Downlink => stages.downlink,
        Stage::LeafDist => stages.leaf_distribute,
        Stage::RouterProc | Stage::RouterNet => return None,
    })
}

/// Per-stage statistics with the configured bounds alongside.
pub fn stage_csv(meta: &ReportMeta, report: &CampaignReport, stages: &StageLatencyConfig, distance: u32) -> String {
    let mut out = meta.csv_header();
    out.push_str("stage,count,mean_ns,min_ns,max_ns,p50_ns,p90_ns,p99_ns,stddev_ns,config_lo_ns,config_hi_ns\n");
    let rows = report.stages.iter().map(|(s, st)| (s.name(), Some(*s), st)).chain([("end_to_end", None, &report.end_to_end)]);
    for (name, stage, st) in rows {
        let (lo, hi) = stage
            .and_then(|s| stage_spec(stages, s, distance))
            .map(|spec| spec.bounds())
            .map(|(lo, hi)| (ns(lo as f64), ns(hi as f64)))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{},{},{lo},{hi}",
            st.count,
            ns(st.mean_ps),
            ns_int(st.min_ps),
            ns_int(st.max_ps),
            ns_int(st.p50_ps),
            ns_int(st.p90_ps),
            ns_int(st.p99_ps),
            ns(st.stddev_ps),
        );
    }
    out
}

pub fn histogram_csv(meta: &ReportMeta, report: &CampaignReport) -> String {
    let mut out = meta.csv_header();
    out.push_str("bin_lo_ns,bin_hi_ns,count\n");
    let h = &report.histogram;
    for (i, c) in h.counts.iter().enumerate() {
        let lo = h.first_bin_ps + i as i64 * h.bin_width_ps as i64;
        let _ = writeln!(out, "{},{},{c}", ns_int(lo), ns_int(lo + h.bin_width_ps as i64));
    }
    out
}

/// One row per shot: every stage interval, the total, and the decode outcome.
pub fn shots_csv(meta: &ReportMeta, report: &CampaignReport) -> String {
    let mut out = meta.csv_header();
    out.push_str("shot");
    for (s, _) in &report.stages {
        let _ = write!(out, ",{}_ps", s.name());
    }
    out.push_str(",end_to_end_ps,logical_failure,decode_iterations,trace_hash\n");
    for r in &report.shot_reports {
        let _ = write!(out, "{}", r.shot);
        for i in &r.intervals {
            let _ = write!(out, ",{}", i.ps);
        }
        let _ = writeln!(out, ",{},{},{},{}", r.end_to_end_ps, r.logical_failure as u8, r.decode_iterations, r.trace_hash);
    }
    out
}

#[derive(Serialize)]
struct StageSummary<'a> {
    stage: &'static str,
    mean_ns: f64,
    min_ns: f64,
    max_ns: f64,
    stddev_ns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    configured: Option<&'a StageSpec>,
}

#[derive(Serialize)]
struct LatencySummary<'a> {
    meta: &'a ReportMeta,
    distance: u32,
    shots: u64,
    router_layers: u32,
    decode_estimated: bool,
    end_to_end_mean_ns: f64,
    end_to_end_min_ns: f64,
    end_to_end_max_ns: f64,
    end_to_end_p99_ns: f64,
    end_to_end_stddev_ns: f64,
    stages: Vec<StageSummary<'a>>,
    ler: &'a LerEstimate,
}

fn round3(x: f64) -> f64 {
    (x * 1_000.0).round() / 1_000.0
}

pub fn latency_json(meta: &ReportMeta, report: &CampaignReport, stages: &StageLatencyConfig, distance: u32) -> String {
    let specs: Vec<Option<StageSpec>> = report.stages.iter().map(|(s, _)| stage_spec(stages, *s, distance)).collect();
    let e = &report.end_to_end;
    let summary = LatencySummary {
        meta,
        distance,
        shots: report.shots,
        router_layers: report.router_layers,
        decode_estimated: stages.decode.is_estimate(distance),
        end_to_end_mean_ns: round3(e.mean_ps / 1e3),
        end_to_end_min_ns: e.min_ps as f64 / 1e3,
        end_to_end_max_ns: e.max_ps as f64 / 1e3,
        end_to_end_p99_ns: e.p99_ps as f64 / 1e3,
        end_to_end_stddev_ns: round3(e.stddev_ps / 1e3),
        stages: report
            .stages
            .iter()
            .zip(&specs)
            .map(|((s, st), spec)| StageSummary {
                stage: s.name(),
                mean_ns: round3(st.mean_ps / 1e3),
                min_ns: st.min_ps as f64 / 1e3,
                max_ns: st.max_ps as f64 / 1e3,
                stddev_ns: round3(st.stddev_ps / 1e3),
                configured: spec.as_ref(),
            })
            .collect(),
        ler: &report.ler,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
}

/// Row of the logical error rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LerRow {
    pub distance: u32,
    pub rounds: u32,
    pub physical_error_rate: f64,
    pub estimate: LerEstimate,
}

pub fn ler_csv(meta: &ReportMeta, rows: &[LerRow]) -> String {
    let mut out = meta.csv_header();
    out.push_str("distance,rounds,p,shots,failures,ler,ci95_lo,ci95_hi\n");
    for r in rows {
        let e = &r.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{:.6e},{:.6e}",
            r.distance, r.rounds, r.physical_error_rate, e.shots, e.failures, e.rate, e.ci_low, e.ci_high
        );
    }
    out
}

pub const CAPACITY_COLUMNS: &str = "distance,qubits,leaves,router_layers,max_qubits,decode_ns,decode_estimated,\
latency_ns,stage_sum_latency_ns,required_mbps,available_gbps,margin,feasible";

/// The scaling table shared by the `capacity` and `extrapolate` commands.
pub fn capacity_csv(meta: &ReportMeta, rows: &[CapacityEstimate]) -> String {
    let mut out = meta.csv_header();
    out.push_str(CAPACITY_COLUMNS);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.2},{}",
            r.distance,
            r.required_qubits,
            r.leaves_needed,
            r.router_layers,
            r.max_qubits,
            ns(r.decode_ps as f64),
            r.decode_estimated,
            ns(r.predicted_latency_ps as f64),
            ns(r.stage_sum_latency_ps as f64),
            r.throughput_required_bps / 1e6,
            r.throughput_available_bps / 1e9,
            r.margin,
            r.feasible,
        );
    }
    out
}

#[derive(Serialize)]
struct Table<'a, R> {
    meta: &'a ReportMeta,
    rows: &'a [R],
}

pub fn rows_json<R: Serialize>(meta: &ReportMeta, rows: &[R]) -> String {
    serde_json::to_string_pretty(&Table { meta, rows }).expect("rows serialize") + "\n"
}

/// Named bandwidth figure, already formatted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThroughputRow {
    pub quantity: String,
    pub value: String,
    pub unit: String,
}

impl ThroughputRow {
    pub fn new(quantity: &str, value: String, unit: &str) -> Self {
        ThroughputRow { quantity: quantity.into(), value, unit: unit.into() }
    }
}

pub fn throughput_csv(meta: &ReportMeta, rows: &[ThroughputRow]) -> String {
    let mut out = meta.csv_header();
    out.push_str("quantity,value,unit\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.quantity, r.value, r.unit);
    }
    out
}

/// Rows for one distance's margin, in Gb/s except the ratio.
pub fn margin_rows(d: u32, m: &ThroughputMargin<f64>) -> Vec<ThroughputRow> {
    vec![
        ThroughputRow::new(&format!("required_d{d}"), format!("{:.3}", m.required_bps / 1e9), "Gb/s"),
        ThroughputRow::new("network_effective", format!("{:.3}", m.network_bps / 1e9), "Gb/s"),
        ThroughputRow::new("decoder_peak", format!("{:.2}", m.decoder_peak_bps / 1e9), "Gb/s"),
        ThroughputRow::new("available", format!("{:.2}", m.available_bps / 1e9), "Gb/s"),
        ThroughputRow::new(&format!("margin_d{d}"), format!("{:.1}", m.ratio), "x"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{PlatformProfile, ScalingModel};
    use crate::pipeline::{run_campaign, Pipeline, PipelineConfig};

    #[test]
    fn hash_tracks_config() {
        let a = PipelineConfig::prototype();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.distance = 5;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = PipelineConfig::prototype();
        let pipe = Pipeline::new(cfg.clone()).unwrap();
        let meta = ReportMeta::new(&cfg, 7);
        let render = || {
            let r = run_campaign(&pipe, 5, 7, 1).unwrap();
            (stage_csv(&meta, &r, &cfg.stages, 3), latency_json(&meta, &r, &cfg.stages, 3), shots_csv(&meta, &r))
        };
        assert_eq!(render(), render());
        let (csv, json, _) = render();
        assert!(csv.lines().nth(1).unwrap().starts_with("stage,count"));
        assert_eq!(csv.lines().count(), 2 + 7 + 1);
        assert!(json.contains(&meta.config_hash));
    }

    #[test]
    fn capacity_table_columns() {
        let m = ScalingModel::prototype(PlatformProfile::vcu129());
        let rows = m.extrapolate([3, 17]).unwrap();
        let csv = capacity_csv(&ReportMeta::new(&m, 0), &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], CAPACITY_COLUMNS);
        assert!(lines[2].starts_with("3,17,2,0,476,56.000,false,446.000,451.000,8.000,38.261,"));
        assert!(lines[3].starts_with("17,577,42,1,13804,"));
        let empty = capacity_csv(&ReportMeta::new(&m, 0), &[]);
        assert_eq!(empty.lines().count(), 2);
    }
}
