use std::fs;
use std::path::Path;

use qecfabric::capacity::{self, odd_distances, PlatformProfile, ScalingModel};
use qecfabric::link::{format_exact, LinkModel, GBPS};
use qecfabric::pipeline::{ler_campaign, run_campaign, worst_case_d3, Pipeline, PipelineConfig, Stage};
use qecfabric::report::{self, LerRow, ReportMeta, ThroughputRow};
use qecfabric::Exact;

use crate::config::ExperimentConfig;
use crate::{CliError, Range};

/// Output location is not part of the experiment, so it stays out of the hash.
fn meta(cfg: &ExperimentConfig) -> ReportMeta {
    ReportMeta::new(&ExperimentConfig { out: None, ..cfg.clone() }, cfg.seed)
}

fn emit(cfg: &ExperimentConfig, files: &[(&str, &str)]) -> Result<(), CliError> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, body) in files {
                fs::write(dir.join(name), body)?;
            }
            print!("{}", files[0].1);
            for (name, _) in files {
                eprintln!("wrote {}", Path::new(dir).join(name).display());
            }
        }
        None => print!("{}", files[0].1),
    }
    Ok(())
}

pub fn latency(cfg: &ExperimentConfig, trace: bool) -> Result<(), CliError> {
    let pc = cfg.pipeline()?;
    let pipe = Pipeline::new(pc.clone())?;
    let report = run_campaign(&pipe, cfg.shots, cfg.seed, cfg.jobs)?;
    if let Some(bad) = report.shot_reports.iter().find(|r| !r.valid) {
        return Err(CliError::Failed(format!("shot {} produced an invalid correction", bad.shot)));
    }
    let meta = meta(cfg);
    let stages = report::stage_csv(&meta, &report, &pc.stages, pc.distance);
    let hist = report::histogram_csv(&meta, &report);
    let shots = report::shots_csv(&meta, &report);
    let summary = report::latency_json(&meta, &report, &pc.stages, pc.distance);
    let mut files = vec![
        ("latency_stages.csv", stages),
        ("latency_histogram.csv", hist),
        ("latency_shots.csv", shots),
        ("latency_summary.json", summary),
    ];
    if trace {
        files.push(("latency_trace_shot0.txt", pipe.run_shot_traced(cfg.seed, 0)?.trace));
    }
    let borrowed: Vec<(&str, &str)> = files.iter().map(|(n, b)| (*n, b.as_str())).collect();
    emit(cfg, &borrowed)?;
    eprintln!(
        "d={} router_layers={} shots={} mean={:.3} ns",
        pc.distance,
        report.router_layers,
        report.shots,
        report.end_to_end.mean_ps / 1_000.0
    );
    Ok(())
}

pub fn ler(cfg: &ExperimentConfig, distances: Option<Vec<u32>>, p: Option<f64>) -> Result<(), CliError> {
    let p = p.unwrap_or(cfg.physical_error_rate);
    let distances = distances.unwrap_or_else(|| cfg.ler_distances.clone());
    let mut rows = Vec::with_capacity(distances.len());
    for d in distances {
        let rounds = cfg.rounds.unwrap_or(d);
        PipelineConfig { distance: d, rounds, physical_error_rate: p, ..PipelineConfig::prototype() }.validate()?;
        let estimate = ler_campaign(d, rounds, p, cfg.ler_basis, cfg.shots, cfg.seed, cfg.jobs)?;
        rows.push(LerRow { distance: d, rounds, physical_error_rate: p, estimate });
    }
    let meta = meta(cfg);
    emit(cfg, &[("ler.csv", &report::ler_csv(&meta, &rows)), ("ler.json", &report::rows_json(&meta, &rows))])
}

pub fn table(cfg: &ExperimentConfig, range: Range, name: &str) -> Result<(), CliError> {
    let lo = range.d_min.unwrap_or(cfg.sweep.d_min);
    let hi = range.d_max.unwrap_or(cfg.sweep.d_max);
    let rows = cfg.scaling()?.extrapolate(odd_distances(lo, hi))?;
    let meta = meta(cfg);
    let csv = report::capacity_csv(&meta, &rows);
    let json = report::rows_json(&meta, &rows);
    emit(cfg, &[(&format!("{name}.csv"), &csv), (&format!("{name}.json"), &json)])
}

fn gbps(link: &LinkModel, decimals: u32) -> String {
    format_exact(link.effective_throughput_exact(), GBPS, decimals)
}

pub fn throughput(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let model = cfg.scaling()?;
    let wide = LinkModel { line_rate_bps: 28_000_000_000, ..model.link };
    let peak: Exact = model.decoder_peak();
    let lanes = model.link.lanes;
    let mut rows = vec![
        ThroughputRow::new("payload_efficiency", format_exact(qecfabric::link::efficiency::<Exact>(), 1, 4), "ratio"),
        ThroughputRow::new(
            &format!("network_{lanes}x{}g", model.link.line_rate_bps / 1_000_000_000),
            gbps(&model.link, 3),
            "Gb/s",
        ),
        ThroughputRow::new(&format!("network_{lanes}x28g"), gbps(&wide, 3), "Gb/s"),
        ThroughputRow::new(&format!("network_{lanes}x28g_rounded"), gbps(&wide, 1), "Gb/s"),
        ThroughputRow::new("decoder_peak_exact", format_exact(peak, GBPS, 2), "Gb/s"),
    ];
    let d = range_top(cfg);
    rows.extend(report::margin_rows(d, &model.margin::<f64>(d)));
    let meta = meta(cfg);
    emit(
        cfg,
        &[("throughput.csv", &report::throughput_csv(&meta, &rows)), ("throughput.json", &report::rows_json(&meta, &rows))],
    )
}

/// Largest odd distance of the sweep, or the run distance when the sweep is empty.
fn range_top(cfg: &ExperimentConfig) -> u32 {
    odd_distances(cfg.sweep.d_min, cfg.sweep.d_max).last().unwrap_or(cfg.distance)
}

struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

pub fn selftest() -> Result<(), CliError> {
    let mut checks = Vec::new();

    let pc = PipelineConfig::prototype().zero_jitter();
    let pipe = Pipeline::new(pc)?;
    let r = run_campaign(&pipe, 20, 1, 1)?;
    let all = r.shot_reports.iter().all(|s| s.end_to_end_ps == 451_000 && s.valid);
    checks.push(Check { name: "zero-jitter d=3 loop is 451 ns", ok: all, detail: format!("{} ps", r.end_to_end.mean_ps) });

    let pc = PipelineConfig::prototype();
    let st = &pc.stages;
    let specs = [
        (Stage::LeafAgg, st.leaf_aggregate),
        (Stage::Uplink, st.uplink),
        (Stage::RootAgg, st.root_aggregate),
        (Stage::RootDist, st.root_distribute),
        (Stage::Downlink, st.downlink),
        (Stage::LeafDist, st.leaf_distribute),
    ];
    let pipe = Pipeline::new(pc.clone())?;
    let r = run_campaign(&pipe, 200, 1, 0)?;
    let mean = r.end_to_end.mean_ps / 1_000.0;
    let in_bounds = specs.iter().all(|(s, spec)| {
        let (lo, hi) = spec.bounds();
        r.stage(*s).is_some_and(|x| x.min_ps >= lo as i64 && x.max_ps <= hi as i64)
    });
    checks.push(Check {
        name: "jittered d=3 mean in [440, 455] ns",
        ok: (440.0..=455.0).contains(&mean) && in_bounds,
        detail: format!("{mean:.3} ns"),
    });

    let model = ScalingModel::prototype(PlatformProfile::vcu129());
    let rate = gbps(&model.link, 3);
    checks.push(Check { name: "4x10G effective rate", ok: rate == "38.788", detail: format!("{rate} Gb/s") });
    let peak = format_exact(model.decoder_peak(), GBPS, 2);
    checks.push(Check { name: "decoder peak", ok: peak == "38.26", detail: format!("{peak} Gb/s") });

    let v = PlatformProfile::vcu129();
    let caps = (capacity::max_qubits(&v, 0), capacity::required_qubits(17));
    checks.push(Check { name: "vcu129 capacity", ok: caps == (476, 577), detail: format!("{} / {}", caps.0, caps.1) });

    let rows = model.extrapolate([15, 17])?;
    let step = rows[1].predicted_latency_ps - rows[0].predicted_latency_ps;
    checks.push(Check { name: "router layer step", ok: step == 357_000, detail: format!("{step} ps") });

    let wc = worst_case_d3();
    checks.push(Check {
        name: "d=3 worst-case syndrome",
        ok: !wc.syndrome.is_zero(),
        detail: format!("{} growth iterations", wc.stats.growth_iterations),
    });

    let mut failed = 0;
    for c in &checks {
        println!("{} {:<36} {}", if c.ok { "ok  " } else { "FAIL" }, c.name, c.detail);
        failed += !c.ok as usize;
    }
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
