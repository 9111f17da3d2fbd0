//! Closed-form capacity, latency extrapolation and throughput margins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::time::{PS_PER_NS, PS_PER_S, PS_PER_US};
use crate::link::LinkModel;
use crate::pipeline::{DecodeTable, StageLatencyConfig};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CapacityError {
    #[error("unknown platform profile `{0}` (known: zcu216, vcu129)")]
    UnknownProfile(String),
    #[error("profile counts must be positive")]
    InvalidProfile,
    #[error("no tree of at most {max_layers} router layers holds {required_qubits} qubits")]
    Unreachable { required_qubits: u64, max_layers: u32 },
}

/// Board counts and fixed latency figures of a root-board family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub name: String,
    pub root_ports: u32,
    pub router_children: u32,
    pub qubits_per_leaf: u32,
    pub router_processing_ps: u64,
    pub router_network_round_trip_ps: u64,
    /// Everything except the decoder on a router-less tree.
    pub base_latency_ps: u64,
}

impl PlatformProfile {
    pub const KNOWN: [&'static str; 2] = ["zcu216", "vcu129"];

    pub fn zcu216() -> Self {
        Self::with_ports("zcu216", 4)
    }

    pub fn vcu129() -> Self {
        Self::with_ports("vcu129", 34)
    }

    fn with_ports(name: &str, root_ports: u32) -> Self {
        PlatformProfile {
            name: name.to_string(),
            root_ports,
            router_children: 29,
            qubits_per_leaf: 14,
            router_processing_ps: 45 * PS_PER_NS,
            router_network_round_trip_ps: 312 * PS_PER_NS,
            base_latency_ps: 390 * PS_PER_NS,
        }
    }

    pub fn by_name(name: &str) -> Result<Self, CapacityError> {
        match name.to_ascii_lowercase().as_str() {
            "zcu216" => Ok(Self::zcu216()),
            "vcu129" => Ok(Self::vcu129()),
            _ => Err(CapacityError::UnknownProfile(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), CapacityError> {
        if self.root_ports == 0 || self.router_children == 0 || self.qubits_per_leaf == 0 {
            return Err(CapacityError::InvalidProfile);
        }
        Ok(())
    }

    pub fn router_step_ps(&self) -> u64 {
        self.router_processing_ps + self.router_network_round_trip_ps
    }
}

/// Physical qubits of a distance-`d` rotated surface code, `2d^2 - 1`.
pub fn required_qubits(d: u32) -> u64 {
    2 * (d as u64) * (d as u64) - 1
}

/// `root_ports * router_children^layers * qubits_per_leaf`, saturating.
pub fn max_qubits(profile: &PlatformProfile, router_layers: u32) -> u64 {
    (profile.root_ports as u64)
        .saturating_mul((profile.router_children as u64).saturating_pow(router_layers))
        .saturating_mul(profile.qubits_per_leaf as u64)
}

const MAX_LAYERS: u32 = 16;

/// Fewest router layers whose tree holds distance `d`.
pub fn router_layers_needed(profile: &PlatformProfile, d: u32) -> Result<u32, CapacityError> {
    profile.validate()?;
    let need = required_qubits(d);
    (0..=MAX_LAYERS)
        .find(|&l| max_qubits(profile, l) >= need)
        .ok_or(CapacityError::Unreachable { required_qubits: need, max_layers: MAX_LAYERS })
}

/// `base + decode(d) + layers * (processing + network round trip)`.
pub fn estimate_latency(d: u32, profile: &PlatformProfile, decode: &DecodeTable) -> Result<u64, CapacityError> {
    let layers = router_layers_needed(profile, d)?;
    Ok(profile.base_latency_ps + decode.lookup(d) + layers as u64 * profile.router_step_ps())
}

/// Peak decoder rate: `bits` handled every `time_ps`.
pub fn decoder_peak<T: Scalar>(bits: u64, time_ps: u64) -> T {
    T::from_u64_exact(bits) * T::from_u64_exact(PS_PER_S) / T::from_u64_exact(time_ps)
}

/// Syndrome bandwidth of distance `d`: `d^2 - 1` bits every cycle.
pub fn required_throughput<T: Scalar>(d: u32, cycle_ps: u64) -> T {
    let bits = (d as u64) * (d as u64) - 1;
    T::from_u64_exact(bits) * T::from_u64_exact(PS_PER_S) / T::from_u64_exact(cycle_ps)
}

/// Bandwidths in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputMargin<T> {
    pub required_bps: T,
    pub network_bps: T,
    pub decoder_peak_bps: T,
    pub available_bps: T,
    pub ratio: T,
}

pub fn throughput_margin<T: Scalar>(d: u32, link: &LinkModel, decoder_peak_bps: T, cycle_ps: u64) -> ThroughputMargin<T> {
    let required_bps = required_throughput::<T>(d, cycle_ps);
    let network_bps = link.effective_throughput::<T>();
    let available_bps = network_bps.min_of(decoder_peak_bps);
    ThroughputMargin {
        required_bps,
        network_bps,
        decoder_peak_bps,
        available_bps,
        ratio: available_bps / required_bps,
    }
}

/// Inputs of the scaling analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    pub profile: PlatformProfile,
    pub stages: StageLatencyConfig,
    /// Root-side links carrying the syndrome stream.
    pub link: LinkModel,
    pub decoder_bits: u64,
    pub decoder_time_ps: u64,
    pub cycle_ps: u64,
}

impl ScalingModel {
    /// Four 10 Gb/s lanes, a 440-bit syndrome every 11.5 ns at the decoder,
    /// and a 1 us measurement cycle.
    pub fn prototype(profile: PlatformProfile) -> Self {
        ScalingModel {
            profile,
            stages: StageLatencyConfig::prototype(),
            link: LinkModel {
                line_rate_bps: 10_000_000_000,
                lanes: 4,
                one_way_mean_ps: 157_000,
                jitter_half_width_ps: 0,
            },
            decoder_bits: 440,
            decoder_time_ps: 11_500,
            cycle_ps: PS_PER_US,
        }
    }

    pub fn decoder_peak<T: Scalar>(&self) -> T {
        decoder_peak(self.decoder_bits, self.decoder_time_ps)
    }

    pub fn margin<T: Scalar>(&self, d: u32) -> ThroughputMargin<T> {
        throughput_margin(d, &self.link, self.decoder_peak::<T>(), self.cycle_ps)
    }

    pub fn estimate(&self, d: u32) -> Result<CapacityEstimate, CapacityError> {
        let p = &self.profile;
        let router_layers = router_layers_needed(p, d)?;
        let decode_ps = self.stages.decode.lookup(d);
        let routers_ps = router_layers as u64 * p.router_step_ps();
        let required = required_qubits(d);
        let max = max_qubits(p, router_layers);
        let m = self.margin::<f64>(d);
        Ok(CapacityEstimate {
            distance: d,
            required_qubits: required,
            leaves_needed: required.div_ceil(p.qubits_per_leaf as u64),
            router_layers,
            max_qubits: max,
            decode_ps,
            decode_estimated: self.stages.decode.is_estimate(d),
            predicted_latency_ps: p.base_latency_ps + decode_ps + routers_ps,
            stage_sum_latency_ps: self.stages.non_decode_sum_ps() + decode_ps + routers_ps,
            throughput_required_bps: m.required_bps,
            throughput_available_bps: m.available_bps,
            margin: m.ratio,
            feasible: required <= max && m.required_bps <= m.available_bps,
        })
    }

    pub fn extrapolate(&self, distances: impl IntoIterator<Item = u32>) -> Result<Vec<CapacityEstimate>, CapacityError> {
        distances.into_iter().map(|d| self.estimate(d)).collect()
    }
}

/// One row of the scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub distance: u32,
    pub required_qubits: u64,
    pub leaves_needed: u64,
    pub router_layers: u32,
    pub max_qubits: u64,
    pub decode_ps: u64,
    pub decode_estimated: bool,
    /// Base figure plus decoder plus router add-ons.
    pub predicted_latency_ps: u64,
    /// Same, with the base replaced by the sum of measured non-decode stages.
    pub stage_sum_latency_ps: u64,
    pub throughput_required_bps: f64,
    pub throughput_available_bps: f64,
    pub margin: f64,
    pub feasible: bool,
}

/// Odd distances in `lo..=hi`.
pub fn odd_distances(lo: u32, hi: u32) -> impl Iterator<Item = u32> {
    (lo..=hi).filter(|d| d % 2 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::build_layout;
    use crate::link::{format_exact, GBPS};
    use num_rational::Ratio;

    #[test]
    fn qubit_counts() {
        assert_eq!(required_qubits(17), 577);
        assert_eq!(required_qubits(21), 881);
        assert_eq!(required_qubits(3), 17);
        for d in odd_distances(1, 25) {
            assert_eq!(required_qubits(d), build_layout(d as usize).unwrap().total_qubits() as u64);
        }
        assert_eq!(max_qubits(&PlatformProfile::vcu129(), 0), 476);
        assert_eq!(max_qubits(&PlatformProfile::zcu216(), 0), 56);
        assert_eq!(max_qubits(&PlatformProfile::vcu129(), 1), 13_804);
    }

    #[test]
    fn latency_shape() {
        let p = PlatformProfile::vcu129();
        let t = DecodeTable::prototype();
        assert_eq!(router_layers_needed(&p, 15).unwrap(), 0);
        assert_eq!(router_layers_needed(&p, 17).unwrap(), 1);
        assert_eq!(estimate_latency(3, &p, &t).unwrap(), 446_000);
        let step = estimate_latency(17, &p, &t).unwrap() - estimate_latency(15, &p, &t).unwrap();
        assert_eq!(step, 357_000);
    }

    #[test]
    fn decoder_and_margin() {
        let m = ScalingModel::prototype(PlatformProfile::vcu129());
        let peak: Ratio<i128> = m.decoder_peak();
        assert_eq!(format_exact(peak, GBPS, 2), "38.26");
        let margin = m.margin::<Ratio<i128>>(21);
        assert_eq!(margin.required_bps, Ratio::from_integer(440_000_000));
        assert_eq!(margin.available_bps, peak);
        assert_eq!(format_exact(margin.ratio, 1, 0), "87");
        assert_eq!(m.margin::<f64>(3).required_bps, 8e6);
        assert!((m.margin::<f32>(21).ratio - 86.96).abs() < 0.01);
    }

    #[test]
    fn unknown_profile() {
        assert_eq!(PlatformProfile::by_name("VCU129").unwrap(), PlatformProfile::vcu129());
        assert!(matches!(PlatformProfile::by_name("kc705"), Err(CapacityError::UnknownProfile(_))));
    }

    #[test]
    fn d21_feasible() {
        let e = ScalingModel::prototype(PlatformProfile::vcu129()).estimate(21).unwrap();
        assert!(e.feasible);
        assert_eq!(e.router_layers, 1);
        assert!(e.predicted_latency_ps < 1_000_000);
        assert_eq!(e.stage_sum_latency_ps - e.predicted_latency_ps, 5_000);
    }
}
