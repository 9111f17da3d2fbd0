//! 64B/66B-framed point-to-point links.
//!
//! Only the rate and framing consequences of the line code are modelled:
//! every 64 payload bits occupy 66 bits on the wire. The measured one-way
//! latency already covers one frame, so only frames beyond the first add
//! serialization time to a transfer.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::SimTime;
use crate::scalar::Scalar;

pub const PAYLOAD_BITS_PER_FRAME: u64 = 64;
pub const WIRE_BITS_PER_FRAME: u64 = 66;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("one-way latency mean must be positive")]
    ZeroLatency,
    #[error("a link needs at least one lane")]
    NoLanes,
}

/// Payload fraction of the line rate, `64/66`.
pub fn efficiency<T: Scalar>() -> T {
    T::ratio(PAYLOAD_BITS_PER_FRAME, WIRE_BITS_PER_FRAME)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Per-lane line rate in bits per second.
    pub line_rate_bps: u64,
    pub lanes: u32,
    pub one_way_mean_ps: u64,
    /// Jitter is uniform over `[-half_width, +half_width]`.
    pub jitter_half_width_ps: u64,
}

impl LinkModel {
    pub fn new(line_rate_bps: u64, lanes: u32, one_way_mean_ps: u64, jitter_half_width_ps: u64) -> Result<Self, LinkError> {
        if one_way_mean_ps == 0 {
            return Err(LinkError::ZeroLatency);
        }
        if lanes == 0 {
            return Err(LinkError::NoLanes);
        }
        Ok(LinkModel { line_rate_bps, lanes, one_way_mean_ps, jitter_half_width_ps })
    }

    /// Leaf-to-root direction of the prototype: one 10 Gb/s lane, 157 ± 16 ns.
    pub fn prototype_uplink() -> Self {
        LinkModel { line_rate_bps: 10_000_000_000, lanes: 1, one_way_mean_ps: 157_000, jitter_half_width_ps: 16_000 }
    }

    /// Root-to-leaf direction of the prototype: one 10 Gb/s lane, 155 ± 9 ns.
    pub fn prototype_downlink() -> Self {
        LinkModel { line_rate_bps: 10_000_000_000, lanes: 1, one_way_mean_ps: 155_000, jitter_half_width_ps: 9_000 }
    }

    pub fn aggregate_line_rate_bps(&self) -> u64 {
        self.line_rate_bps * self.lanes as u64
    }

    /// `lanes * line_rate * 64/66` in bits per second.
    pub fn effective_throughput<T: Scalar>(&self) -> T {
        T::from_u64_exact(self.aggregate_line_rate_bps()) * efficiency::<T>()
    }

    /// Exact effective throughput.
    pub fn effective_throughput_exact(&self) -> Ratio<i128> {
        self.effective_throughput::<Ratio<i128>>()
    }

    pub fn frames(payload_bits: u64) -> u64 {
        payload_bits.div_ceil(PAYLOAD_BITS_PER_FRAME)
    }

    /// Time to clock `payload_bits` onto the wire, rounded up to whole
    /// picoseconds. Saturates on a zero-rate link.
    pub fn serialization_delay(&self, payload_bits: u64) -> SimTime {
        let wire_bits = Self::frames(payload_bits) as u128 * WIRE_BITS_PER_FRAME as u128;
        if wire_bits == 0 {
            return SimTime::ZERO;
        }
        let rate = self.aggregate_line_rate_bps() as u128;
        if rate == 0 {
            return SimTime::MAX;
        }
        let ps = (wire_bits * crate::fabric::time::PS_PER_S as u128).div_ceil(rate);
        SimTime::from_ps(ps.min(u64::MAX as u128) as u64)
    }

    /// Serialization beyond the first frame.
    pub fn extra_serialization(&self, payload_bits: u64) -> SimTime {
        if payload_bits <= PAYLOAD_BITS_PER_FRAME {
            return SimTime::ZERO;
        }
        self.serialization_delay(payload_bits).saturating_sub(self.serialization_delay(PAYLOAD_BITS_PER_FRAME))
    }

    /// Uniform integer draw in `[-half_width, +half_width]` ps.
    pub fn draw_jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        uniform_jitter(rng, self.jitter_half_width_ps)
    }
}

pub fn uniform_jitter<R: Rng + ?Sized>(rng: &mut R, half_width_ps: u64) -> i64 {
    if half_width_ps == 0 {
        return 0;
    }
    let hw = half_width_ps as i64;
    rng.gen_range(-hw..=hw)
}

/// Sending side of one link direction. Deliveries never overtake each other.
#[derive(Debug, Clone)]
pub struct LinkChannel {
    pub model: LinkModel,
    last_delivery: SimTime,
}

impl LinkChannel {
    pub fn new(model: LinkModel) -> Self {
        LinkChannel { model, last_delivery: SimTime::ZERO }
    }

    /// Delivery time of a message of `payload_bits` sent at `now` with a
    /// pre-drawn jitter. FIFO: never earlier than the previous delivery.
    pub fn transfer(&mut self, payload_bits: u64, now: SimTime, jitter_ps: i64) -> SimTime {
        let nominal = now + self.model.extra_serialization(payload_bits) + SimTime(self.model.one_way_mean_ps);
        let at = nominal.checked_offset(jitter_ps).unwrap_or(now).max(now).max(self.last_delivery);
        self.last_delivery = at;
        at
    }
}

/// Formats an exact non-negative ratio in units of `unit` with `decimals`
/// digits, rounding half up.
pub fn format_exact(value: Ratio<i128>, unit: i128, decimals: u32) -> String {
    let scale = 10i128.pow(decimals);
    let scaled = Ratio::new(*value.numer() * scale, *value.denom() * unit);
    let rounded = (scaled + Ratio::new(1, 2)).floor().to_integer();
    let (int, frac) = (rounded / scale, rounded % scale);
    if decimals == 0 {
        int.to_string()
    } else {
        format!("{int}.{frac:0width$}", width = decimals as usize)
    }
}

pub const GBPS: i128 = 1_000_000_000;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn link(lanes: u32, gbps: u64) -> LinkModel {
        LinkModel::new(gbps * 1_000_000_000, lanes, 156_000, 0).unwrap()
    }

    #[test]
    fn throughput_of_prototype_links() {
        assert_eq!(format_exact(link(4, 10).effective_throughput_exact(), GBPS, 3), "38.788");
        assert_eq!(format_exact(link(4, 28).effective_throughput_exact(), GBPS, 3), "108.606");
        assert_eq!(format_exact(link(4, 28).effective_throughput_exact(), GBPS, 1), "108.6");
        assert_eq!(link(1, 0).effective_throughput::<f64>(), 0.0);
        let f32_rate: f32 = link(4, 10).effective_throughput();
        assert!((f32_rate / 1e9 - 38.788).abs() < 1e-3);
    }

    #[test]
    fn overhead_is_two_of_sixty_six() {
        let overhead = Ratio::from_integer(1) - efficiency::<Ratio<i64>>();
        assert_eq!(overhead, Ratio::new(1, 33));
        assert_eq!(format!("{:.2}", overhead.to_f64_lossy() * 100.0), "3.03");
    }

    #[test]
    fn serialization_frames() {
        let l = link(1, 10);
        assert_eq!(LinkModel::frames(13), 1);
        assert_eq!(l.serialization_delay(0), SimTime::ZERO);
        assert_eq!(l.serialization_delay(440), SimTime::from_ps(46_200));
        assert_eq!(l.extra_serialization(13), SimTime::ZERO);
        assert_eq!(l.extra_serialization(64), SimTime::ZERO);
        assert_eq!(l.extra_serialization(65), SimTime::from_ps(6_600));
        assert_eq!(link(1, 0).serialization_delay(1), SimTime::MAX);
    }

    #[test]
    fn zero_jitter_transfer_is_mean() {
        let mut up = LinkChannel::new(LinkModel::prototype_uplink());
        assert_eq!(up.transfer(8, SimTime::ZERO, 0), SimTime::from_ns(157));
        let mut down = LinkChannel::new(LinkModel::prototype_downlink());
        assert_eq!(down.transfer(8, SimTime::from_ns(10), 0), SimTime::from_ns(165));
    }

    #[test]
    fn fifo_under_jitter() {
        let mut ch = LinkChannel::new(LinkModel::prototype_uplink());
        let first = ch.transfer(8, SimTime::ZERO, 16_000);
        let second = ch.transfer(8, SimTime::from_ps(1), -16_000);
        assert!(second >= first);
    }

    #[test]
    fn jitter_within_bounds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let l = LinkModel::prototype_uplink();
        let draws: Vec<i64> = (0..10_000).map(|_| l.draw_jitter(&mut rng)).collect();
        assert!(draws.iter().all(|j| j.abs() <= 16_000));
        assert!(*draws.iter().min().unwrap() < -15_000);
        assert!(*draws.iter().max().unwrap() > 15_000);
    }

    #[test]
    fn rejects_bad_links() {
        assert_eq!(LinkModel::new(1, 1, 0, 0), Err(LinkError::ZeroLatency));
        assert_eq!(LinkModel::new(1, 0, 1, 0), Err(LinkError::NoLanes));
    }
}
