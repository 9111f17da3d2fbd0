//! Sequential discrete-event core.
//!
//! Events fire in `(time, sequence)` order, where the sequence number is the
//! insertion order. Nothing else influences ordering, so a run is a pure
//! function of what was scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use super::time::SimTime;
use super::{NodeId, SimError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        (self.0.time, self.0.seq) == (other.0.time, other.0.seq)
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap; invert so the earliest event pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.time, other.0.seq).cmp(&(self.0.time, self.0.seq))
    }
}

/// One line of the event trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.time.as_ps(), self.node, self.kind)
    }
}

pub struct Engine<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    trace: Option<Vec<TraceRecord>>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    pub fn new() -> Self {
        Engine { now: SimTime::ZERO, next_seq: 0, queue: BinaryHeap::new(), trace: None }
    }

    pub fn with_trace() -> Self {
        Engine { trace: Some(Vec::new()), ..Self::new() }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Queues `payload` for `target` at `time`; returns the sequence number.
    pub fn schedule(&mut self, time: SimTime, target: NodeId, payload: P) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::ScheduleInPast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event { time, seq, target, payload }));
        Ok(seq)
    }

    pub fn schedule_after(&mut self, delay: SimTime, target: NodeId, payload: P) -> Result<u64, SimError> {
        self.schedule(self.now + delay, target, payload)
    }

    /// Pops the next event at or before `limit`, advancing the clock.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Event<P>> {
        if self.queue.peek().is_some_and(|q| q.0.time <= limit) {
            let Queued(event) = self.queue.pop()?;
            self.now = event.time;
            Some(event)
        } else {
            None
        }
    }

    /// Processes every event with time `<= limit`; handlers may schedule more.
    /// Returns the number of events processed.
    pub fn run_until<F>(&mut self, limit: SimTime, mut handler: F) -> Result<usize, SimError>
    where
        F: FnMut(&mut Engine<P>, Event<P>) -> Result<(), SimError>,
    {
        let mut processed = 0;
        while let Some(event) = self.pop_until(limit) {
            processed += 1;
            handler(self, event)?;
        }
        if limit > self.now && limit != SimTime::MAX {
            self.now = limit;
        }
        Ok(processed)
    }

    pub fn record(&mut self, node: NodeId, kind: impl Into<String>) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord { time: self.now, node, kind: kind.into() });
        }
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Line-delimited trace dump.
    pub fn trace_dump(&self) -> String {
        let mut out = String::new();
        for r in self.trace() {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    pub fn trace_hash(&self) -> String {
        hex::encode(Sha256::digest(self.trace_dump().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_queue_processes_nothing() {
        let mut e: Engine<()> = Engine::new();
        assert_eq!(e.run_until(SimTime::from_ns(10), |_, _| Ok(())).unwrap(), 0);
        assert_eq!(e.now(), SimTime::from_ns(10));
    }

    #[test]
    fn equal_times_run_in_insertion_order() {
        let mut e = Engine::new();
        for i in 0..5u32 {
            e.schedule(SimTime::from_ns(3), NodeId(0), i).unwrap();
        }
        e.schedule(SimTime::from_ns(1), NodeId(0), 99).unwrap();
        let mut seen = Vec::new();
        e.run_until(SimTime::MAX, |_, ev| {
            seen.push(ev.payload);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![99, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn past_scheduling_rejected() {
        let mut e = Engine::new();
        e.schedule(SimTime::from_ns(5), NodeId(1), ()).unwrap();
        e.run_until(SimTime::from_ns(5), |_, _| Ok(())).unwrap();
        assert!(matches!(e.schedule(SimTime::from_ns(4), NodeId(1), ()), Err(SimError::ScheduleInPast { .. })));
    }

    #[test]
    fn handlers_can_chain_events() {
        let mut e = Engine::with_trace();
        e.schedule(SimTime::ZERO, NodeId(0), 3u32).unwrap();
        let n = e
            .run_until(SimTime::MAX, |eng, ev| {
                eng.record(ev.target, format!("hop{}", ev.payload));
                if ev.payload > 0 {
                    eng.schedule_after(SimTime::from_ns(1), NodeId(ev.target.0 + 1), ev.payload - 1)?;
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(n, 4);
        assert_eq!(e.trace_dump().lines().last(), Some("3000 node3 hop0"));
        assert_eq!(e.trace_hash().len(), 64);
    }
}
