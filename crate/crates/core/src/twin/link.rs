//! Seeded latency/jitter/drop model and a time-ordered in-flight queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TwinError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Mean one-way latency, s.
    pub latency: f64,
    /// Standard deviation of the latency, s.
    pub jitter: f64,
    pub drop_probability: f64,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            latency: 0.0,
            jitter: 0.0,
            drop_probability: 0.0,
            seed: 0,
        }
    }
}

impl LinkConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), TwinError> {
        if !(self.latency >= 0.0 && self.latency.is_finite()) {
            return Err(TwinError::InvalidLink("latency must be finite and non-negative"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(TwinError::InvalidLink("jitter must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(TwinError::InvalidLink("drop probability must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-message delivery decisions. Every call draws one uniform (drop test)
/// followed by one standard normal (jitter), whether or not the message is
/// dropped, so the schedule depends only on the seed and the call count.
#[derive(Clone, Debug)]
pub struct SimLink {
    cfg: LinkConfig,
    rng: ChaCha8Rng,
}

impl SimLink {
    pub fn new(cfg: LinkConfig) -> Result<Self, TwinError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    /// Delivery time for a message sent at `send_time`, or `None` if dropped.
    pub fn deliver_time(&mut self, send_time: f64) -> Option<f64> {
        let u: f64 = self.rng.random();
        let z: f64 = self.rng.sample(StandardNormal);
        if u < self.cfg.drop_probability {
            return None;
        }
        Some(send_time + (self.cfg.latency + self.cfg.jitter * z).max(0.0))
    }

    pub fn deliver<M>(&mut self, send_time: f64, msg: M) -> Option<(f64, M)> {
        self.deliver_time(send_time).map(|t| (t, msg))
    }
}

struct InFlight<M> {
    at: f64,
    order: u64,
    msg: M,
}

impl<M> PartialEq for InFlight<M> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<M> Eq for InFlight<M> {}

impl<M> PartialOrd for InFlight<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for InFlight<M> {
    // reversed: BinaryHeap is a max-heap and we pop the earliest arrival
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then_with(|| other.order.cmp(&self.order))
    }
}

/// Messages in flight, released in arrival order (ties by send order).
pub struct LinkQueue<M> {
    heap: BinaryHeap<InFlight<M>>,
    sent: u64,
}

impl<M> Default for LinkQueue<M> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            sent: 0,
        }
    }
}

impl<M> LinkQueue<M> {
    pub fn push(&mut self, at: f64, msg: M) {
        self.heap.push(InFlight {
            at,
            order: self.sent,
            msg,
        });
        self.sent += 1;
    }

    /// Removes and returns every message due at or before `now`.
    pub fn pop_due(&mut self, now: f64) -> Vec<(f64, M)> {
        let mut out = Vec::new();
        while self.heap.peek().is_some_and(|m| m.at <= now) {
            let m = self.heap.pop().expect("peeked");
            out.push((m.at, m.msg));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_latency() {
        let mut link = SimLink::new(LinkConfig {
            latency: 0.05,
            ..LinkConfig::default()
        })
        .unwrap();
        for k in 0..100 {
            let t = k as f64 * 0.008;
            assert_eq!(link.deliver_time(t), Some(t + 0.05));
        }
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            LinkConfig {
                drop_probability: 1.0,
                ..Default::default()
            },
            LinkConfig {
                latency: -0.1,
                ..Default::default()
            },
            LinkConfig {
                jitter: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(SimLink::new(cfg).is_err());
        }
    }

    #[test]
    fn queue_orders_by_arrival() {
        let mut q = LinkQueue::default();
        q.push(0.3, "c");
        q.push(0.1, "a");
        q.push(0.1, "b");
        q.push(0.5, "d");
        let due: Vec<_> = q.pop_due(0.3).into_iter().map(|m| m.1).collect();
        assert_eq!(due, vec!["a", "b", "c"]);
        assert_eq!(q.len(), 1);
    }
}
