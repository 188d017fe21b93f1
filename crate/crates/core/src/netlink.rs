//! Simulated one-way links with latency, bounded jitter and loss.
//!
//! Deliveries are in send order: a packet never overtakes one sent before
//! it, so its delivery time is pushed back to the previous packet's if the
//! jitter draw would have made it arrive earlier.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::camera::PixelPoint;
use crate::perception::{CameraPose, MarkerObservation};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub latency_mean: f64,
    /// Half-width of the uniform jitter window.
    pub latency_jitter: f64,
    pub loss_prob: f64,
}

impl ChannelParams {
    pub const IDEAL: ChannelParams = ChannelParams {
        latency_mean: 0.0,
        latency_jitter: 0.0,
        loss_prob: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.latency_mean >= 0.0 && self.latency_mean.is_finite()) {
            return Err(Error::param("latency_mean", "must be non-negative"));
        }
        if !(self.latency_jitter >= 0.0 && self.latency_jitter.is_finite()) {
            return Err(Error::param("latency_jitter", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(Error::param("loss_prob", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.latency_mean == 0.0 && self.latency_jitter == 0.0 && self.loss_prob == 0.0
    }
}

/// Counters for the conservation check `delivered + dropped + in_flight = sent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone)]
pub struct Channel<T> {
    params: ChannelParams,
    queue: VecDeque<(f64, T)>,
    rng: SimRng,
    last_send: f64,
    last_deliver_at: f64,
    stats: ChannelStats,
}

impl<T> Channel<T> {
    pub fn new(params: ChannelParams, rng: SimRng) -> Self {
        Self {
            params,
            queue: VecDeque::new(),
            rng,
            last_send: f64::NEG_INFINITY,
            last_deliver_at: f64::NEG_INFINITY,
            stats: ChannelStats::default(),
        }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// Offers a payload at time `now`. Returns whether it was enqueued.
    ///
    /// Every send consumes exactly two uniform draws (loss, jitter).
    pub fn send(&mut self, payload: T, now: f64) -> Result<bool> {
        if now < self.last_send {
            return Err(Error::NonMonotonicSend {
                now,
                last: self.last_send,
            });
        }
        self.last_send = now;
        self.stats.sent += 1;
        let loss: f64 = self.rng.random();
        let unit: f64 = self.rng.random();
        if loss < self.params.loss_prob {
            self.stats.dropped += 1;
            return Ok(false);
        }
        let jitter = (2.0 * unit - 1.0) * self.params.latency_jitter;
        let delay = (self.params.latency_mean + jitter).max(0.0);
        let deliver_at = (now + delay).max(self.last_deliver_at);
        self.last_deliver_at = deliver_at;
        self.queue.push_back((deliver_at, payload));
        Ok(true)
    }

    /// Removes and returns everything due by `now`, in delivery order.
    pub fn poll(&mut self, now: f64) -> Vec<T> {
        let mut out = Vec::new();
        while let Some((at, _)) = self.queue.front() {
            if *at > now {
                break;
            }
            if let Some((_, p)) = self.queue.pop_front() {
                out.push(p);
            }
        }
        self.stats.delivered += out.len() as u64;
        out
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    /// Delivery time of the next queued payload.
    pub fn next_delivery(&self) -> Option<f64> {
        self.queue.front().map(|(at, _)| *at)
    }
}

/// Distance and steering angle sent to the ground robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandMsg {
    pub t_sent: f64,
    pub d: f64,
    pub alpha: f64,
    pub waypoint_id: u64,
}

/// A video frame reduced to what the station extracts from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementMsg {
    pub t_sent: f64,
    pub obs: MarkerObservation,
    /// Camera position reported alongside the frame.
    pub camera: CameraPose,
}

impl MeasurementMsg {
    pub fn rc(&self) -> PixelPoint {
        self.obs.rc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn ch(params: ChannelParams, seed: u64) -> Channel<u32> {
        Channel::new(params, rng::stream(seed, rng::COMMAND_LINK))
    }

    #[test]
    fn total_loss_delivers_nothing() {
        let mut c = ch(ChannelParams { loss_prob: 1.0, ..ChannelParams::IDEAL }, 1);
        for i in 0..100 {
            assert!(!c.send(i, i as f64).unwrap());
        }
        assert!(c.poll(1e9).is_empty());
        assert_eq!(c.stats().dropped, 100);
    }

    #[test]
    fn ideal_link_delivers_immediately() {
        let mut c = ch(ChannelParams::IDEAL, 1);
        c.send(7, 0.25).unwrap();
        assert_eq!(c.poll(0.25), alloc::vec![7]);
    }

    #[test]
    fn empty_poll() {
        let mut c = ch(ChannelParams::IDEAL, 1);
        assert!(c.poll(10.0).is_empty());
    }

    #[test]
    fn send_order_is_kept() {
        let mut c = ch(ChannelParams { latency_mean: 0.05, ..ChannelParams::IDEAL }, 1);
        c.send(1, 0.0).unwrap();
        c.send(2, 0.01).unwrap();
        assert!(c.poll(0.049).is_empty());
        assert_eq!(c.poll(0.061), alloc::vec![1, 2]);
    }

    #[test]
    fn send_time_must_not_go_backwards() {
        let mut c = ch(ChannelParams::IDEAL, 1);
        c.send(1, 1.0).unwrap();
        assert!(matches!(c.send(2, 0.5), Err(Error::NonMonotonicSend { .. })));
    }

    #[test]
    fn drop_pattern_is_reproducible() {
        let params = ChannelParams { loss_prob: 0.1, ..ChannelParams::IDEAL };
        let pattern = |seed| {
            let mut c = ch(params, seed);
            (0..1000).map(|i| c.send(i, i as f64 * 0.02).unwrap()).collect::<Vec<_>>()
        };
        let a = pattern(5);
        assert_eq!(a, pattern(5));
        let dropped = a.iter().filter(|k| !**k).count();
        assert!((60..140).contains(&dropped), "{dropped}");
        assert_ne!(a, pattern(6));
    }

    #[test]
    fn jitter_never_delivers_early() {
        let params = ChannelParams { latency_mean: 0.01, latency_jitter: 0.03, loss_prob: 0.2 };
        let mut c: Channel<(u32, f64)> = Channel::new(params, rng::stream(3, rng::VIDEO_LINK));
        let mut last_seen = 0;
        for i in 0..10_000u32 {
            let now = f64::from(i) * 0.001;
            c.send((i, now), now).unwrap();
            for (id, sent) in c.poll(now) {
                assert!(sent <= now);
                assert!(id >= last_seen);
                last_seen = id;
            }
        }
        let s = c.stats();
        assert_eq!(s.delivered + s.dropped + c.in_flight() as u64, s.sent);
    }

    proptest! {
        #[test]
        fn conservation_and_causality(
            lat in 0.0f64..0.2, jit in 0.0f64..0.2, loss in 0.0f64..1.0, seed in 0u64..1000,
            gaps in proptest::collection::vec(0.0f64..0.05, 1..200),
        ) {
            let mut c: Channel<f64> = Channel::new(
                ChannelParams { latency_mean: lat, latency_jitter: jit, loss_prob: loss },
                rng::stream(seed, rng::VIDEO_LINK),
            );
            let mut now = 0.0;
            for g in gaps {
                now += g;
                c.send(now, now).unwrap();
                for sent in c.poll(now) {
                    prop_assert!(sent <= now);
                }
                let s = c.stats();
                prop_assert_eq!(s.delivered + s.dropped + c.in_flight() as u64, s.sent);
            }
        }
    }
}
