//! Double exponential smoothing (level + trend) of the noisy measurement
//! channels: distance `d`, steering angle `α`, and the red marker pixel
//! coordinates.
//!
//! ```text
//! S_n = γ·m_n + (1 − γ)·(S_{n−1} + b_{n−1})
//! b_n = λ·(S_n − S_{n−1}) + (1 − λ)·b_{n−1}
//! ```
//!
//! seeded with `S_1 = m_1`, `b_1 = m_2 − m_1`. Angular channels wrap the
//! innovation and the level change into `(−π, π]` so that crossing ±π does
//! not inject a 2π step into the trend.

use crate::{angle, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelKind {
    #[default]
    Linear,
    Angular,
}

/// Data (`gamma`) and trend (`lambda`) smoothing factors, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesFactors {
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for DesFactors {
    fn default() -> Self {
        Self {
            gamma: 0.6,
            lambda: 0.3,
        }
    }
}

impl DesFactors {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        let f = Self { gamma, lambda };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param("lambda", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Level/trend pair of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesState {
    pub level: f64,
    /// Trend, channel units per sample.
    pub trend: f64,
    /// Samples absorbed into `level`.
    pub count: u64,
    pub factors: DesFactors,
    pub kind: ChannelKind,
}

impl DesState {
    /// Initial state from the first two samples. `m2` is not absorbed: the
    /// caller feeds it to [`update`](Self::update) next.
    pub fn init(m1: f64, m2: f64, factors: DesFactors, kind: ChannelKind) -> Self {
        let trend = match kind {
            ChannelKind::Linear => m2 - m1,
            ChannelKind::Angular => angle::wrap(m2 - m1),
        };
        Self {
            level: m1,
            trend,
            count: 1,
            factors,
            kind,
        }
    }

    pub fn update(&self, m: f64) -> Self {
        let DesFactors { gamma, lambda } = self.factors;
        let (level, change) = match self.kind {
            ChannelKind::Linear => {
                // γm + (1−γ)(S+b), arranged so a constant input is an exact
                // fixed point
                let predicted = self.level + self.trend;
                let level = predicted + gamma * (m - predicted);
                (level, level - self.level)
            }
            ChannelKind::Angular => {
                let predicted = self.level + self.trend;
                let innovation = angle::wrap(m - predicted);
                let level = angle::wrap(predicted + gamma * innovation);
                (level, angle::wrap(level - self.level))
            }
        };
        Self {
            level,
            trend: lambda * change + (1.0 - lambda) * self.trend,
            count: self.count + 1,
            ..*self
        }
    }
}

/// A channel that handles its own two-sample start-up.
///
/// The first sample is passed through unchanged; the second seeds the state
/// and is then absorbed, so from then on `value()` is the smoothed level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesFilter {
    factors: DesFactors,
    kind: ChannelKind,
    first: Option<f64>,
    state: Option<DesState>,
}

impl DesFilter {
    pub fn new(factors: DesFactors, kind: ChannelKind) -> Self {
        Self {
            factors,
            kind,
            first: None,
            state: None,
        }
    }

    pub fn push(&mut self, m: f64) -> f64 {
        match (self.state, self.first) {
            (Some(s), _) => {
                let s = s.update(m);
                self.state = Some(s);
                s.level
            }
            (None, Some(m1)) => {
                let s = DesState::init(m1, m, self.factors, self.kind).update(m);
                self.state = Some(s);
                s.level
            }
            (None, None) => {
                self.first = Some(m);
                m
            }
        }
    }

    pub fn reset(&mut self) {
        self.first = None;
        self.state = None;
    }

    /// Smoothed value, or the lone first sample before initialization.
    pub fn value(&self) -> Option<f64> {
        self.state.map(|s| s.level).or(self.first)
    }

    /// Trend per sample; zero until two samples have been seen.
    pub fn trend(&self) -> f64 {
        self.state.map_or(0.0, |s| s.trend)
    }

    pub fn state(&self) -> Option<&DesState> {
        self.state.as_ref()
    }

    pub fn factors(&self) -> DesFactors {
        self.factors
    }
}
