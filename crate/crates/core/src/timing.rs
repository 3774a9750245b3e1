//! Interval algebra for timing forks and zigzags.
//!
//! All quantities are integer ticks. A [`TimeInterval`] bounds a delay or a
//! lead time; fork and zigzag weights are signed because a negative weight is
//! a meaningful "maximum separation" bound.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Simulation time in integer ticks (reported as picoseconds).
pub type Time = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("interval lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: Time, hi: Time },
    #[error("malformed interval `{0}` (expected `lo..hi` or a single value)")]
    Malformed(String),
}

/// Closed interval `[lo, hi]` of ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeInterval {
    lo: Time,
    hi: Time,
}

impl TimeInterval {
    pub fn new(lo: Time, hi: Time) -> Result<Self, IntervalError> {
        if lo > hi {
            return Err(IntervalError::Inverted { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// # Panics
    /// If `lo > hi` (at compile time in const contexts).
    pub const fn new_const(lo: Time, hi: Time) -> Self {
        assert!(lo <= hi, "inverted interval");
        Self { lo, hi }
    }

    /// Degenerate interval `[t, t]`.
    pub const fn point(t: Time) -> Self {
        Self { lo: t, hi: t }
    }

    pub const ZERO: TimeInterval = TimeInterval::point(0);

    pub const fn lo(self) -> Time {
        self.lo
    }

    pub const fn hi(self) -> Time {
        self.hi
    }

    pub const fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(self, t: Time) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn width(self) -> Time {
        self.hi - self.lo
    }
}

impl std::ops::Add for TimeInterval {
    type Output = TimeInterval;

    /// Minkowski sum: bounds on the sum of two independent delays.
    fn add(self, other: TimeInterval) -> TimeInterval {
        TimeInterval { lo: self.lo.saturating_add(other.lo), hi: self.hi.saturating_add(other.hi) }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for TimeInterval {
    type Err = IntervalError;

    /// Accepts `lo..hi` or a bare value `t` meaning `[t, t]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |v: &str| v.trim().parse::<Time>().map_err(|_| IntervalError::Malformed(s.to_string()));
        match s.split_once("..") {
            Some((lo, hi)) => TimeInterval::new(parse(lo)?, parse(hi)?),
            None => Ok(TimeInterval::point(parse(s)?)),
        }
    }
}

/// Weight of a timing fork: `inf(head) - sup(tail)`.
///
/// Positive weights are a guaranteed minimum separation of the head event
/// after the tail event; negative weights bound the maximum separation the
/// other way round.
pub fn fork_weight(head_delay: TimeInterval, tail_delay: TimeInterval) -> i64 {
    head_delay.lo as i64 - tail_delay.hi as i64
}

/// Weight of a zigzag built from two forks with bounds `w1` and `w2`.
pub fn zigzag_weight(w1: i64, w2: i64) -> i64 {
    w2 - w1
}

/// Event times of a two-fork zigzag.
///
/// `e1` causes `e3` and `e5`; `e2` causes `e4` and `e6`. The pair `(e3, e4)`
/// is the observed ordering, `(e5, e6)` the inferred one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZigzagScenario {
    pub t1: Time,
    pub t2: Time,
    pub t3: Time,
    pub t4: Time,
    pub t5: Time,
    pub t6: Time,
    pub d_a: TimeInterval,
    pub d_c: TimeInterval,
}

impl ZigzagScenario {
    pub fn is_causal(&self) -> bool {
        self.t3 >= self.t1 && self.t5 >= self.t1 && self.t4 >= self.t2 && self.t6 >= self.t2
    }

    /// Whether the scenario satisfies the two fork constraints
    /// `t3 - t5 >= -w1` and `t6 - t4 >= w2`.
    pub fn satisfies_forks(&self, w1: i64, w2: i64) -> bool {
        let (t3, t4, t5, t6) = (self.t3 as i64, self.t4 as i64, self.t5 as i64, self.t6 as i64);
        t3 - t5 >= -w1 && t6 - t4 >= w2
    }
}

/// Checks the zigzag inference on one concrete scenario: if the observed
/// ordering holds (`t4 >= t3`) and the zigzag weight is non-negative, the
/// inferred ordering `t6 > t5` must hold.
///
/// Only meaningful for scenarios that satisfy the fork constraints; for a
/// zero-weight zigzag the inferred ordering may degrade to `t6 >= t5`, which
/// callers that allow exact contact check via [`zigzag_holds`].
pub fn scenario_check(s: &ZigzagScenario, w1: i64, w2: i64) -> bool {
    let premise = s.t4 >= s.t3 && zigzag_weight(w1, w2) >= 0;
    if !premise {
        return true;
    }
    if zigzag_weight(w1, w2) > 0 {
        s.t6 > s.t5
    } else {
        s.t6 >= s.t5
    }
}

/// The quantitative form of the inference: `t6 - t5 >= w2 - w1` whenever
/// `t4 >= t3`.
pub fn zigzag_holds(s: &ZigzagScenario, w1: i64, w2: i64) -> bool {
    if s.t4 < s.t3 {
        return true;
    }
    s.t6 as i64 - s.t5 as i64 >= zigzag_weight(w1, w2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZigzagCert {
    /// Upper bound on the time from the server seeing the early release to
    /// the holder's actual release.
    pub w1: i64,
    /// Lower bound on the time from the server seeing the waiting client's
    /// request to that client requiring the resource.
    pub w2: i64,
    pub weight: i64,
    pub safe: bool,
}

impl ZigzagCert {
    pub fn new(w1: i64, w2: i64) -> Self {
        let weight = zigzag_weight(w1, w2);
        Self { w1, w2, weight, safe: weight >= 0 }
    }
}

impl fmt::Display for ZigzagCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w1={} w2={} weight={} safe={}", self.w1, self.w2, self.weight, self.safe)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("early release lead {lead} can exceed the minimum usage time {usage}")]
    LeadExceedsUsage { lead: TimeInterval, usage: TimeInterval },
}

/// Timing knowledge the server holds about one client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientTimingParams {
    pub usage_time: TimeInterval,
    /// Time between lowering the early request wire and actually releasing.
    pub early_release_lead: TimeInterval,
    /// Time between raising the request and actually requiring the resource.
    pub preemption_lead: TimeInterval,
    /// Time between a completed handshake and the next request.
    pub idle_gap: TimeInterval,
    pub link_delay_request: TimeInterval,
    pub link_delay_early: TimeInterval,
    pub link_delay_ack: TimeInterval,
}

impl Default for ClientTimingParams {
    fn default() -> Self {
        Self {
            usage_time: TimeInterval::point(1000),
            early_release_lead: TimeInterval::ZERO,
            preemption_lead: TimeInterval::ZERO,
            idle_gap: TimeInterval::point(100),
            link_delay_request: TimeInterval::point(10),
            link_delay_early: TimeInterval::point(10),
            link_delay_ack: TimeInterval::point(10),
        }
    }
}

impl ClientTimingParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.early_release_lead.hi > self.usage_time.lo {
            return Err(ParamsError::LeadExceedsUsage { lead: self.early_release_lead, usage: self.usage_time });
        }
        Ok(())
    }
}

/// Bounds the server can derive for an early release by `holder` followed by
/// a request from `waiter`.
pub fn server_bounds(holder: &ClientTimingParams, waiter: &ClientTimingParams) -> ZigzagCert {
    let w1 = holder.early_release_lead.hi as i64 - holder.link_delay_early.lo as i64;
    let w2 = waiter.preemption_lead.lo as i64 - waiter.link_delay_request.hi as i64;
    ZigzagCert::new(w1, w2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: Time, hi: Time) -> TimeInterval {
        TimeInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn interval_rejects_inverted_bounds() {
        assert_eq!(TimeInterval::new(5, 3), Err(IntervalError::Inverted { lo: 5, hi: 3 }));
    }

    #[test]
    fn interval_parses_range_and_point() {
        assert_eq!("1000..1200".parse::<TimeInterval>().unwrap(), iv(1000, 1200));
        assert_eq!(" 7 ".parse::<TimeInterval>().unwrap(), iv(7, 7));
        assert!("9..3".parse::<TimeInterval>().is_err());
        assert!("a..3".parse::<TimeInterval>().is_err());
    }

    #[test]
    fn fork_weight_examples() {
        assert_eq!(fork_weight(iv(5, 7), iv(1, 2)), 3);
        assert_eq!(fork_weight(iv(3, 4), iv(3, 4)), -1);
        assert_eq!(fork_weight(iv(10, 20), iv(2, 5)), 5);
    }

    #[test]
    fn zigzag_weight_examples() {
        assert_eq!(zigzag_weight(2, 5), 3);
        assert_eq!(zigzag_weight(0, 0), 0);
    }

    #[test]
    fn server_bounds_safe_example() {
        let c1 = ClientTimingParams {
            early_release_lead: iv(800, 1000),
            link_delay_early: iv(50, 100),
            usage_time: iv(1000, 1200),
            ..Default::default()
        };
        let c2 = ClientTimingParams {
            preemption_lead: iv(1200, 1500),
            link_delay_request: iv(50, 100),
            ..Default::default()
        };
        let cert = server_bounds(&c1, &c2);
        assert_eq!((cert.w1, cert.w2, cert.weight, cert.safe), (950, 1100, 150, true));
    }

    #[test]
    fn server_bounds_point_intervals_are_boundary_safe() {
        let p = TimeInterval::point(40);
        let c = ClientTimingParams {
            early_release_lead: p,
            preemption_lead: p,
            link_delay_early: p,
            link_delay_request: p,
            ..Default::default()
        };
        let cert = server_bounds(&c, &c);
        assert_eq!(cert.w1, cert.w2);
        assert!(cert.safe);
    }

    #[test]
    fn server_bounds_without_preemption_lead_is_unsafe() {
        let c1 = ClientTimingParams { early_release_lead: iv(1, 5), link_delay_early: iv(0, 0), ..Default::default() };
        let c2 = ClientTimingParams {
            preemption_lead: TimeInterval::ZERO,
            link_delay_request: iv(3, 9),
            ..Default::default()
        };
        let cert = server_bounds(&c1, &c2);
        assert_eq!(cert.w2, -9);
        assert!(!cert.safe);
    }

    #[test]
    fn scenario_check_examples() {
        let s = ZigzagScenario {
            t1: 0,
            t2: 0,
            t3: 10,
            t4: 10,
            t5: 12,
            t6: 16,
            d_a: TimeInterval::ZERO,
            d_c: TimeInterval::ZERO,
        };
        assert!(scenario_check(&s, 1, 3));
        let vacuous = ZigzagScenario { t3: 20, t4: 10, t5: 50, t6: 0, ..s };
        assert!(scenario_check(&vacuous, 1, 3));
    }

    #[test]
    fn validate_rejects_lead_longer_than_usage() {
        let p = ClientTimingParams { usage_time: iv(100, 200), early_release_lead: iv(50, 150), ..Default::default() };
        assert!(p.validate().is_err());
    }

    fn interval() -> impl Strategy<Value = TimeInterval> {
        (0u64..10_000, 0u64..10_000).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn fork_weight_monotone_in_head_antitone_in_tail(
            head in interval(), tail in interval(), bump in 1u64..100
        ) {
            let base = fork_weight(head, tail);
            let wider_tail = iv(tail.lo(), tail.hi() + bump);
            prop_assert!(fork_weight(head, wider_tail) <= base);
            let later_head = iv(head.lo() + bump, head.hi() + bump);
            prop_assert!(fork_weight(later_head, tail) >= base);
        }

        #[test]
        fn zigzag_weight_antisymmetric(w1 in -10_000i64..10_000, w2 in -10_000i64..10_000) {
            prop_assert_eq!(zigzag_weight(w1, w2), -zigzag_weight(w2, w1));
        }

        #[test]
        fn server_bounds_safety_monotone(
            lead in interval(), pre in interval(), link in interval(), bump in 1u64..500
        ) {
            let c1 = ClientTimingParams { early_release_lead: lead, link_delay_early: link, ..Default::default() };
            let c2 = ClientTimingParams { preemption_lead: pre, link_delay_request: link, ..Default::default() };
            if server_bounds(&c1, &c2).safe {
                let c2_more = ClientTimingParams { preemption_lead: iv(pre.lo() + bump, pre.hi() + bump), ..c2 };
                prop_assert!(server_bounds(&c1, &c2_more).safe);
                let c1_less = ClientTimingParams {
                    early_release_lead: iv(lead.lo().saturating_sub(bump), lead.hi().saturating_sub(bump)),
                    ..c1
                };
                prop_assert!(server_bounds(&c1_less, &c2).safe);
            }
        }
    }
}
