//! Collision detection between constant-velocity disks, and unsafe
//! start-time intervals for pairs of timed actions.
//!
//! Agents are open disks: two agents whose centers are exactly
//! `radius_sum` apart are touching, not colliding.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for interval endpoint comparisons.
pub const EPSILON: f64 = 1e-9;

/// Squared-distance margin below which a near-tangent approach is not
/// counted as a collision.
pub const TANGENCY_MARGIN: f64 = 1e-9;

/// Bisection stops once the unsafe-interval bracket is narrower than this.
pub const BISECTION_TOLERANCE: f64 = 1e-4;

/// Default step of the delay sweep used by [`unsafe_interval`].
pub const DEFAULT_SWEEP_RESOLUTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// A half-open time interval `[lo, hi)`; `hi` may be `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}) is reversed");
        Self { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// A disk center moving with constant velocity over `[t_start, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionSegment {
    /// Position at `t_start`.
    pub origin: Point2,
    pub velocity: Point2,
    pub t_start: f64,
    /// May be `+inf` for a terminal wait.
    pub t_end: f64,
}

impl MotionSegment {
    pub fn wait(at: Point2, t_start: f64, t_end: f64) -> Self {
        Self {
            origin: at,
            velocity: Point2::default(),
            t_start,
            t_end,
        }
    }

    /// Straight-line motion from `from` to `to` starting at `t_start`.
    pub fn linear(from: Point2, to: Point2, t_start: f64, duration: f64) -> Self {
        let velocity = if duration > 0.0 && duration.is_finite() {
            (to - from) * (1.0 / duration)
        } else {
            Point2::default()
        };
        Self {
            origin: from,
            velocity,
            t_start,
            t_end: t_start + duration,
        }
    }

    pub fn position(&self, t: f64) -> Point2 {
        self.origin + self.velocity * (t - self.t_start)
    }

    pub fn is_stationary(&self) -> bool {
        self.velocity.norm_squared() == 0.0
    }

    /// Axis-aligned bounds of the swept center, `(min, max)`.
    pub fn bounds(&self) -> (Point2, Point2) {
        let a = self.origin;
        let b = if self.is_stationary() {
            a
        } else {
            self.position(self.t_end)
        };
        (
            Point2::new(a.x.min(b.x), a.y.min(b.y)),
            Point2::new(a.x.max(b.x), a.y.max(b.y)),
        )
    }
}

/// Earliest time at which two disks whose radii add up to `radius_sum`
/// overlap, or `None` if they never do within their common time span. The
/// returned time is the moment of first contact.
///
/// Solves `|dp + dv·τ|² = radius_sum²` in closed form. Touching disks do not
/// collide, and neither do segments whose time spans share only an endpoint.
pub fn first_collision_time(a: &MotionSegment, b: &MotionSegment, radius_sum: f64) -> Option<f64> {
    let lo = a.t_start.max(b.t_start);
    let hi = a.t_end.min(b.t_end);
    // Spans that merely touch at an instant are ignored: whatever happens at
    // that instant is also seen by the actions that follow, which overlap for
    // a positive duration.
    if lo >= hi {
        return None;
    }

    let dp = b.position(lo) - a.position(lo);
    let dv = b.velocity - a.velocity;
    let r2 = radius_sum * radius_sum - TANGENCY_MARGIN;

    let c = dp.norm_squared() - r2;
    if c < 0.0 {
        return Some(lo);
    }
    let qa = dv.norm_squared();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * dp.dot(dv);
    let disc = qb * qb - 4.0 * qa * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let enter = (-qb - sq) / (2.0 * qa);
    let leave = (-qb + sq) / (2.0 * qa);
    let span = hi - lo;
    if leave <= 0.0 || enter >= span {
        return None;
    }
    // Report the instant of first contact at the exact radius, so that the
    // margin does not leak into conflict times.
    let c_exact = dp.norm_squared() - radius_sum * radius_sum;
    let disc_exact = qb * qb - 4.0 * qa * c_exact;
    let contact = if c_exact <= 0.0 {
        0.0
    } else if disc_exact >= 0.0 {
        (-qb - disc_exact.sqrt()) / (2.0 * qa)
    } else {
        enter
    };
    Some(lo + contact.clamp(0.0, enter.max(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Move,
    Wait,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::Move => "move",
            ActionKind::Wait => "wait",
        })
    }
}

/// An untimed action: a move along an edge, or a wait at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub from: VertexId,
    /// Equal to `from` for waits.
    pub to: VertexId,
    /// Positive; `+inf` for the terminal wait at the goal.
    pub duration: f64,
}

impl Action {
    pub fn movement(from: VertexId, to: VertexId, duration: f64) -> Self {
        Self {
            kind: ActionKind::Move,
            from,
            to,
            duration,
        }
    }

    pub fn wait(at: VertexId, duration: f64) -> Self {
        Self {
            kind: ActionKind::Wait,
            from: at,
            to: at,
            duration,
        }
    }

    pub fn is_wait(&self) -> bool {
        self.kind == ActionKind::Wait
    }

    pub fn at(self, t_start: f64) -> TimedAction {
        TimedAction {
            action: self,
            t_start,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedAction {
    pub action: Action,
    pub t_start: f64,
}

impl TimedAction {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.action.duration
    }

    pub fn kind(&self) -> ActionKind {
        self.action.kind
    }

    pub fn from(&self) -> VertexId {
        self.action.from
    }

    pub fn to(&self) -> VertexId {
        self.action.to
    }

    pub fn duration(&self) -> f64 {
        self.action.duration
    }
}

/// Anything that can place vertex ids in the plane.
pub trait VertexPositions {
    fn vertex_position(&self, v: VertexId) -> Option<Point2>;
}

impl VertexPositions for [Point2] {
    fn vertex_position(&self, v: VertexId) -> Option<Point2> {
        self.get(v.0).copied()
    }
}

impl VertexPositions for Vec<Point2> {
    fn vertex_position(&self, v: VertexId) -> Option<Point2> {
        self.get(v.0).copied()
    }
}

/// Resolves an action started at `t_start` into the segment its disk center traces.
pub fn segment_of<P: VertexPositions + ?Sized>(
    action: &Action,
    t_start: f64,
    positions: &P,
) -> Result<MotionSegment> {
    let from = positions
        .vertex_position(action.from)
        .ok_or(Error::UnknownVertex(action.from))?;
    match action.kind {
        ActionKind::Wait => Ok(MotionSegment::wait(from, t_start, t_start + action.duration)),
        ActionKind::Move => {
            let to = positions
                .vertex_position(action.to)
                .ok_or(Error::UnknownVertex(action.to))?;
            Ok(MotionSegment::linear(from, to, t_start, action.duration))
        }
    }
}

/// Whether executing `a_i` at `t_i` and `a_j` at `t_j` makes the two disks overlap.
pub fn actions_conflict<P: VertexPositions + ?Sized>(
    a_i: &Action,
    t_i: f64,
    a_j: &Action,
    t_j: f64,
    positions: &P,
    radius_sum: f64,
) -> Result<bool> {
    let s_i = segment_of(a_i, t_i, positions)?;
    let s_j = segment_of(a_j, t_j, positions)?;
    Ok(first_collision_time(&s_i, &s_j, radius_sum).is_some())
}

/// The unsafe interval `[t_i, t_u)` of `a_i` with respect to `a_j` executed at
/// `t_j`: starting `a_i` anywhere in it collides with `a_j`.
///
/// Delays are swept from zero in steps of `resolution` until the first
/// collision-free delay, then the bracket is bisected down to
/// [`BISECTION_TOLERANCE`]. The upper end is always a delay that was verified
/// collision-free, so the interval never undershoots the true one.
pub fn unsafe_interval<P: VertexPositions + ?Sized>(
    a_i: &Action,
    t_i: f64,
    a_j: &Action,
    t_j: f64,
    positions: &P,
    radius_sum: f64,
    resolution: f64,
) -> Result<Interval> {
    if !(resolution > 0.0) {
        return Err(Error::Config(format!(
            "sweep resolution must be positive, got {resolution}"
        )));
    }
    let seg_j = segment_of(a_j, t_j, positions)?;
    let collides_after = |delay: f64| -> Result<bool> {
        let seg_i = segment_of(a_i, t_i + delay, positions)?;
        Ok(first_collision_time(&seg_i, &seg_j, radius_sum).is_some())
    };

    if !collides_after(0.0)? {
        return Err(Error::Contract(format!(
            "unsafe interval requested for non-conflicting actions ({} at {t_i}, {} at {t_j})",
            a_i.kind, a_j.kind
        )));
    }

    if !seg_j.t_end.is_finite() {
        if !a_i.duration.is_finite() {
            // Two indefinite occupancies that already overlap never separate.
            return Ok(Interval::new(t_i, f64::INFINITY));
        }
        // Once a_i starts after a_j has begun its endless wait, the outcome no
        // longer depends on the delay.
        let settled = (t_j - t_i).max(0.0);
        let steps = (settled / resolution).ceil();
        if collides_after(steps * resolution)? {
            return Ok(Interval::new(t_i, f64::INFINITY));
        }
    }

    let mut step: u64 = 1;
    let mut free = step as f64 * resolution;
    while collides_after(free)? {
        step += 1;
        free = step as f64 * resolution;
    }
    let mut colliding = (step - 1) as f64 * resolution;
    while free - colliding > BISECTION_TOLERANCE {
        let mid = 0.5 * (colliding + free);
        if collides_after(mid)? {
            colliding = mid;
        } else {
            free = mid;
        }
    }

    if a_i.duration.is_finite() {
        let guard_end = free + a_i.duration;
        let mut probe = free + resolution;
        while probe <= guard_end {
            if collides_after(probe)? {
                tracing::warn!(
                    t_i,
                    t_j,
                    delay = probe,
                    "second collision window past the unsafe interval"
                );
                break;
            }
            probe += resolution;
        }
    }

    Ok(Interval::new(t_i, t_i + free))
}
