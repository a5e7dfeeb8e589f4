//! Independent plan checker based on dense time sampling.
//!
//! Nothing here uses the solver's closed-form collision code; positions are
//! interpolated directly from vertex coordinates and compared sample by
//! sample.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{ActionKind, Point2};
use crate::map_graph::Instance;
use crate::sipp::Plan;

pub const DEFAULT_SAMPLE_STEP: f64 = 1e-3;
pub const DEFAULT_SLACK: f64 = 1e-6;
const CONTINUITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MissingPlan,
    WrongStart,
    WrongGoal,
    Discontinuity,
    NotAnEdge,
    BadDuration,
    Clearance,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::MissingPlan => "missing_plan",
            ViolationKind::WrongStart => "wrong_start",
            ViolationKind::WrongGoal => "wrong_goal",
            ViolationKind::Discontinuity => "discontinuity",
            ViolationKind::NotAnEdge => "not_an_edge",
            ViolationKind::BadDuration => "bad_duration",
            ViolationKind::Clearance => "clearance",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agents: Vec<usize>,
    pub time: f64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let agents: Vec<String> = self.agents.iter().map(ToString::to_string).collect();
        write!(f, "{} agents={} t={:.6} {}", self.kind, agents.join(","), self.time, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Straight-line travel between two points over `[t_start, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stroke {
    pub from: Point2,
    pub to: Point2,
    pub t_start: f64,
    pub t_end: f64,
}

impl Stroke {
    pub fn position(&self, t: f64) -> Point2 {
        let span = self.t_end - self.t_start;
        if !(span > 0.0) || !span.is_finite() || self.from == self.to {
            return self.from;
        }
        let s = ((t - self.t_start) / span).clamp(0.0, 1.0);
        Point2::new(
            self.from.x + (self.to.x - self.from.x) * s,
            self.from.y + (self.to.y - self.from.y) * s,
        )
    }
}

/// First sampled instant in the common span of `a` and `b` at which their
/// centers are closer than `radius_sum - slack`.
pub fn sampled_contact(a: &Stroke, b: &Stroke, radius_sum: f64, dt: f64, slack: f64) -> Option<f64> {
    let lo = a.t_start.max(b.t_start);
    let hi = a.t_end.min(b.t_end);
    if !(lo < hi) {
        return None;
    }
    let limit = radius_sum - slack;
    let steps = ((hi - lo) / dt).ceil() as u64;
    (0..=steps)
        .map(|k| (lo + k as f64 * dt).min(hi))
        .find(|&t| {
            let (p, q) = (a.position(t), b.position(t));
            ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt() < limit
        })
}

fn strokes(plan: &Plan, instance: &Instance) -> Vec<Stroke> {
    let at = |v| instance.graph.position(v).unwrap_or(Point2::new(f64::NAN, f64::NAN));
    let mut out: Vec<Stroke> = plan
        .actions
        .iter()
        .map(|a| Stroke {
            from: at(a.from()),
            to: at(a.to()),
            t_start: a.t_start,
            t_end: a.t_end(),
        })
        .collect();
    let park = out.last().map(|s| s.to).unwrap_or_else(|| at(plan.start));
    let end = out.last().map(|s| s.t_end).unwrap_or(0.0);
    out.push(Stroke {
        from: park,
        to: park,
        t_start: end,
        t_end: f64::INFINITY,
    });
    out
}

fn check_plan(instance: &Instance, agent: usize, plan: &Plan, out: &mut Vec<Violation>) {
    let spec = &instance.agents[agent];
    let mut push = |kind, time, detail: String| {
        out.push(Violation {
            kind,
            agents: vec![agent],
            time,
            detail,
        })
    };

    if plan.start != spec.start || plan.actions.first().is_some_and(|a| a.from() != spec.start) {
        push(ViolationKind::WrongStart, 0.0, format!("expected start {}", spec.start));
    }
    let mut clock = 0.0;
    let mut here = spec.start;
    for a in &plan.actions {
        if (a.t_start - clock).abs() > CONTINUITY_TOLERANCE || a.from() != here {
            push(
                ViolationKind::Discontinuity,
                a.t_start,
                format!("action starts at {} from {}, previous ended at {clock} at {here}", a.t_start, a.from()),
            );
        }
        let d = a.duration();
        if !(d > 0.0) || !d.is_finite() {
            push(ViolationKind::BadDuration, a.t_start, format!("duration {d}"));
        }
        match a.kind() {
            ActionKind::Wait => {
                if a.from() != a.to() {
                    push(ViolationKind::NotAnEdge, a.t_start, "wait changes vertex".into());
                }
            }
            ActionKind::Move => {
                let from = instance.graph.position(a.from());
                let to = instance.graph.position(a.to());
                let on_graph = instance.graph.neighbors(a.from()).iter().any(|e| e.to == a.to());
                match (from, to, on_graph) {
                    (Some(p), Some(q), true) => {
                        let expected = p.distance(q) / spec.speed;
                        if (expected - d).abs() > 1e-9 * expected.max(1.0) {
                            push(
                                ViolationKind::BadDuration,
                                a.t_start,
                                format!("move {}->{} takes {d}, expected {expected}", a.from(), a.to()),
                            );
                        }
                    }
                    _ => push(
                        ViolationKind::NotAnEdge,
                        a.t_start,
                        format!("{}->{} is not an edge", a.from(), a.to()),
                    ),
                }
            }
        }
        clock = a.t_end();
        here = a.to();
    }
    if here != spec.goal {
        push(ViolationKind::WrongGoal, clock, format!("ends at {here}, goal {}", spec.goal));
    }
    if (plan.cost - clock).abs() > CONTINUITY_TOLERANCE {
        push(
            ViolationKind::Discontinuity,
            clock,
            format!("cost {} differs from arrival {clock}", plan.cost),
        );
    }
}

/// Checks `plans` (one per agent, in agent order) against `instance`.
///
/// Clearance is sampled every `dt` up to the latest arrival; agents that
/// have arrived stay parked at their goals.
pub fn validate(instance: &Instance, plans: &[Plan], dt: f64, slack: f64) -> ValidationReport {
    let mut violations = Vec::new();
    if plans.len() != instance.len() {
        violations.push(Violation {
            kind: ViolationKind::MissingPlan,
            agents: Vec::new(),
            time: 0.0,
            detail: format!("{} plans for {} agents", plans.len(), instance.len()),
        });
        return ValidationReport { violations };
    }
    for (agent, plan) in plans.iter().enumerate() {
        check_plan(instance, agent, plan, &mut violations);
    }

    let tracks: Vec<Vec<Stroke>> = plans.iter().map(|p| strokes(p, instance)).collect();
    let horizon = tracks
        .iter()
        .map(|t| t.last().map_or(0.0, |s| s.t_start))
        .fold(0.0, f64::max);
    let steps = (horizon / dt).ceil() as u64;
    let mut cursor = vec![0usize; tracks.len()];
    let n = tracks.len();
    let mut in_contact = vec![vec![false; n]; n];
    let mut positions = vec![Point2::default(); n];
    for k in 0..=steps {
        let t = (k as f64 * dt).min(horizon);
        for (a, track) in tracks.iter().enumerate() {
            while cursor[a] + 1 < track.len() && track[cursor[a]].t_end < t {
                cursor[a] += 1;
            }
            positions[a] = track[cursor[a]].position(t);
        }
        for i in 0..n {
            for j in i + 1..n {
                let limit = instance.agents[i].radius + instance.agents[j].radius - slack;
                let (p, q) = (positions[i], positions[j]);
                let dist = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
                let touching = dist < limit;
                if touching && !in_contact[i][j] {
                    violations.push(Violation {
                        kind: ViolationKind::Clearance,
                        agents: vec![i, j],
                        time: t,
                        detail: format!("distance {dist:.6} < {limit:.6}"),
                    });
                }
                in_contact[i][j] = touching;
            }
        }
    }
    ValidationReport { violations }
}

pub fn validate_default(instance: &Instance, plans: &[Plan]) -> ValidationReport {
    validate(instance, plans, DEFAULT_SAMPLE_STEP, DEFAULT_SLACK)
}
