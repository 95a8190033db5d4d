//! Curvature-bounded refinement of waypoint routes and the turn metric.

use serde::{Deserialize, Serialize};

use crate::dubins::{chord_clear, collision_free, dubins_shortest, heading_delta, Obstacle, Pose};
use crate::error::{config, Result};
use crate::wind::normalize_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    /// Sampling step, m.
    pub step: f64,
    /// Obstacle clearance, m.
    pub clearance: f64,
    /// Arc-length window for the turn metric, m.
    pub turn_window: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            step: 1.0,
            clearance: 2.0,
            turn_window: 30.0,
        }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.clearance >= 0.0 && self.turn_window >= 0.0) {
            return config("trajectory step must be positive, clearance and window non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedRoute {
    pub samples: Vec<TrajectorySample>,
    pub total_length: f64,
    /// Degrees.
    pub max_turn: f64,
    /// Segments that collided and were replaced by straight chords.
    pub blocked: Vec<usize>,
}

fn direction(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    ((b.0 - a.0) / len, (b.1 - a.1) / len)
}

/// Heading at each waypoint: toward the next point at the start, along the
/// last segment at the end, the bisector in between. A reversal gets the
/// left-hand perpendicular.
pub fn waypoint_headings(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = if i == 0 {
            let d = direction(points[0], points[1]);
            d.1.atan2(d.0)
        } else if i == n - 1 {
            let d = direction(points[n - 2], points[n - 1]);
            d.1.atan2(d.0)
        } else {
            let a = direction(points[i - 1], points[i]);
            let b = direction(points[i], points[i + 1]);
            let (sx, sy) = (a.0 + b.0, a.1 + b.1);
            if sx.hypot(sy) < 1e-9 {
                a.1.atan2(a.0) + std::f64::consts::FRAC_PI_2
            } else {
                sy.atan2(sx)
            }
        };
        out.push(normalize_angle(h));
    }
    out
}

fn push_chord(samples: &mut Vec<TrajectorySample>, s0: f64, a: (f64, f64), b: (f64, f64), step: f64) -> f64 {
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    let d = direction(a, b);
    let heading = normalize_angle(d.1.atan2(d.0));
    let n = (len / step).ceil().max(1.0) as usize;
    for i in 0..=n {
        let f = i as f64 / n as f64;
        samples.push(TrajectorySample {
            s: s0 + f * len,
            x: a.0 + f * (b.0 - a.0),
            y: a.1 + f * (b.1 - a.1),
            heading,
        });
    }
    len
}

fn check_points(points: &[(f64, f64)]) {
    assert!(points.len() >= 2, "a route needs at least two waypoints");
    for w in points.windows(2) {
        assert!((w[1].0 - w[0].0).hypot(w[1].1 - w[0].1) > 0.0, "repeated waypoint");
    }
}

/// Joins consecutive waypoints with shortest Dubins paths of turning
/// radius `radius`.
pub fn refine_route(
    points: &[(f64, f64)],
    radius: f64,
    params: &TrajectoryParams,
    obstacles: &[Obstacle],
) -> RefinedRoute {
    check_points(points);
    let headings = waypoint_headings(points);
    let mut samples = Vec::new();
    let mut blocked = Vec::new();
    let mut s0 = 0.0;
    for i in 0..points.len() - 1 {
        let q0 = Pose::new(points[i].0, points[i].1, headings[i]);
        let q1 = Pose::new(points[i + 1].0, points[i + 1].1, headings[i + 1]);
        let path = dubins_shortest(&q0, &q1, radius);
        if collision_free(&path, obstacles, params.step, params.clearance) {
            for (s, p) in path.samples(params.step) {
                samples.push(TrajectorySample {
                    s: s0 + s,
                    x: p.x,
                    y: p.y,
                    heading: p.heading,
                });
            }
            s0 += path.length();
        } else {
            blocked.push(i);
            s0 += push_chord(&mut samples, s0, points[i], points[i + 1], params.step);
        }
    }
    let max_turn = windowed_turn(&samples, params.turn_window);
    RefinedRoute {
        samples,
        total_length: s0,
        max_turn,
        blocked,
    }
}

/// The unsmoothed waypoint polyline, with heading jumps at the corners.
pub fn polyline_route(points: &[(f64, f64)], params: &TrajectoryParams, obstacles: &[Obstacle]) -> RefinedRoute {
    check_points(points);
    let mut samples = Vec::new();
    let mut blocked = Vec::new();
    let mut s0 = 0.0;
    for i in 0..points.len() - 1 {
        if !chord_clear(points[i], points[i + 1], obstacles, params.step, params.clearance) {
            blocked.push(i);
        }
        s0 += push_chord(&mut samples, s0, points[i], points[i + 1], params.step);
    }
    let max_turn = windowed_turn(&samples, params.turn_window);
    RefinedRoute {
        samples,
        total_length: s0,
        max_turn,
        blocked,
    }
}

/// Largest net heading change, in degrees, between any two samples at most
/// `window` metres of arc length apart.
pub fn windowed_turn(samples: &[TrajectorySample], window: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut unwrapped = Vec::with_capacity(samples.len());
    unwrapped.push(samples[0].heading);
    for w in samples.windows(2) {
        let prev = *unwrapped.last().unwrap();
        unwrapped.push(prev + heading_delta(w[0].heading, w[1].heading));
    }
    let mut best = 0.0f64;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            if samples[j].s - samples[i].s > window {
                break;
            }
            best = best.max((unwrapped[j] - unwrapped[i]).abs());
        }
    }
    best.to_degrees()
}

pub const TRAJECTORY_HEADER: &str = "s_m,x,y,heading_rad";

pub fn format_trajectory(samples: &[TrajectorySample]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for p in samples {
        out.push_str(&format!("{},{},{},{}\n", p.s, p.x, p.y, p.heading));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TrajectoryParams {
        TrajectoryParams::default()
    }

    #[test]
    fn collinear_route() {
        let pts = [(0.0, 0.0), (50.0, 0.0), (120.0, 0.0)];
        let r = refine_route(&pts, 20.0, &params(), &[]);
        assert!((r.total_length - 120.0).abs() < 1e-9);
        assert!(r.max_turn < 1e-6);
        assert!(r.blocked.is_empty());
    }

    #[test]
    fn right_angle_turn() {
        let pts = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0)];
        let r = refine_route(&pts, 1.0, &params(), &[]);
        assert!((r.max_turn - 90.0).abs() < 2.0, "{}", r.max_turn);
        assert!(r.total_length >= 200.0);
        let raw = polyline_route(&pts, &params(), &[]);
        assert!((raw.max_turn - 90.0).abs() < 1e-9);
        assert_eq!(raw.total_length, 200.0);
    }

    #[test]
    fn wide_radius_spreads_the_turn() {
        let pts = [(0.0, 0.0), (1000.0, 0.0), (1000.0, 1000.0)];
        let r = refine_route(&pts, 150.0, &TrajectoryParams::default(), &[]);
        let bound = (30.0f64 / 150.0).to_degrees();
        assert!(r.max_turn <= bound + 0.1, "{}", r.max_turn);
    }

    #[test]
    fn reversal_heading_is_perpendicular() {
        let h = waypoint_headings(&[(0.0, 0.0), (10.0, 0.0), (0.0, 0.0)]);
        assert!((h[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((h[2] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn blocked_segment_becomes_chord() {
        let pts = [(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)];
        let rock = Obstacle {
            center: [150.0, 0.0],
            radius: 3.0,
        };
        let r = refine_route(&pts, 10.0, &params(), &[rock]);
        assert_eq!(r.blocked, vec![1]);
        assert!((r.total_length - 200.0).abs() < 1e-9);
    }

    #[test]
    fn export_header() {
        let r = polyline_route(&[(0.0, 0.0), (2.0, 0.0)], &params(), &[]);
        let text = format_trajectory(&r.samples);
        assert!(text.starts_with("s_m,x,y,heading_rad\n0,0,0,0\n"));
    }
}
