//! Planar Dubins paths and obstacle checks.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::wind::normalize_angle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seg {
    L,
    S,
    R,
}

impl DubinsWord {
    /// Tie-break order.
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::Lsl,
        DubinsWord::Rsr,
        DubinsWord::Lsr,
        DubinsWord::Rsl,
        DubinsWord::Rlr,
        DubinsWord::Lrl,
    ];

    fn segments(self) -> [Seg; 3] {
        use Seg::*;
        match self {
            DubinsWord::Lsl => [L, S, L],
            DubinsWord::Rsr => [R, S, R],
            DubinsWord::Lsr => [L, S, R],
            DubinsWord::Rsl => [R, S, L],
            DubinsWord::Rlr => [R, L, R],
            DubinsWord::Lrl => [L, R, L],
        }
    }
}

impl fmt::Display for DubinsWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DubinsWord::Lsl => "LSL",
            DubinsWord::Rsr => "RSR",
            DubinsWord::Lsr => "LSR",
            DubinsWord::Rsl => "RSL",
            DubinsWord::Rlr => "RLR",
            DubinsWord::Lrl => "LRL",
        };
        f.write_str(s)
    }
}

/// Shortest curvature-bounded path from `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsPath {
    pub start: Pose,
    pub word: DubinsWord,
    /// Segment extents normalised by the radius (radians for arcs).
    pub params: [f64; 3],
    pub radius: f64,
}

// Snaps values a rounding error below 2π back to 0 so an aligned start
// never turns into a full loop.
fn mod2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if TAU - r < 1e-10 {
        0.0
    } else {
        r
    }
}

fn word_params(word: DubinsWord, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cab = (alpha - beta).cos();
    match word {
        DubinsWord::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(tmp - alpha), p2.sqrt(), mod2pi(beta - tmp)])
        }
        DubinsWord::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - tmp), p2.sqrt(), mod2pi(tmp - beta)])
        }
        DubinsWord::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(tmp - alpha), p, mod2pi(tmp - beta)])
        }
        DubinsWord::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        DubinsWord::Rlr => {
            let c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d - sa + sb);
            let p = (TAU - c.acos()).rem_euclid(TAU);
            let t = mod2pi(alpha - phi + p / 2.0);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        DubinsWord::Lrl => {
            let c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
            if c.abs() > 1.0 {
                return None;
            }
            let phi = (ca - cb).atan2(d + sa - sb);
            let p = (TAU - c.acos()).rem_euclid(TAU);
            let t = mod2pi(-alpha - phi + p / 2.0);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// Minimum-length path over the six words, ties resolved in
/// [`DubinsWord::ALL`] order.
pub fn dubins_shortest(q0: &Pose, q1: &Pose, radius: f64) -> DubinsPath {
    assert!(radius > 0.0, "turning radius must be positive");
    let dx = q1.x - q0.x;
    let dy = q1.y - q0.y;
    let d = dx.hypot(dy) / radius;
    let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
    let alpha = mod2pi(q0.heading - theta);
    let beta = mod2pi(q1.heading - theta);
    let mut best: Option<(f64, DubinsWord, [f64; 3])> = None;
    for word in DubinsWord::ALL {
        if let Some(params) = word_params(word, alpha, beta, d) {
            let len = params.iter().sum::<f64>();
            if best.map_or(true, |b| len < b.0) {
                best = Some((len, word, params));
            }
        }
    }
    let (_, word, params) = best.expect("LSL or RSR always exists");
    DubinsPath {
        start: *q0,
        word,
        params,
        radius,
    }
}

fn advance(seg: Seg, t: f64, x: f64, y: f64, h: f64) -> (f64, f64, f64) {
    match seg {
        Seg::L => (x + (h + t).sin() - h.sin(), y - (h + t).cos() + h.cos(), h + t),
        Seg::R => (x - (h - t).sin() + h.sin(), y + (h - t).cos() - h.cos(), h - t),
        Seg::S => (x + h.cos() * t, y + h.sin() * t, h),
    }
}

impl DubinsPath {
    pub fn length(&self) -> f64 {
        self.params.iter().sum::<f64>() * self.radius
    }

    /// Largest single arc, degrees.
    pub fn max_turn(&self) -> f64 {
        self.word
            .segments()
            .iter()
            .zip(self.params)
            .filter(|(s, _)| **s != Seg::S)
            .map(|(_, p)| p.to_degrees())
            .fold(0.0, f64::max)
    }

    /// Pose at arc length `s` from the start, clamped to the path.
    pub fn sample(&self, s: f64) -> Pose {
        let mut rem = s.clamp(0.0, self.length()) / self.radius;
        let (mut x, mut y, mut h) = (0.0, 0.0, self.start.heading);
        for (seg, &p) in self.word.segments().iter().zip(&self.params) {
            let t = rem.min(p);
            (x, y, h) = advance(*seg, t, x, y, h);
            rem -= t;
            if rem <= 0.0 {
                break;
            }
        }
        Pose::new(self.start.x + x * self.radius, self.start.y + y * self.radius, h)
    }

    /// Samples spaced at most `step` apart, endpoints included, as
    /// `(arc length, pose)` pairs.
    pub fn samples(&self, step: f64) -> Vec<(f64, Pose)> {
        assert!(step > 0.0);
        let len = self.length();
        let n = (len / step).ceil().max(1.0) as usize;
        (0..=n)
            .map(|i| {
                let s = len * i as f64 / n as f64;
                (s, self.sample(s))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Obstacle {
    /// True when `(x, y)` lies strictly outside the disc grown by `clearance`.
    pub fn clear_of(&self, x: f64, y: f64, clearance: f64) -> bool {
        (x - self.center[0]).hypot(y - self.center[1]) > self.radius + clearance
    }
}

pub fn collision_free(path: &DubinsPath, obstacles: &[Obstacle], step: f64, clearance: f64) -> bool {
    if obstacles.is_empty() {
        return true;
    }
    path.samples(step)
        .iter()
        .all(|(_, p)| obstacles.iter().all(|o| o.clear_of(p.x, p.y, clearance)))
}

/// Whether the straight chord between two points keeps clear of every
/// obstacle, checked at spacing `step`.
pub fn chord_clear(a: (f64, f64), b: (f64, f64), obstacles: &[Obstacle], step: f64, clearance: f64) -> bool {
    if obstacles.is_empty() {
        return true;
    }
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let f = i as f64 / n as f64;
        let x = a.0 + f * (b.0 - a.0);
        let y = a.1 + f * (b.1 - a.1);
        obstacles.iter().all(|o| o.clear_of(x, y, clearance))
    })
}

/// Heading difference wrapped into `(-π, π]`.
pub fn heading_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn collinear_is_straight() {
        let p = dubins_shortest(&Pose::new(0.0, 0.0, 0.0), &Pose::new(10.0, 0.0, 0.0), 3.0);
        assert_eq!(p.word, DubinsWord::Lsl);
        assert!((p.length() - 10.0).abs() < 1e-9);
        assert_eq!(p.max_turn(), 0.0);
    }

    #[test]
    fn semicircle() {
        let r = 7.0;
        let p = dubins_shortest(&Pose::new(0.0, 0.0, 0.0), &Pose::new(0.0, 2.0 * r, PI), r);
        assert!((p.length() - PI * r).abs() < 1e-6);
        assert!((p.max_turn() - 180.0).abs() < 1e-6);
    }

    #[test]
    fn endpoint_reached() {
        let q0 = Pose::new(3.0, -2.0, 1.0);
        let q1 = Pose::new(-20.0, 15.0, 4.0);
        let p = dubins_shortest(&q0, &q1, 5.0);
        let end = p.sample(p.length());
        assert!((end.x - q1.x).abs() < 1e-9 && (end.y - q1.y).abs() < 1e-9);
        assert!(heading_delta(end.heading, q1.heading).abs() < 1e-9);
    }

    #[test]
    fn samples_respect_step() {
        let p = dubins_shortest(&Pose::new(0.0, 0.0, 0.0), &Pose::new(0.0, 30.0, FRAC_PI_2), 10.0);
        let s = p.samples(1.0);
        for w in s.windows(2) {
            assert!(w[1].0 - w[0].0 <= 1.0 + 1e-12);
            assert!(w[0].1.distance(&w[1].1) <= 1.0 + 1e-9);
        }
        assert_eq!(s.last().unwrap().0, p.length());
    }

    #[test]
    fn obstacles() {
        let p = dubins_shortest(&Pose::new(0.0, 0.0, 0.0), &Pose::new(100.0, 0.0, 0.0), 10.0);
        assert!(collision_free(&p, &[], 1.0, 2.0));
        let on = Obstacle {
            center: [50.0, 0.0],
            radius: 5.0,
        };
        assert!(!collision_free(&p, &[on], 1.0, 2.0));
        // boundary of the inflated disc touches the path at y = 0
        let tangent = Obstacle {
            center: [50.0, 7.0],
            radius: 5.0,
        };
        assert!(!collision_free(&p, &[tangent], 1.0, 2.0));
        let clear = Obstacle {
            center: [50.0, 7.5],
            radius: 5.0,
        };
        assert!(collision_free(&p, &[clear], 1.0, 2.0));
    }

    #[test]
    fn heading_delta_wraps() {
        assert!((heading_delta(0.1, TAU - 0.1) + 0.2).abs() < 1e-12);
        assert_eq!(heading_delta(0.0, PI), PI);
    }
}
