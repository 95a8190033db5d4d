//! Wind representation, the wind triangle, class discretization and the
//! temporal wind processes that drive edge costs.

use std::f64::consts::{PI, TAU};
use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config, io_err, Error, Result};

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Horizontal wind in polar form plus an optional vertical component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindVector {
    /// Horizontal speed in m/s, never negative.
    pub speed: f64,
    /// Direction the air moves toward, radians in `[0, 2π)`.
    pub direction: f64,
    /// Vertical component in m/s.
    #[serde(default)]
    pub vertical: f64,
}

impl WindVector {
    pub fn new(speed: f64, direction: f64) -> Self {
        Self::with_vertical(speed, direction, 0.0)
    }

    pub fn with_vertical(speed: f64, direction: f64, vertical: f64) -> Self {
        if speed < 0.0 {
            return Self {
                speed: -speed,
                direction: normalize_angle(direction + PI),
                vertical,
            };
        }
        Self {
            speed,
            direction: normalize_angle(direction),
            vertical,
        }
    }

    pub fn calm() -> Self {
        Self {
            speed: 0.0,
            direction: 0.0,
            vertical: 0.0,
        }
    }

    pub fn to_cartesian(&self) -> Vector3<f64> {
        Vector3::new(
            self.speed * self.direction.cos(),
            self.speed * self.direction.sin(),
            self.vertical,
        )
    }

    pub fn from_cartesian(v: &Vector3<f64>) -> Self {
        let speed = v.x.hypot(v.y);
        let direction = if speed == 0.0 {
            0.0
        } else {
            normalize_angle(v.y.atan2(v.x))
        };
        Self {
            speed,
            direction,
            vertical: v.z,
        }
    }
}

/// Vehicle maneuverability bounds and the constant airspeed magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// Airspeed magnitude in m/s.
    pub airspeed: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Curvature bound in 1/m; the turning radius is its inverse.
    pub kappa_max: f64,
}

impl KinematicLimits {
    pub fn new(airspeed: f64, gamma_min: f64, gamma_max: f64, kappa_max: f64) -> Result<Self> {
        let limits = Self {
            airspeed,
            gamma_min,
            gamma_max,
            kappa_max,
        };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.airspeed > 0.0) {
            return config("airspeed must be positive");
        }
        if !(self.gamma_min <= 0.0 && 0.0 <= self.gamma_max) {
            return config("flight-path limits must bracket zero");
        }
        if !(self.kappa_max > 0.0) {
            return config("kappa_max must be positive");
        }
        Ok(())
    }

    pub fn turn_radius(&self) -> f64 {
        1.0 / self.kappa_max
    }

    pub fn with_airspeed(mut self, airspeed: f64) -> Self {
        self.airspeed = airspeed;
        self
    }
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            airspeed: 15.0,
            gamma_min: -0.5,
            gamma_max: 0.5,
            kappa_max: 1.0 / 150.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible,
    CrosswindExceeds,
    NonpositiveGroundSpeed,
    FlightPathAngleExceeded,
}

impl Feasibility {
    pub fn is_feasible(self) -> bool {
        self == Feasibility::Feasible
    }
}

/// Result of resolving the wind triangle along a path direction.
///
/// Fields that have no meaning for an infeasible case are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSolution {
    pub airspeed_parallel: f64,
    pub wind_parallel: f64,
    /// Magnitude of the wind component normal to the path.
    pub wind_perpendicular: f64,
    pub ground_speed: f64,
    pub gamma_air: f64,
    pub feasibility: Feasibility,
}

/// Solves `V_G u = V_A + W` for a unit path direction `u` under a constant
/// airspeed magnitude.
pub fn solve_wind_triangle(
    path_dir: &Vector3<f64>,
    limits: &KinematicLimits,
    wind: &WindVector,
) -> TriangleSolution {
    debug_assert!((path_dir.norm() - 1.0).abs() < 1e-9, "path_dir not unit");
    let w = wind.to_cartesian();
    let w_par = w.dot(path_dir);
    let w_perp_vec = w - path_dir * w_par;
    let w_perp = w_perp_vec.norm();
    let va = limits.airspeed;

    if w_perp > va {
        return TriangleSolution {
            airspeed_parallel: f64::NAN,
            wind_parallel: w_par,
            wind_perpendicular: w_perp,
            ground_speed: f64::NAN,
            gamma_air: f64::NAN,
            feasibility: Feasibility::CrosswindExceeds,
        };
    }
    let va_par = (va * va - w_perp * w_perp).sqrt();
    let vg = va_par + w_par;
    // air velocity cancels the normal wind so the ground track stays on the path
    let air_z = va_par * path_dir.z - w_perp_vec.z;
    let gamma_air = (air_z / va).clamp(-1.0, 1.0).asin();
    let feasibility = if vg <= 0.0 {
        Feasibility::NonpositiveGroundSpeed
    } else if gamma_air < limits.gamma_min || gamma_air > limits.gamma_max {
        Feasibility::FlightPathAngleExceeded
    } else {
        Feasibility::Feasible
    };
    TriangleSolution {
        airspeed_parallel: va_par,
        wind_parallel: w_par,
        wind_perpendicular: w_perp,
        ground_speed: vg,
        gamma_air,
        feasibility,
    }
}

/// Sector of `direction` among `k` sectors centered on `2πi/k`.
pub fn sector_index(direction: f64, k: usize) -> usize {
    let width = TAU / k as f64;
    let shifted = normalize_angle(direction + width / 2.0);
    ((shifted / width).floor() as usize).min(k - 1)
}

/// A discrete wind state: one of `k` angular sectors at a magnitude level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindClass {
    pub index: usize,
    pub k: usize,
    pub magnitude_level: usize,
}

/// Maps continuous wind onto `k` direction sectors and a magnitude ladder.
///
/// Sector `i` is centered on `2πi/k`, so sector 0 spans `[-π/k, π/k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindClassifier {
    k: usize,
    ladder: Vec<f64>,
}

impl WindClassifier {
    pub fn new(k: usize, ladder: Vec<f64>) -> Result<Self> {
        if k != 4 && k != 8 {
            return config(format!("wind class count must be 4 or 8, got {k}"));
        }
        if ladder.is_empty() {
            return config("magnitude ladder is empty");
        }
        if ladder.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return config("magnitude ladder entries must be finite and non-negative");
        }
        if ladder.windows(2).any(|w| w[0] >= w[1]) {
            return config("magnitude ladder must be strictly increasing");
        }
        Ok(Self { k, ladder })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn max_magnitude(&self) -> f64 {
        *self.ladder.last().expect("ladder is non-empty")
    }

    pub fn sector(&self, direction: f64) -> usize {
        sector_index(direction, self.k)
    }

    pub fn classify(&self, w: &WindVector) -> WindClass {
        let mut level = 0;
        let mut best = f64::INFINITY;
        for (i, m) in self.ladder.iter().enumerate() {
            let d = (w.speed - m).abs();
            // strict comparison keeps the lower entry on ties
            if d < best {
                best = d;
                level = i;
            }
        }
        WindClass {
            index: self.sector(w.direction),
            k: self.k,
            magnitude_level: level,
        }
    }

    pub fn representative(&self, c: &WindClass) -> WindVector {
        WindVector::new(
            self.ladder[c.magnitude_level],
            TAU * c.index as f64 / c.k as f64,
        )
    }

    /// Classes one step away from `c`: both angular neighbours at the same
    /// magnitude and the next magnitude up in the same sector.
    pub fn neighbors(&self, c: &WindClass) -> Vec<WindClass> {
        let mut out = vec![
            WindClass {
                index: (c.index + 1) % self.k,
                ..*c
            },
            WindClass {
                index: (c.index + self.k - 1) % self.k,
                ..*c
            },
        ];
        if c.magnitude_level + 1 < self.ladder.len() {
            out.push(WindClass {
                magnitude_level: c.magnitude_level + 1,
                ..*c
            });
        }
        out
    }

    pub fn all_classes(&self) -> impl Iterator<Item = WindClass> + '_ {
        (0..self.ladder.len()).flat_map(move |level| {
            (0..self.k).map(move |index| WindClass {
                index,
                k: self.k,
                magnitude_level: level,
            })
        })
    }
}

/// Markov chain over `k` direction classes, one transition per dwell window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovWind {
    transition: Vec<Vec<f64>>,
    magnitudes: Vec<f64>,
    dwell: f64,
    initial_class: usize,
}

impl MarkovWind {
    pub fn new(
        transition: Vec<Vec<f64>>,
        magnitudes: Vec<f64>,
        dwell: f64,
        initial_class: usize,
    ) -> Result<Self> {
        let k = transition.len();
        if k == 0 {
            return config("markov transition matrix is empty");
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return config(format!("transition row {i} has {} entries, want {k}", row.len()));
            }
            if row.iter().any(|p| !(*p >= 0.0)) {
                return config(format!("transition row {i} has a negative entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return config(format!("transition row {i} sums to {sum}"));
            }
        }
        if magnitudes.len() != k {
            return config("need one magnitude per markov class");
        }
        if magnitudes.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return config("markov magnitudes must be finite and non-negative");
        }
        if !(dwell > 0.0) {
            return config("dwell must be positive");
        }
        if initial_class >= k {
            return config("initial class out of range");
        }
        Ok(Self {
            transition,
            magnitudes,
            dwell,
            initial_class,
        })
    }

    /// Chain that stays put with probability `stay` and otherwise moves to
    /// one of the two angular neighbours.
    pub fn adjacent(k: usize, stay: f64, magnitude: f64, dwell: f64, initial: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&stay) {
            return config("stay probability outside [0, 1]");
        }
        let mut t = vec![vec![0.0; k]; k];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] += stay;
            row[(i + 1) % k] += (1.0 - stay) / 2.0;
            row[(i + k - 1) % k] += (1.0 - stay) / 2.0;
        }
        Self::new(t, vec![magnitude; k], dwell, initial)
    }

    pub fn k(&self) -> usize {
        self.transition.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.transition[i]
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().cloned().fold(0.0, f64::max)
    }

    pub fn class_wind(&self, i: usize) -> WindVector {
        WindVector::new(self.magnitudes[i], TAU * i as f64 / self.k() as f64)
    }

    fn step<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let row = &self.transition[from];
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding left the cumulative sum a hair under 1
        row.iter().rposition(|p| *p > 0.0).unwrap_or(from)
    }
}

/// Temporal evolution of the wind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WindProcess {
    LogReplay { rows: Vec<(f64, WindVector)> },
    Markov(MarkovWind),
}

impl WindProcess {
    pub fn log(rows: Vec<(f64, WindVector)>) -> Result<Self> {
        if rows.is_empty() {
            return config("wind log has no rows");
        }
        if rows.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return config("wind log times must be strictly increasing");
        }
        Ok(WindProcess::LogReplay { rows })
    }

    pub fn constant(w: WindVector) -> Self {
        WindProcess::LogReplay {
            rows: vec![(0.0, w)],
        }
    }

    /// Largest horizontal speed the process can produce.
    pub fn max_speed(&self) -> f64 {
        match self {
            WindProcess::LogReplay { rows } => rows.iter().map(|r| r.1.speed).fold(0.0, f64::max),
            WindProcess::Markov(m) => m.max_magnitude(),
        }
    }

    pub fn sampler(&self, seed: u64) -> WindSampler<'_> {
        let (rng, classes) = match self {
            WindProcess::Markov(m) => (ChaCha8Rng::seed_from_u64(seed), vec![m.initial_class]),
            WindProcess::LogReplay { .. } => (ChaCha8Rng::seed_from_u64(seed), Vec::new()),
        };
        WindSampler {
            process: self,
            rng,
            classes,
        }
    }
}

/// Deterministic query handle over a [`WindProcess`].
///
/// Markov class sequences are generated lazily from the seeded stream, so
/// queries may arrive in any time order and still agree.
#[derive(Debug, Clone)]
pub struct WindSampler<'a> {
    process: &'a WindProcess,
    rng: ChaCha8Rng,
    classes: Vec<usize>,
}

impl WindSampler<'_> {
    pub fn wind_at(&mut self, t: f64) -> WindVector {
        debug_assert!(t >= 0.0);
        match self.process {
            WindProcess::LogReplay { rows } => {
                // zero-order hold: latest row with row.t <= t
                let idx = rows.partition_point(|r| r.0 <= t);
                rows[idx.saturating_sub(1)].1
            }
            WindProcess::Markov(m) => {
                let window = (t / m.dwell).floor() as usize;
                while self.classes.len() <= window {
                    let last = *self.classes.last().expect("seeded with initial class");
                    let next = m.step(last, &mut self.rng);
                    self.classes.push(next);
                }
                m.class_wind(self.classes[window])
            }
        }
    }
}

/// Smoothed online wind estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindEstimate {
    pub vector: WindVector,
    pub last_update: f64,
    pub alpha: f64,
}

impl WindEstimate {
    pub fn new(vector: WindVector, t: f64, alpha: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&alpha));
        Self {
            vector,
            last_update: t,
            alpha,
        }
    }
}

/// Exponential smoothing in Cartesian form.
pub fn update_estimate(prev: &WindEstimate, observed: &WindVector, t: f64) -> WindEstimate {
    debug_assert!(t >= prev.last_update);
    let a = prev.alpha;
    let vector = if a == 1.0 {
        *observed
    } else if a == 0.0 {
        prev.vector
    } else {
        let blended = observed.to_cartesian() * a + prev.vector.to_cartesian() * (1.0 - a);
        WindVector::from_cartesian(&blended)
    };
    WindEstimate {
        vector,
        last_update: t,
        alpha: a,
    }
}

pub const WIND_LOG_HEADER: &str = "t_sec,wind_speed_mps,wind_dir_rad";
pub const WIND_LOG_HEADER_VERT: &str = "t_sec,wind_speed_mps,wind_dir_rad,wind_vert_mps";

/// Parses the plain-text wind log format.
pub fn parse_wind_log<R: Read>(input: R) -> Result<WindProcess> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::None)
        .from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    let has_vertical = match header.as_str() {
        WIND_LOG_HEADER => false,
        WIND_LOG_HEADER_VERT => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected header `{other}`"),
            })
        }
    };
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number `{raw}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite value `{raw}`"),
                });
            }
            Ok(v)
        };
        let t = field(0)?;
        let speed = field(1)?;
        let dir = field(2)?;
        let vert = if has_vertical { field(3)? } else { 0.0 };
        if speed < 0.0 {
            return Err(Error::Parse {
                line,
                msg: "negative wind speed".into(),
            });
        }
        if t < 0.0 {
            return Err(Error::Parse {
                line,
                msg: "negative time".into(),
            });
        }
        if let Some((prev, _)) = rows.last() {
            if !(t > *prev) {
                return Err(Error::Parse {
                    line,
                    msg: "t_sec not strictly increasing".into(),
                });
            }
        }
        rows.push((t, WindVector::with_vertical(speed, dir, vert)));
    }
    WindProcess::log(rows)
}

pub fn read_wind_log(path: &Path) -> Result<WindProcess> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_wind_log(file)
}

pub fn format_wind_log(rows: &[(f64, WindVector)]) -> String {
    let vertical = rows.iter().any(|r| r.1.vertical != 0.0);
    let mut out = String::new();
    out.push_str(if vertical {
        WIND_LOG_HEADER_VERT
    } else {
        WIND_LOG_HEADER
    });
    out.push('\n');
    for (t, w) in rows {
        if vertical {
            out.push_str(&format!("{t},{},{},{}\n", w.speed, w.direction, w.vertical));
        } else {
            out.push_str(&format!("{t},{},{}\n", w.speed, w.direction));
        }
    }
    out
}

/// Generator for synthetic logs with realistic slow drift: speed follows a
/// reflected random walk inside `[0, max_speed]`, direction a wrapped one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiRealLog {
    pub duration: f64,
    pub step: f64,
    pub max_speed: f64,
    pub speed_sigma: f64,
    pub dir_sigma: f64,
}

impl Default for QuasiRealLog {
    fn default() -> Self {
        Self {
            duration: 4.0 * 3600.0,
            step: 60.0,
            max_speed: 9.0,
            speed_sigma: 1.0,
            dir_sigma: 0.3,
        }
    }
}

impl QuasiRealLog {
    pub fn generate(&self, seed: u64) -> Result<WindProcess> {
        if !(self.step > 0.0 && self.duration >= 0.0 && self.max_speed >= 0.0) {
            return config("quasi-real log needs positive step and non-negative bounds");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let speed_noise = Normal::new(0.0, self.speed_sigma.max(0.0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let dir_noise =
            Normal::new(0.0, self.dir_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
        let mut speed = rng.gen::<f64>() * self.max_speed;
        let mut dir = rng.gen::<f64>() * TAU;
        let n = (self.duration / self.step).floor() as usize + 1;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            rows.push((i as f64 * self.step, WindVector::new(speed, dir)));
            speed += speed_noise.sample(&mut rng);
            // reflect into the admissible band
            if speed < 0.0 {
                speed = -speed;
            }
            if speed > self.max_speed {
                speed = (2.0 * self.max_speed - speed).max(0.0);
            }
            dir = normalize_angle(dir + dir_noise.sample(&mut rng));
        }
        WindProcess::log(rows)
    }
}
