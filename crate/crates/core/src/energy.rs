//! Longitudinal-equilibrium thrust, the avionics-plus-propulsion power
//! model and per-edge traversal energy.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::wind::{solve_wind_triangle, Feasibility, KinematicLimits, WindVector};

pub const JOULES_PER_WH: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DragModel {
    /// Fixed drag force in N, valid for constant-airspeed cruise.
    Constant { drag: f64 },
    /// `½ ρ C_d A V_A²`.
    Parabolic { rho: f64, c_d: f64, area: f64 },
}

impl DragModel {
    pub fn drag(&self, airspeed: f64) -> f64 {
        match *self {
            DragModel::Constant { drag } => drag,
            DragModel::Parabolic { rho, c_d, area } => 0.5 * rho * c_d * area * airspeed * airspeed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub mass_base: f64,
    #[serde(default)]
    pub payload: f64,
    #[serde(default = "standard_gravity")]
    pub g: f64,
    pub drag: DragModel,
    /// Constant avionics draw in W.
    pub avionics_power: f64,
    /// Thrust-power coefficient `c_T`.
    pub thrust_coeff: f64,
    /// Nominal battery capacity in Wh.
    pub battery_capacity: f64,
}

fn standard_gravity() -> f64 {
    9.81
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            mass_base: 5.0,
            payload: 0.0,
            g: 9.81,
            drag: DragModel::Constant { drag: 6.0 },
            avionics_power: 10.0,
            thrust_coeff: 6.0,
            battery_capacity: 100.0,
        }
    }
}

impl EnergyParams {
    pub fn total_mass(&self) -> f64 {
        self.mass_base + self.payload
    }

    pub fn with_payload(mut self, payload: f64) -> Self {
        self.payload = payload;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_base", self.mass_base),
            ("g", self.g),
            ("thrust_coeff", self.thrust_coeff),
            ("battery_capacity", self.battery_capacity),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return config(format!("{name} must be positive"));
            }
        }
        if !(self.payload >= 0.0) {
            return config("payload must be non-negative");
        }
        if !(self.avionics_power >= 0.0) {
            return config("avionics_power must be non-negative");
        }
        match self.drag {
            DragModel::Constant { drag } if !(drag >= 0.0) => config("drag must be non-negative"),
            DragModel::Parabolic { rho, c_d, area } if !(rho > 0.0 && c_d > 0.0 && area > 0.0) => {
                config("parabolic drag parameters must be positive")
            }
            _ => Ok(()),
        }
    }
}

/// `max(D + m g sin γ_A, 0)`: descent never recovers energy.
pub fn required_thrust(p: &EnergyParams, gamma_air: f64, airspeed: f64) -> f64 {
    (p.drag.drag(airspeed) + p.total_mass() * p.g * gamma_air.sin()).max(0.0)
}

/// Electrical power in W for a given thrust.
pub fn power(p: &EnergyParams, thrust: f64, airspeed: f64) -> f64 {
    debug_assert!(thrust >= 0.0);
    p.avionics_power + thrust * airspeed / p.thrust_coeff
}

/// Time and energy to fly one straight segment under a fixed wind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTraversal {
    /// Seconds; infinite when infeasible.
    pub time: f64,
    /// Wh; infinite when infeasible.
    pub energy: f64,
    pub ground_speed: f64,
    pub feasibility: Feasibility,
}

impl EdgeTraversal {
    pub fn is_feasible(&self) -> bool {
        self.feasibility.is_feasible()
    }
}

pub fn edge_energy(
    length: f64,
    path_dir: &Vector3<f64>,
    wind: &WindVector,
    limits: &KinematicLimits,
    p: &EnergyParams,
) -> EdgeTraversal {
    debug_assert!(length > 0.0);
    let tri = solve_wind_triangle(path_dir, limits, wind);
    if !tri.feasibility.is_feasible() {
        return EdgeTraversal {
            time: f64::INFINITY,
            energy: f64::INFINITY,
            ground_speed: tri.ground_speed,
            feasibility: tri.feasibility,
        };
    }
    let thrust = required_thrust(p, tri.gamma_air, limits.airspeed);
    let time = length / tri.ground_speed;
    EdgeTraversal {
        time,
        energy: power(p, thrust, limits.airspeed) * time / JOULES_PER_WH,
        ground_speed: tri.ground_speed,
        feasibility: Feasibility::Feasible,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurveCase {
    pub label: String,
    pub wind: WindVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedCurvePoint {
    pub airspeed: f64,
    pub case: String,
    /// `None` where the wind makes the point unflyable.
    pub wh_per_km: Option<f64>,
}

/// Energy per kilometre over an airspeed grid for each wind case.
///
/// Needs a parabolic drag model; constant drag gives a curve without an
/// interior minimum.
pub fn energy_per_distance_curve(
    p: &EnergyParams,
    cases: &[SpeedCurveCase],
    airspeeds: &[f64],
    path_dir: &Vector3<f64>,
) -> Result<Vec<SpeedCurvePoint>> {
    if !matches!(p.drag, DragModel::Parabolic { .. }) {
        return config("speed curves need the parabolic drag model");
    }
    let base = KinematicLimits {
        airspeed: 1.0,
        gamma_min: -std::f64::consts::FRAC_PI_2,
        gamma_max: std::f64::consts::FRAC_PI_2,
        kappa_max: 1.0,
    };
    let mut out = Vec::with_capacity(cases.len() * airspeeds.len());
    for case in cases {
        for &va in airspeeds {
            let limits = base.with_airspeed(va);
            let tri = solve_wind_triangle(path_dir, &limits, &case.wind);
            let wh_per_km = tri.feasibility.is_feasible().then(|| {
                let thrust = required_thrust(p, tri.gamma_air, va);
                power(p, thrust, va) / tri.ground_speed * 1000.0 / JOULES_PER_WH
            });
            out.push(SpeedCurvePoint {
                airspeed: va,
                case: case.label.clone(),
                wh_per_km,
            });
        }
    }
    Ok(out)
}

pub fn format_speed_curve(points: &[SpeedCurvePoint]) -> String {
    let mut out = String::from("v_a_mps,case,wh_per_km\n");
    for pt in points {
        match pt.wh_per_km {
            Some(v) => out.push_str(&format!("{},{},{}\n", pt.airspeed, pt.case, v)),
            None => out.push_str(&format!("{},{},\n", pt.airspeed, pt.case)),
        }
    }
    out
}
