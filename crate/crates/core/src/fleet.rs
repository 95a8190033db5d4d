//! Truck and drone allocation: customer partition, truck tour, K-Means
//! service areas, dynamic dispatch, and the fleet event loop.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{edge_energy, EnergyParams};
use crate::error::{config, io_err, Result};
use crate::executor::{run_mission, Mission, MissionRecord, Outcome, Prepared, Scenario};
use crate::graph::{shortest_path, TimeGraph};
use crate::planner::PlannerConfig;
use crate::wind::{KinematicLimits, WindVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Service {
    TruckOnly,
    DroneCapable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "payload_kg")]
    pub payload: f64,
    pub service: Service,
}

pub const CUSTOMER_HEADER: &str = "id,x,y,z,payload_kg,service";

pub fn parse_customers<R: Read>(input: R) -> Result<Vec<Customer>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out: Vec<Customer> = Vec::new();
    for row in reader.deserialize() {
        let c: Customer = row?;
        if !(c.payload >= 0.0) {
            return config(format!("customer {} has a negative payload", c.id));
        }
        if out.iter().any(|o| o.id == c.id) {
            return config(format!("duplicate customer id {}", c.id));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn read_customers(path: &Path) -> Result<Vec<Customer>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_customers(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneSpec {
    /// Payload capacity, kg.
    pub capacity: f64,
    /// Cruise airspeed, m/s.
    pub speed: f64,
    /// Battery, Wh.
    pub battery: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruckPlan {
    /// Customer ids in visiting order; the depot is implicit at both ends.
    pub route: Vec<usize>,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub t: f64,
    pub drone: usize,
    pub customer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clustering {
    /// Drones launch only from truck stops.
    None,
    /// K-Means centroids of the drone customers become extra launch stops.
    KMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub drones: usize,
    /// Drone payload capacity, kg.
    pub capacity: f64,
    /// Drone battery, Wh; the energy section's capacity when unset.
    pub battery: Option<f64>,
    pub truck_speed: f64,
    /// Separation below which two drones count as conflicting, m.
    pub d_safe: f64,
    /// Timebase of the conflict check, s.
    pub sample_dt: f64,
    pub customers: Option<PathBuf>,
    /// Customers drawn per trial when no file is given.
    pub n_customers: usize,
    pub truck_only_fraction: f64,
    pub max_payload: f64,
    pub clustering: Clustering,
    pub clusters: usize,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            drones: 2,
            capacity: 8.0,
            battery: None,
            truck_speed: 10.0,
            d_safe: 10.0,
            sample_dt: 1.0,
            customers: None,
            n_customers: 12,
            truck_only_fraction: 0.25,
            max_payload: 10.0,
            clustering: Clustering::KMeans,
            clusters: 3,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drones == 0 || self.clusters == 0 {
            return config("fleet needs at least one drone and one cluster");
        }
        if !(self.capacity > 0.0 && self.truck_speed > 0.0 && self.d_safe > 0.0 && self.sample_dt > 0.0) {
            return config("fleet capacity, truck speed, d_safe and sample_dt must be positive");
        }
        if self.battery.is_some_and(|b| !(b > 0.0)) {
            return config("fleet battery must be positive");
        }
        if !(0.0..=1.0).contains(&self.truck_only_fraction) || !(self.max_payload >= 0.0) {
            return config("truck_only_fraction must lie in [0, 1] and max_payload be non-negative");
        }
        Ok(())
    }

    pub fn drone_spec(&self, limits: &KinematicLimits, energy: &EnergyParams) -> DroneSpec {
        DroneSpec {
            capacity: self.capacity,
            speed: limits.airspeed,
            battery: self.battery.unwrap_or(energy.battery_capacity),
        }
    }
}

/// Draws customers on distinct non-depot vertices.
pub fn generate_customers(g: &TimeGraph, cfg: &FleetConfig, seed: u64) -> Vec<Customer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..g.vertex_count()).filter(|&v| v != g.depot()).collect();
    let n = cfg.n_customers.min(pool.len());
    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let v = pool.swap_remove(rng.gen_range(0..pool.len()));
        let p = g.vertex(v).position;
        let service = if rng.gen::<f64>() < cfg.truck_only_fraction {
            Service::TruckOnly
        } else {
            Service::DroneCapable
        };
        out.push(Customer {
            id,
            x: p.x,
            y: p.y,
            z: p.z,
            payload: rng.gen_range(0.0..=cfg.max_payload),
            service,
        });
    }
    out
}

/// Calm-wind energy of the cheapest `from → to → from` round trip carrying
/// `payload` both ways. Infinite when either leg is unreachable.
pub fn round_trip_energy(
    g: &TimeGraph,
    from: usize,
    to: usize,
    payload: f64,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> f64 {
    let p = params.with_payload(payload);
    let calm: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| edge_energy(e.length, &e.direction, &WindVector::calm(), limits, &p).energy)
        .collect();
    let leg = |a, b| shortest_path(g, |e| calm[e], a, b).map_or(f64::INFINITY, |r| r.total);
    leg(from, to) + leg(to, from)
}

fn drone_feasible(
    c: &Customer,
    from: usize,
    spec: &DroneSpec,
    g: &TimeGraph,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> bool {
    if c.service == Service::TruckOnly || c.payload > spec.capacity {
        return false;
    }
    let to = g.nearest_vertex(c.x, c.y);
    round_trip_energy(g, from, to, c.payload, &limits.with_airspeed(spec.speed), params) <= spec.battery
}

/// Splits customer ids into `(truck, drone)` sets by service type, payload
/// and calm round-trip range from the depot.
pub fn partition_customers(
    customers: &[Customer],
    spec: &DroneSpec,
    g: &TimeGraph,
    limits: &KinematicLimits,
    params: &EnergyParams,
) -> (Vec<usize>, Vec<usize>) {
    let mut truck = Vec::new();
    let mut drone = Vec::new();
    for c in customers {
        if drone_feasible(c, g.depot(), spec, g, limits, params) {
            drone.push(c.id);
        } else {
            truck.push(c.id);
        }
    }
    (truck, drone)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Closed tour length of `order` over `nodes`.
pub fn tour_length(nodes: &[[f64; 2]], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let n = order.len();
    (0..n).map(|i| dist(nodes[order[i]], nodes[order[(i + 1) % n]])).sum()
}

/// Nearest-neighbour tour from node 0, without 2-opt.
pub fn nearest_neighbor_tour(nodes: &[[f64; 2]]) -> Vec<usize> {
    assert!(!nodes.is_empty(), "a tour needs at least the depot");
    let mut order = vec![0];
    let mut left: Vec<usize> = (1..nodes.len()).collect();
    while !left.is_empty() {
        let here = nodes[*order.last().unwrap()];
        let (i, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| dist(here, nodes[*a.1]).total_cmp(&dist(here, nodes[*b.1])).then(a.1.cmp(b.1)))
            .unwrap();
        order.push(left.remove(i));
    }
    order
}

fn two_opt_gain(nodes: &[[f64; 2]], order: &[usize], i: usize, j: usize) -> f64 {
    let n = order.len();
    let (a, b) = (nodes[order[i - 1]], nodes[order[i]]);
    let (c, d) = (nodes[order[j]], nodes[order[(j + 1) % n]]);
    dist(a, b) + dist(c, d) - dist(a, c) - dist(b, d)
}

/// First improving 2-opt move `(i, j)` reversing `order[i..=j]`, if any.
pub fn improving_swap(nodes: &[[f64; 2]], order: &[usize]) -> Option<(usize, usize)> {
    let n = order.len();
    for i in 1..n {
        for j in i + 1..n {
            if two_opt_gain(nodes, order, i, j) > 1e-9 {
                return Some((i, j));
            }
        }
    }
    None
}

/// Heuristic tour over `nodes` starting and ending at node 0: nearest
/// neighbour construction, then 2-opt to a local optimum.
pub fn truck_tsp(nodes: &[[f64; 2]]) -> Vec<usize> {
    let mut order = nearest_neighbor_tour(nodes);
    while let Some((i, j)) = improving_swap(nodes, &order) {
        order[i..=j].reverse();
    }
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
    /// Within-cluster sum of squares after each iteration.
    pub wcss: Vec<f64>,
}

fn sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest_centroid(p: [f64; 2], centroids: &[[f64; 2]]) -> usize {
    (0..centroids.len())
        .min_by(|&a, &b| sq(p, centroids[a]).total_cmp(&sq(p, centroids[b])).then(a.cmp(&b)))
        .unwrap()
}

fn wcss(points: &[[f64; 2]], labels: &[usize], centroids: &[[f64; 2]]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| sq(*p, centroids[l])).sum()
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans_cluster(points: &[[f64; 2]], k: usize, seed: u64, max_iter: usize) -> KMeans {
    assert!(k >= 1 && k <= points.len(), "need 1 <= k <= number of points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..points.len())];
    while chosen.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| chosen.iter().map(|&c| sq(*p, points[c])).fold(f64::INFINITY, f64::min))
            .collect();
        let next = match WeightedIndex::new(&weights) {
            Ok(w) => w.sample(&mut rng),
            // every point coincides with a centre
            Err(_) => (0..points.len()).find(|i| !chosen.contains(i)).unwrap(),
        };
        chosen.push(next);
    }
    let mut centroids: Vec<[f64; 2]> = chosen.iter().map(|&i| points[i]).collect();
    let mut labels = vec![0; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iter {
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest_centroid(*p, &centroids);
        }
        let mut sums = vec![[0.0, 0.0, 0.0]; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            sums[l][2] += 1.0;
        }
        let mut moved = 0.0f64;
        for (c, s) in centroids.iter_mut().zip(&sums) {
            if s[2] > 0.0 {
                let next = [s[0] / s[2], s[1] / s[2]];
                moved = moved.max(sq(*c, next).sqrt());
                *c = next;
            }
        }
        history.push(wcss(points, &labels, &centroids));
        if moved < 1e-6 {
            break;
        }
    }
    KMeans {
        labels,
        centroids,
        wcss: history,
    }
}

/// Assigns unserved customers nearest to the truck to the fastest idle
/// drones, skipping customers `feasible` rejects.
pub fn dynamic_assign<F: Fn(&Customer) -> bool>(
    t: f64,
    truck: [f64; 2],
    idle: &[(usize, f64)],
    unserved: &[&Customer],
    feasible: F,
) -> Vec<Assignment> {
    let mut drones = idle.to_vec();
    drones.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut candidates: Vec<&Customer> = unserved.iter().copied().filter(|c| feasible(c)).collect();
    candidates.sort_by(|a, b| {
        dist(truck, [a.x, a.y])
            .total_cmp(&dist(truck, [b.x, b.y]))
            .then(a.id.cmp(&b.id))
    });
    drones
        .iter()
        .zip(candidates)
        .map(|(d, c)| Assignment {
            t,
            drone: d.0,
            customer: c.id,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Resamples a piecewise-linear track onto the grid `t = i·dt`.
pub fn sample_track(track: &[TimedPoint], dt: f64) -> Vec<TimedPoint> {
    let (Some(first), Some(last)) = (track.first(), track.last()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut seg = 0;
    let mut i = (first.t / dt).ceil() as i64;
    loop {
        let t = i as f64 * dt;
        if t > last.t {
            break;
        }
        while seg + 1 < track.len() - 1 && track[seg + 1].t < t {
            seg += 1;
        }
        let (a, b) = if track.len() == 1 {
            (track[0], track[0])
        } else {
            (track[seg], track[seg + 1])
        };
        let f = if b.t > a.t { ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(TimedPoint {
            t,
            x: a.x + f * (b.x - a.x),
            y: a.y + f * (b.y - a.y),
        });
        i += 1;
    }
    out
}

/// Number of drone pairs that come closer than `d_safe` at a shared sample
/// time. Tracks must share one timebase.
pub fn conflict_count(tracks: &[Vec<TimedPoint>], d_safe: f64) -> usize {
    let mut count = 0;
    for i in 0..tracks.len() {
        for j in i + 1..tracks.len() {
            let (a, b) = (&tracks[i], &tracks[j]);
            let (mut p, mut q) = (0, 0);
            let mut hit = false;
            while p < a.len() && q < b.len() && !hit {
                let dt = a[p].t - b[q].t;
                if dt.abs() < 1e-9 {
                    hit = (a[p].x - b[q].x).hypot(a[p].y - b[q].y) < d_safe;
                    p += 1;
                    q += 1;
                } else if dt < 0.0 {
                    p += 1;
                } else {
                    q += 1;
                }
            }
            count += usize::from(hit);
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetEvent {
    pub t: f64,
    pub event: &'static str,
    pub vehicle: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroneMission {
    pub drone: usize,
    pub customer: usize,
    pub launch: usize,
    pub start: f64,
    pub record: MissionRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetRecord {
    pub truck: TruckPlan,
    /// Launch-only stops added by clustering, as vertices in visiting order.
    pub stops: Vec<usize>,
    pub missions: Vec<DroneMission>,
    pub assignments: Vec<Assignment>,
    pub log: Vec<FleetEvent>,
    pub unserved: Vec<usize>,
    pub conflicts: usize,
    pub makespan: f64,
}

pub const FLEET_LOG_HEADER: &str = "t,event,vehicle,detail";
pub const ASSIGNMENT_HEADER: &str = "t,drone,customer";

pub fn format_fleet_log(log: &[FleetEvent]) -> String {
    let mut out = format!("{FLEET_LOG_HEADER}\n");
    for e in log {
        out.push_str(&format!("{},{},{},{}\n", e.t, e.event, e.vehicle, e.detail));
    }
    out
}

pub fn format_assignments(assignments: &[Assignment]) -> String {
    let mut out = format!("{ASSIGNMENT_HEADER}\n");
    for a in assignments {
        out.push_str(&format!("{},{},{}\n", a.t, a.drone, a.customer));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Depot,
    Customer(usize),
    Launch(usize),
}

/// Runs the truck and its drones until every stop is visited. The truck
/// waits at each stop until the drones it launched there are back.
pub fn run_fleet(
    scenario: &Scenario,
    fleet: &FleetConfig,
    customers: &[Customer],
    planner: &PlannerConfig,
    seed: u64,
) -> FleetRecord {
    let g = &scenario.graph;
    let spec = fleet.drone_spec(&scenario.limits, &scenario.energy);
    let limits = scenario.limits.with_airspeed(spec.speed);
    let (truck_ids, drone_ids) = partition_customers(customers, &spec, g, &limits, &scenario.energy);
    let by_id: BTreeMap<usize, &Customer> = customers.iter().map(|c| (c.id, c)).collect();
    let pos = |v: usize| {
        let p = g.vertex(v).position;
        [p.x, p.y]
    };

    let mut stops = vec![Stop::Depot];
    stops.extend(truck_ids.iter().map(|&id| Stop::Customer(id)));
    let mut launch_vertices = Vec::new();
    if fleet.clustering == Clustering::KMeans && !drone_ids.is_empty() {
        let pts: Vec<[f64; 2]> = drone_ids.iter().map(|id| [by_id[id].x, by_id[id].y]).collect();
        let km = kmeans_cluster(&pts, fleet.clusters.min(pts.len()), seed, 100);
        for c in km.centroids {
            let v = g.nearest_vertex(c[0], c[1]);
            if v != g.depot() && !launch_vertices.contains(&v) {
                launch_vertices.push(v);
                stops.push(Stop::Launch(v));
            }
        }
    }
    let stop_vertex = |s: Stop| match s {
        Stop::Depot => g.depot(),
        Stop::Customer(id) => g.nearest_vertex(by_id[&id].x, by_id[&id].y),
        Stop::Launch(v) => v,
    };
    let nodes: Vec<[f64; 2]> = stops.iter().map(|&s| pos(stop_vertex(s))).collect();
    let order: Vec<Stop> = truck_tsp(&nodes).into_iter().map(|i| stops[i]).collect();

    let mut log = Vec::new();
    let mut missions = Vec::new();
    let mut assignments = Vec::new();
    let mut unserved: Vec<usize> = drone_ids.clone();
    let mut alive: Vec<bool> = vec![true; fleet.drones];
    let mut t = 0.0;
    let mut here = g.depot();
    let route = order.iter().copied().chain(std::iter::once(Stop::Depot)).enumerate();
    for (i, stop) in route {
        let v = stop_vertex(stop);
        if i > 0 {
            t += dist(pos(here), pos(v)) / fleet.truck_speed;
            here = v;
        }
        log.push(FleetEvent {
            t,
            event: "truck_arrive",
            vehicle: "truck".into(),
            detail: format!("vertex {v}"),
        });
        if let Stop::Customer(id) = stop {
            log.push(FleetEvent {
                t,
                event: "serve",
                vehicle: "truck".into(),
                detail: format!("customer {id}"),
            });
        }
        // dispatch until nothing is assignable and every drone is back
        let mut busy: Vec<(f64, usize)> = Vec::new();
        loop {
            let idle: Vec<(usize, f64)> = (0..fleet.drones)
                .filter(|d| alive[*d] && !busy.iter().any(|b| b.1 == *d))
                .map(|d| (d, spec.speed))
                .collect();
            let pending: Vec<&Customer> = unserved.iter().map(|id| by_id[id]).collect();
            let batch = dynamic_assign(t, pos(v), &idle, &pending, |c| {
                drone_feasible(c, v, &spec, g, &limits, &scenario.energy)
            });
            for a in batch {
                let c = by_id[&a.customer];
                let target = g.nearest_vertex(c.x, c.y);
                let prepared = Prepared::new(scenario, v, planner, c.payload);
                let mut mission = Mission::new(v, target, spec.battery);
                mission.payload = c.payload;
                mission.start_time = t;
                let mseed = seed ^ ((c.id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let record = run_mission(scenario, &prepared, &mission, planner, mseed);
                log.push(FleetEvent {
                    t,
                    event: "launch",
                    vehicle: format!("drone{}", a.drone),
                    detail: format!("customer {}", c.id),
                });
                unserved.retain(|&id| id != c.id);
                let back = t + record.time_s;
                let home = record.path.last() == Some(&v);
                log.push(FleetEvent {
                    t: back,
                    event: if home { "return" } else { "lost" },
                    vehicle: format!("drone{}", a.drone),
                    detail: record.outcome.as_str().to_string(),
                });
                if home {
                    busy.push((back, a.drone));
                } else {
                    alive[a.drone] = false;
                }
                missions.push(DroneMission {
                    drone: a.drone,
                    customer: c.id,
                    launch: v,
                    start: t,
                    record,
                });
                assignments.push(a);
            }
            if busy.is_empty() {
                break;
            }
            busy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (tb, _) = busy.remove(0);
            t = t.max(tb);
        }
    }
    for &id in &unserved {
        log.push(FleetEvent {
            t,
            event: "unserved",
            vehicle: "-".into(),
            detail: format!("customer {id}"),
        });
    }
    log.sort_by(|a, b| a.t.total_cmp(&b.t));

    let tracks: Vec<Vec<TimedPoint>> = missions
        .iter()
        .map(|m| {
            let pts: Vec<TimedPoint> = m
                .record
                .path
                .iter()
                .zip(&m.record.arrivals)
                .map(|(&v, &ta)| {
                    let p = pos(v);
                    TimedPoint {
                        t: m.start + ta,
                        x: p[0],
                        y: p[1],
                    }
                })
                .collect();
            sample_track(&pts, fleet.sample_dt)
        })
        .collect();
    // tracks of the same drone never overlap in time
    let conflicts = conflict_count(&tracks, fleet.d_safe);

    let truck_route = order
        .iter()
        .filter_map(|s| match s {
            Stop::Customer(id) => Some(*id),
            _ => None,
        })
        .collect();
    let launch_order = order
        .iter()
        .filter_map(|s| match s {
            Stop::Launch(v) => Some(*v),
            _ => None,
        })
        .collect();
    FleetRecord {
        truck: TruckPlan {
            route: truck_route,
            speed: fleet.truck_speed,
        },
        stops: launch_order,
        missions,
        assignments,
        log,
        unserved,
        conflicts,
        makespan: t,
    }
}

/// Share of drone missions per outcome, in percent of all launched.
pub fn outcome_shares(missions: &[DroneMission]) -> BTreeMap<Outcome, f64> {
    let mut out: BTreeMap<Outcome, f64> = Outcome::ALL.iter().map(|&o| (o, 0.0)).collect();
    if missions.is_empty() {
        return out;
    }
    for m in missions {
        *out.get_mut(&m.record.outcome).unwrap() += 100.0 / missions.len() as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyParams;
    use crate::executor::WindField;
    use crate::graph::{Vertex, VertexKind};
    use crate::trajectory::TrajectoryParams;
    use crate::wind::{WindClassifier, WindProcess};
    use nalgebra::Vector3;

    fn customer(id: usize, x: f64, y: f64, payload: f64, service: Service) -> Customer {
        Customer {
            id,
            x,
            y,
            z: 0.0,
            payload,
            service,
        }
    }

    fn star(n: usize, spacing: f64) -> TimeGraph {
        // depot at the origin, vertices along +x, fully bidirectional chain
        let vs: Vec<Vertex> = (0..n)
            .map(|i| Vertex {
                id: i,
                position: Vector3::new(i as f64 * spacing, 0.0, 0.0),
                kind: if i == 0 { VertexKind::Depot } else { VertexKind::Waypoint },
            })
            .collect();
        let mut arcs = Vec::new();
        for i in 0..n - 1 {
            arcs.push((i, i + 1));
            arcs.push((i + 1, i));
        }
        TimeGraph::new(vs, &arcs).unwrap()
    }

    fn spec() -> DroneSpec {
        DroneSpec {
            capacity: 8.0,
            speed: 15.0,
            battery: 100.0,
        }
    }

    #[test]
    fn customers_parse() {
        let text = "id,x,y,z,payload_kg,service\n1,0,0,0,2.5,drone_capable\n2,5,5,0,10,truck_only\n";
        let cs = parse_customers(text.as_bytes()).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].service, Service::TruckOnly);
        assert!(parse_customers("id,x,y,z,payload_kg,service\n1,0,0,0,-1,truck_only\n".as_bytes()).is_err());
        assert!(parse_customers("id,x,y,z,payload_kg,service\n1,0,0,0,1,boat\n".as_bytes()).is_err());
    }

    #[test]
    fn partition_rules() {
        let g = star(4, 300.0);
        let l = KinematicLimits::default();
        let p = EnergyParams::default();
        let cs = [
            customer(0, 300.0, 0.0, 10.0, Service::DroneCapable),
            customer(1, 300.0, 0.0, 1.0, Service::DroneCapable),
            customer(2, 600.0, 0.0, 1.0, Service::TruckOnly),
        ];
        let (truck, drone) = partition_customers(&cs, &spec(), &g, &l, &p);
        assert_eq!(truck, vec![0, 2]);
        assert_eq!(drone, vec![1]);
    }

    #[test]
    fn partition_range_rule() {
        // 118.8 km each way at 25 W and 15 m/s costs 55 Wh per leg
        let g = star(2, 118_800.0);
        let l = KinematicLimits::default();
        let p = EnergyParams::default();
        let e = round_trip_energy(&g, 0, 1, 0.0, &l, &p);
        assert!((e - 110.0).abs() < 1e-9, "{e}");
        let cs = [customer(0, 118_800.0, 0.0, 0.0, Service::DroneCapable)];
        let (truck, _) = partition_customers(&cs, &spec(), &g, &l, &p);
        assert_eq!(truck, vec![0]);
    }

    #[test]
    fn unit_square_tour() {
        let nodes = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let order = truck_tsp(&nodes);
        assert_eq!(order[0], 0);
        assert!((tour_length(&nodes, &order) - 4.0).abs() < 1e-12);
        assert_eq!(truck_tsp(&[[0.0, 0.0], [3.0, 4.0]]), vec![0, 1]);
        assert_eq!(tour_length(&[[0.0, 0.0], [3.0, 4.0]], &[0, 1]), 10.0);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push([i as f64 * 0.1, 0.0]);
            pts.push([100.0 + i as f64 * 0.1, 50.0]);
        }
        let km = kmeans_cluster(&pts, 2, 3, 100);
        for i in (0..20).step_by(2) {
            assert_eq!(km.labels[i], km.labels[0]);
            assert_eq!(km.labels[i + 1], km.labels[1]);
        }
        assert_ne!(km.labels[0], km.labels[1]);
        let each = kmeans_cluster(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]], 3, 1, 100);
        let mut l = each.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2]);
        let dup = kmeans_cluster(&[[1.0, 1.0], [1.0, 1.0], [9.0, 9.0]], 2, 4, 100);
        assert_eq!(dup.labels[0], dup.labels[1]);
    }

    #[test]
    fn assign_nearest_first() {
        let a = customer(0, 300.0, 0.0, 1.0, Service::DroneCapable);
        let b = customer(1, 100.0, 0.0, 1.0, Service::DroneCapable);
        let got = dynamic_assign(5.0, [0.0, 0.0], &[(0, 15.0)], &[&a, &b], |_| true);
        assert_eq!(
            got,
            vec![Assignment {
                t: 5.0,
                drone: 0,
                customer: 1
            }]
        );
        assert!(dynamic_assign(0.0, [0.0, 0.0], &[], &[&a], |_| true).is_empty());
        assert!(dynamic_assign(0.0, [0.0, 0.0], &[(0, 15.0)], &[&a], |_| false).is_empty());
    }

    #[test]
    fn conflicts() {
        let line = |y: f64| -> Vec<TimedPoint> {
            sample_track(
                &[
                    TimedPoint { t: 0.0, x: 0.0, y },
                    TimedPoint { t: 10.0, x: 100.0, y },
                ],
                1.0,
            )
        };
        assert_eq!(conflict_count(&[line(0.0)], 5.0), 0);
        assert_eq!(conflict_count(&[line(0.0), line(0.0)], 5.0), 1);
        assert_eq!(conflict_count(&[line(0.0), line(10.0)], 5.0), 0);
        assert_eq!(line(0.0).len(), 11);
    }

    fn fleet_scenario(g: TimeGraph) -> Scenario {
        let n = g.vertex_count();
        Scenario {
            graph: g,
            wind: WindField::global(WindProcess::constant(WindVector::calm()), n),
            classes: WindClassifier::new(4, vec![0.0, 3.0, 6.0, 9.0]).unwrap(),
            energy: EnergyParams::default(),
            limits: KinematicLimits::default(),
            trajectory: TrajectoryParams::default(),
            obstacles: Vec::new(),
        }
    }

    #[test]
    fn single_drone_single_customer() {
        let s = fleet_scenario(star(3, 300.0));
        let cfg = FleetConfig {
            drones: 1,
            clustering: Clustering::None,
            ..FleetConfig::default()
        };
        let cs = [customer(0, 600.0, 0.0, 1.0, Service::DroneCapable)];
        let r = run_fleet(&s, &cfg, &cs, &PlannerConfig::default(), 1);
        assert_eq!(r.missions.len(), 1);
        assert_eq!(r.missions[0].record.outcome, Outcome::Suc);
        assert_eq!(r.conflicts, 0);
        assert!(r.unserved.is_empty());
        assert!(format_assignments(&r.assignments).starts_with("t,drone,customer\n0,0,0\n"));
    }

    #[test]
    fn truck_only_customers() {
        let s = fleet_scenario(star(4, 300.0));
        let cs = [
            customer(0, 300.0, 0.0, 1.0, Service::TruckOnly),
            customer(1, 900.0, 0.0, 1.0, Service::TruckOnly),
        ];
        let r = run_fleet(&s, &FleetConfig::default(), &cs, &PlannerConfig::default(), 1);
        assert!(r.missions.is_empty());
        let mut route = r.truck.route.clone();
        route.sort();
        assert_eq!(route, vec![0, 1]);
        assert_eq!(r.log.iter().filter(|e| e.event == "serve").count(), 2);
        assert!((r.makespan - 180.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_drones_conflict() {
        // two drones fly out along the same chain at the same time
        let s = fleet_scenario(star(4, 300.0));
        let cfg = FleetConfig {
            drones: 2,
            clustering: Clustering::None,
            ..FleetConfig::default()
        };
        let cs = [
            customer(0, 600.0, 0.0, 1.0, Service::DroneCapable),
            customer(1, 900.0, 0.0, 1.0, Service::DroneCapable),
        ];
        let r = run_fleet(&s, &cfg, &cs, &PlannerConfig::default(), 1);
        assert_eq!(r.missions.len(), 2);
        assert_eq!(r.conflicts, 1);
    }

    #[test]
    fn infeasible_now_served_later() {
        // the far customer is out of range from the depot but close to the
        // truck stop at vertex 3
        let g = star(5, 60_000.0);
        let s = fleet_scenario(g);
        let l = KinematicLimits::default();
        let p = EnergyParams::default();
        let far = customer(1, 240_000.0, 0.0, 0.0, Service::DroneCapable);
        assert!(!drone_feasible(&far, 0, &spec(), &s.graph, &l, &p));
        assert!(drone_feasible(&far, 3, &spec(), &s.graph, &l, &p));
        let got = dynamic_assign(0.0, [0.0, 0.0], &[(0, 15.0)], &[&far], |c| {
            drone_feasible(c, 0, &spec(), &s.graph, &l, &p)
        });
        assert!(got.is_empty());
        let got = dynamic_assign(9.0, [180_000.0, 0.0], &[(0, 15.0)], &[&far], |c| {
            drone_feasible(c, 3, &spec(), &s.graph, &l, &p)
        });
        assert_eq!(got.len(), 1);
    }
}
