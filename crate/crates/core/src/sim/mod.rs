//! Discrete-event fleet simulator on the cluster-centroid model.
//!
//! Requests arrive as a Poisson process per OD pair and epoch. Each request
//! is quoted the wait of the nearest available vehicle (idle, or relocating
//! and not yet claimed) and accepts with the logit probability of the
//! service against the fixed-wait competitor. At every epoch boundary the
//! policy may send idle vehicles elsewhere.

mod kpi;
mod policy;

pub use kpi::{compare, read_kpi_csv, write_comparison_csv, write_kpi_csv, Comparison, KpiReport};
pub use policy::{greedy_deficit, plan, policy_cmcf, Move, PolicyKind, Snapshot};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::choice::{choice_probability, generalized_cost};
use crate::error::{Error, Result};
use crate::scenario::{Epoch, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub epochs: usize,
    pub fleet_size: usize,
    pub policy: PolicyKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleState {
    Idle,
    ToPickup,
    InTrip,
    Relocating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    /// Current cluster when idle, otherwise the cluster it is heading to.
    pub cluster: usize,
    pub state: VehicleState,
    pub busy_until: f64,
    /// Driving minutes so far.
    pub odometer: f64,
    generation: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: usize,
    pub time: f64,
    pub origin: usize,
    pub destination: usize,
    pub outcome: Outcome,
    /// Quoted wait, recorded only when served.
    pub wait: Option<f64>,
    pub fare: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pending,
    Served,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventType {
    Request,
    Assign,
    Lost,
    Pickup,
    Dropoff,
    Relocate,
    Arrive,
    Idle,
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventType::Request => "request",
            EventType::Assign => "assign",
            EventType::Lost => "lost",
            EventType::Pickup => "pickup",
            EventType::Dropoff => "dropoff",
            EventType::Relocate => "relocate",
            EventType::Arrive => "arrive",
            EventType::Idle => "idle",
        };
        f.write_str(s)
    }
}

/// One line of the event log.
///
/// `assign` goes from the vehicle's cluster to the pickup cluster,
/// `pickup`/`dropoff` from origin to destination, `relocate`/`arrive` from
/// source to target, `idle` stays in place.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEvent {
    pub time: f64,
    pub event: EventType,
    pub vehicle: Option<usize>,
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub request: Option<usize>,
}

pub fn write_event_log<W: Write>(events: &[LogEvent], mut w: W) -> Result<()> {
    writeln!(w, "time,event,vehicle,cluster_from,cluster_to,request_id")?;
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.time,
            e.event,
            opt(e.vehicle),
            opt(e.from),
            opt(e.to),
            opt(e.request)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: KpiReport,
    pub events: Vec<LogEvent>,
    pub requests: Vec<Request>,
    pub vehicles: Vec<Vehicle>,
    /// Wall-clock seconds per policy call. Not part of the report, which
    /// must be reproducible.
    pub solve_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Pickup { vehicle: usize, request: usize },
    Dropoff { vehicle: usize, request: usize },
    Arrive { vehicle: usize, from: usize, generation: u64 },
    EpochStart(usize),
    Request(usize),
}

impl Action {
    /// Vehicle events first so freed vehicles are seen by planning and
    /// matching at the same instant.
    fn class(&self) -> u8 {
        match self {
            Action::Pickup { .. } | Action::Dropoff { .. } | Action::Arrive { .. } => 0,
            Action::EpochStart(_) => 1,
            Action::Request(_) => 2,
        }
    }
}

struct Scheduled {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.action.class().cmp(&self.action.class()))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Requests for the whole horizon, sorted by time, with one uniform draw
/// each for the accept/reject decision. Depends only on the scenario,
/// horizon and seed, so every policy faces the same customers.
fn generate_requests(scenario: &Scenario, epochs: usize, seed: u64) -> Result<(Vec<Request>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = scenario.econ.epoch_length;
    let n = scenario.cluster_count;
    let mut raw: Vec<(f64, usize, usize)> = Vec::new();
    for e in 0..epochs {
        let z = &scenario.demand[e % 2];
        for i in 0..n {
            for j in 0..n {
                if z[i][j] <= 0.0 {
                    continue;
                }
                let poisson = Poisson::new(z[i][j])
                    .map_err(|err| Error::invalid(format!("demand[{}][{i}][{j}]", e % 2), err.to_string()))?;
                let count = poisson.sample(&mut rng) as usize;
                for _ in 0..count {
                    let t = e as f64 * tau + rng.random::<f64>() * tau;
                    raw.push((t, i, j));
                }
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let draws = (0..raw.len()).map(|_| rng.random::<f64>()).collect();
    let requests = raw
        .into_iter()
        .enumerate()
        .map(|(id, (time, origin, destination))| Request {
            id,
            time,
            origin,
            destination,
            outcome: Outcome::Pending,
            wait: None,
            fare: 0.0,
        })
        .collect();
    Ok((requests, draws))
}

struct Engine<'a> {
    scenario: &'a Scenario,
    config: &'a SimConfig,
    vehicles: Vec<Vehicle>,
    requests: Vec<Request>,
    draws: Vec<f64>,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    events: Vec<LogEvent>,
    fares: f64,
    driving: f64,
    idle_epochs: u64,
    relocations: u64,
    solve_seconds: Vec<f64>,
}

impl Engine<'_> {
    fn r(&self, i: usize, j: usize) -> f64 {
        self.scenario.travel_time(Epoch::Current, i, j)
    }

    fn schedule(&mut self, time: f64, action: Action) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            action,
        });
    }

    fn log(&mut self, time: f64, event: EventType, vehicle: Option<usize>, from: Option<usize>, to: Option<usize>, request: Option<usize>) {
        self.events.push(LogEvent {
            time,
            event,
            vehicle,
            from,
            to,
            request,
        });
    }

    fn drive(&mut self, v: usize, minutes: f64) {
        self.vehicles[v].odometer += minutes;
        self.driving += minutes;
    }

    /// Minutes until vehicle `v` could be at `origin` and start the ride,
    /// one minute of handling included; `None` if it is committed.
    fn quote(&self, v: usize, origin: usize, now: f64) -> Option<f64> {
        let veh = &self.vehicles[v];
        let leg = if veh.cluster == origin {
            0.0
        } else {
            self.r(veh.cluster, origin)
        };
        match veh.state {
            VehicleState::Idle => Some(leg + 1.0),
            VehicleState::Relocating => Some((veh.busy_until - now).max(0.0) + leg + 1.0),
            VehicleState::ToPickup | VehicleState::InTrip => None,
        }
    }

    fn on_request(&mut self, now: f64, k: usize) {
        let (origin, dest) = (self.requests[k].origin, self.requests[k].destination);
        self.log(now, EventType::Request, None, Some(origin), Some(dest), Some(k));
        let mut best: Option<(f64, usize)> = None;
        for v in 0..self.vehicles.len() {
            if let Some(w) = self.quote(v, origin, now) {
                if best.is_none_or(|(bw, _)| w < bw) {
                    best = Some((w, v));
                }
            }
        }
        let Some((wait, v)) = best else {
            self.requests[k].outcome = Outcome::Lost;
            self.log(now, EventType::Lost, None, Some(origin), Some(dest), Some(k));
            return;
        };
        let econ = &self.scenario.econ;
        let r = self.r(origin, dest);
        let g = generalized_cost(wait, r, econ);
        let q = choice_probability(g, &[self.scenario.alt_utility(Epoch::Current, origin, dest)]);
        if self.draws[k] >= q {
            self.requests[k].outcome = Outcome::Lost;
            self.log(now, EventType::Lost, None, Some(origin), Some(dest), Some(k));
            return;
        }
        let from = self.vehicles[v].cluster;
        let leg = if from == origin { 0.0 } else { self.r(from, origin) };
        let fare = econ.price_rate * r;
        {
            let veh = &mut self.vehicles[v];
            // cancels any relocation arrival still queued
            veh.generation += 1;
            veh.state = VehicleState::ToPickup;
            veh.cluster = dest;
            veh.busy_until = now + wait + r;
        }
        self.drive(v, leg + r);
        let req = &mut self.requests[k];
        req.outcome = Outcome::Served;
        req.wait = Some(wait);
        req.fare = fare;
        self.log(now, EventType::Assign, Some(v), Some(from), Some(origin), Some(k));
        self.schedule(now + wait, Action::Pickup { vehicle: v, request: k });
        self.schedule(now + wait + r, Action::Dropoff { vehicle: v, request: k });
    }

    fn snapshot(&self, epoch: usize, now: f64) -> Snapshot {
        let n = self.scenario.cluster_count;
        let horizon = now + self.scenario.econ.epoch_length;
        let mut supply = vec![0i64; n];
        let mut idle = vec![0i64; n];
        for v in &self.vehicles {
            if v.state == VehicleState::Idle {
                idle[v.cluster] += 1;
                supply[v.cluster] += 1;
            } else if v.busy_until < horizon {
                supply[v.cluster] += 1;
            }
        }
        Snapshot {
            epoch,
            time: now,
            supply,
            idle,
        }
    }

    fn on_epoch(&mut self, now: f64, epoch: usize) -> Result<()> {
        let snap = self.snapshot(epoch, now);
        let forecast = self.scenario.with_demand(
            self.scenario.demand[epoch % 2].clone(),
            self.scenario.demand[(epoch + 1) % 2].clone(),
        )?;
        let started = Instant::now();
        let moves = plan(self.config.policy, &snap, &forecast)?;
        if self.config.policy != PolicyKind::None {
            self.solve_seconds.push(started.elapsed().as_secs_f64());
        }
        for m in moves {
            let mut left = m.count;
            for v in 0..self.vehicles.len() {
                if left == 0 {
                    break;
                }
                let veh = &self.vehicles[v];
                if veh.state != VehicleState::Idle || veh.cluster != m.from {
                    continue;
                }
                let r = self.r(m.from, m.to);
                let generation = {
                    let veh = &mut self.vehicles[v];
                    veh.state = VehicleState::Relocating;
                    veh.cluster = m.to;
                    veh.busy_until = now + r;
                    veh.generation += 1;
                    veh.generation
                };
                self.drive(v, r);
                self.relocations += 1;
                self.log(now, EventType::Relocate, Some(v), Some(m.from), Some(m.to), None);
                self.schedule(now + r, Action::Arrive { vehicle: v, from: m.from, generation });
                left -= 1;
            }
        }
        for v in 0..self.vehicles.len() {
            if self.vehicles[v].state == VehicleState::Idle {
                let c = self.vehicles[v].cluster;
                self.idle_epochs += 1;
                self.log(now, EventType::Idle, Some(v), Some(c), Some(c), None);
            }
        }
        Ok(())
    }

    fn step(&mut self, item: Scheduled) -> Result<()> {
        let now = item.time;
        match item.action {
            Action::Request(k) => self.on_request(now, k),
            Action::EpochStart(e) => self.on_epoch(now, e)?,
            Action::Pickup { vehicle, request } => {
                self.vehicles[vehicle].state = VehicleState::InTrip;
                let req = &self.requests[request];
                let (o, d) = (req.origin, req.destination);
                self.log(now, EventType::Pickup, Some(vehicle), Some(o), Some(d), Some(request));
            }
            Action::Dropoff { vehicle, request } => {
                let req = &self.requests[request];
                let (o, d, fare) = (req.origin, req.destination, req.fare);
                self.fares += fare;
                let veh = &mut self.vehicles[vehicle];
                veh.state = VehicleState::Idle;
                veh.cluster = d;
                self.log(now, EventType::Dropoff, Some(vehicle), Some(o), Some(d), Some(request));
            }
            Action::Arrive { vehicle, from, generation } => {
                let veh = &mut self.vehicles[vehicle];
                if veh.generation != generation || veh.state != VehicleState::Relocating {
                    return Ok(());
                }
                veh.state = VehicleState::Idle;
                let to = veh.cluster;
                self.log(now, EventType::Arrive, Some(vehicle), Some(from), Some(to), None);
            }
        }
        Ok(())
    }
}

/// Runs one seeded simulation over `config.epochs` epochs. Trips still
/// under way at the end of the horizon are completed.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<SimOutcome> {
    if config.epochs == 0 {
        return Err(Error::invalid("epochs", "must be at least 1"));
    }
    let n = scenario.cluster_count;
    let tau = scenario.econ.epoch_length;
    let (requests, draws) = generate_requests(scenario, config.epochs, config.seed)?;
    let vehicles = (0..config.fleet_size)
        .map(|id| Vehicle {
            id,
            cluster: id % n,
            state: VehicleState::Idle,
            busy_until: 0.0,
            odometer: 0.0,
            generation: 0,
        })
        .collect();
    let mut eng = Engine {
        scenario,
        config,
        vehicles,
        requests,
        draws,
        heap: BinaryHeap::new(),
        seq: 0,
        events: Vec::new(),
        fares: 0.0,
        driving: 0.0,
        idle_epochs: 0,
        relocations: 0,
        solve_seconds: Vec::new(),
    };
    for e in 0..config.epochs {
        eng.schedule(e as f64 * tau, Action::EpochStart(e));
    }
    for k in 0..eng.requests.len() {
        let t = eng.requests[k].time;
        eng.schedule(t, Action::Request(k));
    }
    while let Some(item) = eng.heap.pop() {
        eng.step(item)?;
    }
    let report = KpiReport::from_run(
        config,
        &eng.requests,
        eng.fares,
        eng.driving,
        eng.idle_epochs,
        eng.relocations,
        &scenario.econ,
    );
    Ok(SimOutcome {
        report,
        events: eng.events,
        requests: eng.requests,
        vehicles: eng.vehicles,
        solve_seconds: eng.solve_seconds,
    })
}

/// Profit recomputed from an event log alone: fares of completed trips,
/// minus moving cost for every relocation, empty pickup leg and ride,
/// minus idle cost per logged idle vehicle-epoch.
pub fn profit_from_log(scenario: &Scenario, events: &[LogEvent]) -> f64 {
    let econ = &scenario.econ;
    let r = |i: Option<usize>, j: Option<usize>| {
        let (i, j) = (i.expect("cluster"), j.expect("cluster"));
        scenario.travel_time(Epoch::Current, i, j)
    };
    let mut fares = 0.0;
    let mut driving = 0.0;
    let mut idle = 0.0;
    for e in events {
        match e.event {
            EventType::Dropoff => {
                let t = r(e.from, e.to);
                fares += econ.price_rate * t;
                driving += t;
            }
            EventType::Assign if e.from != e.to => driving += r(e.from, e.to),
            EventType::Relocate => driving += r(e.from, e.to),
            EventType::Idle => idle += 1.0,
            _ => {}
        }
    }
    fares - econ.moving_cost * driving - econ.idle_cost * idle
}
