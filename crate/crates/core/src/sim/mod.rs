//! Time-domain simulation of the closed loops.
//!
//! Two subsystems in a ring (`InviscidPair`, `ViscousPair`):
//! `y₁(t,0) = y₂(t,1) + U(t)`, `y₂(t,0) = y₁(t,1)`, output `Y = y₁(t,1)`.
//! The single-channel loop with a transport echo (`SimplerPair`):
//! `y(t,0) = y(t,1) − ŷ(t,1)`, `ŷ(t,0) = y(t,0)`, where `ŷ` is pure
//! transport and is realised exactly by a delay line.
//!
//! Controllers use the nominal delay `τ = 1/υ` whatever the velocity
//! perturbation `ε` of the plant.

mod decay;
mod delay;
mod scheme;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::SystemParams;

pub use decay::{
    decay_fit, estimate_decay_rate, free_response_history, run_difference_recurrence, DecayFit,
};
pub use delay::DelayLine;
pub use scheme::{
    compensated_viscosity, step_advdiff, step_transport, Grid1D, ImplicitDiffusion,
    MAX_DIFFUSION_NUMBER,
};

/// Outputs above this magnitude count as a blow-up.
const BLOWUP: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    InviscidPair,
    ViscousPair,
    SimplerPair,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::InviscidPair => "inviscid-pair",
            Self::ViscousPair => "viscous-pair",
            Self::SimplerPair => "simpler-pair",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inviscid-pair" | "inviscid" => Ok(Self::InviscidPair),
            "viscous-pair" | "viscous" => Ok(Self::ViscousPair),
            "simpler-pair" | "simpler" => Ok(Self::SimplerPair),
            _ => Err(SimError::Config(format!("unknown system `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Controller {
    None,
    /// `U = −2 k_p Y`.
    Proportional { kp: f64 },
    /// `U = −2 k₁ Y(t) − k₂ Y(t − τ)`.
    DynamicDelayed { k1: f64, k2: f64, tau: f64 },
    /// `k₁ = 0, k₂ = 1` with the nominal delay.
    DeadBeat,
}

impl Controller {
    /// Delayed feedback with the gains and nominal delay of `params`.
    pub fn from_params(params: &SystemParams) -> Self {
        Self::DynamicDelayed {
            k1: params.k1,
            k2: params.k2,
            tau: params.tau,
        }
    }

    /// `(k₁, k₂, τ)` of the delayed law, if it is one.
    fn delayed_gains(&self, nominal_tau: f64) -> Option<(f64, f64, f64)> {
        match *self {
            Self::DynamicDelayed { k1, k2, tau } => Some((k1, k2, tau)),
            Self::DeadBeat => Some((0.0, 1.0, nominal_tau)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    /// `exp(−(x − c)² / 2w²)` in the first channel, zero elsewhere.
    GaussianBump { center: f64, width: f64 },
    /// Random band-limited profiles in every channel.
    Smooth { seed: u64, modes: usize },
    Constant { value: f64 },
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::GaussianBump {
            center: 0.5,
            width: 0.1,
        }
    }
}

impl InitialCondition {
    /// Nodal profiles `(first, second)` on `cells + 1` nodes.
    pub fn profiles(&self, cells: usize) -> (Vec<f64>, Vec<f64>) {
        let x = |j: usize| j as f64 / cells as f64;
        match *self {
            Self::GaussianBump { center, width } => {
                let a = (0..=cells)
                    .map(|j| (-(x(j) - center).powi(2) / (2.0 * width * width)).exp())
                    .collect();
                (a, vec![0.0; cells + 1])
            }
            Self::Smooth { seed, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut channel = || {
                    let coef: Vec<(f64, f64)> = (0..modes)
                        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    (0..=cells)
                        .map(|j| {
                            coef.iter()
                                .enumerate()
                                .map(|(k, (a, b))| {
                                    let w = std::f64::consts::PI * (k + 1) as f64 * x(j);
                                    (a * w.cos() + b * w.sin()) / (k + 1) as f64
                                })
                                .sum()
                        })
                        .collect::<Vec<f64>>()
                };
                let a = channel();
                let b = channel();
                (a, b)
            }
            Self::Constant { value } => (vec![value; cells + 1], vec![value; cells + 1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopConfig {
    pub system: SystemKind,
    pub params: SystemParams,
    pub controller: Controller,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub cells: usize,
    /// Requested Courant number; viscous runs may lower it.
    pub cfl: f64,
    /// Store a state snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl ClosedLoopConfig {
    /// Dead-beat loop, Gaussian bump, 20 time units on 256 cells.
    pub fn new(system: SystemKind, params: SystemParams) -> Self {
        let controller = if system == SystemKind::SimplerPair {
            Controller::None
        } else {
            Controller::DeadBeat
        };
        Self {
            system,
            params,
            controller,
            initial: InitialCondition::default(),
            t_end: 20.0,
            cells: 256,
            cfl: 1.0,
            snapshot_every: 0,
        }
    }

    pub fn with_controller(mut self, controller: Controller) -> Self {
        self.controller = controller;
        self
    }

    pub fn with_initial(mut self, initial: InitialCondition) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    /// Plant transport speed `υ(1 + ε)`.
    pub fn plant_speed(&self) -> f64 {
        self.params.velocity * self.params.speed_factor()
    }

    /// Delay used by the controller, or the echo delay for `SimplerPair`.
    pub fn controller_delay(&self) -> f64 {
        match self.controller.delayed_gains(self.params.tau) {
            Some((_, _, tau)) => tau,
            None => self.params.tau,
        }
    }

    pub fn validate(&self) -> Result<Grid1D, SimError> {
        let p = &self.params;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SimError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        match self.system {
            SystemKind::InviscidPair if p.eta != 0.0 => {
                return Err(SimError::Config("inviscid-pair needs eta = 0".into()))
            }
            SystemKind::ViscousPair if !(p.eta > 0.0) => {
                return Err(SimError::Config("viscous-pair needs eta > 0".into()))
            }
            SystemKind::ViscousPair if p.velocity != 1.0 => {
                return Err(SimError::Config("viscous-pair needs unit velocity".into()))
            }
            SystemKind::SimplerPair if self.controller != Controller::None => {
                return Err(SimError::Config(
                    "simpler-pair has a fixed boundary coupling; use controller none".into(),
                ))
            }
            _ => {}
        }
        if let Some((k1, k2, tau)) = self.controller.delayed_gains(p.tau) {
            if !(k1.is_finite() && k2.is_finite() && tau.is_finite() && tau > 0.0) {
                return Err(SimError::Config("controller gains and delay must be finite, delay positive".into()));
            }
        }
        if let Controller::Proportional { kp } = self.controller {
            if !kp.is_finite() {
                return Err(SimError::Config("kp must be finite".into()));
            }
        }
        Grid1D::new(self.cells, self.plant_speed(), self.cfl, p.eta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// `y₁` for the pairs, `y` for the simpler loop.
    pub first: Vec<f64>,
    /// `y₂` for the pairs, `ŷ` for the simpler loop.
    pub second: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Boundary output `Y(t)`.
    pub output: Vec<f64>,
    /// Squared L² norm of the state.
    pub energy: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub dt: f64,
    /// Controller (or echo) delay, the natural time unit of the loop.
    pub delay: f64,
    /// Set when the run stopped on a non-finite or overflowing state.
    pub aborted_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Largest `|Y(t)|` over `t ≥ t0`.
    pub fn max_abs_after(&self, t0: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.output)
            .filter(|(t, _)| **t >= t0)
            .map(|(_, y)| y.abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,y,energy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "y", "energy"])?;
        for i in 0..self.len() {
            w.write_record([
                self.times[i].to_string(),
                self.output[i].to_string(),
                self.energy[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV with header `t,x,first,second`, one row per node and snapshot.
    pub fn write_snapshots_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "first", "second"])?;
        for snap in &self.snapshots {
            let n = snap.first.len() - 1;
            for j in 0..=n {
                w.write_record([
                    snap.t.to_string(),
                    (j as f64 / n as f64).to_string(),
                    snap.first[j].to_string(),
                    snap.second[j].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn step_channel(state: &mut [f64], grid: &Grid1D, speed: f64, diffusion: Option<&ImplicitDiffusion>) -> Result<(), SimError> {
    step_transport(state, grid.dt, speed)?;
    if let Some(op) = diffusion {
        op.apply(state);
    }
    Ok(())
}

fn nodal_energy(y: &[f64], dx: f64) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() * dx
}

/// Run the closed loop from `t = 0` to `t_end`.
///
/// A blow-up is not an error: the trajectory up to that point is returned
/// with [`Trajectory::aborted_at`] set.
pub fn run(config: &ClosedLoopConfig) -> Result<Trajectory, SimError> {
    let grid = config.validate()?;
    let n = grid.cells;
    let dt = grid.dt;
    let speed = config.plant_speed();
    let eta = config.params.eta;
    let diffusion = (eta > 0.0).then(|| {
        let eta = compensated_viscosity(eta, speed, grid.dx, grid.cfl);
        ImplicitDiffusion::new(n, grid.diffusion_number(eta))
    });
    let delay = config.controller_delay();
    let steps = (config.t_end / dt - 1e-9).ceil().max(0.0) as usize;

    let (mut a, mut b) = config.initial.profiles(n);
    let mut line = DelayLine::new(dt, delay);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        output: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        dt,
        delay,
        aborted_at: None,
    };

    for step in 0..=steps {
        let t = step as f64 * dt;
        if step > 0 {
            step_channel(&mut a, &grid, speed, diffusion.as_ref())?;
            if config.system != SystemKind::SimplerPair {
                step_channel(&mut b, &grid, speed, diffusion.as_ref())?;
            }
        }
        let y = a[n];
        let energy;
        match config.system {
            SystemKind::SimplerPair => {
                let echo = line.at(t - delay);
                a[0] = y - echo;
                line.push(a[0]);
                energy = nodal_energy(&a, grid.dx)
                    + config.params.velocity * line.recent_energy(delay);
            }
            _ => {
                line.push(y);
                let u = match config.controller {
                    Controller::None => 0.0,
                    Controller::Proportional { kp } => -2.0 * kp * y,
                    _ => {
                        let (k1, k2, tau) = config.controller.delayed_gains(config.params.tau).unwrap();
                        let yd = line.at(t - tau);
                        -2.0 * k1 * y - k2 * yd
                    }
                };
                a[0] = b[n] + u;
                b[0] = y;
                energy = nodal_energy(&a, grid.dx) + nodal_energy(&b, grid.dx);
            }
        }
        if !(y.is_finite() && a[0].is_finite() && energy.is_finite()) || y.abs() > BLOWUP {
            traj.aborted_at = Some(t);
            break;
        }
        traj.times.push(t);
        traj.output.push(y);
        traj.energy.push(energy);
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 {
            let second = if config.system == SystemKind::SimplerPair {
                grid.nodes()
                    .map(|x| line.at(t - x * delay))
                    .collect()
            } else {
                b.clone()
            };
            traj.snapshots.push(Snapshot {
                t,
                first: a.clone(),
                second,
            });
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(eta: f64, eps: f64) -> SystemParams {
        SystemParams::unit().eta(eta).unwrap().eps(eps).unwrap()
    }

    #[test]
    fn deadbeat_inviscid_extinguishes_by_t4() {
        for initial in [
            InitialCondition::default(),
            InitialCondition::Smooth { seed: 7, modes: 6 },
            InitialCondition::Constant { value: 1.0 },
        ] {
            let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.0))
                .with_cells(64)
                .with_t_end(8.0)
                .with_initial(initial);
            let traj = run(&cfg).unwrap();
            assert!(traj.max_abs_after(0.0) > 0.0);
            assert_eq!(traj.max_abs_after(4.0), 0.0, "{initial:?}");
            let last = traj.energy.last().unwrap();
            assert_eq!(*last, 0.0);
        }
    }

    #[test]
    fn uncontrolled_inviscid_pair_rotates_exactly() {
        let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.0))
            .with_controller(Controller::None)
            .with_initial(InitialCondition::Smooth { seed: 3, modes: 5 })
            .with_cells(32)
            .with_t_end(2.0)
            .with_snapshots(64);
        let traj = run(&cfg).unwrap();
        let (first, last) = (&traj.snapshots[0], traj.snapshots.last().unwrap());
        assert_eq!(last.t, 2.0);
        // after one full lap each channel holds its own profile again, apart
        // from node 0 which was overwritten by the coupling at t = 0
        assert_eq!(first.first[1..], last.first[1..]);
        assert_eq!(first.second[1..], last.second[1..]);
        let e0 = traj.energy[64];
        assert!(traj.energy[64..].iter().all(|&e| e == e0));
    }

    #[test]
    fn perturbed_deadbeat_inviscid_grows() {
        let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.1))
            .with_cells(220)
            .with_t_end(60.0);
        let traj = run(&cfg).unwrap();
        assert!(traj.max_abs_after(50.0) > 10.0 * traj.max_abs_after(0.0).min(1.0));
    }

    #[test]
    fn simpler_inviscid_vanishes_after_t2() {
        let cfg = ClosedLoopConfig::new(SystemKind::SimplerPair, unit(0.0, 0.0))
            .with_initial(InitialCondition::Smooth { seed: 11, modes: 4 })
            .with_cells(50)
            .with_t_end(4.0)
            .with_snapshots(10);
        let traj = run(&cfg).unwrap();
        for snap in traj.snapshots.iter().filter(|s| s.t >= 2.0) {
            assert!(snap.first.iter().all(|&v| v == 0.0), "t = {}", snap.t);
        }
        assert!(traj.snapshots.iter().any(|s| s.t < 2.0 && s.first.iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn viscous_deadbeat_decays() {
        let cfg = ClosedLoopConfig::new(SystemKind::ViscousPair, unit(0.1, 0.0))
            .with_cells(64)
            .with_t_end(12.0);
        let traj = run(&cfg).unwrap();
        assert!(traj.aborted_at.is_none());
        let at = |t: f64| traj.energy[(t / traj.dt).round() as usize];
        assert!(at(10.0) < at(1.0));
        assert!(traj.energy.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let viscous0 = ClosedLoopConfig::new(SystemKind::ViscousPair, unit(0.0, 0.0));
        assert!(matches!(run(&viscous0), Err(SimError::Config(_))));
        let inv = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.1, 0.0));
        assert!(run(&inv).is_err());
        let simpler = ClosedLoopConfig::new(SystemKind::SimplerPair, unit(0.0, 0.0))
            .with_controller(Controller::DeadBeat);
        assert!(run(&simpler).is_err());
        let fast = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.0)).with_cfl(1.2);
        assert!(matches!(run(&fast), Err(SimError::Cfl(_))));
    }

    #[test]
    fn unstable_gain_aborts_cleanly() {
        let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.0))
            .with_controller(Controller::Proportional { kp: -40.0 })
            .with_cells(32)
            .with_t_end(400.0);
        let traj = run(&cfg).unwrap();
        let t = traj.aborted_at.expect("should blow up");
        assert!(t < 400.0);
        assert_eq!(traj.times.len(), traj.output.len());
        assert_eq!(traj.energy.len(), traj.output.len());
    }

    #[test]
    fn kinds_round_trip() {
        for k in [SystemKind::InviscidPair, SystemKind::ViscousPair, SystemKind::SimplerPair] {
            assert_eq!(k.name().parse::<SystemKind>().unwrap(), k);
        }
        assert!("bogus".parse::<SystemKind>().is_err());
    }

    #[test]
    fn csv_has_header() {
        let cfg = ClosedLoopConfig::new(SystemKind::InviscidPair, unit(0.0, 0.0))
            .with_cells(32)
            .with_t_end(0.5);
        let traj = run(&cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,y,energy\n"));
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
