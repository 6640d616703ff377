//! Planar double pendulum with two unit point masses on massless unit rods.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Dataset, Series, Target};
use crate::model::Task;
use crate::rng;
use crate::tensor::Tensor;

pub const GRAVITY: f64 = 9.81;
pub const DT_INTERNAL: f64 = 1e-3;

/// Angles from the downward vertical and angular velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl PendulumState {
    /// Bob positions `(x1, y1, x2, y2)`, `y` pointing up.
    pub fn coordinates(&self) -> [f64; 4] {
        let (x1, y1) = (self.theta1.sin(), -self.theta1.cos());
        [x1, y1, x1 + self.theta2.sin(), y1 - self.theta2.cos()]
    }

    fn derivative(&self) -> [f64; 4] {
        let d = self.theta1 - self.theta2;
        let (w1, w2) = (self.omega1, self.omega2);
        // m1 = m2 = 1, L1 = L2 = 1
        let den = 3.0 - (2.0 * d).cos();
        let a1 = (-3.0 * GRAVITY * self.theta1.sin()
            - GRAVITY * (self.theta1 - 2.0 * self.theta2).sin()
            - 2.0 * d.sin() * (w2 * w2 + w1 * w1 * d.cos()))
            / den;
        let a2 = 2.0 * d.sin() * (2.0 * w1 * w1 + 2.0 * GRAVITY * self.theta1.cos() + w2 * w2 * d.cos()) / den;
        [w1, w2, a1, a2]
    }

    fn offset(&self, k: &[f64; 4], h: f64) -> PendulumState {
        PendulumState {
            theta1: self.theta1 + h * k[0],
            theta2: self.theta2 + h * k[1],
            omega1: self.omega1 + h * k[2],
            omega2: self.omega2 + h * k[3],
        }
    }

    /// One classical Runge-Kutta step.
    pub fn rk4(&self, h: f64) -> PendulumState {
        let k1 = self.derivative();
        let k2 = self.offset(&k1, h / 2.0).derivative();
        let k3 = self.offset(&k2, h / 2.0).derivative();
        let k4 = self.offset(&k3, h).derivative();
        let mut k = [0.0; 4];
        for i in 0..4 {
            k[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        self.offset(&k, h)
    }
}

/// Total mechanical energy.
pub fn pendulum_energy(s: &PendulumState) -> f64 {
    let (w1, w2) = (s.omega1, s.omega2);
    let kinetic = 0.5 * w1 * w1 + 0.5 * (w1 * w1 + w2 * w2 + 2.0 * w1 * w2 * (s.theta1 - s.theta2).cos());
    let potential = -2.0 * GRAVITY * s.theta1.cos() - GRAVITY * s.theta2.cos();
    kinetic + potential
}

/// Integrates for `duration` seconds with step `h`.
pub fn simulate_pendulum(start: PendulumState, duration: f64, h: f64) -> PendulumState {
    let steps = (duration / h).round() as usize;
    (0..steps).fold(start, |s, _| s.rk4(h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub series: usize,
    pub steps: usize,
    pub dt_sample: f64,
    pub seed: u64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { series: 2000, steps: 64, dt_sample: 0.05, seed: 0 }
    }
}

/// Random trajectories sampled every `dt_sample` seconds. Inputs are the
/// four bob coordinates at `t`, targets the same coordinates at `t + 1`.
pub fn gen_double_pendulum(p: &PendulumParams) -> Dataset {
    assert!(p.steps >= 2, "a series needs at least two timesteps");
    let per_sample = ((p.dt_sample / DT_INTERNAL).round() as usize).max(1);
    let mut r = rng::stream(p.seed, rng::streams::GENERATOR);
    let mut series = Vec::with_capacity(p.series);
    for id in 0..p.series {
        let mut s = PendulumState {
            theta1: r.random_range(-PI..PI),
            theta2: r.random_range(-PI..PI),
            omega1: r.random_range(-2.0..2.0),
            omega2: r.random_range(-2.0..2.0),
        };
        let mut coords = Vec::with_capacity(p.steps + 1);
        coords.push(s.coordinates());
        for _ in 0..p.steps {
            for _ in 0..per_sample {
                s = s.rk4(DT_INTERNAL);
            }
            coords.push(s.coordinates());
        }
        let inputs = Tensor::from_vec(p.steps, 4, coords[..p.steps].concat());
        let targets = Tensor::from_vec(p.steps, 4, coords[1..].concat());
        series.push(Series { id: id.to_string(), inputs, target: Target::Values(targets) });
    }
    Dataset { task: Task::Regression, inputs: 4, outputs: 4, series }
}
