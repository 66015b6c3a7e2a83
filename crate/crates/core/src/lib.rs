//! Multi-gait quadruped locomotion toolkit.
//!
//! The crate is organised around the control loop of a gait-switching
//! quadruped:
//!
//! * [`gait`] schedules per-leg contact and foothold references for eight
//!   gaits and blends between any pair at a Froude-number dependent rate.
//! * [`sim`] is a reduced-order floating-base simulator with pinned-foot
//!   ground contact, fractal terrain and a joint-space PD law at 1 kHz.
//! * [`estimator`] turns noisy proprioception into the robot state vector.
//! * [`metrics`] and [`rewards`] compute the biomechanics gait-transition
//!   metrics and the locomotion / gait-selection reward algebra.
//! * [`control`] and [`runtime`] wire scheduler, controller and simulator at
//!   the 1000 / 500 / 100 Hz rates.
//! * [`learning`] holds observation builders, MLP policies and PPO.
//! * [`selector`] picks gaits either with a trained policy or with a
//!   receding-horizon rollout oracle.
//! * [`scenario`] runs scripted experiments and writes CSV / JSON artefacts.

pub mod config;
pub mod control;
pub mod error;
pub mod estimator;
pub mod gait;
pub mod learning;
pub mod metrics;
pub mod rewards;
pub mod runtime;
pub mod scenario;
pub mod selector;
pub mod sim;

pub use error::{Error, Result};

/// Gravitational acceleration used throughout, m/s².
pub const GRAVITY: f64 = 9.81;

/// Simulation (PD) rate, Hz.
pub const SIM_RATE_HZ: f64 = 1000.0;
/// Locomotion controller rate, Hz.
pub const CONTROL_RATE_HZ: f64 = 500.0;
/// Gait selection rate, Hz.
pub const SELECT_RATE_HZ: f64 = 100.0;
/// Simulation steps per controller tick.
pub const SIM_STEPS_PER_CONTROL: u64 = 2;
/// Simulation steps per selector tick.
pub const SIM_STEPS_PER_SELECT: u64 = 10;
