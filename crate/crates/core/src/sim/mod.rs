//! Reduced-order quadruped simulator: a floating rigid base, four 3-DOF
//! legs with lumped joint inertia, penalty ground contact on a heightfield,
//! and the joint PD law.

mod dynamics;
mod kinematics;
mod model;
mod sensors;
mod terrain;

pub use dynamics::{contact_forces, pd_torques, step_dynamics, SimState, Simulator};
pub use kinematics::{leg_fk, leg_ik, leg_jacobian};
pub use model::{ContactParams, RobotModel};
pub use sensors::{read_sensors, NoiseConfig, SensorVector};
pub use terrain::{Terrain, TerrainConfig, LEVEL_HEIGHTS};
