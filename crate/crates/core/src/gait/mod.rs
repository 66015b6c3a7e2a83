//! Gait definitions and the multi-gait scheduler.
//!
//! A gait is a period, a duty factor and four phase offsets (FL, FR, RL, RR).
//! The scheduler keeps a master gait clock, derives per-leg phases from it,
//! and produces the contact / foothold references consumed by the
//! locomotion controller ([`BetaL`]) and the gait selector ([`BetaG`]).

mod beta;
mod footholds;
mod scheduler;
mod transition;

pub use beta::{BetaG, BetaL, CommandU};
pub use footholds::{
    raibert_footholds, swing_height_reference, BaseSnapshot, FOOTHOLD_CLAMP, SWING_PEAK_FRACTION,
};
pub use scheduler::{contact_reference, GaitScheduler, SchedulerState};
pub use transition::{
    froude_number, omega_stab, stand_omega_stab, transition_cycles, transition_resolution,
};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of legs. Leg order everywhere is FL, FR, RL, RR.
pub const NUM_LEGS: usize = 4;

/// The eight selectable gaits, indexed 0..=7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitId {
    Stand = 0,
    Trot = 1,
    Run = 2,
    Bound = 3,
    Pronk = 4,
    Limp = 5,
    Amble = 6,
    Hop = 7,
}

impl GaitId {
    pub const ALL: [GaitId; 8] = [
        GaitId::Stand,
        GaitId::Trot,
        GaitId::Run,
        GaitId::Bound,
        GaitId::Pronk,
        GaitId::Limp,
        GaitId::Amble,
        GaitId::Hop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(id: i64) -> Result<Self> {
        usize::try_from(id)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or(Error::UnknownGait(id))
    }

    /// Maps a continuous selector output onto a gait: clamp to [0, 7], round.
    pub fn from_action(raw: f64) -> Self {
        let clamped = if raw.is_nan() { 0.0 } else { raw.clamp(0.0, 7.0) };
        Self::ALL[clamped.round() as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            GaitId::Stand => "stand",
            GaitId::Trot => "trot",
            GaitId::Run => "run",
            GaitId::Bound => "bound",
            GaitId::Pronk => "pronk",
            GaitId::Limp => "limp",
            GaitId::Amble => "amble",
            GaitId::Hop => "hop",
        }
    }

    pub fn is_stand(self) -> bool {
        self == GaitId::Stand
    }
}

impl fmt::Display for GaitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GaitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(id) = lower.parse::<i64>() {
            return Self::from_index(id);
        }
        match lower.as_str() {
            // the table row without a name is the limp
            "unnatural" => Ok(GaitId::Limp),
            other => Self::ALL
                .iter()
                .copied()
                .find(|g| g.name() == other)
                .ok_or_else(|| Error::InvalidInput(format!("unknown gait name '{s}'"))),
        }
    }
}

/// Timing parameters of one gait.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Gait period, seconds.
    pub period: f64,
    /// Fraction of the period each leg spends in stance. `1.0` only for stand.
    pub duty_factor: f64,
    /// Per-leg phase offsets (FL, FR, RL, RR) relative to the master clock.
    pub phase_offsets: [f64; NUM_LEGS],
}

impl GaitParams {
    pub const fn new(period: f64, duty_factor: f64, phase_offsets: [f64; NUM_LEGS]) -> Self {
        Self {
            period,
            duty_factor,
            phase_offsets,
        }
    }

    /// Standing: every leg in stance all the time. The period only drives
    /// the internal clock.
    pub const fn stand() -> Self {
        Self::new(0.40, 1.0, [0.0; NUM_LEGS])
    }

    pub fn frequency(&self) -> f64 {
        1.0 / self.period
    }

    /// True for the all-stance gait (duty factor of one).
    pub fn is_static(&self) -> bool {
        self.duty_factor >= 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gait period must be positive, got {}",
                self.period
            )));
        }
        if !(0.0..=1.0).contains(&self.duty_factor) {
            return Err(Error::InvalidInput(format!(
                "duty factor must lie in [0, 1], got {}",
                self.duty_factor
            )));
        }
        if self
            .phase_offsets
            .iter()
            .any(|o| !(0.0..=1.0).contains(o))
        {
            return Err(Error::InvalidInput(format!(
                "phase offsets must lie in [0, 1], got {:?}",
                self.phase_offsets
            )));
        }
        if !self.phase_offsets.iter().any(|&o| o == 0.0) {
            return Err(Error::InvalidInput(
                "one leg must lead with a zero phase offset".into(),
            ));
        }
        Ok(())
    }
}

/// Gait parameters for all eight gaits, indexed by [`GaitId`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitTable {
    gaits: [GaitParams; 8],
}

impl Default for GaitTable {
    fn default() -> Self {
        Self {
            gaits: [
                GaitParams::stand(),
                GaitParams::new(0.40, 0.50, [0.00, 0.50, 0.50, 0.00]),
                GaitParams::new(0.30, 0.40, [0.00, 0.50, 0.50, 0.00]),
                GaitParams::new(0.40, 0.40, [0.00, 0.00, 0.50, 0.50]),
                GaitParams::new(0.50, 0.50, [0.00, 0.00, 0.00, 0.00]),
                GaitParams::new(0.40, 0.50, [0.05, 0.50, 0.50, 0.00]),
                GaitParams::new(0.50, 0.55, [0.00, 0.50, 0.25, 0.75]),
                GaitParams::new(0.30, 0.50, [0.00, 0.00, 0.00, 0.00]),
            ],
        }
    }
}

#[derive(Debug, Deserialize)]
struct GaitFileEntry {
    name: String,
    period: f64,
    duty_factor: f64,
    phase_offsets: [f64; NUM_LEGS],
}

#[derive(Debug, Deserialize)]
struct GaitFile {
    #[serde(default)]
    gait: Vec<GaitFileEntry>,
}

impl GaitTable {
    pub fn get(&self, id: GaitId) -> &GaitParams {
        &self.gaits[id.index()]
    }

    pub fn set(&mut self, id: GaitId, params: GaitParams) -> Result<()> {
        if !id.is_stand() {
            params.validate()?;
            if params.is_static() {
                return Err(Error::InvalidInput(format!(
                    "{id}: duty factor must be below 1 for a moving gait"
                )));
            }
        }
        self.gaits[id.index()] = params;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (GaitId, &GaitParams)> {
        GaitId::ALL.iter().copied().zip(self.gaits.iter())
    }

    /// Parses a TOML gait file of `[[gait]]` entries with keys `name`,
    /// `period`, `duty_factor`, `phase_offsets`. Gaits not listed keep
    /// their compiled-in defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GaitFile = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: "gait table".into(),
            message: e.to_string(),
        })?;
        let mut table = Self::default();
        for entry in file.gait {
            let id: GaitId = entry.name.parse()?;
            table.set(
                id,
                GaitParams::new(entry.period, entry.duty_factor, entry.phase_offsets),
            )?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                source_name: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Largest gait period among the moving gaits.
    pub fn max_period(&self) -> f64 {
        self.iter()
            .filter(|(id, _)| !id.is_stand())
            .map(|(_, g)| g.period)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for g in GaitId::ALL {
            assert_eq!(GaitId::from_index(g.index() as i64).unwrap(), g);
            assert_eq!(g.name().parse::<GaitId>().unwrap(), g);
        }
        assert!(matches!(GaitId::from_index(8), Err(Error::UnknownGait(8))));
        assert!(GaitId::from_index(-1).is_err());
        assert_eq!("Unnatural".parse::<GaitId>().unwrap(), GaitId::Limp);
    }

    #[test]
    fn action_rounding() {
        assert_eq!(GaitId::from_action(1.4), GaitId::Trot);
        assert_eq!(GaitId::from_action(-0.2), GaitId::Stand);
        assert_eq!(GaitId::from_action(7.6), GaitId::Hop);
        assert_eq!(GaitId::from_action(2.5), GaitId::Bound);
    }

    #[test]
    fn default_table_is_valid() {
        let table = GaitTable::default();
        for (id, g) in table.iter() {
            if !id.is_stand() {
                g.validate().unwrap();
                assert!(g.duty_factor < 1.0);
            }
        }
        assert_eq!(table.get(GaitId::Trot).frequency(), 2.5);
        assert_eq!(table.get(GaitId::Limp).phase_offsets[0], 0.05);
    }

    #[test]
    fn toml_overrides_defaults() {
        let text = r#"
            [[gait]]
            name = "trot"
            period = 0.35
            duty_factor = 0.45
            phase_offsets = [0.0, 0.5, 0.5, 0.0]
        "#;
        let table = GaitTable::from_toml_str(text).unwrap();
        assert_eq!(table.get(GaitId::Trot).period, 0.35);
        assert_eq!(table.get(GaitId::Run), GaitTable::default().get(GaitId::Run));
    }

    #[test]
    fn toml_rejects_bad_rows() {
        let bad_period = r#"
            [[gait]]
            name = "run"
            period = -1.0
            duty_factor = 0.4
            phase_offsets = [0.0, 0.5, 0.5, 0.0]
        "#;
        assert!(GaitTable::from_toml_str(bad_period).is_err());
        let bad_name = r#"
            [[gait]]
            name = "gallop"
            period = 0.3
            duty_factor = 0.4
            phase_offsets = [0.0, 0.5, 0.5, 0.0]
        "#;
        assert!(GaitTable::from_toml_str(bad_name).is_err());
    }
}
