//! Fractal-noise heightfields.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Peak-to-trough height for terrain levels 0 to 3, metres.
pub const LEVEL_HEIGHTS: [f64; 4] = [0.0, 0.06, 0.13, 0.20];

/// Grid extent and noise shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerrainConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cell: f64,
    pub octaves: u32,
    /// Wavelength of the coarsest octave, metres.
    pub base_wavelength: f64,
    pub persistence: f64,
    pub friction: f64,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 75.0,
            y_min: -10.0,
            y_max: 10.0,
            cell: 0.05,
            octaves: 5,
            base_wavelength: 2.0,
            persistence: 0.5,
            friction: 0.6,
        }
    }
}

/// A heightfield with bilinear lookup. Queries outside the grid clamp to
/// the border. Cloning shares the grid.
#[derive(Clone, Debug)]
pub struct Terrain {
    pub level: u8,
    pub seed: u64,
    pub friction: f64,
    pub cell: f64,
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    heights: Arc<Vec<f64>>,
}

/// Value noise lattice for one octave.
struct Lattice {
    spacing: f64,
    nx: usize,
    values: Vec<f64>,
}

impl Lattice {
    fn new(rng: &mut ChaCha8Rng, spacing: f64, width: f64, height: f64) -> Self {
        let nx = (width / spacing).ceil() as usize + 2;
        let ny = (height / spacing).ceil() as usize + 2;
        let values = (0..nx * ny).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { spacing, nx, values }
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        let gx = u / self.spacing;
        let gy = v / self.spacing;
        let ix = gx.floor() as usize;
        let iy = gy.floor() as usize;
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let tx = smooth(gx - ix as f64);
        let ty = smooth(gy - iy as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        let a = at(ix, iy) + (at(ix + 1, iy) - at(ix, iy)) * tx;
        let b = at(ix, iy + 1) + (at(ix + 1, iy + 1) - at(ix, iy + 1)) * tx;
        a + (b - a) * ty
    }
}

impl Terrain {
    pub fn flat() -> Self {
        Self::generate(0, 0, &TerrainConfig::default()).expect("level 0 is valid")
    }

    /// Multi-octave value noise rescaled so max − min equals the level's
    /// height, centred on zero mean. Level 0 is exactly flat.
    pub fn generate(level: u8, seed: u64, cfg: &TerrainConfig) -> Result<Self> {
        let cap = *LEVEL_HEIGHTS
            .get(level as usize)
            .ok_or_else(|| Error::InvalidInput(format!("terrain level must be 0-3, got {level}")))?;
        if !(cfg.cell > 0.0 && cfg.x_max > cfg.x_min && cfg.y_max > cfg.y_min) {
            return Err(Error::InvalidInput("terrain grid extent is empty".into()));
        }
        let nx = ((cfg.x_max - cfg.x_min) / cfg.cell).round() as usize + 1;
        let ny = ((cfg.y_max - cfg.y_min) / cfg.cell).round() as usize + 1;
        let mut heights = vec![0.0; nx * ny];

        if cap > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let width = (nx - 1) as f64 * cfg.cell;
            let height = (ny - 1) as f64 * cfg.cell;
            let mut octaves = Vec::new();
            let mut spacing = cfg.base_wavelength;
            let mut amp = 1.0;
            for _ in 0..cfg.octaves.max(1) {
                octaves.push((amp, Lattice::new(&mut rng, spacing, width, height)));
                spacing *= 0.5;
                amp *= cfg.persistence;
            }
            for j in 0..ny {
                for i in 0..nx {
                    let (u, v) = (i as f64 * cfg.cell, j as f64 * cfg.cell);
                    heights[j * nx + i] = octaves.iter().map(|(a, l)| a * l.sample(u, v)).sum();
                }
            }
            let (lo, hi) = heights
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)));
            let scale = if hi > lo { cap / (hi - lo) } else { 0.0 };
            for h in heights.iter_mut() {
                *h = (*h - lo) * scale;
            }
            let mean = heights.iter().sum::<f64>() / heights.len() as f64;
            for h in heights.iter_mut() {
                *h -= mean;
            }
        }

        Ok(Self {
            level,
            seed,
            friction: cfg.friction,
            cell: cfg.cell,
            x0: cfg.x_min,
            y0: cfg.y_min,
            nx,
            ny,
            heights: Arc::new(heights),
        })
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Peak-to-trough height of the grid.
    pub fn relief(&self) -> f64 {
        let (lo, hi) = self
            .heights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)));
        hi - lo
    }

    /// Ground height at world (x, y), bilinear between grid nodes.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        if self.level == 0 {
            return 0.0;
        }
        let gx = ((x - self.x0) / self.cell).clamp(0.0, (self.nx - 1) as f64);
        let gy = ((y - self.y0) / self.cell).clamp(0.0, (self.ny - 1) as f64);
        if !(gx.is_finite() && gy.is_finite()) {
            return 0.0;
        }
        let ix = (gx.floor() as usize).min(self.nx - 2);
        let iy = (gy.floor() as usize).min(self.ny - 2);
        let tx = gx - ix as f64;
        let ty = gy - iy as f64;
        let at = |i: usize, j: usize| self.heights[j * self.nx + i];
        let a = at(ix, iy) + (at(ix + 1, iy) - at(ix, iy)) * tx;
        let b = at(ix, iy + 1) + (at(ix + 1, iy + 1) - at(ix, iy + 1)) * tx;
        a + (b - a) * ty
    }

    /// Writes the grid as text: a `#` header line with the layout, then one
    /// row of heights per y index.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "# level={} seed={} cell={} x0={} y0={} nx={} ny={}",
            self.level, self.seed, self.cell, self.x0, self.y0, self.nx, self.ny
        )?;
        for row in self.heights.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|h| format!("{h:.6}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}
