//! Generates the terrain levels and prints their relief and a height profile.

use quadgait::sim::{Terrain, TerrainConfig, LEVEL_HEIGHTS};

fn main() -> quadgait::Result<()> {
    let cfg = TerrainConfig::default();
    for level in 0..LEVEL_HEIGHTS.len() as u8 {
        let t = Terrain::generate(level, 42, &cfg)?;
        let profile: Vec<String> = (0..10).map(|k| format!("{:+.3}", t.height(k as f64 * 0.5, 0.0))).collect();
        println!("level {level}: relief {:.3} m  profile {}", t.relief(), profile.join(" "));
    }
    if let Some(path) = std::env::args().nth(1) {
        Terrain::generate(3, 42, &cfg)?.write_text(std::fs::File::create(&path)?)?;
        println!("wrote level 3 heightmap to {path}");
    }
    Ok(())
}
