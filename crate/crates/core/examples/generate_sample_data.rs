//! Regenerates the bundled sample weather year and horizon profile.
//!
//! Usage: `cargo run --example generate_sample_data [-- <dir>]`

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    std::fs::create_dir_all(&dir)?;
    let (weather, horizon) = agrivoltaic::synthetic::write_sample_data(&dir)?;
    println!("wrote {}", weather.display());
    println!("wrote {}", horizon.display());
    Ok(())
}
