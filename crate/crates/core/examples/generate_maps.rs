//! Generates a few random obstacle maps, writes them in the text map format
//! and reads one back.
//!
//! cargo run --example generate_maps -- [out_dir]

use loha::gridmap::OccupancyGrid;
use loha::seed::derive_seed;

fn main() -> loha::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("loha-maps"));
    std::fs::create_dir_all(&out).expect("create output directory");
    for i in 0..3 {
        let grid = OccupancyGrid::generate_random(64, 64, 0.3, derive_seed(7, "map", i))?;
        let path = out.join(format!("map_{i:03}.map"));
        grid.write_map(&path)?;
        let back = OccupancyGrid::read_map(&path)?;
        assert_eq!(back.cells(), grid.cells());
        println!(
            "{} obstacles={} ({:.1}%)",
            path.display(),
            grid.obstacle_count(),
            100.0 * grid.obstacle_count() as f64 / 4096.0
        );
    }
    let small = OccupancyGrid::generate_random(24, 8, 0.25, 1)?;
    print!("{}", small.to_map_string());
    Ok(())
}
