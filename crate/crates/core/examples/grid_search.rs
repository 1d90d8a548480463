//! A* and weighted A* on a 4-connected grid: the detour around a wall and
//! how the weight trades cost for expansions.

use loha::gridmap::OccupancyGrid;
use loha::search::{astar, NoHook, SearchParams};
use loha::statespace::{Cell, Grid2d};

fn main() -> loha::Result<()> {
    let grid = OccupancyGrid::from_ascii(&[
        "..........",
        "..........",
        "...@@@@...",
        "......@...",
        "......@...",
        "...@@@@...",
        "..........",
        "..........",
    ])?;
    let domain = Grid2d::new(&grid);
    let (start, goal) = (Cell::new(4, 4), Cell::new(9, 4));
    for w in [1.0, 2.0, 4.0] {
        let r = astar(&domain, start, goal, SearchParams::new(w), &mut NoHook);
        println!(
            "w={w}: cost {:?}, {} expansions, {} collision checks",
            r.cost, r.expansions, r.collision_checks
        );
    }
    let r = astar(&domain, start, goal, SearchParams::new(1.0), &mut NoHook);
    let path = r.path.unwrap();
    let mut rows: Vec<Vec<char>> = grid
        .to_map_string()
        .lines()
        .skip(4)
        .map(|l| l.chars().collect())
        .collect();
    for c in &path {
        rows[c.y as usize][c.x as usize] = '*';
    }
    for row in rows {
        println!("{}", row.into_iter().collect::<String>());
    }
    Ok(())
}
