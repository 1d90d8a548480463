//! Occupancy grids and the plain-text map format.
//!
//! Maps are stored in the MovingAI text layout:
//!
//! ```text
//! type octile
//! height <H>
//! width <W>
//! map
//! <H rows of W characters, '.' free and '@' obstacle>
//! ```
//!
//! Row 0 of the file is `y = 0`. The reader also accepts the other MovingAI
//! terrain characters (`G`, `S` passable; `O`, `T`, `W` blocked) so standard
//! benchmark maps can be imported; the writer only emits `.` and `@`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MIN_DIMENSION: usize = 4;
pub const DEFAULT_RESOLUTION: f64 = 0.5;

/// Immutable 2D obstacle raster.
///
/// `seed` records provenance of generated maps and is not part of map
/// equality (the file format has no place for it).
#[derive(Clone, Debug)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    resolution: f64,
    seed: u64,
}

impl PartialEq for OccupancyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution == other.resolution
            && self.cells == other.cells
    }
}

impl Eq for OccupancyGrid {}

impl OccupancyGrid {
    /// An obstacle-free grid.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::from_cells(width, height, vec![false; width * height])
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::DimensionTooSmall { width, height });
        }
        assert_eq!(cells.len(), width * height, "cell buffer size mismatch");
        Ok(OccupancyGrid {
            width,
            height,
            cells,
            resolution: DEFAULT_RESOLUTION,
            seed: 0,
        })
    }

    /// Builds a grid from rows of `.`/`@` characters. Handy for tests.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let before = cells.len();
            for ch in row.chars() {
                cells.push(parse_cell(ch).ok_or_else(|| Error::Parse {
                    line: y + 1,
                    message: format!("unknown map character {ch:?}"),
                })?);
            }
            if cells.len() - before != width {
                return Err(Error::Parse {
                    line: y + 1,
                    message: format!(
                        "row {y} has {} cells, expected {width}",
                        cells.len() - before
                    ),
                });
            }
        }
        Self::from_cells(width, height, cells)
    }

    /// Each cell is independently an obstacle with probability `density`.
    pub fn generate_random(width: usize, height: usize, density: f64, seed: u64) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::DimensionTooSmall { width, height });
        }
        if !(0.0..1.0).contains(&density) {
            return Err(Error::InvalidDensity(density));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..width * height)
            .map(|_| rng.gen::<f64>() < density)
            .collect();
        let mut grid = Self::from_cells(width, height, cells)?;
        grid.seed = seed;
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn in_bounds(&self, cx: i64, cy: i64) -> bool {
        cx >= 0 && cy >= 0 && (cx as usize) < self.width && (cy as usize) < self.height
    }

    /// Anything outside the raster counts as an obstacle.
    #[inline]
    pub fn is_blocked(&self, cx: i64, cy: i64) -> bool {
        if !self.in_bounds(cx, cy) {
            return true;
        }
        self.cells[cy as usize * self.width + cx as usize]
    }

    /// Mutating accessor used while constructing test scenarios.
    pub fn set_blocked(&mut self, cx: usize, cy: usize, blocked: bool) {
        assert!(
            cx < self.width && cy < self.height,
            "cell ({cx}, {cy}) out of bounds"
        );
        self.cells[cy * self.width + cx] = blocked;
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn to_map_string(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 48);
        let _ = write!(
            out,
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&b| if b { '@' } else { '.' }));
            out.push('\n');
        }
        out
    }

    pub fn parse_map(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(text))) => Ok((n, text.trim_end_matches('\r').to_string())),
                Some((n, Err(e))) => Err(Error::Parse {
                    line: n,
                    message: e.to_string(),
                }),
                None => Err(Error::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };

        let (n, line) = next_line("type header")?;
        if !line.starts_with("type ") {
            return Err(Error::Parse {
                line: n,
                message: format!("expected `type <name>`, found {line:?}"),
            });
        }
        let height = header_value(next_line("height header")?, "height")?;
        let width = header_value(next_line("width header")?, "width")?;
        let (n, line) = next_line("map marker")?;
        if line != "map" {
            return Err(Error::Parse {
                line: n,
                message: format!("expected `map`, found {line:?}"),
            });
        }

        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            let (n, line) = next_line(&format!("map row {row}"))?;
            let before = cells.len();
            for ch in line.chars() {
                cells.push(parse_cell(ch).ok_or_else(|| Error::Parse {
                    line: n,
                    message: format!("row {row}: unknown map character {ch:?}"),
                })?);
            }
            let got = cells.len() - before;
            if got != width {
                return Err(Error::Parse {
                    line: n,
                    message: format!("row {row} has {got} characters, expected {width}"),
                });
            }
        }
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::DimensionTooSmall { width, height });
        }
        Self::from_cells(width, height, cells)
    }

    pub fn read_map(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn write_map(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_map_string()).map_err(|e| Error::io(path, e))
    }
}

fn parse_cell(ch: char) -> Option<bool> {
    match ch {
        '.' | 'G' | 'S' => Some(false),
        '@' | 'O' | 'T' | 'W' => Some(true),
        _ => None,
    }
}

fn header_value((n, line): (usize, String), key: &str) -> Result<usize> {
    let value = line
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::Parse {
            line: n,
            message: format!("expected `{key} <N>`, found {line:?}"),
        })?;
    value.parse().map_err(|_| Error::Parse {
        line: n,
        message: format!("invalid {key} value {value:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_density_has_no_obstacles() {
        let g = OccupancyGrid::generate_random(8, 8, 0.0, 1234).unwrap();
        assert_eq!(g.obstacle_count(), 0);
    }

    #[test]
    fn density_band_256() {
        let g = OccupancyGrid::generate_random(256, 256, 0.3, 7).unwrap();
        let count = g.obstacle_count();
        assert!((18_350..=20_966).contains(&count), "count {count}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = OccupancyGrid::generate_random(256, 256, 0.3, 7).unwrap();
        let b = OccupancyGrid::generate_random(256, 256, 0.3, 7).unwrap();
        assert_eq!(a.to_map_string(), b.to_map_string());
        let c = OccupancyGrid::generate_random(256, 256, 0.3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_small_or_bad_density() {
        assert!(matches!(
            OccupancyGrid::generate_random(3, 8, 0.1, 0),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(matches!(
            OccupancyGrid::generate_random(8, 8, 1.0, 0),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn out_of_bounds_is_blocked() {
        let mut g = OccupancyGrid::empty(8, 8).unwrap();
        assert!(!g.is_blocked(3, 3));
        assert!(g.is_blocked(-1, 0));
        assert!(g.is_blocked(8, 0));
        assert!(g.is_blocked(0, 8));
        assert!(g.is_blocked(i64::MIN, i64::MAX));
        g.set_blocked(2, 5, true);
        assert!(g.is_blocked(2, 5));
    }

    #[test]
    fn parses_minimal_file() {
        let text = "type octile\nheight 4\nwidth 4\nmap\n....\n....\n....\n....\n";
        let g = OccupancyGrid::parse_map(text).unwrap();
        assert_eq!((g.width(), g.height(), g.obstacle_count()), (4, 4, 0));
        assert_eq!(g.to_map_string(), text);
    }

    #[test]
    fn short_row_names_line_and_row() {
        let text = "type octile\nheight 4\nwidth 4\nmap\n....\n...\n....\n....\n";
        match OccupancyGrid::parse_map(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("row 1"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        let text = "type octile\nheight four\nwidth 4\nmap\n";
        assert!(matches!(
            OccupancyGrid::parse_map(text),
            Err(Error::Parse { line: 2, .. })
        ));
        let text = "type octile\nheight 4\nwidth 4\n....\n";
        assert!(matches!(
            OccupancyGrid::parse_map(text),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.map");
        let g = OccupancyGrid::generate_random(64, 64, 0.3, 99).unwrap();
        g.write_map(&path).unwrap();
        assert_eq!(OccupancyGrid::read_map(&path).unwrap(), g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn text_round_trip(w in 4usize..40, h in 4usize..40, density in 0.0f64..0.95, seed: u64) {
            let g = OccupancyGrid::generate_random(w, h, density, seed).unwrap();
            let back = OccupancyGrid::parse_map(&g.to_map_string()).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn queries_never_panic(x: i64, y: i64) {
            let g = OccupancyGrid::generate_random(8, 8, 0.3, 1).unwrap();
            let inside = (0..8).contains(&x) && (0..8).contains(&y);
            if !inside {
                prop_assert!(g.is_blocked(x, y));
            }
        }
    }
}
