use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::collector::Sample;
use crate::error::{Error, Result};
use crate::gridmap::OccupancyGrid;
use crate::model::train::hex;
use crate::problem::MapSet;

/// Loads every `*.map` file in `dir`, sorted by file name. A map's id is
/// its file stem.
pub fn load_map_dir(dir: &Path) -> Result<MapSet> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "map") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no .map files in {}", dir.display())));
    }
    let mut maps = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path.file_stem().unwrap().to_string_lossy().into_owned();
        let grid = OccupancyGrid::read_map(&path).map_err(|e| match e {
            Error::Parse { line, message } => {
                Error::Config(format!("{}: line {line}: {message}", path.display()))
            }
            other => other,
        })?;
        maps.push((id, grid));
    }
    Ok(MapSet::new(maps))
}

/// Digest of a map set: ids and map text in order.
pub fn maps_hash(maps: &MapSet) -> String {
    let mut hasher = Sha256::new();
    for (id, grid) in maps.iter() {
        hasher.update(id.as_bytes());
        hasher.update(b"\n");
        hasher.update(grid.to_map_string().as_bytes());
    }
    hex(&hasher.finalize())
}

pub(crate) fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(bytes)))
}

/// Sidecar of a JSONL or CSV output: `<file>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    ensure_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_dir_is_sorted_by_name() {
        let dir = tempfile::tempdir().unwrap();
        for (name, seed) in [("b.map", 1), ("a.map", 2)] {
            OccupancyGrid::generate_random(8, 8, 0.2, seed)
                .unwrap()
                .write_map(dir.path().join(name))
                .unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let maps = load_map_dir(dir.path()).unwrap();
        let ids: Vec<_> = maps.iter().map(|(id, _)| id.to_string()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn missing_dir_is_io_and_empty_dir_is_config() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_map_dir(&dir.path().join("nope")).unwrap_err().is_io());
        assert!(matches!(load_map_dir(dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn bad_sample_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(&path, "\n{not json}\n").unwrap();
        assert!(matches!(
            read_samples(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
