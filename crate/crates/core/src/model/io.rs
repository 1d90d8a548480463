//! Model files.
//!
//! Binary layout, all integers and floats little endian:
//!
//! ```text
//! b"LOHA1"
//! u32           number of layer sizes L (input, hidden..., output)
//! u32 × L       layer sizes
//! f64 × P       parameters: per layer, weights [out][in] row-major, then biases
//! ```
//!
//! A JSON sidecar next to the model (`<file>.json`) carries the training
//! metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::{feature_len, featurize};
use super::network::{Dense, ResidualModel};
use super::train::Hyperparams;
use crate::error::{Error, Result};
use crate::statespace::{DomainKind, GridDomain};

pub const MAGIC: &[u8; 5] = b"LOHA1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub domain: DomainKind,
    #[serde(rename = "K")]
    pub k: u32,
    pub layer_sizes: Vec<usize>,
    pub hyperparams: Hyperparams,
    pub training_set_hash: String,
    pub dataset_size: usize,
    /// Search expansions spent collecting the training set.
    pub collection_expansions: u64,
    pub loss_history: Vec<f64>,
    pub config_hash: String,
}

pub fn to_bytes(model: &ResidualModel) -> Vec<u8> {
    let sizes = model.sizes();
    let mut out = Vec::with_capacity(9 + 4 * sizes.len() + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in &sizes {
        out.extend_from_slice(&(*s as u32).to_le_bytes());
    }
    for p in model.parameters() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<ResidualModel> {
    let mut reader = Reader { bytes, pos: 0 };
    if reader.take(MAGIC.len())? != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let count = reader.u32()? as usize;
    if !(2..=64).contains(&count) {
        return Err(Error::ModelFormat(format!(
            "implausible layer count {count}"
        )));
    }
    let sizes = (0..count)
        .map(|_| reader.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    if sizes.contains(&0) {
        return Err(Error::ModelFormat("zero layer size".into()));
    }
    let expected: usize = sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
    if reader.remaining() != expected * 8 {
        return Err(Error::ModelFormat(format!(
            "expected {} parameter bytes, found {}",
            expected * 8,
            reader.remaining()
        )));
    }
    let mut layers = Vec::with_capacity(count - 1);
    for pair in sizes.windows(2) {
        let weights = (0..pair[0] * pair[1])
            .map(|_| reader.f64())
            .collect::<Result<_>>()?;
        let biases = (0..pair[1]).map(|_| reader.f64()).collect::<Result<_>>()?;
        layers.push(Dense {
            inputs: pair[0],
            outputs: pair[1],
            weights,
            biases,
        });
    }
    ResidualModel::from_layers(layers)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn sidecar_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the model and, when given, its sidecar.
pub fn save_model(path: &Path, model: &ResidualModel, meta: Option<&ModelMetadata>) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))?;
    if let Some(meta) = meta {
        let side = sidecar_path(path);
        let mut json = serde_json::to_vec_pretty(meta)?;
        json.push(b'\n');
        std::fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ResidualModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

pub fn load_metadata(model_path: &Path) -> Result<ModelMetadata> {
    let side = sidecar_path(model_path);
    let bytes = std::fs::read(&side).map_err(|e| Error::io(&side, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Predicted residual of `s`, checking that the model fits this domain and `K`.
pub fn predict_residual<'g, D: GridDomain<'g>>(
    model: &ResidualModel,
    domain: &D,
    s: &D::State,
    goal: &D::State,
    k: u32,
) -> Result<f64> {
    let expected = feature_len(domain, k);
    if model.input_len() != expected {
        return Err(Error::DimensionMismatch {
            expected: model.input_len(),
            actual: expected,
        });
    }
    model.predict(&featurize(domain, s, goal, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::OccupancyGrid;
    use crate::statespace::{Car4d, CarState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = OccupancyGrid::generate_random(32, 32, 0.3, 9).unwrap();
        let d = Car4d::new(&grid);
        let k = 3;
        let m = ResidualModel::new(&[feature_len(&d, k), 16, 16, 1], &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&path, &m, None).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let goal = CarState::new(50, 50, 0, 0);
        for _ in 0..100 {
            let s = CarState::new(
                rng.gen_range(0..64),
                rng.gen_range(0..64),
                rng.gen_range(0..12),
                0,
            );
            let a = predict_residual(&m, &d, &s, &goal, k).unwrap();
            let b = predict_residual(&back, &d, &s, &goal, k).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn header_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = ResidualModel::new(&[3, 2, 1], &mut rng);
        let bytes = to_bytes(&m);
        assert_eq!(&bytes[..5], b"LOHA1");
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 5 + 4 + 12 + 8 * (3 * 2 + 2 + 2 + 1));
        assert_eq!(
            f64::from_le_bytes(bytes[21..29].try_into().unwrap()),
            m.layers()[0].weights[0]
        );
    }

    #[test]
    fn rejects_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bytes = to_bytes(&ResidualModel::new(&[3, 2, 1], &mut rng));
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).is_err());
    }

    #[test]
    fn wrong_k_is_dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let grid = OccupancyGrid::empty(16, 16).unwrap();
        let d = Car4d::new(&grid);
        let m = ResidualModel::new(&[feature_len(&d, 2), 4, 1], &mut rng);
        let s = CarState::new(10, 10, 0, 0);
        assert!(matches!(
            predict_residual(&m, &d, &s, &s, 4),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
