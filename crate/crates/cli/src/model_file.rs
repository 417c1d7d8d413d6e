//! Versioned binary model container: an 8-byte magic string, a
//! little-endian `u32` format version, then a bincode payload.

use std::fs;
use std::path::Path;

use occkit::descriptor::{Coefficients, DescriptorKind, FittedModel, Hyperparameters};
use occkit::{IqrScaler, Metric};
use serde::{Deserialize, Serialize};

use crate::data::Fingerprint;
use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"OCCKITMF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub tool_version: String,
    pub descriptor: DescriptorKind,
    pub coefficients: Coefficients,
    pub hyperparameters: Hyperparameters,
    pub metric: Metric,
    pub seed: u64,
    pub fingerprint: Fingerprint,
    /// Applied to queries before scoring; `None` when fitted on raw values.
    pub scaler: Option<IqrScaler>,
    pub model: FittedModel,
}

pub fn encode(model: &SavedModel) -> CliResult<Vec<u8>> {
    let payload = bincode::serialize(model)
        .map_err(|e| CliError::invalid(format!("cannot encode model: {e}")))?;
    let mut bytes = Vec::with_capacity(12 + payload.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&payload);
    Ok(bytes)
}

pub fn decode(bytes: &[u8]) -> CliResult<SavedModel> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(CliError::invalid("not an occkit model file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version > FORMAT_VERSION {
        return Err(CliError::invalid(format!(
            "model format version {version} is newer than supported version {FORMAT_VERSION}"
        )));
    }
    bincode::deserialize(&bytes[12..])
        .map_err(|e| CliError::invalid(format!("corrupt model file: {e}")))
}

pub fn save(path: &Path, model: &SavedModel) -> CliResult<()> {
    fs::write(path, encode(model)?).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<SavedModel> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use occkit::descriptor::DescriptorSetup;
    use occkit::{DataDescription, FeatureMatrix};

    fn saved(kind: DescriptorKind) -> SavedModel {
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|i| [i as f64 * 0.3, ((i * 7) % 5) as f64])
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let setup = DescriptorSetup::defaults(kind, 4);
        SavedModel {
            tool_version: "test".into(),
            descriptor: kind,
            coefficients: setup.coefficients,
            hyperparameters: setup.resolve(30, 2),
            metric: setup.metric,
            seed: 4,
            fingerprint: Fingerprint {
                path: "x.csv".into(),
                rows: 30,
                cols: 2,
                sha256: "00".into(),
            },
            scaler: Some(IqrScaler::fit(&x)),
            model: setup.fit(&x).unwrap(),
        }
    }

    #[test]
    fn every_descriptor_round_trips() {
        for kind in DescriptorKind::ALL {
            let m = saved(kind);
            let back = decode(&encode(&m).unwrap()).unwrap();
            assert_eq!(back, m);
            let q = [1.3, 2.0];
            assert_eq!(back.model.score(&q).unwrap(), m.model.score(&q).unwrap());
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&saved(DescriptorKind::Nnd)).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes[8..12], FORMAT_VERSION.to_le_bytes());
    }

    #[test]
    fn refuses_newer_versions_and_garbage() {
        let mut bytes = encode(&saved(DescriptorKind::Md)).unwrap();
        bytes[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(decode(&bytes).unwrap_err().to_string().contains("newer"));
        assert!(decode(b"hello world, not a model").is_err());
        let good = encode(&saved(DescriptorKind::Md)).unwrap();
        assert!(decode(&good[..good.len() - 3]).is_err());
    }
}
