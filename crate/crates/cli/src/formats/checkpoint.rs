//! Model checkpoints: one JSON header line (version, config, tensor
//! manifest with byte offsets) followed by a little-endian float payload.
//! The payload width matches the model's value precision so a save/load
//! round trip is bit-identical.

use std::path::Path;

use gridcascade_core::model::{tensor_manifest, ModelConfig, ModelParams, Precision};
use gridcascade_core::nn::{MaskMode, Real, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, CliError};

pub const CHECKPOINT_FORMAT: &str = "gridcascade-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializable mirror of [`ModelConfig`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigDto {
    pub n_lines: usize,
    pub g_max: usize,
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub precision: String,
    pub mask_mode: String,
}

pub const MASK_MODE_MULTIPLICATIVE: &str = "multiplicative-post-softmax";
pub const MASK_MODE_ADDITIVE: &str = "additive-pre-softmax";

impl ConfigDto {
    pub fn from_config(config: &ModelConfig) -> Self {
        ConfigDto {
            n_lines: config.n_lines,
            g_max: config.g_max,
            layers: config.layers,
            heads: config.heads,
            d_model: config.d_model,
            d_ff: config.d_ff,
            batch_size: config.batch_size,
            learning_rate: config.learning_rate,
            epochs: config.epochs,
            seed: config.seed,
            precision: config.precision.tag().to_string(),
            mask_mode: match config.mask_mode {
                MaskMode::MultiplicativePostSoftmax => MASK_MODE_MULTIPLICATIVE.to_string(),
                MaskMode::AdditivePreSoftmax => MASK_MODE_ADDITIVE.to_string(),
            },
        }
    }

    pub fn into_config(self) -> Result<ModelConfig, CliError> {
        let precision = Precision::from_tag(&self.precision).ok_or_else(|| {
            CliError::Validation(format!("unknown precision tag {:?}", self.precision))
        })?;
        let mask_mode = match self.mask_mode.as_str() {
            MASK_MODE_MULTIPLICATIVE => MaskMode::MultiplicativePostSoftmax,
            MASK_MODE_ADDITIVE => MaskMode::AdditivePreSoftmax,
            other => {
                return Err(CliError::Validation(format!("unknown mask mode {other:?}")));
            }
        };
        let config = ModelConfig {
            n_lines: self.n_lines,
            g_max: self.g_max,
            layers: self.layers,
            heads: self.heads,
            d_model: self.d_model,
            d_ff: self.d_ff,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            precision,
            mask_mode,
        };
        config
            .validate()
            .map_err(|e| CliError::Validation(format!("checkpoint config invalid: {e}")))?;
        Ok(config)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dtype: String,
    config: ConfigDto,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the payload.
    offset: usize,
    /// Element count.
    len: usize,
}

/// A checkpoint loaded at whichever width it was saved with.
pub enum LoadedModel {
    F32(Box<ModelParams<f32>>, ModelConfig),
    F64(Box<ModelParams<f64>>, ModelConfig),
}

impl LoadedModel {
    pub fn config(&self) -> &ModelConfig {
        match self {
            LoadedModel::F32(_, c) | LoadedModel::F64(_, c) => c,
        }
    }
}

fn dtype_width(dtype: &str) -> Result<usize, CliError> {
    match dtype {
        "f32" => Ok(4),
        "f64" => Ok(8),
        other => Err(CliError::Validation(format!("unknown checkpoint dtype {other:?}"))),
    }
}

pub fn save_checkpoint<T: Real>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    path: &Path,
) -> Result<(), CliError> {
    let width = dtype_width(T::DTYPE)?;
    let tensors = params.tensors();
    let manifest = tensor_manifest(config);
    assert_eq!(tensors.len(), manifest.len(), "manifest drifted from parameters");

    let mut entries = Vec::with_capacity(tensors.len());
    let mut payload = Vec::new();
    for ((name, shape), tensor) in manifest.into_iter().zip(&tensors) {
        debug_assert_eq!(tensor.shape(), shape.as_slice());
        entries.push(TensorEntry {
            name,
            shape,
            offset: payload.len(),
            len: tensor.len(),
        });
        for v in tensor.data() {
            match width {
                4 => payload.extend_from_slice(&(v.to_f32().expect("finite")).to_le_bytes()),
                _ => payload.extend_from_slice(&(v.to_f64().expect("finite")).to_le_bytes()),
            }
        }
    }
    let header = Header {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        dtype: T::DTYPE.to_string(),
        config: ConfigDto::from_config(config),
        tensors: entries,
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.extend_from_slice(&payload);
    write_file(path, &bytes)
}

fn decode_tensors<T: Real>(
    entries: &[TensorEntry],
    payload: &[u8],
    width: usize,
    from_le: impl Fn(&[u8]) -> T,
    config: &ModelConfig,
) -> Result<ModelParams<T>, CliError> {
    let mut map = std::collections::BTreeMap::new();
    for entry in entries {
        let start = entry.offset;
        let end = start
            .checked_add(entry.len * width)
            .ok_or_else(|| CliError::Validation("tensor extent overflows".to_string()))?;
        if end > payload.len() {
            return Err(CliError::Validation(format!(
                "corrupt checkpoint payload: tensor {} needs bytes {start}..{end} of {}",
                entry.name,
                payload.len()
            )));
        }
        let data: Vec<T> = payload[start..end].chunks_exact(width).map(&from_le).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!(
                "corrupt checkpoint payload: tensor {} holds non-finite values",
                entry.name
            )));
        }
        if data.len() != entry.shape.iter().product::<usize>() {
            return Err(CliError::Validation(format!(
                "tensor {} length {} does not match shape {:?}",
                entry.name,
                data.len(),
                entry.shape
            )));
        }
        map.insert(entry.name.clone(), Tensor::from_vec(&entry.shape, data));
    }
    ModelParams::from_tensor_map(config, map)
        .map_err(|e| CliError::Validation(format!("checkpoint does not fit its config: {e}")))
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedModel, CliError> {
    let bytes = read_file(path)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::Parse(format!("{}: missing checkpoint header", path.display())))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| CliError::parse(format!("{}: bad checkpoint header", path.display()), e))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(CliError::Validation(format!(
            "{}: not a checkpoint (format {:?})",
            path.display(),
            header.format
        )));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(CliError::Validation(format!(
            "{}: checkpoint version {} unsupported (expected {})",
            path.display(),
            header.version,
            CHECKPOINT_VERSION
        )));
    }
    let width = dtype_width(&header.dtype)?;
    let config = header.config.clone().into_config()?;
    let payload = &bytes[newline + 1..];
    match width {
        4 => {
            let params = decode_tensors::<f32>(
                &header.tensors,
                payload,
                4,
                |b| f32::from_le_bytes(b.try_into().expect("chunk width")),
                &config,
            )?;
            Ok(LoadedModel::F32(Box::new(params), config))
        }
        _ => {
            let params = decode_tensors::<f64>(
                &header.tensors,
                payload,
                8,
                |b| f64::from_le_bytes(b.try_into().expect("chunk width")),
                &config,
            )?;
            Ok(LoadedModel::F64(Box::new(params), config))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            n_lines: 5,
            g_max: 4,
            layers: 1,
            heads: 2,
            d_model: 8,
            d_ff: 12,
            batch_size: 2,
            learning_rate: 1e-3,
            epochs: 1,
            seed: 42,
            precision: Precision::F32,
            mask_mode: MaskMode::MultiplicativePostSoftmax,
        }
    }

    #[test]
    fn f32_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let cfg = config();
        let params = ModelParams::<f32>::init(&cfg).unwrap();
        save_checkpoint(&params, &cfg, &path).unwrap();
        match load_checkpoint(&path).unwrap() {
            LoadedModel::F32(loaded, loaded_cfg) => {
                assert_eq!(*loaded, params);
                assert_eq!(loaded_cfg, cfg);
            }
            _ => panic!("expected f32 checkpoint"),
        }
    }

    #[test]
    fn f64_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model64.ckpt");
        let mut cfg = config();
        cfg.precision = Precision::F64;
        let params = ModelParams::<f64>::init(&cfg).unwrap();
        save_checkpoint(&params, &cfg, &path).unwrap();
        match load_checkpoint(&path).unwrap() {
            LoadedModel::F64(loaded, _) => {
                for (a, b) in loaded.tensors().iter().zip(params.tensors()) {
                    for (x, y) in a.data().iter().zip(b.data()) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
            }
            _ => panic!("expected f64 checkpoint"),
        }
    }

    #[test]
    fn truncated_payload_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let cfg = config();
        let params = ModelParams::<f32>::init(&cfg).unwrap();
        save_checkpoint(&params, &cfg, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 17]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("corrupt"), "{err}");
    }

    #[test]
    fn version_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let cfg = config();
        let params = ModelParams::<f32>::init(&cfg).unwrap();
        save_checkpoint(&params, &cfg, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let text = String::from_utf8_lossy(&bytes).replace("\"version\":1", "\"version\":9");
        std::fs::write(&path, text).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }
}
