//! Weight persistence. The on-disk form is a single JSON document:
//!
//! ```json
//! {
//!   "spec": { "layer_widths": [64, 128, 10], "id": "A" },
//!   "seed": 7,
//!   "layers": [ { "w": [[...], ...], "b": [...] }, ... ]
//! }
//! ```
//!
//! Numbers use the shortest representation that round-trips exactly, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::write_atomic;
use crate::tensor::Tensor;

use super::{Layer, MlpParams, MlpSpec};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    layer_widths: Vec<usize>,
    id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    spec: SpecFile,
    seed: u64,
    layers: Vec<LayerFile>,
}

/// Saves parameters to `path` atomically.
pub fn save_weights(p: &MlpParams, path: &Path) -> Result<()> {
    let file = WeightsFile {
        spec: SpecFile {
            layer_widths: p.spec().layer_widths().to_vec(),
            id: p.spec().id().to_string(),
        },
        seed: p.seed(),
        layers: p
            .layers()
            .iter()
            .map(|layer| LayerFile {
                w: (0..layer.w.shape()[0])
                    .map(|r| layer.w.row(r).to_vec())
                    .collect(),
                b: layer.b.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Io(format!("serializing weights: {e}")))?;
    write_atomic(path, json.as_bytes())
}

/// Loads parameters from `path`, distinguishing a missing/unreadable file,
/// a malformed payload, and a payload whose layer shapes contradict its
/// own spec.
pub fn load_weights(path: &Path) -> Result<MlpParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file: WeightsFile = serde_json::from_str(&text)
        .map_err(|e| Error::Malformed(format!("weights file {}: {e}", path.display())))?;

    let spec = MlpSpec::new(file.spec.layer_widths, file.spec.id)
        .map_err(|e| Error::Malformed(format!("weights file {}: {e}", path.display())))?;

    let widths = spec.layer_widths().to_vec();
    let mut layers = Vec::with_capacity(file.layers.len());
    for (l, lf) in file.layers.iter().enumerate() {
        let (fan_in, fan_out) = match (widths.get(l), widths.get(l + 1)) {
            (Some(&i), Some(&o)) => (i, o),
            _ => break, // layer-count mismatch reported by from_layers below
        };
        if lf.w.len() != fan_out || lf.w.iter().any(|row| row.len() != fan_in) {
            return Err(Error::ShapeInconsistency(format!(
                "layer {l} weight rows do not form a {fan_out} x {fan_in} matrix"
            )));
        }
        let data: Vec<f64> = lf.w.iter().flatten().copied().collect();
        layers.push(Layer {
            w: Tensor::new(vec![fan_out, fan_in], data)?,
            b: lf.b.clone(),
        });
    }
    MlpParams::from_layers(spec, file.seed, layers)
}
